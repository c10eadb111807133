import init, { mm11, line_transient, sampling } from "./pkg/aoi_shs_web.js";

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

function plot(canvas, series, opts = {}) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 36;
  ctx.clearRect(0, 0, w, h);
  const xs = series.flatMap((s) => s.x);
  const ys = series.flatMap((s) => s.y).filter(Number.isFinite);
  const x0 = Math.min(...xs), x1 = Math.max(...xs);
  const y0 = opts.ymin ?? Math.min(0, ...ys), y1 = opts.ymax ?? Math.max(...ys) * 1.05;
  const px = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (w - 2 * pad);
  const py = (y) => h - pad - ((y - y0) / (y1 - y0 || 1)) * (h - 2 * pad);
  ctx.strokeStyle = "#888";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  ctx.fillText(x0.toPrecision(3), pad, h - pad + 14);
  ctx.fillText(x1.toPrecision(3), w - pad - 24, h - pad + 14);
  ctx.fillText(y1.toPrecision(3), 2, pad + 4);
  ctx.fillText(y0.toPrecision(3), 2, h - pad);
  series.forEach((s, i) => {
    ctx.strokeStyle = s.color ?? COLORS[i % COLORS.length];
    ctx.setLineDash(s.dash ?? []);
    ctx.beginPath();
    let started = false;
    s.x.forEach((x, k) => {
      const y = s.y[k];
      if (!Number.isFinite(y) || y > y1 * 4) { started = false; return; }
      started ? ctx.lineTo(px(x), py(Math.min(y, y1))) : ctx.moveTo(px(x), py(Math.min(y, y1)));
      started = true;
    });
    ctx.stroke();
    if (s.label) {
      ctx.fillStyle = ctx.strokeStyle;
      ctx.fillText(s.label, w - pad - 150, pad + 14 + 14 * i);
    }
  });
  ctx.setLineDash([]);
}

function guard(outId, fn) {
  const out = document.getElementById(outId);
  try {
    out.classList.remove("err");
    fn(out);
  } catch (e) {
    out.classList.add("err");
    out.textContent = String(e);
  }
}

const val = (id) => document.getElementById(id).value;
const fmt = (x) => Number(x).toFixed(4);

function updateMm11() {
  guard("mm-out", (out) => {
    const r = JSON.parse(mm11(+val("mm-l"), +val("mm-m"), +val("mm-a"), 300));
    out.textContent =
      `P(idle), P(busy) = ${r.pi.map(fmt).join(", ")}\n` +
      `E[x] = (${r.mean.map(fmt).join(", ")})   E[x^2] = (${r.second_moment.map(fmt).join(", ")})\n` +
      `s0 = ${fmt(r.s0)}; plot: monitor MGF E[exp(s x2)] for s in [-s0, 0.95 s0]`;
    const cap = Math.max(...r.mgf.slice(0, Math.floor(r.mgf.length * 0.9)));
    plot(document.getElementById("mm-plot"), [{ x: r.s, y: r.mgf, label: "E[exp(s x2)]" }], { ymax: cap * 1.1 });
  });
}

function updateLine() {
  guard("ln-out", (out) => {
    const rates = val("ln-r").split(",").map(Number);
    const r = JSON.parse(line_transient(new Float64Array(rates), +val("ln-t"), 400));
    out.textContent = `stationary E[x_j] = (${r.stationary.map(fmt).join(", ")})`;
    const series = r.means.map((y, j) => ({ x: r.times, y, label: `E[x${j + 1}(t)]` }));
    r.stationary.forEach((v, j) =>
      series.push({ x: [0, r.times.at(-1)], y: [v, v], dash: [4, 4], color: COLORS[j % COLORS.length] }));
    plot(document.getElementById("ln-plot"), series);
  });
}

function updateSampling() {
  guard("sp-out", (out) => {
    const k = Math.max(1, Math.round(+val("sp-k")));
    const r = JSON.parse(sampling(val("sp-f"), +val("sp-p"), k, k, 1024));
    out.textContent =
      `E[X_${k}] = ${fmt(r.mean)}   Var[X_${k}] = ${fmt(r.variance)}   L1(density, Gaussian) = ${fmt(r.l1)}`;
    plot(document.getElementById("sp-plot"), [
      { x: r.x, y: r.convolution, label: "convolution" },
      { x: r.x, y: r.gaussian, label: "matched Gaussian", dash: [5, 4] },
    ]);
  });
}

await init();
for (const [ids, fn] of [
  [["mm-l", "mm-m", "mm-a"], updateMm11],
  [["ln-r", "ln-t"], updateLine],
  [["sp-f", "sp-p", "sp-k"], updateSampling],
]) {
  ids.forEach((id) => document.getElementById(id).addEventListener("input", fn));
  fn();
}
