//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Closed forms used as oracles are written out here independently of the
//! library code paths they check.

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use aoi_shs::{
    gaussian_comparison, mm11_abandonment, node_age_pdf, node_age_stats, preemptive_line,
    simulate, simulate_sampling_line, transient, AgeResetMap, Analysis, AnalysisError,
    RenewalSpec, SamplingNetwork, SamplingSimConfig, ShsModel, SimConfig, Transition,
    TransientInit, TransientSpec, UniformGrid,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
}

const GRID: [f64; 3] = [0.5, 1.0, 2.0];

fn mm11_grid() -> impl Iterator<Item = (f64, f64, f64)> {
    GRID.into_iter().flat_map(|l| {
        GRID.into_iter()
            .flat_map(move |m| GRID.into_iter().map(move |a| (l, m, a)))
    })
}

fn mm11_mean_age(l: f64, m: f64, a: f64) -> f64 {
    1.0 / l + 1.0 / m + l / ((m + a) * (l + m + a)) + a / (l * m)
}

/// Monitor component of the stationary MGF vector.
fn mm11_mgf_monitor(l: f64, m: f64, a: f64, s: f64) -> f64 {
    let beta = m + a;
    let gamma = l + m + a;
    l * beta * m * (l * gamma - (l + gamma) * s + s * s)
        / ((l * m - gamma * s + s * s) * gamma * (l - s) * (beta - s))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (l, m, a) in mm11_grid() {
        let model = mm11_abandonment(l, m, a).unwrap();
        let got = aoi_shs::stationary_moments(&model, 1).unwrap()[0].aggregate[1];
        worst = worst.max(rel_err(got, mm11_mean_age(l, m, a)));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-9 && secs < 1.0,
        format!("max rel err {worst:.2e} (<= 1e-9), {secs:.3} s (< 1 s)"),
    )
}

fn criterion_2() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut radius_gap: f64 = 0.0;
    for (l, m, a) in mm11_grid() {
        let analysis = Analysis::new(&mm11_abandonment(l, m, a).unwrap()).unwrap();
        let s0 = analysis.mgf_radius().unwrap();
        let gamma = l + m + a;
        let pole = l.min(m + a).min((gamma - (gamma * gamma - 4.0 * l * m).sqrt()) / 2.0);
        radius_gap = radius_gap.max(rel_err(s0, pole));
        for frac in [0.1, 0.5] {
            let s = frac * s0;
            let got = analysis.mgf(s).unwrap().aggregate[1];
            worst = worst.max(rel_err(got, mm11_mgf_monitor(l, m, a, s)));
        }
    }
    outcome(
        worst <= 1e-9,
        format!("max rel err {worst:.2e} (<= 1e-9); s0 vs nearest closed-form pole rel gap {radius_gap:.1e}"),
    )
}

/// `m! * 1 * T^m` with `T[i][j] = 1/mu_i` for `j >= i`.
fn line_moments_oracle(rates: &[f64], m: u32) -> Vec<f64> {
    let n = rates.len();
    let mut row = vec![1.0; n];
    for _ in 0..m {
        let mut next = vec![0.0; n];
        for (j, nj) in next.iter_mut().enumerate() {
            for (i, r) in row.iter().enumerate().take(j + 1) {
                *nj += r / rates[i];
            }
        }
        row = next;
    }
    let fact: f64 = (1..=m).map(f64::from).product();
    row.into_iter().map(|v| fact * v).collect()
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst_m, mut worst_s): (f64, f64) = (0.0, 0.0);
    let mut cases = 0;
    for n in 1..=6 {
        for _ in 0..20 {
            let rates: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..5.0)).collect();
            let analysis = Analysis::new(&preemptive_line(&rates).unwrap()).unwrap();
            let moments = analysis.moments(3).unwrap();
            for m in 1..=3u32 {
                let want = line_moments_oracle(&rates, m);
                for (g, w) in moments[m as usize - 1].aggregate.iter().zip(&want) {
                    worst_m = worst_m.max(rel_err(*g, *w));
                }
            }
            let s0 = rates.iter().cloned().fold(f64::INFINITY, f64::min);
            for _ in 0..5 {
                let s = rng.random_range(-2.0 * s0..0.95 * s0);
                let got = analysis.mgf(s).unwrap().aggregate;
                let mut prod = 1.0;
                for (j, mu) in rates.iter().enumerate() {
                    prod *= mu / (mu - s);
                    worst_s = worst_s.max(rel_err(got[j], prod));
                }
            }
            cases += 1;
        }
    }
    outcome(
        worst_m <= 1e-9 && worst_s <= 1e-9,
        format!("{cases} random lines: moment rel err {worst_m:.2e}, MGF rel err {worst_s:.2e} (<= 1e-9)"),
    )
}

fn criterion_4() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 1..=6usize {
        for mu in [0.5, 1.0, 3.0] {
            let moments = aoi_shs::stationary_moments(&preemptive_line(&vec![mu; n]).unwrap(), 4).unwrap();
            for m in 1..=4u32 {
                // (n+m-1)! / ((n-1)! mu^m)
                let want = (n..n + m as usize).map(|k| k as f64).product::<f64>() / mu.powi(m as i32);
                worst = worst.max(rel_err(moments[m as usize - 1].aggregate[n - 1], want));
            }
        }
    }
    outcome(worst <= 1e-9, format!("max rel err {worst:.2e} (<= 1e-9) over n <= 6, m <= 4"))
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut worst_z: f64 = 0.0;
    let mut worst_rel_se: f64 = 0.0;
    let mut checks = 0;
    for (name, model) in [
        ("mm11(1,1,1)", mm11_abandonment(1.0, 1.0, 1.0).unwrap()),
        ("line[1,2,3]", preemptive_line(&[1.0, 2.0, 3.0]).unwrap()),
    ] {
        let analysis = Analysis::new(&model).unwrap();
        let s0 = analysis.mgf_radius().unwrap();
        let moments = analysis.moments(2).unwrap();
        let mut cfg = SimConfig::new(2024, 1e5);
        cfg.orders = vec![1, 2];
        cfg.s_values = vec![0.25 * s0, 0.5 * s0];
        let est = simulate(&model, &cfg).unwrap();
        let mut check = |label: String, e: &aoi_shs::Estimate, value: f64| {
            let z = (e.mean - value).abs() / e.stderr;
            let rel_se = e.stderr / value.abs();
            worst_z = worst_z.max(z);
            worst_rel_se = worst_rel_se.max(rel_se);
            checks += 1;
            if z > 4.0 || rel_se > 0.02 {
                failures.push(format!("{name} {label}: z={z:.2}, stderr/value={rel_se:.4}"));
            }
        };
        for (i, m) in [1u32, 2].iter().enumerate() {
            for (j, e) in est.moments[i].iter().enumerate() {
                check(format!("E[x{}^{m}]", j + 1), e, moments[i].aggregate[j]);
            }
        }
        for (i, s) in cfg.s_values.iter().enumerate() {
            let exact = analysis.mgf(*s).unwrap().aggregate;
            for (j, e) in est.mgf[i].iter().enumerate() {
                check(format!("M_{}({s:.4})", j + 1), e, exact[j]);
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = failures.is_empty() && secs < 60.0;
    let mut detail = format!(
        "{checks} estimates, max |z| {worst_z:.2} (<= 4), max stderr/value {worst_rel_se:.4} (<= 0.02), {secs:.1} s (< 60 s)"
    );
    if !failures.is_empty() {
        detail += &format!("; failing: {}", failures.join(", "));
    }
    outcome(pass, detail)
}

fn criterion_6() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for (name, model) in [
        ("mm11(1,1,1)", mm11_abandonment(1.0, 1.0, 1.0).unwrap()),
        ("line[1,2,3]", preemptive_line(&[1.0, 2.0, 3.0]).unwrap()),
    ] {
        let analysis = Analysis::new(&model).unwrap();
        let abscissa = aoi_shs::spectral_abscissa(&model).unwrap();
        let t_end = 40.0 / abscissa.abs();
        let traj = transient(
            &model,
            &TransientInit::zero(&model),
            &TransientSpec::new(t_end, vec![1], vec![]),
        )
        .unwrap();
        let fixed: Vec<f64> = analysis.moments(1).unwrap()[0].per_state.concat();
        let last = traj.moments[0].last().unwrap();
        let gap = last
            .iter()
            .zip(&fixed)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst = worst.max(gap);
        detail.push(format!("{name} t={t_end:.1}: {gap:.1e}"));
    }
    let mut occ_worst: f64 = 0.0;
    for (l, m, a) in [(1.0, 1.0, 1.0), (2.0, 0.5, 0.25)] {
        let model = mm11_abandonment(l, m, a).unwrap();
        let traj = transient(
            &model,
            &TransientInit::zero(&model),
            &TransientSpec::new(10.0, vec![1], vec![]),
        )
        .unwrap();
        let gamma = l + m + a;
        let pi0 = (m + a) / gamma;
        for (t, p) in traj.times.iter().zip(&traj.state_probs) {
            let want = pi0 + (1.0 - pi0) * (-gamma * t).exp();
            occ_worst = occ_worst.max((p[0] - want).abs());
        }
    }
    outcome(
        worst <= 1e-6 && occ_worst <= 1e-6,
        format!(
            "sup |v1(t) - v1bar| {} (<= 1e-6); two-state occupancy max err {occ_worst:.1e} (<= 1e-6)",
            detail.join(", ")
        ),
    )
}

fn uniform_x1(b: f64, x: f64) -> f64 {
    if (0.0..=b).contains(&x) {
        2.0 / b * (1.0 - x / b)
    } else {
        0.0
    }
}

fn uniform_x2(b: f64, x: f64) -> f64 {
    if x < 0.0 || x > 2.0 * b {
        0.0
    } else if x <= b {
        4.0 * x / (b * b) * (1.0 - x / b + x * x / (6.0 * b * b))
    } else {
        2.0 / (3.0 * b) * (2.0 - x / b).powi(3)
    }
}

fn criterion_7() -> Outcome {
    let mut sup: f64 = 0.0;
    let mut stat_err: f64 = 0.0;
    for b in [1.0, 6.0] {
        let net = SamplingNetwork::new(vec![RenewalSpec::Uniform { b }; 5]).unwrap();
        for (k, f) in [(1usize, uniform_x1 as fn(f64, f64) -> f64), (2, uniform_x2)] {
            let grid = UniformGrid::spanning(k as f64 * b, 4096);
            let d = node_age_pdf(&net, k, &grid).unwrap();
            for (x, v) in grid.abscissae().iter().zip(&d.values) {
                sup = sup.max((v - f(b, *x)).abs());
            }
        }
        for k in 1..=5 {
            let (m, v) = node_age_stats(&net, k).unwrap();
            let kf = k as f64;
            stat_err = stat_err
                .max(rel_err(m, kf * b / 3.0))
                .max(rel_err(v, kf * b * b / 18.0));
        }
    }
    outcome(
        sup <= 1e-3 && stat_err <= 1e-14,
        format!("sup error of f_X1, f_X2 {sup:.1e} (<= 1e-3); node stats rel err {stat_err:.1e}"),
    )
}

fn criterion_8() -> Outcome {
    let net = SamplingNetwork::new(vec![RenewalSpec::Uniform { b: 6.0 }; 5]).unwrap();
    let sim = simulate_sampling_line(&net, &SamplingSimConfig::new(8, 1e5)).unwrap();
    let mut failures = Vec::new();
    let mut l1s = Vec::new();
    for (i, node) in sim.nodes.iter().enumerate() {
        let k = i + 1;
        let target = 2.0 * k as f64;
        let zm = (node.mean.mean - target).abs() / node.mean.stderr;
        let zv = (node.variance.mean - target).abs() / node.variance.stderr;
        let grid = net.node_grid(k).unwrap();
        let d = node_age_pdf(&net, k, &grid).unwrap();
        let h = &node.histogram;
        let probs = d.bin_probabilities(&h.edges);
        let l1 = h.l1_distance(&probs, 1.0 - probs.iter().sum::<f64>());
        l1s.push(format!("{l1:.4}"));
        if zm > 4.0 || zv > 4.0 || l1 > 0.03 {
            failures.push(format!("node {k}: z_mean={zm:.2} z_var={zv:.2} L1={l1:.4}"));
        }
    }
    let g3 = gaussian_comparison(&net, 3, &net.node_grid(3).unwrap()).unwrap().l1;
    let g5 = gaussian_comparison(&net, 5, &net.node_grid(5).unwrap()).unwrap().l1;
    let mut detail = format!(
        "histogram L1 per node [{}] (<= 0.03); Gaussian L1 k=3 {g3:.4} > k=5 {g5:.4}",
        l1s.join(", ")
    );
    if !failures.is_empty() {
        detail += &format!("; failing: {}", failures.join(", "));
    }
    outcome(failures.is_empty() && g5 < g3, detail)
}

fn criterion_9() -> Outcome {
    let clock = ShsModel {
        num_states: 1,
        age_dim: 1,
        transitions: vec![Transition::new(0, 0, 1.0, AgeResetMap::identity(1))],
    };
    let rejected = matches!(
        aoi_shs::stationary_moments(&clock, 1),
        Err(AnalysisError::Unstable { .. })
    );
    let traj = transient(
        &clock,
        &TransientInit::zero(&clock),
        &TransientSpec::new(1200.0, vec![1], vec![]),
    )
    .unwrap();
    let last = traj.moment_aggregate(0, traj.times.len() - 1)[0];
    outcome(
        rejected && last > 1e3,
        format!("unstable signal raised: {rejected}; transient E[x](1200) = {last:.3}"),
    )
}

fn run_cli(args: &[&str]) -> i32 {
    let mut argv = vec!["aoi-shs"];
    argv.extend_from_slice(args);
    aoi_shs_cli::execute(argv)
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_default()
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).display().to_string();
    let network = p("uniform6.json");
    std::fs::write(
        &network,
        SamplingNetwork::new(vec![RenewalSpec::Uniform { b: 6.0 }; 5]).unwrap().to_json(),
    )
    .unwrap();
    let mut codes = vec![
        run_cli(&["builtin", "mm11", "1", "1", "1", "--out", &p("mm11.json")]),
        run_cli(&["builtin", "line", "1,2,3", "--out", &p("line.json")]),
    ];
    let mut runs = |tag: &str| {
        for model in ["mm11", "line"] {
            codes.push(run_cli(&[
                "simulate", &p(&format!("{model}.json")), "--t-end", "1e5", "--seed", "2024",
                "--reps", "16", "--mgf-frac", "0.25,0.5", "--out", &p(&format!("{tag}/{model}")),
            ]));
        }
        codes.push(run_cli(&[
            "sample", &network, "--node", "5", "--simulate", "1e5", "--seed", "8",
            "--out", &p(&format!("{tag}/sample")),
        ]));
    };
    runs("a");
    // Second run pinned to one worker thread.
    std::env::set_var("AOI_SHS_THREADS", "1");
    runs("b");
    std::env::remove_var("AOI_SHS_THREADS");
    let files = [
        "mm11/simulate.csv",
        "line/simulate.csv",
        "sample/sample.csv",
        "sample/sample_histogram.csv",
    ];
    let mut identical = 0;
    for f in files {
        let a = read(&dir.path().join("a").join(f));
        let b = read(&dir.path().join("b").join(f));
        if !a.is_empty() && a == b {
            identical += 1;
        }
    }
    let ok_codes = codes.iter().all(|&c| c == 0);
    outcome(
        ok_codes && identical == files.len(),
        format!(
            "{identical}/{} CSV files byte-identical across runs (second run single-threaded); exit codes {:?}",
            files.len(),
            codes
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("mm11 average age closed form", criterion_1),
        ("mm11 stationary MGF closed form", criterion_2),
        ("line moments and MGF product form", criterion_3),
        ("equal-rate line Erlang moments", criterion_4),
        ("simulator agrees with analysis", criterion_5),
        ("transient convergence", criterion_6),
        ("uniform sampling closed forms", criterion_7),
        ("uniform(0,6) five-node sampling line", criterion_8),
        ("instability detection", criterion_9),
        ("deterministic CSV output", criterion_10),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !filter.is_empty() && !filter.iter().any(|f| f == &id.to_string()) {
            continue;
        }
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} criterion {id:>2} ({name}): {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion/criteria failed");
        ExitCode::FAILURE
    }
}
