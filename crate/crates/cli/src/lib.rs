//! `aoi-shs` command-line front-end.
//!
//! Every subcommand writes CSV files and a run manifest into an output
//! directory; nothing is printed on stdout except `--help` and `--version`.
//! Exit code 1 means the model failed validation or analysis, 2 means an
//! I/O or argument problem.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use aoi_shs::analytic::{NEGATIVE_MOMENT_TOL, RADIUS_MARGIN};
use aoi_shs::{
    gaussian_comparison, mm11_abandonment, node_age_stats, preemptive_line, simulate,
    simulate_sampling_line, transient, Analysis, AnalysisError, ModelError, SamplingError,
    SamplingNetwork, SamplingSimConfig, ShsModel, SimConfig, SimError, Tolerances,
    TransientInit, TransientSpec, UniformGrid,
};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "aoi-shs", version, about = "Age-of-information analysis of Markov-modulated age processes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stationary moments, MGF values and the MGF radius s0.
    Analyze {
        model: PathBuf,
        /// Highest moment order.
        #[arg(long, default_value_t = 2)]
        moments: u32,
        /// MGF arguments.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        mgf: Vec<f64>,
        /// MGF arguments given as fractions of s0.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        mgf_frac: Vec<f64>,
        #[arg(short, long, default_value = ".")]
        out: PathBuf,
    },
    /// Monte Carlo estimates next to the analytic values.
    Simulate {
        model: PathBuf,
        #[arg(long)]
        t_end: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 16)]
        reps: usize,
        /// Discarded prefix per replication (default 1% of t_end).
        #[arg(long)]
        warmup: Option<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        orders: Vec<u32>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        mgf: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        mgf_frac: Vec<f64>,
        #[arg(short, long, default_value = ".")]
        out: PathBuf,
    },
    /// Time series of state probabilities, moments and MGF terms from x(0) = 0.
    Transient {
        model: PathBuf,
        #[arg(long)]
        t_end: f64,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        orders: Vec<u32>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        mgf: Vec<f64>,
        #[arg(long, default_value_t = 201)]
        points: usize,
        #[arg(short, long, default_value = ".")]
        out: PathBuf,
    },
    /// Node age density of a sampling line, its Gaussian match and
    /// optionally a simulated histogram.
    Sample {
        network: PathBuf,
        #[arg(long)]
        node: usize,
        #[arg(long, default_value_t = 4096)]
        points: usize,
        /// Simulate up to this time and add a histogram file.
        #[arg(long)]
        simulate: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 16)]
        reps: usize,
        #[arg(long, default_value_t = 60)]
        bins: usize,
        #[arg(short, long, default_value = ".")]
        out: PathBuf,
    },
    /// Write a canonical model file.
    Builtin {
        #[command(subcommand)]
        which: Builtin,
    },
    /// Re-run the command recorded in a manifest.
    Replay {
        manifest: PathBuf,
        /// Output directory replacing the recorded one.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum Builtin {
    /// M/M/1/1 queue with abandonment.
    Mm11 {
        lambda: f64,
        mu: f64,
        alpha: f64,
        #[arg(short, long, default_value = "mm11.json")]
        out: PathBuf,
    },
    /// Line of preemptive memoryless servers, rates comma separated.
    Line {
        #[arg(value_delimiter = ',')]
        rates: Vec<f64>,
        #[arg(short, long, default_value = "line.json")]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Validation or analysis failure (exit 1).
    Analysis(String),
    /// I/O, parse or argument failure (exit 2).
    Input(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Analysis(_) => 1,
            Self::Input(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Analysis(m) | Self::Input(m) => f.write_str(m),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Config(_) => Self::Input(e.to_string()),
            _ => Self::Analysis(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        Self::Analysis(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(_) => Self::Input(e.to_string()),
            SimError::Model(m) => m.into(),
        }
    }
}

impl From<SamplingError> for CliError {
    fn from(e: SamplingError) -> Self {
        match e {
            SamplingError::Parse(_)
            | SamplingError::Config(_)
            | SamplingError::NodeOutOfRange { .. } => Self::Input(e.to_string()),
            _ => Self::Analysis(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

/// Parsed contents of a model file.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedModel {
    Shs(ShsModel),
    Sampling(SamplingNetwork),
}

/// Reads either an SHS model or, if the document has a `hops` key, a
/// sampling network. Both schemas reject unknown keys.
pub fn load_model(path: &Path) -> Result<LoadedModel, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| io_err(path, e))?;
    if value.get("hops").is_some() {
        return SamplingNetwork::from_json(&text)
            .map(LoadedModel::Sampling)
            .map_err(|e| match CliError::from(e) {
                CliError::Input(m) => CliError::Input(format!("{}: {m}", path.display())),
                CliError::Analysis(m) => CliError::Analysis(format!("{}: {m}", path.display())),
            });
    }
    let model = ShsModel::from_json(&text).map_err(|e| io_err(path, e))?;
    let model = model
        .validated()
        .map_err(|e| CliError::Analysis(format!("{}: {e}", path.display())))?;
    Ok(LoadedModel::Shs(model))
}

fn load_shs(path: &Path) -> Result<ShsModel, CliError> {
    match load_model(path)? {
        LoadedModel::Shs(m) => Ok(m),
        LoadedModel::Sampling(_) => Err(CliError::Input(format!(
            "{}: expected an SHS model, found a sampling network",
            path.display()
        ))),
    }
}

fn load_network(path: &Path) -> Result<SamplingNetwork, CliError> {
    match load_model(path)? {
        LoadedModel::Sampling(n) => Ok(n),
        LoadedModel::Shs(_) => Err(CliError::Input(format!(
            "{}: expected a sampling network with a `hops` list",
            path.display()
        ))),
    }
}

/// Recorded alongside outputs so a run can be repeated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub inputs: Vec<String>,
    pub parameters: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub output_dir: String,
    /// Arguments after the program name, without the output directory.
    pub argv: Vec<String>,
}

/// 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn list(xs: &[f64]) -> String {
    xs.iter().map(|x| num(*x)).collect::<Vec<_>>().join(";")
}

struct Table {
    meta: Vec<String>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(meta: Vec<(String, String)>, header: &[&str]) -> Self {
        let mut m = vec![format!("# aoi-shs {VERSION}")];
        m.extend(meta.into_iter().map(|(k, v)| format!("{k}={v}")));
        Self {
            meta: m,
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn with_header(meta: Vec<(String, String)>, header: Vec<String>) -> Self {
        let mut t = Self::new(meta, &[]);
        t.header = header;
        t
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut w = csv::WriterBuilder::new()
            .flexible(true)
            .terminator(csv::Terminator::CRLF)
            .from_writer(Vec::new());
        let mut put = |rec: &[String]| w.write_record(rec).map_err(|e| io_err(path, e));
        put(&self.meta)?;
        put(&self.header)?;
        for r in &self.rows {
            put(r)?;
        }
        let bytes = w.into_inner().map_err(|e| io_err(path, e))?;
        fs::write(path, bytes).map_err(|e| io_err(path, e))
    }
}

fn tolerance_meta() -> Vec<(String, String)> {
    let t = Tolerances::default();
    vec![
        ("solve_residual".into(), num(t.solve_residual)),
        ("pivot".into(), num(t.pivot)),
        ("power_change".into(), num(t.power_change)),
        ("eigen_residual".into(), num(t.eigen_residual)),
        ("negative_moment_tol".into(), num(NEGATIVE_MOMENT_TOL)),
        ("radius_margin".into(), num(RADIUS_MARGIN)),
    ]
}

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn moment_unit(m: u32) -> String {
    if m == 1 {
        "time".into()
    } else {
        format!("time^{m}")
    }
}

fn mgf_arguments(analysis: &Analysis, mgf: &[f64], fracs: &[f64]) -> Result<Vec<f64>, CliError> {
    let mut s = mgf.to_vec();
    if !fracs.is_empty() {
        let r = analysis.mgf_radius()?;
        s.extend(fracs.iter().map(|f| f * r));
    }
    Ok(s)
}

fn prepare_out(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn write_manifest(
    dir: &Path,
    command: &str,
    inputs: &[&Path],
    parameters: BTreeMap<String, String>,
    seed: Option<u64>,
    argv: &[String],
) -> Result<(), CliError> {
    let manifest = RunManifest {
        tool_version: VERSION.to_string(),
        command: command.to_string(),
        inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
        parameters,
        seed,
        output_dir: dir.display().to_string(),
        argv: argv.to_vec(),
    };
    let path = dir.join(format!("{command}.manifest.json"));
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))
}

/// Arguments of a run with `-o/--out` and its value removed.
fn strip_out(argv: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut skip = false;
    for a in argv {
        if skip {
            skip = false;
            continue;
        }
        if a == "-o" || a == "--out" {
            skip = true;
        } else if !a.starts_with("--out=") {
            out.push(a.clone());
        }
    }
    out
}

fn analyze(
    model_path: &Path,
    moments: u32,
    mgf: &[f64],
    mgf_frac: &[f64],
    out: &Path,
) -> Result<(), CliError> {
    let model = load_shs(model_path)?;
    let analysis = Analysis::new(&model)?;
    let ms = analysis.moments(moments)?;
    let radius = analysis.mgf_radius()?;
    let s_values = mgf_arguments(&analysis, mgf, mgf_frac)?;
    let evals = s_values
        .iter()
        .map(|&s| analysis.mgf(s))
        .collect::<Result<Vec<_>, _>>()?;

    let mut meta = vec![
        kv("command", "analyze"),
        kv("model", model_path.display()),
        kv("s0", num(radius)),
    ];
    meta.extend(tolerance_meta());
    let mut t = Table::new(meta, &["quantity", "parameter", "index", "unit", "value"]);
    for (q, p) in analysis.stationary_probabilities().iter().enumerate() {
        t.push(vec!["state_probability".into(), String::new(), q.to_string(), "1".into(), num(*p)]);
    }
    for m in &ms {
        for (j, v) in m.aggregate.iter().enumerate() {
            t.push(vec!["moment".into(), m.order.to_string(), (j + 1).to_string(), moment_unit(m.order), num(*v)]);
        }
    }
    for e in &evals {
        for (j, v) in e.aggregate.iter().enumerate() {
            t.push(vec!["mgf".into(), num(e.s), (j + 1).to_string(), "1".into(), num(*v)]);
        }
    }
    t.push(vec!["s0".into(), String::new(), String::new(), "1/time".into(), num(radius)]);
    prepare_out(out)?;
    t.write(&out.join("analyze.csv"))
}

#[allow(clippy::too_many_arguments)]
fn run_simulation(
    model_path: &Path,
    t_end: f64,
    seed: u64,
    reps: usize,
    warmup: Option<f64>,
    orders: &[u32],
    mgf: &[f64],
    mgf_frac: &[f64],
    out: &Path,
) -> Result<(), CliError> {
    let model = load_shs(model_path)?;
    if orders.iter().any(|&m| m == 0) {
        return Err(CliError::Input("moment orders must be at least 1".into()));
    }
    let analysis = Analysis::new(&model)?;
    let s_values = mgf_arguments(&analysis, mgf, mgf_frac)?;
    let mut config = SimConfig::new(seed, t_end);
    config.warmup = warmup;
    config.replications = reps;
    config.orders = orders.to_vec();
    config.s_values = s_values.clone();
    let est = simulate(&model, &config)?;

    // Analytic columns stay empty when the stationary analysis fails.
    let max_order = orders.iter().copied().max().unwrap_or(1);
    let moments = analysis.moments(max_order).ok();
    let evals: Vec<Option<Vec<f64>>> = s_values
        .iter()
        .map(|&s| analysis.mgf(s).ok().map(|e| e.aggregate))
        .collect();
    let blank = |x: Option<f64>| x.map(num).unwrap_or_default();

    let mut meta = vec![
        kv("command", "simulate"),
        kv("model", model_path.display()),
        kv("seed", seed),
        kv("t_end", num(t_end)),
        kv("warmup", num(config.warmup())),
        kv("replications", reps),
        kv("s0", blank(analysis.mgf_radius().ok())),
    ];
    meta.extend(tolerance_meta());
    let mut t = Table::new(
        meta,
        &["quantity", "parameter", "index", "unit", "estimate", "stderr", "analytic"],
    );
    for (q, e) in est.occupancy.iter().enumerate() {
        t.push(vec![
            "state_probability".into(),
            String::new(),
            q.to_string(),
            "1".into(),
            num(e.mean),
            num(e.stderr),
            num(analysis.stationary_probabilities()[q]),
        ]);
    }
    for (i, &m) in orders.iter().enumerate() {
        for (j, e) in est.moments[i].iter().enumerate() {
            let a = moments.as_ref().map(|ms| ms[m as usize - 1].aggregate[j]);
            t.push(vec![
                "moment".into(),
                m.to_string(),
                (j + 1).to_string(),
                moment_unit(m),
                num(e.mean),
                num(e.stderr),
                blank(a),
            ]);
        }
    }
    for (i, &s) in s_values.iter().enumerate() {
        for (j, e) in est.mgf[i].iter().enumerate() {
            let a = evals[i].as_ref().map(|v| v[j]);
            t.push(vec![
                "mgf".into(),
                num(s),
                (j + 1).to_string(),
                "1".into(),
                num(e.mean),
                num(e.stderr),
                blank(a),
            ]);
        }
    }
    prepare_out(out)?;
    t.write(&out.join("simulate.csv"))
}

fn run_transient(
    model_path: &Path,
    t_end: f64,
    orders: &[u32],
    mgf: &[f64],
    points: usize,
    out: &Path,
) -> Result<(), CliError> {
    let model = load_shs(model_path)?;
    let mut spec = TransientSpec::new(t_end, orders.to_vec(), mgf.to_vec());
    spec.output_points = points;
    let traj = transient(&model, &TransientInit::zero(&model), &spec)?;

    let n = model.age_dim;
    let mut header = vec!["t [time]".to_string()];
    header.extend((0..model.num_states).map(|q| format!("P(q={q}) [1]")));
    for &m in orders {
        header.extend((1..=n).map(|j| format!("E[x{j}^{m}] [{}]", moment_unit(m))));
    }
    for &s in mgf {
        header.extend((1..=n).map(|j| format!("E[exp(s*x{j})] s={} [1]", num(s))));
    }
    let meta = vec![
        kv("command", "transient"),
        kv("model", model_path.display()),
        kv("t_end", num(t_end)),
        kv("step", num(traj.step)),
        kv("initial", "x=0;q=0"),
    ];
    let mut t = Table::with_header(meta, header);
    for (k, &time) in traj.times.iter().enumerate() {
        let mut row = vec![num(time)];
        row.extend(traj.state_probs[k].iter().map(|p| num(*p)));
        for i in 0..orders.len() {
            row.extend(traj.moment_aggregate(i, k).iter().map(|v| num(*v)));
        }
        for i in 0..mgf.len() {
            row.extend(traj.mgf_aggregate(i, k).iter().map(|v| num(*v)));
        }
        t.push(row);
    }
    prepare_out(out)?;
    t.write(&out.join("transient.csv"))
}

#[allow(clippy::too_many_arguments)]
fn run_sample(
    path: &Path,
    node: usize,
    points: usize,
    sim_t_end: Option<f64>,
    seed: u64,
    reps: usize,
    bins: usize,
    out: &Path,
) -> Result<(), CliError> {
    let network = load_network(path)?;
    if points < 2 {
        return Err(CliError::Input("--points must be at least 2".into()));
    }
    let extent = network.node_extent(node)?;
    let grid = UniformGrid::spanning(extent, points);
    let cmp = gaussian_comparison(&network, node, &grid)?;
    let (mean, variance) = node_age_stats(&network, node)?;

    let meta = vec![
        kv("command", "sample"),
        kv("network", path.display()),
        kv("node", node),
        kv("points", points),
        kv("mean", num(mean)),
        kv("variance", num(variance)),
        kv("gaussian_l1", num(cmp.l1)),
    ];
    let mut t = Table::new(meta, &["x [time]", "convolution [1/time]", "gaussian [1/time]"]);
    for (i, x) in grid.abscissae().iter().enumerate() {
        t.push(vec![num(*x), num(cmp.convolution.values[i]), num(cmp.gaussian.values[i])]);
    }
    prepare_out(out)?;
    t.write(&out.join("sample.csv"))?;

    if let Some(t_end) = sim_t_end {
        let mut config = SamplingSimConfig::new(seed, t_end);
        config.replications = reps;
        config.bins = bins;
        let sim = simulate_sampling_line(&network, &config)?;
        let est = &sim.nodes[node - 1];
        let h = &est.histogram;
        let probs = cmp.convolution.bin_probabilities(&h.edges);
        let l1 = h.l1_distance(&probs, 1.0 - probs.iter().sum::<f64>());
        let meta = vec![
            kv("command", "sample"),
            kv("network", path.display()),
            kv("node", node),
            kv("seed", seed),
            kv("t_end", num(t_end)),
            kv("warmup", num(config.warmup())),
            kv("replications", reps),
            kv("mean_estimate", num(est.mean.mean)),
            kv("mean_stderr", num(est.mean.stderr)),
            kv("variance_estimate", num(est.variance.mean)),
            kv("variance_stderr", num(est.variance.stderr)),
            kv("overflow", num(h.overflow)),
            kv("histogram_l1", num(l1)),
        ];
        let mut t = Table::new(
            meta,
            &[
                "bin_low [time]",
                "bin_high [time]",
                "empirical [1/time]",
                "empirical_stderr [1/time]",
                "convolution [1/time]",
            ],
        );
        for (k, w) in h.edges.windows(2).enumerate() {
            let width = w[1] - w[0];
            t.push(vec![
                num(w[0]),
                num(w[1]),
                num(h.mass[k] / width),
                num(h.mass_stderr[k] / width),
                num(probs[k] / width),
            ]);
        }
        t.write(&out.join("sample_histogram.csv"))?;
    }
    Ok(())
}

fn write_builtin(model: Result<ShsModel, ModelError>, out: &Path) -> Result<(), CliError> {
    let model = model?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        prepare_out(dir)?;
    }
    fs::write(out, model.to_json() + "\n").map_err(|e| io_err(out, e))
}

/// Runs a parsed command. `argv` is recorded in the manifest.
pub fn run(cli: Cli, argv: &[String]) -> Result<(), CliError> {
    let recorded = strip_out(argv);
    let mut params = BTreeMap::new();
    match cli.command {
        Command::Analyze {
            model,
            moments,
            mgf,
            mgf_frac,
            out,
        } => {
            analyze(&model, moments, &mgf, &mgf_frac, &out)?;
            params.insert("moments".into(), moments.to_string());
            params.insert("mgf".into(), list(&mgf));
            params.insert("mgf_frac".into(), list(&mgf_frac));
            write_manifest(&out, "analyze", &[&model], params, None, &recorded)
        }
        Command::Simulate {
            model,
            t_end,
            seed,
            reps,
            warmup,
            orders,
            mgf,
            mgf_frac,
            out,
        } => {
            run_simulation(&model, t_end, seed, reps, warmup, &orders, &mgf, &mgf_frac, &out)?;
            params.insert("t_end".into(), num(t_end));
            params.insert("reps".into(), reps.to_string());
            params.insert("warmup".into(), warmup.map(num).unwrap_or_default());
            params.insert(
                "orders".into(),
                orders.iter().map(u32::to_string).collect::<Vec<_>>().join(";"),
            );
            params.insert("mgf".into(), list(&mgf));
            params.insert("mgf_frac".into(), list(&mgf_frac));
            write_manifest(&out, "simulate", &[&model], params, Some(seed), &recorded)
        }
        Command::Transient {
            model,
            t_end,
            orders,
            mgf,
            points,
            out,
        } => {
            run_transient(&model, t_end, &orders, &mgf, points, &out)?;
            params.insert("t_end".into(), num(t_end));
            params.insert("points".into(), points.to_string());
            params.insert("mgf".into(), list(&mgf));
            write_manifest(&out, "transient", &[&model], params, None, &recorded)
        }
        Command::Sample {
            network,
            node,
            points,
            simulate,
            seed,
            reps,
            bins,
            out,
        } => {
            run_sample(&network, node, points, simulate, seed, reps, bins, &out)?;
            params.insert("node".into(), node.to_string());
            params.insert("points".into(), points.to_string());
            params.insert("simulate".into(), simulate.map(num).unwrap_or_default());
            params.insert("reps".into(), reps.to_string());
            params.insert("bins".into(), bins.to_string());
            let seed = simulate.map(|_| seed);
            write_manifest(&out, "sample", &[&network], params, seed, &recorded)
        }
        Command::Builtin { which } => match which {
            Builtin::Mm11 {
                lambda,
                mu,
                alpha,
                out,
            } => write_builtin(mm11_abandonment(lambda, mu, alpha), &out),
            Builtin::Line { rates, out } => write_builtin(preemptive_line(&rates), &out),
        },
        Command::Replay { manifest, out } => {
            let text = fs::read_to_string(&manifest).map_err(|e| io_err(&manifest, e))?;
            let m: RunManifest = serde_json::from_str(&text).map_err(|e| io_err(&manifest, e))?;
            let dir = out.unwrap_or_else(|| PathBuf::from(&m.output_dir));
            let mut args = vec!["aoi-shs".to_string()];
            args.extend(m.argv.iter().cloned());
            args.push("--out".into());
            args.push(dir.display().to_string());
            let cli = Cli::try_parse_from(&args).map_err(|e| CliError::Input(e.to_string()))?;
            if matches!(cli.command, Command::Replay { .. }) {
                return Err(CliError::Input("a manifest cannot replay another manifest".into()));
            }
            run(cli, &args[1..])
        }
    }
}

/// Parses `args` (program name first), runs, reports errors on stderr and
/// returns the exit code.
pub fn execute<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let argv: Vec<String> = args
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match run(cli, &argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
