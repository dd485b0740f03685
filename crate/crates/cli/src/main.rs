use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use ohmic::flow::{check_unitary, dirichlet_upper_bound, thomson_lower_bound};
use ohmic::glauber::{GlauberParams, NucleationStudy};
use ohmic::lattice::{experiment, LatticeRow};
use ohmic::mc::{coupling_time, escape_time_law, net_flux, simulate_hitting, McConfig, Start};
use ohmic::potential::equilibrium;
use ohmic::spectral::{
    cheeger_constant, flow_poincare, mixing_time, resistance_poincare, spectrum, PathFamily, WeightScheme,
    CHEEGER_LIMIT, RESISTANCE_LIMIT,
};
use ohmic::{Error, ErrorClass, Flow, Network, NodeSet, Potential};

mod render;

const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser, Serialize)]
#[command(name = "ohmic", version, about = "Reversible Markov chains as electrical networks")]
struct Cli {
    /// Write the report here instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum Command {
    /// Equilibrium potential, capacity, charge and harmonic measure of a pair.
    Solve(PairArgs),
    /// Dirichlet and Thomson bounds from user certificates.
    Bounds(BoundsArgs),
    /// Spectral gap with Cheeger and Poincaré bounds.
    Spectral(SpectralArgs),
    /// Capacities of lattice boxes.
    Lattice(LatticeArgs),
    /// Metastability of Glauber dynamics on a small torus.
    Glauber(GlauberArgs),
    /// Monte Carlo estimates.
    Mc(McArgs),
}

#[derive(Debug, Args, Serialize)]
struct PairArgs {
    /// Network edge-list file.
    network: PathBuf,
    /// Node sets, e.g. `--set A=a,b --set B=c`.
    #[arg(long = "set", value_name = "NAME=LABELS", required = true)]
    sets: Vec<String>,
}

#[derive(Debug, Args, Serialize)]
struct BoundsArgs {
    #[command(flatten)]
    pair: PairArgs,
    /// Test function: one `label value` per line.
    #[arg(long)]
    potential: Option<PathBuf>,
    /// Unitary flow: one `x y value` per line (value from x to y).
    #[arg(long)]
    flow: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Paths {
    Geodesic,
}

#[derive(Debug, Clone, Copy, PartialEq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Scheme {
    W1,
    W2,
    W3,
    W4,
}

impl From<Scheme> for WeightScheme {
    fn from(s: Scheme) -> Self {
        match s {
            Scheme::W1 => WeightScheme::W1,
            Scheme::W2 => WeightScheme::W2,
            Scheme::W3 => WeightScheme::W3,
            Scheme::W4 => WeightScheme::W4,
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct SpectralArgs {
    network: PathBuf,
    /// Path family for the flow Poincaré bound.
    #[arg(long, value_enum)]
    paths: Option<Paths>,
    /// Weight schemes for the flow Poincaré bound (default: all four).
    #[arg(long, value_enum, value_delimiter = ',')]
    scheme: Vec<Scheme>,
    /// Require the exhaustive Cheeger constant (fails on large networks).
    #[arg(long)]
    cheeger: bool,
    /// Also compute the exact mixing time.
    #[arg(long)]
    mixing: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args, Serialize)]
struct LatticeArgs {
    /// Dimension (1, 2 or 3).
    #[arg(long, short)]
    d: usize,
    /// Largest half-width; boxes n = 1..=n_max.
    #[arg(long, conflicts_with = "ns")]
    n_max: Option<usize>,
    /// Explicit half-widths.
    #[arg(long, value_delimiter = ',')]
    ns: Vec<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Debug, Args, Serialize)]
struct GlauberArgs {
    /// Torus side.
    #[arg(long, short = 'L', default_value_t = 4)]
    l: usize,
    #[arg(long, short = 'J', default_value_t = 1.0)]
    j: f64,
    #[arg(long, default_value_t = 1.4, allow_negative_numbers = true)]
    h: f64,
    /// Inverse temperatures.
    #[arg(long, value_delimiter = ',', default_values_t = vec![2.0, 3.0, 4.0, 5.0, 6.0, 8.0])]
    beta: Vec<f64>,
    /// Exit with a domain error when the extracted gate differs from its combinatorial description.
    #[arg(long)]
    strict_gate: bool,
}

#[derive(Debug, Args, Serialize)]
struct McOptions {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    samples: u64,
    /// Per-trajectory step budget.
    #[arg(long, default_value_t = ohmic::mc::MAX_STEPS)]
    max_steps: u64,
}

impl McOptions {
    fn config(&self) -> McConfig {
        McConfig { samples: self.samples as usize, seed: self.seed, max_steps: self.max_steps }
    }
}

#[derive(Debug, Args, Serialize)]
struct McArgs {
    #[command(subcommand)]
    task: McTask,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum McTask {
    /// `P(tau_A < tau_B)` and `E[tau_B]`.
    Hitting {
        #[command(flatten)]
        pair: PairArgs,
        /// Start label, or `harmonic` for the harmonic measure of A.
        #[arg(long)]
        start: String,
        #[command(flatten)]
        mc: McOptions,
    },
    /// Net crossings of a directed edge before `tau_B`, from the harmonic measure of A.
    Flux {
        #[command(flatten)]
        pair: PairArgs,
        /// Directed edge `x,y`.
        #[arg(long, value_delimiter = ',', required = true)]
        edge: Vec<String>,
        #[command(flatten)]
        mc: McOptions,
    },
    /// Law of the hitting time of a target set.
    Escape {
        network: PathBuf,
        #[arg(long)]
        source: String,
        #[arg(long, value_delimiter = ',', required = true)]
        target: Vec<String>,
        #[command(flatten)]
        mc: McOptions,
    },
    /// Meeting time of two independent walks.
    Coupling {
        network: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[command(flatten)]
        mc: McOptions,
    },
}

enum Output {
    Json(Value),
    Text(String),
}

fn read_network(path: &Path) -> Result<Network, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    Ok(Network::parse_edge_list(&text)?)
}

fn parse_sets(net: &Network, specs: &[String]) -> Result<(NodeSet, NodeSet), Failure> {
    let (mut a, mut b) = (None, None);
    for spec in specs {
        let (name, labels) =
            spec.split_once('=').ok_or_else(|| Failure::Usage(format!("expected NAME=LABELS, got `{spec}`")))?;
        let set = net.node_set(labels.split(',').map(str::trim).filter(|s| !s.is_empty()))?;
        match name.trim() {
            "A" | "a" => a = Some(set),
            "B" | "b" => b = Some(set),
            other => return Err(Failure::Usage(format!("unknown set name `{other}` (expected A or B)"))),
        }
    }
    match (a, b) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(Failure::Usage("both --set A=... and --set B=... are required".into())),
    }
}

fn labels(net: &Network, set: &NodeSet) -> Vec<String> {
    set.iter().map(|x| net.label(x)).collect()
}

fn by_label(net: &Network, values: &[f64]) -> Value {
    let map: serde_json::Map<String, Value> = values.iter().enumerate().map(|(x, v)| (net.label(x), json!(v))).collect();
    Value::Object(map)
}

fn cmd_solve(args: &PairArgs) -> Result<Output, Failure> {
    let net = read_network(&args.network)?;
    let (a, b) = parse_sets(&net, &args.sets)?;
    let eq = equilibrium(&net, &a, &b)?;
    let nu: serde_json::Map<String, Value> = a.iter().map(|x| (net.label(x), json!(eq.harmonic_measure[x]))).collect();
    Ok(Output::Json(json!({
        "a": labels(&net, &a),
        "b": labels(&net, &b),
        "capacity": eq.capacity,
        "resistance": eq.resistance(),
        "potential": by_label(&net, eq.potential.values()),
        "charge": by_label(&net, &eq.charge),
        "harmonic_measure": nu,
    })))
}

fn read_potential(net: &Network, path: &Path) -> Result<Potential, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let mut f = vec![f64::NAN; net.node_count()];
    for (line, raw) in text.lines().enumerate() {
        let raw = raw.split('#').next().unwrap_or("").trim();
        if raw.is_empty() {
            continue;
        }
        let parse = |message: &str| Error::Parse { line: line + 1, message: message.into() };
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        let [label, value] = tokens.as_slice() else { return Err(parse("expected `label value`").into()) };
        let v: f64 = value.parse().map_err(|_| parse("bad number"))?;
        f[net.resolve(label)?] = v;
    }
    if let Some(x) = f.iter().position(|v| v.is_nan()) {
        return Err(Error::Parse { line: 0, message: format!("no value for node `{}`", net.label(x)) }.into());
    }
    Ok(Potential::new(f))
}

fn read_flow(net: &Network, path: &Path) -> Result<Flow, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let mut entries = Vec::new();
    for (line, raw) in text.lines().enumerate() {
        let raw = raw.split('#').next().unwrap_or("").trim();
        if raw.is_empty() {
            continue;
        }
        let parse = |message: &str| Error::Parse { line: line + 1, message: message.into() };
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        let [x, y, value] = tokens.as_slice() else { return Err(parse("expected `x y value`").into()) };
        let v: f64 = value.parse().map_err(|_| parse("bad number"))?;
        entries.push((net.resolve(x)?, net.resolve(y)?, v));
    }
    Ok(Flow::from_directed(net, &entries)?)
}

fn cmd_bounds(args: &BoundsArgs) -> Result<Output, Failure> {
    let net = read_network(&args.pair.network)?;
    let (a, b) = parse_sets(&net, &args.pair.sets)?;
    let exact = equilibrium(&net, &a, &b)?.capacity;
    let mut report = json!({ "capacity": exact });
    if let Some(path) = &args.potential {
        let f = read_potential(&net, path)?;
        let upper = dirichlet_upper_bound(&net, &a, &b, &f)?;
        report["upper"] = json!(upper);
        report["upper_gap"] = json!(upper - exact);
    }
    if let Some(path) = &args.flow {
        let phi = read_flow(&net, path)?;
        check_unitary(&net, &phi, &a, &b)?;
        let lower = thomson_lower_bound(&net, &a, &b, &phi)?;
        report["lower"] = json!(lower);
        report["lower_gap"] = json!(exact - lower);
    }
    Ok(Output::Json(report))
}

fn cmd_spectral(args: &SpectralArgs) -> Result<Output, Failure> {
    let net = read_network(&args.network)?;
    let n = net.node_count();
    let spec = spectrum(&net)?;
    let mut report = json!({
        "nodes": n,
        "gap": spec.gap,
        "lambda_bar": spec.lambda_bar,
        "periodic": spec.periodic,
        "eigenvalues": spec.eigenvalues,
        "complete": spec.complete,
    });
    if args.cheeger || n <= CHEEGER_LIMIT {
        let ch = cheeger_constant(&net)?;
        report["cheeger"] = json!({
            "constant": ch.constant,
            "set": labels(&net, &ch.set),
            "lower": ch.constant * ch.constant / 2.0,
            "upper": 2.0 * ch.constant,
        });
    }
    if n <= RESISTANCE_LIMIT {
        report["resistance_poincare"] = json!(resistance_poincare(&net)?);
    }
    let schemes: Vec<WeightScheme> =
        if args.scheme.is_empty() { WeightScheme::ALL.to_vec() } else { args.scheme.iter().map(|&s| s.into()).collect() };
    if args.paths.is_some() || !args.scheme.is_empty() || n <= RESISTANCE_LIMIT {
        let family = PathFamily::geodesic(&net);
        let bounds: Vec<Value> = schemes
            .iter()
            .map(|&s| {
                flow_poincare(&net, &family, s).map(|r| {
                    json!({
                        "scheme": s.name(),
                        "value": r.value,
                        "bottleneck": [net.label(r.bottleneck.0), net.label(r.bottleneck.1)],
                    })
                })
            })
            .collect::<Result<_, _>>()?;
        report["flow_poincare"] = json!({ "paths": "geodesic", "bounds": bounds });
    }
    if args.mixing {
        let m = mixing_time(&net)?;
        report["mixing"] = json!({
            "tau1": m.tau1,
            "log_rate": m.log_rate,
            "relation_holds": m.relation_holds,
        });
    }
    Ok(Output::Json(report))
}

fn opt(v: Option<f64>) -> String {
    v.map(render::float).unwrap_or_default()
}

fn cmd_lattice(args: &LatticeArgs) -> Result<Output, Failure> {
    let ns: Vec<usize> = match args.n_max {
        Some(m) => (1..=m).collect(),
        None if !args.ns.is_empty() => args.ns.clone(),
        None => return Err(Failure::Usage("one of --n-max or --ns is required".into())),
    };
    let rows: Vec<LatticeRow> = experiment(args.d, &ns)?;
    Ok(match args.format {
        Format::Json => Output::Json(serde_json::to_value(&rows).expect("serializable")),
        Format::Csv => {
            let mut out = String::from("d,n,capacity,upper_bound,lower_bound,closed_form,wall_time_ms\n");
            for r in &rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{:.3}\n",
                    r.d,
                    r.n,
                    render::float(r.capacity),
                    opt(r.upper_bound),
                    opt(r.lower_bound),
                    opt(r.closed_form),
                    r.wall_time_ms
                ));
            }
            Output::Text(out)
        }
    })
}

fn cmd_glauber(args: &GlauberArgs) -> Result<Output, Failure> {
    for &beta in &args.beta {
        GlauberParams::new(args.l, args.j, args.h, beta)?;
    }
    let study = NucleationStudy::new(args.l, args.j, args.h)?;
    let r = &study.report;
    let gate_check = r.verify_gate();
    if args.strict_gate {
        gate_check.clone()?;
    }
    let table = study.sweep(&args.beta)?;
    Ok(Output::Json(json!({
        "params": { "l": args.l, "j": args.j, "h": args.h },
        "l_c": r.critical_length,
        "gamma": r.gamma,
        "gamma_closed_form": r.gamma_closed_form,
        "energy_a": r.energy_a,
        "energy_b": r.energy_b,
        "b_is_ground_state": r.b_is_ground_state,
        "gate_count": r.gate_count,
        "predicted_gate_count": r.predicted_gate_count,
        "gate_shape_failures": r.gate_shape_failures,
        "gate_check": match gate_check { Ok(()) => "ok".to_string(), Err(e) => e.to_string() },
        "cycle_a_size": r.cycle_a.len(),
        "cycle_b_size": r.cycle_b.len(),
        "max_stability_outside_a": r.max_stability_outside_a,
        "prefactor": r.prefactor(),
        "table": table,
    })))
}

fn cmd_mc(args: &McArgs) -> Result<Output, Failure> {
    let report = match &args.task {
        McTask::Hitting { pair, start, mc } => {
            let net = read_network(&pair.network)?;
            let (a, b) = parse_sets(&net, &pair.sets)?;
            let start = if start == "harmonic" {
                Start::Distribution(equilibrium(&net, &a, &b)?.harmonic_measure)
            } else {
                Start::Node(net.resolve(start)?)
            };
            serde_json::to_value(simulate_hitting(&net, &start, &a, &b, &mc.config())?)
        }
        McTask::Flux { pair, edge, mc } => {
            let net = read_network(&pair.network)?;
            let (a, b) = parse_sets(&net, &pair.sets)?;
            let [x, y] = edge.as_slice() else {
                return Err(Failure::Usage(format!("--edge takes two labels `x,y`, got {}", edge.len())));
            };
            let e = (net.resolve(x)?, net.resolve(y)?);
            serde_json::to_value(net_flux(&net, &a, &b, e, &mc.config())?)
        }
        McTask::Escape { network, source, target, mc } => {
            let net = read_network(network)?;
            let targets = net.node_set(target.iter().map(String::as_str))?;
            serde_json::to_value(escape_time_law(&net, net.resolve(source)?, &targets, &mc.config())?)
        }
        McTask::Coupling { network, x, y, mc } => {
            let net = read_network(network)?;
            serde_json::to_value(coupling_time(&net, net.resolve(x)?, net.resolve(y)?, &mc.config())?)
        }
    };
    Ok(Output::Json(report.expect("serializable")))
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Io(String),
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Io(_) => 2,
            Failure::Domain(e) => match e.class() {
                ErrorClass::Domain => 2,
                ErrorClass::Resource => 3,
            },
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Io(m) => write!(f, "cannot read {m}"),
            Failure::Domain(e) => write!(f, "{e}"),
        }
    }
}

fn thread_cap() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("OHMIC_THREADS") else { return Ok(()) };
    let threads: usize =
        raw.trim().parse().map_err(|_| Failure::Usage(format!("OHMIC_THREADS must be a positive integer, got `{raw}`")))?;
    if threads == 0 {
        return Err(Failure::Usage("OHMIC_THREADS must be positive".into()));
    }
    ohmic::par::set_thread_limit(threads);
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    thread_cap()?;
    let out = match &cli.command {
        Command::Solve(a) => cmd_solve(a)?,
        Command::Bounds(a) => cmd_bounds(a)?,
        Command::Spectral(a) => cmd_spectral(a)?,
        Command::Lattice(a) => cmd_lattice(a)?,
        Command::Glauber(a) => cmd_glauber(a)?,
        Command::Mc(a) => cmd_mc(a)?,
    };
    let text = match out {
        Output::Text(t) => t,
        Output::Json(report) => {
            let doc = json!({
                "schema_version": SCHEMA_VERSION,
                "config": serde_json::to_value(cli).expect("serializable"),
                "report": report,
            });
            render::json(&doc) + "\n"
        }
    };
    match &cli.output {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
