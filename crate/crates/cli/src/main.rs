use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use nhssh_core::acceptance::run_criterion;
use nhssh_core::chain::eigensolve;
use nhssh_core::disorder::{ensemble_run, strength_sweep, trajectory_sweep, RNG_NAME};
use nhssh_core::dissipation::{gap_analytic, validate_elimination, SegmentModel, ThreeLevelModel, SEG_A, SEG_B};
use nhssh_core::metrics::{winding_from_spectrum, LocalizationReport};
use nhssh_core::microscopic::{compare_models, PopulationTrajectory, TrajectoryComparison};
use nhssh_core::model::TWO_PI;
use nhssh_core::numerics::IntegratorContract;
use nhssh_core::output::{num, opt, OutputDir, RunContext};
use nhssh_core::{Boundary, DisorderKind, DisorderSpec, Error, Pipeline, PhysicalConfig, Species};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_ACCEPTANCE: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "nhssh", version, about = "Non-reciprocal SSH chains from dissipative Rydberg arrays")]
struct Cli {
    /// JSON config; missing keys take reference values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides disorder.master_seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output root; each command writes into <out>/<command>.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for ensembles (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// `obc` (straight chain) or `pbc` (ring).
    #[arg(long, global = true)]
    boundary: Option<Boundary>,
    /// Flux sign: `+` keeps the configured phases, `-` negates them.
    #[arg(long, global = true, value_parser = parse_flux, allow_hyphen_values = true)]
    flux: Option<bool>,
    #[command(subcommand)]
    command: Command,
}

fn parse_flux(s: &str) -> std::result::Result<bool, String> {
    match s {
        "+" | "plus" => Ok(false),
        "-" | "minus" => Ok(true),
        other => Err(format!("flux must be + or -, got `{other}`")),
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Drain gap of the three-level model over the configured Ω_p/Γ grid.
    Gap,
    /// Population dynamics of the six-atom and dissipative segment models.
    Dynamics {
        /// Models to integrate; pairs present are compared.
        #[arg(long, value_delimiter = ',', default_values = ["full", "effective", "master", "eliminated"])]
        model: Vec<DynModel>,
    },
    /// Clean chain spectrum, eigenstates and localization metrics.
    Spectrum,
    /// Disorder ensemble at one strength.
    Disorder(DisorderArgs),
    /// Winding number against disorder strength.
    Winding {
        #[arg(long, value_delimiter = ',', default_values = ["phase", "position"])]
        kind: Vec<KindArg>,
        #[arg(long)]
        realizations: Option<usize>,
    },
    /// Tracked eigenvalues under a uniform disorder offset.
    Sweep {
        #[arg(long, default_value = "phase")]
        kind: KindArg,
    },
    /// Runs the acceptance criteria and reports PASS/FAIL per line.
    Validate {
        /// Subset of criteria, e.g. `1,4,5`.
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u8>,
    },
    /// Prints the effective configuration as JSON.
    Config,
}

#[derive(Args, Debug)]
struct DisorderArgs {
    #[arg(long, default_value = "phase")]
    kind: KindArg,
    /// η (rad) or ΔR (μm); defaults to the configured value.
    #[arg(long)]
    half_width: Option<f64>,
    /// Defaults to disorder.n_realizations.
    #[arg(long)]
    realizations: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum DynModel {
    Full,
    Effective,
    Master,
    Eliminated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Phase,
    Position,
}

impl From<KindArg> for DisorderKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Phase => DisorderKind::Phase,
            KindArg::Position => DisorderKind::Position,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let config_error = e.chain().any(|c| c.downcast_ref::<Error>().is_some_and(Error::is_config_error));
            ExitCode::from(if config_error { EXIT_CONFIG } else { EXIT_NUMERIC })
        }
    }
}

fn load_config(cli: &Cli) -> Result<PhysicalConfig> {
    let mut c = match &cli.config {
        Some(p) => PhysicalConfig::from_path(p).with_context(|| format!("reading {}", p.display()))?,
        None => PhysicalConfig::reference(),
    };
    if let Some(s) = cli.seed {
        c.disorder.master_seed = s;
    }
    if let Some(b) = cli.boundary {
        c.boundary = b;
    }
    if cli.flux == Some(true) {
        c = c.with_flux_reversed();
    }
    c.validate()?;
    Ok(c)
}

fn run(cli: &Cli) -> Result<u8> {
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("starting worker pool")?;
    }
    let config = load_config(cli)?;
    let start = Instant::now();
    let name = match &cli.command {
        Command::Gap => "gap",
        Command::Dynamics { .. } => "dynamics",
        Command::Spectrum => "spectrum",
        Command::Disorder(_) => "disorder",
        Command::Winding { .. } => "winding",
        Command::Sweep { .. } => "sweep",
        Command::Validate { .. } => "validate",
        Command::Config => {
            println!("{}", config.to_json());
            return Ok(0);
        }
    };
    let mut out = OutputDir::create(cli.out.join(name), RunContext::new(&config, name))?;
    let code = match &cli.command {
        Command::Gap => cmd_gap(&config, &mut out)?,
        Command::Dynamics { model } => cmd_dynamics(&config, model, &mut out)?,
        Command::Spectrum => cmd_spectrum(&config, &mut out)?,
        Command::Disorder(a) => cmd_disorder(&config, a, &mut out)?,
        Command::Winding { kind, realizations } => cmd_winding(&config, kind, *realizations, &mut out)?,
        Command::Sweep { kind } => cmd_sweep(&config, *kind, &mut out)?,
        Command::Validate { criteria } => cmd_validate(&config, criteria, &mut out)?,
        Command::Config => unreachable!(),
    };
    let versions = BTreeMap::from([
        ("nhssh".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("config_schema".to_string(), "1".to_string()),
    ]);
    let manifest = out.finish(versions, start.elapsed().as_secs_f64())?;
    eprintln!("wrote {} file(s) to {} (run {})", manifest.outputs.len(), cli.out.join(name).display(), &manifest.run_hash[..12]);
    Ok(code)
}

fn cmd_gap(c: &PhysicalConfig, out: &mut OutputDir) -> Result<u8> {
    let g = c.gamma_aux;
    let mut rows = Vec::new();
    for &r in &c.gap_scan {
        let m = ThreeLevelModel::new(r * g, g)?;
        let numeric = m.gap_numeric()?;
        let analytic = gap_analytic(&m);
        rows.push(vec![num(r), num(r * g), num(numeric), num(analytic), num(numeric / g)]);
    }
    out.write_csv("gap.csv", &["omega_p_over_gamma", "omega_p", "gap_numeric", "gap_analytic", "gap_over_gamma"], &rows)?;
    Ok(0)
}

fn trajectory_rows(t: &PopulationTrajectory) -> (Vec<String>, Vec<Vec<String>>) {
    let mut cols = vec!["time_us".to_string()];
    cols.extend(t.labels.iter().cloned());
    if t.ground.is_some() {
        cols.push("ground".into());
    }
    let rows = t
        .times
        .iter()
        .enumerate()
        .map(|(i, &time)| {
            let mut r = vec![num(time)];
            r.extend(t.populations[i].iter().map(|&p| num(p)));
            if let Some(g) = &t.ground {
                r.push(num(g[i]));
            }
            r
        })
        .collect();
    (cols, rows)
}

fn write_trajectory(out: &mut OutputDir, name: &str, t: &PopulationTrajectory) -> Result<()> {
    let (cols, rows) = trajectory_rows(t);
    let refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    out.write_csv(name, &refs, &rows)?;
    Ok(())
}

fn comparison_json(a: &PopulationTrajectory, cmp: &TrajectoryComparison) -> serde_json::Value {
    let per_site: BTreeMap<&str, f64> = a
        .labels
        .iter()
        .enumerate()
        .map(|(s, l)| (l.as_str(), cmp.per_site.iter().fold(0.0f64, |m, row| m.max(row[s]))))
        .collect();
    json!({ "max_abs_deviation": cmp.max_abs_deviation, "per_site_max": per_site })
}

fn cmd_dynamics(c: &PhysicalConfig, models: &[DynModel], out: &mut OutputDir) -> Result<u8> {
    let want = |m: DynModel| models.contains(&m);
    let mut report = serde_json::Map::new();
    if want(DynModel::Full) || want(DynModel::Effective) {
        let h = compare_models(c)?;
        if want(DynModel::Full) {
            write_trajectory(out, "full.csv", &h.full)?;
        }
        if want(DynModel::Effective) {
            write_trajectory(out, "effective.csv", &h.effective)?;
        }
        if want(DynModel::Full) && want(DynModel::Effective) {
            let mut v = comparison_json(&h.full, &h.comparison);
            v["max_norm_drift"] = json!(h.max_norm_drift);
            report.insert("full_vs_effective".into(), v);
        }
    }
    if want(DynModel::Master) || want(DynModel::Eliminated) {
        let model = SegmentModel::from_config(c)?;
        let initial = if c.dynamics.initial == Species::B { SEG_B } else { SEG_A };
        let contract = IntegratorContract { rtol: c.dynamics.rtol, atol: c.dynamics.atol, ..Default::default() };
        let e = validate_elimination(&model, initial, &c.dynamics.time_grid(), &contract)?;
        if want(DynModel::Master) {
            write_trajectory(out, "master.csv", &e.master)?;
        }
        if want(DynModel::Eliminated) {
            write_trajectory(out, "eliminated.csv", &e.reduced)?;
        }
        if want(DynModel::Master) && want(DynModel::Eliminated) {
            let mut v = comparison_json(&e.master, &e.comparison);
            v["separation_ratio"] = json!(e.separation_ratio);
            v["max_trace_drift"] = json!(e.max_trace_drift);
            report.insert("master_vs_eliminated".into(), v);
        }
    }
    for (k, v) in &report {
        println!("{k}: max deviation {:.4}", v["max_abs_deviation"].as_f64().unwrap_or(f64::NAN));
    }
    out.write_json("deviation.json", &report)?;
    Ok(0)
}

fn cmd_spectrum(c: &PhysicalConfig, out: &mut OutputDir) -> Result<u8> {
    let p = Pipeline::new(c)?;
    let h = p.clean_chain()?;
    let spec = eigensolve(&h)?;
    let loc = LocalizationReport::new(&spec, c.polarization_offset)?;
    let rows: Vec<Vec<String>> = spec
        .values
        .iter()
        .enumerate()
        .map(|(i, e)| vec![i.to_string(), num(e.re / TWO_PI), num(e.im / TWO_PI)])
        .collect();
    out.write_csv("spectrum.csv", &["index", "re_E_MHz", "im_E_MHz"], &rows)?;
    let l = spec.len();
    let mut states = Vec::with_capacity(l * l);
    for n in 0..l {
        let col = spec.right.column(n);
        let norm: f64 = col.iter().map(|z| z.norm_sqr()).sum();
        for (j, z) in col.iter().enumerate() {
            states.push(vec![n.to_string(), j.to_string(), num(z.norm_sqr() / norm)]);
        }
    }
    out.write_csv("states.csv", &["state", "site", "prob"], &states)?;
    let winding = winding_from_spectrum(&spec, c.winding_cutoff_cells);
    let per_state: Vec<_> = (0..l)
        .map(|n| json!({ "index": n, "ipr": loc.ipr[n], "polarization": loc.polarization[n], "dipr": loc.dipr[n] }))
        .collect();
    let metrics = json!({
        "boundary": c.boundary.to_string(),
        "dmipr": loc.dmipr,
        "abs_dmipr": loc.dmipr.abs(),
        "edge_states": spec.edge,
        "per_state": per_state,
        "winding": match winding {
            Ok(w) => json!({ "nu_s": w.nu, "one_minus_nu": 1.0 - w.nu, "window_sites": w.window_sites, "cutoff": c.winding_cutoff_cells }),
            Err(e) => json!({ "error": e.to_string(), "cutoff": c.winding_cutoff_cells }),
        },
    });
    out.write_json("metrics.json", &metrics)?;
    println!("L = {l}, dMIPR = {:.4}, edge states {:?}", loc.dmipr, spec.edge);
    Ok(0)
}

fn cmd_disorder(c: &PhysicalConfig, a: &DisorderArgs, out: &mut OutputDir) -> Result<u8> {
    let kind: DisorderKind = a.kind.into();
    let half_width = a.half_width.unwrap_or(match kind {
        DisorderKind::Phase => c.disorder.phase_eta,
        DisorderKind::Position => c.disorder.position_half_width,
    });
    let spec = DisorderSpec {
        kind,
        half_width,
        n_realizations: a.realizations.unwrap_or(c.disorder.n_realizations),
        master_seed: c.disorder.master_seed,
    };
    let p = Pipeline::new(c)?;
    let r = ensemble_run(&p, &spec)?;
    let rows: Vec<Vec<String>> = r
        .realizations
        .iter()
        .map(|m| vec![m.index.to_string(), m.stream.to_string(), opt(m.abs_dmipr), opt(m.nu_s)])
        .collect();
    out.write_csv("ensemble.csv", &["realization", "seed", "abs_dmipr", "nu_s"], &rows)?;
    let summary = json!({
        "kind": kind,
        "half_width": half_width,
        "boundary": c.boundary.to_string(),
        "n_realizations": spec.n_realizations,
        "master_seed": spec.master_seed,
        "rng": RNG_NAME,
        "mean_abs_dmipr": r.mean_abs_dmipr,
        "std_error_abs_dmipr": r.std_error_abs_dmipr,
        "mean_dmipr": r.mean_dmipr,
        "nu": r.winding.as_ref().map(|w| w.nu),
        "one_minus_nu": r.winding.as_ref().map(|w| w.one_minus_nu),
        "std_error_nu": r.winding.as_ref().map(|w| w.std_error),
        "failures": r.failures,
    });
    out.write_json("summary.json", &summary)?;
    println!("mean |dMIPR| = {:.4} ± {:.4}, failures {}", r.mean_abs_dmipr, r.std_error_abs_dmipr, r.failures);
    Ok(0)
}

fn cmd_winding(c: &PhysicalConfig, kinds: &[KindArg], realizations: Option<usize>, out: &mut OutputDir) -> Result<u8> {
    let p = Pipeline::new(c)?;
    let n = realizations.unwrap_or(c.disorder.n_realizations);
    let mut rows = Vec::new();
    for &k in kinds {
        let kind: DisorderKind = k.into();
        let grid = match kind {
            DisorderKind::Phase => &c.disorder.phase_strengths,
            DisorderKind::Position => &c.disorder.position_strengths,
        };
        for s in strength_sweep(&p, kind, grid, n, c.disorder.master_seed)? {
            rows.push(vec![
                kind.to_string(),
                num(s.strength),
                opt(s.nu),
                opt(s.one_minus_nu),
                opt(s.std_error),
                num(s.mean_abs_dmipr),
                s.failures.to_string(),
            ]);
        }
    }
    out.write_csv(
        "winding.csv",
        &["kind", "strength", "nu", "one_minus_nu", "std_error", "mean_abs_dmipr", "failures"],
        &rows,
    )?;
    Ok(0)
}

fn cmd_sweep(c: &PhysicalConfig, kind: KindArg, out: &mut OutputDir) -> Result<u8> {
    let kind: DisorderKind = kind.into();
    let grid = match kind {
        DisorderKind::Phase => &c.disorder.phase_sweep,
        DisorderKind::Position => &c.disorder.position_sweep,
    };
    let p = Pipeline::new(c)?;
    let s = trajectory_sweep(&p, kind, grid, &c.disorder.tracked_modes)?;
    let rows: Vec<Vec<String>> = s
        .points
        .iter()
        .map(|q| {
            vec![
                num(q.delta),
                q.mode.to_string(),
                num(q.abs() / TWO_PI),
                num(q.re / TWO_PI),
                num(q.im / TWO_PI),
                u8::from(q.flagged).to_string(),
            ]
        })
        .collect();
    out.write_csv("sweep.csv", &["delta", "k", "abs_E", "re_E", "im_E", "flagged"], &rows)?;
    Ok(0)
}

fn cmd_validate(c: &PhysicalConfig, criteria: &[u8], out: &mut OutputDir) -> Result<u8> {
    let ids: Vec<u8> = if criteria.is_empty() { (1..=10).collect() } else { criteria.to_vec() };
    if let Some(bad) = ids.iter().find(|&&i| !(1..=10).contains(&i)) {
        anyhow::bail!(Error::Config { path: "--criteria".into(), message: format!("no criterion {bad}") });
    }
    let results: Vec<_> = ids.iter().map(|&i| run_criterion(i, c)).collect();
    for r in &results {
        println!("{r}");
    }
    out.write_json("validation.json", &results)?;
    Ok(if results.iter().all(|r| r.passed) { 0 } else { EXIT_ACCEPTANCE })
}
