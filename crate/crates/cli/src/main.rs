//! `fggc` command-line driver.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fggc::metrics::error_report;
use fggc::solver::Timing;
use fggc::tables::{family, mlsa_h1_table, mlsa_l2_table, Table, DP_FAMILY, DQ_FAMILY};
use fggc::{run, Exec, ExperimentConfig, FggcError, FieldFile, MeshSpec};
use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fggc", version, about = "Frozen Gaussian grid-point correction solvers")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory or file, depending on the subcommand.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 1 is fully sequential, 0 uses every core.
    #[arg(long)]
    threads: Option<usize>,
    /// Seed recorded in the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured solver and write the field and timing files.
    Solve {
        #[command(flatten)]
        common: Common,
    },
    /// Compare a candidate field against a reference field.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Mode::L2)]
        mode: Mode,
        candidate: PathBuf,
        reference: PathBuf,
    },
    /// Tabulate the worst-case least-squares error.
    Mlsa {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Mode::L2)]
        mode: Mode,
        /// Neighbor strategies, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "Q2P2,Q4P2,Q2P4,Q4P4")]
        strategies: Vec<String>,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        /// Δq/√ε values; defaults to 2, 1, 1/2, 1/4 (l2) or 1/2 (h1).
        #[arg(long, value_delimiter = ',')]
        cq: Vec<f64>,
        /// Δp/√ε values; defaults to π/2 … π/16 (l2) or π/8 (h1).
        #[arg(long, value_delimiter = ',')]
        cp: Vec<f64>,
        /// ε rows of the h1 table; defaults to 2^-6 … 2^-16.
        #[arg(long, value_delimiter = ',')]
        epsilon: Vec<f64>,
        #[arg(long, default_value_t = fggc::lsa::DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = fggc::lsa::DEFAULT_RCOND)]
        rcond: f64,
    },
    /// Median per-phase timings in sequential and parallel mode.
    Bench {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        repetitions: usize,
    },
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Mode {
    L2,
    H1,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.chain().find_map(|c| c.downcast_ref::<FggcError>()).map_or(1, FggcError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.cmd {
        Command::Solve { common } => solve(&common),
        Command::Compare { common, mode, candidate, reference } => compare(&common, mode, &candidate, &reference),
        Command::Mlsa { common, mode, strategies, dim, cq, cp, epsilon, samples, rcond } => {
            let spec = MlsaSpec { mode, strategies, dim, cq, cp, epsilon, samples, rcond };
            mlsa(&common, &spec)
        }
        Command::Bench { common, repetitions } => bench(&common, repetitions),
    }
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let Some(path) = &common.config else {
        return Err(FggcError::Config("--config is required".into()).into());
    };
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(t) = common.threads {
        cfg.threads = t;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn out_dir(common: &Common) -> Result<PathBuf> {
    let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn solve(common: &Common) -> Result<()> {
    let cfg = load_config(common)?;
    let exec = Exec::with_threads(cfg.threads);
    let (pb, out) = run(&cfg, &exec)?;
    let dir = out_dir(common)?;
    let field_path = cfg.output.field.as_ref().map_or_else(|| dir.join("field.fgcf"), |p| dir.join(p));
    let timing_path = cfg.output.timing.as_ref().map_or_else(|| dir.join("timing.json"), |p| dir.join(p));
    FieldFile::new(&pb.mesh, out.field)?.write(&field_path)?;
    write_json(&timing_path, &out.timing)?;
    println!(
        "{} eps={} packets={} total={:.3}s digest={}",
        cfg.solver.label(),
        cfg.epsilon,
        out.timing.packet_count,
        out.timing.total_s,
        cfg.digest()
    );
    Ok(())
}

/// Mesh matching a field header, for the error norms.
fn header_mesh(f: &FieldFile) -> Result<MeshSpec> {
    let h = &f.header;
    let (lo, hi) = (h.domain_lo[0], h.domain_hi[0]);
    if h.domain_lo.iter().any(|&v| v != lo) || h.domain_hi.iter().any(|&v| v != hi) {
        bail!(FggcError::GridMismatch("only cubic domains are supported".into()));
    }
    let mesh = MeshSpec::new(h.dim(), h.epsilon, h.dx(), 0.5, std::f64::consts::PI / 8.0, lo, hi, 1.0);
    if mesh.nx != h.shape {
        bail!(FggcError::GridMismatch(format!("header shape {:?} is not a uniform grid", h.shape)));
    }
    Ok(mesh)
}

fn compare(common: &Common, mode: Mode, candidate: &Path, reference: &Path) -> Result<()> {
    let digest = match &common.config {
        Some(_) => load_config(common)?.digest(),
        None => String::new(),
    };
    let a = FieldFile::read(candidate).with_context(|| format!("reading {}", candidate.display()))?;
    let b = FieldFile::read(reference).with_context(|| format!("reading {}", reference.display()))?;
    if a.header != b.header {
        bail!(FggcError::GridMismatch(format!(
            "{} and {} have different headers",
            candidate.display(),
            reference.display()
        )));
    }
    let mesh = header_mesh(&b)?;
    let report = error_report(
        (&candidate.display().to_string(), &a.field),
        (&reference.display().to_string(), &b.field),
        &mesh,
        mode == Mode::H1,
        &digest,
    )?;
    match &common.out {
        Some(p) => write_json(p, &report)?,
        None => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    Ok(())
}

struct MlsaSpec {
    mode: Mode,
    strategies: Vec<String>,
    dim: usize,
    cq: Vec<f64>,
    cp: Vec<f64>,
    epsilon: Vec<f64>,
    samples: usize,
    rcond: f64,
}

fn labelled(values: &[f64], default: &[(f64, &str)]) -> Vec<(f64, String)> {
    if values.is_empty() {
        family(default)
    } else {
        values.iter().map(|v| (*v, format!("{v}"))).collect()
    }
}

fn l2_table(spec: &MlsaSpec, strategy: &str, exec: &Exec) -> fggc::Result<Table> {
    let cq = labelled(&spec.cq, &DQ_FAMILY);
    let cp = labelled(&spec.cp, &DP_FAMILY);
    match spec.dim {
        1 => mlsa_l2_table::<1>(strategy, &cq, &cp, spec.samples, spec.rcond, exec),
        2 => mlsa_l2_table::<2>(strategy, &cq, &cp, spec.samples, spec.rcond, exec),
        3 => mlsa_l2_table::<3>(strategy, &cq, &cp, spec.samples, spec.rcond, exec),
        d => Err(FggcError::Config(format!("dimension {d} not in 1..=3"))),
    }
}

fn h1_table(spec: &MlsaSpec, exec: &Exec) -> fggc::Result<Table> {
    let one = |v: &[f64], default: f64| match v {
        [] => Ok(default),
        [x] => Ok(*x),
        _ => Err(FggcError::Config("h1 mode takes a single cq and cp".into())),
    };
    let cq = one(&spec.cq, 0.5)?;
    let cp = one(&spec.cp, std::f64::consts::PI / 8.0)?;
    let eps: Vec<f64> =
        if spec.epsilon.is_empty() { (3..=8).map(|k| 2f64.powi(-2 * k)).collect() } else { spec.epsilon.clone() };
    let names: Vec<&str> = spec.strategies.iter().map(String::as_str).collect();
    match spec.dim {
        1 => mlsa_h1_table::<1>(&names, &eps, cq, cp, spec.samples, spec.rcond, exec),
        2 => mlsa_h1_table::<2>(&names, &eps, cq, cp, spec.samples, spec.rcond, exec),
        3 => mlsa_h1_table::<3>(&names, &eps, cq, cp, spec.samples, spec.rcond, exec),
        d => Err(FggcError::Config(format!("dimension {d} not in 1..=3"))),
    }
}

fn mlsa(common: &Common, spec: &MlsaSpec) -> Result<()> {
    let exec = Exec::with_threads(common.threads.unwrap_or(1));
    let tables: Vec<(String, Table)> = match spec.mode {
        Mode::L2 => spec
            .strategies
            .iter()
            .map(|s| l2_table(spec, s, &exec).map(|t| (format!("mlsa_l2_{s}.csv"), t)))
            .collect::<fggc::Result<_>>()?,
        Mode::H1 => vec![("mlsa_h1.csv".into(), h1_table(spec, &exec)?)],
    };
    match &common.out {
        Some(_) => {
            let dir = out_dir(common)?;
            for (name, t) in &tables {
                let p = dir.join(name);
                fs::write(&p, t.to_csv()).with_context(|| format!("writing {}", p.display()))?;
            }
        }
        None => {
            for (_, t) in &tables {
                print!("{}", t.to_csv());
            }
        }
    }
    Ok(())
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn bench(common: &Common, repetitions: usize) -> Result<()> {
    if repetitions == 0 {
        bail!(FggcError::Config("repetitions must be positive".into()));
    }
    let cfg = load_config(common)?;
    let threads = common.threads.unwrap_or(0);
    let mut csv = String::from(
        "solver,mode,threads,repetitions,decompose_s,evolve_s,lsa_s,reconstruct_s,total_s,packet_count,cache_hits\n",
    );
    for (mode, exec) in [("sequential", Exec::sequential()), ("parallel", Exec::with_threads(threads))] {
        let runs: Vec<Timing> =
            (0..repetitions).map(|_| run(&cfg, &exec).map(|(_, o)| o.timing)).collect::<fggc::Result<_>>()?;
        let med = |f: fn(&Timing) -> f64| median(runs.iter().map(f).collect());
        writeln!(
            csv,
            "{},{mode},{},{repetitions},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{},{}",
            cfg.solver.label(),
            exec.threads(),
            med(|t| t.decompose_s),
            med(|t| t.evolve_s),
            med(|t| t.lsa_s),
            med(|t| t.reconstruct_s),
            med(|t| t.total_s),
            runs[0].packet_count,
            runs[0].cache_hits,
        )?;
    }
    match &common.out {
        Some(p) => fs::write(p, &csv).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{csv}"),
    }
    Ok(())
}
