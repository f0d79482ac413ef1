//! `bernmat` — seeded, reproducible experiments on random Bernoulli and
//! sign matrices: exact singularity enumeration, Monte Carlo singularity
//! estimates, smallest-singular-value tails, normal-vector
//! anticoncentration thresholds, lattice Lévy exceedance sweeps, and a
//! randomized-rounding stress suite.
//!
//! Exit codes: 0 success, 2 invalid parameters or runtime failure,
//! 3 an `--assert` criterion failed.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num::rational::Ratio;

use bernmat::experiments::{
    self as exp, ExpError, ExperimentRecord, PinnedConstants, DEFAULT_L_B_GRID, DEFAULT_T_GRID,
    LATTICE_TRIALS, NORMAL_TRIALS, ROUNDING_CASES, SMIN_TRIALS,
};
use bernmat::model::EntryModel;

/// Attempt budget per rounding case; exhausting it is the counted
/// failure mode of the suite.
const ROUNDING_BUDGET: u64 = 10_000;
/// Entry scale for rounding-suite inputs (uniform in ±scale).
const ROUNDING_ENTRY_SCALE: f64 = 50.0;
const MC_TRIALS: u64 = 100_000;

#[derive(Parser)]
#[command(name = "bernmat", version, about = "Random Bernoulli matrix experiment harness")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact singularity probability by full enumeration (2^(n²) ≤ 2³²)
    EnumSingularity {
        #[command(flatten)]
        common: Common,
        /// Entry model: bernoulli(p) in {0,1} or uniform signs in {−1,+1}
        #[arg(long, value_enum, default_value_t = ModelArg::Bernoulli)]
        model: ModelArg,
    },
    /// Monte Carlo singularity estimate over one or more dimensions
    McSingularity {
        #[command(flatten)]
        common: Common,
    },
    /// Empirical tail of the smallest singular value of B + s·11ᵀ
    SminTail {
        #[command(flatten)]
        common: Common,
    },
    /// Anticoncentration threshold of the unit normal to n−1 columns
    NormalThreshold {
        #[command(flatten)]
        common: Common,
    },
    /// Lévy exceedance curves for uniform lattice vectors, per dimension
    TheoremB {
        #[command(flatten)]
        common: Common,
    },
    /// Randomized-rounding stress suite with certificate checks
    RoundingSuite {
        #[command(flatten)]
        common: Common,
    },
}

impl Cmd {
    fn common(&self) -> &Common {
        match self {
            Cmd::EnumSingularity { common, .. }
            | Cmd::McSingularity { common }
            | Cmd::SminTail { common }
            | Cmd::NormalThreshold { common }
            | Cmd::TheoremB { common }
            | Cmd::RoundingSuite { common } => common,
        }
    }
}

#[derive(Args)]
struct Common {
    /// Dimension(s), comma separated (multi-valued only where noted)
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Entry probability, as a rational like "1/2" or a decimal
    #[arg(long, value_parser = parse_ratio, default_value = "1/2")]
    p: Ratio<i64>,
    /// Shift s ∈ [−1, 0], rational; defaults to −1/2 where applicable
    #[arg(long, value_parser = parse_ratio, allow_hyphen_values = true)]
    s: Option<Ratio<i64>>,
    /// Compressibility sparsity fraction (also the lattice spread fraction)
    #[arg(long, default_value_t = 0.25)]
    delta: f64,
    /// Compressibility approximation radius
    #[arg(long, default_value_t = 0.25)]
    nu: f64,
    /// Lattice cap slack: N = ⌊(1−p+ε)^(−n)⌋
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Anticoncentration slope bound L
    #[arg(long = "L", default_value_t = 20.0)]
    l_slope: f64,
    /// Trial budget (case count for rounding-suite); per-op default
    #[arg(long)]
    trials: Option<u64>,
    /// Master seed; every trial derives its own stream from it
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all available cores)
    #[arg(long)]
    workers: Option<usize>,
    /// Write the record here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Calibration mode: run at 10× budget and write fixtures/pinned.json
    #[arg(long)]
    pilot: bool,
    /// Check results against the pinned fixtures; exit 3 on violation
    #[arg(long = "assert")]
    assert_mode: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Bernoulli,
    Sign,
}

fn parse_ratio(s: &str) -> Result<Ratio<i64>, String> {
    bernmat::model::parse_ratio(s)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.cmd) {
        Ok(violations) if violations.is_empty() => ExitCode::SUCCESS,
        Ok(violations) => {
            for v in &violations {
                eprintln!("assert failed: {v}");
            }
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: &Cmd) -> Result<Vec<String>, ExpError> {
    let common = cmd.common();
    let workers = common.workers.unwrap_or_else(|| {
        std::thread::available_parallelism().map_or(1, std::num::NonZeroUsize::get)
    });
    let pinned = PinnedConstants::load_current();
    if common.assert_mode && common.pilot {
        return Err(ExpError::InvalidParameter(
            "--pilot and --assert are mutually exclusive".into(),
        ));
    }
    if common.assert_mode && !pinned.calibrated && needs_calibration(cmd) {
        return Err(ExpError::InvalidParameter(
            "pinned fixtures are not calibrated; run the --pilot mode first".into(),
        ));
    }
    if common.pilot {
        return pilot(cmd, common, workers);
    }

    let s_or = |default: Ratio<i64>| common.s.unwrap_or(default);
    let half_neg = Ratio::new(-1, 2);
    let (record, violations) = match cmd {
        Cmd::EnumSingularity { common, model } => {
            let n = single_n(common, 3)?;
            let model = match model {
                ModelArg::Bernoulli => EntryModel::Bernoulli(common.p),
                ModelArg::Sign => EntryModel::Sign,
            };
            let record = exp::enum_singularity_record(n, &model, workers)?;
            (record, Vec::new())
        }
        Cmd::McSingularity { common } => {
            let ns = common.n.clone().unwrap_or_else(|| vec![8, 12]);
            let trials = common.trials.unwrap_or(MC_TRIALS);
            let record = exp::mc_singularity_record(
                &ns,
                common.p,
                common.s,
                trials,
                common.seed,
                workers,
            )?;
            let violations = if common.assert_mode && ns.len() >= 2 {
                exp::check_mc_separation(&record)
            } else {
                Vec::new()
            };
            (record, violations)
        }
        Cmd::SminTail { common } => {
            let n = single_n(common, 100)?;
            let trials = common.trials.unwrap_or(SMIN_TRIALS);
            let record = exp::smin_tail_record(
                n,
                common.p,
                s_or(half_neg),
                &DEFAULT_T_GRID,
                trials,
                common.seed,
                workers,
                &pinned,
            )?;
            let violations = if common.assert_mode {
                exp::check_smin_band(&record, &pinned)
            } else {
                Vec::new()
            };
            (record, violations)
        }
        Cmd::NormalThreshold { common } => {
            let n = single_n(common, 16)?;
            let trials = common.trials.unwrap_or(NORMAL_TRIALS);
            let record = exp::normal_threshold_record(
                n,
                common.p,
                s_or(half_neg),
                common.l_slope,
                common.delta,
                common.nu,
                trials,
                common.seed,
                workers,
                &pinned,
            )?;
            let violations = if common.assert_mode {
                exp::check_normal_median(&record, &pinned)
            } else {
                Vec::new()
            };
            (record, violations)
        }
        Cmd::TheoremB { common } => {
            let ns = common.n.clone().unwrap_or_else(|| vec![10, 12, 14]);
            let trials = common.trials.unwrap_or(LATTICE_TRIALS);
            let mut grid = DEFAULT_L_B_GRID.to_vec();
            if common.assert_mode && !grid.contains(&pinned.lattice_l_b_star) {
                grid.push(pinned.lattice_l_b_star);
                grid.sort_by(f64::total_cmp);
            }
            let record = exp::theorem_b_record(
                &ns,
                common.delta,
                common.p,
                common.eps,
                &grid,
                trials,
                common.seed,
                workers,
                &pinned,
            )?;
            let violations = if common.assert_mode {
                exp::check_lattice_separation(&record, &pinned)
            } else {
                Vec::new()
            };
            (record, violations)
        }
        Cmd::RoundingSuite { common } => {
            let n = single_n(common, 12)?;
            let count = common.trials.unwrap_or(ROUNDING_CASES);
            let record = exp::rounding_suite_record(
                count,
                n,
                common.p,
                ROUNDING_ENTRY_SCALE,
                ROUNDING_BUDGET,
                common.seed,
                workers,
                &pinned,
            )?;
            let violations = if common.assert_mode {
                exp::check_rounding_thresholds(&record, &pinned)
            } else {
                Vec::new()
            };
            (record, violations)
        }
    };
    emit(&record, common)?;
    Ok(violations)
}

/// Whether `--assert` for this op compares against pilot-pinned values
/// (as opposed to structural checks that need no calibration).
fn needs_calibration(cmd: &Cmd) -> bool {
    !matches!(cmd, Cmd::EnumSingularity { .. } | Cmd::McSingularity { .. })
}

fn single_n(common: &Common, default: usize) -> Result<usize, ExpError> {
    match common.n.as_deref() {
        None => Ok(default),
        Some([n]) => Ok(*n),
        Some(_) => Err(ExpError::InvalidParameter(
            "this experiment takes a single --n".into(),
        )),
    }
}

fn emit(record: &ExperimentRecord, common: &Common) -> Result<(), ExpError> {
    let out: Box<dyn Write> = match &common.out {
        Some(path) => Box::new(std::fs::File::create(path)?),
        None => Box::new(std::io::stdout().lock()),
    };
    match common.format {
        Format::Json => exp::write_json(record, out),
        Format::Csv => exp::write_csv(record, out),
    }
}

/// Calibration pass: run the 10×-budget pilot for this op, merge the new
/// constants into the on-disk fixtures, and echo them.
fn pilot(cmd: &Cmd, common: &Common, workers: usize) -> Result<Vec<String>, ExpError> {
    let mut pinned = PinnedConstants::load_current();
    let seed = common.seed;
    match cmd {
        Cmd::EnumSingularity { .. } => {
            eprintln!("enum-singularity is exact; nothing to calibrate");
            return Ok(Vec::new());
        }
        Cmd::McSingularity { common } => {
            // no pinned constants; verify the dimension trend at 10×
            let ns = common.n.clone().unwrap_or_else(|| vec![8, 12]);
            let trials = 10 * common.trials.unwrap_or(MC_TRIALS);
            let record =
                exp::mc_singularity_record(&ns, common.p, common.s, trials, seed, workers)?;
            let violations = exp::check_mc_separation(&record);
            if !violations.is_empty() {
                return Err(ExpError::InvalidParameter(violations.join("; ")));
            }
            eprintln!("dimension trend verified at {trials} trials; nothing to pin");
            return Ok(Vec::new());
        }
        Cmd::SminTail { .. } => {
            exp::run_with_workers(workers, || exp::pilot_smin(seed, &mut pinned))??;
        }
        Cmd::NormalThreshold { .. } => {
            exp::run_with_workers(workers, || exp::pilot_normal(seed, &mut pinned))??;
        }
        Cmd::TheoremB { .. } => {
            exp::run_with_workers(workers, || exp::pilot_lattice(seed, &mut pinned))??;
        }
        Cmd::RoundingSuite { .. } => {
            exp::run_with_workers(workers, || exp::pilot_rounding(seed, &mut pinned))??;
        }
    }
    pinned.calibrated = true;
    pinned.pilot_seed = seed;
    let path = PinnedConstants::fixtures_path();
    pinned.save(&path)?;
    eprintln!("pinned constants written to {}", path.display());
    println!("{}", serde_json::to_string_pretty(&pinned)?);
    Ok(Vec::new())
}
