//! Command-line orchestration: configuration, the full pipeline, checkpoints
//! and reports.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use log::{info, warn};
use rug::Integer;
use serde::{Deserialize, Serialize};

use crate::baker::{self, BakerContext};
use crate::embed::PrecisionPolicy;
use crate::error::{Error, Result};
use crate::field::{build_pair_system, screen_monogenic, PureQuinticField};
use crate::reduce::{self, ReductionTrace};
use crate::sieve::{self, SievePrime, SurvivorSet};
use crate::unitdata::{self, load_unit_file, prepare_units};
use crate::verify::{CandidateStatus, Coords, Reconstructor};

pub const CHECKPOINT_FORMAT: &str = "quintic-pib-checkpoint v1";
pub const DEFAULT_TIME_LIMIT_SECS: u64 = 7200;
pub const MIN_PRECISION: u32 = 100;
pub const LABELING_RULE: &str = "m_1 = least root of x^5 - m mod p, zeta = m_2 / m_1 with m_2 the next root, m_i = zeta^(i-1) m_1";

#[derive(Parser, Debug, Clone)]
#[command(name = "quintic-pib", version, about = "All generators of power integral bases in Q(m^(1/5))")]
pub struct Args {
    /// The field parameter m.
    #[arg(long)]
    pub m: i64,
    /// Unit file; defaults to data/units/m<m>.units.
    #[arg(long)]
    pub units: Option<PathBuf>,
    /// Working precision in decimal digits.
    #[arg(long, default_value_t = 250)]
    pub precision: u32,
    #[arg(long, default_value_t = sieve::DEFAULT_PRIME_COUNT)]
    pub prime_count: usize,
    /// Comma-separated sieve primes, replacing automatic selection.
    #[arg(long, value_delimiter = ',')]
    pub primes: Option<Vec<u64>>,
    /// Skip the Baker bound and the reduction and sieve with this A_R.
    #[arg(long)]
    pub bound_override: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Checkpoint file, read if present and rewritten after each sieve stage.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Write the machine-readable report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Abort if the projected first sieve stage exceeds this many seconds.
    #[arg(long, default_value_t = DEFAULT_TIME_LIMIT_SECS)]
    pub time_limit: u64,
    /// Stop after this many sieve stages, leaving the checkpoint behind.
    #[arg(long, hide = true)]
    pub stop_after_stage: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunConfig {
    pub m: i64,
    pub units_path: PathBuf,
    pub precision: u32,
    pub prime_count: usize,
    pub primes_override: Option<Vec<u64>>,
    pub bound_override: Option<u64>,
    pub threads: Option<usize>,
    pub resume_path: Option<PathBuf>,
    pub time_limit_secs: u64,
    pub stop_after_stage: Option<usize>,
}

/// `data` in the working directory if it holds unit files, else the one shipped with the crate.
pub fn default_data_dir() -> PathBuf {
    let local = PathBuf::from("data");
    if local.join("units").is_dir() {
        local
    } else {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
    }
}

impl RunConfig {
    pub fn for_m(m: i64) -> RunConfig {
        RunConfig {
            m,
            units_path: unitdata::default_unit_path(&default_data_dir(), m),
            precision: PrecisionPolicy::default().working_digits,
            prime_count: sieve::DEFAULT_PRIME_COUNT,
            primes_override: None,
            bound_override: None,
            threads: None,
            resume_path: None,
            time_limit_secs: DEFAULT_TIME_LIMIT_SECS,
            stop_after_stage: None,
        }
    }

    pub fn from_args(args: &Args) -> RunConfig {
        let mut cfg = RunConfig::for_m(args.m);
        if let Some(p) = &args.units {
            cfg.units_path = p.clone();
        }
        cfg.precision = args.precision;
        cfg.prime_count = args.prime_count;
        cfg.primes_override = args.primes.clone();
        cfg.bound_override = args.bound_override;
        cfg.threads = args.threads;
        cfg.resume_path = args.resume.clone();
        cfg.time_limit_secs = args.time_limit;
        cfg.stop_after_stage = args.stop_after_stage;
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if self.precision < MIN_PRECISION {
            return Err(Error::Config(format!("precision must be at least {MIN_PRECISION} digits")));
        }
        if self.bound_override == Some(0) {
            return Err(Error::Config("bound override must be at least 1".into()));
        }
        if let Some(b) = self.bound_override {
            if b > i16::MAX as u64 {
                return Err(Error::Config(format!("bound override {b} exceeds {}", i16::MAX)));
            }
        }
        let count = self.primes_override.as_ref().map_or(self.prime_count, Vec::len);
        if count < 2 {
            return Err(Error::Config("the sieve needs at least two primes".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("thread count must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStepReport {
    pub from: String,
    pub h_exp10: u32,
    pub to: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceReport {
    pub triple: String,
    pub steps: Vec<TraceStepReport>,
}

impl From<&ReductionTrace> for TraceReport {
    fn from(t: &ReductionTrace) -> Self {
        TraceReport {
            triple: t.triple.to_string(),
            steps: t
                .steps
                .iter()
                .map(|s| TraceStepReport { from: s.a0.to_string(), h_exp10: s.h_exp10, to: s.reduced.to_string() })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateCounts {
    pub non_integral: u64,
    pub rejected: u64,
    pub generator: u64,
}

/// Run summary; big integers are decimal strings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub m: i64,
    pub precision_digits: u32,
    pub a_b: Option<String>,
    pub log10_a_b: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub triples: Vec<String>,
    pub a_r: u64,
    pub first_reduction: Option<String>,
    pub reduction_traces: Vec<TraceReport>,
    pub primes: Vec<u64>,
    pub labeling: String,
    pub tested: u64,
    pub fractions: u64,
    pub full_fractions: u64,
    pub survivors: Vec<u64>,
    pub a1_sweep: u64,
    pub full_survivors: u64,
    pub candidates: CandidateCounts,
    pub complete: bool,
    pub solutions: Vec<Coords>,
    #[serde(skip)]
    pub wall_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub m: i64,
    pub a_r: u64,
    pub primes: Vec<u64>,
    pub stages: Vec<SurvivorSet>,
}

fn read_checkpoint(path: &Path) -> Result<Option<Checkpoint>> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(source) => return Err(Error::Io { path: path.to_path_buf(), source }),
    };
    if text.trim().is_empty() {
        return Ok(None);
    }
    let cp: Checkpoint =
        serde_json::from_str(&text).map_err(|source| Error::Json { path: path.to_path_buf(), source })?;
    if cp.format != CHECKPOINT_FORMAT {
        return Err(Error::Checkpoint { path: path.to_path_buf(), msg: format!("unknown format {:?}", cp.format) });
    }
    Ok(Some(cp))
}

fn write_checkpoint(path: &Path, cp: &Checkpoint) -> Result<()> {
    let text = serde_json::to_string(cp).map_err(|source| Error::Json { path: path.to_path_buf(), source })?;
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text).map_err(|source| Error::Io { path: tmp.clone(), source })?;
    fs::rename(&tmp, path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn check_checkpoint(path: &Path, cp: &Checkpoint, m: i64, a_r: u64, primes: &[u64]) -> Result<()> {
    let mismatch = |msg: String| Err(Error::Checkpoint { path: path.to_path_buf(), msg });
    if cp.m != m {
        return mismatch(format!("m = {} in checkpoint, {m} requested", cp.m));
    }
    if cp.a_r != a_r {
        return mismatch(format!("A_R = {} in checkpoint, {a_r} computed", cp.a_r));
    }
    if cp.primes != primes {
        return mismatch(format!("primes {:?} in checkpoint, {primes:?} requested", cp.primes));
    }
    if cp.stages.len() > primes.len() || cp.stages.iter().enumerate().any(|(n, s)| s.prime != primes[n]) {
        return mismatch("stage list does not follow the prime list".into());
    }
    Ok(())
}

struct Bounds {
    a_b: Option<Integer>,
    c1: Option<f64>,
    c2: Option<f64>,
    triples: Vec<String>,
    a_r: u64,
    traces: Vec<ReductionTrace>,
}

fn compute_bounds(cfg: &RunConfig, us: &unitdata::UnitSystem, policy: &PrecisionPolicy) -> Result<Bounds> {
    if let Some(b) = cfg.bound_override {
        info!("bound override: A_R = {b}, skipping Baker bound and reduction");
        return Ok(Bounds { a_b: None, c1: None, c2: None, triples: Vec::new(), a_r: b, traces: Vec::new() });
    }
    let ctx = BakerContext::new(us, policy)?;
    let setup = baker::prepare(&ctx)?;
    info!("A_B = {:.3e} from {} forms", setup.state.a_b.to_f64(), setup.forms.len());
    let (a_r, traces) = reduce::reduce_to_fixpoint(&setup.folded, &setup.state)?;
    let a_r = a_r.to_u64().filter(|&v| v <= i16::MAX as u64).ok_or_else(|| {
        Error::Internal(format!("reduced bound {a_r} is too large to sieve"))
    })?;
    info!("A_R = {a_r}");
    Ok(Bounds {
        a_b: Some(setup.state.a_b.clone()),
        c1: Some(setup.state.c1.to_f64()),
        c2: Some(setup.state.c2.to_f64()),
        triples: setup.selection.triples.iter().map(ToString::to_string).collect(),
        a_r,
        traces,
    })
}

fn sieve_primes(cfg: &RunConfig, us: &unitdata::UnitSystem) -> Result<Vec<SievePrime>> {
    match &cfg.primes_override {
        Some(list) => list.iter().map(|&p| SievePrime::new(p, us)).collect(),
        None => sieve::select_primes(us, cfg.prime_count),
    }
}

/// Intermediate results of a run, for callers that inspect more than the report.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub report: RunReport,
    pub units: unitdata::UnitSystem,
    pub primes: Vec<SievePrime>,
    pub stages: Vec<SurvivorSet>,
    pub full_tuples: Vec<sieve::Tuple5>,
}

/// Executes the whole pipeline for one field.
pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    run_detailed(cfg).map(|a| a.report)
}

pub fn run_detailed(cfg: &RunConfig) -> Result<RunArtifacts> {
    cfg.validate()?;
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(|| run_inner(cfg)),
        None => run_inner(cfg),
    }
}

fn run_inner(cfg: &RunConfig) -> Result<RunArtifacts> {
    let start = Instant::now();
    let m = cfg.m;
    if !screen_monogenic(m)? {
        return Err(Error::NotMonogenic(m));
    }
    let policy = PrecisionPolicy::new(cfg.precision, PrecisionPolicy::default().guard_digits)?;
    let field = PureQuinticField::new(m, &policy)?;
    let ps = build_pair_system(&field)?;
    let (us, _) = prepare_units(load_unit_file(&cfg.units_path, m)?, &ps, &policy)?;

    let bounds = compute_bounds(cfg, &us, &policy)?;
    let a_r = bounds.a_r;
    let sps = sieve_primes(cfg, &us)?;
    let primes: Vec<u64> = sps.iter().map(|s| s.p).collect();
    info!("sieve primes {primes:?}");

    let mut stages: Vec<SurvivorSet> = Vec::new();
    if let Some(path) = &cfg.resume_path {
        if let Some(cp) = read_checkpoint(path)? {
            check_checkpoint(path, &cp, m, a_r, &primes)?;
            info!("resuming after {} completed stages", cp.stages.len());
            stages = cp.stages;
        }
    }
    let limit = cfg.stop_after_stage.unwrap_or(usize::MAX);
    while stages.len() < sps.len() && stages.len() < limit {
        let sp = &sps[stages.len()];
        let tuples = match stages.last() {
            None => {
                let tables = sieve::build_tables(sp, a_r as i64);
                let projected = sieve::project_stage1_secs(sp, &tables);
                if projected > cfg.time_limit_secs as f64 {
                    return Err(Error::TimeBudget { projected_secs: projected, limit_secs: cfg.time_limit_secs });
                }
                sieve::sieve_four_term(sp, &tables)
            }
            Some(prev) => sieve::filter_survivors(sp, &prev.tuples),
        };
        info!("stage {} (p = {}): {} survivors", stages.len() + 1, sp.p, tuples.len());
        stages.push(SurvivorSet { stage: stages.len() + 1, prime: sp.p, tuples });
        if let Some(path) = &cfg.resume_path {
            let cp = Checkpoint {
                format: CHECKPOINT_FORMAT.into(),
                m,
                a_r,
                primes: primes.clone(),
                stages: stages.clone(),
            };
            write_checkpoint(path, &cp)?;
        }
    }

    let mut report = RunReport {
        m,
        precision_digits: cfg.precision,
        a_b: bounds.a_b.as_ref().map(ToString::to_string),
        log10_a_b: bounds.a_b.as_ref().map(|a| a.to_f64().log10()),
        c1: bounds.c1,
        c2: bounds.c2,
        triples: bounds.triples,
        a_r,
        first_reduction: bounds.traces.iter().filter_map(|t| t.steps.first()).map(|s| s.reduced.clone()).max().map(|v| v.to_string()),
        reduction_traces: bounds.traces.iter().map(TraceReport::from).collect(),
        primes,
        labeling: LABELING_RULE.into(),
        tested: sieve::tested_count(a_r),
        fractions: sieve::fraction_count(a_r),
        full_fractions: sieve::full_fraction_count(a_r),
        survivors: stages.iter().map(|s| s.tuples.len() as u64).collect(),
        a1_sweep: 0,
        full_survivors: 0,
        candidates: CandidateCounts::default(),
        complete: false,
        solutions: Vec::new(),
        wall_secs: 0.0,
    };
    if stages.len() < sps.len() {
        warn!("stopped after {} of {} sieve stages", stages.len(), sps.len());
        report.wall_secs = start.elapsed().as_secs_f64();
        return Ok(RunArtifacts { report, units: us, primes: sps, stages, full_tuples: Vec::new() });
    }

    let last = &stages.last().expect("at least two stages").tuples;
    let full = sieve::recover_a1(last, a_r as i64, &sps);
    report.a1_sweep = last.len() as u64 * (2 * a_r + 1);
    report.full_survivors = full.len() as u64;
    let exps: Vec<[i64; 5]> = full.iter().map(|t| t.map(i64::from)).collect();
    let rec = Reconstructor::new(&us, &policy)?;
    let (cands, set) = crate::verify::verify_candidates(&rec, &exps)?;
    for c in &cands {
        match c.status {
            CandidateStatus::NonIntegral => report.candidates.non_integral += 1,
            CandidateStatus::Rejected => report.candidates.rejected += 1,
            CandidateStatus::Generator => report.candidates.generator += 1,
            CandidateStatus::Reconstructed => {}
        }
    }
    report.solutions = set.iter().copied().collect();
    report.complete = true;
    report.wall_secs = start.elapsed().as_secs_f64();
    Ok(RunArtifacts { report, units: us, primes: sps, stages, full_tuples: full })
}

fn fmt_tuple(x: &Coords) -> String {
    format!("({}, {}, {}, {})", x[0], x[1], x[2], x[3])
}

/// Plain-text summary in the shape of a results table.
pub fn render_table(r: &RunReport) -> String {
    let mut s = String::new();
    let join = |v: &[u64]| v.iter().map(u64::to_string).collect::<Vec<_>>().join(", ");
    let _ = writeln!(s, "m = {}", r.m);
    match (&r.a_b, r.log10_a_b) {
        (Some(a), Some(l)) => {
            let _ = writeln!(s, "  A_B        = 10^{l:.2}  ({} digits)", a.len());
        }
        _ => {
            let _ = writeln!(s, "  A_B        = (bound override)");
        }
    }
    if let (Some(c1), Some(c2)) = (r.c1, r.c2) {
        let _ = writeln!(s, "  c1, c2     = {c1:.4}, {c2:.4}");
    }
    if let Some(f) = &r.first_reduction {
        let _ = writeln!(s, "  1st step   = {f}");
    }
    let _ = writeln!(s, "  A_R        = {}", r.a_r);
    let _ = writeln!(s, "  primes     = {}", join(&r.primes));
    let _ = writeln!(s, "  tested     = {}", r.tested);
    let _ = writeln!(s, "  fractions  = {} (instead of {})", r.fractions, r.full_fractions);
    let _ = writeln!(s, "  survived   = {}", join(&r.survivors));
    if r.complete {
        let _ = writeln!(s, "  a_1 sweep  = {} -> {}", r.a1_sweep, r.full_survivors);
        let sol: Vec<String> = r.solutions.iter().map(fmt_tuple).collect();
        let _ = writeln!(s, "  solutions  = {}", sol.join(", "));
    } else {
        let _ = writeln!(s, "  (incomplete: resume to finish)");
    }
    let _ = writeln!(s, "  time       = {:.1} s", r.wall_secs);
    s
}

pub fn report_json(r: &RunReport) -> String {
    serde_json::to_string_pretty(r).expect("report serialises") + "\n"
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with(args: Args) -> i32 {
    let cfg = RunConfig::from_args(&args);
    match run(&cfg) {
        Ok(report) => {
            print!("{}", render_table(&report));
            if let Some(path) = &args.report {
                if let Err(source) = fs::write(path, report_json(&report)) {
                    let e = Error::Io { path: path.clone(), source };
                    eprintln!("error: {e}");
                    return e.exit_code();
                }
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
