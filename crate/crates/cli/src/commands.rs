//! The four subcommands as library functions returning structured outcomes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use sensornet::oracle::MAX_ORACLE_QUBITS;
use sensornet::{
    build_alternating, design, enumerate_blocks, evolve, noiseless_optimum, parity_fisher,
    perp_decompose, probe_state, product_advantage_sweep, qfi_mixed, qfi_pure, rank_report,
    statevector_oracle, statevector_parity_fisher, twirl, BlockCensus, BlockDecomposition,
    DesignProblem, Error, EvolutionParams, PerpDecomposition, ProbePair, RankReport,
};

use crate::error::CliError;
use crate::report::{fmt_num, fmt_vec, AdvantageRow, ReportRow, SimulationRow};
use crate::scenario::{bundled_examples, ProbeSpec, ScenarioFile};

/// Relative agreement required between the branch-level results and the
/// qubit-level oracle.
pub const ORACLE_AGREEMENT: f64 = 1e-9;
/// Slack on the product-state bound in `advantage`.
pub const BOUND_SLACK: f64 = 1e-9;
pub const DEFAULT_SAMPLES: usize = 4096;

/// Runs `f` on a dedicated pool of `jobs` threads, or the global pool.
pub fn with_jobs<T: Send>(
    jobs: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, CliError> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(CliError::Parse("--jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

fn census_of(blocks: &BlockDecomposition) -> String {
    let mut dims = BTreeMap::new();
    for d in blocks.dims() {
        *dims.entry(d).or_insert(0) += 1;
    }
    BlockCensus {
        dims,
        multi_blocks: Vec::new(),
    }
    .summary()
}

#[derive(Debug, Clone)]
pub struct DesignOutcome {
    pub row: ReportRow,
    pub rank: RankReport,
    pub perp: PerpDecomposition,
    pub pair: ProbePair,
    pub noise: Vec<usize>,
    pub integer_mode: bool,
}

pub fn design_scenario(sc: &ScenarioFile, tol: Option<f64>) -> Result<DesignOutcome, CliError> {
    let res = sc.resolve(tol)?;
    let problem = &res.problem;
    let rank = rank_report(&res.coefficients, res.tolerances.rank)?;
    let perp = perp_decompose(problem)?;
    let pair = design(problem)?;
    let residual = pair.max_noise_residual(problem);
    if residual > res.tolerances.constraint {
        return Err(CliError::Check(format!(
            "noise residual {residual:e} exceeds tolerance {:e}",
            res.tolerances.constraint
        )));
    }
    let free = DesignProblem::new(
        res.coefficients.clone(),
        sc.signal_index,
        [],
        problem.bounds().to_vec(),
        false,
    )?;
    let noiseless = noiseless_optimum(&free)?;
    let blocks = twirl(
        &probe_state(&pair)?,
        &res.coefficients,
        problem.noise_indices(),
        res.tolerances.twirl,
    )?;
    let row = ReportRow {
        scenario: sc.name.clone(),
        sites: res.array.len(),
        qubits: res.array.total_qubits(),
        signal_index: sc.signal_index,
        qfi_optimal: pair.qfi,
        qfi_noiseless: noiseless.qfi,
        max_noise_residual: residual,
        block_census: census_of(&blocks),
        advantage_ratio: None,
    };
    row.check_finite()?;
    Ok(DesignOutcome {
        row,
        rank,
        perp,
        pair,
        noise: problem.noise_indices().iter().copied().collect(),
        integer_mode: problem.integer_mode(),
    })
}

/// Designs every file; results keep the input order.
pub fn design_files(
    paths: &[PathBuf],
    tol: Option<f64>,
    jobs: Option<usize>,
) -> Result<Vec<Result<DesignOutcome, CliError>>, CliError> {
    with_jobs(jobs, || {
        paths
            .par_iter()
            .map(|p| ScenarioFile::load(p).and_then(|sc| design_scenario(&sc, tol)))
            .collect()
    })
}

pub fn render_design(o: &DesignOutcome) -> String {
    let r = &o.row;
    let mut out = String::new();
    let dependent = if o.rank.dependent_rows.is_empty() {
        "none".to_string()
    } else {
        format!("{:?}", o.rank.dependent_rows)
    };
    let _ = writeln!(out, "scenario         {}", r.scenario);
    let _ = writeln!(
        out,
        "sensors J        {}   qubits N {}   signal k* {}   noise {:?}",
        r.sites, r.qubits, r.signal_index, o.noise
    );
    let _ = writeln!(
        out,
        "mode             {}",
        if o.integer_mode {
            "integer"
        } else {
            "continuous"
        }
    );
    let _ = writeln!(
        out,
        "rank             {} (dependent rows: {dependent})",
        o.rank.rank
    );
    let _ = writeln!(out, "f_perp           {}", fmt_vec(&o.perp.f_perp));
    let _ = writeln!(out, "dfs dimension    {}", o.perp.dfs_basis.len());
    let _ = writeln!(out, "s*               {}", fmt_vec(&o.pair.s));
    let _ = writeln!(out, "r*               {}", fmt_vec(&o.pair.r));
    let _ = writeln!(out, "qfi optimal      {}", fmt_num(r.qfi_optimal));
    let _ = writeln!(out, "qfi noiseless    {}", fmt_num(r.qfi_noiseless));
    let _ = writeln!(out, "noise residual   {:.3e}", r.max_noise_residual);
    let _ = writeln!(out, "twirl blocks     {}", r.block_census);
    out
}

#[derive(Debug, Clone, Default)]
pub struct SimulateRequest {
    pub phases: Option<Vec<f64>>,
    pub probe: Option<ProbeSpec>,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleStatus {
    Agree {
        qfi: f64,
        twirled_qfi: f64,
        parity: Option<f64>,
    },
    Skipped(String),
    Unrealizable(String),
}

impl OracleStatus {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Agree { .. } => "agree",
            Self::Skipped(_) => "skipped",
            Self::Unrealizable(_) => "unrealizable",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationOutcome {
    pub row: SimulationRow,
    pub pair: ProbePair,
    pub phases: Vec<f64>,
    pub block_census: String,
    pub norm_error: f64,
    pub oracle: OracleStatus,
}

/// Relative agreement check used for every oracle comparison.
pub fn check_agreement(what: &str, branch: f64, oracle: f64, tol: f64) -> Result<(), CliError> {
    let err = (branch - oracle).abs();
    if err <= tol * branch.abs().max(oracle.abs()).max(1.0) {
        Ok(())
    } else {
        Err(CliError::Check(format!(
            "oracle mismatch for {what}: branch level {branch}, statevector {oracle} (|diff| {err:e})"
        )))
    }
}

pub fn simulate_scenario(
    sc: &ScenarioFile,
    req: &SimulateRequest,
) -> Result<SimulationOutcome, CliError> {
    let res = sc.resolve(req.tol)?;
    let f = &res.coefficients;
    let signal = sc.signal_index;
    let noise = res.problem.noise_indices();
    let file_opts = sc.simulate.as_ref();

    let pair = match req
        .probe
        .as_ref()
        .or(file_opts.and_then(|o| o.probe.as_ref()))
    {
        Some(p) => {
            if p.s.len() != f.num_sites() || p.r.len() != f.num_sites() {
                return Err(Error::DimensionMismatch(format!(
                    "probe has {}/{} entries for {} sensors",
                    p.s.len(),
                    p.r.len(),
                    f.num_sites()
                ))
                .into());
            }
            let pair = ProbePair::new(p.s.clone(), p.r.clone(), f.row(signal));
            if !pair.in_box(res.problem.bounds(), res.tolerances.constraint) {
                return Err(
                    Error::InvalidInput("probe lies outside the qubit budget box".into()).into(),
                );
            }
            pair
        }
        None => design(&res.problem)?,
    };
    let phases = req
        .phases
        .clone()
        .or(file_opts.map(|o| o.phases.clone()))
        .unwrap_or_else(|| vec![0.0; f.num_rows()]);
    let params = EvolutionParams::new(phases.clone())?;

    let state = probe_state(&pair)?;
    let evolved = evolve(&state, &params, f)?;
    let norm_error = (evolved.norm_sqr() - 1.0).abs();
    if norm_error > res.tolerances.normalization {
        return Err(CliError::Check(format!(
            "state norm drifted by {norm_error:e} (tolerance {:e})",
            res.tolerances.normalization
        )));
    }
    let blocks = twirl(&evolved, f, noise, res.tolerances.twirl)?;
    let g = f.row(signal);
    let pure = qfi_pure(&evolved, g);
    let mixed = qfi_mixed(&blocks, g);
    let phi = phases.get(signal).copied().unwrap_or(0.0);
    let parity = match parity_fisher(&pair, f, signal, phi) {
        Ok(v) => Some(v),
        Err(Error::NotTwoBranch) => None,
        Err(e) => return Err(e.into()),
    };

    let oracle = if res.array.total_qubits() > MAX_ORACLE_QUBITS {
        OracleStatus::Skipped(format!(
            "{} qubits exceed the oracle limit of {MAX_ORACLE_QUBITS}",
            res.array.total_qubits()
        ))
    } else {
        let counts = res.array.qubit_counts();
        match statevector_oracle(
            counts,
            f,
            signal,
            noise,
            &state,
            &params,
            res.tolerances.twirl,
        ) {
            Ok(o) => {
                check_agreement("pure qfi", pure, o.qfi, ORACLE_AGREEMENT)?;
                check_agreement("twirled qfi", mixed, o.twirled_qfi, ORACLE_AGREEMENT)?;
                let sv_parity = match parity {
                    Some(p) => {
                        let sv = statevector_parity_fisher(counts, f, signal, &pair, phi)?;
                        check_agreement("parity fisher", p, sv, ORACLE_AGREEMENT)?;
                        Some(sv)
                    }
                    None => None,
                };
                OracleStatus::Agree {
                    qfi: o.qfi,
                    twirled_qfi: o.twirled_qfi,
                    parity: sv_parity,
                }
            }
            Err(e @ Error::NonIntegerEigenvalue { .. }) => {
                OracleStatus::Unrealizable(e.to_string())
            }
            Err(e) => return Err(e.into()),
        }
    };

    Ok(SimulationOutcome {
        row: SimulationRow {
            scenario: sc.name.clone(),
            qfi_pure: pure,
            qfi_twirled: mixed,
            purity: blocks.purity(),
            parity_fisher: parity,
            oracle: oracle.label().into(),
        },
        block_census: census_of(&blocks),
        pair,
        phases,
        norm_error,
        oracle,
    })
}

pub fn render_simulation(o: &SimulationOutcome) -> String {
    let r = &o.row;
    let mut out = String::new();
    let _ = writeln!(out, "scenario         {}", r.scenario);
    let _ = writeln!(out, "s                {}", fmt_vec(&o.pair.s));
    let _ = writeln!(out, "r                {}", fmt_vec(&o.pair.r));
    let _ = writeln!(out, "phases           {}", fmt_vec(&o.phases));
    let _ = writeln!(out, "qfi pure         {}", fmt_num(r.qfi_pure));
    let _ = writeln!(out, "qfi twirled      {}", fmt_num(r.qfi_twirled));
    let _ = writeln!(out, "purity           {}", fmt_num(r.purity));
    let _ = writeln!(out, "twirl blocks     {}", o.block_census);
    match r.parity_fisher {
        Some(p) => {
            let _ = writeln!(out, "parity fisher    {}", fmt_num(p));
        }
        None => {
            let _ = writeln!(out, "parity fisher    n/a (single branch)");
        }
    }
    if r.qfi_twirled < r.qfi_pure * (1.0 - 1e-9) {
        let _ = writeln!(
            out,
            "warning          probe is not noise-insensitive: twirl lost Fisher information"
        );
    }
    match &o.oracle {
        OracleStatus::Agree { .. } => {
            let _ = writeln!(
                out,
                "oracle           agree (statevector, tolerance {ORACLE_AGREEMENT:e})"
            );
        }
        OracleStatus::Skipped(why) => {
            let _ = writeln!(out, "oracle           skipped: {why}");
        }
        OracleStatus::Unrealizable(why) => {
            let _ = writeln!(out, "oracle           not run: {why}");
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct AdvantageOutcome {
    pub row: AdvantageRow,
    pub census: BlockCensus,
    pub candidates: usize,
}

pub fn advantage(
    sites: &[usize],
    samples: usize,
    jobs: Option<usize>,
) -> Result<Vec<AdvantageOutcome>, CliError> {
    if sites.is_empty() {
        return Err(CliError::Parse("no sensor counts given".into()));
    }
    with_jobs(jobs, || {
        sites
            .iter()
            .map(|&j| {
                let sc = build_alternating(j)?;
                let report = product_advantage_sweep(&sc, samples)?;
                if report.ratio > report.bound + BOUND_SLACK {
                    return Err(CliError::Check(format!(
                        "J={j}: product ratio {} exceeds bound {}",
                        report.ratio, report.bound
                    )));
                }
                Ok(AdvantageOutcome {
                    row: AdvantageRow {
                        sites: j,
                        optimal_qfi: report.optimal_qfi,
                        max_product_qfi: report.max_product_qfi,
                        ratio: report.ratio,
                        bound: report.bound,
                    },
                    census: enumerate_blocks(&sc)?,
                    candidates: report.candidates,
                })
            })
            .collect()
    })?
}

pub fn render_advantage(rows: &[AdvantageOutcome]) -> String {
    let mut out = format!(
        "{:>3}  {:>12}  {:>16}  {:>12}  {:>12}  {:>10}  {}\n",
        "J", "optimal_qfi", "max_product_qfi", "ratio", "bound", "samples", "blocks"
    );
    for o in rows {
        let r = &o.row;
        let _ = writeln!(
            out,
            "{:>3}  {:>12}  {:>16}  {:>12}  {:>12}  {:>10}  {}",
            r.sites,
            fmt_num(r.optimal_qfi),
            fmt_num(r.max_product_qfi),
            fmt_num(r.ratio),
            fmt_num(r.bound),
            o.candidates,
            o.census.summary()
        );
    }
    out
}

/// Writes the bundled scenarios as `<name>.json` into `dir`.
pub fn write_examples(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    bundled_examples()
        .into_iter()
        .map(|sc| {
            let path = dir.join(format!("{}.json", sc.name));
            std::fs::write(&path, sc.to_json() + "\n")
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            Ok(path)
        })
        .collect()
}
