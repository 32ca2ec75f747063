//! Config-driven experiment runner.
//!
//! An experiment is a single JSON document: a problem (inline matrices or a
//! seeded random instance, in the same schema the instance serializer uses),
//! a generator, a method, a schedule, and run/diagnostic options. Running it
//! emits `trace.csv`, `diagnostics.csv`, and `summary.json` into an output
//! directory, all byte-deterministic for a given config, which the golden
//! tests rely on.
//!
//! The trace CSV has the fixed header
//! `k,alpha,beta,resid_norm,value_error,gap_bound,dist_to_saddle,sparsity_fraction`
//! with one row per recorded step plus a final row for the last iterate;
//! floats carry 17 significant digits so they parse back bit-exactly.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bregman::{shrinkage, BregmanGenerator, DualPair};
use crate::diagnostics::{
    all_pass, check_beg_distance_bound, check_beg_regret, check_beg_telescoped,
    check_bep_distance_bound, check_bep_per_iteration, check_bep_telescoped, check_weighted_gap,
    distance_series, gap_bound_series, gap_records_to_reports, reports_to_csv, GapRecord,
    InequalityReport,
};
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::operators::{lipschitz_from_blocks, saddle_operator, SaddleProblem};
use crate::problems::InstanceDoc;
use crate::solvers::{
    constant_beg_schedule, constant_bep_schedule, run, run_reference, validate_schedule, Method,
    ScheduleReport, StepSchedule, StoppingRule, Trace,
};

fn default_stride() -> usize {
    1
}

/// Generator selection for a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    Euclidean,
    AugmentedL1 { gamma: f64 },
    ProxRegularized { psi: PsiSpec },
}

/// Named regularizers available to `prox_regularized` configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum PsiSpec {
    /// ψ ≡ 0: behaves like the Euclidean generator.
    Zero,
    /// ψ = γ|·|₁: behaves like the augmented ℓ1 generator.
    L1 { gamma: f64 },
    /// ψ = ½|·|²: prox is u/2.
    HalfSquared,
}

impl GeneratorSpec {
    fn label(&self) -> &'static str {
        match self {
            GeneratorSpec::Euclidean => "euclidean",
            GeneratorSpec::AugmentedL1 { .. } => "augmented_l1",
            GeneratorSpec::ProxRegularized { .. } => "prox_regularized",
        }
    }

    pub fn build(&self, dimension: usize) -> Result<BregmanGenerator> {
        match self {
            GeneratorSpec::Euclidean => BregmanGenerator::euclidean(dimension),
            GeneratorSpec::AugmentedL1 { gamma } => {
                BregmanGenerator::augmented_l1(dimension, *gamma)
            }
            GeneratorSpec::ProxRegularized { psi } => match psi {
                PsiSpec::Zero => BregmanGenerator::prox_regularized(
                    dimension,
                    "zero",
                    |_| 0.0,
                    |u| u.to_vec(),
                    Some(Box::new(|u: &[f64]| vec![0.0; u.len()])),
                ),
                PsiSpec::L1 { gamma } => {
                    let g = *gamma;
                    if !(g > 0.0) {
                        return Err(Error::Config(format!(
                            "psi l1 gamma must be positive, got {g}"
                        )));
                    }
                    BregmanGenerator::prox_regularized(
                        dimension,
                        format!("l1({g})"),
                        move |u| g * u.iter().map(|x| x.abs()).sum::<f64>(),
                        move |u| shrinkage(g, u),
                        Some(Box::new(move |u: &[f64]| {
                            u.iter()
                                .map(|&x| {
                                    if x > 0.0 {
                                        g
                                    } else if x < 0.0 {
                                        -g
                                    } else {
                                        0.0
                                    }
                                })
                                .collect()
                        })),
                    )
                }
                PsiSpec::HalfSquared => BregmanGenerator::prox_regularized(
                    dimension,
                    "half_squared",
                    |u| 0.5 * dot(u, u),
                    |u| u.iter().map(|x| x / 2.0).collect(),
                    Some(Box::new(|u: &[f64]| u.to_vec())),
                ),
            },
        }
    }
}

/// Schedule selection: a constant schedule built from the problem's relative
/// Lipschitz constant (optionally overridden), or explicit lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleSpec {
    Constant {
        safety: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda: Option<f64>,
    },
    Explicit {
        alpha: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda: Option<f64>,
    },
}

impl ScheduleSpec {
    pub fn build(&self, method: Method, problem_lambda: f64) -> Result<StepSchedule> {
        match self {
            ScheduleSpec::Constant { safety, lambda } => {
                let lam = lambda.unwrap_or(problem_lambda);
                match method {
                    Method::Beg | Method::EgReference => constant_beg_schedule(lam, *safety),
                    Method::Bep | Method::OgdaReference => constant_bep_schedule(lam, *safety),
                }
            }
            ScheduleSpec::Explicit {
                alpha,
                beta,
                lambda,
            } => {
                if method.is_reference() {
                    return Err(Error::Config(
                        "reference methods use constant schedules".into(),
                    ));
                }
                if matches!(method, Method::Bep) && beta.is_none() {
                    return Err(Error::Config("bep needs an explicit beta list".into()));
                }
                StepSchedule::explicit(
                    alpha.clone(),
                    beta.clone(),
                    lambda.unwrap_or(problem_lambda),
                )
            }
        }
    }
}

/// Which diagnostic checks to run after the solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    BegRegret,
    BegTelescoped,
    BepPerIteration,
    BepTelescoped,
    DistanceBound,
    GapBound,
    WeightedGap,
}

impl CheckName {
    fn applies_to(&self, method: Method) -> bool {
        match self {
            CheckName::BegRegret | CheckName::BegTelescoped => method == Method::Beg,
            CheckName::BepPerIteration | CheckName::BepTelescoped => method == Method::Bep,
            CheckName::DistanceBound => matches!(method, Method::Beg | Method::Bep),
            CheckName::GapBound | CheckName::WeightedGap => true,
        }
    }

    fn needs_full_history(&self) -> bool {
        !matches!(self, CheckName::GapBound)
    }

    fn as_str(&self) -> &'static str {
        match self {
            CheckName::BegRegret => "beg_regret",
            CheckName::BegTelescoped => "beg_telescoped",
            CheckName::BepPerIteration => "bep_per_iteration",
            CheckName::BepTelescoped => "bep_telescoped",
            CheckName::DistanceBound => "distance_bound",
            CheckName::GapBound => "gap_bound",
            CheckName::WeightedGap => "weighted_gap",
        }
    }
}

impl std::str::FromStr for CheckName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "beg_regret" => Ok(CheckName::BegRegret),
            "beg_telescoped" => Ok(CheckName::BegTelescoped),
            "bep_per_iteration" => Ok(CheckName::BepPerIteration),
            "bep_telescoped" => Ok(CheckName::BepTelescoped),
            "distance_bound" => Ok(CheckName::DistanceBound),
            "gap_bound" => Ok(CheckName::GapBound),
            "weighted_gap" => Ok(CheckName::WeightedGap),
            other => Err(Error::Config(format!("unknown check name: {other}"))),
        }
    }
}

/// `"all"`, `"none"`, or an explicit list of check names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CheckSpec {
    Keyword(CheckKeyword),
    List(Vec<CheckName>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKeyword {
    All,
    None,
}

impl Default for CheckSpec {
    fn default() -> Self {
        CheckSpec::Keyword(CheckKeyword::All)
    }
}

impl CheckSpec {
    /// Parses the CLI form: `all`, `none`, or a comma-separated name list.
    pub fn parse_cli(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(CheckSpec::Keyword(CheckKeyword::All)),
            "none" => Ok(CheckSpec::Keyword(CheckKeyword::None)),
            list => list
                .split(',')
                .map(|part| part.trim().parse())
                .collect::<Result<Vec<_>>>()
                .map(CheckSpec::List),
        }
    }

    /// Expands to the concrete check list for a method. Explicitly named
    /// checks that do not apply to the method are a config error; `all`
    /// silently selects the applicable ones.
    pub fn expand(&self, method: Method) -> Result<Vec<CheckName>> {
        match self {
            CheckSpec::Keyword(CheckKeyword::None) => Ok(Vec::new()),
            CheckSpec::Keyword(CheckKeyword::All) => Ok([
                CheckName::BegRegret,
                CheckName::BegTelescoped,
                CheckName::BepPerIteration,
                CheckName::BepTelescoped,
                CheckName::DistanceBound,
                CheckName::GapBound,
                CheckName::WeightedGap,
            ]
            .into_iter()
            .filter(|c| c.applies_to(method))
            .collect()),
            CheckSpec::List(names) => {
                for name in names {
                    if !name.applies_to(method) {
                        return Err(Error::Config(format!(
                            "check {} does not apply to method {method}",
                            name.as_str()
                        )));
                    }
                }
                Ok(names.clone())
            }
        }
    }
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub problem: InstanceDoc,
    pub generator: GeneratorSpec,
    pub method: Method,
    pub schedule: ScheduleSpec,
    pub max_iters: usize,
    #[serde(default)]
    pub stop_tolerance: f64,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    /// Initial point; defaults to the all-ones vector.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub checks: CheckSpec,
    /// Also emit `trace.json` with full iterate vectors.
    #[serde(default)]
    pub emit_trace_json: bool,
}

/// Loads one config or a list of configs from a JSON file.
pub fn load_configs(path: &Path) -> Result<Vec<ExperimentConfig>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{} is not valid JSON: {e}", path.display())))?;
    let configs = if value.is_array() {
        serde_json::from_value(value)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
    } else {
        vec![serde_json::from_value(value)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?]
    };
    Ok(configs)
}

/// Everything a finished run produced, before anything is written out.
#[derive(Debug)]
pub struct RunArtifacts {
    pub problem: Arc<SaddleProblem>,
    pub generator: BregmanGenerator,
    pub trace: Trace,
    pub lambda: f64,
    pub reports: Vec<InequalityReport>,
    pub gap_records: Vec<GapRecord>,
    pub checks_run: Vec<CheckName>,
    pub all_checks_pass: bool,
}

/// Builds and runs the configured experiment in memory.
pub fn execute(config: &ExperimentConfig) -> Result<RunArtifacts> {
    let problem = config.problem.build()?;
    let dim = problem.joint_dimension();
    if config.method.is_reference() && config.generator != GeneratorSpec::Euclidean {
        return Err(Error::Config(format!(
            "method {} is the Euclidean oracle; it does not take a {} generator",
            config.method,
            config.generator.label()
        )));
    }
    let generator = config.generator.build(dim)?;
    let op = saddle_operator(&problem);
    let lipschitz = lipschitz_from_blocks(&problem.blocks())?;
    let lambda = lipschitz / generator.modulus();
    let schedule = config.schedule.build(config.method, lambda)?;

    let checks = config.checks.expand(config.method)?;
    if config.record_stride == 0 {
        return Err(Error::Config("record_stride must be at least 1".into()));
    }
    if config.record_stride > 1 && checks.iter().any(|c| c.needs_full_history()) {
        return Err(Error::Config(
            "record_stride must be 1 when per-iteration checks are enabled".into(),
        ));
    }

    let u0 = match &config.u0 {
        Some(v) => {
            if v.len() != dim {
                return Err(Error::Config(format!(
                    "u0 has length {}, problem dimension is {dim}",
                    v.len()
                )));
            }
            v.clone()
        }
        None => vec![1.0; dim],
    };
    let stop = StoppingRule::residual(config.stop_tolerance);

    let trace = if config.method.is_reference() {
        let eta = schedule.alpha(0);
        run_reference(
            config.method,
            &op,
            eta,
            &u0,
            config.max_iters,
            stop,
            config.record_stride,
        )?
    } else {
        let init = DualPair::from_primal(&generator, &u0)?;
        run(
            config.method,
            &generator,
            &op,
            &schedule,
            init,
            config.max_iters,
            stop,
            config.record_stride,
        )?
    };

    let mut reports = Vec::new();
    let mut gap_records = Vec::new();
    let z_bar = problem.saddle_joint();
    for check in &checks {
        match check {
            CheckName::GapBound => {
                gap_records = gap_bound_series(&generator, &problem, &trace)?;
                reports.extend(gap_records_to_reports(&gap_records));
            }
            CheckName::WeightedGap => {
                reports.extend(check_weighted_gap(&problem, &trace)?);
            }
            CheckName::BegRegret
            | CheckName::BegTelescoped
            | CheckName::DistanceBound
            | CheckName::BepPerIteration
            | CheckName::BepTelescoped => {
                let z = z_bar.as_ref().ok_or_else(|| {
                    Error::Unsupported("check needs an exact saddle oracle".into())
                })?;
                let z_star = generator.subgrad(z)?;
                reports.extend(match check {
                    CheckName::BegRegret => check_beg_regret(&generator, &op, &trace, z, &z_star)?,
                    CheckName::BegTelescoped => {
                        check_beg_telescoped(&generator, &op, &trace, z, &z_star)?
                    }
                    CheckName::BepPerIteration => {
                        check_bep_per_iteration(&generator, &op, &trace, z, &z_star, lambda)?
                    }
                    CheckName::BepTelescoped => {
                        check_bep_telescoped(&generator, &op, &trace, z, &z_star, lambda)?
                    }
                    CheckName::DistanceBound => match config.method {
                        Method::Beg => check_beg_distance_bound(&generator, &trace, z, &z_star)?,
                        Method::Bep => {
                            check_bep_distance_bound(&generator, &trace, z, &z_star, lambda)?
                        }
                        _ => unreachable!("applies_to filters references"),
                    },
                    _ => unreachable!(),
                });
            }
        }
    }
    let all_checks_pass = all_pass(&reports);
    Ok(RunArtifacts {
        problem,
        generator,
        trace,
        lambda,
        reports,
        gap_records,
        checks_run: checks,
        all_checks_pass,
    })
}

// ---------------------------------------------------------------------------
// artifact writers
// ---------------------------------------------------------------------------

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn sparsity_fraction(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.iter().filter(|x| **x == 0.0).count() as f64 / v.len() as f64
}

/// Renders the trace CSV. One row per recorded step (carrying the state at
/// its start), plus a final row for the last iterate with the step columns
/// empty.
pub fn trace_to_csv(artifacts: &RunArtifacts) -> String {
    let RunArtifacts {
        problem,
        generator,
        trace,
        gap_records,
        ..
    } = artifacts;
    let f_star = problem.saddle_value();
    let z_bar = problem.saddle_joint();
    let dist: Option<Vec<(usize, f64)>> =
        z_bar.as_ref().map(|z| distance_series(generator, trace, z));
    let dist_at = |k: usize| -> Option<f64> {
        dist.as_ref()
            .and_then(|d| d.iter().find(|(kk, _)| *kk == k).map(|(_, v)| *v))
    };
    let gap_at =
        |k: usize| -> Option<f64> { gap_records.iter().find(|g| g.k == k).map(|g| g.bound_rhs) };

    let mut out = String::from(
        "k,alpha,beta,resid_norm,value_error,gap_bound,dist_to_saddle,sparsity_fraction\n",
    );
    let opt = |v: Option<f64>| v.map(fmt_float).unwrap_or_default();
    for step in &trace.steps {
        let value_error = f_star.map(|fs| {
            let (x_hat, y_hat) = problem.split(&step.averaged).expect("conformable");
            (problem.value(x_hat, y_hat) - fs).abs()
        });
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            step.k,
            fmt_float(step.alpha),
            opt(step.beta),
            fmt_float(step.residual_norm),
            opt(value_error),
            opt(gap_at(step.k)),
            opt(dist_at(step.k)),
            fmt_float(sparsity_fraction(&step.z)),
        ));
    }
    let final_k = *trace.iterate_ks.last().expect("nonempty trace");
    let final_pair = trace.final_pair();
    out.push_str(&format!(
        "{},,,,,,{},{}\n",
        final_k,
        opt(dist_at(final_k)),
        fmt_float(sparsity_fraction(&final_pair.primal)),
    ));
    out
}

/// Full-vector trace serialization (the JSON side of the trace interface).
pub fn trace_to_json(trace: &Trace) -> Result<String> {
    #[derive(Serialize)]
    struct PairJson<'a> {
        primal: &'a [f64],
        dual: &'a [f64],
    }
    #[derive(Serialize)]
    struct StepJson<'a> {
        k: usize,
        alpha: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        beta: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        midpoint: Option<&'a [f64]>,
        z: &'a [f64],
        averaged: &'a [f64],
        weight_sum: f64,
        residual_norm: f64,
    }
    #[derive(Serialize)]
    struct TraceJson<'a> {
        method: Method,
        lambda: f64,
        heuristic_lambda: bool,
        stride: usize,
        total_steps: usize,
        operator_calls: usize,
        #[serde(skip_serializing_if = "Option::is_none")]
        stopped_at: Option<usize>,
        iterate_ks: &'a [usize],
        iterates: Vec<PairJson<'a>>,
        steps: Vec<StepJson<'a>>,
    }
    let doc = TraceJson {
        method: trace.method,
        lambda: trace.lambda,
        heuristic_lambda: trace.heuristic_lambda,
        stride: trace.stride,
        total_steps: trace.total_steps,
        operator_calls: trace.operator_calls,
        stopped_at: trace.stopped_at,
        iterate_ks: &trace.iterate_ks,
        iterates: trace
            .iterates
            .iter()
            .map(|p| PairJson {
                primal: &p.primal,
                dual: &p.dual,
            })
            .collect(),
        steps: trace
            .steps
            .iter()
            .map(|s| StepJson {
                k: s.k,
                alpha: s.alpha,
                beta: s.beta,
                midpoint: s.midpoint.as_deref(),
                z: &s.z,
                averaged: &s.averaged,
                weight_sum: s.weight_sum,
                residual_norm: s.residual_norm,
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

/// Deterministic run summary (everything here is a pure function of the
/// config, so golden files stay byte-stable).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub final_residual: Option<f64>,
    pub iterations: usize,
    pub value_error_series_summary: Option<ValueErrorSummary>,
    pub all_inequalities_pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValueErrorSummary {
    pub count: usize,
    pub first: f64,
    pub last: f64,
    pub max: f64,
}

pub fn summarize(artifacts: &RunArtifacts) -> Summary {
    let RunArtifacts { problem, trace, .. } = artifacts;
    let value_error_series_summary = problem.saddle_value().map(|f_star| {
        let errors: Vec<f64> = trace
            .steps
            .iter()
            .map(|s| {
                let (x_hat, y_hat) = problem.split(&s.averaged).expect("conformable");
                (problem.value(x_hat, y_hat) - f_star).abs()
            })
            .collect();
        ValueErrorSummary {
            count: errors.len(),
            first: errors.first().copied().unwrap_or(0.0),
            last: errors.last().copied().unwrap_or(0.0),
            max: errors.iter().fold(0.0f64, |m, e| m.max(*e)),
        }
    });
    Summary {
        final_residual: trace.final_residual(),
        iterations: trace.total_steps,
        value_error_series_summary,
        all_inequalities_pass: artifacts.all_checks_pass,
    }
}

/// Runs a config and writes `trace.csv`, `diagnostics.csv`, `summary.json`
/// (and optionally `trace.json`) into the output directory. Returns the
/// artifacts for further inspection.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<RunArtifacts> {
    let artifacts = execute(config)?;
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("trace.csv"), trace_to_csv(&artifacts))?;
    std::fs::write(
        out_dir.join("diagnostics.csv"),
        reports_to_csv(&artifacts.reports),
    )?;
    let summary = summarize(&artifacts);
    std::fs::write(
        out_dir.join("summary.json"),
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;
    if config.emit_trace_json {
        std::fs::write(out_dir.join("trace.json"), trace_to_json(&artifacts.trace)?)?;
    }
    Ok(artifacts)
}

// ---------------------------------------------------------------------------
// run comparison
// ---------------------------------------------------------------------------

/// Divergence between two runs: per recorded iterate, the max coordinate
/// difference of the primal iterates.
#[derive(Debug, Clone)]
pub struct CompareReport {
    pub per_k: Vec<(usize, f64)>,
    pub max_diff: f64,
    pub argmax_k: usize,
    pub len_a: usize,
    pub len_b: usize,
    /// Set when a tolerance was given: max_diff ≤ tolerance and equal
    /// iterate counts.
    pub pass: Option<bool>,
}

/// Runs both configs and compares their iterate sequences. The configs must
/// describe the identical problem; methods and generators may differ (that
/// is the point).
pub fn compare_runs(
    config_a: &ExperimentConfig,
    config_b: &ExperimentConfig,
    tolerance: Option<f64>,
) -> Result<CompareReport> {
    if config_a.problem != config_b.problem {
        return Err(Error::InvalidArgument(
            "compared configs must share the identical problem".into(),
        ));
    }
    let a = execute(config_a)?;
    let b = execute(config_b)?;
    let len_a = a.trace.iterates.len();
    let len_b = b.trace.iterates.len();
    let mut per_k = Vec::new();
    let mut max_diff = 0.0f64;
    let mut argmax_k = 0;
    for ((pair_a, &ka), (pair_b, &kb)) in a
        .trace
        .iterates
        .iter()
        .zip(&a.trace.iterate_ks)
        .zip(b.trace.iterates.iter().zip(&b.trace.iterate_ks))
    {
        if ka != kb {
            return Err(Error::InvalidArgument(
                "compared traces record different iterate indices".into(),
            ));
        }
        if pair_a.primal.len() != pair_b.primal.len() {
            return Err(Error::DimensionMismatch {
                expected: pair_a.primal.len(),
                got: pair_b.primal.len(),
            });
        }
        let diff = pair_a
            .primal
            .iter()
            .zip(&pair_b.primal)
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        if diff > max_diff {
            max_diff = diff;
            argmax_k = ka;
        }
        per_k.push((ka, diff));
    }
    let pass = tolerance.map(|tol| max_diff <= tol && len_a == len_b);
    Ok(CompareReport {
        per_k,
        max_diff,
        argmax_k,
        len_a,
        len_b,
        pass,
    })
}

/// Builds the schedule a config describes and validates it over a horizon.
pub fn schedule_report(config: &ExperimentConfig, horizon: usize) -> Result<ScheduleReport> {
    let problem = config.problem.build()?;
    let generator = config.generator.build(problem.joint_dimension())?;
    let lipschitz = lipschitz_from_blocks(&problem.blocks())?;
    let lambda = lipschitz / generator.modulus();
    let schedule = config.schedule.build(config.method, lambda)?;
    let method = match config.method {
        Method::EgReference => Method::Beg,
        Method::OgdaReference => Method::Bep,
        m => m,
    };
    Ok(validate_schedule(method, &schedule, horizon))
}
