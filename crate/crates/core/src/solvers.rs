//! The Bregman extragradient (BEG) and Bregman extrapolation (BEP)
//! iterations, step-size schedules with validated feasibility conditions,
//! ergodic averaging, and plain Euclidean reference implementations used as
//! independent oracles in equivalence tests.
//!
//! BEG keeps a dual-primal pair (u_k, u*_k) and performs two operator
//! evaluations per step:
//!
//! ```text
//! ū_k     = ∇ω*(u*_k - α_k F(u_k))
//! u*_{k+1} = u*_k - α_k F(ū_k)
//! u_{k+1}  = ∇ω*(u*_{k+1})
//! ```
//!
//! BEP extrapolates with the previous operator value and needs only one new
//! evaluation per step:
//!
//! ```text
//! u*_{k+1} = u*_k - α_k F(u_k) - α_k β_k (F(u_k) - F(u_{k-1}))
//! u_{k+1}  = ∇ω*(u*_{k+1})
//! ```
//!
//! with the convention u_{-1} = u_0, so the extrapolation term vanishes at
//! k = 0.
//!
//! Feasibility conditions: BEG needs 0 < λα_k ≤ 1; BEP needs
//! α_k β_k = α_{k-1} together with λ(α_k + α_{k-1}) ≤ 1, and a margin
//! λα_k ≤ 1 - ρ for boundedness. With the Euclidean generator BEG is exactly
//! the classical extragradient method and BEP with β ≡ 1 is exactly optimistic
//! gradient descent ascent.

use crate::bregman::{BregmanGenerator, DualPair, PAIR_CHECK_TOL};
use crate::error::{Error, Result};
use crate::linalg::{all_finite, norm, sub, sub_scaled};
use crate::operators::OperatorHandle;

/// Which iteration a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Beg,
    Bep,
    EgReference,
    OgdaReference,
}

impl Method {
    pub fn is_reference(&self) -> bool {
        matches!(self, Method::EgReference | Method::OgdaReference)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Method::Beg => "beg",
            Method::Bep => "bep",
            Method::EgReference => "eg_reference",
            Method::OgdaReference => "ogda_reference",
        };
        f.write_str(s)
    }
}

/// Comparison slack for schedule feasibility checks; absorbs the one-ulp
/// noise of building α = safety/λ and re-multiplying by λ.
const SCHEDULE_TOL: f64 = 1e-12;

/// A step-size sequence: constant or an explicit list (extended by its last
/// value past the end).
#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleSeq {
    Constant(f64),
    Explicit(Vec<f64>),
}

impl ScheduleSeq {
    pub fn at(&self, k: usize) -> f64 {
        match self {
            ScheduleSeq::Constant(v) => *v,
            ScheduleSeq::Explicit(vs) => {
                if vs.is_empty() {
                    f64::NAN
                } else {
                    vs[k.min(vs.len() - 1)]
                }
            }
        }
    }
}

/// Step sizes α_k (and β_k for BEP) plus the relative Lipschitz constant λ
/// they are validated against and the optional boundedness margin ρ.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSchedule {
    pub alpha: ScheduleSeq,
    pub beta: Option<ScheduleSeq>,
    pub lambda: f64,
    pub rho: Option<f64>,
    /// Set when λ came from a sampling estimate rather than certified block
    /// constants; propagated into traces.
    pub heuristic: bool,
}

impl StepSchedule {
    pub fn alpha(&self, k: usize) -> f64 {
        self.alpha.at(k)
    }

    pub fn beta(&self, k: usize) -> f64 {
        self.beta.as_ref().map_or(0.0, |b| b.at(k))
    }

    /// α_{k-1} with the convention α_{-1} := α₀β₀, under which the coupling
    /// condition holds at k = 0 by construction (the initial extrapolation
    /// term is zero anyway, so the value is immaterial).
    pub fn alpha_prev(&self, k: usize) -> f64 {
        if k == 0 {
            self.alpha(0) * self.beta(0)
        } else {
            self.alpha(k - 1)
        }
    }

    /// Flags the schedule as derived from a sampled (uncertified) Lipschitz
    /// estimate; the flag is copied into traces.
    pub fn mark_heuristic(mut self) -> Self {
        self.heuristic = true;
        self
    }

    /// Explicit list schedule. `beta` is required for BEP runs.
    pub fn explicit(alpha: Vec<f64>, beta: Option<Vec<f64>>, lambda: f64) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::InvalidArgument("alpha list must be nonempty".into()));
        }
        if !(lambda > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        Ok(Self {
            alpha: ScheduleSeq::Explicit(alpha),
            beta: beta.map(ScheduleSeq::Explicit),
            lambda,
            rho: None,
            heuristic: false,
        })
    }
}

/// Constant BEG schedule α ≡ safety/λ; feasible for any safety in (0, 1].
pub fn constant_beg_schedule(lambda: f64, safety: f64) -> Result<StepSchedule> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    if !(safety > 0.0 && safety <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "safety must lie in (0, 1], got {safety}"
        )));
    }
    Ok(StepSchedule {
        alpha: ScheduleSeq::Constant(safety / lambda),
        beta: None,
        lambda,
        rho: None,
        heuristic: false,
    })
}

/// Constant BEP schedule α ≡ safety/(2λ), β ≡ 1, with boundedness margin
/// ρ = 1 - safety/2; feasible for any safety in (0, 1).
pub fn constant_bep_schedule(lambda: f64, safety: f64) -> Result<StepSchedule> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    if !(safety > 0.0 && safety < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "safety must lie in (0, 1), got {safety}"
        )));
    }
    Ok(StepSchedule {
        alpha: ScheduleSeq::Constant(safety / (2.0 * lambda)),
        beta: Some(ScheduleSeq::Constant(1.0)),
        lambda,
        rho: Some(1.0 - safety / 2.0),
        heuristic: false,
    })
}

/// A schedule feasibility violation: which condition failed and where.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleViolation {
    pub k: usize,
    pub condition: String,
}

/// Outcome of checking a schedule against the method's feasibility
/// conditions over a horizon.
#[derive(Debug, Clone)]
pub struct ScheduleReport {
    pub method: Method,
    pub horizon: usize,
    pub first_violation: Option<ScheduleViolation>,
}

impl ScheduleReport {
    pub fn is_feasible(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Checks the step-size conditions for k = 0..horizon-1 and reports the
/// first violation, if any. Reference methods validate as their BEG/BEP
/// counterparts.
pub fn validate_schedule(
    method: Method,
    schedule: &StepSchedule,
    horizon: usize,
) -> ScheduleReport {
    let lambda = schedule.lambda;
    let mut first_violation = None;
    'scan: for k in 0..horizon.max(1) {
        let alpha = schedule.alpha(k);
        let checks: Vec<(bool, String)> = match method {
            Method::Beg | Method::EgReference => vec![
                (
                    alpha > 0.0,
                    format!("alpha_k must be positive, got {alpha}"),
                ),
                (
                    lambda * alpha <= 1.0 + SCHEDULE_TOL,
                    format!("lambda*alpha_k = {} exceeds 1", lambda * alpha),
                ),
            ],
            Method::Bep | Method::OgdaReference => {
                let beta = schedule.beta(k);
                let alpha_prev = schedule.alpha_prev(k);
                let mut v = vec![
                    (
                        alpha > 0.0,
                        format!("alpha_k must be positive, got {alpha}"),
                    ),
                    (
                        beta >= 0.0,
                        format!("beta_k must be nonnegative, got {beta}"),
                    ),
                    (
                        (alpha * beta - alpha_prev).abs()
                            <= SCHEDULE_TOL * alpha_prev.abs().max(1.0),
                        format!(
                            "coupling alpha_k*beta_k = {} differs from alpha_(k-1) = {}",
                            alpha * beta,
                            alpha_prev
                        ),
                    ),
                    (
                        lambda * (alpha + alpha_prev) <= 1.0 + SCHEDULE_TOL,
                        format!(
                            "lambda*(alpha_k + alpha_(k-1)) = {} exceeds 1",
                            lambda * (alpha + alpha_prev)
                        ),
                    ),
                ];
                if let Some(rho) = schedule.rho {
                    v.push((
                        rho > 0.0 && lambda * alpha <= 1.0 - rho + SCHEDULE_TOL,
                        format!(
                            "margin condition lambda*alpha_k = {} exceeds 1 - rho = {}",
                            lambda * alpha,
                            1.0 - rho
                        ),
                    ));
                }
                v
            }
        };
        for (ok, condition) in checks {
            if !ok {
                first_violation = Some(ScheduleViolation { k, condition });
                break 'scan;
            }
        }
    }
    ScheduleReport {
        method,
        horizon,
        first_violation,
    }
}

/// Mutable state of a BEG/BEP run: the current dual-primal pair, the last
/// midpoint (BEG), the cached operator value F(u_{k-1}) (BEP), and the step
/// counter.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub pair: DualPair,
    /// ū_{k-1} computed during the most recent BEG step.
    pub midpoint: Option<Vec<f64>>,
    /// F(u_{k-1}) cached by the most recent BEP step; `None` encodes the
    /// initial condition u_{-1} = u_0 under which the extrapolation is zero.
    pub prev_operator: Option<Vec<f64>>,
    pub k: usize,
}

impl SolverState {
    pub fn initial(pair: DualPair) -> Self {
        Self {
            pair,
            midpoint: None,
            prev_operator: None,
            k: 0,
        }
    }
}

/// What one solver step produced, beyond the new state: the point entering
/// the ergodic average, the measured residual norm, and the operator
/// evaluation count.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub state: SolverState,
    /// ū_k for BEG, u_{k+1} for BEP: the iterate fed to the average.
    pub averaged_point: Vec<f64>,
    /// |F(ū_k)| for BEG, |F(u_k)| for BEP.
    pub residual_norm: f64,
    pub operator_evals: usize,
}

/// One BEG step: forecast at F(u_k), correct at F(ū_k). Two operator
/// evaluations.
pub fn beg_step(
    gen: &BregmanGenerator,
    op: &OperatorHandle,
    state: &SolverState,
    alpha: f64,
) -> Result<StepOutput> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let k = state.k;
    let u = &state.pair.primal;
    let u_star = &state.pair.dual;
    let f_u = op.apply(u)?;
    if !all_finite(&f_u) {
        return Err(Error::NumericalBreakdown { k });
    }
    let midpoint = gen.mirror(&sub_scaled(u_star, alpha, &f_u));
    let f_mid = op.apply(&midpoint)?;
    if !all_finite(&f_mid) {
        return Err(Error::NumericalBreakdown { k });
    }
    let dual_next = sub_scaled(u_star, alpha, &f_mid);
    let pair = DualPair::from_dual(gen, &dual_next);
    if !all_finite(&pair.primal) || !all_finite(&pair.dual) {
        return Err(Error::NumericalBreakdown { k });
    }
    let residual_norm = norm(&f_mid);
    Ok(StepOutput {
        state: SolverState {
            pair,
            midpoint: Some(midpoint.clone()),
            prev_operator: None,
            k: k + 1,
        },
        averaged_point: midpoint,
        residual_norm,
        operator_evals: 2,
    })
}

/// One BEP step: extrapolate with F(u_k) - F(u_{k-1}). Exactly one new
/// operator evaluation; the previous value is carried in the state.
pub fn bep_step(
    gen: &BregmanGenerator,
    op: &OperatorHandle,
    state: &SolverState,
    alpha: f64,
    beta: f64,
) -> Result<StepOutput> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    if !(beta >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "beta must be nonnegative, got {beta}"
        )));
    }
    let k = state.k;
    let u = &state.pair.primal;
    let u_star = &state.pair.dual;
    let f_u = op.apply(u)?;
    if !all_finite(&f_u) {
        return Err(Error::NumericalBreakdown { k });
    }
    // ΔF_k = F(u_k) - F(u_{k-1}); zero under the initial condition u_{-1} = u_0
    let step_dual = match &state.prev_operator {
        Some(f_prev) => {
            let delta = sub(&f_u, f_prev);
            sub_scaled(&sub_scaled(u_star, alpha, &f_u), alpha * beta, &delta)
        }
        None => sub_scaled(u_star, alpha, &f_u),
    };
    let pair = DualPair::from_dual(gen, &step_dual);
    if !all_finite(&pair.primal) || !all_finite(&pair.dual) {
        return Err(Error::NumericalBreakdown { k });
    }
    let residual_norm = norm(&f_u);
    let averaged_point = pair.primal.clone();
    Ok(StepOutput {
        state: SolverState {
            pair,
            midpoint: None,
            prev_operator: Some(f_u),
            k: k + 1,
        },
        averaged_point,
        residual_norm,
        operator_evals: 1,
    })
}

/// Ergodic average update: s_k = s_{k-1} + r_k and
/// ẑ_k = (s_{k-1} ẑ_{k-1} + r_k z_k)/s_k, i.e. ẑ_k = (1/s_k) Σ r_i z_i.
pub fn update_average(
    z_hat_prev: &[f64],
    s_prev: f64,
    z: &[f64],
    r: f64,
) -> Result<(Vec<f64>, f64)> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "weight must be positive, got {r}"
        )));
    }
    if s_prev == 0.0 {
        return Ok((z.to_vec(), r));
    }
    let s = s_prev + r;
    let z_hat = z_hat_prev
        .iter()
        .zip(z)
        .map(|(zh, zi)| (s_prev * zh + r * zi) / s)
        .collect();
    Ok((z_hat, s))
}

/// Residual-norm stopping rule; a tolerance of 0 never fires.
#[derive(Debug, Clone, Copy)]
pub struct StoppingRule {
    pub residual_tolerance: f64,
}

impl StoppingRule {
    pub fn none() -> Self {
        Self {
            residual_tolerance: 0.0,
        }
    }

    pub fn residual(tol: f64) -> Self {
        Self {
            residual_tolerance: tol,
        }
    }
}

/// One recorded step of a run.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub k: usize,
    pub alpha: f64,
    pub beta: Option<f64>,
    /// ū_k for BEG steps.
    pub midpoint: Option<Vec<f64>>,
    /// The iterate averaged at this step (ū_k for BEG, u_{k+1} for BEP).
    pub z: Vec<f64>,
    /// Running ergodic average ẑ_k after this step.
    pub averaged: Vec<f64>,
    /// Running weight sum s_k = Σ_{i≤k} r_i.
    pub weight_sum: f64,
    /// |F(ū_k)| for BEG, |F(u_k)| for BEP.
    pub residual_norm: f64,
}

/// Full record of a run: recorded iterates (u_k, u*_k), recorded steps, and
/// run-level counters. With `stride = 1` every iterate and step is present;
/// thinned traces keep every stride-th entry plus the final one, while the
/// ergodic average and residual extrema are still exact over all steps.
#[derive(Debug, Clone)]
pub struct Trace {
    pub method: Method,
    pub lambda: f64,
    pub heuristic_lambda: bool,
    pub stride: usize,
    /// Iterate indices k matching `iterates` entry-by-entry.
    pub iterate_ks: Vec<usize>,
    pub iterates: Vec<DualPair>,
    pub steps: Vec<StepRecord>,
    pub operator_calls: usize,
    /// Number of steps actually taken (equals `max_iters` unless stopped).
    pub total_steps: usize,
    /// Step index at which the stopping rule fired, if it did.
    pub stopped_at: Option<usize>,
    pub residual_min: f64,
    pub residual_max: f64,
}

impl Trace {
    pub fn full_history(&self) -> bool {
        self.stride == 1
    }

    pub fn initial_pair(&self) -> &DualPair {
        &self.iterates[0]
    }

    pub fn final_pair(&self) -> &DualPair {
        self.iterates
            .last()
            .expect("trace has at least the initial iterate")
    }

    pub fn final_residual(&self) -> Option<f64> {
        self.steps.last().map(|s| s.residual_norm)
    }

    /// Iterate u_k by step index, available only on full-history traces.
    pub fn iterate(&self, k: usize) -> Result<&DualPair> {
        if !self.full_history() {
            return Err(Error::Unsupported(
                "thinned trace does not hold every iterate".into(),
            ));
        }
        self.iterates
            .get(k)
            .ok_or_else(|| Error::InvalidArgument(format!("iterate index {k} out of range")))
    }
}

/// Runs BEG or BEP for up to `max_iters` steps. The schedule is validated
/// for the whole horizon first; averaging follows the method's convention
/// (BEG averages ū_k, BEP averages u_{k+1}, both with weight α_k).
#[allow(clippy::too_many_arguments)]
pub fn run(
    method: Method,
    gen: &BregmanGenerator,
    op: &OperatorHandle,
    schedule: &StepSchedule,
    init: DualPair,
    max_iters: usize,
    stop: StoppingRule,
    stride: usize,
) -> Result<Trace> {
    if method.is_reference() {
        return Err(Error::InvalidArgument(
            "run() drives beg/bep; use run_reference for the Euclidean oracles".into(),
        ));
    }
    if stride == 0 {
        return Err(Error::InvalidArgument(
            "record stride must be at least 1".into(),
        ));
    }
    let report = validate_schedule(method, schedule, max_iters.max(1));
    if let Some(v) = report.first_violation {
        return Err(Error::ScheduleViolation {
            k: v.k,
            condition: v.condition,
        });
    }
    let mismatch = init.consistency_error(gen);
    if mismatch > PAIR_CHECK_TOL {
        return Err(Error::InconsistentDual {
            mismatch,
            tolerance: PAIR_CHECK_TOL,
        });
    }

    let mut trace = Trace {
        method,
        lambda: schedule.lambda,
        heuristic_lambda: schedule.heuristic,
        stride,
        iterate_ks: vec![0],
        iterates: vec![init.clone()],
        steps: Vec::new(),
        operator_calls: 0,
        total_steps: 0,
        stopped_at: None,
        residual_min: f64::INFINITY,
        residual_max: f64::NEG_INFINITY,
    };
    let mut state = SolverState::initial(init);
    let mut avg: Vec<f64> = Vec::new();
    let mut weight_sum = 0.0;

    for k in 0..max_iters {
        let alpha = schedule.alpha(k);
        let out = match method {
            Method::Beg => beg_step(gen, op, &state, alpha)?,
            Method::Bep => bep_step(gen, op, &state, alpha, schedule.beta(k))?,
            _ => unreachable!(),
        };
        trace.operator_calls += out.operator_evals;
        let (new_avg, new_sum) = update_average(&avg, weight_sum, &out.averaged_point, alpha)?;
        avg = new_avg;
        weight_sum = new_sum;
        trace.residual_min = trace.residual_min.min(out.residual_norm);
        trace.residual_max = trace.residual_max.max(out.residual_norm);

        let beta = match method {
            Method::Bep => Some(schedule.beta(k)),
            _ => None,
        };
        let stopping = out.residual_norm <= stop.residual_tolerance;
        let last = stopping || k + 1 == max_iters;
        if k % stride == 0 || last {
            trace.steps.push(StepRecord {
                k,
                alpha,
                beta,
                midpoint: out.state.midpoint.clone(),
                z: out.averaged_point.clone(),
                averaged: avg.clone(),
                weight_sum,
                residual_norm: out.residual_norm,
            });
        }
        state = out.state;
        if (k + 1) % stride == 0 || last {
            trace.iterate_ks.push(k + 1);
            trace.iterates.push(state.pair.clone());
        }
        trace.total_steps = k + 1;
        if stopping {
            trace.stopped_at = Some(k);
            break;
        }
    }
    Ok(trace)
}

// ---------------------------------------------------------------------------
// Euclidean reference oracles
// ---------------------------------------------------------------------------

/// Classical extragradient step: ū = u - ηF(u), u⁺ = u - ηF(ū). Written
/// independently of the Bregman path; exists as an equivalence oracle.
/// Returns (u_next, midpoint, |F(ū)|).
pub fn classical_eg_step(
    op: &OperatorHandle,
    u: &[f64],
    eta: f64,
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    if !(eta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "eta must be positive, got {eta}"
        )));
    }
    let f_u = op.apply(u)?;
    let u_bar: Vec<f64> = u.iter().zip(&f_u).map(|(ui, fi)| ui - eta * fi).collect();
    let f_bar = op.apply(&u_bar)?;
    let u_next: Vec<f64> = u.iter().zip(&f_bar).map(|(ui, fi)| ui - eta * fi).collect();
    let r = norm(&f_bar);
    Ok((u_next, u_bar, r))
}

/// Optimistic gradient step: u⁺ = u - 2ηF(u) + ηF(u_prev), with
/// F(u_prev) = F(u) at the first step (u_{-1} = u_0 convention).
/// Returns (u_next, F(u), |F(u)|).
pub fn ogda_step(
    op: &OperatorHandle,
    u: &[f64],
    f_prev: Option<&[f64]>,
    eta: f64,
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    if !(eta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "eta must be positive, got {eta}"
        )));
    }
    let f_u = op.apply(u)?;
    let u_next: Vec<f64> = match f_prev {
        Some(fp) => u
            .iter()
            .zip(&f_u)
            .zip(fp)
            .map(|((ui, fi), fpi)| ui - 2.0 * eta * fi + eta * fpi)
            .collect(),
        None => u.iter().zip(&f_u).map(|(ui, fi)| ui - eta * fi).collect(),
    };
    let r = norm(&f_u);
    Ok((u_next, f_u, r))
}

/// Runs one of the Euclidean reference methods, producing a trace with the
/// same layout as [`run`] (duals mirror primals, as the Euclidean geometry
/// dictates).
pub fn run_reference(
    method: Method,
    op: &OperatorHandle,
    eta: f64,
    u0: &[f64],
    max_iters: usize,
    stop: StoppingRule,
    stride: usize,
) -> Result<Trace> {
    if !method.is_reference() {
        return Err(Error::InvalidArgument(
            "run_reference drives the reference methods".into(),
        ));
    }
    if stride == 0 {
        return Err(Error::InvalidArgument(
            "record stride must be at least 1".into(),
        ));
    }
    let mut trace = Trace {
        method,
        lambda: f64::NAN,
        heuristic_lambda: false,
        stride,
        iterate_ks: vec![0],
        iterates: vec![DualPair {
            primal: u0.to_vec(),
            dual: u0.to_vec(),
        }],
        steps: Vec::new(),
        operator_calls: 0,
        total_steps: 0,
        stopped_at: None,
        residual_min: f64::INFINITY,
        residual_max: f64::NEG_INFINITY,
    };
    let mut u = u0.to_vec();
    let mut f_prev: Option<Vec<f64>> = None;
    let mut avg: Vec<f64> = Vec::new();
    let mut weight_sum = 0.0;

    for k in 0..max_iters {
        let (u_next, z, resid, midpoint, evals) = match method {
            Method::EgReference => {
                let (u_next, u_bar, r) = classical_eg_step(op, &u, eta)?;
                (u_next, u_bar.clone(), r, Some(u_bar), 2)
            }
            Method::OgdaReference => {
                let (u_next, f_u, r) = ogda_step(op, &u, f_prev.as_deref(), eta)?;
                f_prev = Some(f_u);
                (u_next.clone(), u_next, r, None, 1)
            }
            _ => unreachable!(),
        };
        if !all_finite(&u_next) {
            return Err(Error::NumericalBreakdown { k });
        }
        trace.operator_calls += evals;
        let (new_avg, new_sum) = update_average(&avg, weight_sum, &z, eta)?;
        avg = new_avg;
        weight_sum = new_sum;
        trace.residual_min = trace.residual_min.min(resid);
        trace.residual_max = trace.residual_max.max(resid);

        let stopping = resid <= stop.residual_tolerance;
        let last = stopping || k + 1 == max_iters;
        if k % stride == 0 || last {
            trace.steps.push(StepRecord {
                k,
                alpha: eta,
                beta: None,
                midpoint,
                z: z.clone(),
                averaged: avg.clone(),
                weight_sum,
                residual_norm: resid,
            });
        }
        u = u_next;
        if (k + 1) % stride == 0 || last {
            trace.iterate_ks.push(k + 1);
            trace.iterates.push(DualPair {
                primal: u.clone(),
                dual: u.clone(),
            });
        }
        trace.total_steps = k + 1;
        if stopping {
            trace.stopped_at = Some(k);
            break;
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dist;
    use crate::operators::{saddle_operator, BlockConstants, SaddleProblem};
    use std::sync::Arc;

    fn xy_problem() -> Arc<SaddleProblem> {
        Arc::new(SaddleProblem::new(
            (1, 1),
            |x, y| x[0] * y[0],
            |_x, y| vec![y[0]],
            |x, _y| vec![x[0]],
            BlockConstants::new(0.0, 1.0, 0.0, 1.0).unwrap(),
            Some((vec![0.0], vec![0.0])),
        ))
    }

    fn zero_operator(dim: usize) -> OperatorHandle {
        OperatorHandle::new(dim, Some(0.0), move |_| vec![0.0; dim])
    }

    #[test]
    fn beg_step_fixed_point_under_zero_operator() {
        let gen = BregmanGenerator::euclidean(2).unwrap();
        let op = zero_operator(2);
        let state = SolverState::initial(DualPair::from_dual(&gen, &[1.0, -2.0]));
        let out = beg_step(&gen, &op, &state, 0.5).unwrap();
        assert_eq!(out.state.pair.primal, vec![1.0, -2.0]);
        assert_eq!(out.averaged_point, vec![1.0, -2.0]);
        assert_eq!(out.state.k, 1);
    }

    #[test]
    fn beg_step_hand_computed_iterate() {
        // f = xy from (1,1) with α = 0.5:
        // ū₀ = (1,1) - 0.5(1,-1) = (0.5, 1.5)
        // u₁ = (1,1) - 0.5·F(0.5,1.5) = (1,1) - 0.5(1.5,-0.5) = (0.25, 1.25)
        let gen = BregmanGenerator::euclidean(2).unwrap();
        let op = saddle_operator(&xy_problem());
        let state = SolverState::initial(DualPair::from_dual(&gen, &[1.0, 1.0]));
        let out = beg_step(&gen, &op, &state, 0.5).unwrap();
        assert_eq!(out.state.midpoint.as_deref().unwrap(), &[0.5, 1.5]);
        assert_eq!(out.state.pair.primal, vec![0.25, 1.25]);
    }

    #[test]
    fn beg_step_shrinkage_zeroes_coordinate() {
        // choose α and F so u*₀ - αF(u₀) = [0.5, 2.0]; with γ = 1 the first
        // coordinate of ū must be exactly zero
        let gen = BregmanGenerator::augmented_l1(2, 1.0).unwrap();
        let op = OperatorHandle::new(2, None, |_| vec![1.0, -2.0]);
        let init = DualPair::from_dual(&gen, &[1.0, 1.0]);
        let out = beg_step(&gen, &op, &SolverState::initial(init), 0.5).unwrap();
        let mid = out.state.midpoint.unwrap();
        assert_eq!(mid[0].to_bits(), 0.0f64.to_bits());
        assert_eq!(mid[1], 1.0);
    }

    #[test]
    fn bep_step_first_step_has_no_extrapolation() {
        let gen = BregmanGenerator::euclidean(2).unwrap();
        let op = saddle_operator(&xy_problem());
        let state = SolverState::initial(DualPair::from_dual(&gen, &[1.0, 1.0]));
        let out = bep_step(&gen, &op, &state, 0.25, 1.0).unwrap();
        // u₁ = u₀ - αF(u₀) = (1,1) - 0.25(1,-1)
        assert_eq!(out.state.pair.primal, vec![0.75, 1.25]);
        assert!(out.state.prev_operator.is_some());
        assert_eq!(out.operator_evals, 1);
    }

    #[test]
    fn bep_matches_ogda_on_bilinear() {
        let gen = BregmanGenerator::euclidean(2).unwrap();
        let op = saddle_operator(&xy_problem());
        let eta = 0.25;
        let mut state = SolverState::initial(DualPair::from_dual(&gen, &[1.0, 1.0]));
        let mut u = vec![1.0, 1.0];
        let mut f_prev: Option<Vec<f64>> = None;
        for _ in 0..100 {
            let out = bep_step(&gen, &op, &state, eta, 1.0).unwrap();
            let (u_next, f_u, _) = ogda_step(&op, &u, f_prev.as_deref(), eta).unwrap();
            assert!(dist(&out.state.pair.primal, &u_next) <= 1e-12);
            state = out.state;
            u = u_next;
            f_prev = Some(f_u);
        }
    }

    #[test]
    fn beg_matches_classical_eg() {
        let gen = BregmanGenerator::euclidean(2).unwrap();
        let op = saddle_operator(&xy_problem());
        let eta = 0.4;
        let mut state = SolverState::initial(DualPair::from_dual(&gen, &[1.0, -0.5]));
        let mut u = vec![1.0, -0.5];
        for _ in 0..100 {
            let out = beg_step(&gen, &op, &state, eta).unwrap();
            let (u_next, _, _) = classical_eg_step(&op, &u, eta).unwrap();
            assert!(dist(&out.state.pair.primal, &u_next) <= 1e-12);
            state = out.state;
            u = u_next;
        }
    }

    #[test]
    fn update_average_matches_direct_sum() {
        let (z1, s1) = update_average(&[], 0.0, &[0.0], 1.0).unwrap();
        assert_eq!((z1.as_slice(), s1), (&[0.0][..], 1.0));
        let (z2, s2) = update_average(&z1, s1, &[2.0], 1.0).unwrap();
        assert_eq!(z2, vec![1.0]);
        assert_eq!(s2, 2.0);

        // r = (1,2,3), z = (0,3,1): ẑ = (0 + 6 + 3)/6
        let (mut zh, mut s) = (Vec::new(), 0.0);
        for (r, z) in [(1.0, 0.0), (2.0, 3.0), (3.0, 1.0)] {
            let (nz, ns) = update_average(&zh, s, &[z], r).unwrap();
            zh = nz;
            s = ns;
        }
        assert!((zh[0] - 1.5).abs() < 1e-15);
        assert_eq!(s, 6.0);
    }

    #[test]
    fn update_average_rejects_nonpositive_weight() {
        assert!(update_average(&[0.0], 1.0, &[1.0], 0.0).is_err());
        assert!(update_average(&[0.0], 1.0, &[1.0], -2.0).is_err());
    }

    #[test]
    fn schedule_validation_boundary_and_violations() {
        let s = StepSchedule {
            alpha: ScheduleSeq::Constant(0.5),
            beta: None,
            lambda: 2.0,
            rho: None,
            heuristic: false,
        };
        assert!(validate_schedule(Method::Beg, &s, 10).is_feasible());

        let bep_ok = StepSchedule {
            alpha: ScheduleSeq::Constant(0.25),
            beta: Some(ScheduleSeq::Constant(1.0)),
            lambda: 2.0,
            rho: None,
            heuristic: false,
        };
        assert!(validate_schedule(Method::Bep, &bep_ok, 10).is_feasible());

        let bep_bad = StepSchedule {
            alpha: ScheduleSeq::Constant(0.3),
            beta: Some(ScheduleSeq::Constant(1.0)),
            lambda: 2.0,
            rho: None,
            heuristic: false,
        };
        let report = validate_schedule(Method::Bep, &bep_bad, 10);
        let v = report.first_violation.unwrap();
        assert_eq!(v.k, 0);
        assert!(v.condition.contains("exceeds 1"));
    }

    #[test]
    fn constant_schedules_satisfy_their_conditions() {
        let beg = constant_beg_schedule(2.0, 1.0).unwrap();
        assert_eq!(beg.alpha(7), 0.5);
        assert!(validate_schedule(Method::Beg, &beg, 1000).is_feasible());

        let bep = constant_bep_schedule(2.0, 0.5).unwrap();
        assert_eq!(bep.alpha(0), 0.125);
        assert_eq!(bep.beta(0), 1.0);
        assert!(bep.rho.unwrap() > 0.0);
        assert!(validate_schedule(Method::Bep, &bep, 1000).is_feasible());

        assert!(constant_beg_schedule(0.0, 1.0).is_err());
        assert!(constant_beg_schedule(2.0, 1.5).is_err());
        assert!(constant_bep_schedule(2.0, 1.0).is_err());
    }

    #[test]
    fn run_with_zero_iters_keeps_initial_state() {
        let gen = BregmanGenerator::euclidean(2).unwrap();
        let op = saddle_operator(&xy_problem());
        let schedule = constant_beg_schedule(2.0, 1.0).unwrap();
        let init = DualPair::from_dual(&gen, &[1.0, 1.0]);
        let trace = run(
            Method::Beg,
            &gen,
            &op,
            &schedule,
            init,
            0,
            StoppingRule::none(),
            1,
        )
        .unwrap();
        assert_eq!(trace.iterates.len(), 1);
        assert!(trace.steps.is_empty());
        assert_eq!(trace.operator_calls, 0);
    }

    #[test]
    fn run_beg_converges_on_xy() {
        let gen = BregmanGenerator::euclidean(2).unwrap();
        let op = saddle_operator(&xy_problem());
        let schedule = StepSchedule {
            alpha: ScheduleSeq::Constant(0.25),
            beta: None,
            lambda: 2.0,
            rho: None,
            heuristic: false,
        };
        let init = DualPair::from_dual(&gen, &[1.0, 1.0]);
        let trace = run(
            Method::Beg,
            &gen,
            &op,
            &schedule,
            init,
            300,
            StoppingRule::none(),
            1,
        )
        .unwrap();
        assert!(trace.final_residual().unwrap() < 1e-3);
        let avg = &trace.steps.last().unwrap().averaged;
        assert!(norm(avg) < 0.1);
        assert_eq!(trace.operator_calls, 600);
    }

    #[test]
    fn run_rejects_infeasible_schedule() {
        let gen = BregmanGenerator::euclidean(2).unwrap();
        let op = saddle_operator(&xy_problem());
        let schedule = StepSchedule {
            alpha: ScheduleSeq::Constant(2.0),
            beta: None,
            lambda: 2.0,
            rho: None,
            heuristic: false,
        };
        let init = DualPair::from_dual(&gen, &[1.0, 1.0]);
        let err = run(
            Method::Beg,
            &gen,
            &op,
            &schedule,
            init,
            10,
            StoppingRule::none(),
            1,
        )
        .unwrap_err();
        assert!(matches!(err, Error::ScheduleViolation { k: 0, .. }));
    }

    #[test]
    fn steps_report_numerical_breakdown() {
        let gen = BregmanGenerator::euclidean(1).unwrap();
        let op = OperatorHandle::new(1, None, |_| vec![f64::NAN]);
        let state = SolverState::initial(DualPair::from_dual(&gen, &[1.0]));
        assert!(matches!(
            beg_step(&gen, &op, &state, 0.5),
            Err(Error::NumericalBreakdown { k: 0 })
        ));
        assert!(matches!(
            bep_step(&gen, &op, &state, 0.5, 1.0),
            Err(Error::NumericalBreakdown { k: 0 })
        ));
    }

    #[test]
    fn run_stops_on_residual() {
        let gen = BregmanGenerator::euclidean(2).unwrap();
        let op = zero_operator(2);
        let schedule = constant_beg_schedule(1.0, 1.0).unwrap();
        let init = DualPair::from_dual(&gen, &[1.0, 1.0]);
        let trace = run(
            Method::Beg,
            &gen,
            &op,
            &schedule,
            init,
            50,
            StoppingRule::residual(1e-9),
            1,
        )
        .unwrap();
        assert_eq!(trace.stopped_at, Some(0));
        assert_eq!(trace.total_steps, 1);
    }

    #[test]
    fn thinned_trace_keeps_final_entries_and_exact_average() {
        let gen = BregmanGenerator::euclidean(2).unwrap();
        let op = saddle_operator(&xy_problem());
        let schedule = constant_beg_schedule(2.0, 0.5).unwrap();
        let init = DualPair::from_dual(&gen, &[1.0, 1.0]);
        let full = run(
            Method::Beg,
            &gen,
            &op,
            &schedule,
            init.clone(),
            97,
            StoppingRule::none(),
            1,
        )
        .unwrap();
        let thin = run(
            Method::Beg,
            &gen,
            &op,
            &schedule,
            init,
            97,
            StoppingRule::none(),
            10,
        )
        .unwrap();
        assert_eq!(thin.iterate_ks.last(), Some(&97));
        assert_eq!(thin.steps.last().unwrap().k, 96);
        assert_eq!(
            full.steps.last().unwrap().averaged,
            thin.steps.last().unwrap().averaged
        );
        assert!(thin.iterates.len() < full.iterates.len());
        assert_eq!(full.residual_max, thin.residual_max);
    }

    #[test]
    fn dual_primal_consistency_along_run() {
        let gen = BregmanGenerator::augmented_l1(2, 0.5).unwrap();
        let op = saddle_operator(&xy_problem());
        let schedule = constant_beg_schedule(2.0, 1.0).unwrap();
        let init = DualPair::from_primal(&gen, &[1.0, 1.0]).unwrap();
        let trace = run(
            Method::Beg,
            &gen,
            &op,
            &schedule,
            init,
            50,
            StoppingRule::none(),
            1,
        )
        .unwrap();
        for pair in &trace.iterates {
            assert!(pair.consistency_error(&gen) <= 1e-12);
        }
    }
}
