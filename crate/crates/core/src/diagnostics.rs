//! Numerical verification of the bounds the solver theory promises.
//!
//! Every checker takes a finished [`Trace`] and replays the relevant
//! inequality at each iteration, reporting lhs, rhs, and the signed residual
//! `rhs - lhs` (nonnegative means the bound holds). Checked bounds:
//!
//! * `beg_regret` — per-iteration regret bound of BEG:
//!   α_k⟨F(ū_k), ū_k - u⟩ ≤ D(u, u_k; u*_k) - D(u, u_{k+1}; u*_{k+1});
//! * `beg_telescoped` — the same bound summed from 0 to t-1;
//! * `bep_per_iteration` — the six-term extrapolation bound of BEP;
//! * `bep_telescoped` — its telescoped form with the (1 - λα) final term;
//! * `beg_distance` / `bep_distance` — non-expansion of the Bregman distance
//!   to a zero of F;
//! * `gap_bound` — the ergodic O(1/k) bound
//!   |f(x̂_k, ŷ_k) - f(x̄, ȳ)| ≤ max_{|z| ≤ R} D(z, u₀; u*₀) / s_k;
//! * `weighted_gap` — the ergodic gap inequality at a probe point.
//!
//! Tolerances scale as `atol + rtol·|rhs|` with atol = 1e-12, rtol = 1e-9 so
//! they stay meaningful across problem scales.

use std::sync::Arc;

use crate::bregman::BregmanGenerator;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, scale, sub};
use crate::operators::{saddle_operator, OperatorHandle, SaddleProblem};
use crate::rng::SplitMix64;
use crate::solvers::{Method, Trace};

/// Absolute part of the default residual tolerance.
pub const ATOL: f64 = 1e-12;
/// Relative part of the default residual tolerance, scaled by |rhs|.
pub const RTOL: f64 = 1e-9;

fn default_tolerance(rhs: f64) -> f64 {
    ATOL + RTOL * rhs.abs()
}

/// One checked inequality instance: `pass` iff `rhs - lhs ≥ -tolerance`.
#[derive(Debug, Clone)]
pub struct InequalityReport {
    pub name: &'static str,
    pub k: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl InequalityReport {
    fn evaluate(name: &'static str, k: usize, lhs: f64, rhs: f64) -> Self {
        let residual = rhs - lhs;
        let tolerance = default_tolerance(rhs);
        Self {
            name,
            k,
            lhs,
            rhs,
            residual,
            tolerance,
            pass: residual >= -tolerance,
        }
    }
}

/// Serializes reports with the fixed header
/// `inequality_name,k,lhs,rhs,residual,pass` and 17-significant-digit floats.
pub fn reports_to_csv(reports: &[InequalityReport]) -> String {
    let mut out = String::from("inequality_name,k,lhs,rhs,residual,pass\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{:.16e},{:.16e},{:.16e},{}\n",
            r.name, r.k, r.lhs, r.rhs, r.residual, r.pass
        ));
    }
    out
}

pub fn all_pass(reports: &[InequalityReport]) -> bool {
    reports.iter().all(|r| r.pass)
}

fn require_full_history(trace: &Trace) -> Result<()> {
    if trace.full_history() {
        Ok(())
    } else {
        Err(Error::Unsupported(
            "per-iteration checks need a full-history trace (record stride 1)".into(),
        ))
    }
}

fn require_method(trace: &Trace, method: Method, checker: &str) -> Result<()> {
    if trace.method == method {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{checker} applies to {method} traces, got {}",
            trace.method
        )))
    }
}

// ---------------------------------------------------------------------------
// BEG checks
// ---------------------------------------------------------------------------

/// Per-iteration regret bound of BEG at a reference point:
/// `α_k⟨F(ū_k), ū_k - u⟩ ≤ D(u, u_k; u*_k) - D(u, u_{k+1}; u*_{k+1})`.
pub fn check_beg_regret(
    gen: &BregmanGenerator,
    op: &OperatorHandle,
    trace: &Trace,
    u_ref: &[f64],
    u_ref_star: &[f64],
) -> Result<Vec<InequalityReport>> {
    require_method(trace, Method::Beg, "check_beg_regret")?;
    require_full_history(trace)?;
    gen.check_dual(u_ref, u_ref_star)?;
    let mut reports = Vec::with_capacity(trace.steps.len());
    for step in &trace.steps {
        let k = step.k;
        let mid = step.midpoint.as_ref().expect("beg steps carry midpoints");
        let f_mid = op.apply(mid)?;
        let lhs = step.alpha * dot(&f_mid, &sub(mid, u_ref));
        let cur = trace.iterate(k)?;
        let next = trace.iterate(k + 1)?;
        let rhs = gen.distance_unchecked(u_ref, &cur.primal, &cur.dual)
            - gen.distance_unchecked(u_ref, &next.primal, &next.dual);
        reports.push(InequalityReport::evaluate("beg_regret", k, lhs, rhs));
    }
    Ok(reports)
}

/// Telescoped regret bound of BEG, one report per horizon t = 1..T:
/// `Σ_{k<t} α_k⟨F(ū_k), ū_k - u⟩ ≤ D(u, u₀; u*₀) - D(u, u_t; u*_t)`.
pub fn check_beg_telescoped(
    gen: &BregmanGenerator,
    op: &OperatorHandle,
    trace: &Trace,
    u_ref: &[f64],
    u_ref_star: &[f64],
) -> Result<Vec<InequalityReport>> {
    require_method(trace, Method::Beg, "check_beg_telescoped")?;
    require_full_history(trace)?;
    gen.check_dual(u_ref, u_ref_star)?;
    let init = trace.initial_pair();
    let d0 = gen.distance_unchecked(u_ref, &init.primal, &init.dual);
    let mut partial = 0.0;
    let mut reports = Vec::with_capacity(trace.steps.len());
    for step in &trace.steps {
        let mid = step.midpoint.as_ref().expect("beg steps carry midpoints");
        let f_mid = op.apply(mid)?;
        partial += step.alpha * dot(&f_mid, &sub(mid, u_ref));
        let t = step.k + 1;
        let end = trace.iterate(t)?;
        let rhs = d0 - gen.distance_unchecked(u_ref, &end.primal, &end.dual);
        reports.push(InequalityReport::evaluate(
            "beg_telescoped",
            t,
            partial,
            rhs,
        ));
    }
    Ok(reports)
}

/// Distance non-increase of BEG toward a zero of F, one report per t:
/// `D(z̄, u_t; u*_t) ≤ D(z̄, u₀; u*₀)`.
pub fn check_beg_distance_bound(
    gen: &BregmanGenerator,
    trace: &Trace,
    z_ref: &[f64],
    z_ref_star: &[f64],
) -> Result<Vec<InequalityReport>> {
    require_method(trace, Method::Beg, "check_beg_distance_bound")?;
    gen.check_dual(z_ref, z_ref_star)?;
    let init = trace.initial_pair();
    let d0 = gen.distance_unchecked(z_ref, &init.primal, &init.dual);
    Ok(trace
        .iterates
        .iter()
        .zip(&trace.iterate_ks)
        .skip(1)
        .map(|(pair, &t)| {
            let lhs = gen.distance_unchecked(z_ref, &pair.primal, &pair.dual);
            InequalityReport::evaluate("beg_distance", t, lhs, d0)
        })
        .collect())
}

// ---------------------------------------------------------------------------
// BEP checks
// ---------------------------------------------------------------------------

/// The six right-hand terms of the BEP per-iteration bound, in order:
/// the two extrapolation cross terms, the reference-distance difference pair,
/// and the λ-weighted consecutive-iterate distance pair.
#[derive(Debug, Clone, Copy)]
pub struct BepTerms {
    pub lhs: f64,
    pub terms: [f64; 6],
}

impl BepTerms {
    pub fn rhs(&self) -> f64 {
        self.terms.iter().sum()
    }
}

fn bep_terms_from_values(
    gen: &BregmanGenerator,
    trace: &Trace,
    f_values: &[Vec<f64>],
    k: usize,
    u_ref: &[f64],
    lambda: f64,
) -> Result<BepTerms> {
    let u_next = trace.iterate(k + 1)?;
    let u_cur = trace.iterate(k)?;
    let step = &trace.steps[k];
    let alpha = step.alpha;
    let alpha_prev = if k == 0 {
        alpha * step.beta.unwrap_or(0.0)
    } else {
        trace.steps[k - 1].alpha
    };

    let delta_f_next = sub(&f_values[k + 1], &f_values[k]);
    let lhs = alpha * dot(&f_values[k + 1], &sub(&u_next.primal, u_ref));
    let t1 = alpha * dot(&delta_f_next, &sub(&u_next.primal, u_ref));
    // ΔF_k and D(u_k, u_{k-1}) vanish at k = 0 under the u_{-1} = u_0 start
    let (t2, t5) = if k == 0 {
        (0.0, 0.0)
    } else {
        let u_prev = trace.iterate(k - 1)?;
        let delta_f = sub(&f_values[k], &f_values[k - 1]);
        (
            -alpha_prev * dot(&delta_f, &sub(&u_cur.primal, u_ref)),
            lambda
                * alpha_prev
                * gen.distance_unchecked(&u_cur.primal, &u_prev.primal, &u_prev.dual),
        )
    };
    let t3 = gen.distance_unchecked(u_ref, &u_cur.primal, &u_cur.dual);
    let t4 = -gen.distance_unchecked(u_ref, &u_next.primal, &u_next.dual);
    let t6 = -lambda * alpha * gen.distance_unchecked(&u_next.primal, &u_cur.primal, &u_cur.dual);
    Ok(BepTerms {
        lhs,
        terms: [t1, t2, t3, t4, t5, t6],
    })
}

/// Term breakdown of the BEP per-iteration bound at step `k`, recomputing the
/// needed operator values.
pub fn bep_per_iteration_terms(
    gen: &BregmanGenerator,
    op: &OperatorHandle,
    trace: &Trace,
    k: usize,
    u_ref: &[f64],
    lambda: f64,
) -> Result<BepTerms> {
    require_method(trace, Method::Bep, "bep_per_iteration_terms")?;
    require_full_history(trace)?;
    let f_values = operator_values(op, trace)?;
    bep_terms_from_values(gen, trace, &f_values, k, u_ref, lambda)
}

/// Term breakdowns for every step of a BEP trace, evaluating the operator
/// once per iterate.
pub fn bep_per_iteration_series(
    gen: &BregmanGenerator,
    op: &OperatorHandle,
    trace: &Trace,
    u_ref: &[f64],
    lambda: f64,
) -> Result<Vec<BepTerms>> {
    require_method(trace, Method::Bep, "bep_per_iteration_series")?;
    require_full_history(trace)?;
    let f_values = operator_values(op, trace)?;
    (0..trace.steps.len())
        .map(|k| bep_terms_from_values(gen, trace, &f_values, k, u_ref, lambda))
        .collect()
}

/// Per-iteration extrapolation bound of BEP:
/// `α_k⟨F(u_{k+1}), u_{k+1} - u⟩ ≤` [six-term rhs]. One report per step.
pub fn check_bep_per_iteration(
    gen: &BregmanGenerator,
    op: &OperatorHandle,
    trace: &Trace,
    u_ref: &[f64],
    u_ref_star: &[f64],
    lambda: f64,
) -> Result<Vec<InequalityReport>> {
    require_method(trace, Method::Bep, "check_bep_per_iteration")?;
    require_full_history(trace)?;
    gen.check_dual(u_ref, u_ref_star)?;
    let f_values = operator_values(op, trace)?;
    let mut reports = Vec::with_capacity(trace.steps.len());
    for k in 0..trace.steps.len() {
        let terms = bep_terms_from_values(gen, trace, &f_values, k, u_ref, lambda)?;
        reports.push(InequalityReport::evaluate(
            "bep_per_iteration",
            k,
            terms.lhs,
            terms.rhs(),
        ));
    }
    Ok(reports)
}

/// Telescoped BEP bound, one report per horizon t = 1..T:
/// `Σ_{k<t} α_k⟨F(u_{k+1}), u_{k+1} - u⟩ ≤ D(u,u₀;u*₀) - (1-λα_{t-1})·D(u,u_t;u*_t)`.
pub fn check_bep_telescoped(
    gen: &BregmanGenerator,
    op: &OperatorHandle,
    trace: &Trace,
    u_ref: &[f64],
    u_ref_star: &[f64],
    lambda: f64,
) -> Result<Vec<InequalityReport>> {
    require_method(trace, Method::Bep, "check_bep_telescoped")?;
    require_full_history(trace)?;
    gen.check_dual(u_ref, u_ref_star)?;
    let init = trace.initial_pair();
    let d0 = gen.distance_unchecked(u_ref, &init.primal, &init.dual);
    let f_values = operator_values(op, trace)?;
    let mut partial = 0.0;
    let mut reports = Vec::with_capacity(trace.steps.len());
    for step in &trace.steps {
        let k = step.k;
        let u_next = trace.iterate(k + 1)?;
        partial += step.alpha * dot(&f_values[k + 1], &sub(&u_next.primal, u_ref));
        let coeff = 1.0 - lambda * step.alpha;
        let rhs = d0 - coeff * gen.distance_unchecked(u_ref, &u_next.primal, &u_next.dual);
        reports.push(InequalityReport::evaluate(
            "bep_telescoped",
            k + 1,
            partial,
            rhs,
        ));
    }
    Ok(reports)
}

/// Damped distance bound of BEP toward a zero of F, one report per t:
/// `(1 - λα_{t-1})·D(z̄, u_t; u*_t) ≤ D(z̄, u₀; u*₀)`.
pub fn check_bep_distance_bound(
    gen: &BregmanGenerator,
    trace: &Trace,
    z_ref: &[f64],
    z_ref_star: &[f64],
    lambda: f64,
) -> Result<Vec<InequalityReport>> {
    require_method(trace, Method::Bep, "check_bep_distance_bound")?;
    require_full_history(trace)?;
    gen.check_dual(z_ref, z_ref_star)?;
    let init = trace.initial_pair();
    let d0 = gen.distance_unchecked(z_ref, &init.primal, &init.dual);
    let mut reports = Vec::new();
    for step in &trace.steps {
        let t = step.k + 1;
        let pair = trace.iterate(t)?;
        let coeff = 1.0 - lambda * step.alpha;
        let lhs = coeff * gen.distance_unchecked(z_ref, &pair.primal, &pair.dual);
        reports.push(InequalityReport::evaluate("bep_distance", t, lhs, d0));
    }
    Ok(reports)
}

fn operator_values(op: &OperatorHandle, trace: &Trace) -> Result<Vec<Vec<f64>>> {
    trace
        .iterates
        .iter()
        .map(|pair| op.apply(&pair.primal))
        .collect()
}

// ---------------------------------------------------------------------------
// ergodic gap bound
// ---------------------------------------------------------------------------

/// One evaluation of the ergodic gap bound at step k.
#[derive(Debug, Clone)]
pub struct GapRecord {
    pub k: usize,
    pub weight_sum: f64,
    /// |f(x̂_k, ŷ_k) - f(x̄, ȳ)|.
    pub value_error: f64,
    /// max_{|z| ≤ R} D(z, u₀; u*₀) / s_k.
    pub bound_rhs: f64,
    pub radius: f64,
    /// Informational only: the telescoped form with the final-distance term
    /// retained, evaluated at the Euclidean ball argmax. Not a certified
    /// bound (the argmax of the difference may differ), hence no pass/fail.
    pub bound_rhs_tight: Option<f64>,
    pub pass: bool,
}

/// Ergodic gap bound series: per recorded step,
/// `|f(x̂_k, ŷ_k) - f(x̄, ȳ)| ≤ max_{|z| ≤ R} D(z, u₀; u*₀) / s_k` with R the
/// realized iterate radius (including the saddle point).
pub fn gap_bound_series(
    gen: &BregmanGenerator,
    problem: &Arc<SaddleProblem>,
    trace: &Trace,
) -> Result<Vec<GapRecord>> {
    let z_bar = problem
        .saddle_joint()
        .ok_or_else(|| Error::Unsupported("gap bound needs an exact saddle oracle".into()))?;
    let f_star = problem.saddle_value().expect("saddle implies value");
    let init = trace.initial_pair();

    // realized radius: averaged-source iterates for BEG, all iterates for BEP
    let mut radius = norm(&z_bar);
    match trace.method {
        Method::Bep | Method::OgdaReference => {
            for pair in &trace.iterates {
                radius = radius.max(norm(&pair.primal));
            }
        }
        _ => {
            for step in &trace.steps {
                radius = radius.max(norm(&step.z));
            }
        }
    }

    let ball_max = ball_max_bregman(gen, radius, &init.primal, &init.dual);
    let euclidean = matches!(gen.kind(), crate::bregman::GeneratorKind::Euclidean);
    let mut records = Vec::with_capacity(trace.steps.len());
    for step in &trace.steps {
        let (x_hat, y_hat) = problem.split(&step.averaged)?;
        let value_error = (problem.value(x_hat, y_hat) - f_star).abs();
        let bound_rhs = ball_max / step.weight_sum;
        let bound_rhs_tight = if euclidean && trace.full_history() {
            // first-term argmax of the Euclidean ball maximum
            let u0 = &init.primal;
            let n0 = norm(u0);
            let z_star = if n0 > 0.0 {
                scale(u0, -radius / n0)
            } else {
                let mut e = vec![0.0; u0.len()];
                e[0] = radius;
                e
            };
            let end = trace.iterate(step.k + 1)?;
            let d_first = gen.distance_unchecked(&z_star, u0, &init.dual);
            let d_last = gen.distance_unchecked(&z_star, &end.primal, &end.dual);
            Some((d_first - d_last) / step.weight_sum)
        } else {
            None
        };
        let tol = default_tolerance(bound_rhs).max(1e-9);
        records.push(GapRecord {
            k: step.k,
            weight_sum: step.weight_sum,
            value_error,
            bound_rhs,
            radius,
            bound_rhs_tight,
            pass: value_error <= bound_rhs + tol,
        });
    }
    Ok(records)
}

pub fn gap_records_to_reports(records: &[GapRecord]) -> Vec<InequalityReport> {
    records
        .iter()
        .map(|g| InequalityReport {
            name: "gap_bound",
            k: g.k,
            lhs: g.value_error,
            rhs: g.bound_rhs,
            residual: g.bound_rhs - g.value_error,
            tolerance: default_tolerance(g.bound_rhs).max(1e-9),
            pass: g.pass,
        })
        .collect()
}

/// max over the ball `|z| ≤ radius` of D(z, u₀; u*₀).
///
/// Euclidean generators use the closed form ½(R + |u₀|)², which is exact.
/// Any other generator gets a numerical upper estimate: projected
/// (sub)gradient ascent from deterministic starts plus a seeded random
/// multistart, inflated by a documented safety factor of 1.01.
pub fn ball_max_bregman(gen: &BregmanGenerator, radius: f64, u0: &[f64], u0_star: &[f64]) -> f64 {
    assert!(radius >= 0.0, "radius must be nonnegative");
    if matches!(gen.kind(), crate::bregman::GeneratorKind::Euclidean) {
        let s = radius + norm(u0);
        return 0.5 * s * s;
    }
    let d_at = |z: &[f64]| gen.distance_unchecked(z, u0, u0_star);
    if radius == 0.0 {
        return d_at(&vec![0.0; u0.len()]);
    }
    let dim = u0.len();
    let mut starts: Vec<Vec<f64>> = Vec::new();
    let push_dir = |dir: &[f64], starts: &mut Vec<Vec<f64>>| {
        let n = norm(dir);
        if n > 1e-12 {
            starts.push(scale(dir, radius / n));
            starts.push(scale(dir, -radius / n));
        }
    };
    let mut e0 = vec![0.0; dim];
    e0[0] = 1.0;
    push_dir(&e0, &mut starts);
    push_dir(u0, &mut starts);
    push_dir(u0_star, &mut starts);
    push_dir(&vec![1.0; dim], &mut starts);
    let mut rng = SplitMix64::new(0xba11_5eed);
    while starts.len() < 32 {
        starts.push(rng.on_sphere(dim, radius));
    }

    let mut best = f64::NEG_INFINITY;
    for start in starts {
        let mut z = start;
        best = best.max(d_at(&z));
        for it in 0..200 {
            let g = ascent_direction(gen, &z, u0_star);
            let gn = norm(&g);
            if gn <= 1e-14 {
                break;
            }
            let step = radius / (1.0 + (it as f64).sqrt());
            let mut znew: Vec<f64> = z
                .iter()
                .zip(&g)
                .map(|(zi, gi)| zi + step * gi / gn)
                .collect();
            let nz = norm(&znew);
            if nz > radius {
                znew = scale(&znew, radius / nz);
            }
            let v = d_at(&znew);
            if v > best {
                best = v;
            }
            z = znew;
        }
    }
    best * 1.01
}

/// Subgradient of z ↦ D(z, u₀; u*₀), i.e. ∂ω(z) - u*₀; falls back to central
/// differences when the generator carries no selector.
fn ascent_direction(gen: &BregmanGenerator, z: &[f64], u0_star: &[f64]) -> Vec<f64> {
    match gen.subgrad(z) {
        Ok(g) => sub(&g, u0_star),
        Err(_) => {
            let h = 1e-6;
            let mut g = vec![0.0; z.len()];
            let mut zp = z.to_vec();
            for i in 0..z.len() {
                let orig = zp[i];
                zp[i] = orig + h;
                let fp = gen.eval(&zp);
                zp[i] = orig - h;
                let fm = gen.eval(&zp);
                zp[i] = orig;
                g[i] = (fp - fm) / (2.0 * h) - u0_star[i];
            }
            g
        }
    }
}

// ---------------------------------------------------------------------------
// weighted gap inequality
// ---------------------------------------------------------------------------

/// Both sides of the ergodic gap inequality at a probe point for the final
/// averaged iterate:
/// `f(x̂, y) - f(x, ŷ) ≤ (1/s)·Σ r_i ⟨F(z_i), z_i - z⟩`.
/// Returns (lhs, rhs).
pub fn weighted_gap_lhs(
    problem: &Arc<SaddleProblem>,
    trace: &Trace,
    z_probe: &[f64],
) -> Result<(f64, f64)> {
    require_full_history(trace)?;
    let last = trace
        .steps
        .last()
        .ok_or_else(|| Error::InvalidArgument("trace has no steps".into()))?;
    let (x_probe, y_probe) = problem.split(z_probe)?;
    let (x_hat, y_hat) = problem.split(&last.averaged)?;
    let lhs = problem.value(x_hat, y_probe) - problem.value(x_probe, y_hat);
    let op = saddle_operator(problem);
    let mut sum = 0.0;
    for step in &trace.steps {
        let f_z = op.apply(&step.z)?;
        sum += step.alpha * dot(&f_z, &sub(&step.z, z_probe));
    }
    Ok((lhs, sum / last.weight_sum))
}

/// The gap inequality checked at the saddle point for every recorded step.
pub fn check_weighted_gap(
    problem: &Arc<SaddleProblem>,
    trace: &Trace,
) -> Result<Vec<InequalityReport>> {
    require_full_history(trace)?;
    let z_bar = problem
        .saddle_joint()
        .ok_or_else(|| Error::Unsupported("weighted gap check needs a saddle oracle".into()))?;
    let (x_bar, y_bar) = problem.split(&z_bar)?;
    let op = saddle_operator(problem);
    let mut running = 0.0;
    let mut reports = Vec::with_capacity(trace.steps.len());
    for step in &trace.steps {
        let f_z = op.apply(&step.z)?;
        running += step.alpha * dot(&f_z, &sub(&step.z, &z_bar));
        let (x_hat, y_hat) = problem.split(&step.averaged)?;
        let lhs = problem.value(x_hat, y_bar) - problem.value(x_bar, y_hat);
        let rhs = running / step.weight_sum;
        let mut report = InequalityReport::evaluate("weighted_gap", step.k, lhs, rhs);
        report.tolerance = report.tolerance.max(1e-9);
        report.pass = report.residual >= -report.tolerance;
        reports.push(report);
    }
    Ok(reports)
}

/// D(z_ref, u_k; u*_k) along the recorded iterates, paired with their k.
pub fn distance_series(gen: &BregmanGenerator, trace: &Trace, z_ref: &[f64]) -> Vec<(usize, f64)> {
    trace
        .iterates
        .iter()
        .zip(&trace.iterate_ks)
        .map(|(pair, &k)| (k, gen.distance_unchecked(z_ref, &pair.primal, &pair.dual)))
        .collect()
}
