//! Monotone operator abstraction and the saddle-point operator.
//!
//! A convex-concave function f(x, y) induces the operator
//!
//! ```text
//! F(z) = [∇ₓf(x, y); -∇ᵧf(x, y)],   z = [x; y],
//! ```
//!
//! which is monotone and vanishes exactly at saddle points. Block Lipschitz
//! constants (L_xx, L_xy, L_yy, L_yx) combine into a global constant
//! `L = 2·max{…}`, and an operator that is L-Lipschitz is (L/μ)-relatively
//! Lipschitz with respect to any μ-strongly convex generator.

use crate::bregman::BregmanGenerator;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, sub};
use crate::rng::SplitMix64;

type ApplyFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
type PartialFn = dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync;
type ValueFn = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;

/// An operator F: ℝᵈ → ℝᵈ with an optional global Lipschitz constant.
pub struct OperatorHandle {
    dimension: usize,
    lipschitz: Option<f64>,
    apply: Box<ApplyFn>,
}

impl std::fmt::Debug for OperatorHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OperatorHandle")
            .field("dimension", &self.dimension)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

impl OperatorHandle {
    pub fn new(
        dimension: usize,
        lipschitz: Option<f64>,
        apply: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dimension,
            lipschitz,
            apply: Box::new(apply),
        }
    }

    /// F(u). Errors on a dimension mismatch of the input.
    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: u.len(),
            });
        }
        Ok((self.apply)(u))
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }
}

/// Block Lipschitz constants of a saddle function, ordered
/// (L_xx, L_xy, L_yy, L_yx).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockConstants {
    pub l_xx: f64,
    pub l_xy: f64,
    pub l_yy: f64,
    pub l_yx: f64,
}

impl BlockConstants {
    pub fn new(l_xx: f64, l_xy: f64, l_yy: f64, l_yx: f64) -> Result<Self> {
        for (name, v) in [
            ("L_xx", l_xx),
            ("L_xy", l_xy),
            ("L_yy", l_yy),
            ("L_yx", l_yx),
        ] {
            if !(v >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "block constant {name} must be nonnegative, got {v}"
                )));
            }
        }
        Ok(Self {
            l_xx,
            l_xy,
            l_yy,
            l_yx,
        })
    }
}

/// A smooth convex-concave saddle function with its partial gradients,
/// block Lipschitz constants, and (optionally) an exact saddle point.
pub struct SaddleProblem {
    dims: (usize, usize),
    value: Box<ValueFn>,
    grad_x: Box<PartialFn>,
    grad_y: Box<PartialFn>,
    blocks: BlockConstants,
    saddle: Option<(Vec<f64>, Vec<f64>)>,
}

impl std::fmt::Debug for SaddleProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SaddleProblem")
            .field("dims", &self.dims)
            .field("blocks", &self.blocks)
            .field("has_saddle", &self.saddle.is_some())
            .finish()
    }
}

impl SaddleProblem {
    pub fn new(
        dims: (usize, usize),
        value: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
        grad_x: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
        grad_y: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
        blocks: BlockConstants,
        saddle: Option<(Vec<f64>, Vec<f64>)>,
    ) -> Self {
        Self {
            dims,
            value: Box::new(value),
            grad_x: Box::new(grad_x),
            grad_y: Box::new(grad_y),
            blocks,
            saddle,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    /// Dimension of the stacked variable z = [x; y].
    pub fn joint_dimension(&self) -> usize {
        self.dims.0 + self.dims.1
    }

    pub fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        (self.value)(x, y)
    }

    pub fn grad_x(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        (self.grad_x)(x, y)
    }

    pub fn grad_y(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        (self.grad_y)(x, y)
    }

    pub fn blocks(&self) -> BlockConstants {
        self.blocks
    }

    pub fn saddle(&self) -> Option<(&[f64], &[f64])> {
        self.saddle
            .as_ref()
            .map(|(x, y)| (x.as_slice(), y.as_slice()))
    }

    /// Saddle point as a stacked vector z̄ = [x̄; ȳ].
    pub fn saddle_joint(&self) -> Option<Vec<f64>> {
        self.saddle.as_ref().map(|(x, y)| {
            let mut z = x.clone();
            z.extend_from_slice(y);
            z
        })
    }

    /// f(x̄, ȳ) at the stored saddle point.
    pub fn saddle_value(&self) -> Option<f64> {
        self.saddle.as_ref().map(|(x, y)| self.value(x, y))
    }

    /// Splits a stacked vector into (x, y) parts.
    pub fn split<'a>(&self, z: &'a [f64]) -> Result<(&'a [f64], &'a [f64])> {
        let (m, n) = self.dims;
        if z.len() != m + n {
            return Err(Error::DimensionMismatch {
                expected: m + n,
                got: z.len(),
            });
        }
        Ok((&z[..m], &z[m..]))
    }

    /// f at a stacked point.
    pub fn value_joint(&self, z: &[f64]) -> Result<f64> {
        let (x, y) = self.split(z)?;
        Ok(self.value(x, y))
    }
}

/// Builds F(z) = [∇ₓf; -∇ᵧf] with its Lipschitz constant from the block
/// bounds.
pub fn saddle_operator(problem: &std::sync::Arc<SaddleProblem>) -> OperatorHandle {
    let p = problem.clone();
    let dim = p.joint_dimension();
    let lip =
        lipschitz_from_blocks(&p.blocks()).expect("block constants validated at construction");
    OperatorHandle::new(dim, Some(lip), move |z: &[f64]| {
        let m = p.dims().0;
        let (x, y) = (&z[..m], &z[m..]);
        let gx = p.grad_x(x, y);
        let gy = p.grad_y(x, y);
        let mut out = gx;
        out.extend(gy.iter().map(|v| -v));
        out
    })
}

/// Global Lipschitz constant `L = 2 · max{L_xx, L_xy, L_yy, L_yx}`.
pub fn lipschitz_from_blocks(blocks: &BlockConstants) -> Result<f64> {
    let BlockConstants {
        l_xx,
        l_xy,
        l_yy,
        l_yx,
    } = *blocks;
    for v in [l_xx, l_xy, l_yy, l_yx] {
        if !(v >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "block constants must be nonnegative, got {v}"
            )));
        }
    }
    Ok(2.0 * l_xx.max(l_xy).max(l_yy).max(l_yx))
}

/// Relative Lipschitz constant λ = L/μ for an L-Lipschitz operator and a
/// μ-strongly convex generator.
pub fn relative_lipschitz_lambda(lipschitz: f64, mu: f64) -> Result<f64> {
    if !(lipschitz >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "L must be nonnegative, got {lipschitz}"
        )));
    }
    if !(mu > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "mu must be positive, got {mu}"
        )));
    }
    Ok(lipschitz / mu)
}

/// Empirical lower bound on the Lipschitz constant: the maximum ratio
/// `|F(u)-F(v)| / |u-v|` over seeded sample pairs drawn from the ball of the
/// given radius. Deterministic given the seed. This is a sampling estimate,
/// never an upper bound; schedules derived from it are heuristic.
pub fn estimate_lipschitz(
    op: &OperatorHandle,
    sample_count: usize,
    radius: f64,
    seed: u64,
) -> Result<f64> {
    if sample_count < 2 {
        return Err(Error::InvalidArgument(format!(
            "sample_count must be at least 2, got {sample_count}"
        )));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "radius must be positive, got {radius}"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let dim = op.dimension();
    let points: Vec<Vec<f64>> = (0..sample_count)
        .map(|_| rng.in_ball(dim, radius))
        .collect();
    let values: Vec<Vec<f64>> = points.iter().map(|p| op.apply(p)).collect::<Result<_>>()?;
    let mut best: Option<f64> = None;
    for i in 0..sample_count {
        for j in (i + 1)..sample_count {
            let du = crate::linalg::dist(&points[i], &points[j]);
            if du <= 1e-14 {
                continue;
            }
            let df = crate::linalg::dist(&values[i], &values[j]);
            let ratio = df / du;
            best = Some(best.map_or(ratio, |b: f64| b.max(ratio)));
        }
    }
    best.ok_or_else(|| Error::DegenerateSample("all sampled pairs coincide".into()))
}

/// Residual of the relative Lipschitz inequality
/// `⟨F(v)-F(u), v-z⟩ - λ(D(v,u;u*) + D(z,v;v*))`; nonpositive (up to
/// rounding) whenever λ dominates L/μ.
#[allow(clippy::too_many_arguments)]
pub fn relative_lipschitz_residual(
    op: &OperatorHandle,
    gen: &BregmanGenerator,
    u: &[f64],
    u_star: &[f64],
    v: &[f64],
    v_star: &[f64],
    z: &[f64],
    lambda: f64,
) -> Result<f64> {
    let d_vu = gen.distance(v, u, u_star)?;
    let d_zv = gen.distance(z, v, v_star)?;
    let fv = op.apply(v)?;
    let fu = op.apply(u)?;
    Ok(dot(&sub(&fv, &fu), &sub(v, z)) - lambda * (d_vu + d_zv))
}

/// `⟨F(u)-F(v), u-v⟩`; nonnegative for monotone operators.
pub fn monotonicity_residual(op: &OperatorHandle, u: &[f64], v: &[f64]) -> Result<f64> {
    let fu = op.apply(u)?;
    let fv = op.apply(v)?;
    Ok(dot(&sub(&fu, &fv), &sub(u, v)))
}

/// Probe helper: `|F(z̄)|` at the problem's stored saddle point.
pub fn saddle_residual(problem: &std::sync::Arc<SaddleProblem>) -> Option<f64> {
    let z = problem.saddle_joint()?;
    let op = saddle_operator(problem);
    Some(norm(&op.apply(&z).ok()?))
}
