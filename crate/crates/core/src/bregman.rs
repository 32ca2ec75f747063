//! Bregman distance generators and their calculus.
//!
//! A generator is a strongly convex function ω with modulus μ together with
//! its mirror map ∇ω* (the gradient of the convex conjugate) and a canonical
//! subgradient selector. The distance it induces between `u` and `v`, with
//! respect to a subgradient `v* ∈ ∂ω(v)`, is
//!
//! ```text
//! D(u, v; v*) = ω(u) - ω(v) - ⟨v*, u - v⟩  ≥  (μ/2) |u - v|²
//! ```
//!
//! Three generators are built in:
//!
//! * `euclidean`: ω = ½|u|², mirror = identity — recovers plain gradient
//!   geometry;
//! * `augmented_l1`: ω = γ|u|₁ + ½|u|², mirror = soft-thresholding, which
//!   makes solver iterates exactly sparse;
//! * `prox_regularized`: ω = ψ + ½|u|² for any convex ψ with a cheap
//!   proximal operator, mirror = prox_ψ.
//!
//! Generators are immutable and safe to share across concurrent solver runs;
//! every operation is a pure function of its inputs.

use crate::error::{Error, Result};
use crate::linalg::{dist, dot, norm, sub};

/// Tolerance for accepting a dual vector as a subgradient at a given point,
/// checked via `|mirror(dual) - primal|`. Loose enough for accumulated float
/// error, tight enough to catch a wrong dual.
pub const DUAL_CHECK_TOL: f64 = 1e-8;

/// Tighter tolerance used for the primal-dual consistency invariant of
/// algorithm state, where both sides are produced by the same mirror map.
pub const PAIR_CHECK_TOL: f64 = 1e-10;

type ScalarFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type VectorFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// Which built-in family a generator belongs to; used for reporting and to
/// dispatch the few places with closed forms (ball maxima).
#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorKind {
    Euclidean,
    AugmentedL1 { gamma: f64 },
    ProxRegularized { label: String },
}

/// A strongly convex distance generator ω with its mirror map and
/// subgradient selector.
pub struct BregmanGenerator {
    dimension: usize,
    modulus: f64,
    kind: GeneratorKind,
    eval: Box<ScalarFn>,
    mirror: Box<VectorFn>,
    subgrad: Option<Box<VectorFn>>,
}

impl std::fmt::Debug for BregmanGenerator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BregmanGenerator")
            .field("dimension", &self.dimension)
            .field("modulus", &self.modulus)
            .field("kind", &self.kind)
            .finish()
    }
}

impl BregmanGenerator {
    /// ω(u) = ½|u|²: mirror and subgradient are both the identity, μ = 1.
    pub fn euclidean(dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidArgument(
                "dimension must be at least 1".into(),
            ));
        }
        Ok(Self {
            dimension,
            modulus: 1.0,
            kind: GeneratorKind::Euclidean,
            eval: Box::new(|u: &[f64]| 0.5 * dot(u, u)),
            mirror: Box::new(|u: &[f64]| u.to_vec()),
            subgrad: Some(Box::new(|u: &[f64]| u.to_vec())),
        })
    }

    /// ω(u) = γ|u|₁ + ½|u|²: the mirror map is the shrinkage operator S_γ,
    /// μ = 1. The canonical subgradient offsets by γ·sign(u), with offset 0
    /// at zero coordinates so the selection is deterministic.
    pub fn augmented_l1(dimension: usize, gamma: f64) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidArgument(
                "dimension must be at least 1".into(),
            ));
        }
        if !(gamma > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        Ok(Self {
            dimension,
            modulus: 1.0,
            kind: GeneratorKind::AugmentedL1 { gamma },
            eval: Box::new(move |u: &[f64]| {
                gamma * u.iter().map(|x| x.abs()).sum::<f64>() + 0.5 * dot(u, u)
            }),
            mirror: Box::new(move |u: &[f64]| shrinkage(gamma, u)),
            subgrad: Some(Box::new(move |u: &[f64]| {
                u.iter().map(|&x| x + gamma * sign(x)).collect()
            })),
        })
    }

    /// ω(u) = ψ(u) + ½|u|² for a convex ψ whose exact proximal operator is
    /// supplied by the caller; the mirror map is that prox, μ = 1.
    ///
    /// The subgradient selector cannot be derived from the prox alone, so it
    /// is optional: pass `Some(∂ψ selector)` to enable subgradient-based
    /// initialization and diagnostics, or `None` to construct solver state
    /// from dual points only.
    pub fn prox_regularized(
        dimension: usize,
        label: impl Into<String>,
        psi_eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        psi_prox: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        psi_subgrad: Option<Box<VectorFn>>,
    ) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidArgument(
                "dimension must be at least 1".into(),
            ));
        }
        let subgrad: Option<Box<VectorFn>> = psi_subgrad.map(|sg| {
            Box::new(move |u: &[f64]| {
                let g = sg(u);
                u.iter().zip(&g).map(|(x, gx)| x + gx).collect()
            }) as Box<VectorFn>
        });
        Ok(Self {
            dimension,
            modulus: 1.0,
            kind: GeneratorKind::ProxRegularized {
                label: label.into(),
            },
            eval: Box::new(move |u: &[f64]| psi_eval(u) + 0.5 * dot(u, u)),
            mirror: Box::new(psi_prox),
            subgrad,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Strong convexity modulus μ.
    pub fn modulus(&self) -> f64 {
        self.modulus
    }

    pub fn kind(&self) -> &GeneratorKind {
        &self.kind
    }

    /// ω(u).
    pub fn eval(&self, u: &[f64]) -> f64 {
        (self.eval)(u)
    }

    /// ∇ω*(u*): maps a dual point back to the primal space.
    pub fn mirror(&self, u_star: &[f64]) -> Vec<f64> {
        (self.mirror)(u_star)
    }

    /// Canonical element of ∂ω(u), when the generator has a selector.
    pub fn subgrad(&self, u: &[f64]) -> Result<Vec<f64>> {
        match &self.subgrad {
            Some(f) => Ok(f(u)),
            None => Err(Error::Unsupported(
                "generator has no subgradient selector; construct duals explicitly".into(),
            )),
        }
    }

    pub fn has_subgrad(&self) -> bool {
        self.subgrad.is_some()
    }

    /// ω*(u*) through the Fenchel equality ω*(u*) = ⟨∇ω*(u*), u*⟩ - ω(∇ω*(u*)),
    /// exact for any generator with an exact mirror map.
    pub fn conjugate_eval(&self, u_star: &[f64]) -> f64 {
        let u = self.mirror(u_star);
        dot(&u, u_star) - self.eval(&u)
    }

    /// Checks `v* ∈ ∂ω(v)` via the mirror map; error when the round trip
    /// misses `v` by more than `DUAL_CHECK_TOL`.
    pub fn check_dual(&self, v: &[f64], v_star: &[f64]) -> Result<()> {
        let mismatch = dist(&self.mirror(v_star), v);
        if mismatch <= DUAL_CHECK_TOL {
            Ok(())
        } else {
            Err(Error::InconsistentDual {
                mismatch,
                tolerance: DUAL_CHECK_TOL,
            })
        }
    }

    /// D(u, v; v*) = ω(u) - ω(v) - ⟨v*, u - v⟩ for `v* ∈ ∂ω(v)`.
    pub fn distance(&self, u: &[f64], v: &[f64], v_star: &[f64]) -> Result<f64> {
        self.check_dual(v, v_star)?;
        Ok(self.distance_unchecked(u, v, v_star))
    }

    /// Same as [`distance`](Self::distance) without the subgradient check;
    /// for hot loops over algorithm-produced dual pairs.
    pub fn distance_unchecked(&self, u: &[f64], v: &[f64], v_star: &[f64]) -> f64 {
        self.eval(u) - self.eval(v) - dot(v_star, &sub(u, v))
    }

    /// Residual of the three-point identity
    /// `D(u,p;p*) - D(u,q;q*) + D(p,q;q*) - ⟨q*-p*, u-p⟩`; zero up to
    /// rounding for any inputs that pass the subgradient checks.
    pub fn three_point_residual(
        &self,
        u: &[f64],
        p: &[f64],
        p_star: &[f64],
        q: &[f64],
        q_star: &[f64],
    ) -> Result<f64> {
        self.check_dual(p, p_star)?;
        self.check_dual(q, q_star)?;
        let lhs = self.distance_unchecked(u, p, p_star) - self.distance_unchecked(u, q, q_star)
            + self.distance_unchecked(p, q, q_star);
        let rhs = dot(&sub(q_star, p_star), &sub(u, p));
        Ok(lhs - rhs)
    }

    /// Residual of the primal-dual distance symmetry
    /// `|D_ω(p,q;q*) - D_ω*(q*,p*;p)|` where the conjugate-side distance is
    /// `ω*(q*) - ω*(p*) - ⟨p, q*-p*⟩`.
    pub fn conjugate_duality_residual(
        &self,
        p: &[f64],
        p_star: &[f64],
        q: &[f64],
        q_star: &[f64],
    ) -> Result<f64> {
        self.check_dual(p, p_star)?;
        self.check_dual(q, q_star)?;
        let primal_side = self.distance_unchecked(p, q, q_star);
        let dual_side = self.conjugate_eval(q_star)
            - self.conjugate_eval(p_star)
            - dot(p, &sub(q_star, p_star));
        Ok((primal_side - dual_side).abs())
    }
}

/// Componentwise soft-thresholding `sign(u) · max(|u| - γ, 0)`.
///
/// The zero branch produces an exact 0.0, never a rounded tiny value, so
/// sparsity of mirror outputs is measurable by bit-exact equality.
pub fn shrinkage(gamma: f64, u: &[f64]) -> Vec<f64> {
    debug_assert!(gamma >= 0.0);
    u.iter()
        .map(|&x| {
            let mag = x.abs() - gamma;
            if mag > 0.0 {
                x.signum() * mag
            } else {
                0.0
            }
        })
        .collect()
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// A primal point and a dual point linked by `primal = ∇ω*(dual)`; the unit
/// of solver state.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPair {
    pub primal: Vec<f64>,
    pub dual: Vec<f64>,
}

impl DualPair {
    /// Builds the pair from a primal point via the canonical subgradient.
    pub fn from_primal(gen: &BregmanGenerator, primal: &[f64]) -> Result<Self> {
        let dual = gen.subgrad(primal)?;
        Ok(Self {
            primal: primal.to_vec(),
            dual,
        })
    }

    /// Builds the pair from a dual point; consistency holds by construction
    /// since the primal is set to `mirror(dual)`.
    pub fn from_dual(gen: &BregmanGenerator, dual: &[f64]) -> Self {
        let primal = gen.mirror(dual);
        Self {
            primal,
            dual: dual.to_vec(),
        }
    }

    /// Accepts an existing pair after checking `|mirror(dual) - primal|`
    /// against the pair tolerance.
    pub fn checked(gen: &BregmanGenerator, primal: Vec<f64>, dual: Vec<f64>) -> Result<Self> {
        let mismatch = dist(&gen.mirror(&dual), &primal);
        if mismatch > PAIR_CHECK_TOL {
            return Err(Error::InconsistentDual {
                mismatch,
                tolerance: PAIR_CHECK_TOL,
            });
        }
        Ok(Self { primal, dual })
    }

    /// `|mirror(dual) - primal|`, the consistency defect.
    pub fn consistency_error(&self, gen: &BregmanGenerator) -> f64 {
        dist(&gen.mirror(&self.dual), &self.primal)
    }

    pub fn dimension(&self) -> usize {
        self.primal.len()
    }
}

/// Norm helper re-exported for callers that talk in residuals.
pub fn residual_norm(v: &[f64]) -> f64 {
    norm(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    #[test]
    fn euclidean_eval_and_mirror() {
        let gen = BregmanGenerator::euclidean(2).unwrap();
        assert_eq!(gen.eval(&[3.0, 4.0]), 12.5);
        assert_eq!(gen.mirror(&[1.0, -2.0]), vec![1.0, -2.0]);
        let d = gen.distance(&[1.0, 0.0], &[0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_eq!(d, 0.5);
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(BregmanGenerator::euclidean(0).is_err());
        assert!(BregmanGenerator::augmented_l1(0, 1.0).is_err());
    }

    #[test]
    fn augmented_l1_eval_mirror_subgrad() {
        let gen = BregmanGenerator::augmented_l1(2, 2.0).unwrap();
        assert_eq!(gen.eval(&[1.0, -1.0]), 5.0);

        let gen1 = BregmanGenerator::augmented_l1(3, 1.0).unwrap();
        assert_eq!(gen1.mirror(&[2.0, -0.5, 0.0]), vec![1.0, 0.0, 0.0]);
        assert_eq!(gen1.subgrad(&[0.5, 0.0]).unwrap(), vec![1.5, 0.0]);
    }

    #[test]
    fn augmented_l1_rejects_nonpositive_gamma() {
        assert!(BregmanGenerator::augmented_l1(2, 0.0).is_err());
        assert!(BregmanGenerator::augmented_l1(2, -1.0).is_err());
    }

    #[test]
    fn shrinkage_definition_and_identity() {
        assert_eq!(shrinkage(1.0, &[2.0, -0.5, 0.0]), vec![1.0, 0.0, 0.0]);
        let u = [0.3, -2.0, 7.5];
        assert_eq!(shrinkage(0.0, &u), u.to_vec());
    }

    #[test]
    fn shrinkage_zeros_are_bit_exact() {
        let out = shrinkage(1.0, &[0.999_999_999, -1e-300, 0.5]);
        assert_eq!(out[0].to_bits(), 0.0f64.to_bits());
        assert_eq!(out[1].to_bits(), 0.0f64.to_bits());
        assert_eq!(out[2].to_bits(), 0.0f64.to_bits());
    }

    #[test]
    fn distance_matches_hand_computation_for_l1() {
        // ω(1) = γ + ½, ω(-1) = γ + ½, ⟨v*, u-v⟩ = (-2)(2) with γ=1
        let gen = BregmanGenerator::augmented_l1(1, 1.0).unwrap();
        let d = gen.distance(&[1.0], &[-1.0], &[-2.0]).unwrap();
        assert_eq!(d, 4.0);
    }

    #[test]
    fn distance_rejects_wrong_dual() {
        let gen = BregmanGenerator::augmented_l1(1, 1.0).unwrap();
        // mirror(5) = 4 ≠ 1, so 5 is not a subgradient at 1
        let err = gen.distance(&[0.0], &[1.0], &[5.0]).unwrap_err();
        assert!(matches!(err, Error::InconsistentDual { .. }));
    }

    #[test]
    fn mirror_subgrad_round_trip() {
        let euclid = BregmanGenerator::euclidean(5).unwrap();
        let aug = BregmanGenerator::augmented_l1(5, 0.7).unwrap();
        let mut rng = SplitMix64::new(11);
        for _ in 0..200 {
            let mut u = rng.uniform_vec(5, -4.0, 4.0);
            u[0] = 0.0; // exercise the zero-coordinate selector branch
            for gen in [&euclid, &aug] {
                let back = gen.mirror(&gen.subgrad(&u).unwrap());
                assert!(dist(&back, &u) <= 1e-10);
            }
        }
    }

    #[test]
    fn three_point_identity_trivial_case() {
        let gen = BregmanGenerator::euclidean(3).unwrap();
        let u = [1.0, 2.0, 3.0];
        let r = gen.three_point_residual(&u, &u, &u, &u, &u).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn conjugate_duality_euclidean_both_sides() {
        let gen = BregmanGenerator::euclidean(2).unwrap();
        let p = [1.0, 2.0];
        let q = [3.0, -1.0];
        let r = gen.conjugate_duality_residual(&p, &p, &q, &q).unwrap();
        assert!(r <= 1e-12);
        // and the primal side is ½|p-q|²
        let d = gen.distance(&p, &q, &q).unwrap();
        assert!((d - 0.5 * (4.0 + 9.0)).abs() < 1e-12);
    }

    #[test]
    fn prox_of_zero_matches_euclidean() {
        let gen = BregmanGenerator::prox_regularized(
            3,
            "zero",
            |_| 0.0,
            |u| u.to_vec(),
            Some(Box::new(|u: &[f64]| vec![0.0; u.len()])),
        )
        .unwrap();
        let euclid = BregmanGenerator::euclidean(3).unwrap();
        let mut rng = SplitMix64::new(3);
        for _ in 0..100 {
            let u = rng.uniform_vec(3, -5.0, 5.0);
            assert_eq!(gen.mirror(&u), euclid.mirror(&u));
            assert!((gen.eval(&u) - euclid.eval(&u)).abs() < 1e-15);
        }
    }

    #[test]
    fn prox_of_half_squared_halves_duals() {
        // ψ = ½|u|² has prox(u) = u/2; check the mirror plus first-order
        // optimality ψ'(v) + (v - u) = 0 at v = mirror(u).
        let gen = BregmanGenerator::prox_regularized(
            2,
            "half_squared",
            |u| 0.5 * dot(u, u),
            |u| u.iter().map(|x| x / 2.0).collect(),
            Some(Box::new(|u: &[f64]| u.to_vec())),
        )
        .unwrap();
        let u = [3.0, -8.0];
        let v = gen.mirror(&u);
        assert_eq!(v, vec![1.5, -4.0]);
        for i in 0..2 {
            let opt_resid = v[i] + (v[i] - u[i]);
            assert!(opt_resid.abs() < 1e-12);
        }
    }

    #[test]
    fn dual_pair_from_dual_always_consistent() {
        let gen = BregmanGenerator::augmented_l1(4, 1.3).unwrap();
        let pair = DualPair::from_dual(&gen, &[2.0, -0.4, 0.0, 5.0]);
        assert!(pair.consistency_error(&gen) == 0.0);
    }

    #[test]
    fn dual_pair_checked_rejects_mismatch() {
        let gen = BregmanGenerator::euclidean(2).unwrap();
        let err = DualPair::checked(&gen, vec![1.0, 0.0], vec![0.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::InconsistentDual { .. }));
    }

    #[test]
    fn subgrad_unsupported_without_selector() {
        let gen =
            BregmanGenerator::prox_regularized(2, "opaque", |_| 0.0, |u| u.to_vec(), None).unwrap();
        assert!(matches!(
            gen.subgrad(&[1.0, 2.0]),
            Err(Error::Unsupported(_))
        ));
    }
}
