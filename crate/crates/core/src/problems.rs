//! Concrete saddle point test instances with exact-solution oracles.
//!
//! Two families:
//!
//! * bilinear games  f(x, y) = xᵀA y + bᵀx + cᵀy, whose saddle points solve
//!   Aȳ + b = 0 and Aᵀx̄ + c = 0;
//! * quadratic saddles  f = ½xᵀPx + xᵀAy - ½yᵀQy + bᵀx + cᵀy with P, Q
//!   symmetric PSD, whose saddle points solve the stationarity system
//!   [P A; Aᵀ -Q][x̄; ȳ] = [-b; -c].
//!
//! Saddle oracles come from direct dense solves; random instances sample the
//! saddle point first and derive b, c from it, so an exact solution is known
//! by construction. Block Lipschitz constants are spectral norms computed by
//! power iteration.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    add, least_norm_solve, scale, spectral_norm, sub, symmetric_eigenvalues, Matrix,
};
use crate::operators::{BlockConstants, SaddleProblem};
use crate::rng::SplitMix64;

/// Tolerance for accepting a computed saddle candidate, relative to the
/// right-hand side scale.
const SADDLE_SOLVE_TOL: f64 = 1e-9;

/// PSD acceptance: smallest eigenvalue may be this negative (rounding slack).
const PSD_EIG_TOL: f64 = 1e-10;

/// Instance family tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Bilinear,
    Quadratic,
}

/// A bilinear game f(x, y) = xᵀA y + bᵀx + cᵀy.
#[derive(Debug, Clone)]
pub struct BilinearGame {
    pub a: Matrix,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

/// A quadratic saddle f = ½xᵀPx + xᵀAy - ½yᵀQy + bᵀx + cᵀy.
#[derive(Debug, Clone)]
pub struct QuadraticSaddle {
    pub p: Matrix,
    pub q: Matrix,
    pub a: Matrix,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

/// Builds a bilinear game with its exact saddle point from least-norm solves
/// of the two stationarity systems. Rejects instances whose systems are
/// inconsistent (no saddle point exists).
pub fn make_bilinear(a: Matrix, b: Vec<f64>, c: Vec<f64>) -> Result<Arc<SaddleProblem>> {
    let m = a.rows();
    let n = a.cols();
    if b.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: b.len(),
        });
    }
    if c.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: c.len(),
        });
    }
    // Aᵀ x̄ = -c  and  A ȳ = -b
    let at = a.transpose();
    let x_bar = least_norm_solve(&at, &scale(&c, -1.0), SADDLE_SOLVE_TOL)?
        .ok_or_else(|| Error::NoSaddlePoint("system Aᵀx = -c is inconsistent".into()))?;
    let y_bar = least_norm_solve(&a, &scale(&b, -1.0), SADDLE_SOLVE_TOL)?
        .ok_or_else(|| Error::NoSaddlePoint("system Ay = -b is inconsistent".into()))?;
    let norm_a = spectral_norm(&a);
    let blocks = BlockConstants::new(0.0, norm_a, 0.0, norm_a)?;
    Ok(bilinear_problem(
        BilinearGame { a, b, c },
        blocks,
        (x_bar, y_bar),
    ))
}

/// Builds a quadratic saddle with its exact saddle point from a dense solve
/// of the stationarity system. P and Q must be symmetric PSD.
pub fn make_quadratic(
    p: Matrix,
    q: Matrix,
    a: Matrix,
    b: Vec<f64>,
    c: Vec<f64>,
) -> Result<Arc<SaddleProblem>> {
    let m = a.rows();
    let n = a.cols();
    if p.rows() != m || p.cols() != m {
        return Err(Error::InvalidArgument(format!(
            "P must be {m}x{m}, got {}x{}",
            p.rows(),
            p.cols()
        )));
    }
    if q.rows() != n || q.cols() != n {
        return Err(Error::InvalidArgument(format!(
            "Q must be {n}x{n}, got {}x{}",
            q.rows(),
            q.cols()
        )));
    }
    if b.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: b.len(),
        });
    }
    if c.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: c.len(),
        });
    }
    check_psd(&p, "P")?;
    check_psd(&q, "Q")?;

    // stationarity: [P A; Aᵀ -Q] [x; y] = [-b; -c]
    let kkt = Matrix::saddle_block(&p, &q, &a);
    let mut rhs = scale(&b, -1.0);
    rhs.extend(scale(&c, -1.0));
    let z = least_norm_solve(&kkt, &rhs, SADDLE_SOLVE_TOL)?
        .ok_or_else(|| Error::NoSaddlePoint("stationarity system is inconsistent".into()))?;
    let (x_bar, y_bar) = (z[..m].to_vec(), z[m..].to_vec());

    let norm_a = spectral_norm(&a);
    let blocks = BlockConstants::new(spectral_norm(&p), norm_a, spectral_norm(&q), norm_a)?;
    Ok(quadratic_problem(
        QuadraticSaddle { p, q, a, b, c },
        blocks,
        (x_bar, y_bar),
    ))
}

/// Deterministic random instance with a saddle point known by construction:
/// all raw entries are uniform on [-scale, scale] from a SplitMix64 stream,
/// P and Q are made PSD as MᵀM, and b, c are derived from a sampled saddle
/// point so the stationarity system holds exactly.
pub fn random_instance(
    kind: ProblemKind,
    dims: (usize, usize),
    seed: u64,
    scale_bound: f64,
) -> Arc<SaddleProblem> {
    let (m, n) = dims;
    assert!(m >= 1 && n >= 1, "dims must be at least 1x1");
    let mut rng = SplitMix64::new(seed);
    let a = Matrix::new(m, n, rng.uniform_vec(m * n, -scale_bound, scale_bound)).unwrap();
    match kind {
        ProblemKind::Bilinear => {
            let x0 = rng.uniform_vec(m, -scale_bound, scale_bound);
            let y0 = rng.uniform_vec(n, -scale_bound, scale_bound);
            // b = -A y0, c = -Aᵀ x0 makes (x0, y0) stationary
            let b = scale(&a.matvec(&y0), -1.0);
            let c = scale(&a.t_matvec(&x0), -1.0);
            let norm_a = spectral_norm(&a);
            let blocks = BlockConstants::new(0.0, norm_a, 0.0, norm_a).unwrap();
            bilinear_problem(BilinearGame { a, b, c }, blocks, (x0, y0))
        }
        ProblemKind::Quadratic => {
            let mp = Matrix::new(m, m, rng.uniform_vec(m * m, -scale_bound, scale_bound)).unwrap();
            let mq = Matrix::new(n, n, rng.uniform_vec(n * n, -scale_bound, scale_bound)).unwrap();
            let p = mp.transpose().matmul(&mp);
            let q = mq.transpose().matmul(&mq);
            let x0 = rng.uniform_vec(m, -scale_bound, scale_bound);
            let y0 = rng.uniform_vec(n, -scale_bound, scale_bound);
            // b = -(P x0 + A y0), c = Q y0 - Aᵀ x0
            let b = scale(&add(&p.matvec(&x0), &a.matvec(&y0)), -1.0);
            let c = sub(&q.matvec(&y0), &a.t_matvec(&x0));
            let norm_a = spectral_norm(&a);
            let blocks =
                BlockConstants::new(spectral_norm(&p), norm_a, spectral_norm(&q), norm_a).unwrap();
            quadratic_problem(QuadraticSaddle { p, q, a, b, c }, blocks, (x0, y0))
        }
    }
}

fn check_psd(m: &Matrix, name: &str) -> Result<()> {
    let eigs = symmetric_eigenvalues(m)
        .map_err(|_| Error::InvalidArgument(format!("{name} must be symmetric")))?;
    let min_eig = eigs.first().copied().unwrap_or(0.0);
    let scale = eigs.last().copied().unwrap_or(0.0).abs().max(1.0);
    if min_eig < -PSD_EIG_TOL * scale {
        return Err(Error::InvalidArgument(format!(
            "{name} is not positive semidefinite (min eigenvalue {min_eig:.3e})"
        )));
    }
    Ok(())
}

fn bilinear_problem(
    game: BilinearGame,
    blocks: BlockConstants,
    saddle: (Vec<f64>, Vec<f64>),
) -> Arc<SaddleProblem> {
    let BilinearGame { a, b, c } = game;
    let (m, n) = (a.rows(), a.cols());
    let a_val = a.clone();
    let a_gx = a.clone();
    let a_gy = a;
    let b_val = b.clone();
    let b_gx = b;
    let c_val = c.clone();
    let c_gy = c;
    Arc::new(SaddleProblem::new(
        (m, n),
        move |x, y| {
            let ay = a_val.matvec(y);
            crate::linalg::dot(x, &ay)
                + crate::linalg::dot(&b_val, x)
                + crate::linalg::dot(&c_val, y)
        },
        move |_x, y| add(&a_gx.matvec(y), &b_gx),
        move |x, _y| add(&a_gy.t_matvec(x), &c_gy),
        blocks,
        Some(saddle),
    ))
}

fn quadratic_problem(
    inst: QuadraticSaddle,
    blocks: BlockConstants,
    saddle: (Vec<f64>, Vec<f64>),
) -> Arc<SaddleProblem> {
    let QuadraticSaddle { p, q, a, b, c } = inst;
    let (m, n) = (a.rows(), a.cols());
    let (p_val, p_gx) = (p.clone(), p);
    let (q_val, q_gy) = (q.clone(), q);
    let (a_val, a_gx, a_gy) = (a.clone(), a.clone(), a);
    let (b_val, b_gx) = (b.clone(), b);
    let (c_val, c_gy) = (c.clone(), c);
    Arc::new(SaddleProblem::new(
        (m, n),
        move |x, y| {
            let px = p_val.matvec(x);
            let qy = q_val.matvec(y);
            let ay = a_val.matvec(y);
            0.5 * crate::linalg::dot(x, &px) + crate::linalg::dot(x, &ay)
                - 0.5 * crate::linalg::dot(y, &qy)
                + crate::linalg::dot(&b_val, x)
                + crate::linalg::dot(&c_val, y)
        },
        // grad order matches the b, c derivation in random_instance exactly,
        // so F vanishes bit-for-bit at the generated saddle
        move |x, y| add(&add(&p_gx.matvec(x), &a_gx.matvec(y)), &b_gx),
        move |x, y| add(&sub(&a_gy.t_matvec(x), &q_gy.matvec(y)), &c_gy),
        blocks,
        Some(saddle),
    ))
}

// ---------------------------------------------------------------------------
// instance (de)serialization
// ---------------------------------------------------------------------------

/// Serializable instance document. Matrices are row-major; floats round-trip
/// bit-exactly through JSON (shortest-representation encoding).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct InstanceDoc {
    pub kind: ProblemKind,
    pub m: usize,
    pub n: usize,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<f64>>,
    #[serde(rename = "P", default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<f64>>,
    #[serde(rename = "Q", default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

impl InstanceDoc {
    /// Builds the problem this document describes: inline matrices when
    /// present, otherwise a seeded random instance.
    pub fn build(&self) -> Result<Arc<SaddleProblem>> {
        let (m, n) = (self.m, self.n);
        if m == 0 || n == 0 {
            return Err(Error::Config("problem dims must be at least 1x1".into()));
        }
        if let Some(a_data) = &self.a {
            let a = Matrix::new(m, n, a_data.clone())
                .map_err(|e| Error::Config(format!("field A: {e}")))?;
            let b = self
                .b
                .clone()
                .ok_or_else(|| Error::Config("inline problem needs field b".into()))?;
            let c = self
                .c
                .clone()
                .ok_or_else(|| Error::Config("inline problem needs field c".into()))?;
            match self.kind {
                ProblemKind::Bilinear => make_bilinear(a, b, c),
                ProblemKind::Quadratic => {
                    let p_data = self
                        .p
                        .clone()
                        .ok_or_else(|| Error::Config("quadratic problem needs field P".into()))?;
                    let q_data = self
                        .q
                        .clone()
                        .ok_or_else(|| Error::Config("quadratic problem needs field Q".into()))?;
                    let p = Matrix::new(m, m, p_data)
                        .map_err(|e| Error::Config(format!("field P: {e}")))?;
                    let q = Matrix::new(n, n, q_data)
                        .map_err(|e| Error::Config(format!("field Q: {e}")))?;
                    make_quadratic(p, q, a, b, c)
                }
            }
        } else {
            let seed = self.seed.ok_or_else(|| {
                Error::Config("problem needs either inline matrices or a seed".into())
            })?;
            let scale = self.scale.unwrap_or(1.0);
            if !(scale > 0.0) {
                return Err(Error::Config(format!(
                    "scale must be positive, got {scale}"
                )));
            }
            Ok(random_instance(self.kind, (m, n), seed, scale))
        }
    }

    /// Document for a seeded random instance.
    pub fn seeded(kind: ProblemKind, m: usize, n: usize, seed: u64, scale: f64) -> Self {
        Self {
            kind,
            m,
            n,
            a: None,
            p: None,
            q: None,
            b: None,
            c: None,
            seed: Some(seed),
            scale: Some(scale),
        }
    }
}
