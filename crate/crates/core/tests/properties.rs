//! Property tests: invariants of the distance calculus, the operators, and
//! the solver specializations under randomized inputs.

use std::sync::Arc;

use proptest::prelude::*;

use bregmax::bregman::{shrinkage, BregmanGenerator, DualPair};
use bregmax::linalg::{dist, norm, Matrix};
use bregmax::operators::{
    estimate_lipschitz, lipschitz_from_blocks, monotonicity_residual, relative_lipschitz_residual,
    saddle_operator, OperatorHandle, SaddleProblem,
};
use bregmax::problems::{random_instance, ProblemKind};
use bregmax::rng::SplitMix64;
use bregmax::solvers::{beg_step, bep_step, classical_eg_step, ogda_step, SolverState};

fn vec_strategy(len: usize, bound: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-bound..bound, len)
}

proptest! {
    #[test]
    fn shrinkage_is_nonexpansive(u in vec_strategy(6, 10.0), v in vec_strategy(6, 10.0), gamma in 0.0..3.0f64) {
        let su = shrinkage(gamma, &u);
        let sv = shrinkage(gamma, &v);
        prop_assert!(dist(&su, &sv) <= dist(&u, &v) + 1e-12);
    }

    #[test]
    fn shrinkage_satisfies_prox_optimality(u in -5.0..5.0f64, gamma in 1e-6..3.0f64) {
        // 0 ∈ γ∂|v| + (v - u) at v = S_γ(u), with the subgradient witness
        // (u - v)/γ in [-1, 1] (equal to sign(v) off zero)
        let v = shrinkage(gamma, &[u])[0];
        let witness = (u - v) / gamma;
        if v == 0.0 {
            prop_assert_eq!(v.to_bits(), 0.0f64.to_bits());
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&witness));
        } else {
            prop_assert!((witness - v.signum()).abs() <= 1e-12);
        }
    }

    #[test]
    fn mirror_subgrad_round_trip(u in vec_strategy(5, 8.0), gamma in 1e-3..2.0f64, zero_at in 0usize..5) {
        let mut u = u;
        u[zero_at] = 0.0;
        for gen in [
            BregmanGenerator::euclidean(5).unwrap(),
            BregmanGenerator::augmented_l1(5, gamma).unwrap(),
        ] {
            let back = gen.mirror(&gen.subgrad(&u).unwrap());
            prop_assert!(dist(&back, &u) <= 1e-10);
        }
    }

    #[test]
    fn three_point_identity_residual_small(
        u in vec_strategy(5, 4.0),
        p in vec_strategy(5, 4.0),
        q in vec_strategy(5, 4.0),
        gamma in 1e-3..2.0f64,
    ) {
        // the identity holds for any inputs; only rounding remains
        for (gen, tol) in [
            (BregmanGenerator::euclidean(5).unwrap(), 1e-12),
            (BregmanGenerator::augmented_l1(5, gamma).unwrap(), 1e-10),
        ] {
            let p_star = gen.subgrad(&p).unwrap();
            let q_star = gen.subgrad(&q).unwrap();
            let r = gen.three_point_residual(&u, &p, &p_star, &q, &q_star).unwrap();
            prop_assert!(r.abs() <= tol, "residual {}", r);
        }
    }

    #[test]
    fn block_lipschitz_bounds_hold_on_samples(
        seed in 0u64..40,
        x1 in vec_strategy(3, 3.0),
        x2 in vec_strategy(3, 3.0),
        y1 in vec_strategy(4, 3.0),
        y2 in vec_strategy(4, 3.0),
    ) {
        let kind = if seed % 2 == 0 { ProblemKind::Bilinear } else { ProblemKind::Quadratic };
        let problem = random_instance(kind, (3, 4), seed, 1.0);
        let blocks = problem.blocks();
        let slack = 1.0 + 1e-9;
        let gx1 = problem.grad_x(&x1, &y1);
        let gx2 = problem.grad_x(&x2, &y1);
        prop_assert!(dist(&gx1, &gx2) <= blocks.l_xx * dist(&x1, &x2) * slack + 1e-12);
        let gx3 = problem.grad_x(&x1, &y2);
        prop_assert!(dist(&gx1, &gx3) <= blocks.l_xy * dist(&y1, &y2) * slack + 1e-12);
        let gy1 = problem.grad_y(&x1, &y1);
        let gy2 = problem.grad_y(&x1, &y2);
        prop_assert!(dist(&gy1, &gy2) <= blocks.l_yy * dist(&y1, &y2) * slack + 1e-12);
        let gy3 = problem.grad_y(&x2, &y1);
        prop_assert!(dist(&gy1, &gy3) <= blocks.l_yx * dist(&x1, &x2) * slack + 1e-12);
    }

    #[test]
    fn distance_dominates_squared_norm(
        u in vec_strategy(5, 4.0),
        v in vec_strategy(5, 4.0),
        gamma in 1e-3..2.0f64,
    ) {
        for gen in [
            BregmanGenerator::euclidean(5).unwrap(),
            BregmanGenerator::augmented_l1(5, gamma).unwrap(),
        ] {
            let v_star = gen.subgrad(&v).unwrap();
            let d = gen.distance(&u, &v, &v_star).unwrap();
            prop_assert!(d >= 0.5 * gen.modulus() * dist(&u, &v).powi(2) - 1e-12);
        }
    }

    #[test]
    fn strong_convexity_along_segments(
        u in vec_strategy(4, 4.0),
        v in vec_strategy(4, 4.0),
        t in 0.0..1.0f64,
        gamma in 1e-3..2.0f64,
    ) {
        // ω(tu + (1-t)v) ≤ tω(u) + (1-t)ω(v) - ½μt(1-t)|u-v|²
        for gen in [
            BregmanGenerator::euclidean(4).unwrap(),
            BregmanGenerator::augmented_l1(4, gamma).unwrap(),
        ] {
            let mix: Vec<f64> = u.iter().zip(&v).map(|(a, b)| t * a + (1.0 - t) * b).collect();
            let lhs = gen.eval(&mix);
            let rhs = t * gen.eval(&u) + (1.0 - t) * gen.eval(&v)
                - 0.5 * gen.modulus() * t * (1.0 - t) * dist(&u, &v).powi(2);
            prop_assert!(lhs <= rhs + 1e-9, "lhs {} rhs {}", lhs, rhs);
        }
    }

    #[test]
    fn update_average_matches_direct_sum(
        weights in prop::collection::vec(1e-3..5.0f64, 1..20),
        points in prop::collection::vec(-10.0..10.0f64, 20),
    ) {
        let mut avg: Vec<f64> = Vec::new();
        let mut s = 0.0;
        for (i, r) in weights.iter().enumerate() {
            let (a, ns) = bregmax::solvers::update_average(&avg, s, &[points[i]], *r).unwrap();
            avg = a;
            s = ns;
        }
        let total: f64 = weights.iter().sum();
        let direct: f64 =
            weights.iter().enumerate().map(|(i, r)| r * points[i]).sum::<f64>() / total;
        prop_assert!((avg[0] - direct).abs() <= 1e-9 * direct.abs().max(1.0));
    }

    #[test]
    fn eg_and_beg_coincide_from_random_starts(start in vec_strategy(6, 5.0), seed in 0u64..50) {
        let problem = random_instance(ProblemKind::Bilinear, (3, 3), seed, 1.0);
        let gen = BregmanGenerator::euclidean(6).unwrap();
        let op = saddle_operator(&problem);
        let eta = 0.9 / lipschitz_from_blocks(&problem.blocks()).unwrap();
        let mut state = SolverState::initial(DualPair::from_primal(&gen, &start).unwrap());
        let mut u = start.clone();
        for _ in 0..25 {
            let out = beg_step(&gen, &op, &state, eta).unwrap();
            let (u_next, _, _) = classical_eg_step(&op, &u, eta).unwrap();
            prop_assert!(dist(&out.state.pair.primal, &u_next) <= 1e-12);
            state = out.state;
            u = u_next;
        }
    }

    #[test]
    fn ogda_and_bep_coincide_from_random_starts(start in vec_strategy(6, 5.0), seed in 0u64..50) {
        let problem = random_instance(ProblemKind::Quadratic, (3, 3), seed, 0.8);
        let gen = BregmanGenerator::euclidean(6).unwrap();
        let op = saddle_operator(&problem);
        let eta = 0.45 / lipschitz_from_blocks(&problem.blocks()).unwrap();
        let mut state = SolverState::initial(DualPair::from_primal(&gen, &start).unwrap());
        let mut u = start.clone();
        let mut f_prev: Option<Vec<f64>> = None;
        for _ in 0..25 {
            let out = bep_step(&gen, &op, &state, eta, 1.0).unwrap();
            let (u_next, f_u, _) = ogda_step(&op, &u, f_prev.as_deref(), eta).unwrap();
            prop_assert!(dist(&out.state.pair.primal, &u_next) <= 1e-12);
            state = out.state;
            u = u_next;
            f_prev = Some(f_u);
        }
    }

    #[test]
    fn saddle_operators_are_monotone(seed in 0u64..100, u in vec_strategy(8, 3.0), v in vec_strategy(8, 3.0)) {
        let kind = if seed % 2 == 0 { ProblemKind::Bilinear } else { ProblemKind::Quadratic };
        let problem = random_instance(kind, (4, 4), seed, 1.0);
        let op = saddle_operator(&problem);
        let r = monotonicity_residual(&op, &u, &v).unwrap();
        prop_assert!(r >= -1e-10, "monotonicity residual {}", r);
    }

    #[test]
    fn relative_lipschitz_holds_for_linear_operators(
        u in vec_strategy(4, 3.0),
        v in vec_strategy(4, 3.0),
        z in vec_strategy(4, 3.0),
        seed in 0u64..20,
    ) {
        // linear F(x) = Mx with λ = |M|₂ and Euclidean geometry
        let mut rng = SplitMix64::new(seed);
        let m = Matrix::new(4, 4, rng.uniform_vec(16, -2.0, 2.0)).unwrap();
        let lambda = bregmax::linalg::spectral_norm(&m);
        let m_op = m.clone();
        let op = OperatorHandle::new(4, Some(lambda), move |x| m_op.matvec(x));
        let gen = BregmanGenerator::euclidean(4).unwrap();
        let r = relative_lipschitz_residual(&op, &gen, &u, &u, &v, &v, &z, lambda).unwrap();
        prop_assert!(r <= 1e-10, "relative Lipschitz residual {}", r);
    }
}

#[test]
fn types_are_shareable_across_threads() {
    fn assert_send_sync<T: Send + Sync>() {}
    assert_send_sync::<BregmanGenerator>();
    assert_send_sync::<OperatorHandle>();
    assert_send_sync::<SaddleProblem>();
    assert_send_sync::<bregmax::solvers::Trace>();
}

#[test]
fn concurrent_runs_share_generator_and_operator() {
    // one generator and one operator drive several runs at once; results
    // match a sequential reference run exactly
    let problem = random_instance(ProblemKind::Bilinear, (4, 4), 77, 1.0);
    let gen = Arc::new(BregmanGenerator::euclidean(8).unwrap());
    let op = Arc::new(saddle_operator(&problem));
    let lambda = lipschitz_from_blocks(&problem.blocks()).unwrap();
    let schedule = bregmax::solvers::constant_beg_schedule(lambda, 1.0).unwrap();
    let run_once = |start: f64| {
        let init = DualPair::from_primal(&gen, &vec![start; 8]).unwrap();
        bregmax::solvers::run(
            bregmax::solvers::Method::Beg,
            &gen,
            &op,
            &schedule,
            init,
            40,
            bregmax::solvers::StoppingRule::none(),
            1,
        )
        .unwrap()
    };
    let sequential: Vec<_> = [0.5, 1.0, 2.0].iter().map(|s| run_once(*s)).collect();
    let concurrent: Vec<_> = std::thread::scope(|scope| {
        [0.5, 1.0, 2.0]
            .iter()
            .map(|s| scope.spawn(move || run_once(*s)))
            .collect::<Vec<_>>()
            .into_iter()
            .map(|h| h.join().unwrap())
            .collect()
    });
    for (a, b) in sequential.iter().zip(&concurrent) {
        assert_eq!(a.final_pair().primal, b.final_pair().primal);
    }
}

#[test]
fn relative_lipschitz_residual_vanishes_on_diagonal() {
    let gen = BregmanGenerator::euclidean(2).unwrap();
    let op = OperatorHandle::new(2, Some(1.0), |z| z.to_vec());
    let u = [1.0, -2.0];
    let r = relative_lipschitz_residual(&op, &gen, &u, &u, &u, &u, &u, 1.0).unwrap();
    assert_eq!(r, 0.0);
}

#[test]
fn relative_lipschitz_check_is_not_vacuous() {
    // with λ = 0 and a nonconstant operator, some triple must violate
    let gen = BregmanGenerator::euclidean(2).unwrap();
    let op = OperatorHandle::new(2, Some(2.0), |z| vec![2.0 * z[0], 2.0 * z[1]]);
    let mut rng = SplitMix64::new(5);
    let mut found = false;
    for _ in 0..200 {
        let u = rng.uniform_vec(2, -2.0, 2.0);
        let v = rng.uniform_vec(2, -2.0, 2.0);
        let z = rng.uniform_vec(2, -2.0, 2.0);
        let r = relative_lipschitz_residual(&op, &gen, &u, &u, &v, &v, &z, 0.0).unwrap();
        if r > 1e-6 {
            found = true;
            break;
        }
    }
    assert!(found, "no violating triple found for lambda = 0");
}

#[test]
fn saddle_gradients_match_finite_differences() {
    // central differences with step 1e-5, agreement to 1e-6: catches sign
    // errors in the negated y-block
    let h = 1e-5;
    for seed in 0..5u64 {
        for kind in [ProblemKind::Bilinear, ProblemKind::Quadratic] {
            let problem = random_instance(kind, (3, 4), seed, 1.0);
            let op = saddle_operator(&problem);
            let mut rng = SplitMix64::new(900 + seed);
            let z = rng.uniform_vec(7, -2.0, 2.0);
            let f_z = op.apply(&z).unwrap();
            for i in 0..7 {
                let mut zp = z.clone();
                let mut zm = z.clone();
                zp[i] += h;
                zm[i] -= h;
                let fp = problem.value_joint(&zp).unwrap();
                let fm = problem.value_joint(&zm).unwrap();
                let fd = (fp - fm) / (2.0 * h);
                // F = [∇ₓf; -∇ᵧf]: flip the sign on the y block
                let expected = if i < 3 { fd } else { -fd };
                assert!(
                    (f_z[i] - expected).abs() <= 1e-6,
                    "kind {kind:?} seed {seed} coord {i}: {} vs fd {expected}",
                    f_z[i]
                );
            }
        }
    }
}

#[test]
fn mixed_quadratic_operator_example() {
    // f(x, y) = ½x² - ½y² + xy has F(1, 1) = [x + y; -(x - y)] = [2, 0]
    let problem = Arc::new(SaddleProblem::new(
        (1, 1),
        |x, y| 0.5 * x[0] * x[0] - 0.5 * y[0] * y[0] + x[0] * y[0],
        |x, y| vec![x[0] + y[0]],
        |x, y| vec![-y[0] + x[0]],
        bregmax::operators::BlockConstants::new(1.0, 1.0, 1.0, 1.0).unwrap(),
        None,
    ));
    let op = saddle_operator(&problem);
    let f = op.apply(&[1.0, 1.0]).unwrap();
    assert!((f[0] - 2.0).abs() < 1e-12);
    assert!(f[1].abs() < 1e-12);
}

#[test]
fn estimated_lipschitz_stays_below_certified_bound() {
    for seed in 0..10u64 {
        let problem = random_instance(ProblemKind::Bilinear, (5, 5), seed, 1.0);
        let op = saddle_operator(&problem);
        let certified = lipschitz_from_blocks(&problem.blocks()).unwrap();
        let estimate = estimate_lipschitz(&op, 64, 2.0, seed).unwrap();
        assert!(
            estimate <= certified + 1e-9,
            "seed {seed}: estimate {estimate} above certified {certified}"
        );
    }
}

#[test]
fn estimated_lipschitz_approaches_spectral_norm() {
    // fixed 10x10 linear operator: the estimate is a lower bound on |M|₂
    // computed by power iteration, and grows toward it with more samples
    let mut rng = SplitMix64::new(31);
    let m = Matrix::new(10, 10, rng.uniform_vec(100, -1.0, 1.0)).unwrap();
    let sigma = bregmax::linalg::spectral_norm(&m);
    let m_op = m.clone();
    let op = OperatorHandle::new(10, Some(sigma), move |x| m_op.matvec(x));
    let coarse = estimate_lipschitz(&op, 8, 1.0, 1).unwrap();
    let fine = estimate_lipschitz(&op, 256, 1.0, 1).unwrap();
    assert!(coarse <= sigma + 1e-9);
    assert!(fine <= sigma + 1e-9);
    assert!(
        fine >= 0.8 * sigma,
        "fine estimate {fine} far below {sigma}"
    );
    assert!(fine >= coarse - 1e-12);
}

#[test]
fn prox_regularized_l1_matches_augmented_l1_mirror() {
    // the two constructions of the same geometry agree on 1000 random duals
    let gamma = 0.7;
    let aug = BregmanGenerator::augmented_l1(6, gamma).unwrap();
    let prox = BregmanGenerator::prox_regularized(
        6,
        "l1",
        move |u| gamma * u.iter().map(|x| x.abs()).sum::<f64>(),
        move |u| shrinkage(gamma, u),
        None,
    )
    .unwrap();
    let mut rng = SplitMix64::new(64);
    for _ in 0..1000 {
        let u_star = rng.uniform_vec(6, -3.0, 3.0);
        assert!(dist(&aug.mirror(&u_star), &prox.mirror(&u_star)) <= 1e-12);
        assert!((aug.eval(&u_star) - prox.eval(&u_star)).abs() <= 1e-12);
    }
}

#[test]
fn conjugate_duality_via_fenchel_equality() {
    // ω* evaluated through the Fenchel equality satisfies the primal-dual
    // distance symmetry on random pairs for the nonsmooth generator
    let gen = BregmanGenerator::augmented_l1(5, 1.1).unwrap();
    let mut rng = SplitMix64::new(21);
    for _ in 0..500 {
        let p = rng.uniform_vec(5, -3.0, 3.0);
        let q = rng.uniform_vec(5, -3.0, 3.0);
        let p_star = gen.subgrad(&p).unwrap();
        let q_star = gen.subgrad(&q).unwrap();
        let r = gen
            .conjugate_duality_residual(&p, &p_star, &q, &q_star)
            .unwrap();
        assert!(r <= 1e-10, "residual {r}");
    }
}

#[test]
fn operator_probe_respects_declared_lipschitz() {
    // sampled pairs never exceed the declared constant (relative 1e-9)
    for seed in 0..5u64 {
        let problem = random_instance(ProblemKind::Quadratic, (4, 3), seed, 1.0);
        let op = saddle_operator(&problem);
        let declared = op.lipschitz().unwrap();
        let mut rng = SplitMix64::new(400 + seed);
        for _ in 0..100 {
            let u = rng.uniform_vec(7, -3.0, 3.0);
            let v = rng.uniform_vec(7, -3.0, 3.0);
            let du = dist(&u, &v);
            if du < 1e-9 {
                continue;
            }
            let df = dist(&op.apply(&u).unwrap(), &op.apply(&v).unwrap());
            assert!(
                df <= declared * du * (1.0 + 1e-9),
                "ratio {} > {declared}",
                df / du
            );
        }
    }
}

#[test]
fn reference_trace_norms_match_solver_trace() {
    // run() and run_reference() agree not only on iterates but on recorded
    // residual norms for the Euclidean specialization
    let problem = random_instance(ProblemKind::Bilinear, (4, 4), 9, 1.0);
    let gen = BregmanGenerator::euclidean(8).unwrap();
    let op = saddle_operator(&problem);
    let lambda = lipschitz_from_blocks(&problem.blocks()).unwrap();
    let schedule = bregmax::solvers::constant_beg_schedule(lambda, 1.0).unwrap();
    let init = DualPair::from_primal(&gen, &vec![1.0; 8]).unwrap();
    let trace = bregmax::solvers::run(
        bregmax::solvers::Method::Beg,
        &gen,
        &op,
        &schedule,
        init,
        60,
        bregmax::solvers::StoppingRule::none(),
        1,
    )
    .unwrap();
    let reference = bregmax::solvers::run_reference(
        bregmax::solvers::Method::EgReference,
        &op,
        schedule.alpha(0),
        &vec![1.0; 8],
        60,
        bregmax::solvers::StoppingRule::none(),
        1,
    )
    .unwrap();
    assert_eq!(trace.steps.len(), reference.steps.len());
    for (a, b) in trace.steps.iter().zip(&reference.steps) {
        assert!((a.residual_norm - b.residual_norm).abs() <= 1e-12);
        assert!(dist(&a.averaged, &b.averaged) <= 1e-12);
    }
    assert_eq!(trace.operator_calls, reference.operator_calls);
    let _ = norm(&trace.final_pair().primal);
}
