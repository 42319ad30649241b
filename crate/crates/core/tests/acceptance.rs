//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line (visible with `--nocapture`) and enforcing its runtime budget.

use monoflow::canned;
use monoflow::cusco::CuscoMap;
use monoflow::functions::ScalarFn;
use monoflow::geometry::ConvexBody;
use monoflow::integrator::{divergence_bound, growth_bound, integrate, IntegratorConfig};
use monoflow::invariance::{
    certify_strong, falsify_by_simulation, strong_margin, weak_margin, CertifyOptions,
    CriterionVariant, FALSIFY_KAPPA, TOL_ANALYTIC,
};
use monoflow::lyapunov::{epigraph_transform, LyapunovPair};
use monoflow::operators::MonotoneOperator;
use monoflow::scenario::{cmd_check_invariance, cmd_check_lyapunov, cmd_simulate, parse_scenario};
use monoflow::{vec_from, Matrix, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn finish(criterion: &str, passed: bool, started: Instant, limit_s: f64) {
    let elapsed = started.elapsed().as_secs_f64();
    println!(
        "ACCEPTANCE {criterion}: {} ({elapsed:.2}s / limit {limit_s}s)",
        if passed { "pass" } else { "FAIL" }
    );
    assert!(passed, "criterion {criterion} failed");
    assert!(
        elapsed < limit_s,
        "criterion {criterion} exceeded its {limit_s}s budget"
    );
}

fn operator_variants() -> Vec<MonotoneOperator> {
    let ball = ConvexBody::Ball {
        center: Vector::zeros(2),
        radius: 1.0,
    };
    vec![
        MonotoneOperator::NormalConeOf { body: ball.clone() },
        MonotoneOperator::QuadraticGradient {
            q: Matrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]),
            b: vec_from(&[0.1, -0.2]),
        },
        MonotoneOperator::ScaledNormSubdiff {
            weight: 0.7,
            dim: 2,
        },
        MonotoneOperator::LinearMonotone {
            m: Matrix::from_row_slice(2, 2, &[1.0, 1.0, -1.0, 1.0]),
        },
        MonotoneOperator::SumWithNormalCone {
            smooth: monoflow::operators::SmoothPart::Quadratic {
                q: Matrix::identity(2, 2),
                b: vec_from(&[0.1, 0.0]),
            },
            body: ball,
        },
    ]
}

/// Criterion 1: resolvent firm nonexpansiveness and inclusion consistency,
/// 10³ random pairs × 5 operator variants × 4 step sizes, tolerance 1e-7.
#[test]
fn accept_1_resolvent_suite() {
    let started = Instant::now();
    let tol = 1e-7;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut passed = true;
    for a in operator_variants() {
        for &lambda in &[1e-3, 1e-2, 1e-1, 1.0] {
            for _ in 0..1_000 {
                let x = vec_from(&[
                    rng.random::<f64>() * 4.0 - 2.0,
                    rng.random::<f64>() * 4.0 - 2.0,
                ]);
                let y = vec_from(&[
                    rng.random::<f64>() * 4.0 - 2.0,
                    rng.random::<f64>() * 4.0 - 2.0,
                ]);
                let jx = a.resolvent(lambda, &x).expect("resolvent");
                let jy = a.resolvent(lambda, &y).expect("resolvent");
                let d = &jx - &jy;
                if d.norm_squared() > d.dot(&(&x - &y)) + tol {
                    passed = false;
                }
                // Inclusion consistency on one leg of the pair.
                let w = (&y - &jy) / lambda;
                let dist = a
                    .evaluate(&jy)
                    .expect("evaluate")
                    .body()
                    .expect("nonempty value")
                    .distance(&w)
                    .expect("distance");
                if dist > tol {
                    passed = false;
                }
            }
        }
    }
    finish("1 resolvent-suite", passed, started, 5.0);
}

/// Criterion 2: the gradient-flow pairs satisfy the decay inequality with
/// equality within 5h, against the closed-form oracle.
#[test]
fn accept_2_gradient_flow_equality() {
    let started = Instant::now();
    let a_op = MonotoneOperator::QuadraticGradient {
        q: Matrix::identity(2, 2),
        b: Vector::zeros(2),
    };
    let f = CuscoMap::constant_point(Vector::zeros(2));
    let x0 = vec_from(&[1.0, 0.0]);
    let mut passed = true;
    for &h in &[1e-2, 1e-3] {
        let cfg = IntegratorConfig::fixed(h, 2.0, x0.clone(), Vector::zeros(2));
        let traj = integrate(&a_op, &f, &cfg, &x0).expect("integrates");
        for (which, (v, w, a)) in [
            canned::gradient_flow_pair(false),
            canned::gradient_flow_pair(true),
        ]
        .into_iter()
        .enumerate()
        {
            let pair = LyapunovPair::new(v, w, a);
            let v0 = pair.v.value(&x0);
            let mut integral = 0.0;
            let mut w_prev = pair.w.value(&traj.states[0]);
            for (k, x) in traj.states.iter().enumerate() {
                let t = traj.times[k];
                if k > 0 {
                    let w_here = pair.w.value(x);
                    integral += 0.5 * (w_prev + w_here) * h;
                    w_prev = w_here;
                }
                let lhs = (pair.a * t).exp() * pair.v.value(x) + integral;
                if (lhs - v0).abs() > 5.0 * h {
                    passed = false;
                }
                // Closed-form oracle of the a = 0 pair:
                // ½e^{−2t} + ½(1 − e^{−2t}) ≡ ½.
                if which == 0 {
                    let vt = 0.5 * (-2.0 * t).exp();
                    let it = 0.5 * (1.0 - (-2.0 * t).exp());
                    if (pair.v.value(x) - vt).abs() > 5.0 * h || (integral - it).abs() > 5.0 * h {
                        passed = false;
                    }
                }
            }
        }
    }
    finish("2 gradient-flow-equality", passed, started, 2.0);
}

/// Criterion 3: factor-3 growth and factor-4 divergence bounds hold
/// discretely on 10 random systems, with the violation margin shrinking by
/// at least 5× from h = 1e-2 to h = 1e-3.
#[test]
fn accept_3_growth_divergence_bounds() {
    let started = Instant::now();
    let slack_c = 10.0;
    let mut passed = true;
    for seed in 0..10u64 {
        let (op, f, x0) = canned::random_growth_system(seed);
        let extremes = f.extreme_points(&x0);
        let v_a = f.value(&x0).min_norm_point().expect("value point");
        let v_b = extremes.last().expect("nonempty extremes").clone();
        let sel_a = f.lipschitz_selection(&x0, &v_a).expect("selection a");
        let sel_b = f.lipschitz_selection(&x0, &v_b).expect("selection b");
        let c = sel_a.constant.max(sel_b.constant);
        let mut viol = [0.0f64; 2];
        for (hi, &h) in [1e-2, 1e-3].iter().enumerate() {
            let run = |v0: &Vector| {
                let cfg = IntegratorConfig::fixed(h, 1.0, x0.clone(), v0.clone());
                integrate(&op, &f, &cfg, &x0).expect("growth run")
            };
            let ta = run(&v_a);
            let tb = run(&v_b);
            let mut worst: f64 = 0.0;
            for k in 0..ta.states.len() {
                let t = ta.times[k];
                let g3 = growth_bound(&f, &op, &x0, c, t).expect("bound");
                let g4 = divergence_bound(&f, &op, &x0, c, t).expect("bound");
                worst = worst.max((&ta.states[k] - &x0).norm() - g3);
                worst = worst.max((&tb.states[k] - &x0).norm() - g3);
                worst = worst.max((&ta.states[k] - &tb.states[k]).norm() - g4);
            }
            viol[hi] = worst.max(0.0);
            if viol[hi] > slack_c * h {
                passed = false;
            }
        }
        // Shrink by ≥ 5× (or be numerically zero already).
        if viol[1] > (viol[0] / 5.0).max(1e-12) {
            passed = false;
        }
    }
    finish("3 growth-divergence-bounds", passed, started, 30.0);
}

/// Criterion 4: tangent/normal/inf/truncated strong criteria agree at 200
/// sampled boundary points on all six canned systems, with zero
/// disagreements, and match the known invariance status.
#[test]
fn accept_4_strong_equivalence() {
    let started = Instant::now();
    let variants = [
        CriterionVariant::TangentProjected,
        CriterionVariant::NormalProjected,
        CriterionVariant::NormalInf,
        CriterionVariant::NormalInfTruncated,
    ];
    let mut passed = true;
    let mut disagreements = 0usize;
    for sys in canned::equivalence_suite() {
        let pts: Vec<Vector> = sys
            .set
            .boundary_samples(200, 11)
            .into_iter()
            .filter(|p| sys.operator.domain_contains(p))
            .collect();
        assert!(pts.len() >= 190, "{}: too few admissible samples", sys.name);
        let mut any_fail = false;
        for x in &pts {
            let verdicts: Vec<bool> = variants
                .iter()
                .map(|v| {
                    strong_margin(&sys.set, &sys.operator, &sys.cusco, x, *v, 16)
                        .map(|d| d.margin <= TOL_ANALYTIC)
                        .unwrap_or(false)
                })
                .collect();
            if verdicts.iter().any(|v| *v != verdicts[0]) {
                disagreements += 1;
            }
            any_fail |= !verdicts[0];
        }
        if any_fail == sys.strongly_invariant {
            println!("  {}: verdict does not match the known status", sys.name);
            passed = false;
        }
    }
    if disagreements > 0 {
        println!("  {disagreements} per-point disagreements");
        passed = false;
    }
    finish("4 strong-equivalence", passed, started, 20.0);
}

/// Criterion 5: certified systems survive the falsification bundle
/// (max d_S ≤ 10h over T = 5, all extreme selections, 10 starts) and every
/// failing system is falsified by some run.
#[test]
fn accept_5_soundness_cross_check() {
    let started = Instant::now();
    let h = 1e-3;
    let horizon = 5.0;
    let mut passed = true;
    for sys in canned::equivalence_suite() {
        let opts = CertifyOptions::new(sys.name, 200, 23);
        let report = certify_strong(
            &sys.set,
            &sys.operator,
            &sys.cusco,
            CriterionVariant::NormalInf,
            &opts,
        )
        .expect("certify");
        let certified = report.passed();
        if certified != sys.strongly_invariant {
            println!(
                "  {}: certificate does not match the known status",
                sys.name
            );
            passed = false;
        }
        let starts: Vec<Vector> = sys
            .set
            .boundary_samples(10, 29)
            .into_iter()
            .filter(|p| sys.operator.domain_contains(p))
            .collect();
        let mut any_falsified = false;
        for x0 in &starts {
            let ev = falsify_by_simulation(&sys.set, &sys.operator, &sys.cusco, x0, h, horizon);
            any_falsified |= ev.strong_falsified;
            if certified && ev.strong_falsified {
                println!("  {}: certified but falsified from {x0:?}", sys.name);
                passed = false;
            }
        }
        if !certified && !any_falsified {
            println!("  {}: failing system never falsified", sys.name);
            passed = false;
        }
    }
    finish("5 soundness-cross-check", passed, started, 60.0);
}

/// Criterion 6: the rest-point system separates weak from strong
/// invariance; all four facts hold.
#[test]
fn accept_6_weak_strong_separation() {
    let started = Instant::now();
    let sys = canned::weak_only_rest_point();
    let origin = Vector::zeros(2);
    let weak =
        weak_margin(&sys.set, &sys.operator, &sys.cusco, &origin, 0.0, 16).expect("weak margin");
    let strong = strong_margin(
        &sys.set,
        &sys.operator,
        &sys.cusco,
        &origin,
        CriterionVariant::NormalInf,
        16,
    )
    .expect("strong margin");
    let ev = falsify_by_simulation(&sys.set, &sys.operator, &sys.cusco, &origin, 1e-2, 2.0);
    let facts = [
        weak.margin <= 0.0,
        strong.margin > TOL_ANALYTIC,
        ev.weak_supported && ev.steered_max_distance <= FALSIFY_KAPPA * 1e-2,
        ev.strong_falsified,
    ];
    for (i, f) in facts.iter().enumerate() {
        if !f {
            println!("  separation fact {} failed", i + 1);
        }
    }
    finish(
        "6 weak-strong-separation",
        facts.iter().all(|f| *f),
        started,
        2.0,
    );
}

/// Criterion 7: Pasch-Hausdorff envelope laws and the grid-oracle match at
/// 100 points for x², ‖x‖ and a max-affine function.
#[test]
fn accept_7_envelope_suite() {
    let started = Instant::now();
    let functions: Vec<ScalarFn> = vec![
        ScalarFn::NormPower {
            p: 2,
            weight: 1.0,
            dim: 1,
        },
        ScalarFn::NormPower {
            p: 1,
            weight: 1.0,
            dim: 1,
        },
        ScalarFn::MaxAffine {
            pieces: vec![(vec_from(&[2.0]), 0.0), (vec_from(&[-1.0]), 0.0)],
        },
    ];
    let ks = [0.5, 1.0, 3.0];
    let mut passed = true;
    for w in &functions {
        for &k in &ks {
            for i in 0..100 {
                let x = vec_from(&[-3.0 + 6.0 * (i as f64) / 99.0]);
                let wk = w.pasch_hausdorff(k, &x);
                // Independent oracle: golden-section minimization of the
                // convex objective W(z) + k|x − z| over a wide bracket,
                // seeded by a coarse grid pass.
                let obj = |z: f64| w.value(&vec_from(&[z])) + k * (x[0] - z).abs();
                let mut best = f64::INFINITY;
                for g in 0..=4_800 {
                    best = best.min(obj(-12.0 + g as f64 * 5e-3));
                }
                let (mut lo, mut hi) = (-12.0f64, 12.0f64);
                let phi = (5.0f64.sqrt() - 1.0) / 2.0;
                let (mut z1, mut z2) = (hi - phi * (hi - lo), lo + phi * (hi - lo));
                let (mut f1, mut f2) = (obj(z1), obj(z2));
                for _ in 0..90 {
                    if f1 <= f2 {
                        hi = z2;
                        z2 = z1;
                        f2 = f1;
                        z1 = hi - phi * (hi - lo);
                        f1 = obj(z1);
                    } else {
                        lo = z1;
                        z1 = z2;
                        f1 = f2;
                        z2 = lo + phi * (hi - lo);
                        f2 = obj(z2);
                    }
                }
                best = best.min(f1).min(f2);
                if (wk - best).abs() > 1e-6 {
                    passed = false;
                }
                // Envelope laws: below W, monotone in k.
                if wk > w.value(&x) + 1e-9 || wk > w.pasch_hausdorff(2.0 * k, &x) + 1e-9 {
                    passed = false;
                }
                // k-Lipschitz on a sampled pair.
                let y = vec_from(&[x[0] + 0.37]);
                if (wk - w.pasch_hausdorff(k, &y)).abs() > k * 0.37 + 1e-9 {
                    passed = false;
                }
            }
        }
    }
    finish("7 envelope-suite", passed, started, 5.0);
}

/// Criterion 8: integrating the lifted system reproduces the state block,
/// the running envelope integral, time and the constant block within 10h.
#[test]
fn accept_8_transform_suite() {
    let started = Instant::now();
    let systems: Vec<(MonotoneOperator, CuscoMap, ScalarFn)> = vec![
        (
            MonotoneOperator::QuadraticGradient {
                q: Matrix::identity(2, 2),
                b: Vector::zeros(2),
            },
            CuscoMap::constant_point(Vector::zeros(2)),
            ScalarFn::NormPower {
                p: 2,
                weight: 1.0,
                dim: 2,
            },
        ),
        (
            MonotoneOperator::NormalConeOf {
                body: ConvexBody::Ball {
                    center: Vector::zeros(2),
                    radius: 1.0,
                },
            },
            CuscoMap::constant_point(vec_from(&[0.0, 1.0])),
            ScalarFn::half_sq_norm(2),
        ),
        (
            MonotoneOperator::LinearMonotone {
                m: Matrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]),
            },
            CuscoMap::constant_point(vec_from(&[0.1, 0.0])),
            ScalarFn::MaxAffine {
                pieces: vec![(vec_from(&[1.0, 0.0]), 0.1), (vec_from(&[-1.0, 0.0]), 0.1)],
            },
        ),
    ];
    let mut passed = true;
    let h = 1e-2;
    let horizon = 1.0;
    let k = 4.0;
    for (op, f, w) in &systems {
        let pair = LyapunovPair::new(ScalarFn::half_sq_norm(2), w.clone(), 0.0);
        let (lifted_op, lifted_f, _) = epigraph_transform(&pair, op, f, k);
        let x0 = vec_from(&[0.9, 0.0]);
        let v0 = f.value(&x0).min_norm_point().expect("velocity anchor");
        let base_cfg = IntegratorConfig::fixed(h, horizon, x0.clone(), v0.clone());
        let base = integrate(op, f, &base_cfg, &x0).expect("base run");
        let z0 = vec_from(&[0.9, 0.0, 0.0, 0.0, 0.3]);
        let v0_hat = {
            let mut v = Vector::zeros(5);
            v.rows_mut(0, 2).copy_from(&v0);
            v[2] = w.pasch_hausdorff(k, &x0);
            v[3] = 1.0;
            v
        };
        let lifted_cfg = IntegratorConfig::fixed(h, horizon, z0.clone(), v0_hat);
        let lifted = integrate(&lifted_op, &lifted_f, &lifted_cfg, &z0).expect("lifted run");
        let mut integral = 0.0;
        for (kk, (zb, zl)) in base.states.iter().zip(&lifted.states).enumerate() {
            let head = zl.rows(0, 2).into_owned();
            if (head - zb).norm() > 10.0 * h
                || (zl[2] - integral).abs() > 10.0 * h
                || (zl[3] - base.times[kk]).abs() > 10.0 * h
                || (zl[4] - 0.3).abs() > 1e-12
            {
                passed = false;
            }
            if kk < base.steps() {
                integral += h * w.pasch_hausdorff(k, zb);
            }
        }
    }
    finish("8 transform-suite", passed, started, 10.0);
}

/// Criterion 9: identical scenarios and seeds produce byte-identical
/// artifacts across independent runs.
#[test]
fn accept_9_determinism() {
    let started = Instant::now();
    let gradient = include_str!("../../../scenarios/gradient_flow.json");
    let sweeping = include_str!("../../../scenarios/sweeping_ball.json");
    let mut passed = true;
    for text in [gradient, sweeping] {
        let scn = parse_scenario(text).expect("scenario parses");
        let s1 = cmd_simulate(&scn).expect("simulate");
        let s2 = cmd_simulate(&scn).expect("simulate");
        passed &= s1.files == s2.files;
        let i1 = cmd_check_invariance(&scn, CriterionVariant::NormalInf, None, None)
            .expect("invariance");
        let i2 = cmd_check_invariance(&scn, CriterionVariant::NormalInf, None, None)
            .expect("invariance");
        passed &= i1.files == i2.files && i1.exit_code == i2.exit_code;
        if scn.lyapunov.is_some() {
            let l1 = cmd_check_lyapunov(
                &scn,
                monoflow::lyapunov::LyapunovVariant::SubgradInf,
                None,
                None,
            )
            .expect("lyapunov");
            let l2 = cmd_check_lyapunov(
                &scn,
                monoflow::lyapunov::LyapunovVariant::SubgradInf,
                None,
                None,
            )
            .expect("lyapunov");
            passed &= l1.files == l2.files;
        }
    }
    finish("9 determinism", passed, started, 60.0);
}
