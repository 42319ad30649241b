//! Canned systems used across the test suites and as CLI demo scenarios:
//! three strongly invariant configurations, three violating ones, the
//! weak-only rest point, and a seeded generator of random growth-bound
//! systems.

use crate::cusco::{AffineMap, AffineScalar, CuscoKind, CuscoMap};
use crate::functions::ScalarFn;
use crate::geometry::{ClosedSet, ConvexBody};
use crate::operators::{MonotoneOperator, SmoothPart};
use crate::{Matrix, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A complete inclusion setup with its known strong-invariance status.
#[derive(Debug, Clone)]
pub struct CannedSystem {
    pub name: &'static str,
    pub set: ClosedSet,
    pub operator: MonotoneOperator,
    pub cusco: CuscoMap,
    pub strongly_invariant: bool,
}

fn ball(cx: f64, cy: f64, r: f64) -> ConvexBody {
    ConvexBody::Ball {
        center: Vector::from_column_slice(&[cx, cy]),
        radius: r,
    }
}

fn unit_box() -> ConvexBody {
    ConvexBody::box_body(&[-1.0, -1.0], &[1.0, 1.0])
}

/// Sweeping on the unit ball with an inward-biased ball of velocities; the
/// boundary normal cone absorbs every selection.
pub fn sweeping_ball_inward() -> CannedSystem {
    CannedSystem {
        name: "sweeping-ball-inward",
        set: ClosedSet::from_body(ball(0.0, 0.0, 1.0)).expect("valid set"),
        operator: MonotoneOperator::NormalConeOf {
            body: ball(0.0, 0.0, 1.0),
        },
        cusco: CuscoMap::new(CuscoKind::BallValued {
            center: AffineMap::identity_times(-0.3, 2),
            radius: AffineScalar::constant(0.25, 2),
        }),
        strongly_invariant: true,
    }
}

/// Plain gradient flow `ẋ = −x` keeps the unit ball invariant.
pub fn gradient_flow_ball() -> CannedSystem {
    CannedSystem {
        name: "gradient-flow-ball",
        set: ClosedSet::from_body(ball(0.0, 0.0, 1.0)).expect("valid set"),
        operator: MonotoneOperator::QuadraticGradient {
            q: Matrix::identity(2, 2),
            b: Vector::zeros(2),
        },
        cusco: CuscoMap::constant_point(Vector::zeros(2)),
        strongly_invariant: true,
    }
}

/// Sweeping on the box with a mild contraction toward the origin.
pub fn box_sweeping_contraction() -> CannedSystem {
    CannedSystem {
        name: "box-sweeping-contraction",
        set: ClosedSet::from_body(unit_box()).expect("valid set"),
        operator: MonotoneOperator::NormalConeOf { body: unit_box() },
        cusco: CuscoMap::singleton(AffineMap::identity_times(-0.2, 2)),
        strongly_invariant: true,
    }
}

/// Constant drift with no operator: leaves the disc in finite time.
pub fn constant_drift_disc() -> CannedSystem {
    CannedSystem {
        name: "constant-drift-disc",
        set: ClosedSet::from_body(ball(0.0, 0.0, 0.5)).expect("valid set"),
        operator: MonotoneOperator::QuadraticGradient {
            q: Matrix::zeros(2, 2),
            b: Vector::zeros(2),
        },
        cusco: CuscoMap::constant_point(Vector::from_column_slice(&[1.0, 0.0])),
        strongly_invariant: false,
    }
}

/// Pure rotation about the origin sweeps trajectories across the box faces.
pub fn rotation_box() -> CannedSystem {
    CannedSystem {
        name: "rotation-box",
        set: ClosedSet::from_body(unit_box()).expect("valid set"),
        operator: MonotoneOperator::LinearMonotone {
            m: Matrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]),
        },
        cusco: CuscoMap::constant_point(Vector::zeros(2)),
        strongly_invariant: false,
    }
}

/// Drift inside the sweeping domain: the small ball is not kept invariant
/// because the normal cone is trivial on the domain interior.
pub fn shrunk_ball_drift() -> CannedSystem {
    CannedSystem {
        name: "shrunk-ball-drift",
        set: ClosedSet::from_body(ball(0.0, 0.0, 0.5)).expect("valid set"),
        operator: MonotoneOperator::NormalConeOf {
            body: ball(0.0, 0.0, 1.0),
        },
        cusco: CuscoMap::constant_point(Vector::from_column_slice(&[1.0, 0.0])),
        strongly_invariant: false,
    }
}

/// The six systems of the criterion-equivalence suite.
pub fn equivalence_suite() -> Vec<CannedSystem> {
    vec![
        sweeping_ball_inward(),
        gradient_flow_ball(),
        box_sweeping_contraction(),
        constant_drift_disc(),
        rotation_box(),
        shrunk_ball_drift(),
    ]
}

/// `S = {θ}` under a full ball of velocities with `A ≡ {θ}`: weakly
/// invariant (the rest selection exists) but not strongly invariant.
pub fn weak_only_rest_point() -> CannedSystem {
    CannedSystem {
        name: "weak-only-rest-point",
        set: ClosedSet::from_body(ConvexBody::singleton(Vector::zeros(2))).expect("valid set"),
        operator: MonotoneOperator::QuadraticGradient {
            q: Matrix::zeros(2, 2),
            b: Vector::zeros(2),
        },
        cusco: CuscoMap::constant_ball(Vector::zeros(2), 1.0),
        strongly_invariant: false,
    }
}

/// Gradient-flow Lyapunov pair `V = ½‖x‖²`, `W = ‖x‖²`, a = 0 (with its
/// a = 2, W ≡ 0 twin selected by `decay_in_v`).
pub fn gradient_flow_pair(decay_in_v: bool) -> (ScalarFn, ScalarFn, f64) {
    let v = ScalarFn::half_sq_norm(2);
    if decay_in_v {
        (
            v,
            ScalarFn::NormPower {
                p: 2,
                weight: 0.0,
                dim: 2,
            },
            2.0,
        )
    } else {
        (
            v,
            ScalarFn::NormPower {
                p: 2,
                weight: 1.0,
                dim: 2,
            },
            0.0,
        )
    }
}

fn rand_vec(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vector {
    Vector::from_fn(dim, |_, _| (rng.random::<f64>() * 2.0 - 1.0) * scale)
}

fn rand_mat(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Matrix {
    Matrix::from_fn(dim, dim, |_, _| (rng.random::<f64>() * 2.0 - 1.0) * scale)
}

/// Seeded random system for the growth/divergence-bound suite; returns the
/// operator, the right-hand side and a start point in dom A.
pub fn random_growth_system(seed: u64) -> (MonotoneOperator, CuscoMap, Vector) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = 2 + (seed % 2) as usize;
    let center = rand_vec(&mut rng, dim, 0.5);
    let radius = 0.75 + rng.random::<f64>();
    let body = ConvexBody::Ball { center, radius };
    let operator = match seed % 5 {
        0 => MonotoneOperator::NormalConeOf { body: body.clone() },
        1 => {
            let a = rand_mat(&mut rng, dim, 1.0);
            let q = &a * a.transpose() * 0.5;
            MonotoneOperator::QuadraticGradient {
                q,
                b: rand_vec(&mut rng, dim, 0.5),
            }
        }
        2 => {
            let a = rand_mat(&mut rng, dim, 1.0);
            let psd = &a * a.transpose() * 0.3;
            let skew_seed = rand_mat(&mut rng, dim, 1.0);
            let skew = (&skew_seed - skew_seed.transpose()) * 0.5;
            MonotoneOperator::LinearMonotone { m: psd + skew }
        }
        3 => MonotoneOperator::ScaledNormSubdiff {
            weight: 0.5 + rng.random::<f64>(),
            dim,
        },
        _ => {
            let a = rand_mat(&mut rng, dim, 1.0);
            let q = &a * a.transpose() * 0.4;
            MonotoneOperator::SumWithNormalCone {
                smooth: SmoothPart::Quadratic {
                    q,
                    b: rand_vec(&mut rng, dim, 0.3),
                },
                body: body.clone(),
            }
        }
    };
    let cusco = match seed % 3 {
        0 => CuscoMap::singleton(AffineMap {
            linear: rand_mat(&mut rng, dim, 0.4),
            offset: rand_vec(&mut rng, dim, 0.8),
        }),
        1 => {
            let center = AffineMap {
                linear: rand_mat(&mut rng, dim, 0.3),
                offset: rand_vec(&mut rng, dim, 0.5),
            };
            let radius = AffineScalar::constant(0.2 + 0.5 * rng.random::<f64>(), dim);
            CuscoMap::new(CuscoKind::BallValued { center, radius })
        }
        _ => {
            let maps = (0..3)
                .map(|_| AffineMap {
                    linear: rand_mat(&mut rng, dim, 0.3),
                    offset: rand_vec(&mut rng, dim, 0.7),
                })
                .collect();
            CuscoMap::new(CuscoKind::PolytopeValued { vertex_maps: maps })
        }
    };
    let raw = rand_vec(&mut rng, dim, 0.9);
    let x0 = operator.domain_project(&raw).expect("projectable start");
    (operator, cusco, x0)
}
