//! Lipschitz Cusco right-hand sides `F`: set-valued maps with nonempty
//! convex compact values, support/norm oracles, extreme-point frames and
//! Lipschitz selections through prescribed graph points.
//!
//! Values are balls or polytopes moved affinely by the state; the lifted
//! variant appends the envelope triple used by the epigraph transform.
//! Selections are restricted to closed forms (recentred ball offsets and
//! frozen barycentric weights), which is all the existence lemma needs and
//! keeps every constant checkable.

use crate::functions::ScalarFn;
use crate::geometry::{embed_with_tail, solvers, stack, ConvexBody, GeomError};
use crate::numerics::{op_norm, TAU_GEO};
use crate::{Matrix, Vector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CuscoError {
    #[error("anchor value not in F(x0): violation distance {distance:.3e}")]
    NotInValue { distance: f64 },
    #[error("barycentric weight solve did not converge")]
    Weights,
    #[error(transparent)]
    Geometry(#[from] GeomError),
}

/// Affine map `x ↦ linear·x + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub linear: Matrix,
    pub offset: Vector,
}

impl AffineMap {
    pub fn constant(value: Vector) -> Self {
        let n = value.len();
        AffineMap {
            linear: Matrix::zeros(n, n),
            offset: value,
        }
    }

    pub fn identity_times(scale: f64, dim: usize) -> Self {
        AffineMap {
            linear: Matrix::identity(dim, dim) * scale,
            offset: Vector::zeros(dim),
        }
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        &self.linear * x + &self.offset
    }

    pub fn lipschitz(&self) -> f64 {
        op_norm(&self.linear)
    }
}

/// Clamped affine scalar `x ↦ max(base + ⟨grad, x⟩, 0)`; radius maps.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineScalar {
    pub base: f64,
    pub grad: Vector,
}

impl AffineScalar {
    pub fn constant(base: f64, dim: usize) -> Self {
        AffineScalar {
            base,
            grad: Vector::zeros(dim),
        }
    }

    pub fn apply(&self, x: &Vector) -> f64 {
        (self.base + self.grad.dot(x)).max(0.0)
    }

    pub fn lipschitz(&self) -> f64 {
        self.grad.norm()
    }
}

/// Shape of the set-valued map.
#[derive(Debug, Clone, PartialEq)]
pub enum CuscoKind {
    /// Single-valued affine map.
    Singleton { map: AffineMap },
    /// `F(x) = B(center(x), radius(x))`, radius clamped at zero.
    BallValued {
        center: AffineMap,
        radius: AffineScalar,
    },
    /// `F(x) = conv{v_i(x)}` for affine vertex maps.
    PolytopeValued { vertex_maps: Vec<AffineMap> },
    /// Lifted map `x̂ ↦ F(head) × {(W_k(head), 1, 0)}` on R^{n+3}.
    Lifted {
        inner: Box<CuscoMap>,
        envelope_of: ScalarFn,
        k: f64,
    },
}

/// Lipschitz Cusco multifunction with a declared Hausdorff constant.
#[derive(Debug, Clone, PartialEq)]
pub struct CuscoMap {
    kind: CuscoKind,
    lipschitz: f64,
}

impl CuscoMap {
    /// Builds the map with the closed-form Lipschitz constant of its kind.
    pub fn new(kind: CuscoKind) -> Self {
        let lipschitz = intrinsic_lipschitz(&kind);
        CuscoMap { kind, lipschitz }
    }

    /// Builds with an explicitly declared constant (must dominate the
    /// intrinsic one to keep the sampled Hausdorff check meaningful).
    pub fn with_lipschitz(kind: CuscoKind, lipschitz: f64) -> Self {
        CuscoMap { kind, lipschitz }
    }

    pub fn singleton(map: AffineMap) -> Self {
        Self::new(CuscoKind::Singleton { map })
    }

    pub fn constant_point(value: Vector) -> Self {
        Self::singleton(AffineMap::constant(value))
    }

    pub fn constant_ball(center: Vector, radius: f64) -> Self {
        let dim = center.len();
        Self::new(CuscoKind::BallValued {
            center: AffineMap::constant(center),
            radius: AffineScalar::constant(radius, dim),
        })
    }

    pub fn kind(&self) -> &CuscoKind {
        &self.kind
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// State-space dimension the map acts on.
    pub fn dim(&self) -> usize {
        match &self.kind {
            CuscoKind::Singleton { map } => map.offset.len(),
            CuscoKind::BallValued { center, .. } => center.offset.len(),
            CuscoKind::PolytopeValued { vertex_maps } => vertex_maps[0].offset.len(),
            CuscoKind::Lifted { inner, .. } => inner.dim() + 3,
        }
    }

    pub fn validate(&self) -> Result<(), CuscoError> {
        match &self.kind {
            CuscoKind::Singleton { map } => check_square(map)?,
            CuscoKind::BallValued { center, radius } => {
                check_square(center)?;
                if radius.grad.len() != center.offset.len() {
                    return Err(CuscoError::Geometry(GeomError::DimensionMismatch {
                        expected: center.offset.len(),
                        got: radius.grad.len(),
                    }));
                }
            }
            CuscoKind::PolytopeValued { vertex_maps } => {
                if vertex_maps.is_empty() {
                    return Err(CuscoError::Geometry(GeomError::Invalid(
                        "polytope-valued map needs vertex maps".into(),
                    )));
                }
                for m in vertex_maps {
                    check_square(m)?;
                }
            }
            CuscoKind::Lifted { inner, k, .. } => {
                inner.validate()?;
                if !(*k >= 1.0) {
                    return Err(CuscoError::Geometry(GeomError::Invalid(
                        "envelope index k must be ≥ 1".into(),
                    )));
                }
            }
        }
        Ok(())
    }

    /// The compact convex value `F(x)`.
    pub fn value(&self, x: &Vector) -> ConvexBody {
        match &self.kind {
            CuscoKind::Singleton { map } => ConvexBody::singleton(map.apply(x)),
            CuscoKind::BallValued { center, radius } => ConvexBody::Ball {
                center: center.apply(x),
                radius: radius.apply(x),
            },
            CuscoKind::PolytopeValued { vertex_maps } => {
                if vertex_maps.len() == 1 {
                    ConvexBody::singleton(vertex_maps[0].apply(x))
                } else {
                    ConvexBody::VPolytope {
                        vertices: vertex_maps.iter().map(|m| m.apply(x)).collect(),
                    }
                }
            }
            CuscoKind::Lifted {
                inner,
                envelope_of,
                k,
            } => {
                let head = x.rows(0, inner.dim()).into_owned();
                let tail = lift_tail(envelope_of, *k, &head);
                embed_with_tail(&inner.value(&head), &tail)
            }
        }
    }

    /// `‖F(x)‖ = sup{‖v‖ : v ∈ F(x)}`, exactly.
    pub fn norm_bound(&self, x: &Vector) -> f64 {
        match &self.kind {
            CuscoKind::Singleton { map } => map.apply(x).norm(),
            CuscoKind::BallValued { center, radius } => center.apply(x).norm() + radius.apply(x),
            CuscoKind::PolytopeValued { vertex_maps } => vertex_maps
                .iter()
                .map(|m| m.apply(x).norm())
                .fold(0.0, f64::max),
            CuscoKind::Lifted {
                inner,
                envelope_of,
                k,
            } => {
                let head = x.rows(0, inner.dim()).into_owned();
                let tail = lift_tail(envelope_of, *k, &head);
                (inner.norm_bound(&head).powi(2) + tail.norm_squared()).sqrt()
            }
        }
    }

    /// Support value of `F(x)` in direction ξ; finite by compactness.
    pub fn support(&self, x: &Vector, xi: &Vector) -> Result<f64, CuscoError> {
        Ok(self.value(x).support(xi)?)
    }

    /// Candidate velocities: polytope vertices, or for balls a deterministic
    /// antipodal frame of 2n boundary points plus the center.
    pub fn extreme_points(&self, x: &Vector) -> Vec<Vector> {
        match &self.kind {
            CuscoKind::Singleton { map } => vec![map.apply(x)],
            CuscoKind::BallValued { center, radius } => {
                let c = center.apply(x);
                let r = radius.apply(x);
                if r == 0.0 {
                    return vec![c];
                }
                let n = c.len();
                let mut pts = Vec::with_capacity(2 * n + 1);
                for i in 0..n {
                    for sign in [1.0, -1.0] {
                        let mut p = c.clone();
                        p[i] += sign * r;
                        pts.push(p);
                    }
                }
                pts.push(c);
                pts
            }
            CuscoKind::PolytopeValued { vertex_maps } => {
                vertex_maps.iter().map(|m| m.apply(x)).collect()
            }
            CuscoKind::Lifted {
                inner,
                envelope_of,
                k,
            } => {
                let head = x.rows(0, inner.dim()).into_owned();
                let tail = lift_tail(envelope_of, *k, &head);
                inner
                    .extreme_points(&head)
                    .into_iter()
                    .map(|p| stack(&p, &tail))
                    .collect()
            }
        }
    }

    /// Lipschitz selection `f` of `F` with `f(x0) = v0`; the reported
    /// constant is the closed-form one of the construction.
    pub fn lipschitz_selection(&self, x0: &Vector, v0: &Vector) -> Result<Selection, CuscoError> {
        let violation = self.value(x0).distance(v0)?;
        if violation > 10.0 * TAU_GEO {
            return Err(CuscoError::NotInValue {
                distance: violation,
            });
        }
        match &self.kind {
            CuscoKind::Singleton { map } => Ok(Selection {
                kind: SelectionKind::Affine(map.clone()),
                constant: map.lipschitz(),
            }),
            CuscoKind::BallValued { center, radius } => {
                let u0 = v0 - center.apply(x0);
                Ok(Selection {
                    kind: SelectionKind::BallOffset {
                        center: center.clone(),
                        radius: radius.clone(),
                        u0,
                    },
                    constant: center.lipschitz() + radius.lipschitz(),
                })
            }
            CuscoKind::PolytopeValued { vertex_maps } => {
                let values: Vec<Vector> = vertex_maps.iter().map(|m| m.apply(x0)).collect();
                let weights = solvers::least_norm_interpolating_weights(&values, v0, 1e-10)
                    .ok_or(CuscoError::Weights)?;
                let constant = vertex_maps
                    .iter()
                    .map(|m| m.lipschitz())
                    .fold(0.0, f64::max);
                Ok(Selection {
                    kind: SelectionKind::FrozenWeights {
                        maps: vertex_maps.clone(),
                        weights,
                    },
                    constant,
                })
            }
            CuscoKind::Lifted {
                inner,
                envelope_of,
                k,
            } => {
                let head0 = x0.rows(0, inner.dim()).into_owned();
                let v_head = v0.rows(0, inner.dim()).into_owned();
                let base = inner.lipschitz_selection(&head0, &v_head)?;
                let constant = (base.constant.powi(2) + k * k).sqrt();
                Ok(Selection {
                    kind: SelectionKind::Lifted {
                        base: Box::new(base),
                        envelope_of: envelope_of.clone(),
                        k: *k,
                        head_dim: inner.dim(),
                    },
                    constant,
                })
            }
        }
    }
}

/// A Lipschitz selection of a Cusco map, with its reported constant.
#[derive(Debug, Clone)]
pub struct Selection {
    kind: SelectionKind,
    pub constant: f64,
}

#[derive(Debug, Clone)]
enum SelectionKind {
    Affine(AffineMap),
    BallOffset {
        center: AffineMap,
        radius: AffineScalar,
        u0: Vector,
    },
    FrozenWeights {
        maps: Vec<AffineMap>,
        weights: Vec<f64>,
    },
    Lifted {
        base: Box<Selection>,
        envelope_of: ScalarFn,
        k: f64,
        head_dim: usize,
    },
}

impl Selection {
    pub fn at(&self, y: &Vector) -> Vector {
        match &self.kind {
            SelectionKind::Affine(map) => map.apply(y),
            SelectionKind::BallOffset { center, radius, u0 } => {
                let c = center.apply(y);
                let un = u0.norm();
                if un <= TAU_GEO {
                    c
                } else {
                    let scale = (radius.apply(y) / un).min(1.0);
                    c + u0 * scale
                }
            }
            SelectionKind::FrozenWeights { maps, weights } => {
                let mut acc = Vector::zeros(maps[0].offset.len());
                for (m, w) in maps.iter().zip(weights) {
                    acc += m.apply(y) * *w;
                }
                acc
            }
            SelectionKind::Lifted {
                base,
                envelope_of,
                k,
                head_dim,
            } => {
                let head = y.rows(0, *head_dim).into_owned();
                let tail = lift_tail(envelope_of, *k, &head);
                stack(&base.at(&head), &tail)
            }
        }
    }
}

fn intrinsic_lipschitz(kind: &CuscoKind) -> f64 {
    match kind {
        CuscoKind::Singleton { map } => map.lipschitz(),
        CuscoKind::BallValued { center, radius } => center.lipschitz() + radius.lipschitz(),
        CuscoKind::PolytopeValued { vertex_maps } => vertex_maps
            .iter()
            .map(|m| m.lipschitz())
            .fold(0.0, f64::max),
        CuscoKind::Lifted { inner, k, .. } => (inner.lipschitz.powi(2) + k * k).sqrt(),
    }
}

fn check_square(map: &AffineMap) -> Result<(), CuscoError> {
    if map.linear.nrows() != map.offset.len() || map.linear.ncols() != map.offset.len() {
        return Err(CuscoError::Geometry(GeomError::DimensionMismatch {
            expected: map.offset.len(),
            got: map.linear.nrows(),
        }));
    }
    Ok(())
}

/// The appended block `(W_k(x), 1, 0)` of the lifted right-hand side.
fn lift_tail(envelope_of: &ScalarFn, k: f64, head: &Vector) -> Vector {
    let wk = envelope_of.pasch_hausdorff(k, head);
    Vector::from_column_slice(&[wk, 1.0, 0.0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vec_from;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn neg_identity_map(dim: usize) -> AffineMap {
        AffineMap::identity_times(-1.0, dim)
    }

    fn segment_map() -> CuscoMap {
        // x ↦ conv{x + e1, x − e1}
        let plus = AffineMap {
            linear: Matrix::identity(2, 2),
            offset: vec_from(&[1.0, 0.0]),
        };
        let minus = AffineMap {
            linear: Matrix::identity(2, 2),
            offset: vec_from(&[-1.0, 0.0]),
        };
        CuscoMap::new(CuscoKind::PolytopeValued {
            vertex_maps: vec![plus, minus],
        })
    }

    #[test]
    fn value_examples() {
        let f = CuscoMap::singleton(neg_identity_map(2));
        let v = f.value(&vec_from(&[1.0, 2.0]));
        assert!((v.min_norm_point().unwrap() - vec_from(&[-1.0, -2.0])).norm() < 1e-12);
        let b = CuscoMap::constant_ball(vec_from(&[0.0, 0.0]), 1.0);
        assert_eq!(
            b.value(&vec_from(&[5.0, -3.0])),
            ConvexBody::Ball {
                center: vec_from(&[0.0, 0.0]),
                radius: 1.0
            }
        );
        let seg = segment_map();
        match seg.value(&vec_from(&[0.0, 0.0])) {
            ConvexBody::VPolytope { vertices } => {
                assert!((vertices[0].clone() - vec_from(&[1.0, 0.0])).norm() < 1e-12);
                assert!((vertices[1].clone() - vec_from(&[-1.0, 0.0])).norm() < 1e-12);
            }
            other => panic!("expected segment, got {other:?}"),
        }
    }

    #[test]
    fn norm_bound_examples() {
        let b = CuscoMap::constant_ball(vec_from(&[3.0, 0.0]), 1.0);
        assert!((b.norm_bound(&vec_from(&[0.0, 0.0])) - 4.0).abs() < 1e-12);
        let seg = segment_map();
        assert!((seg.norm_bound(&vec_from(&[0.0, 0.0])) - 1.0).abs() < 1e-12);
        let z = CuscoMap::constant_point(vec_from(&[0.0, 0.0]));
        assert_eq!(z.norm_bound(&vec_from(&[7.0, 7.0])), 0.0);
    }

    #[test]
    fn selection_examples() {
        // Ball-valued with constant radius ≥ ‖u0‖ keeps the offset frozen.
        let f = CuscoMap::new(CuscoKind::BallValued {
            center: neg_identity_map(2),
            radius: AffineScalar::constant(1.0, 2),
        });
        let sel = f
            .lipschitz_selection(&vec_from(&[0.0, 0.0]), &vec_from(&[0.5, 0.0]))
            .unwrap();
        let y = vec_from(&[2.0, -1.0]);
        assert!((sel.at(&y) - vec_from(&[-1.5, 1.0])).norm() < 1e-12);
        // Polytope segment: midpoint weights reproduce the identity map.
        let seg = segment_map();
        let sel2 = seg
            .lipschitz_selection(&vec_from(&[0.0, 0.0]), &vec_from(&[0.0, 0.0]))
            .unwrap();
        let y2 = vec_from(&[0.3, -0.7]);
        assert!((sel2.at(&y2) - y2.clone()).norm() < 1e-6);
        // Singleton: the map itself.
        let s = CuscoMap::singleton(neg_identity_map(2));
        let x0 = vec_from(&[1.0, 2.0]);
        let sel3 = s
            .lipschitz_selection(&x0, &vec_from(&[-1.0, -2.0]))
            .unwrap();
        assert!((sel3.at(&vec_from(&[3.0, 4.0])) - vec_from(&[-3.0, -4.0])).norm() < 1e-12);
        // Violated anchors are rejected with the violation distance.
        match s.lipschitz_selection(&x0, &vec_from(&[5.0, 5.0])) {
            Err(CuscoError::NotInValue { distance }) => assert!(distance > 1.0),
            other => panic!("expected NotInValue, got {other:?}"),
        }
    }

    #[test]
    fn extreme_point_examples() {
        let seg = segment_map();
        assert_eq!(seg.extreme_points(&vec_from(&[0.0, 0.0])).len(), 2);
        let b = CuscoMap::constant_ball(vec_from(&[0.0, 0.0]), 1.0);
        let pts = b.extreme_points(&vec_from(&[0.0, 0.0]));
        assert_eq!(pts.len(), 5);
        assert!(pts
            .iter()
            .any(|p| (p - vec_from(&[1.0, 0.0])).norm() < 1e-12));
        assert!(pts
            .iter()
            .any(|p| (p - vec_from(&[0.0, -1.0])).norm() < 1e-12));
        assert!(pts.iter().any(|p| p.norm() < 1e-12));
        let s = CuscoMap::constant_point(vec_from(&[2.0, 2.0]));
        assert_eq!(s.extreme_points(&vec_from(&[0.0, 0.0])).len(), 1);
    }

    #[test]
    fn selection_validity_and_lipschitz() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let maps: Vec<CuscoMap> = vec![
            CuscoMap::new(CuscoKind::BallValued {
                center: neg_identity_map(2),
                radius: AffineScalar {
                    base: 1.0,
                    grad: vec_from(&[0.2, 0.0]),
                },
            }),
            segment_map(),
            CuscoMap::singleton(neg_identity_map(2)),
        ];
        for f in &maps {
            let x0 = vec_from(&[0.1, -0.2]);
            let v0 = f.value(&x0).project(&vec_from(&[0.4, 0.1])).unwrap();
            let sel = f.lipschitz_selection(&x0, &v0).unwrap();
            assert!((sel.at(&x0) - &v0).norm() <= 1e-8, "anchor interpolation");
            for _ in 0..300 {
                let y = vec_from(&[
                    rng.random::<f64>() * 4.0 - 2.0,
                    rng.random::<f64>() * 4.0 - 2.0,
                ]);
                let z = vec_from(&[
                    rng.random::<f64>() * 4.0 - 2.0,
                    rng.random::<f64>() * 4.0 - 2.0,
                ]);
                let fy = sel.at(&y);
                assert!(
                    f.value(&y).distance(&fy).unwrap() <= 1e-7,
                    "selection leaves the value set"
                );
                let quotient = (sel.at(&y) - sel.at(&z)).norm();
                assert!(
                    quotient <= sel.constant * (&y - &z).norm() + 1e-9,
                    "selection Lipschitz constant violated"
                );
            }
        }
    }

    #[test]
    fn hausdorff_constant_dominates_support_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let maps: Vec<CuscoMap> = vec![
            CuscoMap::new(CuscoKind::BallValued {
                center: neg_identity_map(2),
                radius: AffineScalar {
                    base: 0.5,
                    grad: vec_from(&[0.1, -0.1]),
                },
            }),
            segment_map(),
        ];
        for f in &maps {
            for _ in 0..200 {
                let x = vec_from(&[
                    rng.random::<f64>() * 2.0 - 1.0,
                    rng.random::<f64>() * 2.0 - 1.0,
                ]);
                let y = vec_from(&[
                    rng.random::<f64>() * 2.0 - 1.0,
                    rng.random::<f64>() * 2.0 - 1.0,
                ]);
                for xi in crate::numerics::unit_directions(2, 8) {
                    let dx = f.support(&x, &xi).unwrap();
                    let dy = f.support(&y, &xi).unwrap();
                    assert!(
                        (dx - dy).abs() <= f.lipschitz() * (&x - &y).norm() + 1e-9,
                        "support difference exceeds the declared constant"
                    );
                }
            }
        }
    }

    #[test]
    fn support_dominates_selections() {
        let f = segment_map();
        let x0 = vec_from(&[0.2, 0.4]);
        let v0 = f.value(&x0).project(&vec_from(&[1.0, 1.0])).unwrap();
        let sel = f.lipschitz_selection(&x0, &v0).unwrap();
        for xi in crate::numerics::unit_directions(2, 6) {
            let x = vec_from(&[-0.3, 0.9]);
            assert!(f.support(&x, &xi).unwrap() >= xi.dot(&sel.at(&x)) - 1e-9);
        }
    }

    proptest::proptest! {
        #[test]
        fn selections_stay_inside_values(
            ax in -2.0f64..2.0, ay in -2.0f64..2.0,
            tx in -2.0f64..2.0, ty in -2.0f64..2.0,
            yx in -3.0f64..3.0, yy in -3.0f64..3.0,
        ) {
            let f = CuscoMap::new(CuscoKind::BallValued {
                center: AffineMap::identity_times(-0.5, 2),
                radius: AffineScalar { base: 0.8, grad: vec_from(&[0.1, -0.05]) },
            });
            let x0 = vec_from(&[ax, ay]);
            let v0 = f.value(&x0).project(&vec_from(&[tx, ty])).unwrap();
            let sel = f.lipschitz_selection(&x0, &v0).unwrap();
            let y = vec_from(&[yx, yy]);
            proptest::prop_assert!(f.value(&y).distance(&sel.at(&y)).unwrap() <= 1e-7);
        }
    }
}
