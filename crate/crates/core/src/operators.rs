//! Maximal monotone operators: value sets, resolvents, minimal sections and
//! projections onto values.
//!
//! Each variant is maximal monotone by construction (normal cones of closed
//! convex sets, gradients of convex quadratics, the norm subdifferential,
//! monotone linear maps, and a smooth part plus a normal cone). Monotonicity
//! is additionally sampled in tests; no runtime maximality certificate is
//! attempted.

use crate::geometry::{budget_default, sampling, solvers, stack, ConvexBody, GeomError};
use crate::numerics::{self, TAU_GEO, TAU_RES};
use crate::{Matrix, Vector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OpError {
    #[error("empty operator value at the queried point")]
    EmptyValue,
    #[error("resolvent subproblem did not converge (residual {residual:.3e})")]
    NoConvergence { residual: f64 },
    #[error("truncation ball of radius {rho:.6} misses the value set")]
    TruncationEmpty { rho: f64 },
    #[error("no sample point lies in the operator domain")]
    NoDomainSample,
    #[error(transparent)]
    Geometry(#[from] GeomError),
}

/// Smooth single-valued part of a [`MonotoneOperator::SumWithNormalCone`].
#[derive(Debug, Clone, PartialEq)]
pub enum SmoothPart {
    /// `x ↦ Qx + b`, Q symmetric PSD.
    Quadratic { q: Matrix, b: Vector },
    /// `x ↦ Mx`, M + Mᵀ PSD.
    Linear { m: Matrix },
}

impl SmoothPart {
    fn apply(&self, x: &Vector) -> Vector {
        match self {
            SmoothPart::Quadratic { q, b } => q * x + b,
            SmoothPart::Linear { m } => m * x,
        }
    }

    fn op_norm(&self) -> f64 {
        let m = match self {
            SmoothPart::Quadratic { q, .. } => q,
            SmoothPart::Linear { m } => m,
        };
        m.clone().singular_values().max()
    }
}

/// Set-valued maximal monotone operator on R^n.
#[derive(Debug, Clone, PartialEq)]
pub enum MonotoneOperator {
    /// `A(x) = N_body(x)`; domain is the body.
    NormalConeOf { body: ConvexBody },
    /// `A(x) = {Qx + b}` with Q symmetric PSD.
    QuadraticGradient { q: Matrix, b: Vector },
    /// Subdifferential of `x ↦ weight·‖x‖`.
    ScaledNormSubdiff { weight: f64, dim: usize },
    /// `A(x) = {Mx}` with `M + Mᵀ` PSD.
    LinearMonotone { m: Matrix },
    /// `A(x) = {smooth(x)} + N_body(x)`; domain is the body.
    SumWithNormalCone {
        smooth: SmoothPart,
        body: ConvexBody,
    },
    /// Block operator `x̂ ↦ A(head) × {θ}^extra` on R^{n+extra}; the
    /// epigraph transform uses `extra = 3`. Maximal monotone with domain
    /// `dom A × R^extra`.
    Lifted {
        inner: Box<MonotoneOperator>,
        extra: usize,
    },
}

/// Splits a lifted state into its head block and the passthrough tail.
fn split_head(x: &Vector, head_dim: usize) -> (Vector, Vector) {
    (
        x.rows(0, head_dim).into_owned(),
        x.rows(head_dim, x.len() - head_dim).into_owned(),
    )
}

/// Value `A(x)` as a convex body, or the empty marker outside the domain.
#[derive(Debug, Clone)]
pub enum OperatorValue {
    Empty,
    Value { body: ConvexBody, bounded: bool },
}

impl OperatorValue {
    pub fn body(&self) -> Result<&ConvexBody, OpError> {
        match self {
            OperatorValue::Empty => Err(OpError::EmptyValue),
            OperatorValue::Value { body, .. } => Ok(body),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, OperatorValue::Empty)
    }
}

/// Smallest eigenvalue of the symmetric part of `m`; PSD iff ≥ -tol.
pub fn symmetric_part_min_eig(m: &Matrix) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigen().eigenvalues.min()
}

impl MonotoneOperator {
    pub fn dim(&self) -> usize {
        match self {
            MonotoneOperator::NormalConeOf { body } => body.dim(),
            MonotoneOperator::QuadraticGradient { b, .. } => b.len(),
            MonotoneOperator::ScaledNormSubdiff { dim, .. } => *dim,
            MonotoneOperator::LinearMonotone { m } => m.nrows(),
            MonotoneOperator::SumWithNormalCone { body, .. } => body.dim(),
            MonotoneOperator::Lifted { inner, extra } => inner.dim() + extra,
        }
    }

    pub fn validate(&self) -> Result<(), OpError> {
        match self {
            MonotoneOperator::NormalConeOf { body } => body.validate()?,
            MonotoneOperator::QuadraticGradient { q, b } => {
                if q.nrows() != q.ncols() || q.nrows() != b.len() {
                    return Err(OpError::Geometry(GeomError::DimensionMismatch {
                        expected: b.len(),
                        got: q.nrows(),
                    }));
                }
                if (q - q.transpose()).norm() > 1e-9 * (1.0 + q.norm()) {
                    return Err(OpError::Geometry(GeomError::Invalid(
                        "quadratic matrix must be symmetric".into(),
                    )));
                }
                if symmetric_part_min_eig(q) < -1e-9 {
                    return Err(OpError::Geometry(GeomError::Invalid(
                        "matrix not PSD".into(),
                    )));
                }
            }
            MonotoneOperator::ScaledNormSubdiff { weight, .. } => {
                if !(*weight > 0.0) {
                    return Err(OpError::Geometry(GeomError::Invalid(
                        "norm weight must be positive".into(),
                    )));
                }
            }
            MonotoneOperator::LinearMonotone { m } => {
                if m.nrows() != m.ncols() {
                    return Err(OpError::Geometry(GeomError::Invalid(
                        "linear operator must be square".into(),
                    )));
                }
                if symmetric_part_min_eig(m) < -1e-9 {
                    return Err(OpError::Geometry(GeomError::Invalid(
                        "M + Mᵀ not PSD".into(),
                    )));
                }
            }
            MonotoneOperator::SumWithNormalCone { smooth, body } => {
                body.validate()?;
                let m = match smooth {
                    SmoothPart::Quadratic { q, .. } => q,
                    SmoothPart::Linear { m } => m,
                };
                if m.nrows() != body.dim() {
                    return Err(OpError::Geometry(GeomError::DimensionMismatch {
                        expected: body.dim(),
                        got: m.nrows(),
                    }));
                }
                if symmetric_part_min_eig(m) < -1e-9 {
                    return Err(OpError::Geometry(GeomError::Invalid(
                        "smooth part not monotone".into(),
                    )));
                }
                if let SmoothPart::Quadratic { q, .. } = smooth {
                    if (q - q.transpose()).norm() > 1e-9 * (1.0 + q.norm()) {
                        return Err(OpError::Geometry(GeomError::Invalid(
                            "quadratic matrix must be symmetric".into(),
                        )));
                    }
                }
            }
            MonotoneOperator::Lifted { inner, .. } => inner.validate()?,
        }
        Ok(())
    }

    /// The domain as a body; `None` means all of R^n. Lifted operators have
    /// the cylinder domain `dom A × R^extra`, handled by the membership and
    /// projection methods directly.
    pub fn domain_body(&self) -> Option<&ConvexBody> {
        match self {
            MonotoneOperator::NormalConeOf { body }
            | MonotoneOperator::SumWithNormalCone { body, .. } => Some(body),
            _ => None,
        }
    }

    /// Membership in dom A; distance ≤ the body tolerance counts as inside.
    pub fn domain_contains(&self, x: &Vector) -> bool {
        if let MonotoneOperator::Lifted { inner, .. } = self {
            let (head, _) = split_head(x, inner.dim());
            return inner.domain_contains(&head);
        }
        match self.domain_body() {
            Some(b) => b.contains(x, b.tolerance().max(TAU_GEO)),
            None => true,
        }
    }

    pub fn domain_project(&self, x: &Vector) -> Result<Vector, OpError> {
        if let MonotoneOperator::Lifted { inner, .. } = self {
            let (head, tail) = split_head(x, inner.dim());
            return Ok(stack(&inner.domain_project(&head)?, &tail));
        }
        match self.domain_body() {
            Some(b) => Ok(b.project(x)?),
            None => Ok(x.clone()),
        }
    }

    /// `A(x)` as a convex body; `Empty` outside the domain. Normal cones of
    /// non-polyhedral, non-smooth bodies are generated by projection probing
    /// and carry the sampled-cone caveat.
    pub fn evaluate(&self, x: &Vector) -> Result<OperatorValue, OpError> {
        Ok(match self {
            MonotoneOperator::NormalConeOf { body } => match normal_cone_value(body, x)? {
                Some(v) => v,
                None => OperatorValue::Empty,
            },
            MonotoneOperator::QuadraticGradient { q, b } => OperatorValue::Value {
                body: ConvexBody::singleton(q * x + b),
                bounded: true,
            },
            MonotoneOperator::LinearMonotone { m } => OperatorValue::Value {
                body: ConvexBody::singleton(m * x),
                bounded: true,
            },
            MonotoneOperator::ScaledNormSubdiff { weight, dim } => {
                let n = x.norm();
                if n == 0.0 {
                    OperatorValue::Value {
                        body: ConvexBody::Ball {
                            center: Vector::zeros(*dim),
                            radius: *weight,
                        },
                        bounded: true,
                    }
                } else {
                    OperatorValue::Value {
                        body: ConvexBody::singleton(x * (*weight / n)),
                        bounded: true,
                    }
                }
            }
            MonotoneOperator::SumWithNormalCone { smooth, body } => {
                match normal_cone_value(body, x)? {
                    None | Some(OperatorValue::Empty) => OperatorValue::Empty,
                    Some(OperatorValue::Value {
                        body: cone,
                        bounded,
                    }) => OperatorValue::Value {
                        body: ConvexBody::Translate {
                            base: Box::new(cone),
                            shift: smooth.apply(x),
                        },
                        bounded,
                    },
                }
            }
            MonotoneOperator::Lifted { inner, extra } => {
                let (head, _) = split_head(x, inner.dim());
                match inner.evaluate(&head)? {
                    OperatorValue::Empty => OperatorValue::Empty,
                    OperatorValue::Value { body, bounded } => OperatorValue::Value {
                        body: crate::geometry::embed_with_tail(&body, &Vector::zeros(*extra)),
                        bounded,
                    },
                }
            }
        })
    }

    /// Resolvent `J_λ(y)`: the unique `x` with `y ∈ x + λ A(x)`.
    pub fn resolvent(&self, lambda: f64, y: &Vector) -> Result<Vector, OpError> {
        assert!(lambda > 0.0, "resolvent parameter must be positive");
        match self {
            MonotoneOperator::NormalConeOf { body } => Ok(body.project(y)?),
            MonotoneOperator::QuadraticGradient { q, b } => {
                let n = y.len();
                let sys = Matrix::identity(n, n) + q * lambda;
                let rhs = y - b * lambda;
                sys.lu().solve(&rhs).ok_or(OpError::NoConvergence {
                    residual: f64::INFINITY,
                })
            }
            MonotoneOperator::LinearMonotone { m } => {
                let n = y.len();
                let sys = Matrix::identity(n, n) + m * lambda;
                sys.lu().solve(y).ok_or(OpError::NoConvergence {
                    residual: f64::INFINITY,
                })
            }
            MonotoneOperator::ScaledNormSubdiff { weight, .. } => {
                let n = y.norm();
                let shrink = lambda * weight;
                if n <= shrink {
                    Ok(Vector::zeros(y.len()))
                } else {
                    Ok(y * (1.0 - shrink / n))
                }
            }
            MonotoneOperator::SumWithNormalCone { smooth, body } => {
                // Projected fixed point of the strongly monotone inclusion
                // θ ∈ x − y + λ smooth(x) + λ N_body(x).
                let ell = 1.0 + lambda * smooth.op_norm();
                let step = match smooth {
                    SmoothPart::Quadratic { .. } => 1.0 / ell,
                    SmoothPart::Linear { .. } => 1.0 / (ell * ell),
                };
                let mut x = body.project(y)?;
                let mut residual = f64::INFINITY;
                // The inclusion residual (y−x)/λ amplifies the fixed-point
                // error by 1/λ, so the stop rule scales with λ as well.
                let stop = 0.01 * TAU_RES * step.min(1.0) * lambda.min(1.0);
                for _ in 0..numerics::PG_MAX_ITERS {
                    let grad = &x - y + smooth.apply(&x) * lambda;
                    let next = body.project(&(&x - grad * step))?;
                    residual = (&next - &x).norm();
                    x = next;
                    if residual <= stop {
                        return Ok(x);
                    }
                }
                Err(OpError::NoConvergence { residual })
            }
            MonotoneOperator::Lifted { inner, .. } => {
                // Zero block: the tail resolvent is the identity.
                let (head, tail) = split_head(y, inner.dim());
                Ok(stack(&inner.resolvent(lambda, &head)?, &tail))
            }
        }
    }

    /// Minimal section `A°(x) = Π_{A(x)}(θ)`; singleton on dom A.
    pub fn min_section(&self, x: &Vector) -> Result<Vector, OpError> {
        if let MonotoneOperator::Lifted { inner, extra } = self {
            let (head, _) = split_head(x, inner.dim());
            return Ok(stack(&inner.min_section(&head)?, &Vector::zeros(*extra)));
        }
        Ok(self.evaluate(x)?.body()?.min_norm_point()?)
    }

    /// `Π_{A(x)}(v)`.
    pub fn project_onto_value(&self, x: &Vector, v: &Vector) -> Result<Vector, OpError> {
        if let MonotoneOperator::Lifted { inner, extra } = self {
            let (hx, _) = split_head(x, inner.dim());
            let (hv, _) = split_head(v, inner.dim());
            return Ok(stack(
                &inner.project_onto_value(&hx, &hv)?,
                &Vector::zeros(*extra),
            ));
        }
        Ok(self.evaluate(x)?.body()?.project(v)?)
    }

    /// `σ_{A(x)}(ξ)`; may be +∞ for cone-valued operators.
    pub fn value_support(&self, x: &Vector, xi: &Vector) -> Result<f64, OpError> {
        if let MonotoneOperator::Lifted { inner, .. } = self {
            let (hx, _) = split_head(x, inner.dim());
            let (hxi, _) = split_head(xi, inner.dim());
            return inner.value_support(&hx, &hxi);
        }
        Ok(self.evaluate(x)?.body()?.support(xi)?)
    }

    /// `σ_{A(x) ∩ B_ρ}(ξ)`: support of the truncated value, used by the
    /// bounded-operator criteria. Exact for singletons, origin-centered
    /// balls and cones; ascent-based for translated cones.
    pub fn truncated_value_support(
        &self,
        x: &Vector,
        xi: &Vector,
        rho: f64,
    ) -> Result<f64, OpError> {
        if let MonotoneOperator::Lifted { inner, .. } = self {
            // The tail block is {θ}, so the truncated support only sees the
            // head coordinates.
            let (hx, _) = split_head(x, inner.dim());
            let (hxi, _) = split_head(xi, inner.dim());
            return inner.truncated_value_support(&hx, &hxi, rho);
        }
        let value = self.evaluate(x)?;
        truncated_support(value.body()?, xi, rho)
    }

    /// Sampled local bound on ‖A°‖ over `set ∩ B(x, radius) ∩ dom A`;
    /// estimates the paper-style limsup quantity from below.
    pub fn local_min_section_bound(
        &self,
        set: &crate::geometry::ClosedSet,
        x: &Vector,
        radius: f64,
        samples: usize,
    ) -> Result<f64, OpError> {
        let mut best: Option<f64> = None;
        let mut consider = |y: &Vector| -> Result<(), OpError> {
            if (y - x).norm() <= radius * (1.0 + 1e-9)
                && set.contains(y, set.tolerance())
                && self.domain_contains(y)
            {
                let m = self.min_section(y)?.norm();
                best = Some(best.map_or(m, |b: f64| b.max(m)));
            }
            Ok(())
        };
        consider(x)?;
        for p in sampling::halton_ball_points(x, radius, samples) {
            let y = set.project(&p);
            consider(&y)?;
            // The raw point also counts when the set has volume.
            consider(&p)?;
        }
        best.ok_or(OpError::NoDomainSample)
    }
}

/// Normal cone of `body` at `x` as an operator value; `None` when x is
/// outside the body (beyond its tolerance). Interior points yield the
/// singleton `{θ}` (a cone with no generators has no dimension of its own).
fn normal_cone_value(body: &ConvexBody, x: &Vector) -> Result<Option<OperatorValue>, OpError> {
    if !body.contains(x, body.tolerance().max(TAU_GEO)) {
        return Ok(None);
    }
    let rays = body.normal_rays(x, budget_default())?;
    Ok(Some(if rays.rays.is_empty() {
        OperatorValue::Value {
            body: ConvexBody::singleton(Vector::zeros(x.len())),
            bounded: true,
        }
    } else {
        OperatorValue::Value {
            body: ConvexBody::Cone {
                generators: rays.rays,
            },
            bounded: false,
        }
    }))
}

/// Support of `body ∩ B_ρ` in direction ξ.
pub fn truncated_support(body: &ConvexBody, xi: &Vector, rho: f64) -> Result<f64, OpError> {
    match body {
        ConvexBody::Ball { center, radius } => {
            if center.norm() + radius <= rho + TAU_GEO {
                return Ok(body.support(xi)?);
            }
            if center.norm() <= TAU_GEO {
                return Ok(radius.min(rho) * xi.norm());
            }
            if center.norm() - radius > rho + TAU_GEO {
                return Err(OpError::TruncationEmpty { rho });
            }
            ascent_truncated_support(body, xi, rho)
        }
        ConvexBody::Cone { generators } => {
            // σ_{K ∩ B_ρ}(ξ) = ρ ‖Π_K(ξ)‖.
            let p = solvers::project_onto_cone(generators, xi);
            Ok(rho * p.norm())
        }
        ConvexBody::VPolytope { vertices } => {
            if vertices.iter().all(|v| v.norm() <= rho + TAU_GEO) {
                return Ok(body.support(xi)?);
            }
            ascent_truncated_support(body, xi, rho)
        }
        ConvexBody::Translate { .. } => {
            let min_norm = body.min_norm_point()?.norm();
            if min_norm > rho + 1e-6 {
                return Err(OpError::TruncationEmpty { rho });
            }
            ascent_truncated_support(body, xi, rho)
        }
        _ => ascent_truncated_support(body, xi, rho),
    }
}

fn ascent_truncated_support(body: &ConvexBody, xi: &Vector, rho: f64) -> Result<f64, OpError> {
    let dim = body.dim();
    let ball = ConvexBody::Ball {
        center: Vector::zeros(dim),
        radius: rho,
    };
    let b1 = body.clone();
    let p1 = move |y: &Vector| b1.project(y).expect("validated body");
    let p2 = move |y: &Vector| ball.project(y).expect("ball projection");
    let proj = move |y: &Vector| {
        let projs: Vec<&dyn Fn(&Vector) -> Vector> = vec![&p1, &p2];
        let (z, _) = solvers::dykstra(&projs, y, 1e-11, 2_000);
        z
    };
    let start = proj(&body.min_norm_point()?);
    if body.distance(&start)? > 1e-5 || start.norm() > rho + 1e-5 {
        return Err(OpError::TruncationEmpty { rho });
    }
    match solvers::support_by_ascent(&proj, xi, &start, rho.max(1.0), 20_000) {
        Some(v) => Ok(v),
        None => Ok(f64::INFINITY),
    }
}
