//! Lower-semicontinuous scalar functions with first-order oracles:
//! values, proximal/Fréchet subgradients (they coincide for the shipped
//! convex variants), singular subgradients, contingent directional
//! derivatives and the Pasch-Hausdorff envelope
//! `W_k(x) = inf_z { W(z) + k‖x − z‖ }`.

use crate::geometry::{budget_default, ConvexBody, GeomError};
use crate::numerics::{self, TAU_GEO};
use crate::{Matrix, Vector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FnError {
    #[error("point outside the function domain")]
    NotInDomain,
    #[error(transparent)]
    Geometry(#[from] GeomError),
}

/// Proper lsc function variants used as Lyapunov V/W candidates.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarFn {
    /// `½⟨Qx, x⟩ + ⟨b, x⟩ + c` with Q symmetric PSD.
    ConvexQuadratic { q: Matrix, b: Vector, c: f64 },
    /// `weight·‖x‖^p`, p ∈ {1, 2}.
    NormPower { p: u8, weight: f64, dim: usize },
    /// `max_i ⟨g_i, x⟩ + c_i`.
    MaxAffine { pieces: Vec<(Vector, f64)> },
    /// `I_body + smooth`: +∞ off the body, the quadratic on it.
    IndicatorPlus {
        body: ConvexBody,
        smooth: Box<ScalarFn>,
    },
    /// `(x, α, β) ↦ e^{aβ}·base(x) + α`; the epigraph-transform objective.
    LiftedValue { base: Box<ScalarFn>, a: f64 },
}

impl ScalarFn {
    pub fn half_sq_norm(dim: usize) -> Self {
        ScalarFn::ConvexQuadratic {
            q: Matrix::identity(dim, dim),
            b: Vector::zeros(dim),
            c: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ScalarFn::ConvexQuadratic { b, .. } => b.len(),
            ScalarFn::NormPower { dim, .. } => *dim,
            ScalarFn::MaxAffine { pieces } => pieces[0].0.len(),
            ScalarFn::IndicatorPlus { body, .. } => body.dim(),
            ScalarFn::LiftedValue { base, .. } => base.dim() + 2,
        }
    }

    pub fn validate(&self) -> Result<(), FnError> {
        match self {
            ScalarFn::ConvexQuadratic { q, b, .. } => {
                if q.nrows() != b.len() || q.ncols() != b.len() {
                    return Err(FnError::Geometry(GeomError::DimensionMismatch {
                        expected: b.len(),
                        got: q.nrows(),
                    }));
                }
                if (q - q.transpose()).norm() > 1e-9 * (1.0 + q.norm()) {
                    return Err(FnError::Geometry(GeomError::Invalid(
                        "quadratic matrix must be symmetric".into(),
                    )));
                }
                let min_eig = ((q + q.transpose()) * 0.5)
                    .symmetric_eigen()
                    .eigenvalues
                    .min();
                if min_eig < -1e-9 {
                    return Err(FnError::Geometry(GeomError::Invalid(
                        "matrix not PSD".into(),
                    )));
                }
            }
            ScalarFn::NormPower { p, weight, .. } => {
                if !matches!(p, 1 | 2) {
                    return Err(FnError::Geometry(GeomError::Invalid(
                        "norm power must be 1 or 2".into(),
                    )));
                }
                if !(*weight >= 0.0) {
                    return Err(FnError::Geometry(GeomError::Invalid(
                        "norm weight must be ≥ 0".into(),
                    )));
                }
            }
            ScalarFn::MaxAffine { pieces } => {
                if pieces.is_empty() {
                    return Err(FnError::Geometry(GeomError::Invalid(
                        "max-affine needs at least one piece".into(),
                    )));
                }
            }
            ScalarFn::IndicatorPlus { body, smooth } => {
                body.validate()?;
                smooth.validate()?;
                if smooth.dim() != body.dim() {
                    return Err(FnError::Geometry(GeomError::DimensionMismatch {
                        expected: body.dim(),
                        got: smooth.dim(),
                    }));
                }
            }
            ScalarFn::LiftedValue { base, .. } => base.validate()?,
        }
        Ok(())
    }

    /// Function value; +∞ outside the domain.
    pub fn value(&self, x: &Vector) -> f64 {
        match self {
            ScalarFn::ConvexQuadratic { q, b, c } => 0.5 * (q * x).dot(x) + b.dot(x) + c,
            ScalarFn::NormPower { p, weight, .. } => {
                let n = x.norm();
                match p {
                    1 => weight * n,
                    _ => weight * n * n,
                }
            }
            ScalarFn::MaxAffine { pieces } => pieces
                .iter()
                .map(|(g, c)| g.dot(x) + c)
                .fold(f64::NEG_INFINITY, f64::max),
            ScalarFn::IndicatorPlus { body, smooth } => {
                if body.contains(x, body.tolerance().max(TAU_GEO)) {
                    smooth.value(x)
                } else {
                    f64::INFINITY
                }
            }
            ScalarFn::LiftedValue { base, a } => {
                let n = base.dim();
                let head = x.rows(0, n).into_owned();
                let alpha = x[n];
                let beta = x[n + 1];
                (a * beta).exp() * base.value(&head) + alpha
            }
        }
    }

    pub fn domain_contains(&self, x: &Vector) -> bool {
        self.value(x).is_finite()
    }

    /// Domain as a body when it is a proper subset of R^n.
    pub fn domain_body(&self) -> Option<&ConvexBody> {
        match self {
            ScalarFn::IndicatorPlus { body, .. } => Some(body),
            _ => None,
        }
    }

    /// Sampled subdifferential elements at `x` (exact and finite for the
    /// smooth/polyhedral variants; a frame for the norm at θ; gradient plus
    /// scaled normal rays for indicator sums).
    pub fn subgradients(&self, x: &Vector, budget: usize) -> Result<Vec<Vector>, FnError> {
        if !self.domain_contains(x) {
            return Err(FnError::NotInDomain);
        }
        Ok(match self {
            ScalarFn::ConvexQuadratic { q, b, .. } => vec![q * x + b],
            ScalarFn::NormPower { p, weight, .. } => {
                let n = x.norm();
                match (p, n) {
                    (1, n) if n <= TAU_GEO => numerics::unit_directions(x.len(), budget)
                        .into_iter()
                        .map(|d| d * *weight)
                        .collect(),
                    (1, n) => vec![x * (*weight / n)],
                    _ => vec![x * (2.0 * *weight)],
                }
            }
            ScalarFn::MaxAffine { pieces } => {
                let v = self.value(x);
                let scale = 1.0 + v.abs();
                pieces
                    .iter()
                    .filter(|(g, c)| g.dot(x) + c >= v - 1e-9 * scale)
                    .map(|(g, _)| g.clone())
                    .collect()
            }
            ScalarFn::IndicatorPlus { body, smooth } => {
                let grad = smooth.subgradients(x, budget)?.swap_remove(0);
                let rays = body.normal_rays(x, budget)?;
                let mut out = vec![grad.clone()];
                for r in &rays.rays {
                    for scale in [1.0, 10.0] {
                        if out.len() < budget.max(4) {
                            out.push(&grad + r * scale);
                        }
                    }
                }
                out
            }
            ScalarFn::LiftedValue { base, a } => {
                let n = base.dim();
                let head = x.rows(0, n).into_owned();
                let beta = x[n + 1];
                let eab = (a * beta).exp();
                let vx = base.value(&head);
                base.subgradients(&head, budget)?
                    .into_iter()
                    .map(|xi| {
                        let mut out = Vector::zeros(n + 2);
                        out.rows_mut(0, n).copy_from(&(xi * eab));
                        out[n] = 1.0;
                        out[n + 1] = a * eab * vx;
                        out
                    })
                    .collect()
            }
        })
    }

    /// Singular (horizon) subgradients: {θ} for the locally Lipschitz
    /// variants, the horizontal normal rays for indicator sums.
    pub fn singular_subgradients(&self, x: &Vector) -> Result<Vec<Vector>, FnError> {
        if !self.domain_contains(x) {
            return Err(FnError::NotInDomain);
        }
        Ok(match self {
            ScalarFn::IndicatorPlus { body, .. } => {
                let rays = body.normal_rays(x, budget_default())?;
                if rays.rays.is_empty() {
                    vec![Vector::zeros(x.len())]
                } else {
                    rays.rays
                }
            }
            ScalarFn::LiftedValue { base, .. } => {
                let n = base.dim();
                let head = x.rows(0, n).into_owned();
                base.singular_subgradients(&head)?
                    .into_iter()
                    .map(|xi| {
                        let mut out = Vector::zeros(n + 2);
                        out.rows_mut(0, n).copy_from(&xi);
                        out
                    })
                    .collect()
            }
            _ => vec![Vector::zeros(x.len())],
        })
    }

    /// Contingent directional derivative `V′(x; d)`; exact per variant,
    /// +∞ when `d` leaves the tangent cone of an indicator domain.
    pub fn directional_derivative(&self, x: &Vector, d: &Vector) -> Result<f64, FnError> {
        if !self.domain_contains(x) {
            return Err(FnError::NotInDomain);
        }
        Ok(match self {
            ScalarFn::ConvexQuadratic { q, b, .. } => (q * x + b).dot(d),
            ScalarFn::NormPower { p, weight, .. } => {
                let n = x.norm();
                match (p, n) {
                    (1, n) if n <= TAU_GEO => weight * d.norm(),
                    (1, n) => weight * x.dot(d) / n,
                    _ => 2.0 * weight * x.dot(d),
                }
            }
            ScalarFn::MaxAffine { pieces } => {
                let v = self.value(x);
                let scale = 1.0 + v.abs();
                pieces
                    .iter()
                    .filter(|(g, c)| g.dot(x) + c >= v - 1e-9 * scale)
                    .map(|(g, _)| g.dot(d))
                    .fold(f64::NEG_INFINITY, f64::max)
            }
            ScalarFn::IndicatorPlus { body, smooth } => {
                if tangent_to_body(body, x, d)? {
                    smooth.directional_derivative(x, d)?
                } else {
                    f64::INFINITY
                }
            }
            ScalarFn::LiftedValue { base, a } => {
                let n = base.dim();
                let head = x.rows(0, n).into_owned();
                let dhead = d.rows(0, n).into_owned();
                let beta = x[n + 1];
                let eab = (a * beta).exp();
                let inner = base.directional_derivative(&head, &dhead)?;
                if !inner.is_finite() {
                    return Ok(inner);
                }
                eab * inner + d[n] + a * eab * base.value(&head) * d[n + 1]
            }
        })
    }

    /// Pasch-Hausdorff envelope `W_k(x)`: closed form for the norm powers
    /// and origin-isotropic quadratics, multiscale grid refinement
    /// otherwise (target accuracy 1e-6).
    pub fn pasch_hausdorff(&self, k: f64, x: &Vector) -> f64 {
        assert!(k > 0.0, "envelope index must be positive");
        match self {
            ScalarFn::NormPower { p: 1, weight, .. } => weight.min(k) * x.norm(),
            ScalarFn::NormPower { p: _, weight, .. } => {
                radial_quadratic_envelope(*weight, k, x.norm())
            }
            ScalarFn::ConvexQuadratic { q, b, c } if is_isotropic(q) && b.norm() == 0.0 => {
                // ½α‖x‖² + c: radial problem with weight α/2.
                radial_quadratic_envelope(0.5 * q[(0, 0)], k, x.norm()) + c
            }
            ScalarFn::MaxAffine { pieces }
                if pieces.iter().all(|(g, _)| g.norm() <= k + TAU_GEO) =>
            {
                // Already k-Lipschitz: the envelope is the function itself.
                self.value(x)
            }
            _ => envelope_by_grid(self, k, x),
        }
    }

    /// Whether the subgradient list at `x` is the exact subdifferential
    /// description (as opposed to a sampled frame or probed rays).
    pub fn subgradient_exactness(&self, x: &Vector) -> bool {
        match self {
            ScalarFn::ConvexQuadratic { .. } | ScalarFn::MaxAffine { .. } => true,
            ScalarFn::NormPower { p: 1, .. } => x.norm() > TAU_GEO,
            ScalarFn::NormPower { .. } => true,
            ScalarFn::IndicatorPlus { body, .. } => body
                .normal_rays(x, budget_default())
                .map(|r| r.exact)
                .unwrap_or(false),
            ScalarFn::LiftedValue { base, .. } => {
                let head = x.rows(0, base.dim()).into_owned();
                base.subgradient_exactness(&head)
            }
        }
    }

    /// Lipschitz bound on the ball B(θ, r) when available in closed form.
    pub fn lipschitz_on_ball(&self, r: f64) -> Option<f64> {
        match self {
            ScalarFn::ConvexQuadratic { q, b, .. } => Some(numerics::op_norm(q) * r + b.norm()),
            ScalarFn::NormPower { p: 1, weight, .. } => Some(*weight),
            ScalarFn::NormPower { p: _, weight, .. } => Some(2.0 * weight * r),
            ScalarFn::MaxAffine { pieces } => {
                Some(pieces.iter().map(|(g, _)| g.norm()).fold(0.0, f64::max))
            }
            _ => None,
        }
    }
}

fn is_isotropic(q: &Matrix) -> bool {
    let alpha = q[(0, 0)];
    (q - Matrix::identity(q.nrows(), q.ncols()) * alpha).norm() <= 1e-12 * (1.0 + q.norm())
}

/// Envelope of `w·s²` along the radius: minimize over the segment toward θ.
fn radial_quadratic_envelope(w: f64, k: f64, r: f64) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    let s_star = k / (2.0 * w);
    if r <= s_star {
        w * r * r
    } else {
        k * r - k * k / (4.0 * w)
    }
}

/// Multiscale grid search for `inf_z f(z) + k‖x − z‖`: full grids up to
/// three dimensions, cyclic coordinate refinement above.
fn envelope_by_grid(f: &ScalarFn, k: f64, x: &Vector) -> f64 {
    let dim = x.len();
    let fx = f.value(x);
    let mut best_val = fx; // z = x is always admissible
    let mut center = x.clone();
    // A minimizer satisfies k‖x − z‖ ≤ f(x) − inf f ≤ f(x) (f ≥ 0 for W roles).
    let mut span = (fx.max(0.0) / k).max(1.0);
    let objective = |z: &Vector| {
        let v = f.value(z);
        if v.is_finite() {
            v + k * (x - z).norm()
        } else {
            f64::INFINITY
        }
    };
    for _round in 0..26 {
        if dim <= 3 {
            let pts = 7usize;
            let mut best_here = center.clone();
            let mut idx = vec![0usize; dim];
            loop {
                let mut z = center.clone();
                for d in 0..dim {
                    z[d] += span * (idx[d] as f64 / (pts - 1) as f64 * 2.0 - 1.0);
                }
                let v = objective(&z);
                if v < best_val {
                    best_val = v;
                    best_here = z;
                }
                // Odometer over the grid indices.
                let mut d = 0;
                loop {
                    if d == dim {
                        break;
                    }
                    idx[d] += 1;
                    if idx[d] < pts {
                        break;
                    }
                    idx[d] = 0;
                    d += 1;
                }
                if d == dim {
                    break;
                }
            }
            center = best_here;
        } else {
            for d in 0..dim {
                let mut best_t = 0.0;
                for s in 0..15 {
                    let t = span * (s as f64 / 7.0 - 1.0);
                    let mut z = center.clone();
                    z[d] += t;
                    let v = objective(&z);
                    if v < best_val {
                        best_val = v;
                        best_t = t;
                    }
                }
                center[d] += best_t;
            }
        }
        span *= 0.35;
        if span * k.max(1.0) <= 1e-10 {
            break;
        }
    }
    best_val
}

/// Tangent test against a single convex body (polar when rays are exact,
/// distance surrogate otherwise).
fn tangent_to_body(body: &ConvexBody, x: &Vector, d: &Vector) -> Result<bool, FnError> {
    let rays = body.normal_rays(x, budget_default())?;
    if rays.exact {
        return Ok(rays
            .rays
            .iter()
            .all(|xi| xi.dot(d) <= crate::geometry::TANGENT_TOL));
    }
    let surrogate = crate::geometry::TANGENT_T_GRID
        .iter()
        .map(|&t| body.distance(&(x + d * t)).map(|dd| dd / t))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok(surrogate <= crate::geometry::TANGENT_TOL)
}
