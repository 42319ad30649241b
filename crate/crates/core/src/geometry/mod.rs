//! Convex-set primitives: support functions, projections, distances,
//! proximal normal rays and Bouligand tangent membership.
//!
//! Bodies with closed-form projections (balls, half-space systems after an
//! active-set polish, point sets, finitely generated cones) operate at
//! [`numerics::TAU_GEO`]; intersections are projected iteratively with
//! Dykstra corrections and operate at [`numerics::TAU_ITER`]. Closed sets
//! are finite unions of convex bodies; their normal cones are the unions of
//! the per-piece cones, which is sound for proximal normals of each piece
//! but makes no completeness claim at multi-piece contact points.

pub mod sampling;
pub mod solvers;

use crate::numerics::{self, TAU_GEO, TAU_ITER};
use crate::Vector;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeomError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("infeasible body: {0}")]
    Infeasible(String),
    #[error("point not in set (distance {distance:.3e})")]
    NotInSet { distance: f64 },
    #[error("invalid body: {0}")]
    Invalid(String),
}

/// Nonempty closed convex set in R^n.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexBody {
    /// Closed ball `‖x − center‖ ≤ radius`; radius 0 is a point.
    Ball { center: Vector, radius: f64 },
    /// Intersection of half-spaces `⟨normals[i], x⟩ ≤ offsets[i]`.
    HPolytope {
        normals: Vec<Vector>,
        offsets: Vec<f64>,
    },
    /// Convex hull of finitely many vertices.
    VPolytope { vertices: Vec<Vector> },
    /// Finitely generated cone `{Σ t_i g_i : t ≥ 0}`; no generators is `{θ}`.
    Cone { generators: Vec<Vector> },
    /// `base + shift`.
    Translate {
        base: Box<ConvexBody>,
        shift: Vector,
    },
    /// Intersection of the parts; projected by Dykstra sweeps.
    Intersection { parts: Vec<ConvexBody> },
}

/// Rays generating (a sampled subset of) a proximal normal cone.
#[derive(Debug, Clone)]
pub struct NormalRays {
    pub rays: Vec<Vector>,
    /// True when the rays are exact cone generators (polyhedral faces,
    /// smooth boundary); false when they were found by projection probing.
    pub exact: bool,
}

impl NormalRays {
    fn empty(exact: bool) -> Self {
        NormalRays {
            rays: Vec::new(),
            exact,
        }
    }
}

impl ConvexBody {
    pub fn singleton(p: Vector) -> Self {
        ConvexBody::Ball {
            center: p,
            radius: 0.0,
        }
    }

    /// Axis-aligned box `lo ≤ x ≤ hi` as an H-polytope.
    pub fn box_body(lo: &[f64], hi: &[f64]) -> Self {
        assert_eq!(lo.len(), hi.len());
        let n = lo.len();
        let mut normals = Vec::with_capacity(2 * n);
        let mut offsets = Vec::with_capacity(2 * n);
        for i in 0..n {
            let mut e = Vector::zeros(n);
            e[i] = 1.0;
            normals.push(e.clone());
            offsets.push(hi[i]);
            e[i] = -1.0;
            normals.push(e);
            offsets.push(-lo[i]);
        }
        ConvexBody::HPolytope { normals, offsets }
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexBody::Ball { center, .. } => center.len(),
            ConvexBody::HPolytope { normals, .. } => normals[0].len(),
            ConvexBody::VPolytope { vertices } => vertices[0].len(),
            ConvexBody::Cone { generators } => generators.first().map(|g| g.len()).unwrap_or(0),
            ConvexBody::Translate { shift, .. } => shift.len(),
            ConvexBody::Intersection { parts } => parts[0].dim(),
        }
    }

    /// Achievable projection accuracy for this body.
    pub fn tolerance(&self) -> f64 {
        match self {
            ConvexBody::Intersection { .. } => TAU_ITER,
            ConvexBody::Translate { base, .. } => base.tolerance(),
            _ => TAU_GEO,
        }
    }

    /// Structural checks plus a feasibility probe; scenario loading calls
    /// this on every constructed body.
    pub fn validate(&self) -> Result<(), GeomError> {
        match self {
            ConvexBody::Ball { radius, center } => {
                if !radius.is_finite() || *radius < 0.0 {
                    return Err(GeomError::Invalid("radius must be ≥ 0".into()));
                }
                if center.iter().any(|c| !c.is_finite()) {
                    return Err(GeomError::Invalid("center must be finite".into()));
                }
            }
            ConvexBody::HPolytope { normals, offsets } => {
                if normals.is_empty() || normals.len() != offsets.len() {
                    return Err(GeomError::Invalid(
                        "half-space counts must match and be nonzero".into(),
                    ));
                }
                let d = normals[0].len();
                for n in normals {
                    if n.len() != d {
                        return Err(GeomError::DimensionMismatch {
                            expected: d,
                            got: n.len(),
                        });
                    }
                    if n.norm() == 0.0 {
                        return Err(GeomError::Invalid(
                            "half-space normal must be nonzero".into(),
                        ));
                    }
                }
                // Feasibility probe: project the origin and check residual.
                let z = self.project(&Vector::zeros(d))?;
                let scale = 1.0 + z.norm();
                for (n, b) in normals.iter().zip(offsets) {
                    if n.dot(&z) - b > 1e-5 * scale * n.norm() {
                        return Err(GeomError::Infeasible("half-space system".into()));
                    }
                }
            }
            ConvexBody::VPolytope { vertices } => {
                if vertices.is_empty() {
                    return Err(GeomError::Invalid("vertex list must be nonempty".into()));
                }
                let d = vertices[0].len();
                for v in vertices {
                    if v.len() != d {
                        return Err(GeomError::DimensionMismatch {
                            expected: d,
                            got: v.len(),
                        });
                    }
                }
            }
            ConvexBody::Cone { generators } => {
                if generators.is_empty() {
                    return Err(GeomError::Invalid(
                        "cone needs a generator; use a zero-radius ball for {θ}".into(),
                    ));
                }
                let d = self.dim();
                for g in generators {
                    if g.len() != d {
                        return Err(GeomError::DimensionMismatch {
                            expected: d,
                            got: g.len(),
                        });
                    }
                }
            }
            ConvexBody::Translate { base, shift } => {
                base.validate()?;
                if base.dim() != shift.len() {
                    return Err(GeomError::DimensionMismatch {
                        expected: base.dim(),
                        got: shift.len(),
                    });
                }
            }
            ConvexBody::Intersection { parts } => {
                if parts.is_empty() {
                    return Err(GeomError::Invalid("intersection needs parts".into()));
                }
                let d = parts[0].dim();
                for p in parts {
                    p.validate()?;
                    if p.dim() != d {
                        return Err(GeomError::DimensionMismatch {
                            expected: d,
                            got: p.dim(),
                        });
                    }
                }
                // Lazy feasibility: a probing projection must land in every part.
                let z = self.project(&Vector::zeros(d))?;
                for p in parts {
                    if !p.contains(&z, 10.0 * TAU_ITER) {
                        return Err(GeomError::Infeasible("intersection of parts".into()));
                    }
                }
            }
        }
        Ok(())
    }

    fn check_dim(&self, x: &Vector) -> Result<(), GeomError> {
        if x.len() != self.dim() {
            return Err(GeomError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Support value `sup ⟨ξ, s⟩` over the body; +∞ for unbounded bodies.
    pub fn support(&self, xi: &Vector) -> Result<f64, GeomError> {
        self.check_dim(xi)?;
        Ok(match self {
            ConvexBody::Ball { center, radius } => center.dot(xi) + radius * xi.norm(),
            ConvexBody::VPolytope { vertices } => vertices
                .iter()
                .map(|v| v.dot(xi))
                .fold(f64::NEG_INFINITY, f64::max),
            ConvexBody::Cone { generators } => {
                let unbounded = generators.iter().any(|g| {
                    let gn = g.norm();
                    gn > 0.0 && g.dot(xi) > 1e-12 * gn * xi.norm().max(1.0)
                });
                if unbounded {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            ConvexBody::Translate { base, shift } => {
                let s = base.support(xi)?;
                if s.is_finite() {
                    s + shift.dot(xi)
                } else {
                    s
                }
            }
            ConvexBody::HPolytope { .. } | ConvexBody::Intersection { .. } => {
                let proj = |y: &Vector| self.project(y).expect("validated body");
                let start = proj(&Vector::zeros(self.dim()));
                let scale = 1.0 + start.norm();
                solvers::support_by_ascent(&proj, xi, &start, scale, 50_000)
                    .unwrap_or(f64::INFINITY)
            }
        })
    }

    /// Nearest point of the body; unique by convexity.
    pub fn project(&self, x: &Vector) -> Result<Vector, GeomError> {
        self.check_dim(x)?;
        Ok(match self {
            ConvexBody::Ball { center, radius } => {
                let d = x - center;
                let n = d.norm();
                if n <= *radius {
                    x.clone()
                } else if n == 0.0 {
                    center.clone()
                } else {
                    center + d * (radius / n)
                }
            }
            ConvexBody::HPolytope { normals, offsets } => {
                let scale = 1.0 + x.norm();
                let feasible = normals
                    .iter()
                    .zip(offsets)
                    .all(|(n, b)| n.dot(x) - b <= TAU_GEO * scale * n.norm());
                if feasible {
                    return Ok(x.clone());
                }
                let projs: Vec<solvers::Projector> = normals
                    .iter()
                    .zip(offsets.iter())
                    .map(|(n, b)| {
                        let (n, b) = (n.clone(), *b);
                        Box::new(move |y: &Vector| solvers::project_halfspace(&n, b, y))
                            as solvers::Projector
                    })
                    .collect();
                let (z, movement) =
                    solvers::dykstra_boxed(&projs, x, 1e-12, numerics::DYKSTRA_MAX_SWEEPS);
                if let Some(p) = solvers::polish_polytope_projection(normals, offsets, x, &z) {
                    return Ok(p);
                }
                if movement > TAU_ITER {
                    return Err(GeomError::Infeasible("half-space system".into()));
                }
                z
            }
            ConvexBody::VPolytope { vertices } => solvers::project_onto_hull(vertices, x),
            ConvexBody::Cone { generators } => solvers::project_onto_cone(generators, x),
            ConvexBody::Translate { base, shift } => base.project(&(x - shift))? + shift,
            ConvexBody::Intersection { parts } => {
                let projs: Vec<solvers::Projector> = parts
                    .iter()
                    .map(|p| {
                        let p = p.clone();
                        Box::new(move |y: &Vector| p.project(y).expect("validated part"))
                            as solvers::Projector
                    })
                    .collect();
                let (z, movement) =
                    solvers::dykstra_boxed(&projs, x, 1e-10, numerics::DYKSTRA_MAX_SWEEPS);
                if movement > TAU_ITER {
                    return Err(GeomError::Infeasible("intersection of parts".into()));
                }
                z
            }
        })
    }

    pub fn distance(&self, x: &Vector) -> Result<f64, GeomError> {
        Ok((x - self.project(x)?).norm())
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        match self {
            ConvexBody::Ball { center, radius } => (x - center).norm() <= radius + tol,
            ConvexBody::HPolytope { normals, offsets } => normals
                .iter()
                .zip(offsets)
                .all(|(n, b)| n.dot(x) - b <= tol * n.norm()),
            ConvexBody::Translate { base, shift } => base.contains(&(x - shift), tol),
            ConvexBody::Intersection { parts } => parts.iter().all(|p| p.contains(x, tol)),
            _ => self.distance(x).map(|d| d <= tol).unwrap_or(false),
        }
    }

    /// Least-norm element `Π_body(θ)`.
    pub fn min_norm_point(&self) -> Result<Vector, GeomError> {
        self.project(&Vector::zeros(self.dim()))
    }

    /// `sup ‖v‖` over the body, +∞ when unbounded.
    pub fn norm_bound(&self) -> Result<f64, GeomError> {
        Ok(match self {
            ConvexBody::Ball { center, radius } => center.norm() + radius,
            ConvexBody::VPolytope { vertices } => {
                vertices.iter().map(|v| v.norm()).fold(0.0, f64::max)
            }
            ConvexBody::Cone { generators } => {
                if generators.iter().all(|g| g.norm() == 0.0) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            _ => {
                // sup ‖v‖ = max over probe directions of σ(ξ); exact only for
                // the closed-form bodies above, a finite upper proxy elsewhere.
                let dim = self.dim();
                let mut worst: f64 = 0.0;
                for dir in numerics::unit_directions(dim, 2 * dim) {
                    let s = self.support(&dir)?;
                    if !s.is_finite() {
                        return Ok(f64::INFINITY);
                    }
                    worst = worst.max(s.abs());
                }
                worst * (dim as f64).sqrt()
            }
        })
    }

    /// Radius of an origin-centered ball containing the body, when bounded.
    pub fn bounding_radius(&self) -> Option<f64> {
        match self {
            ConvexBody::Ball { center, radius } => Some(center.norm() + radius),
            ConvexBody::VPolytope { vertices } => {
                Some(vertices.iter().map(|v| v.norm()).fold(0.0, f64::max))
            }
            ConvexBody::Cone { generators } => {
                if generators.iter().all(|g| g.norm() == 0.0) {
                    Some(0.0)
                } else {
                    None
                }
            }
            ConvexBody::Translate { base, shift } => {
                base.bounding_radius().map(|r| r + shift.norm())
            }
            ConvexBody::Intersection { parts } => parts
                .iter()
                .filter_map(|p| p.bounding_radius())
                .fold(None, |acc, r| Some(acc.map_or(r, |a: f64| a.min(r)))),
            ConvexBody::HPolytope { .. } => {
                let dim = self.dim();
                let mut r2 = 0.0;
                for i in 0..dim {
                    let mut e = Vector::zeros(dim);
                    e[i] = 1.0;
                    let hi = self.support(&e).ok()?;
                    e[i] = -1.0;
                    let lo = self.support(&e).ok()?;
                    if !hi.is_finite() || !lo.is_finite() {
                        return None;
                    }
                    r2 += hi.abs().max(lo.abs()).powi(2);
                }
                Some(r2.sqrt())
            }
        }
    }

    /// Unit generators of the proximal normal cone at `x`; empty in the
    /// interior. `exact` marks analytically generated cones.
    pub fn normal_rays(&self, x: &Vector, budget: usize) -> Result<NormalRays, GeomError> {
        self.check_dim(x)?;
        Ok(match self {
            ConvexBody::Ball { center, radius } => {
                if *radius == 0.0 {
                    // Normal cone of a point is all of R^n; sampled frame.
                    NormalRays {
                        rays: numerics::unit_directions(x.len(), budget),
                        exact: false,
                    }
                } else {
                    let d = x - center;
                    let n = d.norm();
                    if (n - radius).abs() <= 1e-7 * radius.max(1.0) {
                        NormalRays {
                            rays: vec![&d / n],
                            exact: true,
                        }
                    } else {
                        NormalRays::empty(true)
                    }
                }
            }
            ConvexBody::HPolytope { normals, offsets } => {
                let scale = 1.0 + x.norm();
                let mut rays = Vec::new();
                for (n, b) in normals.iter().zip(offsets) {
                    if (n.dot(x) - b).abs() <= 1e-7 * scale * n.norm() {
                        push_dedup(&mut rays, n / n.norm(), budget);
                    }
                }
                NormalRays { rays, exact: true }
            }
            ConvexBody::Translate { base, shift } => base.normal_rays(&(x - shift), budget)?,
            ConvexBody::Intersection { parts } => {
                // Generator union = generators of the Minkowski cone sum.
                let mut rays = Vec::new();
                let mut exact = true;
                for p in parts {
                    let nr = p.normal_rays(x, budget)?;
                    exact &= nr.exact;
                    for r in nr.rays {
                        push_dedup(&mut rays, r, budget);
                    }
                }
                NormalRays { rays, exact }
            }
            ConvexBody::VPolytope { .. } | ConvexBody::Cone { .. } => NormalRays {
                rays: self.probe_normal_rays(x, budget)?,
                exact: false,
            },
        })
    }

    /// Projection-probe fallback: a unit `d` is kept when `x + εd` projects
    /// back onto `x`, the defining property of proximal normals.
    fn probe_normal_rays(&self, x: &Vector, budget: usize) -> Result<Vec<Vector>, GeomError> {
        let eps = 1e-4 * (1.0 + x.norm());
        let mut rays = Vec::new();
        for d in numerics::unit_directions(x.len(), 6 * budget.max(4)) {
            let probe = x + &d * eps;
            let back = self.project(&probe)?;
            if (back - x).norm() <= 1e-4 * eps {
                push_dedup(&mut rays, d, budget);
                if rays.len() >= budget {
                    break;
                }
            }
        }
        Ok(rays)
    }
}

fn push_dedup(rays: &mut Vec<Vector>, candidate: Vector, budget: usize) {
    if rays.len() >= budget {
        return;
    }
    if rays.iter().all(|r| r.dot(&candidate) < 1.0 - 1e-10) {
        rays.push(candidate);
    }
}

/// Concatenates two coordinate vectors.
pub fn stack(head: &Vector, tail: &Vector) -> Vector {
    let mut out = Vector::zeros(head.len() + tail.len());
    out.rows_mut(0, head.len()).copy_from(head);
    out.rows_mut(head.len(), tail.len()).copy_from(tail);
    out
}

/// H-polytope pinning the last `tail.len()` coordinates of R^{n+m} to `tail`.
fn tail_equality_polytope(head_dim: usize, tail: &Vector) -> ConvexBody {
    let m = tail.len();
    let mut normals = Vec::with_capacity(2 * m);
    let mut offsets = Vec::with_capacity(2 * m);
    for j in 0..m {
        let mut e = Vector::zeros(head_dim + m);
        e[head_dim + j] = 1.0;
        normals.push(e.clone());
        offsets.push(tail[j]);
        e[head_dim + j] = -1.0;
        normals.push(e);
        offsets.push(-tail[j]);
    }
    ConvexBody::HPolytope { normals, offsets }
}

/// Embeds `body × {tail}` into R^{n+m}. Point sets, polytopes, cones and
/// half-space systems embed exactly; balls of positive radius become an
/// intersection with the tail-pinning equalities.
pub fn embed_with_tail(body: &ConvexBody, tail: &Vector) -> ConvexBody {
    let zeros_tail = Vector::zeros(tail.len());
    match body {
        ConvexBody::Ball { center, radius } if *radius == 0.0 => {
            ConvexBody::singleton(stack(center, tail))
        }
        ConvexBody::VPolytope { vertices } => ConvexBody::VPolytope {
            vertices: vertices.iter().map(|v| stack(v, tail)).collect(),
        },
        ConvexBody::Cone { generators } => ConvexBody::Translate {
            base: Box::new(ConvexBody::Cone {
                generators: generators.iter().map(|g| stack(g, &zeros_tail)).collect(),
            }),
            shift: stack(&Vector::zeros(body.dim()), tail),
        },
        ConvexBody::Translate { base, shift } => ConvexBody::Translate {
            base: Box::new(embed_with_tail(base, &zeros_tail)),
            shift: stack(shift, tail),
        },
        ConvexBody::HPolytope { normals, offsets } => ConvexBody::Intersection {
            parts: vec![
                ConvexBody::HPolytope {
                    normals: normals.iter().map(|n| stack(n, &zeros_tail)).collect(),
                    offsets: offsets.clone(),
                },
                tail_equality_polytope(body.dim(), tail),
            ],
        },
        ConvexBody::Ball { center, radius } => ConvexBody::Intersection {
            parts: vec![
                ConvexBody::Ball {
                    center: stack(center, tail),
                    radius: *radius,
                },
                tail_equality_polytope(center.len(), tail),
            ],
        },
        ConvexBody::Intersection { parts } => ConvexBody::Intersection {
            parts: parts.iter().map(|p| embed_with_tail(p, tail)).collect(),
        },
    }
}

/// Lexicographic order on coordinate vectors; total for finite entries.
pub fn lex_cmp(a: &Vector, b: &Vector) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.partial_cmp(y).expect("finite coordinates") {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// Finite union of convex bodies; the invariant-set candidate type.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedSet {
    pieces: Vec<ConvexBody>,
}

impl ClosedSet {
    pub fn new(pieces: Vec<ConvexBody>) -> Result<Self, GeomError> {
        if pieces.is_empty() {
            return Err(GeomError::Invalid(
                "closed set needs at least one piece".into(),
            ));
        }
        let d = pieces[0].dim();
        for p in &pieces {
            p.validate()?;
            if p.dim() != d {
                return Err(GeomError::DimensionMismatch {
                    expected: d,
                    got: p.dim(),
                });
            }
        }
        Ok(ClosedSet { pieces })
    }

    pub fn from_body(body: ConvexBody) -> Result<Self, GeomError> {
        Self::new(vec![body])
    }

    pub fn pieces(&self) -> &[ConvexBody] {
        &self.pieces
    }

    pub fn dim(&self) -> usize {
        self.pieces[0].dim()
    }

    /// Worst projection tolerance across pieces.
    pub fn tolerance(&self) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.tolerance())
            .fold(TAU_GEO, f64::max)
    }

    pub fn distance(&self, x: &Vector) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.distance(x).expect("validated piece"))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        self.distance(x) <= tol
    }

    /// All per-piece projections achieving the minimum distance (within the
    /// set tolerance), deduplicated and sorted lexicographically.
    pub fn project_set(&self, x: &Vector) -> Vec<Vector> {
        let proj: Vec<(Vector, f64)> = self
            .pieces
            .iter()
            .map(|p| {
                let z = p.project(x).expect("validated piece");
                let d = (x - &z).norm();
                (z, d)
            })
            .collect();
        let dmin = proj.iter().map(|(_, d)| *d).fold(f64::INFINITY, f64::min);
        let tie = 2.0 * self.tolerance();
        let mut winners: Vec<Vector> = Vec::new();
        for (z, d) in proj {
            if d <= dmin + tie && winners.iter().all(|w| (w - &z).norm() > tie.max(1e-12)) {
                winners.push(z);
            }
        }
        winners.sort_by(lex_cmp);
        winners
    }

    /// Nearest point (first of `project_set`).
    pub fn project(&self, x: &Vector) -> Vector {
        self.project_set(x)
            .into_iter()
            .next()
            .expect("nonempty set")
    }

    /// Unit generators of the sampled proximal normal cone at `x`.
    pub fn proximal_normal_rays(&self, x: &Vector, budget: usize) -> Result<NormalRays, GeomError> {
        let d = self.distance(x);
        if d > self.tolerance().max(TAU_GEO) {
            return Err(GeomError::NotInSet { distance: d });
        }
        let mut rays = Vec::new();
        let mut exact = true;
        for p in &self.pieces {
            if p.distance(x).expect("validated piece") <= p.tolerance().max(TAU_GEO) {
                let nr = p.normal_rays(x, budget)?;
                exact &= nr.exact;
                for r in nr.rays {
                    push_dedup(&mut rays, r, budget);
                }
            }
        }
        Ok(NormalRays { rays, exact })
    }

    /// Bouligand tangent-cone membership of direction `v` at `x`.
    ///
    /// Convex pieces with exact normal rays use cone polarity; otherwise the
    /// liminf is approximated by `min_t d(x + t v)/t ≤ tol` over the grid.
    pub fn tangent_membership(
        &self,
        x: &Vector,
        v: &Vector,
        t_grid: &[f64],
        tol: f64,
    ) -> Result<bool, GeomError> {
        let d = self.distance(x);
        if d > self.tolerance().max(TAU_GEO) {
            return Err(GeomError::NotInSet { distance: d });
        }
        if v.norm() == 0.0 {
            return Ok(true);
        }
        for p in &self.pieces {
            if p.distance(x).expect("validated piece") <= p.tolerance().max(TAU_GEO) {
                let nr = p.normal_rays(x, budget_default())?;
                if nr.exact && nr.rays.iter().all(|xi| xi.dot(v) <= tol) {
                    return Ok(true);
                }
            }
        }
        let surrogate = t_grid
            .iter()
            .filter(|t| **t > 0.0)
            .map(|&t| self.distance(&(x + v * t)) / t)
            .fold(f64::INFINITY, f64::min);
        Ok(surrogate <= tol)
    }

    /// Radius of an origin-centered ball containing the set, when bounded.
    pub fn bounding_radius(&self) -> Option<f64> {
        let mut r: f64 = 0.0;
        for p in &self.pieces {
            r = r.max(p.bounding_radius()?);
        }
        Some(r)
    }
}

/// Default ray/sample budget used by checkers when none is configured.
pub fn budget_default() -> usize {
    16
}

/// Default t-grid of the tangent surrogate.
pub const TANGENT_T_GRID: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];
/// Default tolerance of the tangent surrogate.
pub const TANGENT_TOL: f64 = 1e-3;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vec_from;
    use proptest::prelude::*;

    fn ball(cx: f64, cy: f64, r: f64) -> ConvexBody {
        ConvexBody::Ball {
            center: vec_from(&[cx, cy]),
            radius: r,
        }
    }

    fn unit_box() -> ConvexBody {
        ConvexBody::box_body(&[-1.0, -1.0], &[1.0, 1.0])
    }

    #[test]
    fn support_examples() {
        let b = ball(0.0, 0.0, 1.0);
        assert!((b.support(&vec_from(&[3.0, 4.0])).unwrap() - 5.0).abs() < TAU_GEO);
        let bx = unit_box();
        assert!((bx.support(&vec_from(&[1.0, -2.0])).unwrap() - 3.0).abs() < 1e-6);
        let cone = ConvexBody::Cone {
            generators: vec![vec_from(&[1.0, 0.0])],
        };
        assert_eq!(cone.support(&vec_from(&[1.0, 0.0])).unwrap(), f64::INFINITY);
        assert_eq!(cone.support(&vec_from(&[0.0, 1.0])).unwrap(), 0.0);
    }

    #[test]
    fn support_dimension_mismatch_rejected() {
        let b = ball(0.0, 0.0, 1.0);
        assert!(matches!(
            b.support(&vec_from(&[1.0])),
            Err(GeomError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn project_examples() {
        let b = ball(0.0, 0.0, 1.0);
        let p = b.project(&vec_from(&[3.0, 4.0])).unwrap();
        assert!((p - vec_from(&[0.6, 0.8])).norm() < TAU_GEO);
        let bx = unit_box();
        let p2 = bx.project(&vec_from(&[2.0, 0.5])).unwrap();
        assert!((p2 - vec_from(&[1.0, 0.5])).norm() < 1e-9);
        let cone = ConvexBody::Cone {
            generators: vec![vec_from(&[1.0, 0.0])],
        };
        let p3 = cone.project(&vec_from(&[-1.0, 1.0])).unwrap();
        assert!(p3.norm() < 1e-9);
    }

    #[test]
    fn distance_examples() {
        let s = ClosedSet::from_body(ball(0.0, 0.0, 1.0)).unwrap();
        assert!((s.distance(&vec_from(&[2.0, 0.0])) - 1.0).abs() < TAU_GEO);
        assert!(s.distance(&vec_from(&[0.5, 0.0])).abs() < TAU_GEO);
        let two = ClosedSet::new(vec![ball(-2.0, 0.0, 1.0), ball(2.0, 0.0, 1.0)]).unwrap();
        assert!((two.distance(&vec_from(&[0.0, 0.0])) - 1.0).abs() < TAU_GEO);
    }

    #[test]
    fn project_set_examples() {
        let two = ClosedSet::new(vec![ball(-2.0, 0.0, 1.0), ball(2.0, 0.0, 1.0)]).unwrap();
        let ps = two.project_set(&vec_from(&[0.0, 0.0]));
        assert_eq!(ps.len(), 2);
        assert!((ps[0].clone() - vec_from(&[-1.0, 0.0])).norm() < TAU_GEO);
        assert!((ps[1].clone() - vec_from(&[1.0, 0.0])).norm() < TAU_GEO);
        let s = ClosedSet::from_body(ball(0.0, 0.0, 1.0)).unwrap();
        let ps2 = s.project_set(&vec_from(&[2.0, 0.0]));
        assert_eq!(ps2.len(), 1);
        assert!((ps2[0].clone() - vec_from(&[1.0, 0.0])).norm() < TAU_GEO);
        let bx = ClosedSet::from_body(unit_box()).unwrap();
        let inside = vec_from(&[0.3, -0.4]);
        let ps3 = bx.project_set(&inside);
        assert_eq!(ps3.len(), 1);
        assert!((ps3[0].clone() - inside).norm() < TAU_GEO);
    }

    #[test]
    fn normal_ray_examples() {
        let bx = ClosedSet::from_body(unit_box()).unwrap();
        let nr = bx.proximal_normal_rays(&vec_from(&[1.0, 1.0]), 8).unwrap();
        assert!(nr.exact);
        assert_eq!(nr.rays.len(), 2);
        let sphere = ClosedSet::from_body(ball(0.0, 0.0, 1.0)).unwrap();
        let nr2 = sphere
            .proximal_normal_rays(&vec_from(&[1.0, 0.0]), 8)
            .unwrap();
        assert_eq!(nr2.rays.len(), 1);
        assert!((nr2.rays[0].clone() - vec_from(&[1.0, 0.0])).norm() < TAU_GEO);
        let nr3 = sphere
            .proximal_normal_rays(&vec_from(&[0.0, 0.0]), 8)
            .unwrap();
        assert!(nr3.rays.is_empty());
        assert!(sphere
            .proximal_normal_rays(&vec_from(&[3.0, 0.0]), 8)
            .is_err());
    }

    #[test]
    fn tangent_examples() {
        let s = ClosedSet::from_body(ball(0.0, 0.0, 1.0)).unwrap();
        let x = vec_from(&[1.0, 0.0]);
        assert!(s
            .tangent_membership(&x, &vec_from(&[0.0, 1.0]), &TANGENT_T_GRID, TANGENT_TOL)
            .unwrap());
        assert!(!s
            .tangent_membership(&x, &vec_from(&[1.0, 0.0]), &TANGENT_T_GRID, TANGENT_TOL)
            .unwrap());
        assert!(s
            .tangent_membership(&x, &vec_from(&[-1.0, 0.0]), &TANGENT_T_GRID, TANGENT_TOL)
            .unwrap());
    }

    #[test]
    fn min_norm_examples() {
        let b = ball(3.0, 0.0, 1.0);
        assert!((b.min_norm_point().unwrap() - vec_from(&[2.0, 0.0])).norm() < TAU_GEO);
        let cone = ConvexBody::Cone {
            generators: vec![vec_from(&[1.0, 0.0])],
        };
        assert!(cone.min_norm_point().unwrap().norm() < TAU_GEO);
        // Brute-force oracle over a fine discretization of the segment.
        let seg = ConvexBody::VPolytope {
            vertices: vec![vec_from(&[1.0, 1.0]), vec_from(&[2.0, 1.0])],
        };
        let mut best = vec_from(&[1.0, 1.0]);
        let mut best_n = best.norm();
        for i in 0..=100_000 {
            let t = i as f64 / 100_000.0;
            let p = vec_from(&[1.0 + t, 1.0]);
            if p.norm() < best_n {
                best_n = p.norm();
                best = p;
            }
        }
        assert!((seg.min_norm_point().unwrap() - best).norm() < 1e-6);
    }

    #[test]
    fn translate_and_intersection() {
        let lens = ConvexBody::Intersection {
            parts: vec![ball(0.0, 0.0, 1.0), ball(1.0, 0.0, 1.0)],
        };
        lens.validate().unwrap();
        let p = lens.project(&vec_from(&[0.5, 3.0])).unwrap();
        // Lens top point is (0.5, √3/2).
        assert!((p - vec_from(&[0.5, 0.75f64.sqrt()])).norm() < 1e-5);
        let shifted = ConvexBody::Translate {
            base: Box::new(ball(0.0, 0.0, 1.0)),
            shift: vec_from(&[5.0, 0.0]),
        };
        let q = shifted.project(&vec_from(&[7.0, 0.0])).unwrap();
        assert!((q - vec_from(&[6.0, 0.0])).norm() < TAU_GEO);
    }

    #[test]
    fn infeasible_intersection_detected() {
        let empty = ConvexBody::Intersection {
            parts: vec![ball(0.0, 0.0, 1.0), ball(5.0, 0.0, 1.0)],
        };
        assert!(matches!(empty.validate(), Err(GeomError::Infeasible(_))));
    }

    #[test]
    fn projection_characterization_sampled() {
        // ⟨x − Πx, s − Πx⟩ ≤ τ for sampled s in the body.
        let bodies = vec![ball(0.5, -0.25, 1.5), unit_box()];
        for body in bodies {
            let x = vec_from(&[2.0, 1.7]);
            let px = body.project(&x).unwrap();
            for i in 0..200 {
                let h = numerics::halton_point(i, 2);
                let cand = vec_from(&[h[0] * 4.0 - 2.0, h[1] * 4.0 - 2.0]);
                let s = body.project(&cand).unwrap();
                assert!(
                    (&x - &px).dot(&(&s - &px)) <= 1e-7,
                    "characterization failed"
                );
            }
        }
    }

    #[test]
    fn support_projection_duality() {
        // Projecting a far point along ξ lands on the supporting face.
        let bodies = vec![ball(0.5, -0.25, 1.5), unit_box()];
        for body in bodies {
            for dir in numerics::unit_directions(2, 12) {
                let far = &dir * 1e7;
                let face_pt = body.project(&far).unwrap();
                let sup = body.support(&dir).unwrap();
                assert!((dir.dot(&face_pt) - sup).abs() < 1e-5, "duality gap");
            }
        }
    }

    #[test]
    fn distance_gradient_matches_projection_direction() {
        let set = ClosedSet::from_body(ball(0.0, 0.0, 1.0)).unwrap();
        let x = vec_from(&[1.7, 0.9]);
        let d = set.distance(&x);
        let grad_expected = (&x - &set.project(&x)) / d;
        let h = 3e-5;
        for i in 0..2 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let fd = (set.distance(&xp) - set.distance(&xm)) / (2.0 * h);
            assert!(
                (fd - grad_expected[i]).abs() <= 10.0 * TAU_GEO + 1e-9,
                "fd mismatch"
            );
        }
    }

    #[test]
    fn tangent_normal_polarity() {
        let set = ClosedSet::from_body(unit_box()).unwrap();
        let x = vec_from(&[1.0, 0.3]);
        let rays = set.proximal_normal_rays(&x, 8).unwrap();
        for k in 0..40 {
            let ang = k as f64 * std::f64::consts::PI / 20.0;
            let v = vec_from(&[ang.cos(), ang.sin()]);
            let polar_ok = rays.rays.iter().all(|xi| xi.dot(&v) <= TANGENT_TOL);
            let member = set
                .tangent_membership(&x, &v, &TANGENT_T_GRID, TANGENT_TOL)
                .unwrap();
            assert_eq!(polar_ok, member, "polarity mismatch at angle {ang}");
        }
    }

    proptest! {
        #[test]
        fn distance_is_one_lipschitz(
            ax in -3.0f64..3.0, ay in -3.0f64..3.0,
            bx in -3.0f64..3.0, by in -3.0f64..3.0,
        ) {
            let set = ClosedSet::new(vec![ball(-2.0, 0.0, 1.0), ball(2.0, 0.0, 0.5)]).unwrap();
            let a = vec_from(&[ax, ay]);
            let b = vec_from(&[bx, by]);
            let lhs = (set.distance(&a) - set.distance(&b)).abs();
            prop_assert!(lhs <= (&a - &b).norm() + 1e-9);
        }
    }
}
