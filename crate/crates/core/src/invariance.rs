//! Strong and weak invariance certification.
//!
//! The strong criteria quantify, at sampled boundary points x of the
//! candidate set with unit normals ξ and velocities v ∈ F(x),
//!
//! * tangent inclusion of the projected velocity `v − Π_{A(x)}(v)`,
//! * the projected pairing `⟨ξ, v − Π_{A(x)}(v)⟩`,
//! * the infimal pairing `σ_{F(x)}(ξ) − σ_{A(x)}(ξ)`, and
//! * its truncation to `A(x) ∩ B_{‖F(x)‖+‖A°(x)‖}`;
//!
//! the weak criteria replace the sup over F by an inf and truncate by the
//! local minimal-section bound. Certificates are sampled: the verdict
//! covers the evaluated points and the report carries the sampling regime
//! (exact polyhedral/smooth cones at 1e-7, probed cones at 1e-4).
//!
//! Falsification integrates the actual dynamics: trajectory bundles over
//! the extreme velocities for strong invariance, a distance-steered run as
//! weak-invariance evidence.

use crate::cusco::{CuscoError, CuscoMap};
use crate::geometry::{lex_cmp, sampling, ClosedSet, GeomError, NormalRays};
use crate::integrator::{integrate, IntegratorConfig, SimError, SteerObjective};
use crate::numerics::{self, TAU_GEO};
use crate::operators::{MonotoneOperator, OpError};
use crate::report::{clamp_margin, CertificateReport, HypothesisChecks, PointMargin, Verdict};
use crate::Vector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::report::Verdict as CertVerdict;

#[derive(Debug, Error)]
pub enum CertifyError {
    #[error("point not in the candidate set (distance {distance:.3e})")]
    NotInSet { distance: f64 },
    #[error("point not in dom A")]
    NotInDomain,
    #[error("local minimal-section bound too small: {0}")]
    BoundTooSmall(String),
    #[error(transparent)]
    Op(#[from] OpError),
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error(transparent)]
    Cusco(#[from] CuscoError),
    #[error(transparent)]
    Function(#[from] crate::functions::FnError),
}

/// Criterion selector; the tags mirror the strong/weak characterizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriterionVariant {
    TangentProjected,
    TangentIntersect,
    NormalProjected,
    NormalInf,
    NormalInfTruncated,
    WeakTangent,
    WeakNormal,
}

impl CriterionVariant {
    pub fn is_weak(&self) -> bool {
        matches!(
            self,
            CriterionVariant::WeakTangent | CriterionVariant::WeakNormal
        )
    }

    pub fn tag(&self) -> &'static str {
        match self {
            CriterionVariant::TangentProjected => "tangent-projected",
            CriterionVariant::TangentIntersect => "tangent-intersect",
            CriterionVariant::NormalProjected => "normal-projected",
            CriterionVariant::NormalInf => "normal-inf",
            CriterionVariant::NormalInfTruncated => "normal-inf-truncated",
            CriterionVariant::WeakTangent => "weak-tangent",
            CriterionVariant::WeakNormal => "weak-normal",
        }
    }

    pub fn parse(tag: &str) -> Option<Self> {
        Some(match tag {
            "tangent-projected" => CriterionVariant::TangentProjected,
            "tangent-intersect" => CriterionVariant::TangentIntersect,
            "normal-projected" => CriterionVariant::NormalProjected,
            "normal-inf" => CriterionVariant::NormalInf,
            "normal-inf-truncated" => CriterionVariant::NormalInfTruncated,
            "weak-tangent" => CriterionVariant::WeakTangent,
            "weak-normal" => CriterionVariant::WeakNormal,
            _ => return None,
        })
    }
}

/// Sampling and tolerance knobs for a certification run.
#[derive(Debug, Clone)]
pub struct CertifyOptions {
    pub scenario: String,
    pub samples: usize,
    pub seed: u64,
    pub budget: usize,
    /// Overrides the regime tolerance when set.
    pub tol: Option<f64>,
    /// Analytic bound on ‖A°‖ near S; estimated by sampling when absent.
    pub m_bound: Option<f64>,
    /// Restrict certification to B(x0, ρ) (the local criteria).
    pub local: Option<(Vector, f64)>,
}

impl CertifyOptions {
    pub fn new(scenario: impl Into<String>, samples: usize, seed: u64) -> Self {
        CertifyOptions {
            scenario: scenario.into(),
            samples,
            seed,
            budget: crate::geometry::budget_default(),
            tol: None,
            m_bound: None,
            local: None,
        }
    }
}

/// Tolerances of the two cone regimes.
pub const TOL_ANALYTIC: f64 = 1e-7;
pub const TOL_SAMPLED: f64 = 1e-4;

/// Margin of one point together with its worst witnesses.
#[derive(Debug, Clone)]
pub struct MarginDetail {
    pub margin: f64,
    pub worst_xi: Option<Vector>,
    pub worst_v: Option<Vector>,
    /// False when probed (non-analytic) normal cones entered the value.
    pub exact: bool,
}

impl MarginDetail {
    pub(crate) fn pass(exact: bool) -> Self {
        MarginDetail {
            margin: f64::NEG_INFINITY,
            worst_xi: None,
            worst_v: None,
            exact,
        }
    }
}

/// Unit directions sampling the cone spanned by the rays: the generators
/// themselves plus normalized Halton-weighted positive combinations.
pub fn sample_unit_normals(rays: &NormalRays, budget: usize) -> Vec<Vector> {
    let mut out = rays.rays.clone();
    let k = rays.rays.len();
    if k >= 2 {
        let mut i = 0;
        while out.len() < budget && i < 4 * budget {
            let w = numerics::halton_point(i, k);
            let mut combo = Vector::zeros(rays.rays[0].len());
            for (j, r) in rays.rays.iter().enumerate() {
                combo += r * (w[j] + 1e-3);
            }
            let n = combo.norm();
            if n > 1e-12 {
                let c = combo / n;
                if out.iter().all(|r| r.dot(&c) < 1.0 - 1e-10) {
                    out.push(c);
                }
            }
            i += 1;
        }
    }
    out
}

/// Checks the standing hypothesis: projections onto S of dom-A points stay
/// inside S ∩ dom A. Returns the verdict and any witness points.
pub fn check_condition_star(
    s: &ClosedSet,
    a: &MonotoneOperator,
    samples: usize,
    seed: u64,
) -> (bool, Vec<Vector>) {
    let mut probes: Vec<Vector> = Vec::new();
    match a.domain_body() {
        Some(body) => {
            probes.extend(body.boundary_samples(samples / 2, seed));
            let hint = body.center_hint();
            let reach = body.bounding_radius().unwrap_or(hint.norm() + 1.0);
            for p in sampling::halton_ball_points(&hint, reach, samples / 2) {
                if let Ok(q) = body.project(&p) {
                    probes.push(q);
                }
            }
        }
        None => {
            probes.extend(s.ambient_samples(samples, seed));
        }
    }
    let mut witnesses = Vec::new();
    for x in probes {
        if !a.domain_contains(&x) {
            continue;
        }
        for p in s.project_set(&x) {
            if !a.domain_contains(&p) || s.distance(&p) > s.tolerance() {
                witnesses.push(x.clone());
                break;
            }
        }
    }
    (witnesses.is_empty(), witnesses)
}

/// Tangent test shared by the tangent-flavored criteria: exact polar test
/// against the generators when they are analytic, distance surrogate
/// otherwise.
fn tangent_ok(
    s: &ClosedSet,
    x: &Vector,
    d: &Vector,
    rays: &NormalRays,
    tol: f64,
) -> Result<bool, CertifyError> {
    if rays.exact {
        // Same absolute threshold as the pairing criteria, so tangent and
        // normal variants cannot disagree on knife-edge margins.
        return Ok(rays.rays.iter().all(|xi| xi.dot(d) <= tol));
    }
    Ok(s.tangent_membership(
        x,
        d,
        &crate::geometry::TANGENT_T_GRID,
        crate::geometry::TANGENT_TOL,
    )?)
}

/// Strong-invariance margin of one point; the criterion holds at `x` iff
/// the margin is ≤ tol.
pub fn strong_margin(
    s: &ClosedSet,
    a: &MonotoneOperator,
    f: &CuscoMap,
    x: &Vector,
    variant: CriterionVariant,
    budget: usize,
) -> Result<MarginDetail, CertifyError> {
    let d = s.distance(x);
    if d > s.tolerance().max(TAU_GEO) {
        return Err(CertifyError::NotInSet { distance: d });
    }
    if !a.domain_contains(x) {
        return Err(CertifyError::NotInDomain);
    }
    let rays = s.proximal_normal_rays(x, budget)?;
    if rays.rays.is_empty() {
        return Ok(MarginDetail::pass(rays.exact));
    }
    let tol_here = if rays.exact {
        TOL_ANALYTIC
    } else {
        TOL_SAMPLED
    };
    let xis = sample_unit_normals(&rays, budget);
    let mut detail = MarginDetail::pass(rays.exact);
    let mut raise = |m: f64, xi: Option<&Vector>, v: Option<&Vector>| {
        if m > detail.margin {
            detail.margin = m;
            detail.worst_xi = xi.cloned();
            detail.worst_v = v.cloned();
        }
    };
    match variant {
        CriterionVariant::TangentProjected => {
            for v in f.extreme_points(x) {
                let dvec = &v - a.project_onto_value(x, &v)?;
                if !tangent_ok(s, x, &dvec, &rays, tol_here)? {
                    raise(1.0, None, Some(&v));
                }
            }
        }
        CriterionVariant::TangentIntersect => {
            for v in f.extreme_points(x) {
                let mut candidates = vec![a.project_onto_value(x, &v)?, a.min_section(x)?];
                candidates.push(a.project_onto_value(x, &(&v * 2.0))?);
                let mut ok = false;
                for xstar in &candidates {
                    if tangent_ok(s, x, &(&v - xstar), &rays, tol_here)? {
                        ok = true;
                        break;
                    }
                }
                if !ok {
                    raise(1.0, None, Some(&v));
                }
            }
        }
        CriterionVariant::NormalProjected => {
            for xi in &xis {
                for v in f.extreme_points(x) {
                    let m = xi.dot(&(&v - a.project_onto_value(x, &v)?));
                    raise(m, Some(xi), Some(&v));
                }
            }
        }
        CriterionVariant::NormalInf => {
            for xi in &xis {
                let sup_f = f.support(x, xi)?;
                let sup_a = a.value_support(x, xi)?;
                let m = if sup_a.is_infinite() {
                    f64::NEG_INFINITY
                } else {
                    sup_f - sup_a
                };
                raise(m, Some(xi), best_velocity(f, x, xi).as_ref());
            }
        }
        CriterionVariant::NormalInfTruncated => {
            let rho = f.norm_bound(x) + a.min_section(x)?.norm();
            for xi in &xis {
                let sup_f = f.support(x, xi)?;
                let sup_a = a.truncated_value_support(x, xi, rho)?;
                let m = if sup_a.is_infinite() {
                    f64::NEG_INFINITY
                } else {
                    sup_f - sup_a
                };
                raise(m, Some(xi), best_velocity(f, x, xi).as_ref());
            }
        }
        CriterionVariant::WeakTangent | CriterionVariant::WeakNormal => {
            return Err(CertifyError::BoundTooSmall(
                "weak variants require weak_margin with a minimal-section bound".into(),
            ));
        }
    }
    Ok(detail)
}

/// Extreme velocity maximizing ⟨ξ, v⟩; reporting aid.
fn best_velocity(f: &CuscoMap, x: &Vector, xi: &Vector) -> Option<Vector> {
    f.extreme_points(x)
        .into_iter()
        .map(|v| (xi.dot(&v), v))
        .max_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"))
        .map(|(_, v)| v)
}

/// Weak-invariance margin: `−σ_{F(x)}(−ξ) − σ_{A(x) ∩ B_{m+‖F(x)‖}}(ξ)`
/// maximized over sampled unit normals (the inner infima are resolved by
/// support calculus).
pub fn weak_margin(
    s: &ClosedSet,
    a: &MonotoneOperator,
    f: &CuscoMap,
    x: &Vector,
    m_x: f64,
    budget: usize,
) -> Result<MarginDetail, CertifyError> {
    let d = s.distance(x);
    if d > s.tolerance().max(TAU_GEO) {
        return Err(CertifyError::NotInSet { distance: d });
    }
    if !a.domain_contains(x) {
        return Err(CertifyError::NotInDomain);
    }
    let rays = s.proximal_normal_rays(x, budget)?;
    if rays.rays.is_empty() {
        return Ok(MarginDetail::pass(rays.exact));
    }
    let rho = m_x + f.norm_bound(x);
    let mut detail = MarginDetail::pass(rays.exact);
    for xi in sample_unit_normals(&rays, budget) {
        let inf_f = -f.support(x, &(-&xi))?;
        let sup_a = match a.truncated_value_support(x, &xi, rho) {
            Ok(v) => v,
            Err(OpError::TruncationEmpty { rho }) => {
                return Err(CertifyError::BoundTooSmall(format!(
                    "truncation radius {rho:.6} misses A(x)"
                )))
            }
            Err(e) => return Err(e.into()),
        };
        let m = if sup_a.is_infinite() {
            f64::NEG_INFINITY
        } else {
            inf_f - sup_a
        };
        if m > detail.margin {
            detail.margin = m;
            detail.worst_xi = Some(xi.clone());
            detail.worst_v = worst_velocity_weak(f, x, &xi);
        }
    }
    Ok(detail)
}

/// Extreme velocity minimizing ⟨ξ, v⟩; the weak criterion's witness.
fn worst_velocity_weak(f: &CuscoMap, x: &Vector, xi: &Vector) -> Option<Vector> {
    f.extreme_points(x)
        .into_iter()
        .map(|v| (xi.dot(&v), v))
        .min_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"))
        .map(|(_, v)| v)
}

/// Existential weak tangent check at one point: some extreme velocity and
/// truncated-value candidate lands in the tangent cone.
fn weak_tangent_margin(
    s: &ClosedSet,
    a: &MonotoneOperator,
    f: &CuscoMap,
    x: &Vector,
    m_x: f64,
    budget: usize,
) -> Result<MarginDetail, CertifyError> {
    let rays = s.proximal_normal_rays(x, budget)?;
    if rays.rays.is_empty() {
        return Ok(MarginDetail::pass(rays.exact));
    }
    let tol_here = if rays.exact {
        TOL_ANALYTIC
    } else {
        TOL_SAMPLED
    };
    let rho = m_x + f.norm_bound(x);
    let value = a.evaluate(x)?;
    let body = value.body()?;
    for v in f.extreme_points(x) {
        let mut candidates = vec![a.min_section(x)?];
        let proj = body.project(&v)?;
        if proj.norm() <= rho + 1e-9 {
            candidates.push(proj);
        }
        for xstar in &candidates {
            if tangent_ok(s, x, &(&v - xstar), &rays, tol_here)? {
                return Ok(MarginDetail {
                    margin: 0.0,
                    worst_xi: None,
                    worst_v: Some(v),
                    exact: rays.exact,
                });
            }
        }
    }
    Ok(MarginDetail {
        margin: 1.0,
        worst_xi: None,
        worst_v: None,
        exact: rays.exact,
    })
}

/// Weak-invariance survival horizon `T = (r/3)/(m + sup‖F‖)`; +∞ for a
/// stationary configuration.
pub fn weak_horizon(r: f64, m: f64, sup_f: f64) -> f64 {
    assert!(r > 0.0, "radius must be positive");
    let denom = m + sup_f;
    if denom == 0.0 {
        f64::INFINITY
    } else {
        (r / 3.0) / denom
    }
}

/// Certification points: boundary samples of every piece intersected with
/// dom A, plus dom-A boundary samples inside S.
fn certification_points(s: &ClosedSet, a: &MonotoneOperator, opts: &CertifyOptions) -> Vec<Vector> {
    let mut pts: Vec<Vector> = s
        .boundary_samples(opts.samples, opts.seed)
        .into_iter()
        .filter(|p| a.domain_contains(p))
        .collect();
    if let Some(body) = a.domain_body() {
        for p in body.boundary_samples(opts.samples / 2, opts.seed.wrapping_add(101)) {
            if s.contains(&p, s.tolerance()) && pts.iter().all(|q| (q - &p).norm() > 1e-10) {
                pts.push(p);
            }
        }
    }
    if let Some((center, radius)) = &opts.local {
        pts.retain(|p| (p - center).norm() <= *radius);
    }
    pts.sort_by(lex_cmp);
    pts.truncate(opts.samples);
    pts
}

fn finish_report(
    opts: &CertifyOptions,
    variant: CriterionVariant,
    tol: f64,
    pts: Vec<Vector>,
    details: Vec<MarginDetail>,
    hypothesis_checks: HypothesisChecks,
    mut flags: Vec<String>,
) -> CertificateReport {
    let all_exact = details.iter().all(|d| d.exact);
    let tol = opts
        .tol
        .unwrap_or(if all_exact { tol } else { TOL_SAMPLED });
    if !all_exact {
        flags.push("sampled normal cones: certificate is sampling-sound only".into());
    }
    if details.iter().all(|d| d.margin == f64::NEG_INFINITY) && !details.is_empty() {
        flags.push("no active normals at any sampled point".into());
    }
    let points: Vec<PointMargin> = pts
        .iter()
        .zip(&details)
        .map(|(x, d)| PointMargin {
            x: x.iter().copied().collect(),
            margin: clamp_margin(d.margin),
            worst_xi: d.worst_xi.as_ref().map(|v| v.iter().copied().collect()),
            worst_v: d.worst_v.as_ref().map(|v| v.iter().copied().collect()),
        })
        .collect();
    let verdict = if details.iter().all(|d| d.margin <= tol) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    CertificateReport {
        scenario: opts.scenario.clone(),
        variant: variant.tag().into(),
        tol,
        points,
        verdict,
        hypothesis_checks,
        seed: opts.seed,
        flags,
        a: None,
        v_x0: None,
        worst_violation_t: None,
        local_horizon: None,
    }
}

fn inconclusive_report(
    opts: &CertifyOptions,
    variant: CriterionVariant,
    hypothesis_checks: HypothesisChecks,
    reason: String,
) -> CertificateReport {
    CertificateReport {
        scenario: opts.scenario.clone(),
        variant: variant.tag().into(),
        tol: opts.tol.unwrap_or(TOL_ANALYTIC),
        points: Vec::new(),
        verdict: Verdict::Inconclusive,
        hypothesis_checks,
        seed: opts.seed,
        flags: vec![reason],
        a: None,
        v_x0: None,
        worst_violation_t: None,
        local_horizon: None,
    }
}

/// Samples boundary-biased points of S ∩ dom A and aggregates the strong
/// margins of the chosen criterion; inconclusive when the standing
/// hypothesis fails.
pub fn certify_strong(
    s: &ClosedSet,
    a: &MonotoneOperator,
    f: &CuscoMap,
    variant: CriterionVariant,
    opts: &CertifyOptions,
) -> Result<CertificateReport, CertifyError> {
    if variant.is_weak() {
        return certify_weak(s, a, f, variant, opts);
    }
    let (star, _witnesses) = check_condition_star(s, a, opts.samples.max(64), opts.seed);
    let mut checks = HypothesisChecks {
        condition_star: Some(star),
        ..Default::default()
    };
    if !star {
        return Ok(inconclusive_report(
            opts,
            variant,
            checks,
            "condition (*) failed: some projection leaves S ∩ dom A".into(),
        ));
    }
    let pts = certification_points(s, a, opts);
    if pts.is_empty() {
        return Ok(inconclusive_report(
            opts,
            variant,
            checks,
            "no sample lies in S ∩ dom A".into(),
        ));
    }
    let details: Vec<MarginDetail> = numerics::parallel_map(&pts, |x| {
        strong_margin(s, a, f, x, variant, opts.budget).unwrap_or(MarginDetail {
            margin: f64::INFINITY,
            worst_xi: None,
            worst_v: None,
            exact: false,
        })
    });
    checks.m_bound_estimated = false;
    Ok(finish_report(
        opts,
        variant,
        TOL_ANALYTIC,
        pts,
        details,
        checks,
        Vec::new(),
    ))
}

/// Weak-invariance certification; requires S ⊂ dom A (sampled) and a
/// minimal-section bound (supplied or estimated).
pub fn certify_weak(
    s: &ClosedSet,
    a: &MonotoneOperator,
    f: &CuscoMap,
    variant: CriterionVariant,
    opts: &CertifyOptions,
) -> Result<CertificateReport, CertifyError> {
    // S ⊂ dom A, sampled over boundary and interior probes.
    let mut inside = true;
    for p in s.boundary_samples(opts.samples, opts.seed) {
        if !a.domain_contains(&p) {
            inside = false;
            break;
        }
    }
    let mut checks = HypothesisChecks {
        subset_domain: Some(inside),
        ..Default::default()
    };
    if !inside {
        return Ok(inconclusive_report(
            opts,
            variant,
            checks,
            "S is not contained in dom A (sampled violation)".into(),
        ));
    }
    let pts = certification_points(s, a, opts);
    if pts.is_empty() {
        return Ok(inconclusive_report(
            opts,
            variant,
            checks,
            "no sample lies in S ∩ dom A".into(),
        ));
    }
    let estimated = opts.m_bound.is_none();
    let mut m_global: f64 = opts.m_bound.unwrap_or(0.0);
    if estimated {
        for p in &pts {
            m_global = m_global.max(a.local_min_section_bound(s, p, 0.05, 256)?);
        }
    }
    checks.m_bound = Some(m_global);
    checks.m_bound_estimated = estimated;
    let details: Vec<MarginDetail> = numerics::parallel_map(&pts, |x| {
        let res = match variant {
            CriterionVariant::WeakTangent => weak_tangent_margin(s, a, f, x, m_global, opts.budget),
            _ => weak_margin(s, a, f, x, m_global, opts.budget),
        };
        res.unwrap_or(MarginDetail {
            margin: f64::INFINITY,
            worst_xi: None,
            worst_v: None,
            exact: false,
        })
    });
    let mut flags = Vec::new();
    if estimated {
        flags.push("minimal-section bound estimated by sampling".into());
    }
    Ok(finish_report(
        opts,
        variant,
        TOL_ANALYTIC,
        pts,
        details,
        checks,
        flags,
    ))
}

/// Outcome of one falsification run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunOutcome {
    pub v0: Vec<f64>,
    pub max_distance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exit_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Simulation evidence: strong falsification by a trajectory bundle, weak
/// support by a distance-steered run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FalsifyEvidence {
    pub kappa_h: f64,
    pub strong_falsified: bool,
    pub weak_supported: bool,
    pub runs: Vec<RunOutcome>,
    pub steered_max_distance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weak_horizon: Option<f64>,
}

/// Exit threshold multiplier: a trajectory leaving S by more than κ·h
/// falsifies strong invariance at step size h.
pub const FALSIFY_KAPPA: f64 = 10.0;

/// Runs one FixedSelection trajectory per extreme velocity of F(x0) plus a
/// distance-steered run.
pub fn falsify_by_simulation(
    s: &ClosedSet,
    a: &MonotoneOperator,
    f: &CuscoMap,
    x0: &Vector,
    h: f64,
    horizon: f64,
) -> FalsifyEvidence {
    let kappa_h = FALSIFY_KAPPA * h;
    let mut runs = Vec::new();
    let mut strong_falsified = false;
    for v0 in f.extreme_points(x0) {
        let cfg = IntegratorConfig::fixed(h, horizon, x0.clone(), v0.clone());
        let outcome = match integrate(a, f, &cfg, x0) {
            Ok(traj) => {
                let max_distance = traj.max_distance_to(s);
                let exit_time = traj
                    .times
                    .iter()
                    .zip(&traj.states)
                    .find(|(_, x)| s.distance(x) > kappa_h)
                    .map(|(t, _)| *t);
                strong_falsified |= max_distance > kappa_h;
                RunOutcome {
                    v0: v0.iter().copied().collect(),
                    max_distance,
                    exit_time,
                    error: None,
                }
            }
            Err(SimError::Aborted {
                index,
                source,
                partial,
            }) => {
                let max_distance = partial.max_distance_to(s);
                strong_falsified |= max_distance > kappa_h;
                RunOutcome {
                    v0: v0.iter().copied().collect(),
                    max_distance,
                    exit_time: None,
                    error: Some(format!("aborted at step {index}: {source}")),
                }
            }
            Err(e) => RunOutcome {
                v0: v0.iter().copied().collect(),
                max_distance: f64::NAN,
                exit_time: None,
                error: Some(e.to_string()),
            },
        };
        runs.push(outcome);
    }
    let steered_cfg = IntegratorConfig::steered(h, horizon, SteerObjective::DistanceTo(s.clone()));
    let steered_max_distance = match integrate(a, f, &steered_cfg, x0) {
        Ok(traj) => traj.max_distance_to(s),
        Err(SimError::Aborted { partial, .. }) => partial.max_distance_to(s),
        Err(_) => f64::NAN,
    };
    let weak_supported = steered_max_distance <= kappa_h;
    // Survival horizon from the local bound, for scheduling and reporting.
    let weak_horizon = a
        .local_min_section_bound(s, x0, 0.05, 64)
        .ok()
        .map(|m| weak_horizon(0.05f64.max(h), m, f.norm_bound(x0)));
    FalsifyEvidence {
        kappa_h,
        strong_falsified,
        weak_supported,
        runs,
        steered_max_distance,
        weak_horizon,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canned;
    use crate::geometry::ConvexBody;
    use crate::{vec_from, Matrix};

    fn unit_ball_set() -> ClosedSet {
        ClosedSet::from_body(ConvexBody::Ball {
            center: vec_from(&[0.0, 0.0]),
            radius: 1.0,
        })
        .unwrap()
    }

    fn sweep_op() -> MonotoneOperator {
        MonotoneOperator::NormalConeOf {
            body: ConvexBody::Ball {
                center: vec_from(&[0.0, 0.0]),
                radius: 1.0,
            },
        }
    }

    fn zero_op() -> MonotoneOperator {
        MonotoneOperator::QuadraticGradient {
            q: Matrix::zeros(2, 2),
            b: Vector::zeros(2),
        }
    }

    #[test]
    fn condition_star_examples() {
        let s = unit_ball_set();
        let (ok, _) = check_condition_star(&s, &sweep_op(), 64, 1);
        assert!(ok, "S = dom A satisfies the standing hypothesis");
        let quad = MonotoneOperator::QuadraticGradient {
            q: Matrix::identity(2, 2),
            b: Vector::zeros(2),
        };
        let (ok2, _) = check_condition_star(&s, &quad, 64, 1);
        assert!(ok2, "full-domain operator always satisfies it");
        // Projections onto a distant shell exit a small domain ball.
        let shell = ClosedSet::from_body(ConvexBody::Ball {
            center: vec_from(&[2.0, 0.0]),
            radius: 1.0,
        })
        .unwrap();
        let small_dom = MonotoneOperator::NormalConeOf {
            body: ConvexBody::Ball {
                center: vec_from(&[0.0, 0.0]),
                radius: 0.5,
            },
        };
        let (ok3, witnesses) = check_condition_star(&shell, &small_dom, 64, 1);
        assert!(!ok3);
        assert!(!witnesses.is_empty());
    }

    #[test]
    fn strong_margin_examples() {
        // Sweeping on its own ball with inward drift: pass with margin −1.
        let s = unit_ball_set();
        let a = sweep_op();
        let f = CuscoMap::singleton(crate::cusco::AffineMap::identity_times(-1.0, 2));
        let x = vec_from(&[1.0, 0.0]);
        let d = strong_margin(&s, &a, &f, &x, CriterionVariant::NormalProjected, 8).unwrap();
        assert!((d.margin + 1.0).abs() < 1e-9, "margin {}", d.margin);
        // Boundary drift absorbed by the normal cone: margin −∞.
        let f2 = CuscoMap::constant_point(vec_from(&[1.0, 0.0]));
        let d2 = strong_margin(&s, &a, &f2, &x, CriterionVariant::NormalInf, 8).unwrap();
        assert_eq!(d2.margin, f64::NEG_INFINITY);
        // Constant drift exiting a ball with A ≡ {θ}: margin +1.
        let small = ClosedSet::from_body(ConvexBody::Ball {
            center: vec_from(&[0.0, 0.0]),
            radius: 0.5,
        })
        .unwrap();
        let d3 = strong_margin(
            &small,
            &zero_op(),
            &f2,
            &vec_from(&[0.5, 0.0]),
            CriterionVariant::NormalInf,
            8,
        )
        .unwrap();
        assert!((d3.margin - 1.0).abs() < 1e-9);
    }

    #[test]
    fn certify_strong_examples() {
        let opts = CertifyOptions::new("sweeping", 200, 7);
        let sys = canned::sweeping_ball_inward();
        let rep = certify_strong(
            &sys.set,
            &sys.operator,
            &sys.cusco,
            CriterionVariant::NormalInf,
            &opts,
        )
        .unwrap();
        assert!(rep.passed(), "flags: {:?}", rep.flags);
        let bad = canned::constant_drift_disc();
        let rep2 = certify_strong(
            &bad.set,
            &bad.operator,
            &bad.cusco,
            CriterionVariant::NormalInf,
            &opts,
        )
        .unwrap();
        assert_eq!(rep2.verdict, Verdict::Fail);
        assert!(!rep2.witnesses().is_empty());
        // A box far larger than dom A: every sample is interior, flagged.
        let huge =
            ClosedSet::from_body(ConvexBody::box_body(&[-50.0, -50.0], &[50.0, 50.0])).unwrap();
        let rep3 = certify_strong(
            &huge,
            &sweep_op(),
            &bad.cusco,
            CriterionVariant::NormalInf,
            &CertifyOptions::new("huge-box", 64, 7),
        )
        .unwrap();
        assert!(rep3.passed());
        assert!(
            rep3.flags.iter().any(|f| f.contains("no active normals")),
            "{:?}",
            rep3.flags
        );
    }

    #[test]
    fn weak_margin_examples() {
        // Rest point of a ball-valued field: weak pass, strong fail.
        let origin = ClosedSet::from_body(ConvexBody::singleton(Vector::zeros(2))).unwrap();
        let f = CuscoMap::constant_ball(Vector::zeros(2), 1.0);
        let a = zero_op();
        let x = Vector::zeros(2);
        let dw = weak_margin(&origin, &a, &f, &x, 0.0, 8).unwrap();
        assert!(dw.margin <= -1.0 + 1e-9, "weak margin {}", dw.margin);
        let ds = strong_margin(&origin, &a, &f, &x, CriterionVariant::NormalInf, 8).unwrap();
        assert!(ds.margin >= 1.0 - 1e-9, "strong margin {}", ds.margin);
        // Sweeping ball absorbs the whole unit ball of velocities weakly.
        let s = unit_ball_set();
        let dsw = weak_margin(&s, &sweep_op(), &f, &vec_from(&[1.0, 0.0]), 0.0, 8).unwrap();
        assert!(dsw.margin <= 1e-9, "margin {}", dsw.margin);
    }

    #[test]
    fn weak_horizon_values() {
        assert!((weak_horizon(3.0, 1.0, 2.0) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(weak_horizon(3.0, 0.0, 0.0), f64::INFINITY);
        assert!((weak_horizon(0.3, 0.0, 1.0) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn falsification_examples() {
        // Constant drift exits the disc at speed one.
        let bad = canned::constant_drift_disc();
        let ev = falsify_by_simulation(
            &bad.set,
            &bad.operator,
            &bad.cusco,
            &vec_from(&[0.0, 0.0]),
            1e-2,
            2.0,
        );
        assert!(ev.strong_falsified);
        let run = &ev.runs[0];
        // Exit time ≈ radius/speed, up to the κh threshold crossing.
        assert!(run.exit_time.unwrap() < 0.75, "{:?}", run.exit_time);
        // Sweeping system: no selection escapes.
        let good = canned::sweeping_ball_inward();
        let ev2 = falsify_by_simulation(
            &good.set,
            &good.operator,
            &good.cusco,
            &vec_from(&[1.0, 0.0]),
            1e-2,
            2.0,
        );
        assert!(!ev2.strong_falsified);
        assert!(ev2.weak_supported);
        // Rest-point system: steered stays, some fixed selection exits.
        let sep = canned::weak_only_rest_point();
        let ev3 = falsify_by_simulation(
            &sep.set,
            &sep.operator,
            &sep.cusco,
            &Vector::zeros(2),
            1e-2,
            2.0,
        );
        assert!(ev3.strong_falsified);
        assert!(ev3.weak_supported);
    }

    #[test]
    fn margin_monotonicity_truncated_dominates() {
        let sys = canned::sweeping_ball_inward();
        for x in sys.set.boundary_samples(32, 3) {
            if !sys.operator.domain_contains(&x) {
                continue;
            }
            let full = strong_margin(
                &sys.set,
                &sys.operator,
                &sys.cusco,
                &x,
                CriterionVariant::NormalInf,
                8,
            )
            .unwrap();
            let trunc = strong_margin(
                &sys.set,
                &sys.operator,
                &sys.cusco,
                &x,
                CriterionVariant::NormalInfTruncated,
                8,
            )
            .unwrap();
            assert!(
                trunc.margin >= full.margin - 1e-9,
                "truncated margin must dominate: {} vs {}",
                trunc.margin,
                full.margin
            );
            assert_eq!(trunc.margin <= TOL_ANALYTIC, full.margin <= TOL_ANALYTIC);
        }
    }

    #[test]
    fn strongly_certified_systems_pass_weak_margins() {
        for sys in canned::equivalence_suite()
            .into_iter()
            .filter(|s| s.strongly_invariant)
        {
            for x in sys.set.boundary_samples(32, 17) {
                if !sys.operator.domain_contains(&x) {
                    continue;
                }
                let m = sys
                    .operator
                    .local_min_section_bound(&sys.set, &x, 0.05, 64)
                    .unwrap_or(0.0);
                let d = weak_margin(&sys.set, &sys.operator, &sys.cusco, &x, m, 16).unwrap();
                assert!(
                    d.margin <= TOL_ANALYTIC,
                    "{}: weak margin {} at {x:?}",
                    sys.name,
                    d.margin
                );
            }
        }
    }

    #[test]
    fn distance_decay_along_valid_trajectories() {
        // d²(x_k) ≤ d²(x_0)·e^{2Lt} + O(h) starting slightly outside S.
        let s = ClosedSet::from_body(ConvexBody::Ball {
            center: vec_from(&[0.0, 0.0]),
            radius: 0.5,
        })
        .unwrap();
        let a = sweep_op();
        let f = CuscoMap::singleton(crate::cusco::AffineMap::identity_times(-1.0, 2));
        let x0 = vec_from(&[0.55, 0.0]);
        let cfg = IntegratorConfig::fixed(1e-3, 2.0, x0.clone(), vec_from(&[-0.55, 0.0]));
        let traj = integrate(&a, &f, &cfg, &x0).unwrap();
        let d0 = s.distance(&x0);
        let l = f.lipschitz();
        for (t, x) in traj.times.iter().zip(&traj.states) {
            let lhs = s.distance(x).powi(2);
            assert!(
                lhs <= d0 * d0 * (2.0 * l * t).exp() + 10.0 * traj.h,
                "decay violated at t={t}"
            );
        }
    }
}
