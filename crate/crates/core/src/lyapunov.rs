//! Strong a-Lyapunov pairs: subgradient and directional-derivative
//! criteria, trajectory-level validation of the decay inequality
//! `e^{at}V(x(t)) + ∫₀ᵗ W ≤ V(x₀)`, the Pasch-Hausdorff envelope and the
//! epigraph lift to R^{n+3}.
//!
//! The shipped function variants are convex (possibly plus an indicator),
//! so proximal and Fréchet subdifferentials coincide; reports record the
//! subgradient sampling regime the same way the invariance module records
//! its cone regime.

pub use crate::functions::{FnError, ScalarFn};

use crate::cusco::CuscoMap;
use crate::geometry::{lex_cmp, sampling, ClosedSet, ConvexBody};
use crate::integrator::Trajectory;
use crate::invariance::{CertifyError, CertifyOptions, MarginDetail, TOL_ANALYTIC, TOL_SAMPLED};
use crate::numerics::{self, bisect_horizon, TAU_GEO};
use crate::operators::{MonotoneOperator, OpError};
use crate::report::{clamp_margin, CertificateReport, HypothesisChecks, PointMargin, Verdict};
use crate::Vector;
use serde::{Deserialize, Serialize};

/// Lyapunov pair candidate `(V, W)` with decay rate `a ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovPair {
    pub v: ScalarFn,
    pub w: ScalarFn,
    pub a: f64,
}

impl LyapunovPair {
    pub fn new(v: ScalarFn, w: ScalarFn, a: f64) -> Self {
        LyapunovPair { v, w, a }
    }

    pub fn validate(&self) -> Result<(), FnError> {
        self.v.validate()?;
        self.w.validate()?;
        if !(self.a >= 0.0) {
            return Err(FnError::Geometry(crate::geometry::GeomError::Invalid(
                "decay rate a must be ≥ 0".into(),
            )));
        }
        Ok(())
    }
}

/// Criterion selector for the Lyapunov certifications.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LyapunovVariant {
    /// Subgradient pairing with the full value set, plus the singular
    /// condition for non-Lipschitz candidates.
    SubgradInf,
    /// Subgradient pairing against `A(x) ∩ B_{‖F(x)‖+m(x)}`.
    SubgradInfTruncated,
    /// Directional derivative along `v − Π_{A(x)}(v)`.
    DirectionalProjected,
    /// Directional derivative minimized over the truncated value set.
    DirectionalTruncated,
}

impl LyapunovVariant {
    pub fn tag(&self) -> &'static str {
        match self {
            LyapunovVariant::SubgradInf => "subgrad-inf",
            LyapunovVariant::SubgradInfTruncated => "subgrad-inf-truncated",
            LyapunovVariant::DirectionalProjected => "directional-projected",
            LyapunovVariant::DirectionalTruncated => "directional-truncated",
        }
    }

    pub fn parse(tag: &str) -> Option<Self> {
        Some(match tag {
            "subgrad-inf" => LyapunovVariant::SubgradInf,
            "subgrad-inf-truncated" => LyapunovVariant::SubgradInfTruncated,
            "directional-projected" => LyapunovVariant::DirectionalProjected,
            "directional-truncated" => LyapunovVariant::DirectionalTruncated,
            _ => return None,
        })
    }

    fn needs_bound(&self) -> bool {
        matches!(
            self,
            LyapunovVariant::SubgradInfTruncated | LyapunovVariant::DirectionalTruncated
        )
    }

    /// Which subdifferential the criterion formally quantifies over; the
    /// shipped convex variants make them coincide, and the report records
    /// the formal requirement.
    fn subdifferential_note(&self) -> &'static str {
        match self {
            LyapunovVariant::SubgradInf => {
                "subdifferential: proximal or Fréchet (coincide for the shipped variants)"
            }
            LyapunovVariant::SubgradInfTruncated => {
                "subdifferential: proximal, Fréchet or limiting (coincide for the shipped variants)"
            }
            LyapunovVariant::DirectionalProjected | LyapunovVariant::DirectionalTruncated => {
                "contingent directional derivative"
            }
        }
    }
}

/// Margin of the chosen criterion at one point: the pair is admissible at
/// `x` iff the margin is ≤ tol.
pub fn lyapunov_margin(
    pair: &LyapunovPair,
    a_op: &MonotoneOperator,
    f: &CuscoMap,
    x: &Vector,
    variant: LyapunovVariant,
    m_x: f64,
    budget: usize,
) -> Result<MarginDetail, CertifyError> {
    if !pair.v.domain_contains(x) {
        return Err(CertifyError::NotInSet { distance: f64::NAN });
    }
    if !a_op.domain_contains(x) {
        return Err(CertifyError::NotInDomain);
    }
    let exact = pair.v.subgradient_exactness(x);
    let decay = pair.a * pair.v.value(x) + pair.w.value(x);
    let mut detail = MarginDetail::pass(exact);
    let mut raise = |m: f64, xi: Option<&Vector>, v: Option<&Vector>| {
        if m > detail.margin {
            detail.margin = m;
            detail.worst_xi = xi.cloned();
            detail.worst_v = v.cloned();
        }
    };
    match variant {
        LyapunovVariant::SubgradInf | LyapunovVariant::SubgradInfTruncated => {
            let rho = f.norm_bound(x) + m_x;
            for xi in pair.v.subgradients(x, budget)? {
                let sup_f = f.support(x, &xi)?;
                let sup_a = match variant {
                    LyapunovVariant::SubgradInf => a_op.value_support(x, &xi)?,
                    _ => truncated_or_err(a_op, x, &xi, rho)?,
                };
                let m = if sup_a.is_infinite() {
                    f64::NEG_INFINITY
                } else {
                    sup_f - sup_a + decay
                };
                raise(m, Some(&xi), None);
            }
            if matches!(variant, LyapunovVariant::SubgradInf) {
                // Singular directions drop the decay term.
                for xi in pair.v.singular_subgradients(x)? {
                    if xi.norm() <= TAU_GEO {
                        continue;
                    }
                    let sup_f = f.support(x, &xi)?;
                    let sup_a = a_op.value_support(x, &xi)?;
                    let m = if sup_a.is_infinite() {
                        f64::NEG_INFINITY
                    } else {
                        sup_f - sup_a
                    };
                    raise(m, Some(&xi), None);
                }
            }
        }
        LyapunovVariant::DirectionalProjected => {
            for v in f.extreme_points(x) {
                let d = &v - a_op.project_onto_value(x, &v)?;
                let m = pair.v.directional_derivative(x, &d)? + decay;
                raise(m, None, Some(&v));
            }
        }
        LyapunovVariant::DirectionalTruncated => {
            let rho = f.norm_bound(x) + m_x;
            let value = a_op.evaluate(x)?;
            let body = value.body()?;
            for v in f.extreme_points(x) {
                // Candidate minimizers inside the truncated value set; the
                // sampled min is an upper bound of the true inf, which keeps
                // the certificate conservative.
                let mut candidates = vec![a_op.min_section(x)?];
                let proj = body.project(&v)?;
                if proj.norm() <= rho + 1e-9 {
                    candidates.push(proj);
                }
                let mut best = f64::INFINITY;
                for xstar in &candidates {
                    best = best.min(pair.v.directional_derivative(x, &(&v - xstar))?);
                }
                raise(best + decay, None, Some(&v));
            }
        }
    }
    Ok(detail)
}

fn truncated_or_err(
    a_op: &MonotoneOperator,
    x: &Vector,
    xi: &Vector,
    rho: f64,
) -> Result<f64, CertifyError> {
    match a_op.truncated_value_support(x, xi, rho) {
        Ok(v) => Ok(v),
        Err(OpError::TruncationEmpty { rho }) => Err(CertifyError::BoundTooSmall(format!(
            "truncation radius {rho:.6} misses A(x)"
        ))),
        Err(e) => Err(e.into()),
    }
}

/// Sampling region of dom V: the indicator body when present, otherwise a
/// ball whose radius comes from the local restriction or a default reach.
fn domain_set(pair: &LyapunovPair, opts: &CertifyOptions) -> ClosedSet {
    match pair.v.domain_body() {
        Some(b) => ClosedSet::from_body(b.clone()).expect("validated domain body"),
        None => {
            let dim = pair.v.dim();
            let radius = opts
                .local
                .as_ref()
                .map(|(c, r)| c.norm() + r)
                .unwrap_or(3.0);
            ClosedSet::from_body(ConvexBody::Ball {
                center: Vector::zeros(dim),
                radius,
            })
            .expect("ball set")
        }
    }
}

/// Aggregates Lyapunov margins over sampled dom V ∩ dom A.
pub fn certify_lyapunov(
    pair: &LyapunovPair,
    a_op: &MonotoneOperator,
    f: &CuscoMap,
    variant: LyapunovVariant,
    opts: &CertifyOptions,
) -> Result<CertificateReport, CertifyError> {
    let dom = domain_set(pair, opts);
    let mut pts: Vec<Vector> = Vec::new();
    let center = dom.pieces()[0].center_hint();
    let reach = dom.bounding_radius().unwrap_or(center.norm() + 3.0);
    for p in sampling::halton_ball_points(&center, reach + 0.5, opts.samples) {
        let q = dom.project(&p);
        if pts.iter().all(|r| (r - &q).norm() > 1e-10) {
            pts.push(q);
        }
    }
    for p in dom.boundary_samples(opts.samples / 2, opts.seed) {
        if pts.iter().all(|r| (r - &p).norm() > 1e-10) {
            pts.push(p);
        }
    }
    pts.retain(|p| pair.v.domain_contains(p));
    if let Some((c, r)) = &opts.local {
        pts.retain(|p| (p - c).norm() <= *r);
    }
    // Hypothesis: dom V ⊂ dom A, sampled; nonnegative W on the samples.
    let mut checks = HypothesisChecks::default();
    let inside = pts.iter().all(|p| a_op.domain_contains(p));
    checks.subset_domain = Some(inside);
    if !inside {
        return Ok(lyap_inconclusive(
            opts,
            variant,
            pair,
            checks,
            "dom V is not contained in dom A (sampled violation)".into(),
        ));
    }
    if pts.iter().any(|p| pair.w.value(p) < -1e-9) {
        return Ok(lyap_inconclusive(
            opts,
            variant,
            pair,
            checks,
            "W takes negative sampled values".into(),
        ));
    }
    pts.retain(|p| a_op.domain_contains(p));
    pts.sort_by(lex_cmp);
    pts.truncate(opts.samples);
    if pts.is_empty() {
        return Ok(lyap_inconclusive(
            opts,
            variant,
            pair,
            checks,
            "no admissible sample".into(),
        ));
    }
    let mut flags = vec![variant.subdifferential_note().to_string()];
    let estimated = opts.m_bound.is_none() && variant.needs_bound();
    let m_global = if variant.needs_bound() {
        let m = match opts.m_bound {
            Some(m) => m,
            None => {
                let mut worst: f64 = 0.0;
                for p in &pts {
                    worst = worst.max(a_op.local_min_section_bound(&dom, p, 0.05, 256)?);
                }
                worst
            }
        };
        checks.m_bound = Some(m);
        checks.m_bound_estimated = estimated;
        if estimated {
            flags.push("minimal-section bound estimated by sampling".into());
        }
        m
    } else {
        0.0
    };
    let details: Vec<MarginDetail> = numerics::parallel_map(&pts, |x| {
        lyapunov_margin(pair, a_op, f, x, variant, m_global, opts.budget).unwrap_or(MarginDetail {
            margin: f64::INFINITY,
            worst_xi: None,
            worst_v: None,
            exact: false,
        })
    });
    let all_exact = details.iter().all(|d| d.exact);
    let tol = opts
        .tol
        .unwrap_or(if all_exact { TOL_ANALYTIC } else { TOL_SAMPLED });
    if !all_exact {
        flags.push("sampled subgradients: certificate is sampling-sound only".into());
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
    let anchor = opts
        .local
        .as_ref()
        .map(|(c, _)| c.clone())
        .unwrap_or_else(|| pts[0].clone());
    let local_horizon = match &opts.local {
        Some((x0, rho)) => Some(local_criterion_horizon(a_op, f, x0, *rho)?),
        None => None,
    };
    Ok(CertificateReport {
        scenario: opts.scenario.clone(),
        variant: variant.tag().into(),
        tol,
        points,
        verdict,
        hypothesis_checks: checks,
        seed: opts.seed,
        flags,
        a: Some(pair.a),
        v_x0: Some(pair.v.value(&anchor)),
        worst_violation_t: None,
        local_horizon,
    })
}

fn lyap_inconclusive(
    opts: &CertifyOptions,
    variant: LyapunovVariant,
    pair: &LyapunovPair,
    checks: HypothesisChecks,
    reason: String,
) -> CertificateReport {
    CertificateReport {
        scenario: opts.scenario.clone(),
        variant: variant.tag().into(),
        tol: opts.tol.unwrap_or(TOL_ANALYTIC),
        points: Vec::new(),
        verdict: Verdict::Inconclusive,
        hypothesis_checks: checks,
        seed: opts.seed,
        flags: vec![reason],
        a: Some(pair.a),
        v_x0: None,
        worst_violation_t: None,
        local_horizon: None,
    }
}

/// Horizon of the local criterion: the largest T with
/// `3(‖F(x0)‖ + ‖A°(x0)‖)·T·e^{cT} ≤ ρ`, c the declared Lipschitz constant.
pub fn local_criterion_horizon(
    a_op: &MonotoneOperator,
    f: &CuscoMap,
    x0: &Vector,
    rho: f64,
) -> Result<f64, CertifyError> {
    let base = 3.0 * (f.norm_bound(x0) + a_op.min_section(x0)?.norm());
    if base == 0.0 {
        return Ok(f64::INFINITY);
    }
    let c = f.lipschitz().max(0.0);
    Ok(bisect_horizon(
        |t| base * t * (c * t).exp() <= rho,
        1e6,
        200,
    ))
}

/// Result of checking the decay inequality along a discrete trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryCheck {
    pub max_violation: f64,
    pub worst_t: f64,
    /// Effective tolerance max(tol, C·h) with the reported constant.
    pub tol_effective: f64,
    pub c_estimate: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub infinite_at_index: Option<usize>,
}

/// Checks `e^{a·t_k}·V(x_k) + ∫₀^{t_k} W ≤ V(x₀) + max(tol, C·h)` with the
/// integral by trapezoid quadrature on the trajectory grid.
pub fn verify_along_trajectory(
    pair: &LyapunovPair,
    traj: &Trajectory,
    tol: f64,
) -> TrajectoryCheck {
    let v0 = pair.v.value(&traj.states[0]);
    let mut integral = 0.0;
    let mut max_violation = f64::NEG_INFINITY;
    let mut worst_t = 0.0;
    let mut w_prev = pair.w.value(&traj.states[0]);
    // Reported quadrature/decay constant C = a·sup V + Lip(W)·sup ‖ẋ‖.
    let sup_state = traj.states.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let sup_speed = traj.velocities.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut sup_v: f64 = 0.0;
    for (k, x) in traj.states.iter().enumerate() {
        let vx = pair.v.value(x);
        if !vx.is_finite() {
            return TrajectoryCheck {
                max_violation: f64::INFINITY,
                worst_t: traj.times[k],
                tol_effective: tol,
                c_estimate: f64::NAN,
                passed: false,
                infinite_at_index: Some(k),
            };
        }
        sup_v = sup_v.max(vx.abs());
        if k > 0 {
            let w_here = pair.w.value(x);
            integral += 0.5 * (w_prev + w_here) * traj.h;
            w_prev = w_here;
        }
        let lhs = (pair.a * traj.times[k]).exp() * vx + integral;
        let violation = lhs - v0;
        if violation > max_violation {
            max_violation = violation;
            worst_t = traj.times[k];
        }
    }
    let lip_w = pair
        .w
        .lipschitz_on_ball(sup_state + 1.0)
        .unwrap_or_else(|| sampled_lipschitz(&pair.w, sup_state + 1.0));
    let c_estimate = pair.a * sup_v + lip_w * sup_speed;
    let tol_effective = tol.max(c_estimate * traj.h);
    TrajectoryCheck {
        max_violation,
        worst_t,
        tol_effective,
        c_estimate,
        passed: max_violation <= tol_effective,
        infinite_at_index: None,
    }
}

fn sampled_lipschitz(w: &ScalarFn, radius: f64) -> f64 {
    let dim = w.dim();
    let center = Vector::zeros(dim);
    let pts = sampling::halton_ball_points(&center, radius, 64);
    let mut worst: f64 = 0.0;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            let (a, b) = (&pts[i], &pts[j]);
            let (va, vb) = (w.value(a), w.value(b));
            if va.is_finite() && vb.is_finite() {
                let d = (a - b).norm();
                if d > 1e-9 {
                    worst = worst.max((va - vb).abs() / d);
                }
            }
        }
    }
    worst
}

/// The epigraph lift: block operator `(A(x), θ_{R³})`, augmented right-hand
/// side `(F(x), W_k(x), 1, 0)` and objective `e^{aβ}V(x) + α`.
pub fn epigraph_transform(
    pair: &LyapunovPair,
    a_op: &MonotoneOperator,
    f: &CuscoMap,
    k: f64,
) -> (MonotoneOperator, CuscoMap, ScalarFn) {
    assert!(k >= 1.0, "envelope index must be ≥ 1");
    let lifted_op = MonotoneOperator::Lifted {
        inner: Box::new(a_op.clone()),
        extra: 3,
    };
    let lifted_f = CuscoMap::new(crate::cusco::CuscoKind::Lifted {
        inner: Box::new(f.clone()),
        envelope_of: pair.w.clone(),
        k,
    });
    let lifted_v = ScalarFn::LiftedValue {
        base: Box::new(pair.v.clone()),
        a: pair.a,
    };
    (lifted_op, lifted_f, lifted_v)
}

/// Pasch-Hausdorff envelope evaluation (`inf_z W(z) + k‖x − z‖`); the
/// ScalarFn method re-exported under the operation's own name.
pub fn pasch_hausdorff(w: &ScalarFn, k: f64, x: &Vector) -> f64 {
    w.pasch_hausdorff(k, x)
}
