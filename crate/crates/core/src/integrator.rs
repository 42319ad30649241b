//! Catching-up integration of `ẋ ∈ f(x) − A(x)`: implicit Euler through the
//! resolvent, `x⁺ = J_{hA}(x + h·v)`. The implicit step absorbs unbounded
//! normal-cone parts without stiffness blowup, which an explicit scheme
//! cannot do.
//!
//! Selections are either frozen Lipschitz selections through a prescribed
//! graph point (the existence-proof construction) or steered per step by
//! minimizing an objective over the extreme velocities.

use crate::cusco::{CuscoError, CuscoMap};
use crate::functions::ScalarFn;
use crate::geometry::{lex_cmp, ClosedSet, GeomError};
use crate::numerics::simpson;
use crate::operators::{MonotoneOperator, OpError};
use crate::Vector;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StepFailure {
    #[error(transparent)]
    Op(#[from] OpError),
    #[error(transparent)]
    Cusco(#[from] CuscoError),
    #[error(transparent)]
    Geometry(#[from] GeomError),
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("integration aborted at step {index}: {source}")]
    Aborted {
        index: usize,
        source: StepFailure,
        partial: Box<Trajectory>,
    },
    #[error("invalid integrator configuration: {0}")]
    Config(String),
}

/// Objective minimized by the steered selection mode at the post-step point.
#[derive(Debug, Clone)]
pub enum SteerObjective {
    DistanceTo(ClosedSet),
    LyapunovValue(ScalarFn),
}

impl SteerObjective {
    fn eval(&self, x: &Vector) -> f64 {
        match self {
            SteerObjective::DistanceTo(set) => set.distance(x),
            SteerObjective::LyapunovValue(v) => v.value(x),
        }
    }
}

/// Velocity selection rule.
#[derive(Debug, Clone)]
pub enum StepMode {
    /// Freeze the Lipschitz selection through `(anchor, v0)`.
    FixedSelection { anchor: Vector, v0: Vector },
    /// Re-pick the extreme velocity minimizing the objective each step;
    /// ties break by lexicographic vertex order.
    Steered { objective: SteerObjective },
}

#[derive(Debug, Clone)]
pub struct IntegratorConfig {
    pub h: f64,
    pub horizon: f64,
    pub mode: StepMode,
    /// Richardson refinement: also run at h/2 and extrapolate the final state.
    pub refine: bool,
}

impl IntegratorConfig {
    pub fn fixed(h: f64, horizon: f64, anchor: Vector, v0: Vector) -> Self {
        IntegratorConfig {
            h,
            horizon,
            mode: StepMode::FixedSelection { anchor, v0 },
            refine: false,
        }
    }

    pub fn steered(h: f64, horizon: f64, objective: SteerObjective) -> Self {
        IntegratorConfig {
            h,
            horizon,
            mode: StepMode::Steered { objective },
            refine: false,
        }
    }

    fn validate(&self) -> Result<usize, SimError> {
        if !(self.h > 0.0) || !(self.horizon >= self.h) {
            return Err(SimError::Config("need 0 < h ≤ horizon".into()));
        }
        let steps = (self.horizon / self.h).ceil() as usize;
        if steps as f64 > 1e7 {
            return Err(SimError::Config("more than 1e7 steps requested".into()));
        }
        Ok(steps)
    }
}

/// Discrete solution: grid, states, chosen selections and the discrete
/// right differences `(x_{k+1} − x_k)/h`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub h: f64,
    pub times: Vec<f64>,
    pub states: Vec<Vector>,
    pub velocities: Vec<Vector>,
    pub selections: Vec<Vector>,
    pub refined_final: Option<Vector>,
}

impl Trajectory {
    pub fn final_state(&self) -> &Vector {
        self.states.last().expect("nonempty trajectory")
    }

    pub fn steps(&self) -> usize {
        self.velocities.len()
    }

    /// Max distance of the states to a set; the falsification statistic.
    pub fn max_distance_to(&self, set: &ClosedSet) -> f64 {
        self.states
            .iter()
            .map(|x| set.distance(x))
            .fold(0.0, f64::max)
    }
}

/// One catching-up step `x⁺ = J_{hA}(x + h·v)`; lands in dom A.
pub fn step(a: &MonotoneOperator, v: &Vector, x: &Vector, h: f64) -> Result<Vector, OpError> {
    a.resolvent(h, &(x + v * h))
}

/// Integrates `ẋ ∈ F(x) − A(x)` from `x0 ∈ closure(dom A)`.
pub fn integrate(
    a: &MonotoneOperator,
    f: &CuscoMap,
    cfg: &IntegratorConfig,
    x0: &Vector,
) -> Result<Trajectory, SimError> {
    let steps = cfg.validate()?;
    let mut traj = integrate_once(a, f, cfg, x0, cfg.h, steps)?;
    if cfg.refine {
        let fine = integrate_once(a, f, cfg, x0, cfg.h / 2.0, 2 * steps)?;
        traj.refined_final = Some(fine.final_state() * 2.0 - traj.final_state());
    }
    Ok(traj)
}

fn integrate_once(
    a: &MonotoneOperator,
    f: &CuscoMap,
    cfg: &IntegratorConfig,
    x0: &Vector,
    h: f64,
    steps: usize,
) -> Result<Trajectory, SimError> {
    let empty = |h: f64| Trajectory {
        h,
        times: vec![0.0],
        states: vec![x0.clone()],
        velocities: Vec::new(),
        selections: Vec::new(),
        refined_final: None,
    };
    let abort = |index: usize, source: StepFailure, partial: Trajectory| SimError::Aborted {
        index,
        source,
        partial: Box::new(partial),
    };
    // The initial state must lie in closure(dom A).
    if let Some(body) = a.domain_body() {
        let d = body.distance(x0).unwrap_or(f64::INFINITY);
        if d > body.tolerance().max(1e-7) {
            return Err(abort(
                0,
                StepFailure::Geometry(GeomError::NotInSet { distance: d }),
                empty(h),
            ));
        }
    }
    let selection = match &cfg.mode {
        StepMode::FixedSelection { anchor, v0 } => Some(
            f.lipschitz_selection(anchor, v0)
                .map_err(|e| abort(0, e.into(), empty(h)))?,
        ),
        StepMode::Steered { .. } => None,
    };
    let mut traj = empty(h);
    for k in 0..steps {
        let x = traj.states[k].clone();
        let v = match &cfg.mode {
            StepMode::FixedSelection { .. } => selection
                .as_ref()
                .expect("fixed mode has a selection")
                .at(&x),
            StepMode::Steered { objective } => match steer(a, f, objective, &x, h) {
                Ok(v) => v,
                Err(e) => return Err(abort(k, e, traj)),
            },
        };
        let next = match step(a, &v, &x, h) {
            Ok(n) => n,
            Err(e) => return Err(abort(k, e.into(), traj)),
        };
        traj.velocities.push((&next - &x) / h);
        traj.selections.push(v);
        traj.states.push(next);
        traj.times.push((k + 1) as f64 * h);
    }
    Ok(traj)
}

/// Picks the extreme velocity whose post-step point minimizes the
/// objective; the inf of a linear criterion over a compact convex value is
/// attained at extreme points, and the post-step objective is treated the
/// same way as a per-step heuristic.
fn steer(
    a: &MonotoneOperator,
    f: &CuscoMap,
    objective: &SteerObjective,
    x: &Vector,
    h: f64,
) -> Result<Vector, StepFailure> {
    let mut best: Option<(f64, Vector)> = None;
    for v in f.extreme_points(x) {
        let next = step(a, &v, x, h)?;
        let score = objective.eval(&next);
        best = Some(match best.take() {
            None => (score, v),
            Some((bs, bv)) => {
                if score < bs - 1e-12 || ((score - bs).abs() <= 1e-12 && lex_cmp(&v, &bv).is_lt()) {
                    (score, v)
                } else {
                    (bs, bv)
                }
            }
        });
    }
    Ok(best.expect("cusco values are nonempty").1)
}

/// Discrete right derivative `v − Π_{A(x)}(v)` at a domain point.
pub fn right_derivative(
    a: &MonotoneOperator,
    f: &CuscoMap,
    x: &Vector,
    v: &Vector,
) -> Result<Vector, StepFailure> {
    let violation = f.value(x).distance(v)?;
    if violation > 1e-7 {
        return Err(StepFailure::Cusco(CuscoError::NotInValue {
            distance: violation,
        }));
    }
    Ok(v - a.project_onto_value(x, v)?)
}

/// Single-trajectory growth bound `3(‖F(x0)‖ + ‖A°(x0)‖)·t·e^{ct}`.
pub fn growth_bound(
    f: &CuscoMap,
    a: &MonotoneOperator,
    x0: &Vector,
    c: f64,
    t: f64,
) -> Result<f64, OpError> {
    Ok(3.0 * (f.norm_bound(x0) + a.min_section(x0)?.norm()) * t * (c * t).exp())
}

/// Two-trajectory divergence bound, factor 4 instead of 3.
pub fn divergence_bound(
    f: &CuscoMap,
    a: &MonotoneOperator,
    x0: &Vector,
    c: f64,
    t: f64,
) -> Result<f64, OpError> {
    Ok(4.0 * (f.norm_bound(x0) + a.min_section(x0)?.norm()) * t * (c * t).exp())
}

/// Gronwall envelope: for `(1−α)w′ ≤ a(t)w + b(t)w^α` with `b ≥ 0`,
/// bounds `w(t)` by
/// `(w0^{1−α}·e^{∫a} + ∫ e^{∫_s^t a} b(s) ds)^{1/(1−α)}`.
/// Integrals by composite Simpson on 10⁴ panels.
pub fn gronwall_bound(
    a_fn: &dyn Fn(f64) -> f64,
    b_fn: &dyn Fn(f64) -> f64,
    alpha: f64,
    w0: f64,
    t0: f64,
    t: f64,
) -> Result<f64, GeomError> {
    assert!((0.0..1.0).contains(&alpha), "alpha must be in [0, 1)");
    assert!(t >= t0, "need t ≥ t0");
    assert!(w0 >= 0.0, "need w0 ≥ 0");
    if t == t0 {
        return Ok(w0);
    }
    let panels = 10_000usize;
    let dt = (t - t0) / panels as f64;
    // Cumulative ∫_{t0}^{s_j} a with a two-subpanel Simpson per increment.
    let mut a_cum = Vec::with_capacity(panels + 1);
    a_cum.push(0.0);
    for j in 1..=panels {
        let lo = t0 + (j - 1) as f64 * dt;
        let hi = t0 + j as f64 * dt;
        let inc = simpson(a_fn, lo, hi, 2);
        a_cum.push(a_cum[j - 1] + inc);
    }
    // ∫ e^{A(t)−A(s)} b(s) ds = e^{A(t)} ∫ e^{−A(s)} b(s) ds by Simpson.
    let mut weighted = 0.0;
    for (j, a_j) in a_cum.iter().enumerate() {
        let s = t0 + j as f64 * dt;
        let b = b_fn(s);
        if b < -1e-12 {
            return Err(GeomError::Invalid(format!("b({s}) = {b} is negative")));
        }
        let w = if j == 0 || j == panels {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        };
        weighted += w * (-a_j).exp() * b;
    }
    let integral = weighted * dt / 3.0;
    let a_total = a_cum[panels];
    let base = w0.powf(1.0 - alpha) * a_total.exp() + a_total.exp() * integral;
    Ok(base.powf(1.0 / (1.0 - alpha)))
}
