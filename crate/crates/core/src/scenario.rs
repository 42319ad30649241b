//! Scenario files and command orchestration.
//!
//! Scenarios are JSON documents with a `kind` discriminator on every
//! polymorphic object. Loading validates dimensions, PSD requirements and
//! value ranges and reports schema errors with field paths. Commands
//! (`simulate`, `check-invariance`, `check-lyapunov`, `sweep`) produce
//! deterministic artifacts; identical scenario and seed give byte-identical
//! bytes.

use crate::cusco::{AffineMap, AffineScalar, CuscoKind, CuscoMap};
use crate::functions::ScalarFn;
use crate::geometry::{ClosedSet, ConvexBody};
use crate::integrator::{integrate, IntegratorConfig, SteerObjective, StepMode};
use crate::invariance::{
    certify_strong, certify_weak, falsify_by_simulation, CertifyOptions, CriterionVariant,
};
use crate::lyapunov::{certify_lyapunov, verify_along_trajectory, LyapunovPair, LyapunovVariant};
use crate::operators::{symmetric_part_min_eig, MonotoneOperator, SmoothPart};
use crate::report::{sweep_csv, trajectory_csv, SimulationSummary, SweepRow, Verdict};
use crate::{Matrix, Vector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("scenario is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema validation failed: {}", format_schema_errors(.0))]
    Schema(Vec<SchemaError>),
    #[error("command failed: {0}")]
    Command(String),
}

fn format_schema_errors(errs: &[SchemaError]) -> String {
    errs.iter()
        .map(|e| format!("{}: {}", e.path, e.message))
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodySpec {
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    HPolytope {
        normals: Vec<Vec<f64>>,
        offsets: Vec<f64>,
    },
    VPolytope {
        vertices: Vec<Vec<f64>>,
    },
    Cone {
        generators: Vec<Vec<f64>>,
    },
    Translate {
        base: Box<BodySpec>,
        shift: Vec<f64>,
    },
    Intersection {
        parts: Vec<BodySpec>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SmoothSpec {
    Quadratic { q: Vec<Vec<f64>>, b: Vec<f64> },
    Linear { m: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    NormalConeOf { body: BodySpec },
    QuadraticGradient { q: Vec<Vec<f64>>, b: Vec<f64> },
    ScaledNormSubdiff { weight: f64 },
    LinearMonotone { m: Vec<Vec<f64>> },
    SumWithNormalCone { smooth: SmoothSpec, body: BodySpec },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AffineMapSpec {
    pub linear: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CuscoSpec {
    Singleton {
        map: AffineMapSpec,
    },
    BallValued {
        center: AffineMapSpec,
        radius_base: f64,
        #[serde(default)]
        radius_grad: Option<Vec<f64>>,
    },
    PolytopeValued {
        vertex_maps: Vec<AffineMapSpec>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarFnSpec {
    ConvexQuadratic {
        q: Vec<Vec<f64>>,
        b: Vec<f64>,
        c: f64,
    },
    NormPower {
        p: u8,
        weight: f64,
    },
    MaxAffine {
        gradients: Vec<Vec<f64>>,
        offsets: Vec<f64>,
    },
    IndicatorPlus {
        body: BodySpec,
        smooth: Box<ScalarFnSpec>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LyapunovSpec {
    pub v: ScalarFnSpec,
    pub w: ScalarFnSpec,
    pub a: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModeSpec {
    Fixed { anchor: Vec<f64>, v0: Vec<f64> },
    SteeredDistance,
    SteeredLyapunov,
}

fn default_h() -> f64 {
    1e-3
}

fn default_horizon() -> f64 {
    5.0
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub mode: Option<ModeSpec>,
    #[serde(default)]
    pub refine: bool,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        IntegratorSpec {
            h: default_h(),
            horizon: default_horizon(),
            mode: None,
            refine: false,
            x0: None,
        }
    }
}

fn default_count() -> usize {
    200
}

fn default_budget() -> usize {
    crate::geometry::budget_default()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SamplerSpec {
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default)]
    pub m_bound: Option<f64>,
    #[serde(default)]
    pub local_center: Option<Vec<f64>>,
    #[serde(default)]
    pub local_radius: Option<f64>,
    #[serde(default)]
    pub tol: Option<f64>,
}

impl Default for SamplerSpec {
    fn default() -> Self {
        SamplerSpec {
            count: default_count(),
            budget: default_budget(),
            m_bound: None,
            local_center: None,
            local_radius: None,
            tol: None,
        }
    }
}

/// Complete scenario document.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub dimension: usize,
    #[serde(default)]
    pub seed: u64,
    pub operator: OperatorSpec,
    pub cusco: CuscoSpec,
    #[serde(default)]
    pub set: Option<Vec<BodySpec>>,
    #[serde(default)]
    pub lyapunov: Option<LyapunovSpec>,
    #[serde(default)]
    pub integrator: IntegratorSpec,
    #[serde(default)]
    pub sampler: SamplerSpec,
}

/// Loads and validates a scenario file.
pub fn load_scenario(path: &std::path::Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path)?;
    parse_scenario(&text)
}

/// Parses and validates scenario JSON.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let scenario: Scenario = serde_json::from_str(text)?;
    let errs = scenario.schema_errors();
    if errs.is_empty() {
        Ok(scenario)
    } else {
        Err(ScenarioError::Schema(errs))
    }
}

// ---------------------------------------------------------------------------
// Validation

struct Checker {
    dim: usize,
    errs: Vec<SchemaError>,
}

impl Checker {
    fn push(&mut self, path: &str, message: impl Into<String>) {
        self.errs.push(SchemaError {
            path: path.into(),
            message: message.into(),
        });
    }

    fn vec(&mut self, path: &str, v: &[f64]) {
        if v.len() != self.dim {
            self.push(
                path,
                format!("expected dimension {}, got {}", self.dim, v.len()),
            );
        }
        if v.iter().any(|c| !c.is_finite()) {
            self.push(path, "entries must be finite");
        }
    }

    fn matrix(&mut self, path: &str, m: &[Vec<f64>]) {
        if m.len() != self.dim || m.iter().any(|r| r.len() != self.dim) {
            self.push(path, format!("expected a {0}×{0} matrix", self.dim));
        }
    }

    fn psd(&mut self, path: &str, m: &[Vec<f64>], need_symmetric: bool) {
        if m.len() != self.dim || m.iter().any(|r| r.len() != self.dim) {
            return; // dimension error already recorded
        }
        let mat = to_matrix(m);
        if need_symmetric && (&mat - mat.transpose()).norm() > 1e-9 * (1.0 + mat.norm()) {
            self.push(path, "matrix must be symmetric");
        }
        if symmetric_part_min_eig(&mat) < -1e-9 {
            self.push(path, "not PSD");
        }
    }

    fn body(&mut self, path: &str, b: &BodySpec) {
        match b {
            BodySpec::Ball { center, radius } => {
                self.vec(&format!("{path}.center"), center);
                if !(*radius >= 0.0) {
                    self.push(&format!("{path}.radius"), "radius must be ≥ 0");
                }
            }
            BodySpec::Box { lo, hi } => {
                self.vec(&format!("{path}.lo"), lo);
                self.vec(&format!("{path}.hi"), hi);
                if lo.iter().zip(hi).any(|(l, h)| l > h) {
                    self.push(path, "box needs lo ≤ hi componentwise");
                }
            }
            BodySpec::HPolytope { normals, offsets } => {
                if normals.len() != offsets.len() || normals.is_empty() {
                    self.push(path, "normals and offsets must match and be nonempty");
                }
                for (i, n) in normals.iter().enumerate() {
                    self.vec(&format!("{path}.normals[{i}]"), n);
                    if n.iter().all(|c| *c == 0.0) {
                        self.push(&format!("{path}.normals[{i}]"), "normal must be nonzero");
                    }
                }
            }
            BodySpec::VPolytope { vertices } => {
                if vertices.is_empty() {
                    self.push(path, "vertex list must be nonempty");
                }
                for (i, v) in vertices.iter().enumerate() {
                    self.vec(&format!("{path}.vertices[{i}]"), v);
                }
            }
            BodySpec::Cone { generators } => {
                if generators.is_empty() {
                    self.push(path, "cone needs at least one generator");
                }
                for (i, g) in generators.iter().enumerate() {
                    self.vec(&format!("{path}.generators[{i}]"), g);
                }
            }
            BodySpec::Translate { base, shift } => {
                self.body(&format!("{path}.base"), base);
                self.vec(&format!("{path}.shift"), shift);
            }
            BodySpec::Intersection { parts } => {
                if parts.is_empty() {
                    self.push(path, "intersection needs parts");
                }
                for (i, p) in parts.iter().enumerate() {
                    self.body(&format!("{path}.parts[{i}]"), p);
                }
            }
        }
    }

    fn affine(&mut self, path: &str, m: &AffineMapSpec) {
        self.matrix(&format!("{path}.linear"), &m.linear);
        self.vec(&format!("{path}.offset"), &m.offset);
    }

    fn scalar_fn(&mut self, path: &str, s: &ScalarFnSpec) {
        match s {
            ScalarFnSpec::ConvexQuadratic { q, b, .. } => {
                self.matrix(&format!("{path}.q"), q);
                self.psd(&format!("{path}.q"), q, true);
                self.vec(&format!("{path}.b"), b);
            }
            ScalarFnSpec::NormPower { p, weight } => {
                if !matches!(p, 1 | 2) {
                    self.push(&format!("{path}.p"), "norm power must be 1 or 2");
                }
                if !(*weight >= 0.0) {
                    self.push(&format!("{path}.weight"), "weight must be ≥ 0");
                }
            }
            ScalarFnSpec::MaxAffine { gradients, offsets } => {
                if gradients.len() != offsets.len() || gradients.is_empty() {
                    self.push(path, "gradients and offsets must match and be nonempty");
                }
                for (i, g) in gradients.iter().enumerate() {
                    self.vec(&format!("{path}.gradients[{i}]"), g);
                }
            }
            ScalarFnSpec::IndicatorPlus { body, smooth } => {
                self.body(&format!("{path}.body"), body);
                self.scalar_fn(&format!("{path}.smooth"), smooth);
            }
        }
    }
}

impl Scenario {
    /// All schema violations with their field paths; empty means valid.
    pub fn schema_errors(&self) -> Vec<SchemaError> {
        let mut ck = Checker {
            dim: self.dimension,
            errs: Vec::new(),
        };
        if self.dimension == 0 || self.dimension > 16 {
            ck.push("dimension", "dimension must be between 1 and 16");
        }
        match &self.operator {
            OperatorSpec::NormalConeOf { body } => ck.body("operator.body", body),
            OperatorSpec::QuadraticGradient { q, b } => {
                ck.matrix("operator.q", q);
                ck.psd("operator.q", q, true);
                ck.vec("operator.b", b);
            }
            OperatorSpec::ScaledNormSubdiff { weight } => {
                if !(*weight > 0.0) {
                    ck.push("operator.weight", "weight must be positive");
                }
            }
            OperatorSpec::LinearMonotone { m } => {
                ck.matrix("operator.m", m);
                ck.psd("operator.m", m, false);
            }
            OperatorSpec::SumWithNormalCone { smooth, body } => {
                match smooth {
                    SmoothSpec::Quadratic { q, b } => {
                        ck.matrix("operator.smooth.q", q);
                        ck.psd("operator.smooth.q", q, true);
                        ck.vec("operator.smooth.b", b);
                    }
                    SmoothSpec::Linear { m } => {
                        ck.matrix("operator.smooth.m", m);
                        ck.psd("operator.smooth.m", m, false);
                    }
                }
                ck.body("operator.body", body);
            }
        }
        match &self.cusco {
            CuscoSpec::Singleton { map } => ck.affine("cusco.map", map),
            CuscoSpec::BallValued {
                center,
                radius_base,
                radius_grad,
            } => {
                ck.affine("cusco.center", center);
                if !radius_base.is_finite() {
                    ck.push("cusco.radius_base", "must be finite");
                }
                if let Some(g) = radius_grad {
                    ck.vec("cusco.radius_grad", g);
                } else if *radius_base < 0.0 {
                    ck.push("cusco.radius_base", "radius must be ≥ 0");
                }
            }
            CuscoSpec::PolytopeValued { vertex_maps } => {
                if vertex_maps.is_empty() {
                    ck.push("cusco.vertex_maps", "need at least one vertex map");
                }
                for (i, m) in vertex_maps.iter().enumerate() {
                    ck.affine(&format!("cusco.vertex_maps[{i}]"), m);
                }
            }
        }
        if let Some(pieces) = &self.set {
            if pieces.is_empty() {
                ck.push("set", "set needs at least one piece");
            }
            for (i, p) in pieces.iter().enumerate() {
                ck.body(&format!("set[{i}]"), p);
            }
        }
        if let Some(lyap) = &self.lyapunov {
            ck.scalar_fn("lyapunov.v", &lyap.v);
            ck.scalar_fn("lyapunov.w", &lyap.w);
            if !(lyap.a >= 0.0) {
                ck.push("lyapunov.a", "decay rate a must be ≥ 0");
            }
        }
        if !(self.integrator.h > 0.0) {
            ck.push("integrator.h", "step must be positive");
        }
        if self.integrator.horizon < self.integrator.h {
            ck.push("integrator.horizon", "horizon must be ≥ h");
        }
        if self.integrator.horizon / self.integrator.h > 1e7 {
            ck.push("integrator", "more than 1e7 steps requested");
        }
        if let Some(x0) = &self.integrator.x0 {
            ck.vec("integrator.x0", x0);
        }
        if let Some(ModeSpec::Fixed { anchor, v0 }) = &self.integrator.mode {
            ck.vec("integrator.mode.anchor", anchor);
            ck.vec("integrator.mode.v0", v0);
        }
        if let Some(c) = &self.sampler.local_center {
            ck.vec("sampler.local_center", c);
        }
        ck.errs
    }

    // -- conversions to core types ------------------------------------------

    pub fn to_operator(&self) -> Result<MonotoneOperator, ScenarioError> {
        let op = match &self.operator {
            OperatorSpec::NormalConeOf { body } => MonotoneOperator::NormalConeOf {
                body: to_body(body),
            },
            OperatorSpec::QuadraticGradient { q, b } => MonotoneOperator::QuadraticGradient {
                q: to_matrix(q),
                b: Vector::from_column_slice(b),
            },
            OperatorSpec::ScaledNormSubdiff { weight } => MonotoneOperator::ScaledNormSubdiff {
                weight: *weight,
                dim: self.dimension,
            },
            OperatorSpec::LinearMonotone { m } => {
                MonotoneOperator::LinearMonotone { m: to_matrix(m) }
            }
            OperatorSpec::SumWithNormalCone { smooth, body } => {
                MonotoneOperator::SumWithNormalCone {
                    smooth: match smooth {
                        SmoothSpec::Quadratic { q, b } => SmoothPart::Quadratic {
                            q: to_matrix(q),
                            b: Vector::from_column_slice(b),
                        },
                        SmoothSpec::Linear { m } => SmoothPart::Linear { m: to_matrix(m) },
                    },
                    body: to_body(body),
                }
            }
        };
        op.validate()
            .map_err(|e| ScenarioError::Command(format!("operator: {e}")))?;
        Ok(op)
    }

    pub fn to_cusco(&self) -> Result<CuscoMap, ScenarioError> {
        let kind = match &self.cusco {
            CuscoSpec::Singleton { map } => CuscoKind::Singleton {
                map: to_affine(map),
            },
            CuscoSpec::BallValued {
                center,
                radius_base,
                radius_grad,
            } => CuscoKind::BallValued {
                center: to_affine(center),
                radius: AffineScalar {
                    base: *radius_base,
                    grad: radius_grad
                        .as_ref()
                        .map(|g| Vector::from_column_slice(g))
                        .unwrap_or_else(|| Vector::zeros(self.dimension)),
                },
            },
            CuscoSpec::PolytopeValued { vertex_maps } => CuscoKind::PolytopeValued {
                vertex_maps: vertex_maps.iter().map(to_affine).collect(),
            },
        };
        let f = CuscoMap::new(kind);
        f.validate()
            .map_err(|e| ScenarioError::Command(format!("cusco: {e}")))?;
        Ok(f)
    }

    pub fn to_set(&self) -> Result<Option<ClosedSet>, ScenarioError> {
        match &self.set {
            None => Ok(None),
            Some(pieces) => {
                let bodies: Vec<ConvexBody> = pieces.iter().map(to_body).collect();
                let set = ClosedSet::new(bodies)
                    .map_err(|e| ScenarioError::Command(format!("set: {e}")))?;
                Ok(Some(set))
            }
        }
    }

    pub fn to_pair(&self) -> Result<Option<LyapunovPair>, ScenarioError> {
        match &self.lyapunov {
            None => Ok(None),
            Some(spec) => {
                let pair = LyapunovPair::new(
                    to_scalar_fn(&spec.v, self.dimension),
                    to_scalar_fn(&spec.w, self.dimension),
                    spec.a,
                );
                pair.validate()
                    .map_err(|e| ScenarioError::Command(format!("lyapunov: {e}")))?;
                Ok(Some(pair))
            }
        }
    }

    /// Start point: the configured one, else a deterministic admissible
    /// point (the set/domain projection of the origin).
    pub fn start_point(&self, op: &MonotoneOperator) -> Result<Vector, ScenarioError> {
        if let Some(x0) = &self.integrator.x0 {
            return Ok(Vector::from_column_slice(x0));
        }
        let origin = Vector::zeros(self.dimension);
        let anchor = match self.to_set()? {
            Some(set) => set.project(&origin),
            None => origin,
        };
        op.domain_project(&anchor)
            .map_err(|e| ScenarioError::Command(format!("start: {e}")))
    }

    fn integrator_config(
        &self,
        op: &MonotoneOperator,
        f: &CuscoMap,
        x0: &Vector,
    ) -> Result<IntegratorConfig, ScenarioError> {
        let mode = match &self.integrator.mode {
            Some(ModeSpec::Fixed { anchor, v0 }) => StepMode::FixedSelection {
                anchor: Vector::from_column_slice(anchor),
                v0: Vector::from_column_slice(v0),
            },
            Some(ModeSpec::SteeredDistance) => {
                let set = self.to_set()?.ok_or_else(|| {
                    ScenarioError::Command("steered-distance mode needs a set".into())
                })?;
                StepMode::Steered {
                    objective: SteerObjective::DistanceTo(set),
                }
            }
            Some(ModeSpec::SteeredLyapunov) => {
                let pair = self.to_pair()?.ok_or_else(|| {
                    ScenarioError::Command("steered-lyapunov mode needs a pair".into())
                })?;
                StepMode::Steered {
                    objective: SteerObjective::LyapunovValue(pair.v),
                }
            }
            None => {
                // Default: freeze the least-norm selection at the start.
                let v0 = f
                    .value(x0)
                    .min_norm_point()
                    .map_err(|e| ScenarioError::Command(format!("default mode: {e}")))?;
                StepMode::FixedSelection {
                    anchor: x0.clone(),
                    v0,
                }
            }
        };
        let _ = op;
        Ok(IntegratorConfig {
            h: self.integrator.h,
            horizon: self.integrator.horizon,
            mode,
            refine: self.integrator.refine,
        })
    }

    fn certify_options(&self) -> CertifyOptions {
        let mut opts = CertifyOptions::new(self.name.clone(), self.sampler.count, self.seed);
        opts.budget = self.sampler.budget;
        opts.tol = self.sampler.tol;
        opts.m_bound = self.sampler.m_bound;
        if let (Some(c), Some(r)) = (&self.sampler.local_center, self.sampler.local_radius) {
            opts.local = Some((Vector::from_column_slice(c), r));
        }
        opts
    }
}

fn to_matrix(rows: &[Vec<f64>]) -> Matrix {
    let n = rows.len();
    let m = rows.first().map(|r| r.len()).unwrap_or(0);
    Matrix::from_fn(n, m, |i, j| rows[i][j])
}

fn to_body(spec: &BodySpec) -> ConvexBody {
    match spec {
        BodySpec::Ball { center, radius } => ConvexBody::Ball {
            center: Vector::from_column_slice(center),
            radius: *radius,
        },
        BodySpec::Box { lo, hi } => ConvexBody::box_body(lo, hi),
        BodySpec::HPolytope { normals, offsets } => ConvexBody::HPolytope {
            normals: normals
                .iter()
                .map(|n| Vector::from_column_slice(n))
                .collect(),
            offsets: offsets.clone(),
        },
        BodySpec::VPolytope { vertices } => ConvexBody::VPolytope {
            vertices: vertices
                .iter()
                .map(|v| Vector::from_column_slice(v))
                .collect(),
        },
        BodySpec::Cone { generators } => ConvexBody::Cone {
            generators: generators
                .iter()
                .map(|g| Vector::from_column_slice(g))
                .collect(),
        },
        BodySpec::Translate { base, shift } => ConvexBody::Translate {
            base: Box::new(to_body(base)),
            shift: Vector::from_column_slice(shift),
        },
        BodySpec::Intersection { parts } => ConvexBody::Intersection {
            parts: parts.iter().map(to_body).collect(),
        },
    }
}

fn to_affine(spec: &AffineMapSpec) -> AffineMap {
    AffineMap {
        linear: to_matrix(&spec.linear),
        offset: Vector::from_column_slice(&spec.offset),
    }
}

fn to_scalar_fn(spec: &ScalarFnSpec, dim: usize) -> ScalarFn {
    match spec {
        ScalarFnSpec::ConvexQuadratic { q, b, c } => ScalarFn::ConvexQuadratic {
            q: to_matrix(q),
            b: Vector::from_column_slice(b),
            c: *c,
        },
        ScalarFnSpec::NormPower { p, weight } => ScalarFn::NormPower {
            p: *p,
            weight: *weight,
            dim,
        },
        ScalarFnSpec::MaxAffine { gradients, offsets } => ScalarFn::MaxAffine {
            pieces: gradients
                .iter()
                .zip(offsets)
                .map(|(g, c)| (Vector::from_column_slice(g), *c))
                .collect(),
        },
        ScalarFnSpec::IndicatorPlus { body, smooth } => ScalarFn::IndicatorPlus {
            body: to_body(body),
            smooth: Box::new(to_scalar_fn(smooth, dim)),
        },
    }
}

// ---------------------------------------------------------------------------
// Commands

/// Artifacts of one command: file name/content pairs plus the exit code
/// (0 pass/complete, 1 criterion violated or falsified, 2 error).
#[derive(Debug, Clone)]
pub struct CommandOutput {
    pub files: Vec<(String, String)>,
    pub exit_code: i32,
    pub message: String,
}

/// `simulate`: trajectory CSV plus a summary JSON.
pub fn cmd_simulate(scn: &Scenario) -> Result<CommandOutput, ScenarioError> {
    let op = scn.to_operator()?;
    let f = scn.to_cusco()?;
    let x0 = scn.start_point(&op)?;
    let cfg = scn.integrator_config(&op, &f, &x0)?;
    let traj = integrate(&op, &f, &cfg, &x0).map_err(|e| ScenarioError::Command(e.to_string()))?;
    let set = scn.to_set()?;
    let summary = SimulationSummary {
        scenario: scn.name.clone(),
        h: traj.h,
        horizon: scn.integrator.horizon,
        steps: traj.steps(),
        final_state: traj.final_state().iter().copied().collect(),
        final_set_distance: set.as_ref().map(|s| s.distance(traj.final_state())),
        max_set_distance: set.as_ref().map(|s| traj.max_distance_to(s)),
        refined_final: traj
            .refined_final
            .as_ref()
            .map(|v| v.iter().copied().collect()),
        seed: scn.seed,
    };
    Ok(CommandOutput {
        files: vec![
            (
                format!("{}_trajectory.csv", scn.name),
                trajectory_csv(&traj),
            ),
            (format!("{}_summary.json", scn.name), summary.to_json()),
        ],
        exit_code: 0,
        message: format!("simulated {} steps at h={}", traj.steps(), traj.h),
    })
}

/// `check-invariance`: certificate report plus falsification evidence.
pub fn cmd_check_invariance(
    scn: &Scenario,
    variant: CriterionVariant,
    tol: Option<f64>,
    seed: Option<u64>,
) -> Result<CommandOutput, ScenarioError> {
    let op = scn.to_operator()?;
    let f = scn.to_cusco()?;
    let set = scn
        .to_set()?
        .ok_or_else(|| ScenarioError::Command("check-invariance needs a set".into()))?;
    let mut opts = scn.certify_options();
    if let Some(t) = tol {
        opts.tol = Some(t);
    }
    if let Some(s) = seed {
        opts.seed = s;
    }
    let report = if variant.is_weak() {
        certify_weak(&set, &op, &f, variant, &opts)
    } else {
        certify_strong(&set, &op, &f, variant, &opts)
    }
    .map_err(|e| ScenarioError::Command(e.to_string()))?;
    let x0 = scn.start_point(&op)?;
    let evidence =
        falsify_by_simulation(&set, &op, &f, &x0, scn.integrator.h, scn.integrator.horizon);
    let mut evidence_json = serde_json::to_string_pretty(&evidence).expect("evidence serializes");
    evidence_json.push('\n');
    let exit_code = match report.verdict {
        Verdict::Pass => 0,
        Verdict::Fail => 1,
        Verdict::Inconclusive => 1,
    };
    let message = format!(
        "{}: verdict {:?} over {} points (tol {:.1e})",
        variant.tag(),
        report.verdict,
        report.points.len(),
        report.tol
    );
    Ok(CommandOutput {
        files: vec![
            (
                format!("{}_invariance_{}.json", scn.name, variant.tag()),
                report.to_json(),
            ),
            (format!("{}_falsification.json", scn.name), evidence_json),
        ],
        exit_code,
        message,
    })
}

/// `check-lyapunov`: certificate report including the trajectory probe.
pub fn cmd_check_lyapunov(
    scn: &Scenario,
    variant: LyapunovVariant,
    tol: Option<f64>,
    seed: Option<u64>,
) -> Result<CommandOutput, ScenarioError> {
    let op = scn.to_operator()?;
    let f = scn.to_cusco()?;
    let pair = scn
        .to_pair()?
        .ok_or_else(|| ScenarioError::Command("check-lyapunov needs a lyapunov pair".into()))?;
    let mut opts = scn.certify_options();
    if let Some(t) = tol {
        opts.tol = Some(t);
    }
    if let Some(s) = seed {
        opts.seed = s;
    }
    let mut report = certify_lyapunov(&pair, &op, &f, variant, &opts)
        .map_err(|e| ScenarioError::Command(e.to_string()))?;
    // Trajectory probe from the scenario start; a violation falsifies the
    // pair regardless of the sampled margins.
    let x0 = scn.start_point(&op)?;
    if pair.v.domain_contains(&x0) {
        let cfg = scn.integrator_config(&op, &f, &x0)?;
        if let Ok(traj) = integrate(&op, &f, &cfg, &x0) {
            let chk = verify_along_trajectory(&pair, &traj, opts.tol.unwrap_or(0.0));
            report.worst_violation_t = Some(chk.worst_t);
            if !chk.passed && report.verdict == Verdict::Pass {
                report.verdict = Verdict::Fail;
                report.flags.push(format!(
                    "trajectory probe violated the decay inequality by {:.3e} at t={:.3}",
                    chk.max_violation, chk.worst_t
                ));
            }
        }
    }
    let exit_code = match report.verdict {
        Verdict::Pass => 0,
        _ => 1,
    };
    let message = format!(
        "{}: verdict {:?} over {} points (tol {:.1e})",
        variant.tag(),
        report.verdict,
        report.points.len(),
        report.tol
    );
    Ok(CommandOutput {
        files: vec![(
            format!("{}_lyapunov_{}.json", scn.name, variant.tag()),
            report.to_json(),
        )],
        exit_code,
        message,
    })
}

/// `sweep`: re-run the simulation over parameter values, one row each.
pub fn cmd_sweep(
    scn: &Scenario,
    param: &str,
    values: &[f64],
) -> Result<CommandOutput, ScenarioError> {
    if param != "h" {
        return Err(ScenarioError::Command(format!(
            "unsupported sweep parameter `{param}`"
        )));
    }
    if values.is_empty() {
        return Err(ScenarioError::Command(
            "sweep needs at least one value".into(),
        ));
    }
    let op = scn.to_operator()?;
    let f = scn.to_cusco()?;
    let x0 = scn.start_point(&op)?;
    let mut rows: Vec<SweepRow> = Vec::new();
    for &value in values {
        let mut modified = scn.clone();
        modified.integrator.h = value;
        let cfg = modified.integrator_config(&op, &f, &x0)?;
        let traj = integrate(&op, &f, &cfg, &x0)
            .map_err(|e| ScenarioError::Command(format!("h={value}: {e}")))?;
        let delta_prev = rows
            .last()
            .map(|prev: &SweepRow| (&prev.final_state - traj.final_state()).norm());
        rows.push(SweepRow {
            value,
            steps: traj.steps(),
            final_state: traj.final_state().clone(),
            delta_prev,
        });
    }
    Ok(CommandOutput {
        files: vec![(
            format!("{}_sweep_{}.csv", scn.name, param),
            sweep_csv(param, &rows),
        )],
        exit_code: 0,
        message: format!("swept {param} over {} values", values.len()),
    })
}
