//! Report and artifact formats: certificate JSON, trajectory CSV and sweep
//! tables. Everything here is deterministic for a fixed scenario seed, so
//! reruns produce byte-identical files.

use crate::integrator::Trajectory;
use crate::Vector;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// Margin record of one sampled point; `margin ≤ tol` means the criterion
/// holds there. Margins are clamped to ±1e30 so the JSON stays numeric.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointMargin {
    pub x: Vec<f64>,
    pub margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_xi: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_v: Option<Vec<f64>>,
}

/// Results of the standing-hypothesis probes run before certification.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct HypothesisChecks {
    /// Projections of dom-A points onto S stay in S ∩ dom A.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub condition_star: Option<bool>,
    /// Sampled S ⊂ dom A (weak criteria) or dom V ⊂ dom A (Lyapunov).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subset_domain: Option<bool>,
    /// Bound on ‖A°‖ used by truncated criteria.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_bound: Option<f64>,
    /// True when the bound was estimated by sampling rather than supplied.
    pub m_bound_estimated: bool,
}

/// Sampled certificate: margins, verdict and the hypothesis probes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateReport {
    pub scenario: String,
    pub variant: String,
    pub tol: f64,
    pub points: Vec<PointMargin>,
    pub verdict: Verdict,
    pub hypothesis_checks: HypothesisChecks,
    pub seed: u64,
    /// Caveats: sampled cones, no active normals, inconclusive reasons.
    pub flags: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_x0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_violation_t: Option<f64>,
    /// Horizon of the local criterion, when a local ball was supplied.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub local_horizon: Option<f64>,
}

impl CertificateReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Points whose margin exceeds the tolerance.
    pub fn witnesses(&self) -> Vec<&PointMargin> {
        self.points.iter().filter(|p| p.margin > self.tol).collect()
    }
}

/// Clamp for report margins so ±∞ never reaches the JSON encoder.
pub fn clamp_margin(m: f64) -> f64 {
    m.clamp(-1e30, 1e30)
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Trajectory CSV: header `t,x1..xn,v1..vn,sel1..seln`, one row per grid
/// point at 17 significant digits. The terminal row repeats the last
/// velocity and selection (the grid has one more point than steps).
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let n = traj.states[0].len();
    let mut out = String::new();
    out.push('t');
    for i in 1..=n {
        out.push_str(&format!(",x{i}"));
    }
    for i in 1..=n {
        out.push_str(&format!(",v{i}"));
    }
    for i in 1..=n {
        out.push_str(&format!(",sel{i}"));
    }
    out.push('\n');
    let last = traj.velocities.len().saturating_sub(1);
    for (k, t) in traj.times.iter().enumerate() {
        let row_idx = k.min(last);
        out.push_str(&fmt17(*t));
        let push_vec = |out: &mut String, v: &Vector| {
            for c in v.iter() {
                out.push(',');
                out.push_str(&fmt17(*c));
            }
        };
        push_vec(&mut out, &traj.states[k]);
        if traj.velocities.is_empty() {
            for _ in 0..2 * n {
                out.push_str(",0.0000000000000000e0");
            }
        } else {
            push_vec(&mut out, &traj.velocities[row_idx]);
            push_vec(&mut out, &traj.selections[row_idx]);
        }
        out.push('\n');
    }
    out
}

/// Summary emitted beside a trajectory CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub scenario: String,
    pub h: f64,
    pub horizon: f64,
    pub steps: usize,
    pub final_state: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_set_distance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_set_distance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refined_final: Option<Vec<f64>>,
    pub seed: u64,
}

impl SimulationSummary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}

/// One row of a parameter sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    pub steps: usize,
    pub final_state: Vector,
    /// Distance of this final state to the previous (finer-reference) row.
    pub delta_prev: Option<f64>,
}

/// Consolidated sweep table CSV.
pub fn sweep_csv(param: &str, rows: &[SweepRow]) -> String {
    let n = rows.first().map(|r| r.final_state.len()).unwrap_or(0);
    let mut out = format!("{param},steps");
    for i in 1..=n {
        out.push_str(&format!(",final_x{i}"));
    }
    out.push_str(",delta_prev\n");
    for r in rows {
        out.push_str(&fmt17(r.value));
        out.push_str(&format!(",{}", r.steps));
        for c in r.final_state.iter() {
            out.push(',');
            out.push_str(&fmt17(*c));
        }
        match r.delta_prev {
            Some(d) => {
                out.push(',');
                out.push_str(&fmt17(d));
            }
            None => out.push_str(",-"),
        }
        out.push('\n');
    }
    out
}
