//! Deterministic samplers used by the certification checkers.
//!
//! Boundary points come from projecting an enclosing sphere of directions
//! onto each piece; directions mix the coordinate frame with seed-jittered
//! Gaussian draws so that a scenario seed fully determines every sample.

use super::{lex_cmp, ClosedSet, ConvexBody};
use crate::numerics;
use crate::Vector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seeded unit directions: the coordinate frame first, then normalized
/// Gaussian vectors drawn from a ChaCha stream.
pub fn seeded_directions(dim: usize, count: usize, seed: u64) -> Vec<Vector> {
    let mut dirs = numerics::unit_directions(dim, count.min(2 * dim));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while dirs.len() < count {
        let mut v = Vector::zeros(dim);
        for i in 0..dim {
            let (u1, u2): (f64, f64) = (rng.random(), rng.random());
            let (z, _) = numerics::box_muller(u1, u2);
            v[i] = z;
        }
        let n = v.norm();
        if n > 1e-9 {
            dirs.push(v / n);
        }
    }
    dirs
}

/// Seeded points in the cube `center ± radius` (componentwise).
pub fn seeded_cube_points(center: &Vector, radius: f64, count: usize, seed: u64) -> Vec<Vector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    (0..count)
        .map(|_| {
            let mut p = center.clone();
            for i in 0..p.len() {
                p[i] += radius * (rng.random::<f64>() * 2.0 - 1.0);
            }
            p
        })
        .collect()
}

/// Low-discrepancy points in the ball `B(center, radius)`: Halton cube
/// points folded into the ball by radial rescale.
pub fn halton_ball_points(center: &Vector, radius: f64, count: usize) -> Vec<Vector> {
    let dim = center.len();
    let mut pts = Vec::with_capacity(count);
    let mut i = 0;
    while pts.len() < count {
        let h = numerics::halton_point(i, dim);
        let mut v = Vector::zeros(dim);
        for d in 0..dim {
            v[d] = 2.0 * h[d] - 1.0;
        }
        i += 1;
        let n = v.norm();
        if n <= 1.0 {
            pts.push(center + v * radius);
        } else if n > 0.0 {
            // Fold the cube corner back into the ball to avoid rejection
            // starvation in higher dimensions.
            pts.push(center + v * (radius / n * (1.0 - 1e-3)));
        }
    }
    pts
}

impl ConvexBody {
    /// A point inside the body to anchor samplers and ascent starts.
    pub fn center_hint(&self) -> Vector {
        match self {
            ConvexBody::Ball { center, .. } => center.clone(),
            ConvexBody::VPolytope { vertices } => {
                let mut c = Vector::zeros(vertices[0].len());
                for v in vertices {
                    c += v;
                }
                c / vertices.len() as f64
            }
            ConvexBody::Translate { base, shift } => base.center_hint() + shift,
            _ => self
                .project(&Vector::zeros(self.dim()))
                .unwrap_or_else(|_| Vector::zeros(self.dim())),
        }
    }

    /// Boundary-biased samples: rays from an interior anchor bisected
    /// against the membership oracle (uniform angular coverage), topped up
    /// with far-point projections that hit the extreme structure (vertices
    /// and corners attract projections of distant points).
    pub fn boundary_samples(&self, count: usize, seed: u64) -> Vec<Vector> {
        let c = self.center_hint();
        let reach = self.bounding_radius().unwrap_or(c.norm() + 1.0) + 1.0;
        let mut out: Vec<Vector> = Vec::with_capacity(count);
        let push = |p: Vector, out: &mut Vec<Vector>| {
            if out.len() < count && out.iter().all(|q| (q - &p).norm() > 1e-10) {
                out.push(p);
            }
        };
        // Bisect against exact membership so samples never land outside.
        let inside = |p: &Vector| self.contains(p, 0.0);
        let corner_quota = count / 4;
        for (i, d) in seeded_directions(self.dim(), count, seed)
            .into_iter()
            .enumerate()
        {
            if i < corner_quota {
                let far = &c + &d * (4.0 * reach);
                push(self.project(&far).expect("validated body"), &mut out);
            }
            // Ray cast: largest t with c + t·d in the body.
            let mut lo = 0.0;
            let mut hi = 2.0 * reach;
            if inside(&(&c + &d * hi)) {
                push(&c + &d * hi, &mut out);
                continue;
            }
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if inside(&(&c + &d * mid)) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            push(&c + &d * lo, &mut out);
        }
        out
    }
}

impl ClosedSet {
    /// Boundary-biased samples over all pieces, deduplicated and sorted for
    /// determinism, then capped at `count`.
    pub fn boundary_samples(&self, count: usize, seed: u64) -> Vec<Vector> {
        let per_piece = count.div_ceil(self.pieces().len());
        let mut all: Vec<Vector> = Vec::new();
        for (k, p) in self.pieces().iter().enumerate() {
            for s in p.boundary_samples(per_piece, seed.wrapping_add(k as u64)) {
                if all.iter().all(|q| (q - &s).norm() > 1e-10) {
                    all.push(s);
                }
            }
        }
        all.sort_by(lex_cmp);
        all.truncate(count);
        all
    }

    /// Ambient samples around the set (inflated bounding region); used to
    /// probe hypothesis conditions over dom A.
    pub fn ambient_samples(&self, count: usize, seed: u64) -> Vec<Vector> {
        let dim = self.dim();
        let mut center = Vector::zeros(dim);
        for p in self.pieces() {
            center += p.center_hint();
        }
        center /= self.pieces().len() as f64;
        let radius = self.bounding_radius().unwrap_or(center.norm() + 1.0) + 1.0;
        seeded_cube_points(&center, 1.5 * radius, count, seed)
    }
}
