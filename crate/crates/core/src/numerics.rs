//! Shared numeric plumbing: tolerances, low-discrepancy sequences,
//! deterministic direction generators and small quadrature helpers.

use crate::Vector;

/// Tolerance for closed-form geometric primitives (balls, half-spaces,
/// singletons, finitely generated cones after polish).
pub const TAU_GEO: f64 = 1e-9;
/// Tolerance for iteratively projected bodies (Dykstra on intersections,
/// projected-gradient subproblems without an exact polish step).
pub const TAU_ITER: f64 = 1e-6;
/// Target accuracy of resolvent subproblem solves.
pub const TAU_RES: f64 = 1e-8;
/// Sweep cap for Dykstra-style alternating projections.
pub const DYKSTRA_MAX_SWEEPS: usize = 10_000;
/// Iteration cap for projected-gradient resolvent subproblems.
pub const PG_MAX_ITERS: usize = 100_000;

/// Spectral norm of a dense matrix (largest singular value).
pub fn op_norm(m: &crate::Matrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().singular_values().max()
}

/// Radical-inverse (van der Corput) value of `index` in the given base.
pub fn radical_inverse(mut index: usize, base: usize) -> f64 {
    let b = base as f64;
    let mut inv = 1.0 / b;
    let mut value = 0.0;
    while index > 0 {
        value += (index % base) as f64 * inv;
        index /= base;
        inv /= b;
    }
    value
}

const PRIMES: [usize; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// `i`-th Halton point in the unit cube [0,1)^dim, deterministic.
///
/// Index 0 is skipped internally (it is the all-zeros corner).
pub fn halton_point(i: usize, dim: usize) -> Vec<f64> {
    assert!(dim <= PRIMES.len(), "dimension above 16 not supported");
    (0..dim)
        .map(|d| radical_inverse(i + 1, PRIMES[d]))
        .collect()
}

/// Deterministic unit directions in R^dim: the signed coordinate frame
/// first, then Halton points pushed through Box-Muller and normalized.
pub fn unit_directions(dim: usize, count: usize) -> Vec<Vector> {
    let mut dirs = Vec::with_capacity(count);
    for i in 0..dim {
        for sign in [1.0, -1.0] {
            if dirs.len() >= count {
                return dirs;
            }
            let mut e = Vector::zeros(dim);
            e[i] = sign;
            dirs.push(e);
        }
    }
    let pairs = dim.div_ceil(2);
    let mut i = 0;
    while dirs.len() < count {
        let u = halton_point(i, 2 * pairs);
        let mut v = Vector::zeros(dim);
        for p in 0..pairs {
            let (z0, z1) = box_muller(u[2 * p], u[2 * p + 1]);
            v[2 * p] = z0;
            if 2 * p + 1 < dim {
                v[2 * p + 1] = z1;
            }
        }
        let n = v.norm();
        if n > 1e-12 {
            dirs.push(v / n);
        }
        i += 1;
    }
    dirs
}

/// Box-Muller transform of two uniforms in (0,1); zero-safe.
pub fn box_muller(u1: f64, u2: f64) -> (f64, f64) {
    let u1 = u1.max(1e-12);
    let r = (-2.0 * u1.ln()).sqrt();
    let a = 2.0 * std::f64::consts::PI * u2;
    (r * a.cos(), r * a.sin())
}

/// Composite Simpson quadrature of `f` over [a, b] with `panels` panels
/// (rounded up to even).
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    if (b - a).abs() == 0.0 {
        return 0.0;
    }
    let n = if panels.is_multiple_of(2) {
        panels
    } else {
        panels + 1
    };
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

/// Monotone bisection: largest `t` in [0, hi] with `pred(t)` true, assuming
/// `pred` is true near 0 and monotone. Used for horizon computations.
pub fn bisect_horizon<F: Fn(f64) -> bool>(pred: F, hi: f64, iters: usize) -> f64 {
    if pred(hi) {
        return hi;
    }
    let (mut lo, mut hi) = (0.0, hi);
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Ordered parallel map over a slice, honoring the `MF_THREADS` cap.
///
/// Falls back to a sequential map when one thread is requested or the input
/// is small. Output order always matches input order.
pub fn parallel_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync,
{
    let threads = thread_cap().min(items.len().max(1));
    if threads <= 1 || items.len() < 8 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(threads);
    let mut out: Vec<Option<U>> = Vec::with_capacity(items.len());
    out.resize_with(items.len(), || None);
    let slots: Vec<(usize, &[T])> = items.chunks(chunk).enumerate().collect();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (ci, part) in &slots {
            let f = &f;
            handles.push((
                *ci,
                scope.spawn(move || part.iter().map(f).collect::<Vec<_>>()),
            ));
        }
        for (ci, h) in handles {
            let vals = h.join().expect("worker panicked");
            for (j, v) in vals.into_iter().enumerate() {
                out[ci * chunk + j] = Some(v);
            }
        }
    });
    out.into_iter().map(|v| v.expect("slot filled")).collect()
}

fn thread_cap() -> usize {
    match std::env::var("MF_THREADS") {
        Ok(s) => s.trim().parse::<usize>().unwrap_or(1).max(1),
        Err(_) => std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
            .min(8),
    }
}
