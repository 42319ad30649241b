//! Projection kernels shared by the body types: Dykstra alternating
//! projections, simplex/cone least squares with active-set polish, and a
//! fixed-point ascent for support values of bodies that only expose a
//! projection oracle.

use crate::{Matrix, Vector};

/// Boxed projection map; Dykstra sweeps are assembled from these.
pub type Projector = Box<dyn Fn(&Vector) -> Vector>;

/// Runs a Dykstra sweep over owned projectors.
pub fn dykstra_boxed(
    projectors: &[Projector],
    x0: &Vector,
    tol: f64,
    max_sweeps: usize,
) -> (Vector, f64) {
    let refs: Vec<&dyn Fn(&Vector) -> Vector> = projectors
        .iter()
        .map(|p| p.as_ref() as &dyn Fn(&Vector) -> Vector)
        .collect();
    dykstra(&refs, x0, tol, max_sweeps)
}

/// Projects `x` onto the half-space `⟨n, z⟩ ≤ b`.
pub fn project_halfspace(n: &Vector, b: f64, x: &Vector) -> Vector {
    let nn = n.norm_squared();
    if nn == 0.0 {
        return x.clone();
    }
    let excess = (n.dot(x) - b) / nn;
    if excess > 0.0 {
        x - n * excess
    } else {
        x.clone()
    }
}

/// Dykstra's alternating projection onto the intersection of the given
/// projector sets. Returns the final iterate and the last sweep movement;
/// the caller decides whether the movement certifies convergence.
pub fn dykstra(
    projectors: &[&dyn Fn(&Vector) -> Vector],
    x0: &Vector,
    tol: f64,
    max_sweeps: usize,
) -> (Vector, f64) {
    let mut x = x0.clone();
    let mut corrections: Vec<Vector> = vec![Vector::zeros(x0.len()); projectors.len()];
    let mut movement = f64::INFINITY;
    for _ in 0..max_sweeps {
        movement = 0.0;
        for (proj, corr) in projectors.iter().zip(corrections.iter_mut()) {
            let y = &x + &*corr;
            let z = proj(&y);
            *corr = &y - &z;
            movement += (&z - &x).norm();
            x = z;
        }
        if movement <= tol {
            break;
        }
    }
    (x, movement)
}

/// Euclidean projection onto the probability simplex {λ ≥ 0, Σλ = 1}.
pub fn project_onto_simplex(y: &[f64]) -> Vec<f64> {
    let mut u: Vec<f64> = y.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).expect("finite weights"));
    let mut cumsum = 0.0;
    let mut rho = 0;
    let mut tau = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            rho = j + 1;
            tau = t;
        }
    }
    debug_assert!(rho > 0);
    y.iter().map(|&v| (v - tau).max(0.0)).collect()
}

fn columns_matrix(cols: &[Vector]) -> Matrix {
    let dim = cols[0].len();
    Matrix::from_fn(dim, cols.len(), |i, j| cols[j][i])
}

/// Projection of `x` onto the convex hull of `vertices`.
///
/// Projected gradient over simplex weights, then an active-set polish that
/// solves the equality-constrained least squares on the active vertices.
pub fn project_onto_hull(vertices: &[Vector], x: &Vector) -> Vector {
    assert!(!vertices.is_empty());
    if vertices.len() == 1 {
        return vertices[0].clone();
    }
    let v = columns_matrix(vertices);
    let gram = v.transpose() * &v;
    let step = 1.0 / gram.norm().max(1e-12);
    let k = vertices.len();
    let mut lambda = vec![1.0 / k as f64; k];
    let vtx = v.transpose() * x;
    let mut prev = f64::INFINITY;
    for _ in 0..20_000 {
        let l = Vector::from_column_slice(&lambda);
        let grad = &gram * &l - &vtx;
        let trial: Vec<f64> = (0..k).map(|i| lambda[i] - step * grad[i]).collect();
        lambda = project_onto_simplex(&trial);
        let change: f64 = lambda
            .iter()
            .zip(l.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if change <= 1e-14 && prev <= 1e-14 {
            break;
        }
        prev = change;
    }
    if let Some(z) = polish_hull_projection(vertices, x, &lambda) {
        return z;
    }
    &v * Vector::from_column_slice(&lambda)
}

/// Solves min ‖Σ μ_i v_i − x‖² with Σμ = 1 on the active vertex set and
/// verifies simplex KKT conditions; None when the polish is not clean.
fn polish_hull_projection(vertices: &[Vector], x: &Vector, lambda: &[f64]) -> Option<Vector> {
    let mut active: Vec<usize> = (0..lambda.len()).filter(|&i| lambda[i] > 1e-9).collect();
    if active.is_empty() {
        return None;
    }
    for _ in 0..lambda.len() + 1 {
        let cols: Vec<Vector> = active.iter().map(|&i| vertices[i].clone()).collect();
        let a = columns_matrix(&cols);
        let k = active.len();
        // KKT system of min ‖Aμ−x‖² s.t. 1ᵀμ = 1.
        let mut kkt = Matrix::zeros(k + 1, k + 1);
        kkt.view_mut((0, 0), (k, k))
            .copy_from(&(a.transpose() * &a));
        for i in 0..k {
            kkt[(i, k)] = 1.0;
            kkt[(k, i)] = 1.0;
        }
        let mut rhs = Vector::zeros(k + 1);
        rhs.rows_mut(0, k).copy_from(&(a.transpose() * x));
        rhs[k] = 1.0;
        let sol = kkt.lu().solve(&rhs)?;
        let mu: Vec<f64> = (0..k).map(|i| sol[i]).collect();
        if let Some(worst) = mu
            .iter()
            .enumerate()
            .filter(|(_, &m)| m < -1e-11)
            .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite"))
        {
            active.remove(worst.0);
            if active.is_empty() {
                return None;
            }
            continue;
        }
        let z = &a * Vector::from_column_slice(&mu);
        let r = x - &z;
        // Inactive vertices must not ascend ⟨v − z, x − z⟩ beyond tolerance.
        let scale = 1.0 + r.norm();
        let ok = vertices.iter().all(|v| (v - &z).dot(&r) <= 1e-8 * scale);
        return if ok { Some(z) } else { None };
    }
    None
}

/// Projection of `x` onto the finitely generated cone {Σ t_i g_i, t ≥ 0}.
pub fn project_onto_cone(generators: &[Vector], x: &Vector) -> Vector {
    if generators.is_empty() {
        return Vector::zeros(x.len());
    }
    if generators.len() == 1 {
        let g = &generators[0];
        let t = (g.dot(x) / g.norm_squared()).max(0.0);
        return g * t;
    }
    let g = columns_matrix(generators);
    let gram = g.transpose() * &g;
    let step = 1.0 / gram.norm().max(1e-12);
    let k = generators.len();
    let gtx = g.transpose() * x;
    let mut t = Vector::zeros(k);
    for _ in 0..20_000 {
        let grad = &gram * &t - &gtx;
        let mut next = &t - &(grad * step);
        for i in 0..k {
            next[i] = next[i].max(0.0);
        }
        let change = (&next - &t).norm();
        t = next;
        if change <= 1e-14 {
            break;
        }
    }
    if let Some(z) = polish_cone_projection(generators, x, t.as_slice()) {
        return z;
    }
    &g * t
}

/// Active-set polish of a cone projection: unconstrained least squares on
/// the support of `t`, validated against nonnegativity and KKT.
fn polish_cone_projection(generators: &[Vector], x: &Vector, t: &[f64]) -> Option<Vector> {
    let mut active: Vec<usize> = (0..t.len()).filter(|&i| t[i] > 1e-10).collect();
    for _ in 0..t.len() + 1 {
        let z = if active.is_empty() {
            Vector::zeros(x.len())
        } else {
            let cols: Vec<Vector> = active.iter().map(|&i| generators[i].clone()).collect();
            let a = columns_matrix(&cols);
            let svd = a.clone().svd(true, true);
            let coef = svd.solve(x, 1e-12).ok()?;
            if let Some(worst) = coef
                .iter()
                .enumerate()
                .filter(|(_, &c)| c < -1e-11)
                .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite"))
            {
                active.remove(worst.0);
                continue;
            }
            &a * coef
        };
        let r = x - &z;
        let scale = 1.0 + r.norm();
        let ok = generators
            .iter()
            .all(|gi| gi.dot(&r) <= 1e-8 * scale * gi.norm().max(1.0));
        return if ok { Some(z) } else { None };
    }
    None
}

/// Polishes an approximate polytope projection `z` of `x` by solving the
/// KKT system of the guessed active constraint set.
pub fn polish_polytope_projection(
    normals: &[Vector],
    offsets: &[f64],
    x: &Vector,
    z: &Vector,
) -> Option<Vector> {
    let m = normals.len();
    let scale = 1.0 + z.norm();
    let mut active: Vec<usize> = (0..m)
        .filter(|&i| (normals[i].dot(z) - offsets[i]).abs() <= 1e-6 * scale * normals[i].norm())
        .collect();
    for _ in 0..m + 1 {
        let cand = if active.is_empty() {
            x.clone()
        } else {
            let rows: Vec<Vector> = active.iter().map(|&i| normals[i].clone()).collect();
            let n = columns_matrix(&rows); // columns are active normals
            let gram = n.transpose() * &n;
            let mut resid = Vector::zeros(active.len());
            for (j, &i) in active.iter().enumerate() {
                resid[j] = normals[i].dot(x) - offsets[i];
            }
            let svd = gram.svd(true, true);
            let mu = svd.solve(&resid, 1e-12).ok()?;
            if let Some(worst) = mu
                .iter()
                .enumerate()
                .filter(|(_, &m)| m < -1e-11)
                .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite"))
            {
                active.remove(worst.0);
                continue;
            }
            x - &n * mu
        };
        let feasible = (0..m).all(|i| {
            normals[i].dot(&cand) - offsets[i] <= 1e-9 * scale * normals[i].norm().max(1.0)
        });
        return if feasible { Some(cand) } else { None };
    }
    None
}

/// Maximizes ⟨ξ, z⟩ over a convex set that only has a projection oracle, by
/// the averaged fixed-point iteration z ← Π(z + step·ξ). Returns `None`
/// when the iterates diverge (support value +∞).
pub fn support_by_ascent(
    project: &dyn Fn(&Vector) -> Vector,
    xi: &Vector,
    start: &Vector,
    scale: f64,
    max_iters: usize,
) -> Option<f64> {
    let xin = xi.norm();
    if xin == 0.0 {
        return Some(0.0);
    }
    let step = scale.max(1.0) / xin;
    let mut z = project(start);
    let bound = 1e9 * scale.max(1.0) + 1e9;
    let mut last = f64::NEG_INFINITY;
    for it in 0..max_iters {
        let z_next = project(&(&z + xi * step));
        let val = xi.dot(&z_next);
        if z_next.norm() > bound {
            return None;
        }
        let move_norm = (&z_next - &z).norm();
        z = z_next;
        if move_norm <= 1e-12 * step * xin {
            return Some(val);
        }
        // Unbounded directions keep ascending by ~step·‖ξ‖² per iteration.
        if it % 512 == 511 {
            if val - last < 1e-10 * (1.0 + val.abs()) {
                return Some(val);
            }
            last = val;
        }
    }
    Some(xi.dot(&z))
}

/// Least-norm convex weights λ with Σλ_i v_i = target, Σλ = 1, λ ≥ 0:
/// Dykstra projection of the origin onto the affine-set/orthant
/// intersection, which is exactly argmin Σλ_i².
pub fn least_norm_interpolating_weights(
    values: &[Vector],
    target: &Vector,
    tol: f64,
) -> Option<Vec<f64>> {
    let k = values.len();
    let dim = target.len();
    // Affine constraint matrix: rows are the interpolation equations plus
    // the normalization row.
    let mut a = Matrix::zeros(dim + 1, k);
    for (j, v) in values.iter().enumerate() {
        for i in 0..dim {
            a[(i, j)] = v[i];
        }
        a[(dim, j)] = 1.0;
    }
    let mut b = Vector::zeros(dim + 1);
    b.rows_mut(0, dim).copy_from(target);
    b[dim] = 1.0;
    let svd = a.clone().svd(true, true);
    let pinv_solve = |rhs: &Vector| svd.solve(rhs, 1e-12).ok();
    let project_affine = |lam: &Vector| -> Option<Vector> {
        let resid = &a * lam - &b;
        let corr = pinv_solve(&resid)?;
        Some(lam - corr)
    };
    let mut lam = Vector::zeros(k);
    let mut corr_affine = Vector::zeros(k);
    let mut corr_pos = Vector::zeros(k);
    for _ in 0..crate::numerics::DYKSTRA_MAX_SWEEPS {
        let y = &lam + &corr_affine;
        let z = project_affine(&y)?;
        corr_affine = &y - &z;
        let y2 = &z + &corr_pos;
        let mut w = y2.clone();
        for i in 0..k {
            w[i] = w[i].max(0.0);
        }
        corr_pos = &y2 - &w;
        let movement = (&w - &lam).norm();
        lam = w;
        if movement <= tol * 1e-2 {
            break;
        }
    }
    // Validate interpolation; infeasible targets never satisfy it.
    let resid = (&a * &lam - &b).norm();
    if resid <= 1e-6 {
        Some(lam.iter().copied().collect())
    } else {
        None
    }
}
