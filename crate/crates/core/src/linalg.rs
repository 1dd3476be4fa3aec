//! Small dense helpers shared across modules.

use ndarray::{Array1, Array2, ArrayBase, Data, Ix1, Ix2};

pub const POWER_ITERATION_TOL: f64 = 1e-9;
pub const POWER_ITERATION_MAX_ITERS: usize = 10_000;

pub fn norm<S: Data<Elem = f64>>(v: &ArrayBase<S, Ix1>) -> f64 {
    v.dot(v).sqrt()
}

/// Angle in `[0, π]` between two vectors, computed as
/// `atan2(‖y - proj_x y‖·‖x‖, ⟨x, y⟩)` which stays accurate near 0 and π.
/// Returns `None` if either vector is zero.
pub fn angle_between<S1, S2>(x: &ArrayBase<S1, Ix1>, y: &ArrayBase<S2, Ix1>) -> Option<f64>
where
    S1: Data<Elem = f64>,
    S2: Data<Elem = f64>,
{
    let nx = norm(x);
    let ny = norm(y);
    if nx == 0.0 || ny == 0.0 {
        return None;
    }
    let xh = x.mapv(|v| v / nx);
    let yh = y.mapv(|v| v / ny);
    let c = xh.dot(&yh);
    let rejection = &yh - &(&xh * c);
    Some(norm(&rejection).atan2(c))
}

/// `Bᵀu` as a sum of scaled rows. Row-major friendly, and rows with
/// `u_j = 0` (masked ReLUs, zero residuals) are skipped.
pub fn matvec_transpose<S1, S2>(b: &ArrayBase<S1, Ix2>, u: &ArrayBase<S2, Ix1>) -> Array1<f64>
where
    S1: Data<Elem = f64>,
    S2: Data<Elem = f64>,
{
    let mut out = Array1::zeros(b.ncols());
    for (row, &uj) in b.rows().into_iter().zip(u.iter()) {
        if uj != 0.0 {
            out.scaled_add(uj, &row);
        }
    }
    out
}

pub fn outer<S1, S2>(u: &ArrayBase<S1, Ix1>, w: &ArrayBase<S2, Ix1>) -> Array2<f64>
where
    S1: Data<Elem = f64>,
    S2: Data<Elem = f64>,
{
    let mut out = Array2::zeros((u.len(), w.len()));
    for (i, &ui) in u.iter().enumerate() {
        for (j, &wj) in w.iter().enumerate() {
            out[[i, j]] = ui * wj;
        }
    }
    out
}

/// Largest singular value by power iteration on `BᵀB`.
///
/// Stops when the eigen-residual `‖BᵀBv − λv‖` falls below
/// [`POWER_ITERATION_TOL`]`·λ` or after [`POWER_ITERATION_MAX_ITERS`] rounds.
pub fn spectral_norm<S: Data<Elem = f64>>(b: &ArrayBase<S, Ix2>) -> f64 {
    let cols = b.ncols();
    if cols == 0 || b.nrows() == 0 {
        return 0.0;
    }
    if b.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    // Deterministic start that is not aligned with coordinate axes.
    let mut v = Array1::from_shape_fn(cols, |i| 1.0 + 0.618_033_988_75 * ((i * 7 + 3) % 11) as f64);
    let n0 = norm(&v);
    v /= n0;
    let mut lambda = 0.0_f64;
    for _ in 0..POWER_ITERATION_MAX_ITERS {
        let bv = b.dot(&v);
        let w = matvec_transpose(b, &bv);
        let nw = norm(&w);
        if nw == 0.0 {
            // Start vector fell in the null space; the top singular
            // direction must be elsewhere, so restart on a coordinate axis.
            let j = (0..cols)
                .max_by(|&p, &q| norm(&b.column(p)).total_cmp(&norm(&b.column(q))))
                .unwrap_or(0);
            v = Array1::zeros(cols);
            v[j] = 1.0;
            continue;
        }
        lambda = v.dot(&w);
        // Eigen-residual test: the Rayleigh quotient error is quadratic in it.
        let residual = norm(&(&w - &(&v * lambda)));
        v = w / nw;
        if residual <= POWER_ITERATION_TOL * lambda.abs() {
            break;
        }
    }
    // One last Rayleigh quotient at the converged direction.
    let bv = b.dot(&v);
    bv.dot(&bv).max(lambda).sqrt()
}
