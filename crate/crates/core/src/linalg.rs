//! Small dense linear-algebra kernels used by the decomposition and
//! regression modules: Cholesky solves, thin Householder QR, and a one-sided
//! Jacobi SVD for the short-fat projected matrices produced by the randomized
//! range finder.

use crate::error::{Error, Result};
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;

/// Cholesky factorization of a symmetric positive-definite matrix.
///
/// Returns the lower-triangular factor L with A = L·Lᵀ.
pub fn cholesky(a: &Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Parameter("cholesky: matrix not square".into()));
    }
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[[i, j]];
            for k in 0..j {
                sum -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return Err(Error::Numeric(format!(
                        "cholesky pivot {sum:.3e} at row {i}: matrix not positive definite"
                    )));
                }
                l[[i, j]] = sum.sqrt();
            } else {
                l[[i, j]] = sum / l[[j, j]];
            }
        }
    }
    Ok(l)
}

/// Solve A·x = b for symmetric positive-definite A via Cholesky.
pub fn solve_spd(a: &Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>> {
    let l = cholesky(a)?;
    Ok(cholesky_solve(&l, b))
}

/// Solve L·Lᵀ·x = b given the lower Cholesky factor.
pub fn cholesky_solve(l: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut y = b.clone();
    for i in 0..n {
        for k in 0..i {
            let t = y[k];
            y[i] -= l[[i, k]] * t;
        }
        y[i] /= l[[i, i]];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            let t = y[k];
            y[i] -= l[[k, i]] * t;
        }
        y[i] /= l[[i, i]];
    }
    y
}

/// Diagonal of A⁻¹ for symmetric positive-definite A.
pub fn spd_inverse_diag(a: &Array2<f64>) -> Result<Array1<f64>> {
    let n = a.nrows();
    let l = cholesky(a)?;
    let mut diag = Array1::<f64>::zeros(n);
    let mut e = Array1::<f64>::zeros(n);
    for j in 0..n {
        e.fill(0.0);
        e[j] = 1.0;
        let col = cholesky_solve(&l, &e);
        diag[j] = col[j];
    }
    Ok(diag)
}

/// Thin Q factor of the QR decomposition of an m×s matrix with m ≥ s,
/// computed with Householder reflections. The returned Q always has
/// orthonormal columns, also when the input is rank deficient.
pub fn householder_q(a: &Array2<f64>) -> Array2<f64> {
    let (m, s) = a.dim();
    assert!(m >= s, "householder_q expects a tall matrix, got {m}x{s}");
    let mut r = a.clone();
    // reflector k is stored in column k of `vs`, rows k..m
    let mut vs = Array2::<f64>::zeros((m, s));
    for k in 0..s {
        let mut norm = 0.0;
        for i in k..m {
            norm += r[[i, k]] * r[[i, k]];
        }
        let norm = norm.sqrt();
        if norm <= f64::EPSILON {
            continue; // zero column, identity reflector
        }
        let alpha = if r[[k, k]] >= 0.0 { -norm } else { norm };
        let mut vnorm = 0.0;
        for i in k..m {
            let v = if i == k { r[[i, k]] - alpha } else { r[[i, k]] };
            vs[[i, k]] = v;
            vnorm += v * v;
        }
        let vnorm = vnorm.sqrt();
        if vnorm <= f64::EPSILON {
            continue;
        }
        for i in k..m {
            vs[[i, k]] /= vnorm;
        }
        // apply reflector to the trailing block of R
        for j in k..s {
            let mut dot = 0.0;
            for i in k..m {
                dot += vs[[i, k]] * r[[i, j]];
            }
            for i in k..m {
                r[[i, j]] -= 2.0 * dot * vs[[i, k]];
            }
        }
    }
    // accumulate Q = H_0 · H_1 ··· H_{s-1} · I_thin
    let mut q = Array2::<f64>::zeros((m, s));
    for j in 0..s {
        q[[j, j]] = 1.0;
    }
    for k in (0..s).rev() {
        for j in 0..s {
            let mut dot = 0.0;
            for i in k..m {
                dot += vs[[i, k]] * q[[i, j]];
            }
            if dot != 0.0 {
                for i in k..m {
                    q[[i, j]] -= 2.0 * dot * vs[[i, k]];
                }
            }
        }
    }
    q
}

/// One-sided Jacobi SVD of a tall matrix G (n×s, n ≥ s).
///
/// Rotates column pairs until all are mutually orthogonal: G·W = U'·Σ with
/// orthogonal W. Returns (column norms σ, U' with unit columns where σ > 0,
/// accumulated W), all unsorted. Columns with σ = 0 are left as zero vectors
/// in U'.
pub struct JacobiSvd {
    pub sigma: Vec<f64>,
    pub u: Array2<f64>,
    pub w: Array2<f64>,
}

pub fn one_sided_jacobi(g: &Array2<f64>, max_sweeps: usize) -> JacobiSvd {
    let (n, s) = g.dim();
    let mut g = g.clone();
    let mut w = Array2::<f64>::eye(s);
    let tol = 1e-14;
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for p in 0..s {
            for q in (p + 1)..s {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = 0.0;
                for i in 0..n {
                    let gp = g[[i, p]];
                    let gq = g[[i, q]];
                    app += gp * gp;
                    aqq += gq * gq;
                    apq += gp * gq;
                }
                if apq * apq <= tol * tol * app * aqq || app == 0.0 || aqq == 0.0 {
                    continue;
                }
                let zeta = (aqq - app) / (2.0 * apq);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                for i in 0..n {
                    let gp = g[[i, p]];
                    let gq = g[[i, q]];
                    g[[i, p]] = c * gp - sn * gq;
                    g[[i, q]] = sn * gp + c * gq;
                }
                for i in 0..s {
                    let wp = w[[i, p]];
                    let wq = w[[i, q]];
                    w[[i, p]] = c * wp - sn * wq;
                    w[[i, q]] = sn * wp + c * wq;
                }
                rotated = true;
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sigma = vec![0.0; s];
    let mut u = Array2::<f64>::zeros((n, s));
    for j in 0..s {
        let norm: f64 = (0..n).map(|i| g[[i, j]] * g[[i, j]]).sum::<f64>().sqrt();
        sigma[j] = norm;
        if norm > 0.0 {
            for i in 0..n {
                u[[i, j]] = g[[i, j]] / norm;
            }
        }
    }
    JacobiSvd { sigma, u, w }
}

/// Replace zero columns of `basis` (n×k, other columns orthonormal) with
/// random unit vectors orthogonal to every other column.
pub fn complete_orthonormal_columns<R: Rng>(basis: &mut Array2<f64>, rng: &mut R) {
    let (n, k) = basis.dim();
    for j in 0..k {
        let norm: f64 = basis.column(j).iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.5 {
            continue;
        }
        loop {
            let mut cand: Array1<f64> = Array1::from_iter((0..n).map(|_| rng.sample(StandardNormal)));
            // two MGS passes for orthogonality against every populated column
            for _ in 0..2 {
                for other in 0..k {
                    if other == j {
                        continue;
                    }
                    let dot: f64 = basis
                        .column(other)
                        .iter()
                        .zip(cand.iter())
                        .map(|(a, b)| a * b)
                        .sum();
                    if dot != 0.0 {
                        for i in 0..n {
                            cand[i] -= dot * basis[[i, other]];
                        }
                    }
                }
            }
            let cnorm: f64 = cand.iter().map(|v| v * v).sum::<f64>().sqrt();
            if cnorm > 1e-6 {
                for i in 0..n {
                    basis[[i, j]] = cand[i] / cnorm;
                }
                break;
            }
        }
    }
}

/// Max |QᵀQ − I| entry, used by orthonormality assertions.
pub fn orthonormality_defect(q: &Array2<f64>) -> f64 {
    let gram = q.t().dot(q);
    let k = gram.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..k {
        for j in 0..k {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[[i, j]] - target).abs());
        }
    }
    worst
}
