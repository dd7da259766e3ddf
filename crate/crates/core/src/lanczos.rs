//! Restarted Lanczos for the lowest eigenpair of a Hermitian operator given
//! only as a matrix-vector product.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};

use crate::error::{Error, Result};
use crate::linalg::{C64, ZERO};

#[derive(Clone, Debug)]
pub struct LanczosConfig {
    /// Krylov basis size per restart.
    pub krylov_dim: usize,
    pub max_restarts: usize,
    /// Target residual `‖Hy − θy‖`.
    pub tol: f64,
}

impl Default for LanczosConfig {
    fn default() -> Self {
        LanczosConfig {
            krylov_dim: 40,
            max_restarts: 200,
            tol: 1e-11,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LanczosResult {
    pub value: f64,
    pub vector: Array1<C64>,
    pub residual: f64,
    pub converged: bool,
    pub matvecs: usize,
}

pub(crate) fn cdot(a: &Array1<C64>, b: &Array1<C64>) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn vnorm(a: &Array1<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Lowest eigenpair reachable from `start`. The result lies in the Krylov
/// space of `start`, so for a degenerate lowest level it is the normalized
/// projection of `start` onto that eigenspace.
pub fn lowest_eigenpair<F>(mut matvec: F, start: &Array1<C64>, cfg: &LanczosConfig) -> Result<LanczosResult>
where
    F: FnMut(&Array1<C64>) -> Array1<C64>,
{
    let dim = start.len();
    let n0 = vnorm(start);
    if dim == 0 || n0 == 0.0 || !n0.is_finite() {
        return Err(Error::Parameter("Lanczos start vector is zero".into()));
    }
    let m = cfg.krylov_dim.clamp(1, dim);
    let mut x = start / C64::new(n0, 0.0);
    let mut matvecs = 0;
    let mut best = None;
    for _ in 0..=cfg.max_restarts {
        let mut basis: Vec<Array1<C64>> = Vec::with_capacity(m);
        let mut alpha = Vec::with_capacity(m);
        let mut beta: Vec<f64> = Vec::with_capacity(m);
        basis.push(x.clone());
        let mut last_beta;
        loop {
            let j = basis.len() - 1;
            let mut w = matvec(&basis[j]);
            matvecs += 1;
            let a = cdot(&basis[j], &w).re;
            alpha.push(a);
            for _ in 0..2 {
                for v in &basis {
                    let c = cdot(v, &w);
                    w.scaled_add(-c, v);
                }
            }
            let b = vnorm(&w);
            last_beta = b;
            if basis.len() == m || b <= 1e-14 * a.abs().max(1.0) {
                break;
            }
            beta.push(b);
            basis.push(w / C64::new(b, 0.0));
        }
        let k = alpha.len();
        let mut t = Array2::<f64>::zeros((k, k));
        for i in 0..k {
            t[[i, i]] = alpha[i];
            if i + 1 < k {
                t[[i, i + 1]] = beta[i];
                t[[i + 1, i]] = beta[i];
            }
        }
        let (evals, evecs) = t.eigh(UPLO::Upper)?;
        let theta = evals[0];
        let s = evecs.column(0);
        let mut y = Array1::<C64>::from_elem(dim, ZERO);
        for (v, &c) in basis.iter().zip(s.iter()) {
            y.scaled_add(C64::new(c, 0.0), v);
        }
        let ny = vnorm(&y);
        y /= C64::new(ny, 0.0);
        let residual = (last_beta * s[k - 1]).abs();
        let converged = residual <= cfg.tol || k < m;
        best = Some(LanczosResult {
            value: theta,
            vector: y.clone(),
            residual,
            converged,
            matvecs,
        });
        if converged {
            break;
        }
        x = y;
    }
    let mut res = best.expect("at least one restart runs");
    // Report the true residual rather than the Lanczos estimate.
    let hy = matvec(&res.vector);
    res.matvecs += 1;
    let mut r = hy;
    r.scaled_add(C64::new(-res.value, 0.0), &res.vector);
    res.residual = vnorm(&r);
    res.converged = res.residual <= cfg.tol.max(1e-13);
    Ok(res)
}
