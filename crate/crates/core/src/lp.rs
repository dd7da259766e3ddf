//! Linear-prediction extrapolation of moment sequences.
//!
//! The tail is modelled as an autoregressive recurrence
//! `μ_n = −Σ_{j=1}^{p} a_j μ_{n−j}` with `p = n_fit`, fitted by ridge
//! regularized least squares on the last computed moments and then iterated
//! forward.

use ndarray::{Array1, Array2};
use ndarray_linalg::{EigVals, Solve, SVD};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chebyshev::{MomentSequence, MomentSource};
use crate::error::{Error, Result};

/// Roots with modulus above `1 + ROOT_TOL` are reflected into the unit disk.
pub const ROOT_TOL: f64 = 1e-10;

/// Default ridge parameter relative to `trace(AᵀA)`.
pub const DEFAULT_RELATIVE_RIDGE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpModel {
    /// `a_1..a_p`.
    pub ar_coeffs: Vec<f64>,
    pub n_fit: usize,
    /// First and last moment index predicted in the fit.
    pub fit_window: (usize, usize),
    /// Absolute ridge parameter used.
    pub ridge: f64,
    pub stabilized: bool,
    /// Number of roots moved by [`stabilize`].
    pub reflected_roots: usize,
    /// RMS of the fit residual over the window.
    pub residual_rms: f64,
    /// Characteristic roots after reflection, as `[re, im]`. Present only
    /// when [`stabilize`] moved a root; extrapolation then expands the
    /// sequence in these modes instead of iterating `ar_coeffs`, whose
    /// reconstruction from the roots is ill-conditioned at high order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roots: Option<Vec<[f64; 2]>>,
}

impl LpModel {
    /// Roots of `z^p + a_1 z^{p−1} + … + a_p`.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        match &self.roots {
            Some(r) => Ok(r.iter().map(|&[re, im]| Complex64::new(re, im)).collect()),
            None => poly_roots(&self.ar_coeffs),
        }
    }

    /// Largest root modulus.
    pub fn spectral_radius(&self) -> Result<f64> {
        Ok(self.roots()?.iter().map(|z| z.norm()).fold(0.0, f64::max))
    }
}

/// Fits an order-`n_fit` model on the last `n_fit` computed moments.
/// `ridge = None` selects `1e-10 · trace(AᵀA)`.
pub fn fit_lp(moments: &MomentSequence, n_fit: usize, ridge: Option<f64>) -> Result<LpModel> {
    fit_lp_window(moments, n_fit, ridge, n_fit)
}

/// As [`fit_lp`] with `window` equations instead of `n_fit`.
pub fn fit_lp_window(
    moments: &MomentSequence,
    n_fit: usize,
    ridge: Option<f64>,
    window: usize,
) -> Result<LpModel> {
    if n_fit == 0 || window == 0 {
        return Err(Error::Parameter("n_fit and the window must be positive".into()));
    }
    let last = moments.split_index();
    let mu = &moments.moments[..=last.min(moments.degree())];
    if mu.len() < n_fit + window || mu.len() < 2 * n_fit + 1 {
        return Err(Error::Parameter(format!(
            "{} moments are too few for n_fit = {n_fit} with a window of {window}",
            mu.len()
        )));
    }
    if let Some(r) = ridge {
        if !(r >= 0.0) {
            return Err(Error::Parameter("ridge must be non-negative".into()));
        }
    }
    let end = mu.len() - 1;
    let start = end + 1 - window;
    let a = Array2::from_shape_fn((window, n_fit), |(r, j)| mu[start + r - 1 - j]);
    let b = Array1::from_shape_fn(window, |r| -mu[start + r]);
    let trace: f64 = a.iter().map(|x| x * x).sum();
    let lambda = ridge.unwrap_or(DEFAULT_RELATIVE_RIDGE * trace);

    let (u, s, vt) = a.svd(true, true)?;
    let (u, vt) = (u.expect("requested"), vt.expect("requested"));
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let rank_tol = smax * f64::EPSILON * window.max(n_fit) as f64;
    let deficient = s.len() < n_fit || s.iter().any(|&x| x <= rank_tol);
    if lambda == 0.0 && deficient {
        return Err(Error::Numerical(
            "least-squares system is rank deficient; use a positive ridge".into(),
        ));
    }
    let mut coeffs = Array1::<f64>::zeros(n_fit);
    for (i, &si) in s.iter().enumerate() {
        let denom = si * si + lambda;
        if denom == 0.0 {
            continue;
        }
        let proj = u.column(i).dot(&b);
        coeffs.scaled_add(si * proj / denom, &vt.row(i));
    }
    let resid = a.dot(&coeffs) - &b;
    let residual_rms = (resid.iter().map(|x| x * x).sum::<f64>() / window as f64).sqrt();
    Ok(LpModel {
        ar_coeffs: coeffs.to_vec(),
        n_fit,
        fit_window: (start, end),
        ridge: lambda,
        stabilized: false,
        reflected_roots: 0,
        residual_rms,
        roots: None,
    })
}

fn poly_roots(ar: &[f64]) -> Result<Vec<Complex64>> {
    let p = ar.len();
    if p == 0 {
        return Ok(Vec::new());
    }
    let mut comp = Array2::<f64>::zeros((p, p));
    for (j, a) in ar.iter().enumerate() {
        comp[[0, j]] = -a;
    }
    for i in 1..p {
        comp[[i, i - 1]] = 1.0;
    }
    Ok(comp.eigvals()?.to_vec())
}

/// Monic polynomial coefficients (highest power first, leading 1 dropped)
/// from its roots.
fn poly_from_roots(roots: &[Complex64]) -> Vec<f64> {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
        for (i, ci) in c.iter().enumerate() {
            next[i] += ci;
            next[i + 1] -= ci * r;
        }
        c = next;
    }
    c[1..].iter().map(|z| z.re).collect()
}

/// Reflects roots outside the unit circle, `z → z/|z|²`, keeping their
/// phase. A model with no such roots is returned unchanged apart from the
/// flag.
pub fn stabilize(model: &LpModel) -> Result<LpModel> {
    let roots = model.roots()?;
    let mut moved = 0;
    let fixed: Vec<Complex64> = roots
        .iter()
        .map(|&z| {
            let m = z.norm();
            if m > 1.0 + ROOT_TOL {
                moved += 1;
                z / (m * m)
            } else {
                z
            }
        })
        .collect();
    let mut out = model.clone();
    out.stabilized = true;
    if moved > 0 {
        out.ar_coeffs = poly_from_roots(&fixed);
        out.reflected_roots += moved;
        out.roots = Some(fixed.iter().map(|z| [z.re, z.im]).collect());
    }
    Ok(out)
}

/// Writes the last `p` values as `Σ_i c_i z_i^r` and continues the sum for
/// `count` further indices. Repeated roots are split apart slightly so the
/// Vandermonde system stays solvable.
fn modal_extension(last: &[f64], roots: &[Complex64], count: usize) -> Result<Vec<f64>> {
    let p = roots.len();
    let mut z: Vec<Complex64> = roots.to_vec();
    for i in 1..p {
        for j in 0..i {
            if (z[i] - z[j]).norm() < 1e-12 {
                z[i] *= 1.0 - 1e-10;
            }
        }
    }
    let v = Array2::from_shape_fn((p, p), |(r, i)| z[i].powu(r as u32));
    let x = Array1::from_iter(last.iter().map(|&m| Complex64::new(m, 0.0)));
    let c = v.solve_into(x)?;
    let mut pw: Vec<Complex64> = z.iter().map(|zi| zi.powu(p as u32)).collect();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push(c.iter().zip(&pw).map(|(ci, zi)| ci * zi).sum::<Complex64>().re);
        for (w, zi) in pw.iter_mut().zip(&z) {
            *w *= zi;
        }
    }
    Ok(out)
}

/// Extends the sequence to index `d_target` with the model; the existing
/// entries are kept verbatim.
pub fn extrapolate(moments: &MomentSequence, model: &LpModel, d_target: usize) -> Result<MomentSequence> {
    let split = moments.degree();
    if d_target <= split {
        return Err(Error::Parameter(format!(
            "target degree {d_target} does not exceed the available degree {split}"
        )));
    }
    let p = model.ar_coeffs.len();
    if moments.moments.len() < p {
        return Err(Error::Parameter("sequence shorter than the model order".into()));
    }
    let mut out = moments.clone();
    out.moments.reserve(d_target - split);
    match &model.roots {
        Some(_) => {
            let roots = model.roots()?;
            let tail = modal_extension(&moments.moments[split + 1 - p..], &roots, d_target - split)?;
            out.moments.extend(tail);
        }
        None => {
            for n in split + 1..=d_target {
                let mu = &out.moments;
                let next = -model
                    .ar_coeffs
                    .iter()
                    .enumerate()
                    .map(|(j, a)| a * mu[n - 1 - j])
                    .sum::<f64>();
                out.moments.push(next);
            }
        }
    }
    out.source = MomentSource::Extrapolated {
        split: moments.split_index(),
    };
    Ok(out)
}
