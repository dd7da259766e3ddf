//! Chebyshev expansions of smoothed step filters.
//!
//! The filter centred at `c` with gap `Δ` and error target `η` is the
//! polynomial approximation of
//!
//! ```text
//! f(x) = ½ erfc(κ (x − c)),   κ = (2/Δ) erfc⁻¹(2η)
//! ```
//!
//! which is within `η` of the step `1[x < c]` outside `[c − Δ/2, c + Δ/2]`.
//! Series use the convention `P(x) = a_0/2 + Σ_{k≥1} a_k T_k(x)`.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};

/// Number of points used by the post-construction quality check.
pub const QUALITY_GRID: usize = 10_000;

/// Beyond `|κ(x − c)| > ERFC_CUTOFF` the target is 0 or 1 to double
/// precision.
pub(crate) const ERFC_CUTOFF: f64 = 7.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterMeta {
    pub c: f64,
    pub delta: f64,
    pub eta: f64,
    pub d: usize,
    pub kappa: f64,
    /// Number of Chebyshev–Gauss sample points used for the coefficients.
    pub samples: usize,
    /// Largest deviation from the exact step outside the gap, measured on a
    /// uniform grid.
    pub max_step_error: f64,
    /// Set when `max_step_error` exceeds `2η`, i.e. the degree is too small
    /// for the requested gap.
    pub quality_warning: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChebCoeffs {
    pub coeffs: Vec<f64>,
    pub meta: Option<FilterMeta>,
}

impl ChebCoeffs {
    /// A bare coefficient sequence without filter metadata.
    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        ChebCoeffs { coeffs, meta: None }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        eval_cheb(&self.coeffs, x)
    }
}

/// `κ = (2/Δ) erfc⁻¹(2η)`.
pub fn kappa(delta: f64, eta: f64) -> f64 {
    2.0 / delta * erfc_inv(2.0 * eta)
}

/// The smoothed step `½ erfc(κ(x − c))`.
pub fn erfc_step(x: f64, c: f64, kappa: f64) -> f64 {
    let z = kappa * (x - c);
    if z > ERFC_CUTOFF * 4.0 {
        0.0
    } else if z < -ERFC_CUTOFF * 4.0 {
        1.0
    } else {
        0.5 * erfc(z)
    }
}

/// Sample count for a degree-`d` expansion of an erfc step of steepness
/// `κ`. When `d` resolves the step this is `d + 1` and the result is the
/// interpolant at the Gauss nodes; otherwise enough samples are taken that
/// aliasing is below double precision and the result is the truncated
/// Chebyshev series.
pub fn sample_count(d: usize, kappa: f64) -> usize {
    let resolved = ((d as f64 + 13.0 * kappa) / 2.0).ceil() as usize + 16;
    (d + 1).max(resolved)
}

/// Chebyshev–Gauss nodes `x_j = cos(π (j + ½) / N)`, decreasing in `j`.
pub fn gauss_nodes(n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| (std::f64::consts::PI * (j as f64 + 0.5) / n as f64).cos())
        .collect()
}

/// `X_k = Σ_j v_j cos(π k (2j + 1) / (2N))` for `k = 0..N` via one complex
/// FFT of length `2N`.
pub(crate) fn dct2(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut buf: Vec<Complex<f64>> = values
        .iter()
        .chain(values.iter().rev())
        .map(|&v| Complex::new(v, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(2 * n).process(&mut buf);
    (0..n)
        .map(|k| {
            let phase = Complex::from_polar(1.0, -std::f64::consts::PI * k as f64 / (2 * n) as f64);
            0.5 * (phase * buf[k]).re
        })
        .collect()
}

/// Chebyshev coefficients `a_0..=a_d` of `f` from `n ≥ d + 1` Gauss-node
/// samples.
pub fn coefficients_from_samples(samples: &[f64], d: usize) -> Result<Vec<f64>> {
    let n = samples.len();
    if n < d + 1 {
        return Err(Error::Parameter(format!(
            "{n} samples cannot determine degree {d}"
        )));
    }
    let x = dct2(samples);
    Ok(x[..=d].iter().map(|v| 2.0 / n as f64 * v).collect())
}

fn check_filter_params(c: f64, delta: f64, eta: f64, d: usize) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Parameter(format!("gap width {delta} not in (0, 1)")));
    }
    if !(eta > 0.0 && eta < 0.5) {
        return Err(Error::Parameter(format!("error target {eta} not in (0, 1/2)")));
    }
    if d < 2 {
        return Err(Error::Parameter(format!("degree {d} < 2")));
    }
    if !(c - delta / 2.0 > -1.0 && c + delta / 2.0 < 1.0) {
        return Err(Error::Parameter(format!(
            "gap [{}, {}] extends outside (-1, 1)",
            c - delta / 2.0,
            c + delta / 2.0
        )));
    }
    Ok(())
}

/// Degree-`d` Chebyshev approximation of the smoothed step centred at `c`.
pub fn shifted_sign_cheb(c: f64, delta: f64, eta: f64, d: usize) -> Result<ChebCoeffs> {
    check_filter_params(c, delta, eta, d)?;
    let k = kappa(delta, eta);
    let n = sample_count(d, k);
    let samples: Vec<f64> = gauss_nodes(n).iter().map(|&x| erfc_step(x, c, k)).collect();
    let coeffs = coefficients_from_samples(&samples, d)?;
    let max_step_error = step_deviation(&coeffs, c, delta);
    let quality_warning = (max_step_error > 2.0 * eta).then(|| {
        format!(
            "degree {d} too small for gap {delta}: step error {max_step_error:.3e} exceeds 2η = {:.3e}",
            2.0 * eta
        )
    });
    if let Some(w) = &quality_warning {
        log::debug!("{w}");
    }
    Ok(ChebCoeffs {
        coeffs,
        meta: Some(FilterMeta {
            c,
            delta,
            eta,
            d,
            kappa: k,
            samples: n,
            max_step_error,
            quality_warning,
        }),
    })
}

/// Largest `|P(x) − 1[x < c]|` over a uniform grid, excluding the gap.
pub fn step_deviation(coeffs: &[f64], c: f64, delta: f64) -> f64 {
    (0..QUALITY_GRID)
        .map(|i| -1.0 + 2.0 * i as f64 / (QUALITY_GRID - 1) as f64)
        .filter(|&x| (x - c).abs() > delta / 2.0)
        .map(|x| {
            let step = if x < c { 1.0 } else { 0.0 };
            (clenshaw(coeffs, x) - step).abs()
        })
        .fold(0.0, f64::max)
}

/// One filter per grid point with shared `(Δ, η, d)`.
pub fn cheb_family(delta: f64, eta: f64, d: usize, grid: &[f64]) -> Result<Vec<ChebCoeffs>> {
    grid.iter()
        .map(|&c| shifted_sign_cheb(c, delta, eta, d))
        .collect()
}

/// Scan grid `-1 + iΔ` for `i = 1..=⌊(2 − 2Δ)/Δ⌋ + 1`.
pub fn scan_grid(delta: f64) -> Vec<f64> {
    let count = ((2.0 - 2.0 * delta) / delta + 1e-9).floor() as usize + 1;
    (1..=count).map(|i| -1.0 + i as f64 * delta).collect()
}

/// `a_0/2 + Σ a_k T_k(x)` by Clenshaw's recurrence.
pub fn eval_cheb(coeffs: &[f64], x: f64) -> Result<f64> {
    if !(x.abs() <= 1.0) {
        return Err(Error::Domain(format!("{x} is outside [-1, 1]")));
    }
    Ok(clenshaw(coeffs, x))
}

pub(crate) fn clenshaw(coeffs: &[f64], x: f64) -> f64 {
    let Some((&a0, rest)) = coeffs.split_first() else {
        return 0.0;
    };
    let (mut b1, mut b2) = (0.0, 0.0);
    for &a in rest.iter().rev() {
        let b = a + 2.0 * x * b1 - b2;
        b2 = b1;
        b1 = b;
    }
    a0 / 2.0 + x * b1 - b2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_t3() {
        let c = [0.0, 0.0, 0.0, 1.0];
        assert!((eval_cheb(&c, 0.5).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn value_at_one_is_coefficient_sum() {
        let c = [0.4, -0.3, 0.25, 0.1, -0.05];
        let want = 0.2 + c[1..].iter().sum::<f64>();
        assert!((eval_cheb(&c, 1.0).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn domain_error() {
        assert!(matches!(eval_cheb(&[1.0], 1.5), Err(Error::Domain(_))));
        assert!(matches!(eval_cheb(&[1.0], f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn dct_matches_direct_sum() {
        let v: Vec<f64> = (0..13).map(|i| ((i * 7) % 5) as f64 - 1.7).collect();
        let fast = dct2(&v);
        let n = v.len() as f64;
        for (k, fk) in fast.iter().enumerate() {
            let direct: f64 = v
                .iter()
                .enumerate()
                .map(|(j, x)| x * (std::f64::consts::PI * k as f64 * (2 * j + 1) as f64 / (2.0 * n)).cos())
                .sum();
            assert!((fk - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn centred_filter_is_odd_plus_half() {
        let f = shifted_sign_cheb(0.0, 0.1, 0.01, 200).unwrap();
        assert!((f.coeffs[0] - 1.0).abs() < 1e-12);
        for k in (2..=200).step_by(2) {
            assert!(f.coeffs[k].abs() < 1e-12, "a_{k} = {}", f.coeffs[k]);
        }
    }

    #[test]
    fn midpoint_value_is_half() {
        for c in [-0.6, -0.1, 0.35] {
            let f = shifted_sign_cheb(c, 0.1, 0.01, 600).unwrap();
            assert!((f.eval(c).unwrap() - 0.5).abs() < 1e-6);
        }
    }

    #[test]
    fn interpolates_at_nodes_when_resolved() {
        let (c, delta, eta, d) = (0.2, 0.5, 0.05, 300);
        let f = shifted_sign_cheb(c, delta, eta, d).unwrap();
        let meta = f.meta.as_ref().unwrap();
        assert_eq!(meta.samples, d + 1);
        for x in gauss_nodes(d + 1) {
            let want = erfc_step(x, c, meta.kappa);
            assert!((f.eval(x).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn log_degree_meets_grid_check() {
        let (delta, eta) = (0.1, 0.01);
        let d = ((2.0 / delta) * (1.0 / eta as f64).ln()).ceil() as usize;
        let c = 0.0;
        let f = shifted_sign_cheb(c, delta, eta, d).unwrap();
        for i in 0..QUALITY_GRID {
            let x = -1.0 + 2.0 * i as f64 / (QUALITY_GRID - 1) as f64;
            let p = f.eval(x).unwrap();
            if x <= c - delta / 2.0 {
                assert!(p >= 1.0 - 2.0 * eta && p <= 1.0 + 2.0 * eta, "x={x} p={p}");
            } else if x >= c + delta / 2.0 {
                assert!(p.abs() <= 2.0 * eta, "x={x} p={p}");
            }
        }
        assert!(f.meta.unwrap().quality_warning.is_none());
    }

    #[test]
    fn unresolved_filter_warns() {
        let f = shifted_sign_cheb(-0.5, 0.01, 0.01, 100).unwrap();
        let meta = f.meta.unwrap();
        assert!(meta.quality_warning.is_some());
        // truncated erfc expansion: order 0.1 to 0.5 error near the step
        assert!(meta.max_step_error > 0.1 && meta.max_step_error < 0.6);
    }

    #[test]
    fn parameter_errors() {
        assert!(shifted_sign_cheb(0.97, 0.1, 0.01, 50).is_err());
        assert!(shifted_sign_cheb(0.0, 0.0, 0.01, 50).is_err());
        assert!(shifted_sign_cheb(0.0, 0.1, 0.5, 50).is_err());
        assert!(shifted_sign_cheb(0.0, 0.1, 0.01, 1).is_err());
    }

    #[test]
    fn family_and_grid() {
        let fam = cheb_family(0.2, 0.05, 40, &[-0.5, 0.0, 0.5]).unwrap();
        assert_eq!(fam.len(), 3);
        for (delta, count) in [(0.1, 19), (0.25, 7), (1.0 / 400.0, 799)] {
            assert_eq!(scan_grid(delta).len(), count);
        }
    }

    #[test]
    fn family_is_monotone_in_centre() {
        let (delta, eta, d) = (0.1, 0.02, 250);
        let grid = scan_grid(delta);
        let fam = cheb_family(delta, eta, d, &grid).unwrap();
        for w in fam.windows(2) {
            for i in 0..=400 {
                let x = -1.0 + i as f64 / 200.0;
                assert!(w[0].eval(x).unwrap() <= w[1].eval(x).unwrap() + 4.0 * eta);
            }
        }
    }
}
