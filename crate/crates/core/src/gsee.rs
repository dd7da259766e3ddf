//! Ground-state energy from Chebyshev moments.
//!
//! For a filter `P_c` centred at `c` the cumulative function
//!
//! ```text
//! C(c) = a_0/2 · μ_0 + Σ_{k≥1} a_k μ_k = ⟨ψ|P_c(H)|ψ⟩
//! ```
//!
//! jumps by `|⟨ψ|λ_i⟩|²` at every eigenvalue. Scanning `c` and picking the
//! point where `C` is closest to `χ²/2` locates the lowest eigenvalue with
//! weight `χ²`.
//!
//! Scanning thousands of centres at high degree would cost one coefficient
//! transform per centre. Instead the moments are transformed once to the
//! Gauss nodes, `g_j = μ_0 + 2 Σ_k μ_k cos(kθ_j)`, after which
//! `C(c) = (1/N) Σ_j f_c(x_j) g_j` exactly, and only the nodes inside the
//! erfc transition need the filter evaluated.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::chebyshev::MomentSequence;
use crate::error::{Error, Result};
use crate::filter::{self, erfc_step, ChebCoeffs, ERFC_CUTOFF};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GseeResult {
    /// `[c* − Δ/2, c* + Δ/2]` in normalized units.
    pub interval: (f64, f64),
    pub c_star: f64,
    /// `(x, C(x))` over the scan.
    pub c_trace: Vec<(f64, f64)>,
    pub chi_used: f64,
    pub eta: f64,
    pub delta: f64,
    pub degree: usize,
    /// Multiply normalized energies by this to get model units.
    pub scale_back: f64,
}

impl GseeResult {
    pub fn energy(&self) -> f64 {
        self.c_star
    }

    pub fn energy_raw(&self) -> f64 {
        self.c_star * self.scale_back
    }

    pub fn contains(&self, e: f64) -> bool {
        self.interval.0 <= e && e <= self.interval.1
    }
}

/// Default error target for overlap `chi`: `η = χ²/8`.
pub fn default_eta(chi: f64) -> f64 {
    chi * chi / 8.0
}

/// `C(c)` for every filter in `family`, by direct dot products.
pub fn cumulative(moments: &MomentSequence, family: &[ChebCoeffs]) -> Result<Vec<(f64, f64)>> {
    family
        .iter()
        .map(|f| {
            let x = f
                .meta
                .as_ref()
                .map(|m| m.c)
                .ok_or_else(|| Error::Parameter("filter without a centre".into()))?;
            Ok((x, cumulative_value(moments, &f.coeffs)?))
        })
        .collect()
}

/// `a_0/2 · μ_0 + Σ a_k μ_k`.
pub fn cumulative_value(moments: &MomentSequence, coeffs: &[f64]) -> Result<f64> {
    let mu = &moments.moments;
    if coeffs.len() > mu.len() {
        return Err(Error::Parameter(format!(
            "filter degree {} exceeds moment degree {}",
            coeffs.len().saturating_sub(1),
            mu.len().saturating_sub(1)
        )));
    }
    let Some((&a0, rest)) = coeffs.split_first() else {
        return Ok(0.0);
    };
    Ok(a0 / 2.0 * mu[0] + rest.iter().zip(&mu[1..]).map(|(a, m)| a * m).sum::<f64>())
}

/// Cumulative function of all filters sharing `(Δ, η, d)` on one moment
/// sequence, evaluated at arbitrary centres.
pub struct FastScan {
    /// Gauss nodes in increasing order.
    xs: Vec<f64>,
    /// `prefix[i] = Σ_{i' < i} g[i']` in the same order.
    prefix: Vec<f64>,
    g: Vec<f64>,
    kappa: f64,
    n: usize,
}

impl FastScan {
    pub fn new(moments: &MomentSequence, delta: f64, eta: f64, d: usize) -> Result<Self> {
        if d > moments.degree() {
            return Err(Error::Parameter(format!(
                "degree {d} exceeds moment degree {}",
                moments.degree()
            )));
        }
        let kappa = filter::kappa(delta, eta);
        let n = filter::sample_count(d, kappa);
        // G_j = Σ_k w_k μ_k e^{iπk/(2N)} e^{2πi kj/(2N)}, g_j = Re G_j.
        let mut buf = vec![Complex::new(0.0, 0.0); 2 * n];
        for (k, &mu) in moments.moments[..=d].iter().enumerate() {
            let w = if k == 0 { 1.0 } else { 2.0 };
            let phase = std::f64::consts::PI * k as f64 / (2 * n) as f64;
            buf[k] = Complex::from_polar(w * mu, phase);
        }
        FftPlanner::new().plan_fft_inverse(2 * n).process(&mut buf);
        let nodes = filter::gauss_nodes(n);
        let xs: Vec<f64> = nodes.into_iter().rev().collect();
        let g: Vec<f64> = (0..n).rev().map(|j| buf[j].re).collect();
        let mut prefix = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        prefix.push(acc);
        for v in &g {
            acc += v;
            prefix.push(acc);
        }
        Ok(FastScan {
            xs,
            prefix,
            g,
            kappa,
            n,
        })
    }

    /// `C(c)` for the filter centred at `c`.
    pub fn value(&self, c: f64) -> f64 {
        let width = ERFC_CUTOFF / self.kappa;
        let lo = self.xs.partition_point(|&x| x < c - width);
        let hi = self.xs.partition_point(|&x| x <= c + width);
        let window: f64 = (lo..hi)
            .map(|i| erfc_step(self.xs[i], c, self.kappa) * self.g[i])
            .sum();
        (self.prefix[lo] + window) / self.n as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GseeOptions {
    pub chi: f64,
    pub delta: f64,
    pub degree: usize,
    /// Defaults to `χ²/8`.
    pub eta: Option<f64>,
    pub scale_back: f64,
}

fn check_chi(chi: f64) -> Result<()> {
    if !(chi > 0.0 && chi <= 1.0) {
        return Err(Error::Parameter(format!("overlap {chi} not in (0, 1]")));
    }
    Ok(())
}

/// Grid scan with the default `η = χ²/8`.
pub fn estimate_energy(moments: &MomentSequence, chi: f64, delta: f64, d: usize) -> Result<GseeResult> {
    estimate_energy_with(
        moments,
        &GseeOptions {
            chi,
            delta,
            degree: d,
            eta: None,
            scale_back: 1.0,
        },
    )
}

/// Scans `c ∈ {−1 + Δ, …, 1 − Δ}` and returns the interval around the
/// centre whose `C(c)` is closest to `χ²/2`.
pub fn estimate_energy_with(moments: &MomentSequence, opts: &GseeOptions) -> Result<GseeResult> {
    check_chi(opts.chi)?;
    let eta = opts.eta.unwrap_or_else(|| default_eta(opts.chi));
    let delta = opts.delta;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Parameter(format!("gap width {delta} not in (0, 1)")));
    }
    if !(eta > 0.0 && eta < 0.5) {
        return Err(Error::Parameter(format!("error target {eta} not in (0, 1/2)")));
    }
    if opts.degree < 2 {
        return Err(Error::Parameter("degree must be at least 2".into()));
    }
    let scan = FastScan::new(moments, delta, eta, opts.degree)?;
    let threshold = opts.chi * opts.chi / 2.0;
    let c_trace: Vec<(f64, f64)> = filter::scan_grid(delta)
        .into_iter()
        .map(|c| (c, scan.value(c)))
        .collect();
    let above = c_trace.iter().filter(|(_, v)| *v >= threshold).count();
    if above == 0 || above == c_trace.len() {
        return Err(Error::OutsideWindow(format!(
            "C(x) stays {} the threshold {threshold:.4} on the whole grid",
            if above == 0 { "below" } else { "above" }
        )));
    }
    let (c_star, _) = c_trace
        .iter()
        .copied()
        .min_by(|a, b| (a.1 - threshold).abs().total_cmp(&(b.1 - threshold).abs()))
        .expect("grid is non-empty");
    Ok(GseeResult {
        interval: (c_star - delta / 2.0, c_star + delta / 2.0),
        c_star,
        c_trace,
        chi_used: opts.chi,
        eta,
        delta,
        degree: opts.degree,
        scale_back: opts.scale_back,
    })
}

/// Degree needed for a resolved filter of gap `delta` and error `eta`:
/// the erfc coefficients decay like `exp(−k²/4κ²)`.
pub fn resolved_degree(delta: f64, eta: f64) -> usize {
    let kappa = filter::kappa(delta, eta);
    (2.0 * kappa * (1.0 / eta).ln().sqrt()).ceil() as usize + 8
}

/// Interval shrinking search on `[−1, 1]`. Each test uses the filter
/// centred at `c = (l + r)/2` with gap `Δ = (r − l)/3` and moves one end
/// by `Δ`, so the bracket shrinks by `2/3` per iteration until its width is
/// at most `2 eps`. `provider(d)` must return moments up to degree `d`.
pub fn binary_search_energy<F>(mut provider: F, chi: f64, eps: f64) -> Result<(GseeResult, usize)>
where
    F: FnMut(usize) -> Result<MomentSequence>,
{
    check_chi(chi)?;
    if !(eps > 0.0) {
        return Err(Error::Parameter("eps must be positive".into()));
    }
    let eta = default_eta(chi);
    let threshold = chi * chi / 2.0;
    let (mut l, mut r) = (-1.0_f64, 1.0_f64);
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut degree = 0;
    while r - l > 2.0 * eps {
        let c = (l + r) / 2.0;
        let delta = (r - l) / 3.0;
        let d = resolved_degree(delta, eta);
        degree = d;
        let moments = provider(d)?;
        let f = filter::shifted_sign_cheb(c, delta, eta, d)?;
        let value = cumulative_value(&moments, &f.coeffs)?;
        trace.push((c, value));
        if value >= threshold {
            r = (l + 2.0 * r) / 3.0;
        } else {
            l = (2.0 * l + r) / 3.0;
        }
        iterations += 1;
    }
    let c_star = (l + r) / 2.0;
    Ok((
        GseeResult {
            interval: (l, r),
            c_star,
            c_trace: trace,
            chi_used: chi,
            eta,
            delta: r - l,
            degree,
            scale_back: 1.0,
        },
        iterations,
    ))
}
