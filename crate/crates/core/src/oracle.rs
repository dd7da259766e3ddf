//! Dense state-vector reference for small systems.
//!
//! The Hamiltonian is applied directly from its Pauli strings with bit
//! masks, never through the MPO, so agreement with the tensor-network code
//! is a genuine cross-check. Full matrices and complete diagonalization are
//! only formed up to [`FULL_MATRIX_LIMIT`] qubits; larger systems up to
//! [`crate::dense_limit`] use matrix-free Lanczos.

use std::sync::OnceLock;

use ndarray::{Array1, Array2, ShapeBuilder};
use ndarray_linalg::{Eigh, UPLO};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::chebyshev::MomentSequence;
use crate::error::{Error, Result};
use crate::hamiltonian::{NormalizedHamiltonian, PauliSum};
use crate::lanczos::{cdot, lowest_eigenpair, vnorm, LanczosConfig};
use crate::linalg::{C64, ZERO};
use crate::mps::Mps;

/// Largest qubit count for which the full matrix is built.
pub const FULL_MATRIX_LIMIT: usize = 10;

/// Eigenvalues closer than this to the lowest one count as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

const LANCZOS_SEED: u64 = 0x5eed_0f_1a9c_2b;

struct OffDiagonal {
    coeff: C64,
    flip: usize,
    phase: usize,
}

/// Normalized Hamiltonian as a dense matvec, with cached diagonalization
/// for small sizes.
pub struct DenseSystem {
    n: usize,
    diag: Array1<f64>,
    off: Vec<OffDiagonal>,
    eigen: OnceLock<(Array1<f64>, Array2<C64>)>,
}

fn parity(x: usize) -> f64 {
    if x.count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl DenseSystem {
    pub fn new(h: &NormalizedHamiltonian) -> Result<Self> {
        Self::from_pauli_sum(&h.raw, h.scale)
    }

    /// `raw / scale` as a dense operator.
    pub fn from_pauli_sum(raw: &PauliSum, scale: f64) -> Result<Self> {
        let n = raw.n_sites();
        let limit = crate::dense_limit();
        if n > limit {
            return Err(Error::Capacity(format!(
                "dense oracle for {n} qubits exceeds the limit of {limit}"
            )));
        }
        let dim = 1usize << n;
        let mut diag = Array1::<f64>::zeros(dim);
        let mut off = Vec::new();
        for t in raw.terms() {
            let (flip, phase, ny) = t.masks();
            let c = t.coeff / scale;
            if flip == 0 {
                for (x, d) in diag.iter_mut().enumerate() {
                    *d += c * parity(x & phase);
                }
            } else {
                let iy = [
                    C64::new(1.0, 0.0),
                    C64::new(0.0, 1.0),
                    C64::new(-1.0, 0.0),
                    C64::new(0.0, -1.0),
                ][(ny % 4) as usize];
                off.push(OffDiagonal {
                    coeff: iy * c,
                    flip,
                    phase,
                });
            }
        }
        Ok(DenseSystem {
            n,
            diag,
            off,
            eigen: OnceLock::new(),
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    /// `H v`.
    pub fn apply(&self, v: &Array1<C64>) -> Array1<C64> {
        let mut out = Array1::from_shape_fn(v.len(), |x| v[x] * self.diag[x]);
        for t in &self.off {
            for (x, &vx) in v.iter().enumerate() {
                if vx != ZERO {
                    out[x ^ t.flip] += t.coeff * parity(x & t.phase) * vx;
                }
            }
        }
        out
    }

    /// Full matrix, column by column.
    pub fn matrix(&self) -> Result<Array2<C64>> {
        self.check_full()?;
        let dim = self.dim();
        let mut m = Array2::<C64>::zeros((dim, dim));
        for x in 0..dim {
            m[[x, x]] += C64::new(self.diag[x], 0.0);
            for t in &self.off {
                m[[x ^ t.flip, x]] += t.coeff * parity(x & t.phase);
            }
        }
        Ok(m)
    }

    fn check_full(&self) -> Result<()> {
        if self.n > FULL_MATRIX_LIMIT {
            return Err(Error::Capacity(format!(
                "full diagonalization of {} qubits exceeds the limit of {FULL_MATRIX_LIMIT}",
                self.n
            )));
        }
        Ok(())
    }

    /// All eigenvalues (ascending) and eigenvectors. Checks hermiticity and
    /// spectral containment on first use.
    pub fn eigen(&self) -> Result<&(Array1<f64>, Array2<C64>)> {
        if let Some(e) = self.eigen.get() {
            return Ok(e);
        }
        let m = self.matrix()?;
        let herm = m
            .indexed_iter()
            .map(|((i, j), z)| (z - m[[j, i]].conj()).norm())
            .fold(0.0, f64::max);
        if herm > 1e-12 {
            return Err(Error::Numerical(format!("matrix is not Hermitian ({herm:.2e})")));
        }
        // The LAPACK wrapper returns conjugated eigenvectors for row-major
        // complex input, so hand it a column-major copy.
        let mut f = Array2::<C64>::zeros(m.raw_dim().f());
        f.assign(&m);
        let (vals, vecs) = f.eigh(UPLO::Lower)?;
        let radius = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if radius > 1.0 + 1e-12 {
            return Err(Error::Numerical(format!("spectral radius {radius} exceeds 1")));
        }
        Ok(self.eigen.get_or_init(|| (vals, vecs)))
    }
}

fn random_start(dim: usize) -> Array1<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(LANCZOS_SEED);
    Array1::from_shape_fn(dim, |_| {
        C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
    })
}

fn ground_by_lanczos(sys: &DenseSystem) -> Result<(f64, Array1<C64>)> {
    let res = lowest_eigenpair(|v| sys.apply(v), &random_start(sys.dim()), &LanczosConfig::default())?;
    if !res.converged {
        return Err(Error::Numerical(format!(
            "Lanczos stopped with residual {:.2e}",
            res.residual
        )));
    }
    Ok((res.value, res.vector))
}

/// Lowest eigenvalue and an eigenvector.
pub fn dense_ground(sys: &DenseSystem) -> Result<(f64, Array1<C64>)> {
    if sys.n_sites() <= FULL_MATRIX_LIMIT {
        let (vals, vecs) = sys.eigen()?;
        Ok((vals[0], vecs.column(0).to_owned()))
    } else {
        ground_by_lanczos(sys)
    }
}

/// Lowest eigenvalue from matrix-free Lanczos regardless of size.
pub fn lanczos_ground(sys: &DenseSystem) -> Result<(f64, Array1<C64>)> {
    ground_by_lanczos(sys)
}

/// `μ_0..μ_d` with `μ_k = ⟨ψ|T_k(H)|ψ⟩` by the dense three-term recursion.
pub fn dense_cheb_moments(sys: &DenseSystem, psi: &Array1<C64>, d: usize) -> Result<Vec<f64>> {
    if psi.len() != sys.dim() {
        return Err(Error::Structural(format!(
            "state of length {} for a system of dimension {}",
            psi.len(),
            sys.dim()
        )));
    }
    let mut out = Vec::with_capacity(d + 1);
    out.push(cdot(psi, psi).re);
    if d == 0 {
        return Ok(out);
    }
    let mut prev = psi.clone();
    let mut curr = sys.apply(psi);
    out.push(cdot(psi, &curr).re);
    for _ in 2..=d {
        let mut next = sys.apply(&curr);
        next.mapv_inplace(|z| z * 2.0);
        next -= &prev;
        out.push(cdot(psi, &next).re);
        prev = std::mem::replace(&mut curr, next);
    }
    Ok(out)
}

/// `μ_k = Σ_i |c_i|² cos(k arccos λ_i)` from the eigendecomposition.
pub fn spectral_moments(sys: &DenseSystem, psi: &Array1<C64>, d: usize) -> Result<Vec<f64>> {
    let (vals, vecs) = sys.eigen()?;
    let weights: Vec<(f64, f64)> = vals
        .iter()
        .zip(vecs.columns())
        .map(|(&l, v)| {
            let c = v.iter().zip(psi).map(|(a, b)| a.conj() * b).sum::<C64>();
            (c.norm_sqr(), l.clamp(-1.0, 1.0).acos())
        })
        .collect();
    Ok((0..=d)
        .map(|k| weights.iter().map(|(w, th)| w * (k as f64 * th).cos()).sum())
        .collect())
}

/// `Δ_m^(k) = |μ_k − μ̃_k|`.
pub fn moment_error_profile(exact: &[f64], approx: &MomentSequence) -> Result<Vec<f64>> {
    if exact.len() != approx.moments.len() {
        return Err(Error::Structural(format!(
            "{} exact moments vs {} approximate",
            exact.len(),
            approx.moments.len()
        )));
    }
    Ok(exact
        .iter()
        .zip(&approx.moments)
        .map(|(a, b)| (a - b).abs())
        .collect())
}

/// `χ = ‖Π_0 ψ‖ / ‖ψ‖` for the projector onto the lowest eigenspace.
pub fn overlap_chi_dense(sys: &DenseSystem, psi: &Array1<C64>) -> Result<f64> {
    let npsi = vnorm(psi);
    if npsi == 0.0 {
        return Err(Error::Parameter("state is zero".into()));
    }
    if sys.n_sites() <= FULL_MATRIX_LIMIT {
        let (vals, vecs) = sys.eigen()?;
        let l0 = vals[0];
        let w: f64 = vals
            .iter()
            .zip(vecs.columns())
            .take_while(|(l, _)| **l - l0 <= DEGENERACY_TOL)
            .map(|(_, v)| v.iter().zip(psi).map(|(a, b)| a.conj() * b).sum::<C64>().norm_sqr())
            .sum();
        return Ok(w.sqrt() / npsi);
    }
    // The Ritz vector grown from ψ is ψ's normalized projection onto the
    // lowest level it overlaps with.
    let (l0, _) = ground_by_lanczos(sys)?;
    let res = lowest_eigenpair(|v| sys.apply(v), psi, &LanczosConfig::default())?;
    if (res.value - l0).abs() > 1e-8 {
        return Ok(0.0);
    }
    Ok(cdot(psi, &res.vector).norm() / npsi)
}

pub fn overlap_chi(psi: &Mps, sys: &DenseSystem) -> Result<f64> {
    if psi.n_sites() != sys.n_sites() {
        return Err(Error::Structural("state and system sizes differ".into()));
    }
    overlap_chi_dense(sys, &psi.to_dense()?)
}
