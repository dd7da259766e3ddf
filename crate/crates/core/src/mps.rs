//! Matrix product states on a chain of qubits.
//!
//! A state is stored as a list of rank-3 site tensors `(left, 2, right)`
//! together with a real `log_norm`. The represented vector is
//! `exp(log_norm)` times the plain contraction of the tensors, which keeps the
//! tensors themselves O(1) while the overall scale can drift freely during
//! long recursions.
//!
//! Amplitudes are ordered lexicographically with site 0 as the most
//! significant bit.

use ndarray::{s, Array1, Array2, Array3};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, as_left_matrix, as_right_matrix, conj_transpose, frobenius, C64, ONE, ZERO,
};

/// Physical dimension of every site.
pub const PHYS_DIM: usize = 2;

#[derive(Clone, Debug)]
pub struct Mps {
    tensors: Vec<Array3<C64>>,
    ortho_center: Option<usize>,
    log_norm: f64,
}

/// Bookkeeping returned by [`Mps::truncate`].
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct TruncReport {
    /// Squared norm discarded at each internal bond, in absolute units.
    pub discarded_weights: Vec<f64>,
    /// `‖ψ - ψ̃‖` for the input state `ψ` and the truncated state `ψ̃`.
    pub trunc_error: f64,
    /// Bond dimensions before truncation.
    pub bond_dims_before: Vec<usize>,
    /// `‖ψ‖` of the input state.
    pub norm_before: f64,
}

impl Mps {
    /// Builds a state from explicit site tensors.
    pub fn from_tensors(tensors: Vec<Array3<C64>>, log_norm: f64) -> Result<Self> {
        let tensors: Vec<_> = tensors
            .into_iter()
            .map(|t| t.as_standard_layout().into_owned())
            .collect();
        let mps = Mps {
            tensors,
            ortho_center: None,
            log_norm,
        };
        mps.validate()?;
        Ok(mps)
    }

    pub(crate) fn from_parts_unchecked(
        tensors: Vec<Array3<C64>>,
        ortho_center: Option<usize>,
        log_norm: f64,
    ) -> Self {
        Mps {
            tensors,
            ortho_center,
            log_norm,
        }
    }

    /// Product state with each site given by a (not necessarily normalized)
    /// local amplitude pair.
    pub fn product(local: &[[C64; 2]]) -> Result<Self> {
        if local.is_empty() {
            return Err(Error::Parameter("an MPS needs at least one site".into()));
        }
        let tensors = local
            .iter()
            .map(|amp| {
                let mut t = Array3::zeros((1, PHYS_DIM, 1));
                t[[0, 0, 0]] = amp[0];
                t[[0, 1, 0]] = amp[1];
                t
            })
            .collect();
        Ok(Mps {
            tensors,
            ortho_center: None,
            log_norm: 0.0,
        })
    }

    /// Computational basis state `|b_0 b_1 ... b_{n-1}>`.
    pub fn basis_state(bits: &[u8]) -> Result<Self> {
        let local: Vec<[C64; 2]> = bits
            .iter()
            .map(|&b| if b == 0 { [ONE, ZERO] } else { [ZERO, ONE] })
            .collect();
        Self::product(&local)
    }

    /// `|+>^{⊗n}`.
    pub fn plus_state(n: usize) -> Result<Self> {
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::product(&vec![[h, h]; n])
    }

    /// Normalized random state with complex Gaussian tensors and bond
    /// dimension at most `bond`.
    pub fn random<R: Rng + ?Sized>(n: usize, bond: usize, rng: &mut R) -> Result<Self> {
        if n == 0 || bond == 0 {
            return Err(Error::Parameter("random MPS needs n >= 1 and bond >= 1".into()));
        }
        let dims = capped_bond_dims(n, bond);
        let tensors = (0..n)
            .map(|i| {
                Array3::from_shape_simple_fn((dims[i], PHYS_DIM, dims[i + 1]), || {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    C64::new(re, im)
                })
            })
            .collect();
        let mps = Mps {
            tensors,
            ortho_center: None,
            log_norm: 0.0,
        };
        Ok(mps.normalized())
    }

    /// Compresses a dense amplitude vector into an MPS by successive SVDs,
    /// dropping singular values below `rel_tol` times the largest one.
    pub fn from_dense(amplitudes: &[C64], rel_tol: f64) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Structural(format!(
                "dense vector length {len} is not a power of two >= 2"
            )));
        }
        let n = len.trailing_zeros() as usize;
        let mut tensors = Vec::with_capacity(n);
        let mut rest = Array2::from_shape_vec((1, len), amplitudes.to_vec())
            .expect("length checked above");
        for _ in 0..n - 1 {
            let dl = rest.nrows();
            let cols = rest.ncols() / PHYS_DIM;
            let m = rest
                .into_shape_with_order((dl * PHYS_DIM, cols))
                .expect("standard layout");
            let split = linalg::truncated_svd(&m.view(), usize::MAX, rel_tol)?;
            tensors.push(linalg::from_left_matrix(split.u, dl, PHYS_DIM));
            let mut svt = split.vt;
            for (mut row, &sv) in svt.rows_mut().into_iter().zip(&split.s) {
                row.mapv_inplace(|z| z * sv);
            }
            rest = svt;
        }
        let dl = rest.nrows();
        tensors.push(
            rest.into_shape_with_order((dl, PHYS_DIM, 1))
                .expect("last site has two columns per row"),
        );
        let mut mps = Mps {
            tensors,
            ortho_center: Some(n - 1),
            log_norm: 0.0,
        };
        mps.absorb_center_norm(n - 1);
        Ok(mps)
    }

    pub fn n_sites(&self) -> usize {
        self.tensors.len()
    }

    pub fn tensors(&self) -> &[Array3<C64>] {
        &self.tensors
    }

    pub fn tensor(&self, i: usize) -> &Array3<C64> {
        &self.tensors[i]
    }

    pub fn log_norm(&self) -> f64 {
        self.log_norm
    }

    pub fn ortho_center(&self) -> Option<usize> {
        self.ortho_center
    }

    /// Bond dimensions including the two trivial boundary bonds, so the
    /// returned vector has `n + 1` entries.
    pub fn bond_dims(&self) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.n_sites() + 1);
        dims.push(self.tensors[0].dim().0);
        dims.extend(self.tensors.iter().map(|t| t.dim().2));
        dims
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Checks the structural invariants: trivial boundary bonds, matching
    /// neighbours and physical dimension 2.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_sites();
        if n == 0 {
            return Err(Error::Structural("MPS has no sites".into()));
        }
        if self.tensors[0].dim().0 != 1 || self.tensors[n - 1].dim().2 != 1 {
            return Err(Error::Structural("boundary bonds must have dimension 1".into()));
        }
        for (i, t) in self.tensors.iter().enumerate() {
            if t.dim().1 != PHYS_DIM {
                return Err(Error::Structural(format!(
                    "site {i} has physical dimension {} instead of 2",
                    t.dim().1
                )));
            }
            if t.dim().0 == 0 || t.dim().2 == 0 {
                return Err(Error::Structural(format!("site {i} has an empty bond")));
            }
        }
        for i in 0..n - 1 {
            if self.tensors[i].dim().2 != self.tensors[i + 1].dim().0 {
                return Err(Error::Structural(format!(
                    "bond {} mismatch: {} vs {}",
                    i + 1,
                    self.tensors[i].dim().2,
                    self.tensors[i + 1].dim().0
                )));
            }
        }
        if !self.log_norm.is_finite() {
            return Err(Error::Structural("log_norm is not finite".into()));
        }
        if let Some(c) = self.ortho_center {
            if c >= n {
                return Err(Error::Structural(format!("ortho center {c} out of range")));
            }
        }
        Ok(())
    }

    /// Returns `c · ψ`. The modulus goes into `log_norm`, the phase into the
    /// first tensor.
    pub fn scaled(&self, c: C64) -> Mps {
        let mut out = self.clone();
        let modulus = c.norm();
        if modulus == 0.0 {
            out.tensors[0].fill(ZERO);
            return out;
        }
        out.log_norm += modulus.ln();
        let phase = c / modulus;
        if phase != ONE {
            out.tensors[0].mapv_inplace(|z| z * phase);
        }
        out
    }

    pub fn norm_sqr(&self) -> f64 {
        inner(self, self).map(|z| z.re).unwrap_or(0.0)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().max(0.0).sqrt()
    }

    /// Unit-norm copy in canonical form around site 0. A zero state is
    /// returned unchanged.
    pub fn normalized(&self) -> Mps {
        let mut m = self
            .canonicalize(0)
            .expect("site 0 is always a valid center");
        if m.tensors[0].iter().any(|z| *z != ZERO) {
            m.log_norm = 0.0;
        }
        m
    }

    /// Mixed canonical form around `center`: all sites to the left are left
    /// isometries, all to the right right isometries. The norm of the center
    /// tensor is moved into `log_norm`.
    pub fn canonicalize(&self, center: usize) -> Result<Mps> {
        if center >= self.n_sites() {
            return Err(Error::Parameter(format!(
                "center {center} out of range for {} sites",
                self.n_sites()
            )));
        }
        let mut out = self.clone();
        linalg::canonicalize_chain(&mut out.tensors, center)?;
        out.ortho_center = Some(center);
        out.absorb_center_norm(center);
        Ok(out)
    }

    fn absorb_center_norm(&mut self, center: usize) {
        let nrm = frobenius(&self.tensors[center]);
        if nrm > 0.0 && nrm.is_finite() {
            self.tensors[center].mapv_inplace(|z| z / nrm);
            self.log_norm += nrm.ln();
        }
    }

    /// SVD compression to bond dimension `chi_max`, also dropping singular
    /// values below `svd_tol` times the largest one at each bond.
    ///
    /// One right-to-left QR sweep followed by one left-to-right SVD sweep.
    /// Each SVD step is an orthogonal projection and the projections are
    /// nested, so the discarded weights add up to exactly `‖ψ - ψ̃‖²`.
    pub fn truncate(&self, chi_max: usize, svd_tol: f64) -> Result<(Mps, TruncReport)> {
        if chi_max < 1 {
            return Err(Error::Parameter("chi_max must be at least 1".into()));
        }
        if !(svd_tol >= 0.0) {
            return Err(Error::Parameter("svd_tol must be non-negative".into()));
        }
        let bond_dims_before = self.bond_dims();
        let mut out = self.canonicalize(0)?;
        let scale = (2.0 * out.log_norm).exp();
        let n = out.n_sites();
        let rel = linalg::compress_chain(&mut out.tensors, chi_max, svd_tol)?;
        out.ortho_center = Some(n - 1);
        out.absorb_center_norm(n - 1);
        let total: f64 = rel.iter().sum();
        let report = TruncReport {
            discarded_weights: rel.iter().map(|w| w * scale).collect(),
            trunc_error: (total * scale).sqrt(),
            bond_dims_before,
            norm_before: scale.sqrt(),
        };
        Ok((out, report))
    }

    /// Full amplitude vector. Fails when `n` exceeds `limit`.
    pub fn to_dense_with_limit(&self, limit: usize) -> Result<Array1<C64>> {
        let n = self.n_sites();
        if n > limit {
            return Err(Error::Capacity(format!(
                "dense conversion of {n} qubits exceeds the limit of {limit}"
            )));
        }
        let mut acc = Array2::from_elem((1, 1), ONE);
        for t in &self.tensors {
            let rows = acc.nrows();
            let (_, p, dr) = t.dim();
            let next = acc.dot(&as_right_matrix(t));
            acc = next
                .into_shape_with_order((rows * p, dr))
                .expect("standard layout after dot");
        }
        let scale = self.log_norm.exp();
        Ok(acc.column(0).mapv(|z| z * scale))
    }

    /// Full amplitude vector using the process-wide dense limit.
    pub fn to_dense(&self) -> Result<Array1<C64>> {
        self.to_dense_with_limit(crate::dense_limit())
    }

    /// Largest left-isometry residual over sites `0..center` and largest
    /// right-isometry residual over `center+1..n`.
    pub fn isometry_residuals(&self, center: usize) -> (f64, f64) {
        let left = self.tensors[..center]
            .iter()
            .map(linalg::left_isometry_residual)
            .fold(0.0, f64::max);
        let right = self.tensors[center + 1..]
            .iter()
            .map(linalg::right_isometry_residual)
            .fold(0.0, f64::max);
        (left, right)
    }
}

/// Bond dimensions `min(bond, 2^i, 2^(n-i))`, boundaries included.
fn capped_bond_dims(n: usize, bond: usize) -> Vec<usize> {
    (0..=n)
        .map(|i| {
            let l = 1usize.checked_shl(i.min(62) as u32).unwrap_or(usize::MAX);
            let r = 1usize
                .checked_shl((n - i).min(62) as u32)
                .unwrap_or(usize::MAX);
            bond.min(l).min(r)
        })
        .collect()
}

/// `⟨a|b⟩` by a left-to-right transfer contraction, O(n·D³).
pub fn inner(a: &Mps, b: &Mps) -> Result<C64> {
    if a.n_sites() != b.n_sites() {
        return Err(Error::Structural(format!(
            "inner product of {} and {} site states",
            a.n_sites(),
            b.n_sites()
        )));
    }
    let mut env = Array2::from_elem((1, 1), ONE);
    for (ta, tb) in a.tensors.iter().zip(&b.tensors) {
        // env[α,β] B[β,s,β'] -> tmp[α,(s,β')] -> tmp[(α,s),β']
        let (da, p, _) = ta.dim();
        let (_, _, db_r) = tb.dim();
        let tmp = env.dot(&as_right_matrix(tb));
        let tmp = tmp
            .into_shape_with_order((da * p, db_r))
            .expect("standard layout after dot");
        env = conj_transpose(&as_left_matrix(ta)).dot(&tmp);
    }
    Ok(env[[0, 0]] * (a.log_norm + b.log_norm).exp())
}

/// `coeff_a·a + coeff_b·b` as a direct sum; interior bond dimensions add.
pub fn add(a: &Mps, b: &Mps, coeff_a: C64, coeff_b: C64) -> Result<Mps> {
    let n = a.n_sites();
    if n != b.n_sites() {
        return Err(Error::Structural(format!(
            "cannot add {n} and {} site states",
            b.n_sites()
        )));
    }
    let log_norm = a.log_norm.max(b.log_norm);
    let fa = coeff_a * (a.log_norm - log_norm).exp();
    let fb = coeff_b * (b.log_norm - log_norm).exp();
    if n == 1 {
        let t = a.tensors[0].mapv(|z| z * fa) + b.tensors[0].mapv(|z| z * fb);
        return Ok(Mps::from_parts_unchecked(vec![t], None, log_norm));
    }
    let mut tensors = Vec::with_capacity(n);
    for i in 0..n {
        let ta = &a.tensors[i];
        let tb = &b.tensors[i];
        let (al, p, ar) = ta.dim();
        let (bl, _, br) = tb.dim();
        let t = if i == 0 {
            let mut t = Array3::zeros((1, p, ar + br));
            t.slice_mut(s![.., .., ..ar]).assign(&ta.mapv(|z| z * fa));
            t.slice_mut(s![.., .., ar..]).assign(&tb.mapv(|z| z * fb));
            t
        } else if i == n - 1 {
            let mut t = Array3::zeros((al + bl, p, 1));
            t.slice_mut(s![..al, .., ..]).assign(ta);
            t.slice_mut(s![al.., .., ..]).assign(tb);
            t
        } else {
            let mut t = Array3::zeros((al + bl, p, ar + br));
            t.slice_mut(s![..al, .., ..ar]).assign(ta);
            t.slice_mut(s![al.., .., ar..]).assign(tb);
            t
        };
        tensors.push(t);
    }
    Ok(Mps::from_parts_unchecked(tensors, None, log_norm))
}

/// `|⟨a|b⟩|² / (⟨a|a⟩⟨b|b⟩)`.
pub fn fidelity(a: &Mps, b: &Mps) -> Result<f64> {
    let ab = inner(a, b)?;
    Ok(ab.norm_sqr() / (a.norm_sqr() * b.norm_sqr()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn dense_dot(a: &Array1<C64>, b: &Array1<C64>) -> C64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    }

    fn max_diff(a: &Array1<C64>, b: &Array1<C64>) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn identical_product_states_have_unit_overlap() {
        let a = Mps::basis_state(&[0; 6]).unwrap();
        assert!((inner(&a, &a).unwrap() - ONE).norm() < 1e-15);
    }

    #[test]
    fn orthogonal_product_states() {
        let a = Mps::basis_state(&[0, 0, 0, 0]).unwrap();
        let b = Mps::basis_state(&[1, 0, 0, 0]).unwrap();
        assert_eq!(inner(&a, &b).unwrap(), ZERO);
    }

    #[test]
    fn inner_matches_dense_dot() {
        let mut r = rng(1);
        let a = Mps::random(8, 5, &mut r).unwrap();
        let b = Mps::random(8, 3, &mut r).unwrap().scaled(C64::new(0.3, -1.2));
        let exact = dense_dot(&a.to_dense().unwrap(), &b.to_dense().unwrap());
        assert!((inner(&a, &b).unwrap() - exact).norm() < 1e-12);
    }

    #[test]
    fn inner_rejects_length_mismatch() {
        let a = Mps::basis_state(&[0, 0]).unwrap();
        let b = Mps::basis_state(&[0, 0, 0]).unwrap();
        assert!(matches!(inner(&a, &b), Err(Error::Structural(_))));
        assert!(matches!(add(&a, &b, ONE, ONE), Err(Error::Structural(_))));
    }

    #[test]
    fn to_dense_small_cases() {
        let z = Mps::basis_state(&[0, 0, 0]).unwrap().to_dense().unwrap();
        assert_eq!(z[0], ONE);
        assert!(z.iter().skip(1).all(|x| *x == ZERO));
        let plus = Mps::plus_state(2).unwrap().to_dense().unwrap();
        for x in plus.iter() {
            assert!((x - C64::new(0.5, 0.0)).norm() < 1e-15);
        }
        // site 0 is the most significant bit
        let b = Mps::basis_state(&[1, 0, 0]).unwrap().to_dense().unwrap();
        assert_eq!(b[4], ONE);
    }

    #[test]
    fn to_dense_respects_limit() {
        let a = Mps::basis_state(&[0; 5]).unwrap();
        assert!(matches!(a.to_dense_with_limit(4), Err(Error::Capacity(_))));
    }

    #[test]
    fn add_zero_coefficient_keeps_state() {
        let mut r = rng(2);
        let a = Mps::random(6, 4, &mut r).unwrap();
        let b = Mps::random(6, 4, &mut r).unwrap();
        let c = add(&a, &b, ONE, ZERO).unwrap();
        assert!((fidelity(&a, &c).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(c.bond_dims()[3], a.bond_dims()[3] + b.bond_dims()[3]);
    }

    #[test]
    fn plus_from_basis_sum() {
        let zero = Mps::basis_state(&[0]).unwrap();
        let one = Mps::basis_state(&[1]).unwrap();
        let sum = add(&zero, &one, ONE, ONE).unwrap().normalized();
        let plus = Mps::plus_state(1).unwrap();
        assert!((inner(&plus, &sum).unwrap() - ONE).norm() < 1e-15);
    }

    #[test]
    fn linear_combination_matches_dense() {
        let mut r = rng(3);
        let a = Mps::random(7, 4, &mut r).unwrap();
        let b = Mps::random(7, 3, &mut r).unwrap();
        let c = add(&a, &b, C64::new(2.0, 0.0), C64::new(-1.0, 0.0)).unwrap();
        let expect = a.to_dense().unwrap().mapv(|z| z * 2.0) - b.to_dense().unwrap();
        assert!(max_diff(&c.to_dense().unwrap(), &expect) < 1e-12);
    }

    #[test]
    fn canonical_form_isometries_and_norm() {
        let mut r = rng(4);
        let a = Mps::random(9, 6, &mut r).unwrap().scaled(C64::new(3.0, 0.0));
        for center in [0, 4, 8] {
            let c = a.canonicalize(center).unwrap();
            let (l, rr) = c.isometry_residuals(center);
            assert!(l < 1e-12 && rr < 1e-12, "center {center}: {l} {rr}");
            assert!((c.norm_sqr() - a.norm_sqr()).abs() < 1e-12 * a.norm_sqr());
            assert!((fidelity(&a, &c).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!(matches!(a.canonicalize(9), Err(Error::Parameter(_))));
    }

    #[test]
    fn truncating_product_state_is_exact() {
        let a = Mps::plus_state(5).unwrap();
        let (t, rep) = a.truncate(1, 0.0).unwrap();
        assert_eq!(rep.trunc_error, 0.0);
        assert_eq!(t.max_bond(), 1);
    }

    #[test]
    fn bell_pair_truncation_error() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut v = vec![ZERO; 4];
        v[0] = C64::new(h, 0.0);
        v[3] = C64::new(h, 0.0);
        let bell = Mps::from_dense(&v, 0.0).unwrap();
        assert_eq!(bell.max_bond(), 2);
        let (t, rep) = bell.truncate(1, 0.0).unwrap();
        assert!((rep.trunc_error.powi(2) - 0.5).abs() < 1e-14);
        let diff = bell.to_dense().unwrap() - t.to_dense().unwrap();
        let direct = diff.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!((direct - rep.trunc_error).abs() < 1e-14);
    }

    #[test]
    fn truncate_without_cut_is_identity() {
        let mut r = rng(5);
        let a = Mps::random(10, 8, &mut r).unwrap();
        let (t, rep) = a.truncate(64, 0.0).unwrap();
        assert!(rep.trunc_error <= 1e-12);
        assert!((fidelity(&a, &t).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(t.ortho_center(), Some(9));
        let (l, _) = t.isometry_residuals(9);
        assert!(l < 1e-12);
    }

    #[test]
    fn truncate_rejects_zero_chi() {
        let a = Mps::plus_state(3).unwrap();
        assert!(matches!(a.truncate(0, 0.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn from_dense_round_trip() {
        let mut r = rng(6);
        let a = Mps::random(6, 8, &mut r).unwrap();
        let dense = a.to_dense().unwrap();
        let b = Mps::from_dense(dense.as_slice().unwrap(), 0.0).unwrap();
        assert!(max_diff(&b.to_dense().unwrap(), &dense) < 1e-13);
    }
}
