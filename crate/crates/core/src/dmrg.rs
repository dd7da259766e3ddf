//! Two-site DMRG for bounded-bond-dimension guiding states.

use std::path::Path;

use ndarray::{Array1, Array3, Array4, IxDyn};
use serde::{Deserialize, Serialize};

use crate::container;
use crate::error::{Error, Result};
use crate::hamiltonian::{NormalizedHamiltonian, Pauli};
use crate::lanczos::{lowest_eigenpair, LanczosConfig};
use crate::linalg::{self, permute_to_matrix, C64, ONE};
use crate::mpo::Mpo;
use crate::mps::{Mps, PHYS_DIM};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DmrgConfig {
    pub chi_init: usize,
    pub sweeps: usize,
    /// Stop when the energy changes by less than this between sweeps.
    pub conv_tol: f64,
    /// Krylov dimension of the local eigensolver.
    pub local_eig_iters: usize,
    /// Relative singular value cutoff in the two-site split.
    pub svd_tol: f64,
}

impl Default for DmrgConfig {
    fn default() -> Self {
        DmrgConfig {
            chi_init: 16,
            sweeps: 10,
            conv_tol: 1e-10,
            local_eig_iters: 30,
            svd_tol: 1e-14,
        }
    }
}

impl DmrgConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chi_init < 1 {
            return Err(Error::Parameter("chi_init must be at least 1".into()));
        }
        if self.sweeps < 1 {
            return Err(Error::Parameter("sweeps must be at least 1".into()));
        }
        if self.local_eig_iters < 2 {
            return Err(Error::Parameter("local_eig_iters must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct DmrgResult {
    /// Normalized, canonical around site 0.
    pub state: Mps,
    /// `⟨ψ|H|ψ⟩` of the returned state.
    pub energy: f64,
    /// Energy after every completed sweep.
    pub sweep_energies: Vec<f64>,
    pub converged: bool,
}

/// Product state in the Z basis that minimizes the single-site Z terms.
pub fn field_aligned_state(h: &NormalizedHamiltonian) -> Result<Mps> {
    let n = h.n_sites();
    let mut field = vec![0.0; n];
    for t in h.raw.terms() {
        let mut sup = t.support();
        if let (Some(i), None) = (sup.next(), sup.next()) {
            if t.ops[i] == Pauli::Z {
                field[i] += t.coeff;
            }
        }
    }
    let bits: Vec<u8> = field.iter().map(|&c| u8::from(c > 0.0)).collect();
    Mps::basis_state(&bits)
}

/// Runs two-site DMRG from the field-aligned product state.
pub fn dmrg_ground(h: &NormalizedHamiltonian, cfg: &DmrgConfig) -> Result<DmrgResult> {
    dmrg_from(&h.mpo, &field_aligned_state(h)?, cfg)
}

/// Runs two-site DMRG from a given initial state.
pub fn dmrg_from(h: &Mpo, init: &Mps, cfg: &DmrgConfig) -> Result<DmrgResult> {
    cfg.validate()?;
    let n = h.n_sites();
    if init.n_sites() != n {
        return Err(Error::Structural("initial state and MPO sizes differ".into()));
    }
    if n == 1 {
        return single_site(h);
    }
    let start = init.normalized();
    let mut sites: Vec<Array3<C64>> = start.tensors().to_vec();
    let w = h.tensors();

    let mut left: Vec<Option<Array3<C64>>> = vec![None; n + 1];
    let mut right: Vec<Option<Array3<C64>>> = vec![None; n + 1];
    left[0] = Some(Array3::from_elem((1, 1, 1), ONE));
    right[n] = Some(Array3::from_elem((1, 1, 1), ONE));
    for i in (1..n).rev() {
        right[i] = Some(extend_right(right[i + 1].as_ref().unwrap(), &w[i], &sites[i]));
    }

    let lanczos = LanczosConfig {
        krylov_dim: cfg.local_eig_iters,
        max_restarts: 4,
        tol: 1e-12,
    };
    let mut energies = Vec::new();
    let mut converged = false;
    for sweep in 0..cfg.sweeps {
        for i in 0..n - 1 {
            let (u, sv) = optimize_pair(&sites, i, w, &left, &right, cfg, &lanczos, true)?;
            sites[i] = u;
            sites[i + 1] = sv;
            left[i + 1] = Some(extend_left(left[i].as_ref().unwrap(), &w[i], &sites[i]));
        }
        for i in (0..n - 1).rev() {
            let (us, v) = optimize_pair(&sites, i, w, &left, &right, cfg, &lanczos, false)?;
            sites[i] = us;
            sites[i + 1] = v;
            right[i + 1] = Some(extend_right(right[i + 2].as_ref().unwrap(), &w[i + 1], &sites[i + 1]));
        }
        let psi = Mps::from_parts_unchecked(sites.clone(), Some(0), 0.0).normalized();
        let e = h.expectation(&psi)?.re;
        log::debug!("sweep {}: energy {e:.14}", sweep + 1);
        let done = energies
            .last()
            .is_some_and(|&prev: &f64| (prev - e).abs() < cfg.conv_tol);
        energies.push(e);
        if done {
            converged = true;
            break;
        }
    }
    let state = Mps::from_parts_unchecked(sites, Some(0), 0.0).normalized();
    let energy = h.expectation(&state)?.re;
    Ok(DmrgResult {
        state,
        energy,
        sweep_energies: energies,
        converged,
    })
}

fn single_site(h: &Mpo) -> Result<DmrgResult> {
    let m = h.to_dense_matrix(1)?;
    let start = Array1::from(vec![ONE, C64::new(0.5, 0.0)]);
    let res = lowest_eigenpair(|v| m.dot(v), &start, &LanczosConfig::default())?;
    let t = Array3::from_shape_vec((1, PHYS_DIM, 1), res.vector.to_vec()).expect("two amplitudes");
    let state = Mps::from_tensors(vec![t], 0.0)?.normalized();
    Ok(DmrgResult {
        energy: h.expectation(&state)?.re,
        state,
        sweep_energies: vec![res.value],
        converged: true,
    })
}

#[allow(clippy::too_many_arguments)]
fn optimize_pair(
    sites: &[Array3<C64>],
    i: usize,
    w: &[Array4<C64>],
    left: &[Option<Array3<C64>>],
    right: &[Option<Array3<C64>>],
    cfg: &DmrgConfig,
    lanczos: &LanczosConfig,
    moving_right: bool,
) -> Result<(Array3<C64>, Array3<C64>)> {
    let (dl, _, _) = sites[i].dim();
    let (_, _, dr) = sites[i + 1].dim();
    let theta = linalg::as_left_matrix(&sites[i]).dot(&linalg::as_right_matrix(&sites[i + 1]));
    let theta = Array1::from_iter(theta.iter().cloned());
    let op = TwoSiteOperator::new(
        left[i].as_ref().expect("left environment"),
        &w[i],
        &w[i + 1],
        right[i + 2].as_ref().expect("right environment"),
    );
    let res = lowest_eigenpair(|v| op.apply(v), &theta, lanczos)?;
    let e_old = rayleigh(&op, &theta);
    let shape = (dl * PHYS_DIM, PHYS_DIM * dr);
    let m = res.vector.into_shape_with_order(shape).expect("two-site block");
    let mut split = linalg::truncated_svd(&m.view(), cfg.chi_init, cfg.svd_tol)?;
    if split.discarded > 0.0 {
        // Truncation can push the energy above the incoming state; keep the
        // incoming block in that case so sweeps never raise the energy.
        let mut us = split.u.clone();
        for (mut col, &s) in us.columns_mut().into_iter().zip(&split.s) {
            col.mapv_inplace(|z| z * s);
        }
        let cut = Array1::from_iter(us.dot(&split.vt).iter().cloned());
        if rayleigh(&op, &cut) > e_old {
            let m0 = theta.into_shape_with_order(shape).expect("two-site block");
            split = linalg::truncated_svd(&m0.view(), cfg.chi_init, cfg.svd_tol)?;
        }
    }
    let k = split.s.len();
    let mut u = split.u;
    let mut vt = split.vt;
    if moving_right {
        for (mut row, &s) in vt.rows_mut().into_iter().zip(&split.s) {
            row.mapv_inplace(|z| z * s);
        }
    } else {
        for (mut col, &s) in u.columns_mut().into_iter().zip(&split.s) {
            col.mapv_inplace(|z| z * s);
        }
    }
    let a = linalg::from_left_matrix(u, dl, PHYS_DIM);
    let b = vt
        .into_shape_with_order((k, PHYS_DIM, dr))
        .expect("standard layout");
    Ok((a, b))
}

fn rayleigh(op: &TwoSiteOperator, v: &Array1<C64>) -> f64 {
    let hv = op.apply(v);
    let num: C64 = v.iter().zip(&hv).map(|(a, b)| a.conj() * b).sum();
    num.re / v.iter().map(|z| z.norm_sqr()).sum::<f64>()
}

/// `L'[b,w',b'] = Σ conj(A[a,s,b]) L[a,w,a'] W[w,s,t,w'] A[a',t,b']`.
fn extend_left(l: &Array3<C64>, w: &Array4<C64>, a: &Array3<C64>) -> Array3<C64> {
    let (dl, wl, _) = l.dim();
    let (_, p, dr) = a.dim();
    let wr = w.dim().3;
    let x = l
        .view()
        .into_shape_with_order((dl * wl, dl))
        .expect("standard")
        .dot(&linalg::as_right_matrix(a)); // (a,w),(t,b')
    let x = x.into_shape_with_order(IxDyn(&[dl, wl, p, dr])).expect("standard");
    let y = permute_to_matrix(x.view(), &[0, 3, 1, 2], 2).dot(&permute_to_matrix(w.view(), &[0, 2, 1, 3], 2));
    // y: (a,b'),(s,w')
    let y = y.into_shape_with_order(IxDyn(&[dl, dr, p, wr])).expect("standard");
    let ac = linalg::conj_transpose(&linalg::as_left_matrix(a)); // b,(a,s)
    let out = ac.dot(&permute_to_matrix(y.view(), &[0, 2, 3, 1], 2));
    out.into_shape_with_order((dr, wr, dr)).expect("standard")
}

/// `R'[a,w,a'] = Σ conj(A[a,s,b]) W[w,s,t,w'] A[a',t,b'] R[b,w',b']`.
fn extend_right(r: &Array3<C64>, w: &Array4<C64>, a: &Array3<C64>) -> Array3<C64> {
    let (dl, p, dr) = a.dim();
    let (wl, _, _, wr) = w.dim();
    let x = linalg::as_left_matrix(a).dot(&permute_to_matrix(r.view(), &[2, 0, 1], 1));
    // x: (a',t),(b,w')
    let x = x.into_shape_with_order(IxDyn(&[dl, p, dr, wr])).expect("standard");
    let y = permute_to_matrix(x.view(), &[0, 2, 1, 3], 2).dot(&permute_to_matrix(w.view(), &[2, 3, 0, 1], 2));
    // y: (a',b),(w,s)
    let y = y.into_shape_with_order(IxDyn(&[dl, dr, wl, p])).expect("standard");
    let ac = permute_to_matrix(a.view(), &[0, 1, 2], 1).mapv(|z| z.conj()); // a,(s,b)
    let out = ac.dot(&permute_to_matrix(y.view(), &[3, 1, 2, 0], 2));
    out.into_shape_with_order((dl, wl, dl)).expect("standard")
}

/// Effective Hamiltonian on a two-site block `θ[a, s1, s2, b]`.
struct TwoSiteOperator {
    /// `(a,w),a'`
    l: ndarray::Array2<C64>,
    /// `(w,t),(s,w2)` with `s`, `t` the combined two-site indices.
    c: ndarray::Array2<C64>,
    /// `(w2,b'),b`
    r: ndarray::Array2<C64>,
    dl: usize,
    dr: usize,
    wl: usize,
    wr: usize,
}

impl TwoSiteOperator {
    fn new(l: &Array3<C64>, w1: &Array4<C64>, w2: &Array4<C64>, r: &Array3<C64>) -> Self {
        let (dl, wl, _) = l.dim();
        let (dr, wr, _) = r.dim();
        // C[w,(s1,t1),(s2,t2),w2] = Σ_{w1} W1[w,s1,t1,w1] W2[w1,s2,t2,w2]
        let c = permute_to_matrix(w1.view(), &[0, 1, 2, 3], 3).dot(&permute_to_matrix(w2.view(), &[0, 1, 2, 3], 1));
        let c = c
            .into_shape_with_order(IxDyn(&[wl, 2, 2, 2, 2, wr]))
            .expect("standard");
        // -> (w, t1, t2), (s1, s2, w2)
        let c = permute_to_matrix(c.view(), &[0, 2, 4, 1, 3, 5], 3);
        TwoSiteOperator {
            l: l.view().into_shape_with_order((dl * wl, dl)).expect("standard").to_owned(),
            c,
            r: permute_to_matrix(r.view(), &[1, 2, 0], 2),
            dl,
            dr,
            wl,
            wr,
        }
    }

    fn apply(&self, v: &Array1<C64>) -> Array1<C64> {
        let (dl, dr, wl, wr) = (self.dl, self.dr, self.wl, self.wr);
        let theta = v.view().into_shape_with_order((dl, 4 * dr)).expect("block");
        let t1 = self.l.dot(&theta); // (a,w),(t,b')
        let t1 = t1.into_shape_with_order(IxDyn(&[dl, wl, 4, dr])).expect("standard");
        let t2 = permute_to_matrix(t1.view(), &[0, 3, 1, 2], 2).dot(&self.c);
        // (a,b'),(s,w2)
        let t2 = t2.into_shape_with_order(IxDyn(&[dl, dr, 4, wr])).expect("standard");
        let out = permute_to_matrix(t2.view(), &[0, 2, 3, 1], 2).dot(&self.r);
        // (a,s),b
        Array1::from_iter(out.iter().cloned())
    }
}

/// Loads an externally prepared guiding state and checks its invariants,
/// including the isometry conditions when an orthogonality centre is
/// recorded.
pub fn load_guiding_state(path: impl AsRef<Path>) -> Result<Mps> {
    let psi = container::load_mps(path)?;
    if let Some(c) = psi.ortho_center() {
        let (l, r) = psi.isometry_residuals(c);
        if l > 1e-10 || r > 1e-10 {
            return Err(Error::format(
                0,
                format!("recorded orthogonality centre {c} does not hold ({l:.1e}, {r:.1e})"),
            ));
        }
    }
    Ok(psi)
}
