//! Matrix product operators.
//!
//! Site tensors have shape `(left, out, in, right)`. Applying an MPO to an
//! MPS multiplies bond dimensions exactly; nothing is truncated here.

use ndarray::{Array2, Array3, Array4, Axis};

use crate::error::{Error, Result};
use crate::linalg::{self, C64, ONE};
use crate::mps::{inner, Mps, PHYS_DIM};

#[derive(Clone, Debug)]
pub struct Mpo {
    tensors: Vec<Array4<C64>>,
}

impl Mpo {
    pub fn from_tensors(tensors: Vec<Array4<C64>>) -> Result<Self> {
        let tensors: Vec<_> = tensors
            .into_iter()
            .map(|t| t.as_standard_layout().into_owned())
            .collect();
        let mpo = Mpo { tensors };
        mpo.validate()?;
        Ok(mpo)
    }

    /// Identity operator with bond dimension 1.
    pub fn identity(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("an MPO needs at least one site".into()));
        }
        let mut w = Array4::zeros((1, PHYS_DIM, PHYS_DIM, 1));
        w[[0, 0, 0, 0]] = ONE;
        w[[0, 1, 1, 0]] = ONE;
        Ok(Mpo {
            tensors: vec![w; n],
        })
    }

    /// Tensor product of single-site operators, bond dimension 1.
    pub fn product(ops: &[Array2<C64>]) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::Parameter("an MPO needs at least one site".into()));
        }
        let tensors = ops
            .iter()
            .map(|op| {
                if op.dim() != (PHYS_DIM, PHYS_DIM) {
                    return Err(Error::Structural("local operators must be 2x2".into()));
                }
                Ok(op
                    .clone()
                    .into_shape_with_order((1, PHYS_DIM, PHYS_DIM, 1))
                    .expect("2x2 reshapes to 1x2x2x1"))
            })
            .collect::<Result<_>>()?;
        Ok(Mpo { tensors })
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.tensors.len();
        if n == 0 {
            return Err(Error::Structural("MPO has no sites".into()));
        }
        if self.tensors[0].dim().0 != 1 || self.tensors[n - 1].dim().3 != 1 {
            return Err(Error::Structural("boundary bonds must have dimension 1".into()));
        }
        for (i, w) in self.tensors.iter().enumerate() {
            let (_, o, p, _) = w.dim();
            if o != PHYS_DIM || p != PHYS_DIM {
                return Err(Error::Structural(format!(
                    "site {i} has physical dimensions {o}x{p}"
                )));
            }
        }
        for i in 0..n - 1 {
            if self.tensors[i].dim().3 != self.tensors[i + 1].dim().0 {
                return Err(Error::Structural(format!("bond {} mismatch", i + 1)));
            }
        }
        Ok(())
    }

    pub fn n_sites(&self) -> usize {
        self.tensors.len()
    }

    pub fn tensors(&self) -> &[Array4<C64>] {
        &self.tensors
    }

    /// Bond dimensions including the trivial boundaries.
    pub fn bond_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.tensors[0].dim().0];
        dims.extend(self.tensors.iter().map(|w| w.dim().3));
        dims
    }

    /// Largest internal bond dimension: the factor by which one application
    /// can multiply an MPS bond.
    pub fn growth_factor(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Multiplies the operator by a real scalar (applied to the first site).
    pub fn scaled(&self, factor: f64) -> Mpo {
        let mut out = self.clone();
        out.tensors[0].mapv_inplace(|z| z * factor);
        out
    }

    /// Exact `H|ψ⟩`. Output bond `e` has dimension `D_H(e) · d_e`.
    pub fn apply(&self, psi: &Mps) -> Result<Mps> {
        if self.n_sites() != psi.n_sites() {
            return Err(Error::Structural(format!(
                "MPO has {} sites, MPS has {}",
                self.n_sites(),
                psi.n_sites()
            )));
        }
        let tensors = self
            .tensors
            .iter()
            .zip(psi.tensors())
            .map(|(w, a)| apply_site(w, a))
            .collect();
        Ok(Mps::from_parts_unchecked(tensors, None, psi.log_norm()))
    }

    /// `⟨ψ|H|ψ⟩`.
    pub fn expectation(&self, psi: &Mps) -> Result<C64> {
        inner(psi, &self.apply(psi)?)
    }

    /// Full `2^n × 2^n` matrix; site 0 is the most significant bit.
    pub fn to_dense_matrix(&self, limit: usize) -> Result<Array2<C64>> {
        let n = self.n_sites();
        if n > limit {
            return Err(Error::Capacity(format!(
                "dense MPO of {n} qubits exceeds the limit of {limit}"
            )));
        }
        // acc[o, i, b]
        let mut acc = Array3::from_elem((1, 1, 1), ONE);
        for w in &self.tensors {
            let (o, i, a) = acc.dim();
            let (wl, p, q, wr) = w.dim();
            debug_assert_eq!(a, wl);
            let lhs = acc.into_shape_with_order((o * i, a)).expect("standard");
            let rhs = w
                .view()
                .into_shape_with_order((wl, p * q * wr))
                .expect("standard");
            let prod = lhs
                .dot(&rhs)
                .into_shape_with_order((o, i, p, q, wr))
                .expect("standard");
            let prod = prod.permuted_axes([0, 2, 1, 3, 4]);
            acc = prod
                .as_standard_layout()
                .into_owned()
                .into_shape_with_order((o * p, i * q, wr))
                .expect("standard");
        }
        Ok(acc.index_axis_move(Axis(2), 0))
    }

    /// SVD compression of the operator, treating `(out, in)` as one
    /// four-dimensional physical leg. Singular values below `rel_tol` times
    /// the largest at each bond are dropped.
    pub fn compressed(&self, rel_tol: f64) -> Result<Mpo> {
        let mut chain: Vec<Array3<C64>> = self
            .tensors
            .iter()
            .map(|w| {
                let (wl, p, q, wr) = w.dim();
                w.clone()
                    .into_shape_with_order((wl, p * q, wr))
                    .expect("standard")
            })
            .collect();
        linalg::canonicalize_chain(&mut chain, 0)?;
        linalg::compress_chain(&mut chain, usize::MAX, rel_tol)?;
        // Spread the overall scale evenly so no site carries a huge norm.
        let n = chain.len();
        let total: f64 = chain.iter().map(linalg::frobenius).map(f64::ln).sum();
        let target = (total / n as f64).exp();
        for t in &mut chain {
            let f = linalg::frobenius(t);
            if f > 0.0 {
                t.mapv_inplace(|z| z * (target / f));
            }
        }
        let tensors = chain
            .into_iter()
            .map(|t| {
                let (l, _, r) = t.dim();
                t.into_shape_with_order((l, PHYS_DIM, PHYS_DIM, r))
                    .expect("standard")
            })
            .collect();
        Mpo::from_tensors(tensors)
    }
}

/// `out[(a,w), s, (b,v)] = Σ_t W[a,s,t,b] · A[w,t,v]`.
fn apply_site(w: &Array4<C64>, a: &Array3<C64>) -> Array3<C64> {
    let (wl, p, q, wr) = w.dim();
    let (dl, _, dr) = a.dim();
    // W as ((a,s,b), t) and A as (t, (w,v))
    let wm = w
        .view()
        .permuted_axes([0, 1, 3, 2])
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((wl * p * wr, q))
        .expect("standard");
    let am = a
        .view()
        .permuted_axes([1, 0, 2])
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((q, dl * dr))
        .expect("standard");
    let prod = wm
        .dot(&am)
        .into_shape_with_order((wl, p, wr, dl, dr))
        .expect("standard");
    prod.permuted_axes([0, 3, 1, 2, 4])
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((wl * dl, p, wr * dr))
        .expect("standard")
}
