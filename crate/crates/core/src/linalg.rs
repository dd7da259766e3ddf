//! Small dense kernels used by the chain algorithms: thin QR/LQ, truncated
//! SVD and the sweep helpers that act on a list of rank-3 site tensors.
//!
//! Site tensors are stored as `(left, physical, right)` arrays in standard
//! (row-major) layout, so the two matricizations `(left*phys, right)` and
//! `(left, phys*right)` are free reshapes.

use ndarray::{Array2, Array3, ArrayView2};
use ndarray_linalg::{JobSvd, QR, SVDDC, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: C64 = C64 { re: 1.0, im: 0.0 };

pub(crate) fn as_left_matrix(t: &Array3<C64>) -> ArrayView2<'_, C64> {
    let (dl, p, dr) = t.dim();
    t.view()
        .into_shape_with_order((dl * p, dr))
        .expect("site tensors are kept in standard layout")
}

pub(crate) fn as_right_matrix(t: &Array3<C64>) -> ArrayView2<'_, C64> {
    let (dl, p, dr) = t.dim();
    t.view()
        .into_shape_with_order((dl, p * dr))
        .expect("site tensors are kept in standard layout")
}

pub(crate) fn from_left_matrix(m: Array2<C64>, dl: usize, p: usize) -> Array3<C64> {
    let dr = m.ncols();
    m.as_standard_layout()
        .into_owned()
        .into_shape_with_order((dl, p, dr))
        .expect("row count is dl * p")
}

pub(crate) fn from_right_matrix(m: Array2<C64>, p: usize, dr: usize) -> Array3<C64> {
    let dl = m.nrows();
    m.as_standard_layout()
        .into_owned()
        .into_shape_with_order((dl, p, dr))
        .expect("column count is p * dr")
}

pub(crate) fn frobenius(t: &Array3<C64>) -> f64 {
    t.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Thin QR: `a = q r` with `q` having orthonormal columns.
pub(crate) fn thin_qr(a: &ArrayView2<C64>) -> Result<(Array2<C64>, Array2<C64>)> {
    let (q, r) = a.qr()?;
    Ok((q, r))
}

/// Thin LQ: `a = l q` with `q` having orthonormal rows.
pub(crate) fn thin_lq(a: &ArrayView2<C64>) -> Result<(Array2<C64>, Array2<C64>)> {
    let ah = conj_transpose(a);
    let (q, r) = ah.qr()?;
    Ok((conj_transpose(&r.view()), conj_transpose(&q.view())))
}

pub(crate) fn conj_transpose(a: &ArrayView2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj()).as_standard_layout().into_owned()
}

/// Result of a truncated singular value decomposition.
pub(crate) struct Split {
    pub u: Array2<C64>,
    pub s: Vec<f64>,
    pub vt: Array2<C64>,
    /// Sum of squares of the dropped singular values.
    pub discarded: f64,
}

fn full_svd(a: &ArrayView2<C64>) -> Result<(Array2<C64>, Vec<f64>, Array2<C64>)> {
    match a.svddc(JobSvd::Some) {
        Ok((Some(u), s, Some(vt))) => Ok((u, s.to_vec(), vt)),
        _ => {
            // gesdd occasionally fails to converge on nearly degenerate input;
            // gesvd is slower but more robust.
            let (u, s, vt) = a.svd(true, true)?;
            let (u, vt) = match (u, vt) {
                (Some(u), Some(vt)) => (u, vt),
                _ => return Err(Error::Numerical("svd returned no vectors".into())),
            };
            let k = s.len();
            let u = u.slice(ndarray::s![.., ..k]).to_owned();
            let vt = vt.slice(ndarray::s![..k, ..]).to_owned();
            Ok((u, s.to_vec(), vt))
        }
    }
}

/// SVD keeping at most `chi` values and dropping those below
/// `rel_tol * s_max`. At least one value is always kept.
pub(crate) fn truncated_svd(a: &ArrayView2<C64>, chi: usize, rel_tol: f64) -> Result<Split> {
    let (u, s, vt) = full_svd(a)?;
    let smax = s.first().copied().unwrap_or(0.0);
    let mut keep = s
        .iter()
        .take_while(|&&x| x > rel_tol * smax)
        .count()
        .min(chi)
        .max(1);
    keep = keep.min(s.len());
    let discarded = s[keep..].iter().map(|x| x * x).sum();
    Ok(Split {
        u: u.slice(ndarray::s![.., ..keep]).as_standard_layout().into_owned(),
        s: s[..keep].to_vec(),
        vt: vt.slice(ndarray::s![..keep, ..]).as_standard_layout().into_owned(),
        discarded,
    })
}

/// Makes site `i` a left isometry and pushes the remainder into site `i+1`.
pub(crate) fn shift_center_right(chain: &mut [Array3<C64>], i: usize) -> Result<()> {
    let (dl, p, _) = chain[i].dim();
    let (q, r) = thin_qr(&as_left_matrix(&chain[i]))?;
    chain[i] = from_left_matrix(q, dl, p);
    let (_, p2, dr2) = chain[i + 1].dim();
    let next = r.dot(&as_right_matrix(&chain[i + 1]));
    chain[i + 1] = from_right_matrix(next, p2, dr2);
    Ok(())
}

/// Makes site `i` a right isometry and pushes the remainder into site `i-1`.
pub(crate) fn shift_center_left(chain: &mut [Array3<C64>], i: usize) -> Result<()> {
    let (_, p, dr) = chain[i].dim();
    let (l, q) = thin_lq(&as_right_matrix(&chain[i]))?;
    chain[i] = from_right_matrix(q, p, dr);
    let (dl0, p0, _) = chain[i - 1].dim();
    let prev = as_left_matrix(&chain[i - 1]).dot(&l);
    chain[i - 1] = from_left_matrix(prev, dl0, p0);
    Ok(())
}

/// Brings the chain into mixed canonical form around `center`.
pub(crate) fn canonicalize_chain(chain: &mut [Array3<C64>], center: usize) -> Result<()> {
    for i in 0..center {
        shift_center_right(chain, i)?;
    }
    for i in (center + 1..chain.len()).rev() {
        shift_center_left(chain, i)?;
    }
    Ok(())
}

/// Left-to-right SVD compression of a chain whose orthogonality center is
/// site 0. Returns the discarded weight at every internal bond; the center
/// ends on the last site.
pub(crate) fn compress_chain(
    chain: &mut [Array3<C64>],
    chi: usize,
    rel_tol: f64,
) -> Result<Vec<f64>> {
    let n = chain.len();
    let mut discarded = Vec::with_capacity(n.saturating_sub(1));
    for i in 0..n.saturating_sub(1) {
        let (dl, p, _) = chain[i].dim();
        let split = truncated_svd(&as_left_matrix(&chain[i]), chi, rel_tol)?;
        discarded.push(split.discarded);
        chain[i] = from_left_matrix(split.u, dl, p);
        let mut svt = split.vt;
        for (mut row, &sv) in svt.rows_mut().into_iter().zip(&split.s) {
            row.mapv_inplace(|z| z * sv);
        }
        let (_, p2, dr2) = chain[i + 1].dim();
        let next = svt.dot(&as_right_matrix(&chain[i + 1]));
        chain[i + 1] = from_right_matrix(next, p2, dr2);
    }
    Ok(discarded)
}

/// Permutes the axes of `a` and flattens the first `split` of them into
/// rows and the rest into columns.
pub(crate) fn permute_to_matrix<D: ndarray::Dimension>(
    a: ndarray::ArrayView<'_, C64, D>,
    perm: &[usize],
    split: usize,
) -> Array2<C64> {
    let a = a.into_dyn().permuted_axes(perm.to_vec());
    let shape = a.shape().to_vec();
    let rows: usize = shape[..split].iter().product();
    let cols: usize = shape[split..].iter().product();
    a.as_standard_layout()
        .into_owned()
        .into_shape_with_order((rows, cols))
        .expect("standard layout")
}

/// Largest entry of `|a^H a - 1|` for the left matricization of `t`.
pub(crate) fn left_isometry_residual(t: &Array3<C64>) -> f64 {
    let m = as_left_matrix(t);
    let g = conj_transpose(&m).dot(&m);
    identity_residual(&g)
}

/// Largest entry of `|a a^H - 1|` for the right matricization of `t`.
pub(crate) fn right_isometry_residual(t: &Array3<C64>) -> f64 {
    let m = as_right_matrix(t);
    let g = m.dot(&conj_transpose(&m));
    identity_residual(&g)
}

fn identity_residual(g: &Array2<C64>) -> f64 {
    g.indexed_iter()
        .map(|((i, j), z)| {
            let target = if i == j { ONE } else { ZERO };
            (z - target).norm()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array;

    fn sample(m: usize, n: usize) -> Array2<C64> {
        Array::from_shape_fn((m, n), |(i, j)| {
            C64::new(
                ((i * 7 + j * 13) % 17) as f64 / 17.0 - 0.4,
                ((i * 3 + j * 5) % 11) as f64 / 11.0 - 0.5,
            )
        })
    }

    fn max_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn qr_and_lq_reconstruct() {
        for &(m, n) in &[(6, 3), (3, 6), (4, 4)] {
            let a = sample(m, n);
            let (q, r) = thin_qr(&a.view()).unwrap();
            assert!(max_diff(&q.dot(&r), &a) < 1e-13);
            let (l, q) = thin_lq(&a.view()).unwrap();
            assert!(max_diff(&l.dot(&q), &a) < 1e-13);
            let qqh = q.dot(&conj_transpose(&q.view()));
            assert!(identity_residual(&qqh) < 1e-13);
        }
    }

    #[test]
    fn truncated_svd_reports_discarded_weight() {
        let a = sample(8, 5);
        let full = truncated_svd(&a.view(), usize::MAX, 0.0).unwrap();
        let cut = truncated_svd(&a.view(), 2, 0.0).unwrap();
        assert_eq!(cut.s.len(), 2);
        let tail: f64 = full.s[2..].iter().map(|x| x * x).sum();
        assert!((cut.discarded - tail).abs() < 1e-12);
        assert!(full.s.windows(2).all(|w| w[0] >= w[1]));
    }

    // Some OpenBLAS builds ship a broken DGEMM kernel that only shows up
    // above ~128 rows (see .cargo/config.toml).
    #[test]
    fn large_real_products_are_correct() {
        use ndarray_linalg::SVD;
        let p = 300;
        let a = Array2::from_shape_fn((p, p), |(i, j)| (((i * 31 + j * 17) % 101) as f64 / 101.0) - 0.5);
        let naive = |x: &Array2<f64>, y: &Array2<f64>| {
            Array2::from_shape_fn((p, p), |(i, j)| (0..p).map(|l| x[[i, l]] * y[[l, j]]).sum::<f64>())
        };
        let prod = a.dot(&a.t().to_owned());
        let err = (&prod - &naive(&a, &a.t().to_owned())).iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(err < 1e-10, "dgemm error {err}");
        let (u, s, vt) = a.svd(true, true).unwrap();
        let us = u.unwrap() * &s;
        let rec = naive(&us, &vt.unwrap());
        let err = (&rec - &a).iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(err < 1e-10, "svd error {err}");
    }
}
