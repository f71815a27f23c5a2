//! Row-major tensor storage and the dense kernels used by the MPS code.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatMut, MatRef, Par};

use crate::{ScarError, ScarResult, C64};

pub(crate) const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Physical dimension of a spin-1 site.
pub const PHYS: usize = 3;

/// Site tensor `A[l, s, r]`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteTensor {
    pub dl: usize,
    pub dr: usize,
    pub data: Vec<C64>,
}

impl SiteTensor {
    pub fn zeros(dl: usize, dr: usize) -> Self {
        SiteTensor { dl, dr, data: vec![ZERO; dl * PHYS * dr] }
    }

    #[inline]
    pub fn idx(&self, l: usize, s: usize, r: usize) -> usize {
        (l * PHYS + s) * self.dr + r
    }

    pub fn get(&self, l: usize, s: usize, r: usize) -> C64 {
        self.data[self.idx(l, s, r)]
    }

    /// `(dl·3) × dr` view.
    pub fn as_left_matrix(&self) -> MatRef<'_, C64> {
        rm(&self.data, self.dl * PHYS, self.dr)
    }

    /// `dl × (3·dr)` view.
    pub fn as_right_matrix(&self) -> MatRef<'_, C64> {
        rm(&self.data, self.dl, PHYS * self.dr)
    }

    /// Applies a single-site operator `op[s][s′]` to the physical leg.
    pub fn apply_physical(&self, op: &[[C64; 3]; 3]) -> SiteTensor {
        let mut out = SiteTensor::zeros(self.dl, self.dr);
        for l in 0..self.dl {
            for s in 0..PHYS {
                for sp in 0..PHYS {
                    let c = op[s][sp];
                    if c == ZERO {
                        continue;
                    }
                    for r in 0..self.dr {
                        let v = self.get(l, sp, r);
                        let k = out.idx(l, s, r);
                        out.data[k] += c * v;
                    }
                }
            }
        }
        out
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}

pub(crate) fn rm(s: &[C64], r: usize, c: usize) -> MatRef<'_, C64> {
    MatRef::from_row_major_slice(s, r, c)
}

pub(crate) fn rm_mut(s: &mut [C64], r: usize, c: usize) -> MatMut<'_, C64> {
    MatMut::from_row_major_slice_mut(s, r, c)
}

/// `dst (+)= a · b`.
pub(crate) fn gemm(dst: MatMut<'_, C64>, accumulate: bool, a: MatRef<'_, C64>, b: MatRef<'_, C64>) {
    let acc = if accumulate { Accum::Add } else { Accum::Replace };
    matmul(dst, acc, a, b, ONE, Par::Seq);
}

/// `dst (+)= a† · b`.
pub(crate) fn gemm_ah(dst: MatMut<'_, C64>, accumulate: bool, a: MatRef<'_, C64>, b: MatRef<'_, C64>) {
    let acc = if accumulate { Accum::Add } else { Accum::Replace };
    matmul(dst, acc, a.adjoint(), b, ONE, Par::Seq);
}

/// `dst (+)= conj(a) · bᵀ`.
pub(crate) fn gemm_cbt(dst: MatMut<'_, C64>, accumulate: bool, a: MatRef<'_, C64>, b: MatRef<'_, C64>) {
    let acc = if accumulate { Accum::Add } else { Accum::Replace };
    matmul(dst, acc, a.conjugate(), b.transpose(), ONE, Par::Seq);
}

/// `dst (+)= a · bᵀ`.
pub(crate) fn gemm_bt(dst: MatMut<'_, C64>, accumulate: bool, a: MatRef<'_, C64>, b: MatRef<'_, C64>) {
    let acc = if accumulate { Accum::Add } else { Accum::Replace };
    matmul(dst, acc, a, b.transpose(), ONE, Par::Seq);
}

/// Copies a column-major faer matrix into row-major storage.
pub(crate) fn to_row_major(m: MatRef<'_, C64>) -> Vec<C64> {
    let (r, c) = (m.nrows(), m.ncols());
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Thin QR of a row-major `r × c` matrix: `(Q, R)` row-major with inner
/// dimension `min(r, c)`.
pub(crate) fn qr_rm(data: &[C64], r: usize, c: usize) -> (Vec<C64>, Vec<C64>, usize) {
    let m = rm(data, r, c).to_owned();
    let qr = m.qr();
    let q = qr.compute_thin_Q();
    let rr = qr.thin_R();
    let k = q.ncols();
    (to_row_major(q.as_ref()), to_row_major(rr), k)
}

/// Result of a truncated SVD `M ≈ U diag(s) V†`.
pub(crate) struct TruncatedSvd {
    /// `r × k`, row-major.
    pub u: Vec<C64>,
    pub s: Vec<f64>,
    /// `k × c` (already adjoint), row-major.
    pub vh: Vec<C64>,
    pub k: usize,
    /// Discarded weight relative to the total, `Σ_discarded s² / Σ s²`.
    pub discarded: f64,
}

/// SVD of a row-major `r × c` matrix keeping the fewest singular values
/// whose discarded relative weight is at most `eps`, never more than
/// `max_keep`.
pub(crate) fn svd_truncate(data: &[C64], r: usize, c: usize, eps: f64, max_keep: usize) -> ScarResult<TruncatedSvd> {
    let m = rm(data, r, c);
    let svd = m.thin_svd().map_err(|e| ScarError::Eigen(format!("SVD failed: {e:?}")))?;
    let (u, sv, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let n = sv.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sv[b].re.total_cmp(&sv[a].re));
    let s: Vec<f64> = order.iter().map(|&i| sv[i].re.max(0.0)).collect();
    let total: f64 = s.iter().map(|x| x * x).sum();
    let mut keep = n;
    if total > 0.0 {
        let mut tail = 0.0;
        while keep > 1 {
            let next = tail + s[keep - 1] * s[keep - 1];
            if next > eps * total {
                break;
            }
            tail = next;
            keep -= 1;
        }
    } else {
        keep = 1;
    }
    keep = keep.min(max_keep.max(1));
    let discarded = if total > 0.0 { s[keep..].iter().map(|x| x * x).sum::<f64>() / total } else { 0.0 };
    let mut uo = vec![ZERO; r * keep];
    let mut vo = vec![ZERO; keep * c];
    for (k, &i) in order.iter().take(keep).enumerate() {
        for row in 0..r {
            uo[row * keep + k] = u[(row, i)];
        }
        for col in 0..c {
            vo[k * c + col] = v[(col, i)].conj();
        }
    }
    Ok(TruncatedSvd { u: uo, s: s[..keep].to_vec(), vh: vo, k: keep, discarded })
}

/// Owned column-major product `a · b` of row-major operands.
#[allow(dead_code)]
pub(crate) fn product(a: &[C64], m: usize, k: usize, b: &[C64], n: usize) -> Vec<C64> {
    let mut out = Mat::<C64>::zeros(m, n);
    gemm(out.as_mut(), false, rm(a, m, k), rm(b, k, n));
    to_row_major(out.as_ref())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(r: usize, c: usize) -> Vec<C64> {
        (0..r * c).map(|k| C64::new((k as f64 * 0.37).sin(), (k as f64 * 0.11).cos())).collect()
    }

    #[test]
    fn qr_reconstructs() {
        let (r, c) = (7, 4);
        let a = sample(r, c);
        let (q, rr, k) = qr_rm(&a, r, c);
        assert_eq!(k, 4);
        let back = product(&q, r, k, &rr, c);
        for (x, y) in back.iter().zip(&a) {
            assert!((x - y).norm() < 1e-13);
        }
    }

    #[test]
    fn untruncated_svd_reconstructs() {
        let (r, c) = (5, 6);
        let a = sample(r, c);
        let t = svd_truncate(&a, r, c, 0.0, usize::MAX).unwrap();
        assert_eq!(t.k, 5);
        let mut us = t.u.clone();
        for row in 0..r {
            for k in 0..t.k {
                us[row * t.k + k] *= t.s[k];
            }
        }
        let back = product(&us, r, t.k, &t.vh, c);
        for (x, y) in back.iter().zip(&a) {
            assert!((x - y).norm() < 1e-12);
        }
        assert!(t.s.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn truncation_respects_cap_and_weight() {
        let a = sample(6, 6);
        let t = svd_truncate(&a, 6, 6, 0.0, 2).unwrap();
        assert_eq!(t.k, 2);
        assert!(t.discarded > 0.0);
        let loose = svd_truncate(&a, 6, 6, 1.0, 6).unwrap();
        assert_eq!(loose.k, 1);
    }
}
