//! Open-boundary matrix-product states of spin-1 chains.

use faer::Mat;

use super::mpo::MpoOperator;
use super::tensor::{gemm, gemm_ah, qr_rm, rm, rm_mut, to_row_major, SiteTensor, ONE, PHYS, ZERO};
use crate::scar::CoherentState;
use crate::spin::LocalKind;
use crate::{ScarError, ScarResult, C64};

pub type OpMatrix = [[C64; 3]; 3];

pub fn op_matrix(kind: LocalKind) -> OpMatrix {
    let m = kind.matrix();
    let mut out = [[ZERO; 3]; 3];
    for s in 0..3 {
        for sp in 0..3 {
            out[s][sp] = C64::new(m[s][sp], 0.0);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct MpsState {
    pub tensors: Vec<SiteTensor>,
    /// Orthogonality center; `None` when no gauge is known.
    pub center: Option<usize>,
    /// Accumulated discarded weight of all truncations so far.
    pub trunc_err: f64,
}

impl MpsState {
    pub fn new(tensors: Vec<SiteTensor>) -> ScarResult<Self> {
        if tensors.is_empty() {
            return Err(ScarError::InvalidParams("MPS with zero sites".into()));
        }
        if tensors[0].dl != 1 || tensors[tensors.len() - 1].dr != 1 {
            return Err(ScarError::InvalidParams("open MPS needs unit boundary bonds".into()));
        }
        for (k, w) in tensors.windows(2).enumerate() {
            if w[0].dr != w[1].dl {
                return Err(ScarError::InvalidParams(format!("bond {k}: {} != {}", w[0].dr, w[1].dl)));
            }
        }
        Ok(MpsState { tensors, center: None, trunc_err: 0.0 })
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Dimensions of the `L − 1` internal bonds.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.len() - 1].iter().map(|t| t.dr).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Moves the orthogonality center to `site`, bringing the state into
    /// mixed-canonical form if it was not.
    pub fn canonicalize(&mut self, site: usize) {
        let l = self.len();
        match self.center {
            None => {
                for j in 0..site {
                    self.shift_right(j);
                }
                for j in (site + 1..l).rev() {
                    self.shift_left(j);
                }
            }
            Some(c) => {
                for j in c..site {
                    self.shift_right(j);
                }
                for j in (site + 1..=c).rev() {
                    self.shift_left(j);
                }
            }
        }
        self.center = Some(site);
    }

    /// QR of site `j`; the R factor is absorbed into site `j+1`.
    pub(crate) fn shift_right(&mut self, j: usize) {
        let a = &self.tensors[j];
        let (dl, dr) = (a.dl, a.dr);
        let (q, r, k) = qr_rm(&a.data, dl * PHYS, dr);
        self.tensors[j] = SiteTensor { dl, dr: k, data: q };
        let b = &self.tensors[j + 1];
        let mut nb = SiteTensor::zeros(k, b.dr);
        gemm(rm_mut(&mut nb.data, k, PHYS * b.dr), false, rm(&r, k, dr), b.as_right_matrix());
        self.tensors[j + 1] = nb;
    }

    /// LQ of site `j`; the L factor is absorbed into site `j−1`.
    pub(crate) fn shift_left(&mut self, j: usize) {
        let a = &self.tensors[j];
        let (dl, dr) = (a.dl, a.dr);
        // A = L Q  ⇔  Aᵀ = Qᵀ Lᵀ; use the QR of A† = Q' R' so A = R'† Q'†
        let adj = rm(&a.data, dl, PHYS * dr).adjoint().to_owned();
        let adj_rm = to_row_major(adj.as_ref());
        let (q, r, k) = qr_rm(&adj_rm, PHYS * dr, dl);
        let qh = rm(&q, PHYS * dr, k).adjoint().to_owned();
        let lmat = rm(&r, k, dl).adjoint().to_owned();
        self.tensors[j] = SiteTensor { dl: k, dr, data: to_row_major(qh.as_ref()) };
        let b = &self.tensors[j - 1];
        let mut nb = SiteTensor::zeros(b.dl, k);
        gemm(rm_mut(&mut nb.data, b.dl * PHYS, k), false, b.as_left_matrix(), lmat.as_ref());
        self.tensors[j - 1] = nb;
    }

    /// Norm, read off the center when one is set.
    pub fn norm(&self) -> f64 {
        match self.center {
            Some(c) => self.tensors[c].norm(),
            None => self.overlap(self).unwrap_or(ZERO).re.max(0.0).sqrt(),
        }
    }

    /// Rescales to unit norm and returns the previous norm.
    pub fn normalize(&mut self) -> f64 {
        let n = self.norm();
        if n > 0.0 {
            let c = self.center.unwrap_or(0);
            self.tensors[c].data.iter_mut().for_each(|x| *x /= n);
        }
        n
    }

    pub fn scale(&mut self, s: C64) {
        let c = self.center.unwrap_or(0);
        self.tensors[c].data.iter_mut().for_each(|x| *x *= s);
    }

    /// Largest deviation from the isometry conditions implied by the center.
    pub fn isometry_residual(&self) -> f64 {
        let Some(c) = self.center else { return f64::INFINITY };
        let mut worst: f64 = 0.0;
        for (j, a) in self.tensors.iter().enumerate() {
            if j == c {
                continue;
            }
            let (g, k) = if j < c {
                let mut g = Mat::<C64>::zeros(a.dr, a.dr);
                gemm_ah(g.as_mut(), false, a.as_left_matrix(), a.as_left_matrix());
                (g, a.dr)
            } else {
                let m = a.as_right_matrix();
                let mut g = Mat::<C64>::zeros(a.dl, a.dl);
                super::tensor::gemm_cbt(g.as_mut(), false, m, m);
                (g, a.dl)
            };
            for r in 0..k {
                for s in 0..k {
                    let id = if r == s { ONE } else { ZERO };
                    worst = worst.max((g[(r, s)] - id).norm());
                }
            }
        }
        worst
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &MpsState) -> ScarResult<C64> {
        sandwich(self, other, &[])
    }

    /// Applies a single-site operator; bond dimensions are unchanged and the
    /// center, if any, moves to `site`.
    pub fn apply_local(&mut self, op: &OpMatrix, site: usize) -> ScarResult<()> {
        if site >= self.len() {
            return Err(ScarError::OutOfRange(format!("site {site} on L = {}", self.len())));
        }
        if self.center.is_some() {
            self.canonicalize(site);
        }
        self.tensors[site] = self.tensors[site].apply_physical(op);
        Ok(())
    }

    /// Amplitudes over the full `3^L` basis ordered like `SectorBasis::full`.
    pub fn to_dense(&self) -> ScarResult<Vec<C64>> {
        if self.len() > 14 {
            return Err(ScarError::DenseCapExceeded { dim: 3usize.pow(self.len() as u32), cap: 3usize.pow(14) });
        }
        // row vector over (configurations so far) × right bond
        let mut acc = vec![ONE];
        let mut n = 1usize;
        for a in &self.tensors {
            let mut next = vec![ZERO; n * PHYS * a.dr];
            gemm(rm_mut(&mut next, n, PHYS * a.dr), false, rm(&acc, n, a.dl), a.as_right_matrix());
            acc = next;
            n *= PHYS;
        }
        Ok(acc)
    }

    /// `⟨ψ|W|ψ⟩ / ⟨ψ|ψ⟩` for an MPO.
    pub fn expectation(&self, mpo: &MpoOperator) -> ScarResult<f64> {
        if mpo.len() != self.len() {
            return Err(ScarError::DimensionMismatch { expected: self.len(), found: mpo.len() });
        }
        let mut env = vec![ONE];
        for (a, w) in self.tensors.iter().zip(&mpo.sites) {
            env = super::tdvp::update_left(&env, w.wl, a, a, w);
        }
        let nn = self.overlap(self)?.re;
        Ok(env[0].re / nn)
    }

    /// `⟨ψ|O_j|ψ⟩ / ⟨ψ|ψ⟩` for every site.
    pub fn local_expectations(&self, op: &OpMatrix) -> ScarResult<Vec<C64>> {
        let profile = site_profile(self, self, op)?;
        let nn = self.overlap(self)?;
        Ok(profile.into_iter().map(|v| v / nn).collect())
    }

    /// `Σ_j ⟨Sᶻ_j⟩`.
    pub fn magnetization(&self) -> ScarResult<f64> {
        Ok(self.local_expectations(&op_matrix(LocalKind::Sz))?.iter().map(|v| v.re).sum())
    }
}

/// One transfer step `E ← Σ_{s,s′} A_bra[s]† E op[s][s′] A_ket[s′]`, with `E`
/// of shape `χ_bra × χ_ket`.
fn transfer(env: &[C64], bra: &SiteTensor, ket: &SiteTensor, op: Option<&OpMatrix>) -> Vec<C64> {
    // T[α′][s′ β] = Σ_α E[α′][α] ket[α][s′ β]
    let mut t = vec![ZERO; bra.dl * PHYS * ket.dr];
    gemm(rm_mut(&mut t, bra.dl, PHYS * ket.dr), false, rm(env, bra.dl, ket.dl), ket.as_right_matrix());
    let t = match op {
        None => t,
        Some(op) => {
            let tt = SiteTensor { dl: bra.dl, dr: ket.dr, data: t };
            tt.apply_physical(op).data
        }
    };
    let mut out = vec![ZERO; bra.dr * ket.dr];
    gemm_ah(rm_mut(&mut out, bra.dr, ket.dr), false, bra.as_left_matrix(), rm(&t, bra.dl * PHYS, ket.dr));
    out
}

fn check_pair(bra: &MpsState, ket: &MpsState) -> ScarResult<()> {
    if bra.len() != ket.len() {
        return Err(ScarError::DimensionMismatch { expected: bra.len(), found: ket.len() });
    }
    Ok(())
}

/// `⟨bra| Π ops |ket⟩` with single-site operators at the listed sites.
pub fn sandwich(bra: &MpsState, ket: &MpsState, ops: &[(usize, OpMatrix)]) -> ScarResult<C64> {
    check_pair(bra, ket)?;
    let mut env = vec![ONE];
    for j in 0..bra.len() {
        let op = ops.iter().find(|(s, _)| *s == j).map(|(_, o)| o);
        env = transfer(&env, &bra.tensors[j], &ket.tensors[j], op);
    }
    Ok(env[0])
}

/// `⟨bra|O_j|ket⟩` for every site `j`, in `O(L)` transfer steps.
pub fn site_profile(bra: &MpsState, ket: &MpsState, op: &OpMatrix) -> ScarResult<Vec<C64>> {
    check_pair(bra, ket)?;
    let l = bra.len();
    let mut left = vec![vec![ONE]];
    for j in 0..l {
        let next = transfer(&left[j], &bra.tensors[j], &ket.tensors[j], None);
        left.push(next);
    }
    let mut out = vec![ZERO; l];
    // right environment R[β′][β], folded from the right
    let mut right = vec![ONE];
    for j in (0..l).rev() {
        let with_op = transfer(&left[j], &bra.tensors[j], &ket.tensors[j], Some(op));
        out[j] = with_op.iter().zip(&right).map(|(a, b)| a * b).sum();
        right = transfer_right(&right, &bra.tensors[j], &ket.tensors[j]);
    }
    Ok(out)
}

/// `R ← Σ_s A_bra[s]^* R A_ket[s]ᵀ` over one site from the right.
fn transfer_right(env: &[C64], bra: &SiteTensor, ket: &SiteTensor) -> Vec<C64> {
    // T[α][s β′] = Σ_β ket[α s][β] R[β′][β]
    let mut t = vec![ZERO; ket.dl * PHYS * bra.dr];
    super::tensor::gemm_bt(rm_mut(&mut t, ket.dl * PHYS, bra.dr), false, ket.as_left_matrix(), rm(env, bra.dr, ket.dr));
    let mut out = vec![ZERO; bra.dl * ket.dl];
    super::tensor::gemm_cbt(rm_mut(&mut out, bra.dl, ket.dl), false, bra.as_right_matrix(), rm(&t, ket.dl, PHYS * bra.dr));
    out
}

/// Bond-dimension-one coherent state `|ζ⟩`.
pub fn product_mps(zeta: C64, l: usize) -> ScarResult<MpsState> {
    let coh = CoherentState::new(zeta, l)?;
    let tensors = (0..l)
        .map(|j| {
            let (a, b) = coh.site_amplitudes(j);
            SiteTensor { dl: 1, dr: 1, data: vec![a, ZERO, b] }
        })
        .collect();
    let mut mps = MpsState::new(tensors)?;
    mps.center = Some(0);
    Ok(mps)
}

/// `(S⁺_site)²|ψ⟩`, unnormalized.
pub fn apply_squared_raising(mps: &MpsState, site: usize) -> ScarResult<MpsState> {
    let mut out = mps.clone();
    out.apply_local(&op_matrix(LocalKind::SPlusSq), site)?;
    Ok(out)
}
