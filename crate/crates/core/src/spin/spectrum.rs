use std::sync::Arc;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self, ComputeEigenvectors};
use faer::{Mat, MatRef};

use super::basis::SectorBasis;
use super::hamiltonian::build_hamiltonian;
use super::operator::SparseOperator;
use super::params::ModelParams;
use crate::{ScarError, ScarResult, C64, DEFAULT_DENSE_CAP};

/// Eigenpairs of a real symmetric sector Hamiltonian, ascending.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub basis: Arc<SectorBasis>,
    pub eigenvalues: Vec<f64>,
    /// Column `i` is the eigenvector of `eigenvalues[i]`.
    pub eigenvectors: Mat<f64>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, i: usize) -> &[f64] {
        self.eigenvectors.col_as_slice(i)
    }

    /// `⟨E_i|v⟩` for all `i`.
    pub fn coefficients(&self, v: &[C64]) -> Vec<C64> {
        let n = self.dim();
        assert_eq!(v.len(), n);
        let x = Mat::<f64>::from_fn(n, 2, |r, c| if c == 0 { v[r].re } else { v[r].im });
        let y = self.eigenvectors.transpose() * &x;
        (0..n).map(|i| C64::new(y[(i, 0)], y[(i, 1)])).collect()
    }

    /// `‖H v_i − λ_i v_i‖`.
    pub fn residual(&self, h: &SparseOperator, i: usize) -> f64 {
        let v: Vec<C64> = self.eigenvector(i).iter().map(|&x| C64::new(x, 0.0)).collect();
        let hv = h.matvec(&v);
        hv.iter()
            .zip(&v)
            .map(|(a, b)| (a - b * self.eigenvalues[i]).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Indices of eigenvalues within `tol` of `energy`.
    pub fn degenerate_block(&self, energy: f64, tol: f64) -> Vec<usize> {
        (0..self.dim()).filter(|&i| (self.eigenvalues[i] - energy).abs() <= tol).collect()
    }

    /// Rotates the eigenbasis inside the eigenspace at `energy` so that one
    /// column equals `target` (a normalized real eigenvector), returning its
    /// index. `None` when `target` is not (to within 1e-8) in that eigenspace.
    pub fn align_eigenvector(&mut self, target: &[f64], energy: f64, tol: f64) -> Option<usize> {
        let block = self.degenerate_block(energy, tol);
        if block.is_empty() {
            return None;
        }
        let coeffs: Vec<f64> = block
            .iter()
            .map(|&i| self.eigenvector(i).iter().zip(target).map(|(a, b)| a * b).sum())
            .collect();
        let weight: f64 = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
        if (weight - 1.0).abs() > 1e-8 {
            return None;
        }
        let k = block.len();
        let u: Vec<f64> = coeffs.iter().map(|c| c / weight).collect();
        // Householder reflector exchanging e_0 and u within the block
        let mut w = u.clone();
        w[0] -= 1.0;
        let ww: f64 = w.iter().map(|x| x * x).sum();
        if ww > 1e-30 {
            let n = self.dim();
            let old: Vec<Vec<f64>> = block.iter().map(|&i| self.eigenvector(i).to_vec()).collect();
            for (a, &col) in block.iter().enumerate() {
                let col_data = self.eigenvectors.col_as_slice_mut(col);
                for r in 0..n {
                    let mut acc = 0.0;
                    for b in 0..k {
                        let refl = if a == b { 1.0 } else { 0.0 } - 2.0 * w[b] * w[a] / ww;
                        acc += old[b][r] * refl;
                    }
                    col_data[r] = acc;
                }
            }
        }
        Some(block[0])
    }
}

/// Real symmetric eigendecomposition written directly into owned storage.
pub fn symmetric_eigen(a: MatRef<'_, f64>) -> ScarResult<(Vec<f64>, Mat<f64>)> {
    let n = a.nrows();
    let par = faer::get_global_parallelism();
    let mut u = Mat::<f64>::zeros(n, n);
    let mut s = faer::diag::Diag::<f64>::zeros(n);
    let scratch = evd::self_adjoint_evd_scratch::<f64>(n, ComputeEigenvectors::Yes, par, Default::default());
    let mut buf = MemBuffer::new(scratch);
    evd::self_adjoint_evd(a, s.as_mut(), Some(u.as_mut()), par, MemStack::new(&mut buf), Default::default())
        .map_err(|e| ScarError::Eigen(format!("{e:?}")))?;
    let vals = (0..n).map(|i| s.column_vector()[i]).collect();
    Ok((vals, u))
}

/// Dense real copy of a Hermitian operator whose entries are all real.
pub fn dense_real(h: &SparseOperator) -> ScarResult<Mat<f64>> {
    let n = h.dim();
    let mut m = Mat::<f64>::zeros(n, n);
    for (r, c, v) in h.entries() {
        if v.im != 0.0 {
            return Err(ScarError::Unsupported("dense real copy of a complex operator".into()));
        }
        m[(r, c)] = v.re;
    }
    Ok(m)
}

/// Full spectrum of `H` in one sector; refuses sectors above `cap`.
pub fn full_spectrum_capped(params: &ModelParams, sector: &Arc<SectorBasis>, cap: usize) -> ScarResult<Spectrum> {
    if sector.dim() > cap {
        return Err(ScarError::DenseCapExceeded { dim: sector.dim(), cap });
    }
    let h = build_hamiltonian(params, sector)?;
    spectrum_of(&h, sector)
}

pub fn full_spectrum(params: &ModelParams, sector: &Arc<SectorBasis>) -> ScarResult<Spectrum> {
    full_spectrum_capped(params, sector, DEFAULT_DENSE_CAP)
}

pub fn spectrum_of(h: &SparseOperator, basis: &Arc<SectorBasis>) -> ScarResult<Spectrum> {
    let dense = dense_real(h)?;
    let (eigenvalues, eigenvectors) = symmetric_eigen(dense.as_ref())?;
    drop(dense);
    Ok(Spectrum { basis: basis.clone(), eigenvalues, eigenvectors })
}
