//! MPO application, MPS sums, variational-free SVD compression, and a Taylor
//! propagator built from them.

use super::mpo::MpoOperator;
use super::state::MpsState;
use super::tensor::{gemm, rm, rm_mut, svd_truncate, SiteTensor, PHYS};
use crate::{ScarError, ScarResult, C64};

/// Exact `W|ψ⟩`; bond dimensions multiply by the MPO bond dimensions.
pub fn apply_mpo(mpo: &MpoOperator, mps: &MpsState) -> ScarResult<MpsState> {
    if mpo.len() != mps.len() {
        return Err(ScarError::DimensionMismatch { expected: mps.len(), found: mpo.len() });
    }
    let tensors = mps
        .tensors
        .iter()
        .zip(&mpo.sites)
        .map(|(a, w)| {
            let (dl, dr) = (a.dl * w.wl, a.dr * w.wr);
            let mut out = SiteTensor::zeros(dl, dr);
            for (wa, wb, op) in &w.terms {
                for l in 0..a.dl {
                    for s in 0..PHYS {
                        for sp in 0..PHYS {
                            let c = op[s][sp];
                            if c == 0.0 {
                                continue;
                            }
                            for r in 0..a.dr {
                                let k = out.idx(l * w.wl + wa, s, r * w.wr + wb);
                                out.data[k] += a.get(l, sp, r) * c;
                            }
                        }
                    }
                }
            }
            out
        })
        .collect();
    MpsState::new(tensors)
}

/// `α|a⟩ + β|b⟩` as a direct-sum MPS.
pub fn add(a: &MpsState, alpha: C64, b: &MpsState, beta: C64) -> ScarResult<MpsState> {
    if a.len() != b.len() {
        return Err(ScarError::DimensionMismatch { expected: a.len(), found: b.len() });
    }
    let l = a.len();
    if l == 1 {
        let data = a.tensors[0].data.iter().zip(&b.tensors[0].data).map(|(x, y)| alpha * x + beta * y).collect();
        return MpsState::new(vec![SiteTensor { dl: 1, dr: 1, data }]);
    }
    let mut tensors = Vec::with_capacity(l);
    for j in 0..l {
        let (x, y) = (&a.tensors[j], &b.tensors[j]);
        let dl = if j == 0 { 1 } else { x.dl + y.dl };
        let dr = if j + 1 == l { 1 } else { x.dr + y.dr };
        let (ox, oy) = (if j == 0 { (0, 0) } else { (0, x.dl) }, if j + 1 == l { (0, 0) } else { (0, x.dr) });
        let (cx, cy) = if j == 0 { (alpha, beta) } else { (C64::new(1.0, 0.0), C64::new(1.0, 0.0)) };
        let mut t = SiteTensor::zeros(dl, dr);
        for (src, (lo, ro), c) in [(x, (ox.0, oy.0), cx), (y, (ox.1, oy.1), cy)] {
            for l_ in 0..src.dl {
                for s in 0..PHYS {
                    for r in 0..src.dr {
                        let k = t.idx(l_ + lo, s, r + ro);
                        t.data[k] += c * src.get(l_, s, r);
                    }
                }
            }
        }
        tensors.push(t);
    }
    MpsState::new(tensors)
}

/// SVD compression sweep; returns the state with the center at site 0 and
/// adds the discarded weight to its accumulator.
pub fn compress(mps: &MpsState, eps: f64, max_bond: usize) -> ScarResult<MpsState> {
    let mut m = mps.clone();
    m.center = None;
    let l = m.len();
    m.canonicalize(l - 1);
    let mut discarded = 0.0;
    for j in (1..l).rev() {
        let (a, b) = (&m.tensors[j - 1], &m.tensors[j]);
        let (dl, dr) = (b.dl, b.dr);
        let svd = svd_truncate(&b.data, dl, PHYS * dr, eps, max_bond)?;
        discarded += svd.discarded;
        let k = svd.k;
        let mut us = svd.u;
        for row in 0..dl {
            for (kk, s) in svd.s.iter().enumerate() {
                us[row * k + kk] *= *s;
            }
        }
        let mut na = SiteTensor::zeros(a.dl, k);
        gemm(rm_mut(&mut na.data, a.dl * PHYS, k), false, a.as_left_matrix(), rm(&us, dl, k));
        m.tensors[j] = SiteTensor { dl: k, dr, data: svd.vh };
        m.tensors[j - 1] = na;
    }
    m.center = Some(0);
    m.trunc_err = mps.trunc_err + discarded;
    Ok(m)
}

/// Terms kept in the Taylor series of one step.
const TAYLOR_ORDER: usize = 40;

/// `e^{−iH dt}|ψ⟩` by Horner evaluation of the Taylor series, compressing
/// after every MPO application; the order is chosen from a norm bound of
/// the series remainder.
pub fn taylor_step(mps: &MpsState, mpo: &MpoOperator, dt: f64, eps: f64, max_bond: usize) -> ScarResult<MpsState> {
    if dt == 0.0 {
        return Ok(mps.clone());
    }
    let psi = compress(mps, 0.0, usize::MAX)?;
    let n0 = psi.norm();
    // order from ‖(Hdt)^k ψ‖/k! estimated by repeated application
    let mut order = 0;
    let mut term = psi.clone();
    while order < TAYLOR_ORDER {
        order += 1;
        term = compress(&apply_mpo(mpo, &term)?, eps, max_bond)?;
        let s = C64::new(0.0, -dt / order as f64);
        term.scale(s);
        if term.norm() <= 1e-16 * n0 {
            break;
        }
    }
    if order == TAYLOR_ORDER {
        return Err(ScarError::KrylovNonConvergence(format!("Taylor series of step {dt} did not converge")));
    }
    let one = C64::new(1.0, 0.0);
    let mut acc = psi.clone();
    let mut discarded = psi.trunc_err;
    for k in (1..=order).rev() {
        let mut h = compress(&apply_mpo(mpo, &acc)?, eps, max_bond)?;
        h.scale(C64::new(0.0, -dt / k as f64));
        acc = compress(&add(&psi, one, &h, one)?, eps, max_bond)?;
        discarded += h.trunc_err + acc.trunc_err;
    }
    acc.trunc_err = discarded;
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::super::mpo::build_mpo;
    use super::super::state::{apply_squared_raising, product_mps};
    use super::*;
    use crate::dynamics::krylov_evolve;
    use crate::spin::{full_space_hamiltonian, ModelParams, StateVector};

    #[test]
    fn mpo_application_matches_sparse() {
        let p = ModelParams::reference(5);
        let m = apply_squared_raising(&product_mps(C64::new(0.3, -0.8), 5).unwrap(), 2).unwrap();
        let hm = apply_mpo(&build_mpo(&p).unwrap(), &m).unwrap();
        let (_, h) = full_space_hamiltonian(&p).unwrap();
        let want = h.matvec(&m.to_dense().unwrap());
        for (a, b) in hm.to_dense().unwrap().iter().zip(&want) {
            assert!((a - b).norm() < 1e-12);
        }
        let c = compress(&hm, 0.0, usize::MAX).unwrap();
        assert!(c.isometry_residual() < 1e-12);
        for (a, b) in c.to_dense().unwrap().iter().zip(&want) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn sum_is_linear() {
        let a = product_mps(C64::new(0.5, 0.1), 4).unwrap();
        let b = apply_squared_raising(&product_mps(C64::new(-0.2, 0.9), 4).unwrap(), 1).unwrap();
        let (x, y) = (C64::new(0.3, -1.0), C64::new(2.0, 0.5));
        let s = add(&a, x, &b, y).unwrap().to_dense().unwrap();
        let (da, db) = (a.to_dense().unwrap(), b.to_dense().unwrap());
        for k in 0..s.len() {
            assert!((s[k] - (x * da[k] + y * db[k])).norm() < 1e-14);
        }
    }

    #[test]
    fn taylor_step_matches_exact() {
        let p = ModelParams::reference(6);
        let mpo = build_mpo(&p).unwrap();
        let m = apply_squared_raising(&product_mps(C64::new(0.0, -1.0), 6).unwrap(), 3).unwrap();
        let (basis, h) = full_space_hamiltonian(&p).unwrap();
        let v = StateVector::new(basis, m.to_dense().unwrap()).unwrap();
        let out = taylor_step(&m, &mpo, 0.1, 0.0, usize::MAX).unwrap();
        let want = krylov_evolve(&h, &v, 0.1, 1e-13).unwrap();
        for (a, b) in out.to_dense().unwrap().iter().zip(&want.amps) {
            assert!((a - b).norm() < 1e-11);
        }
    }
}
