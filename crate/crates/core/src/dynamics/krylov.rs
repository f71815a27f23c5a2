//! Lanczos approximation of `e^{−iHt} v` for Hermitian `H`.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::spin::operator::{dot, norm, SparseOperator, StateVector};
use crate::spin::spectrum::symmetric_eigen;
use crate::{ScarError, ScarResult, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KrylovOptions {
    /// Target bound on `‖result − e^{−iHt}v‖ / ‖v‖` over the whole interval.
    pub tol: f64,
    /// Largest Krylov subspace built per substep.
    pub max_dim: usize,
    /// Substeps allowed before giving up.
    pub max_substeps: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions { tol: 1e-10, max_dim: 30, max_substeps: 100_000 }
    }
}

impl KrylovOptions {
    pub fn with_tol(tol: f64) -> Self {
        KrylovOptions { tol, ..Default::default() }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct KrylovStats {
    pub substeps: usize,
    pub matvecs: usize,
    /// Sum of the accepted a-posteriori error estimates, relative to `‖v‖`.
    pub error_estimate: f64,
}

struct Lanczos {
    vectors: Vec<Vec<C64>>,
    evals: Vec<f64>,
    evecs: Mat<f64>,
    /// Norm of the residual vector after the last step; zero on breakdown.
    beta_next: f64,
}

impl Lanczos {
    /// Coefficients of `e^{−i T s} e₁` in the Lanczos basis.
    fn propagate(&self, s: f64) -> Vec<C64> {
        let k = self.evals.len();
        let mut y = vec![C64::new(0.0, 0.0); k];
        for (m, &lam) in self.evals.iter().enumerate() {
            let phase = C64::from_polar(self.evecs[(0, m)], -lam * s);
            for (r, yr) in y.iter_mut().enumerate() {
                *yr += phase * self.evecs[(r, m)];
            }
        }
        y
    }
}

fn build_lanczos<F>(apply: &mut F, start: &[C64], max_dim: usize, matvecs: &mut usize) -> ScarResult<Lanczos>
where
    F: FnMut(&[C64], &mut [C64]),
{
    let n = start.len();
    let b0 = norm(start);
    let mut vectors: Vec<Vec<C64>> = vec![start.iter().map(|a| a / b0).collect()];
    let mut alpha = Vec::with_capacity(max_dim);
    let mut beta: Vec<f64> = Vec::with_capacity(max_dim);
    let mut w = vec![C64::new(0.0, 0.0); n];
    let mut beta_next = 0.0;
    let mut scale = 0.0f64;
    for j in 0..max_dim.min(n) {
        apply(&vectors[j], &mut w);
        *matvecs += 1;
        let a = dot(&vectors[j], &w).re;
        alpha.push(a);
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for q in &vectors {
                let c = dot(q, &w);
                w.iter_mut().zip(q).for_each(|(x, qi)| *x -= c * qi);
            }
        }
        let b = norm(&w);
        scale = scale.max(a.abs() + b + beta.last().copied().unwrap_or(0.0));
        if b <= 1e-13 * scale.max(1e-300) || j + 1 == n {
            beta_next = 0.0;
            break;
        }
        beta_next = b;
        if j + 1 == max_dim.min(n) {
            break;
        }
        beta.push(b);
        vectors.push(w.iter().map(|x| x / b).collect());
    }
    let k = alpha.len();
    vectors.truncate(k);
    let t = Mat::<f64>::from_fn(k, k, |r, c| {
        if r == c {
            alpha[r]
        } else if r + 1 == c {
            beta[r]
        } else if c + 1 == r {
            beta[c]
        } else {
            0.0
        }
    });
    let (evals, evecs) = symmetric_eigen(t.as_ref())?;
    Ok(Lanczos { vectors, evals, evecs, beta_next })
}

/// `e^{−iHt} v` where `apply(x, out)` writes `H x` into `out`.
///
/// The interval is split adaptively; each substep is accepted when the
/// residual estimate `β_m |e_mᵀ e^{−iTτ} e₁| ‖w‖` is below `tol‖v‖τ/|t|`.
/// A rejected substep is retried at half length on the same Krylov basis.
pub fn expm_krylov<F>(apply: F, v: &[C64], t: f64, opts: &KrylovOptions) -> ScarResult<Vec<C64>>
where
    F: FnMut(&[C64], &mut [C64]),
{
    expm_krylov_with_stats(apply, v, t, opts).map(|(w, _)| w)
}

pub fn expm_krylov_with_stats<F>(
    mut apply: F,
    v: &[C64],
    t: f64,
    opts: &KrylovOptions,
) -> ScarResult<(Vec<C64>, KrylovStats)>
where
    F: FnMut(&[C64], &mut [C64]),
{
    let mut stats = KrylovStats::default();
    let vnorm = norm(v);
    if t == 0.0 || vnorm == 0.0 {
        return Ok((v.to_vec(), stats));
    }
    if !t.is_finite() {
        return Err(ScarError::KrylovNonConvergence(format!("non-finite time {t}")));
    }
    let total = t.abs();
    let sign = t.signum();
    let mut remaining = total;
    let mut tau = total;
    let mut w = v.to_vec();
    let m = opts.max_dim.max(2);
    while remaining > 0.0 {
        if stats.substeps >= opts.max_substeps {
            return Err(ScarError::KrylovNonConvergence(format!(
                "{} substeps used, {remaining:.3e} of {total:.3e} left",
                stats.substeps
            )));
        }
        let wnorm = norm(&w);
        if wnorm == 0.0 {
            break;
        }
        let lz = build_lanczos(&mut apply, &w, m, &mut stats.matvecs)?;
        tau = tau.min(remaining);
        let (y, err) = loop {
            let y = lz.propagate(sign * tau);
            if lz.beta_next == 0.0 {
                tau = remaining;
                break (lz.propagate(sign * tau), 0.0);
            }
            let err = lz.beta_next * y.last().unwrap().norm() * wnorm;
            let allowed = opts.tol * vnorm * tau / total;
            if err <= allowed {
                break (y, err);
            }
            tau *= 0.5;
            if tau < total * 1e-14 {
                return Err(ScarError::KrylovNonConvergence(format!(
                    "step size underflow at error estimate {err:.3e}"
                )));
            }
        };
        let mut next = vec![C64::new(0.0, 0.0); w.len()];
        for (yj, q) in y.iter().zip(&lz.vectors) {
            let c = yj * wnorm;
            next.iter_mut().zip(q).for_each(|(x, qi)| *x += c * qi);
        }
        w = next;
        remaining -= tau;
        if remaining <= total * 1e-15 {
            remaining = 0.0;
        }
        stats.substeps += 1;
        stats.error_estimate += err / vnorm;
        if err > 0.0 {
            let allowed = opts.tol * vnorm * tau / total;
            let grow = (0.9 * (allowed / err).powf(1.0 / lz.vectors.len() as f64)).clamp(0.5, 2.0);
            tau *= grow;
        } else {
            tau *= 2.0;
        }
    }
    Ok((w, stats))
}

/// `e^{−iHt} v` for a sparse Hermitian operator.
pub fn krylov_evolve(h: &SparseOperator, v: &StateVector, t: f64, tol: f64) -> ScarResult<StateVector> {
    krylov_evolve_with(h, v, t, &KrylovOptions::with_tol(tol))
}

pub fn krylov_evolve_with(
    h: &SparseOperator,
    v: &StateVector,
    t: f64,
    opts: &KrylovOptions,
) -> ScarResult<StateVector> {
    check_evolution(h, v)?;
    let amps = expm_krylov(|x, out| h.matvec_into(x, out), &v.amps, t, opts)?;
    Ok(StateVector { basis: v.basis.clone(), amps })
}

fn check_evolution(h: &SparseOperator, v: &StateVector) -> ScarResult<()> {
    if !h.is_hermitian() {
        return Err(ScarError::Unsupported("Krylov evolution needs a Hermitian operator".into()));
    }
    if !h.domain().same_space(&v.basis) || h.dim() != v.dim() {
        return Err(ScarError::DimensionMismatch { expected: h.dim(), found: v.dim() });
    }
    Ok(())
}

/// Calls `f(k, e^{−iHt_k} v)` for each requested time, stepping from one
/// time to the next so that each interval is evolved once.
pub fn for_each_time<F>(
    h: &SparseOperator,
    v: &StateVector,
    times: &[f64],
    opts: &KrylovOptions,
    mut f: F,
) -> ScarResult<()>
where
    F: FnMut(usize, &[C64]) -> ScarResult<()>,
{
    check_evolution(h, v)?;
    let mut current = v.amps.clone();
    let mut t_now = 0.0;
    for (k, &t) in times.iter().enumerate() {
        current = expm_krylov(|x, o| h.matvec_into(x, o), &current, t - t_now, opts)?;
        t_now = t;
        f(k, &current)?;
    }
    Ok(())
}

/// States `e^{−iHt_k} v` for each requested time.
pub fn evolve_times(
    h: &SparseOperator,
    v: &StateVector,
    times: &[f64],
    opts: &KrylovOptions,
) -> ScarResult<Vec<StateVector>> {
    let mut out = Vec::with_capacity(times.len());
    for_each_time(h, v, times, opts, |_, amps| {
        out.push(StateVector { basis: v.basis.clone(), amps: amps.to_vec() });
        Ok(())
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{build_hamiltonian, ModelParams, SectorBasis};
    use std::sync::Arc;

    #[test]
    fn zero_time_is_identity() {
        let v = vec![C64::new(1.0, 2.0), C64::new(-0.5, 0.0)];
        let w = expm_krylov(|x, o| o.copy_from_slice(x), &v, 0.0, &KrylovOptions::default()).unwrap();
        assert_eq!(w, v);
    }

    #[test]
    fn diagonal_operator_gets_exact_phases() {
        let d = [0.3, -1.7, 2.5, 0.0, 4.1];
        let v: Vec<C64> = (0..5).map(|i| C64::new(1.0, i as f64)).collect();
        let w = expm_krylov(
            |x, o| o.iter_mut().zip(x).zip(d).for_each(|((oi, xi), di)| *oi = xi * di),
            &v,
            3.3,
            &KrylovOptions::default(),
        )
        .unwrap();
        for i in 0..5 {
            let want = v[i] * C64::from_polar(1.0, -d[i] * 3.3);
            assert!((w[i] - want).norm() < 1e-12);
        }
    }

    #[test]
    fn small_subspace_forces_substeps() {
        let p = ModelParams::reference(6);
        let b = Arc::new(SectorBasis::new(6, 0).unwrap());
        let h = build_hamiltonian(&p, &b).unwrap();
        let v: Vec<C64> = (0..b.dim()).map(|i| C64::new((i as f64 * 0.7).sin(), 0.0)).collect();
        let opts = KrylovOptions { max_dim: 6, ..Default::default() };
        let (a, stats) = expm_krylov_with_stats(|x, o| h.matvec_into(x, o), &v, 4.0, &opts).unwrap();
        assert!(stats.substeps > 1);
        let b2 = expm_krylov(|x, o| h.matvec_into(x, o), &v, 4.0, &KrylovOptions::with_tol(1e-13)).unwrap();
        let diff: f64 = a.iter().zip(&b2).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
        assert!(diff < 1e-9 * norm(&v));
    }

    #[test]
    fn backward_then_forward_returns() {
        let p = ModelParams::reference(5);
        let b = Arc::new(SectorBasis::new(5, 1).unwrap());
        let h = build_hamiltonian(&p, &b).unwrap();
        let v = StateVector::new(b.clone(), (0..b.dim()).map(|i| C64::new(1.0, i as f64 * 0.1)).collect())
            .unwrap();
        let fwd = krylov_evolve(&h, &v, 2.5, 1e-12).unwrap();
        let back = krylov_evolve(&h, &fwd, -2.5, 1e-12).unwrap();
        let diff: f64 = back.amps.iter().zip(&v.amps).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
        assert!(diff < 1e-10 * v.norm());
        assert!((fwd.norm() - v.norm()).abs() < 1e-10 * v.norm());
    }
}
