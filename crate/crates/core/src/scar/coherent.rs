use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dynamics::krylov::{evolve_times, KrylovOptions};
use crate::spin::operator::{dot, LocalKind, StateVector};
use crate::spin::{full_space_hamiltonian, ModelParams, SectorBasis};
use crate::{ScarError, ScarResult, C64};

/// `ln C(l, n)`.
pub fn ln_binomial(l: usize, n: usize) -> f64 {
    if n > l {
        return f64::NEG_INFINITY;
    }
    let k = n.min(l - n);
    (0..k).map(|i| ((l - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

/// `|ζ⟩ = ⊗_j ((−1)^j ζ|↑⟩ + |↓⟩) / √(1+|ζ|²)`, kept in factorized form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherentState {
    pub zeta: C64,
    pub l: usize,
}

impl CoherentState {
    pub fn new(zeta: C64, l: usize) -> ScarResult<Self> {
        if !(zeta.re.is_finite() && zeta.im.is_finite()) {
            return Err(ScarError::InvalidParams(format!("zeta = {zeta} is not finite")));
        }
        if l == 0 {
            return Err(ScarError::InvalidParams("coherent state on zero sites".into()));
        }
        Ok(CoherentState { zeta, l })
    }

    /// `(a_j, b_j)`: amplitudes of `|↑⟩` and `|↓⟩` on site `j`.
    pub fn site_amplitudes(&self, j: usize) -> (C64, C64) {
        let inv = 1.0 / (1.0 + self.zeta.norm_sqr()).sqrt();
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        (self.zeta * (sign * inv), C64::new(inv, 0.0))
    }

    /// Amplitude of a configuration given by its spins.
    pub fn amplitude(&self, spins: &[i64]) -> C64 {
        spins.iter().enumerate().fold(C64::new(1.0, 0.0), |acc, (j, &s)| {
            let (a, b) = self.site_amplitudes(j);
            match s {
                1 => acc * a,
                -1 => acc * b,
                _ => C64::new(0.0, 0.0),
            }
        })
    }

    /// Explicit vector in `basis`; configurations outside the basis are dropped,
    /// so a sector basis yields the (unnormalized) sector component.
    pub fn materialize(&self, basis: &Arc<SectorBasis>) -> ScarResult<StateVector> {
        if basis.l() != self.l {
            return Err(ScarError::DimensionMismatch { expected: self.l, found: basis.l() });
        }
        let sites: Vec<(C64, C64)> = (0..self.l).map(|j| self.site_amplitudes(j)).collect();
        let mut out = StateVector::zeros(basis.clone());
        for mask in 0u64..(1u64 << self.l) {
            let mut code = 0u64;
            let mut amp = C64::new(1.0, 0.0);
            for (j, &(a, b)) in sites.iter().enumerate() {
                if mask >> j & 1 == 1 {
                    amp *= a;
                } else {
                    amp *= b;
                    code += 2 * basis.site_weight(j);
                }
            }
            if let Some(k) = basis.index_of(code) {
                out.amps[k] = amp;
            }
        }
        Ok(out)
    }

    /// `⟨ζ|O_j|ζ⟩` from the site amplitudes.
    pub fn local_expectation(&self, kind: LocalKind, j: usize) -> C64 {
        let (a, b) = self.site_amplitudes(j);
        match kind {
            LocalKind::SPlusSq => a.conj() * b * 2.0,
            LocalKind::SMinusSq => b.conj() * a * 2.0,
            LocalKind::Sz => C64::new(a.norm_sqr() - b.norm_sqr(), 0.0),
            LocalKind::SzSq => C64::new(a.norm_sqr() + b.norm_sqr(), 0.0),
        }
    }

    /// The state reached after time `t` under the tower dynamics, `|e^{−iωt}ζ⟩`.
    pub fn evolved(&self, omega: f64, t: f64) -> CoherentState {
        CoherentState { zeta: self.zeta * C64::from_polar(1.0, -omega * t), l: self.l }
    }

    pub fn overlaps(&self) -> Vec<C64> {
        coherent_overlaps(self.zeta, self.l)
    }
}

pub fn build_coherent(zeta: C64, l: usize) -> ScarResult<CoherentState> {
    CoherentState::new(zeta, l)
}

/// `⟨N|ζ⟩ = ζ^N √C(L,N) / (1+|ζ|²)^{L/2}`, evaluated through logarithms.
pub fn coherent_overlaps(zeta: C64, l: usize) -> Vec<C64> {
    if zeta.norm_sqr() == 0.0 {
        return (0..=l).map(|n| C64::new(if n == 0 { 1.0 } else { 0.0 }, 0.0)).collect();
    }
    let ln_r = zeta.norm().ln();
    let ln_norm = 0.5 * l as f64 * zeta.norm_sqr().ln_1p();
    let arg = zeta.arg();
    (0..=l)
        .map(|n| {
            let ln_mag = n as f64 * ln_r + 0.5 * ln_binomial(l, n) - ln_norm;
            C64::from_polar(ln_mag.exp(), n as f64 * arg)
        })
        .collect()
}

/// `|⟨e^{−iωt}ζ|e^{−iHt}|ζ⟩|` with the evolution done numerically.
pub fn revival_check(params: &ModelParams, zeta: C64, t: f64) -> ScarResult<f64> {
    Ok(revival_fidelities(params, zeta, &[t])?[0])
}

/// Revival fidelities at several times from one Krylov trajectory.
pub fn revival_fidelities(params: &ModelParams, zeta: C64, times: &[f64]) -> ScarResult<Vec<f64>> {
    let coh = CoherentState::new(zeta, params.l)?;
    let (basis, h) = full_space_hamiltonian(params)?;
    let psi = coh.materialize(&basis)?;
    let states = evolve_times(&h, &psi, times, &KrylovOptions::with_tol(1e-12))?;
    times
        .iter()
        .zip(&states)
        .map(|(&t, s)| {
            let target = coh.evolved(params.omega(), t).materialize(&basis)?;
            Ok(dot(&target.amps, &s.amps).norm())
        })
        .collect()
}
