//! Eigenstate expansion of the coherent-state autocorrelator.

use serde::{Deserialize, Serialize};

use crate::scar::{CoherentState, ScarTower};
use crate::spin::operator::{apply_local, image_basis, LocalKind};
use crate::spin::spectrum::{full_spectrum_capped, Spectrum};
use crate::spin::ModelParams;
use crate::{ScarError, ScarResult, C64, DEFAULT_DENSE_CAP};

/// Tolerance used to locate the scar inside a degenerate eigenspace.
const SCAR_ENERGY_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LehmannTerm {
    /// Tower index of the bra and ket scar (only `N′ = N` survives).
    pub n: usize,
    /// Index of `|E_i⟩` in its sector spectrum.
    pub eigen_index: usize,
    /// `E_i − ωN`.
    pub frequency: f64,
    pub weight: C64,
    pub is_scar: bool,
}

/// `⟨ζ|O′(t)O|ζ⟩ = Σ w e^{−i(E_i − ωN)t}` with `O = (S⁺_{x0})²`, `O′ = (S⁻_{x0+x})²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralDecomposition {
    pub terms: Vec<LehmannTerm>,
    /// `⟨ζ|O′|ζ⟩⟨ζ|O|ζ⟩`, multiplied by `e^{−iωt}` in the connected part.
    pub disconnected: C64,
    pub omega: f64,
    pub x0: usize,
    pub x: i64,
}

impl SpectralDecomposition {
    fn sum(&self, t: f64, keep: impl Fn(&LehmannTerm) -> bool) -> C64 {
        self.terms.iter().filter(|w| keep(w)).map(|w| w.weight * C64::from_polar(1.0, -w.frequency * t)).sum()
    }

    /// Full two-point function.
    pub fn evaluate(&self, t: f64) -> C64 {
        self.sum(t, |_| true)
    }

    pub fn connected(&self, t: f64) -> C64 {
        self.evaluate(t) - self.disconnected * C64::from_polar(1.0, -self.omega * t)
    }

    /// Two-point function with `Q_W` inserted: scar eigenstates dropped.
    pub fn projected_w(&self, t: f64) -> C64 {
        self.sum(t, |w| !w.is_scar)
    }

    pub fn scar_term_total(&self, t: f64) -> C64 {
        self.sum(t, |w| w.is_scar)
    }

    pub fn total_weight(&self) -> C64 {
        self.terms.iter().map(|w| w.weight).sum()
    }
}

/// Spectrum of the sector of `|N+1⟩` with the scar rotated into one column.
pub(crate) fn aligned_sector_spectrum(
    params: &ModelParams,
    tower: &ScarTower,
    n: usize,
) -> ScarResult<(Spectrum, Option<usize>)> {
    let target = tower.state(n + 1)?;
    let mut spec = full_spectrum_capped(params, &target.basis, DEFAULT_DENSE_CAP)?;
    let real: Vec<f64> = target.amps.iter().map(|a| a.re).collect();
    let idx = spec.align_eigenvector(&real, tower.energy(n + 1), SCAR_ENERGY_TOL);
    Ok((spec, idx))
}

pub fn lehmann_decomposition(params: &ModelParams, zeta: C64, x0: usize, x: i64) -> ScarResult<SpectralDecomposition> {
    let l = params.l;
    let y = x0 as i64 + x;
    if x0 >= l || y < 0 || y >= l as i64 {
        return Err(ScarError::OutOfRange(format!("sites {x0} and {y} on L = {l}")));
    }
    let y = y as usize;
    let tower = ScarTower::build(params)?;
    let coh = CoherentState::new(zeta, l)?;
    let c = coh.overlaps();
    let mut terms = Vec::new();
    for n in 0..l {
        let p = c[n].norm_sqr();
        if p == 0.0 {
            continue;
        }
        let scar = tower.state(n)?;
        let (spec, scar_idx) = aligned_sector_spectrum(params, &tower, n)?;
        let to = image_basis(LocalKind::SPlusSq, &scar.basis)?;
        let a = spec.coefficients(&apply_local(LocalKind::SPlusSq, x0, scar, &to)?.amps);
        let b = if y == x0 { a.clone() } else { spec.coefficients(&apply_local(LocalKind::SPlusSq, y, scar, &to)?.amps) };
        for i in 0..spec.dim() {
            let weight = b[i].conj() * a[i] * p;
            if weight.norm_sqr() == 0.0 {
                continue;
            }
            terms.push(LehmannTerm {
                n,
                eigen_index: i,
                frequency: spec.eigenvalues[i] - tower.energy(n),
                weight,
                is_scar: Some(i) == scar_idx,
            });
        }
    }
    let disconnected = coh.local_expectation(LocalKind::SMinusSq, y) * coh.local_expectation(LocalKind::SPlusSq, x0);
    Ok(SpectralDecomposition { terms, disconnected, omega: params.omega(), x0, x })
}
