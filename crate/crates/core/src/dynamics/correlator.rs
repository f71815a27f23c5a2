//! Autocorrelators of `(S⁺)²` computed by exact Krylov evolution.

use std::collections::BTreeMap;
use std::sync::Arc;

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::grid::{CorrelatorGrid, GridMetadata, StateLabel};
use super::krylov::{expm_krylov, for_each_time, KrylovOptions};
use crate::scar::{CoherentState, ScarTower};
use crate::spin::operator::{apply_local, dot, local_operator, LocalKind, StateVector};
use crate::spin::spectrum::{full_spectrum_capped, Spectrum};
use crate::spin::{full_space_hamiltonian, ModelParams, SectorBasis};
use crate::{ScarError, ScarResult, C64, DEFAULT_DENSE_CAP};

/// Complement projector applied between the two operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Projector {
    /// `Q_ζ = 1 − |ζ⟩⟨ζ|`
    QZeta,
    /// `Q_W = 1 − Π_W`
    QW,
}

pub(crate) fn target_sites(l: usize, x0: usize, positions: &[i64]) -> ScarResult<Vec<usize>> {
    if x0 >= l {
        return Err(ScarError::OutOfRange(format!("x0 = {x0} on a chain of {l} sites")));
    }
    positions
        .iter()
        .map(|&x| {
            let y = x0 as i64 + x;
            if y < 0 || y >= l as i64 {
                Err(ScarError::OutOfRange(format!("x0 + x = {y} outside 0..{l}")))
            } else {
                Ok(y as usize)
            }
        })
        .collect()
}

/// Precomputed `↑/↓` configurations of the coherent bra.
struct CoherentBra {
    codes: Vec<u64>,
    signs: Vec<f64>,
    ups: Vec<u32>,
    masks: Vec<u64>,
}

impl CoherentBra {
    fn new(basis: &SectorBasis) -> Self {
        let l = basis.l();
        let n = 1usize << l;
        let (mut codes, mut signs, mut ups, mut masks) =
            (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for mask in 0..n as u64 {
            let mut code = 0;
            let mut odd = 0;
            for j in 0..l {
                if mask >> j & 1 == 1 {
                    odd ^= j & 1;
                } else {
                    code += 2 * basis.site_weight(j);
                }
            }
            codes.push(code);
            signs.push(if odd == 0 { 1.0 } else { -1.0 });
            ups.push(mask.count_ones());
            masks.push(mask);
        }
        CoherentBra { codes, signs, ups, masks }
    }

    /// `⟨ζ|(S⁻_y)²|ket⟩` for each site `y`; `ket` is a full-space vector.
    fn lowered_overlaps(&self, zeta: C64, l: usize, basis: &SectorBasis, ket: &[C64], sites: &[usize]) -> Vec<C64> {
        let norm = (1.0 + zeta.norm_sqr()).powf(-0.5 * l as f64);
        let zbar = zeta.conj();
        let mut pow = vec![C64::new(norm, 0.0); l + 1];
        for k in 1..=l {
            pow[k] = pow[k - 1] * zbar;
        }
        let mut out = vec![C64::new(0.0, 0.0); sites.len()];
        for k in 0..self.codes.len() {
            let bra = pow[self.ups[k] as usize] * self.signs[k];
            for (o, &y) in out.iter_mut().zip(sites) {
                // bra has ↓ at y, so (S⁻_y)² maps the ket's ↑ there onto it
                if self.masks[k] >> y & 1 == 0 {
                    let src = self.codes[k] - 2 * basis.site_weight(y);
                    *o += bra * ket[src as usize] * 2.0;
                }
            }
        }
        out
    }
}

/// `⟨ζ_t|(S⁻_y)²|K(t)⟩` with `K(t) = e^{−iHt} K₀` evolved numerically and the
/// bra `|ζ_t⟩ = |e^{−iωt}ζ⟩` taken from the revival law.
fn coherent_two_point(
    params: &ModelParams,
    zeta: C64,
    ket0: &StateVector,
    h: &crate::spin::SparseOperator,
    sites: &[usize],
    times: &[f64],
    opts: &KrylovOptions,
) -> ScarResult<Vec<C64>> {
    let basis = ket0.basis.clone();
    let bra = CoherentBra::new(&basis);
    let mut out = vec![C64::new(0.0, 0.0); times.len() * sites.len()];
    let omega = params.omega();
    for_each_time(h, ket0, times, opts, |it, amps| {
        let zt = zeta * C64::from_polar(1.0, -omega * times[it]);
        let row = bra.lowered_overlaps(zt, params.l, &basis, amps, sites);
        out[it * sites.len()..(it + 1) * sites.len()].copy_from_slice(&row);
        Ok(())
    })?;
    Ok(out)
}

fn coherent_meta(params: &ModelParams, zeta: C64, x0: usize, method: &str, tol: f64) -> GridMetadata {
    let mut provenance = BTreeMap::new();
    provenance.insert("krylov_tol".to_string(), serde_json::json!(tol));
    GridMetadata {
        params: Some(params.clone()),
        state: StateLabel::coherent(zeta),
        method: method.to_string(),
        x0,
        omega: params.omega(),
        provenance,
    }
}

/// Connected `C(x,t) = ⟨ζ|(S⁻_{x0+x})²(t) (S⁺_{x0})²|ζ⟩ − e^{−iωt}⟨(S⁻_{x0+x})²⟩⟨(S⁺_{x0})²⟩`.
pub fn autocorrelator_ed(
    params: &ModelParams,
    zeta: C64,
    x0: usize,
    positions: &[i64],
    times: &[f64],
    tol: f64,
) -> ScarResult<CorrelatorGrid> {
    let sites = target_sites(params.l, x0, positions)?;
    let coh = CoherentState::new(zeta, params.l)?;
    let (basis, h) = full_space_hamiltonian(params)?;
    let psi = coh.materialize(&basis)?;
    let ket0 = apply_local(LocalKind::SPlusSq, x0, &psi, &basis)?;
    let opts = KrylovOptions::with_tol(tol);
    let full = coherent_two_point(params, zeta, &ket0, &h, &sites, times, &opts)?;
    let o = coh.local_expectation(LocalKind::SPlusSq, x0);
    let mut values = full;
    for (it, &t) in times.iter().enumerate() {
        let phase = C64::from_polar(1.0, -params.omega() * t);
        for (ix, &y) in sites.iter().enumerate() {
            values[it * sites.len() + ix] -= phase * coh.local_expectation(LocalKind::SMinusSq, y) * o;
        }
    }
    CorrelatorGrid::new(positions.to_vec(), times.to_vec(), values, coherent_meta(params, zeta, x0, "ed", tol))
}

/// `⟨ζ|(S⁻_{x0+x})²(t) Q (S⁺_{x0})²|ζ⟩` with the projector applied explicitly
/// before the evolution.
pub fn projected_autocorrelator(
    params: &ModelParams,
    zeta: C64,
    projector: Projector,
    x0: usize,
    positions: &[i64],
    times: &[f64],
    tol: f64,
) -> ScarResult<CorrelatorGrid> {
    let sites = target_sites(params.l, x0, positions)?;
    let coh = CoherentState::new(zeta, params.l)?;
    let (basis, h) = full_space_hamiltonian(params)?;
    let psi = coh.materialize(&basis)?;
    let mut ket0 = apply_local(LocalKind::SPlusSq, x0, &psi, &basis)?;
    let method = match projector {
        Projector::QZeta => {
            let c = dot(&psi.amps, &ket0.amps);
            ket0.amps.iter_mut().zip(&psi.amps).for_each(|(k, p)| *k -= c * p);
            "ed_q_zeta"
        }
        Projector::QW => {
            let tower = ScarTower::build(params)?;
            let pw = tower.project_onto(&ket0)?;
            ket0.amps.iter_mut().zip(&pw.amps).for_each(|(k, p)| *k -= p);
            "ed_q_w"
        }
    };
    let opts = KrylovOptions::with_tol(tol);
    let values = coherent_two_point(params, zeta, &ket0, &h, &sites, times, &opts)?;
    CorrelatorGrid::new(positions.to_vec(), times.to_vec(), values, coherent_meta(params, zeta, x0, method, tol))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum TraceMode {
    /// Exact trace when `3^L` fits under the dense cap, stochastic otherwise.
    Auto { samples: usize, seed: u64 },
    Exact,
    Stochastic { samples: usize, seed: u64 },
}

impl Default for TraceMode {
    fn default() -> Self {
        TraceMode::Auto { samples: 64, seed: 12345 }
    }
}

/// `C₀(x,t) = Tr[(S⁻_{x0+x})²(t)(S⁺_{x0})²] / 3^L`.
pub fn infinite_temperature_autocorrelator(
    params: &ModelParams,
    x0: usize,
    positions: &[i64],
    times: &[f64],
) -> ScarResult<CorrelatorGrid> {
    infinite_temperature_autocorrelator_with(params, x0, positions, times, TraceMode::default(), 1e-10)
}

pub fn infinite_temperature_autocorrelator_with(
    params: &ModelParams,
    x0: usize,
    positions: &[i64],
    times: &[f64],
    mode: TraceMode,
    tol: f64,
) -> ScarResult<CorrelatorGrid> {
    let sites = target_sites(params.l, x0, positions)?;
    let full_dim = 3f64.powi(params.l as i32);
    let mode = match mode {
        TraceMode::Auto { samples, seed } if full_dim > DEFAULT_DENSE_CAP as f64 => {
            TraceMode::Stochastic { samples, seed }
        }
        TraceMode::Auto { .. } => TraceMode::Exact,
        m => m,
    };
    let mut provenance = BTreeMap::new();
    let (values, stderr, method) = match mode {
        TraceMode::Exact => (exact_trace(params, x0, &sites, times)?, None, "ed_infinite_temperature_exact"),
        TraceMode::Stochastic { samples, seed } => {
            provenance.insert("samples".into(), serde_json::json!(samples));
            provenance.insert("seed".into(), serde_json::json!(seed));
            provenance.insert("krylov_tol".into(), serde_json::json!(tol));
            let (v, e) = stochastic_trace(params, x0, &sites, times, samples, seed, tol)?;
            (v, Some(e), "ed_infinite_temperature_stochastic")
        }
        TraceMode::Auto { .. } => unreachable!(),
    };
    let meta = GridMetadata {
        params: Some(params.clone()),
        state: StateLabel::InfiniteTemperature,
        method: method.into(),
        x0,
        omega: params.omega(),
        provenance,
    };
    let mut grid = CorrelatorGrid::new(positions.to_vec(), times.to_vec(), values, meta)?;
    grid.stderr = stderr;
    Ok(grid)
}

/// `U_toᵀ B U_from` for `B = (S⁺_site)²`.
fn rotated_raising(site: usize, from: &Spectrum, to: &Spectrum) -> ScarResult<Mat<f64>> {
    let op = local_operator(LocalKind::SPlusSq, site, &from.basis, &to.basis)?;
    let (nt, nf) = (to.dim(), from.dim());
    let mut bu = Mat::<f64>::zeros(nt, nf);
    for (r, c, v) in op.entries() {
        let urow = from.eigenvectors.row(c);
        for i in 0..nf {
            bu[(r, i)] += v.re * urow[i];
        }
    }
    Ok(to.eigenvectors.transpose() * &bu)
}

fn exact_trace(params: &ModelParams, x0: usize, sites: &[usize], times: &[f64]) -> ScarResult<Vec<C64>> {
    let l = params.l as i64;
    let nx = sites.len();
    let mut acc = vec![C64::new(0.0, 0.0); times.len() * nx];
    let norm = 3f64.powi(params.l as i32);
    let mut cache: BTreeMap<i64, Spectrum> = BTreeMap::new();
    let spectrum = |m: i64| -> ScarResult<Spectrum> {
        full_spectrum_capped(params, &Arc::new(SectorBasis::new(params.l, m)?), DEFAULT_DENSE_CAP)
    };
    for m in -l..=l - 2 {
        for s in [m, m + 2] {
            if !cache.contains_key(&s) {
                cache.insert(s, spectrum(s)?);
            }
        }
        let (from, to) = (&cache[&m], &cache[&(m + 2)]);
        let bx0 = rotated_raising(x0, from, to)?;
        for (ix, &y) in sites.iter().enumerate() {
            let by = if y == x0 { bx0.clone() } else { rotated_raising(y, from, to)? };
            for k in 0..to.dim() {
                for i in 0..from.dim() {
                    let w = by[(k, i)] * bx0[(k, i)];
                    if w == 0.0 {
                        continue;
                    }
                    let f = from.eigenvalues[i] - to.eigenvalues[k];
                    for (it, &t) in times.iter().enumerate() {
                        acc[it * nx + ix] += C64::from_polar(w / norm, f * t);
                    }
                }
            }
        }
        cache.remove(&m);
    }
    Ok(acc)
}

fn stochastic_trace(
    params: &ModelParams,
    x0: usize,
    sites: &[usize],
    times: &[f64],
    samples: usize,
    seed: u64,
    tol: f64,
) -> ScarResult<(Vec<C64>, Vec<f64>)> {
    if samples < 2 {
        return Err(ScarError::InvalidParams("stochastic trace needs at least 2 samples".into()));
    }
    let (basis, h) = full_space_hamiltonian(params)?;
    let n = basis.dim();
    let nx = sites.len();
    let opts = KrylovOptions::with_tol(tol);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = vec![C64::new(0.0, 0.0); times.len() * nx];
    let mut sum_sq = vec![0.0; times.len() * nx];
    for _ in 0..samples {
        // random phases give E[r r†] = 1 with no amplitude noise
        let r: Vec<C64> = (0..n).map(|_| C64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU)).collect();
        let mut phi = StateVector::new(basis.clone(), r)?;
        let mut chi = apply_local(LocalKind::SPlusSq, x0, &phi, &basis)?;
        let mut t_now = 0.0;
        for (it, &t) in times.iter().enumerate() {
            phi.amps = expm_krylov(|x, o| h.matvec_into(x, o), &phi.amps, t - t_now, &opts)?;
            chi.amps = expm_krylov(|x, o| h.matvec_into(x, o), &chi.amps, t - t_now, &opts)?;
            t_now = t;
            for (ix, &y) in sites.iter().enumerate() {
                // ⟨φ|(S⁻_y)²|χ⟩ = ⟨(S⁺_y)²φ|χ⟩
                let raised = apply_local(LocalKind::SPlusSq, y, &phi, &basis)?;
                let v = dot(&raised.amps, &chi.amps) / n as f64;
                sum[it * nx + ix] += v;
                sum_sq[it * nx + ix] += v.norm_sqr();
            }
        }
    }
    let s = samples as f64;
    let mean: Vec<C64> = sum.iter().map(|v| v / s).collect();
    let err = mean
        .iter()
        .zip(&sum_sq)
        .map(|(m, &q)| ((q / s - m.norm_sqr()).max(0.0) * s / (s - 1.0) / s).sqrt())
        .collect();
    Ok((mean, err))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_row_of_connected_correlator() {
        let p = ModelParams::reference(6);
        let g = autocorrelator_ed(&p, C64::new(0.0, -1.0), 3, &[-3, -1, 0, 1, 2], &[0.0], 1e-10).unwrap();
        for (ix, &x) in g.positions.iter().enumerate() {
            let want = if x == 0 { 1.0 } else { 0.0 };
            assert!((g.get(0, ix) - C64::new(want, 0.0)).norm() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn q_zeta_projection_equals_connected_part() {
        let p = ModelParams::reference(6);
        let zeta = C64::new(0.3, -0.8);
        let times = [0.0, 0.7, 1.9];
        let pos = [-2, 0, 1];
        let c = autocorrelator_ed(&p, zeta, 2, &pos, &times, 1e-11).unwrap();
        let q = projected_autocorrelator(&p, zeta, Projector::QZeta, 2, &pos, &times, 1e-11).unwrap();
        assert!(c.max_abs_diff(&q).unwrap() < 1e-9);
    }

    #[test]
    fn out_of_range_position_is_rejected() {
        let p = ModelParams::reference(6);
        assert!(matches!(
            autocorrelator_ed(&p, C64::new(1.0, 0.0), 3, &[3], &[0.0], 1e-10),
            Err(ScarError::OutOfRange(_))
        ));
    }

    #[test]
    fn infinite_temperature_initial_values() {
        let p = ModelParams::reference(4);
        let g = infinite_temperature_autocorrelator_with(&p, 2, &[-2, -1, 0, 1], &[0.0], TraceMode::Exact, 1e-10)
            .unwrap();
        for (ix, &x) in g.positions.iter().enumerate() {
            let want = if x == 0 { 4.0 / 3.0 } else { 0.0 };
            assert!((g.get(0, ix) - C64::new(want, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn stochastic_trace_agrees_with_exact() {
        let p = ModelParams::reference(5);
        let times = [0.0, 0.8];
        let exact = infinite_temperature_autocorrelator_with(&p, 2, &[0, 1], &times, TraceMode::Exact, 1e-10).unwrap();
        let stoch = infinite_temperature_autocorrelator_with(
            &p,
            2,
            &[0, 1],
            &times,
            TraceMode::Stochastic { samples: 40, seed: 9 },
            1e-10,
        )
        .unwrap();
        let err = stoch.stderr.as_ref().unwrap();
        for k in 0..exact.values.len() {
            assert!((exact.values[k] - stoch.values[k]).norm() < 5.0 * err[k] + 1e-12);
        }
    }
}
