//! Off-diagonal matrix elements `|⟨E_i|(S⁺_j)²|N⟩|²` and the binned
//! estimate of the smooth ETH function.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::lehmann::aligned_sector_spectrum;
use crate::output::fmt_f64;
use crate::scar::ScarTower;
use crate::spin::operator::{apply_local, image_basis, LocalKind};
use crate::spin::ModelParams;
use crate::{ScarError, ScarResult};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EthPoint {
    /// `E_i − Nω`.
    pub e_minus_nomega: f64,
    pub value: f64,
    pub is_scar: bool,
    /// Gaussian kernel density of the scatter at this point, in the plane
    /// `(E_i − Nω, log10 value)`.
    pub density: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EthScatter {
    pub n: usize,
    pub site: usize,
    /// Magnetization of the sector holding the `|E_i⟩`.
    pub sector: i64,
    pub omega: f64,
    pub points: Vec<EthPoint>,
}

impl EthScatter {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn scar_point(&self) -> Option<&EthPoint> {
        self.points.iter().find(|p| p.is_scar)
    }

    /// Eigenvalues `E_i`, recovered from the stored offsets.
    pub fn energies(&self) -> Vec<f64> {
        let shift = self.omega * self.n as f64;
        self.points.iter().map(|p| p.e_minus_nomega + shift).collect()
    }

    /// Quantile of the values of non-scar points (nearest rank).
    pub fn background_quantile(&self, q: f64) -> Option<f64> {
        let mut v: Vec<f64> = self.points.iter().filter(|p| !p.is_scar).map(|p| p.value).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let k = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1;
        Some(v[k])
    }

    /// CSV with columns `E_minus_Nomega,value,is_scar`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("E_minus_Nomega,value,is_scar\n");
        for p in &self.points {
            s.push_str(&format!("{},{},{}\n", fmt_f64(p.e_minus_nomega), fmt_f64(p.value), p.is_scar as u8));
        }
        s
    }
}

/// Scatter of `|⟨E_i|(S⁺_j)²|N⟩|²` over every eigenstate of the target sector.
pub fn eth_matrix_elements(params: &ModelParams, n: usize, site: usize) -> ScarResult<EthScatter> {
    let l = params.l;
    if n >= l {
        return Err(ScarError::OutOfRange(format!("(S⁺)²|N⟩ vanishes for N = {n} on L = {l}")));
    }
    if site >= l {
        return Err(ScarError::OutOfRange(format!("site {site} on L = {l}")));
    }
    let tower = ScarTower::build(params)?;
    let scar = tower.state(n)?;
    let (spec, scar_idx) = aligned_sector_spectrum(params, &tower, n)?;
    let to = image_basis(LocalKind::SPlusSq, &scar.basis)?;
    let coeffs = spec.coefficients(&apply_local(LocalKind::SPlusSq, site, scar, &to)?.amps);
    let shift = params.omega() * n as f64;
    let mut points: Vec<EthPoint> = (0..spec.dim())
        .map(|i| EthPoint {
            e_minus_nomega: spec.eigenvalues[i] - shift,
            value: coeffs[i].norm_sqr(),
            is_scar: Some(i) == scar_idx,
            density: 0.0,
        })
        .collect();
    fill_density(&mut points);
    Ok(EthScatter { n, site, sector: 2 * (n as i64 + 1) - l as i64, omega: params.omega(), points })
}

fn fill_density(points: &mut [EthPoint]) {
    let floor = 1e-300;
    let xs: Vec<f64> = points.iter().map(|p| p.e_minus_nomega).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.value.max(floor).log10()).collect();
    let n = xs.len();
    if n < 2 {
        return;
    }
    let sd = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / n as f64;
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    // Scott's rule in two dimensions
    let f = (n as f64).powf(-1.0 / 6.0);
    let (hx, hy) = ((sd(&xs) * f).max(1e-12), (sd(&ys) * f).max(1e-12));
    let norm = 1.0 / (n as f64 * std::f64::consts::TAU * hx * hy);
    for k in 0..n {
        let d: f64 = (0..n)
            .map(|m| {
                let (u, v) = ((xs[k] - xs[m]) / hx, (ys[k] - ys[m]) / hy);
                (-0.5 * (u * u + v * v)).exp()
            })
            .sum();
        points[k].density = d * norm;
    }
}

/// Gaussian-broadened level density `ρ(E)` of a set of eigenvalues;
/// `S(E) = ln ρ(E)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub energies: Vec<f64>,
    pub width: f64,
}

impl EntropyEstimate {
    pub fn new(energies: Vec<f64>, width: f64) -> ScarResult<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(ScarError::InvalidParams(format!("broadening width {width} must be positive")));
        }
        Ok(EntropyEstimate { energies, width })
    }

    /// Width set to `fraction` times the spectral width.
    pub fn with_fraction(energies: Vec<f64>, fraction: f64) -> ScarResult<Self> {
        let lo = energies.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        EntropyEstimate::new(energies, fraction * (hi - lo))
    }

    /// Default estimate for a scatter: all sector eigenvalues, width 5% of the
    /// spectral width.
    pub fn for_scatter(scatter: &EthScatter) -> ScarResult<Self> {
        EntropyEstimate::with_fraction(scatter.energies(), 0.05)
    }

    /// States per unit energy at `e`.
    pub fn density(&self, e: f64) -> f64 {
        let c = 1.0 / (self.width * std::f64::consts::TAU.sqrt());
        self.energies.iter().map(|&x| c * (-0.5 * ((e - x) / self.width).powi(2)).exp()).sum()
    }

    pub fn entropy(&self, e: f64) -> f64 {
        self.density(e).ln()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct G0Bin {
    /// Bin center in `ω′ = E − Nω`.
    pub omega_prime: f64,
    pub g0: f64,
    pub count: usize,
}

/// Per-bin mean of `2π e^{S(E_i)} |⟨E_i|O|N⟩|²` over non-scar points; bins
/// without points are omitted.
pub fn g0_binned_average(scatter: &EthScatter, bin_width: f64, entropy: &EntropyEstimate) -> ScarResult<Vec<G0Bin>> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(ScarError::InvalidParams(format!("bin width {bin_width} must be positive")));
    }
    let shift = scatter.omega * scatter.n as f64;
    let mut bins: BTreeMap<i64, (f64, usize)> = BTreeMap::new();
    for p in scatter.points.iter().filter(|p| !p.is_scar) {
        let k = (p.e_minus_nomega / bin_width).floor() as i64;
        let g = std::f64::consts::TAU * entropy.density(p.e_minus_nomega + shift) * p.value;
        let e = bins.entry(k).or_insert((0.0, 0));
        e.0 += g;
        e.1 += 1;
    }
    Ok(bins
        .into_iter()
        .map(|(k, (s, c))| G0Bin { omega_prime: (k as f64 + 0.5) * bin_width, g0: s / c as f64, count: c })
        .collect())
}

pub fn g0_csv(bins: &[G0Bin]) -> String {
    let mut s = String::from("omega_prime,g0,count\n");
    for b in bins {
        s.push_str(&format!("{},{},{}\n", fmt_f64(b.omega_prime), fmt_f64(b.g0), b.count));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scar_outlier_and_completeness() {
        let l = 8;
        let n = 4;
        let p = ModelParams::reference(l);
        let s = eth_matrix_elements(&p, n, 4).unwrap();
        assert_eq!(s.len(), crate::spin::SectorBasis::new(l, 2).unwrap().dim());
        let scar = s.scar_point().unwrap();
        let closed = 4.0 * ((l - n) * (n + 1)) as f64 / (l * l) as f64;
        assert!((scar.value - closed).abs() < 1e-10);
        assert!((scar.e_minus_nomega - p.omega()).abs() < 1e-9);
        let total: f64 = s.points.iter().map(|q| q.value).sum();
        assert!((total - 4.0 * (l - n) as f64 / l as f64).abs() < 1e-10);
    }

    #[test]
    fn uniform_synthetic_scatter_recovers_g() {
        let n = 2000;
        let energies: Vec<f64> = (0..n).map(|k| -5.0 + 10.0 * (k as f64 + 0.5) / n as f64).collect();
        let rho = n as f64 / 10.0;
        let g = 0.7;
        let points = energies
            .iter()
            .map(|&e| EthPoint { e_minus_nomega: e, value: g / (std::f64::consts::TAU * rho), is_scar: false, density: 0.0 })
            .collect();
        let scatter = EthScatter { n: 0, site: 0, sector: 0, omega: 1.0, points };
        let ent = EntropyEstimate::new(energies, 0.2).unwrap();
        let bins = g0_binned_average(&scatter, 0.5, &ent).unwrap();
        for b in bins.iter().filter(|b| b.omega_prime.abs() < 3.5) {
            assert!((b.g0 - g).abs() < 0.05 * g, "bin {} gave {}", b.omega_prime, b.g0);
        }
    }

    #[test]
    fn scar_exclusion_only_touches_its_bin() {
        let p = ModelParams::reference(6);
        let s = eth_matrix_elements(&p, 3, 3).unwrap();
        let ent = EntropyEstimate::for_scatter(&s).unwrap();
        let with = g0_binned_average(&s, 0.25, &ent).unwrap();
        let mut unflagged = s.clone();
        unflagged.points.iter_mut().for_each(|q| q.is_scar = false);
        let all = g0_binned_average(&unflagged, 0.25, &ent).unwrap();
        let scar_bin = (s.scar_point().unwrap().e_minus_nomega / 0.25).floor();
        let changed: Vec<f64> = all
            .iter()
            .filter(|b| !with.contains(b))
            .map(|b| (b.omega_prime / 0.25 - 0.5).round())
            .collect();
        assert_eq!(changed, vec![scar_bin]);
    }

    #[test]
    fn empty_bins_are_absent() {
        let points = vec![
            EthPoint { e_minus_nomega: -2.0, value: 1.0, is_scar: false, density: 0.0 },
            EthPoint { e_minus_nomega: 2.0, value: 1.0, is_scar: false, density: 0.0 },
        ];
        let s = EthScatter { n: 0, site: 0, sector: 0, omega: 1.0, points };
        let ent = EntropyEstimate::new(vec![-2.0, 2.0], 0.5).unwrap();
        assert_eq!(g0_binned_average(&s, 1.0, &ent).unwrap().len(), 2);
    }
}
