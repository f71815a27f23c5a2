use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::output::fmt_f64;
use crate::spin::operator::{apply_local, dot, image_basis, LocalKind, SparseOperator, StateVector};
use crate::spin::{build_hamiltonian, ModelParams, SectorBasis};
use crate::{ScarError, ScarResult, C64};

/// Seed of the random contrast state in [`verify_rsga`].
pub const RSGA_CONTRAST_SEED: u64 = 0x5ca2_0001;

/// `J†v` together with a flag telling whether the image is identically zero.
#[derive(Clone, Debug)]
pub struct LadderImage {
    pub state: StateVector,
    pub annihilated: bool,
}

/// Applies `J† = ½ Σ_j (−1)^j (S⁺_j)²` without normalizing.
pub fn ladder_apply(v: &StateVector) -> ScarResult<LadderImage> {
    let from = &v.basis;
    let to = image_basis(LocalKind::SPlusSq, from)?;
    let mut out = StateVector::zeros(to.clone());
    if to.dim() == 0 {
        return Ok(LadderImage { state: out, annihilated: true });
    }
    for (i, &a) in v.amps.iter().enumerate() {
        if a.norm_sqr() == 0.0 {
            continue;
        }
        let code = from.code(i);
        for j in 0..from.l() {
            if from.digit(code, j) != 2 {
                continue;
            }
            // ½ · 2 from (S⁺)²|↓⟩ = 2|↑⟩
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let target = code - 2 * from.site_weight(j);
            let k = to
                .index_of(target)
                .ok_or_else(|| ScarError::SectorMismatch("ladder image outside target sector".into()))?;
            out.amps[k] += a * sign;
        }
    }
    let annihilated = out.amps.iter().all(|a| a.norm_sqr() == 0.0);
    Ok(LadderImage { state: out, annihilated })
}

/// Product of single-site operators; the last factor acts first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorSpec {
    pub factors: Vec<(LocalKind, usize)>,
}

impl OperatorSpec {
    pub fn local(kind: LocalKind, site: usize) -> Self {
        OperatorSpec { factors: vec![(kind, site)] }
    }

    /// `A_a B_b` with `B` applied first.
    pub fn pair(a: LocalKind, site_a: usize, b: LocalKind, site_b: usize) -> Self {
        OperatorSpec { factors: vec![(a, site_a), (b, site_b)] }
    }

    /// Total magnetization change.
    pub fn shift(&self) -> i64 {
        self.factors.iter().map(|(k, _)| k.shift()).sum()
    }

    pub fn adjoint(&self) -> Self {
        OperatorSpec { factors: self.factors.iter().rev().map(|&(k, s)| (k.adjoint(), s)).collect() }
    }

    pub fn apply(&self, v: &StateVector) -> ScarResult<StateVector> {
        let mut cur = v.clone();
        for &(kind, site) in self.factors.iter().rev() {
            let to = image_basis(kind, &cur.basis)?;
            cur = apply_local(kind, site, &cur, &to)?;
        }
        Ok(cur)
    }
}

#[derive(Clone, Debug)]
pub struct ScarState {
    pub n: usize,
    pub magnetization: i64,
    pub state: StateVector,
}

/// The normalized states `|N⟩ ∝ (J†)^N |⇓⟩`, `N = 0..L`, each in its own
/// magnetization sector `2N − L`.
#[derive(Clone, Debug)]
pub struct ScarTower {
    l: usize,
    omega: f64,
    states: Vec<ScarState>,
}

impl ScarTower {
    /// Builds the tower by repeated ladder steps, renormalizing after each.
    pub fn build(params: &ModelParams) -> ScarResult<Self> {
        params.validate()?;
        let l = params.l;
        let down = Arc::new(SectorBasis::new(l, -(l as i64))?);
        let mut cur = StateVector::basis_state(down.clone(), down.code(0))?;
        let mut states = Vec::with_capacity(l + 1);
        for n in 0..=l {
            states.push(ScarState { n, magnetization: 2 * n as i64 - l as i64, state: cur.clone() });
            if n == l {
                break;
            }
            let img = ladder_apply(&cur)?;
            if img.annihilated {
                return Err(ScarError::Analysis(format!("ladder annihilated |{n}⟩ before N = L")));
            }
            cur = img.state;
            cur.normalize();
        }
        Ok(ScarTower { l, omega: params.omega(), states })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[ScarState] {
        &self.states
    }

    pub fn state(&self, n: usize) -> ScarResult<&StateVector> {
        self.states
            .get(n)
            .map(|s| &s.state)
            .ok_or_else(|| ScarError::OutOfRange(format!("scar N = {n} on L = {}", self.l)))
    }

    pub fn energy(&self, n: usize) -> f64 {
        self.omega * n as f64
    }

    /// `⟨N|v⟩` for every `N`; `v` may live in any basis of the same chain.
    pub fn project(&self, v: &StateVector) -> ScarResult<Vec<C64>> {
        if v.basis.l() != self.l {
            return Err(ScarError::DimensionMismatch { expected: self.l, found: v.basis.l() });
        }
        Ok(self
            .states
            .iter()
            .map(|s| {
                let b = &s.state.basis;
                s.state
                    .amps
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| a.norm_sqr() > 0.0)
                    .filter_map(|(i, a)| v.basis.index_of(b.code(i)).map(|k| a.conj() * v.amps[k]))
                    .sum()
            })
            .collect())
    }

    /// `Σ_N c_N |N⟩` written in `target`.
    pub fn combine(&self, coeffs: &[C64], target: &Arc<SectorBasis>) -> ScarResult<StateVector> {
        let mut out = StateVector::zeros(target.clone());
        for (s, &c) in self.states.iter().zip(coeffs) {
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let b = &s.state.basis;
            for (i, a) in s.state.amps.iter().enumerate() {
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                let k = target.index_of(b.code(i)).ok_or_else(|| {
                    ScarError::SectorMismatch(format!("scar |{}⟩ not representable in target basis", s.n))
                })?;
                out.amps[k] += c * a;
            }
        }
        Ok(out)
    }

    /// `Π_W v`, the projection onto the span of the tower.
    pub fn project_onto(&self, v: &StateVector) -> ScarResult<StateVector> {
        let c = self.project(v)?;
        self.combine(&c, &v.basis)
    }

    /// `‖H|N⟩ − ωN|N⟩‖` for every `N`; `params` must share `L` with the tower.
    pub fn residuals(&self, params: &ModelParams) -> ScarResult<Vec<f64>> {
        if params.l != self.l {
            return Err(ScarError::DimensionMismatch { expected: self.l, found: params.l });
        }
        let omega = params.omega();
        self.states
            .par_iter()
            .map(|s| {
                let h = build_hamiltonian(params, &s.state.basis)?;
                let hv = h.matvec(&s.state.amps);
                let e = omega * s.n as f64;
                Ok(hv.iter().zip(&s.state.amps).map(|(a, b)| (a - b * e).norm_sqr()).sum::<f64>().sqrt())
            })
            .collect()
    }

    /// `⟨N_to|O|N_from⟩`; zero when the magnetization change of `O` does not
    /// connect the two sectors.
    pub fn matrix_element(&self, n_to: usize, op: &OperatorSpec, n_from: usize) -> ScarResult<C64> {
        let bra = self.state(n_to)?;
        let ket = self.state(n_from)?;
        if 2 * (n_to as i64 - n_from as i64) != op.shift() {
            return Ok(C64::new(0.0, 0.0));
        }
        let img = op.apply(ket)?;
        Ok(dot(&bra.amps, &img.amps))
    }

    /// CSV with columns `N,M,energy,residual`.
    pub fn to_csv(&self, params: &ModelParams) -> ScarResult<String> {
        let res = self.residuals(params)?;
        let mut out = String::from("N,M,energy,residual\n");
        for (s, r) in self.states.iter().zip(res) {
            out.push_str(&format!(
                "{},{},{},{}\n",
                s.n,
                s.magnetization,
                fmt_f64(params.omega() * s.n as f64),
                fmt_f64(r)
            ));
        }
        Ok(out)
    }
}

pub fn build_tower(params: &ModelParams) -> ScarResult<ScarTower> {
    ScarTower::build(params)
}

/// `⟨N+n|O|N⟩` for the tower of `params`.
pub fn scar_matrix_element(params: &ModelParams, n_base: usize, n: i64, op: &OperatorSpec) -> ScarResult<C64> {
    let target = n_base as i64 + n;
    if n_base > params.l || target < 0 || target > params.l as i64 {
        return Err(ScarError::OutOfRange(format!(
            "scars N = {n_base}, N + n = {target} on L = {}",
            params.l
        )));
    }
    ScarTower::build(params)?.matrix_element(target as usize, op, n_base)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RsgaReport {
    /// `‖([H, J†] − ωJ†)|N⟩‖` for `N = 0..L`.
    pub residuals: Vec<f64>,
    /// Same quantity on a seeded random normalized state.
    pub random_residual: f64,
    pub seed: u64,
}

impl RsgaReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

fn rsga_residual(
    v: &StateVector,
    h_from: &SparseOperator,
    h_to: Option<&SparseOperator>,
    omega: f64,
) -> ScarResult<f64> {
    let up = ladder_apply(v)?;
    let Some(h_to) = h_to else {
        return Ok(0.0);
    };
    let hv = StateVector { basis: v.basis.clone(), amps: h_from.matvec(&v.amps) };
    let j_hv = ladder_apply(&hv)?.state;
    let h_up = h_to.matvec(&up.state.amps);
    Ok(h_up
        .iter()
        .zip(&j_hv.amps)
        .zip(&up.state.amps)
        .map(|((a, b), c)| (a - b - c * omega).norm_sqr())
        .sum::<f64>()
        .sqrt())
}

/// Residuals of the restricted spectrum generating algebra on every scar and
/// on a random contrast state.
pub fn verify_rsga(params: &ModelParams) -> ScarResult<RsgaReport> {
    verify_rsga_with_seed(params, RSGA_CONTRAST_SEED)
}

pub fn verify_rsga_with_seed(params: &ModelParams, seed: u64) -> ScarResult<RsgaReport> {
    verify_rsga_at(params, params.omega(), seed)
}

/// Residuals of `([H, J†] − ωJ†)` for an arbitrary trial frequency `omega`.
pub fn verify_rsga_at(params: &ModelParams, omega: f64, seed: u64) -> ScarResult<RsgaReport> {
    let tower = ScarTower::build(params)?;
    let l = params.l;
    let hams: Vec<SparseOperator> = tower
        .states
        .par_iter()
        .map(|s| build_hamiltonian(params, &s.state.basis))
        .collect::<ScarResult<_>>()?;
    let residuals = (0..=l)
        .into_par_iter()
        .map(|n| rsga_residual(&tower.states[n].state, &hams[n], hams.get(n + 1), omega))
        .collect::<ScarResult<Vec<f64>>>()?;

    let mid = l / 2;
    let basis = tower.states[mid].state.basis.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps = (0..basis.dim())
        .map(|_| C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
        .collect();
    let mut v = StateVector::new(basis, amps)?;
    v.normalize();
    let random_residual = rsga_residual(&v, &hams[mid], hams.get(mid + 1), omega)?;
    Ok(RsgaReport { residuals, random_residual, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::Boundary;

    #[test]
    fn two_site_ladder() {
        let b = Arc::new(SectorBasis::new(2, -2).unwrap());
        let v = StateVector::basis_state(b.clone(), b.code(0)).unwrap();
        let img = ladder_apply(&v).unwrap();
        assert!(!img.annihilated);
        // basis (↑↓, 00, ↓↑)
        let want = [1.0, 0.0, -1.0];
        for (a, w) in img.state.amps.iter().zip(want) {
            assert_eq!(*a, C64::new(w, 0.0));
        }
    }

    #[test]
    fn ladder_past_top_is_flagged() {
        let b = Arc::new(SectorBasis::new(3, 3).unwrap());
        let v = StateVector::basis_state(b.clone(), b.code(0)).unwrap();
        let img = ladder_apply(&v).unwrap();
        assert!(img.annihilated);
        assert_eq!(img.state.dim(), 0);
    }

    #[test]
    fn tower_has_dicke_amplitudes() {
        let p = ModelParams::reference(6);
        let t = ScarTower::build(&p).unwrap();
        assert_eq!(t.len(), 7);
        for s in t.states() {
            let binom = (0..s.n).fold(1.0, |acc, k| acc * (6 - k) as f64 / (k + 1) as f64);
            let b = &s.state.basis;
            for (i, a) in s.state.amps.iter().enumerate() {
                let spins = b.spins(b.code(i));
                if spins.contains(&0) {
                    assert_eq!(a.norm(), 0.0);
                } else {
                    let sign: i64 = spins.iter().enumerate().filter(|(_, &x)| x == 1).map(|(j, _)| j as i64).sum();
                    let want = if sign % 2 == 0 { 1.0 } else { -1.0 } / binom.sqrt();
                    assert!((a - C64::new(want, 0.0)).norm() < 1e-14);
                }
            }
            assert_eq!(s.magnetization, 2 * s.n as i64 - 6);
        }
    }

    #[test]
    fn two_site_first_scar() {
        let p = ModelParams::new(1.0, 0.5, 0.0, 0.0, 2, Boundary::Open).unwrap();
        let t = ScarTower::build(&p).unwrap();
        let s = t.state(1).unwrap();
        let r = 0.5f64.sqrt();
        assert!((s.amps[0] - C64::new(r, 0.0)).norm() < 1e-15);
        assert!((s.amps[2] + C64::new(r, 0.0)).norm() < 1e-15);
        assert_eq!(t.energy(1), 1.0);
        assert!(t.residuals(&p).unwrap().iter().all(|&r| r < 1e-14));
    }

    #[test]
    fn eigenstates_for_arbitrary_couplings() {
        for p in [
            ModelParams::reference(7),
            ModelParams::new(-0.7, 1.3, 2.1, -1.9, 7, Boundary::Open).unwrap(),
            ModelParams::new(0.4, -0.2, 0.9, 0.3, 6, Boundary::Periodic).unwrap(),
        ] {
            let t = ScarTower::build(&p).unwrap();
            assert!(t.residuals(&p).unwrap().iter().all(|&r| r < 1e-10));
        }
    }

    #[test]
    fn rsga_separates_scars_from_random_states() {
        let p = ModelParams::reference(6);
        let r = verify_rsga(&p).unwrap();
        assert!(r.max_residual() < 1e-10);
        assert!(r.random_residual > 0.1);
    }

    #[test]
    fn wrong_frequency_shows_in_residuals() {
        // ([H,J†] − ω′J†)|N⟩ = (ω − ω′)J†|N⟩ and ‖J†|N⟩‖ = √((L−N)(N+1))
        let p = ModelParams::reference(6);
        let r = verify_rsga_at(&p, p.omega() + 0.25, RSGA_CONTRAST_SEED).unwrap();
        for (n, res) in r.residuals.iter().enumerate().take(6) {
            let want = 0.25 * (((6 - n) * (n + 1)) as f64).sqrt();
            assert!((res - want).abs() < 1e-10, "N = {n}");
        }
    }

    #[test]
    fn magnetization_selection_gives_zero() {
        let p = ModelParams::reference(6);
        let op = OperatorSpec::local(LocalKind::SPlusSq, 2);
        assert_eq!(scar_matrix_element(&p, 3, 0, &op).unwrap(), C64::new(0.0, 0.0));
        assert!(matches!(scar_matrix_element(&p, 6, 1, &op), Err(ScarError::OutOfRange(_))));
    }

    #[test]
    fn projection_round_trip() {
        let p = ModelParams::reference(5);
        let t = ScarTower::build(&p).unwrap();
        let full = Arc::new(SectorBasis::full(5).unwrap());
        let c: Vec<C64> = (0..=5).map(|n| C64::new(n as f64, 1.0 - n as f64)).collect();
        let v = t.combine(&c, &full).unwrap();
        let back = t.project(&v).unwrap();
        for (a, b) in back.iter().zip(&c) {
            assert!((a - b).norm() < 1e-13);
        }
    }
}
