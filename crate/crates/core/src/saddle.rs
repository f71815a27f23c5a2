//! Large-`L` closed forms for the scar tower from the coherent-state saddle
//! point, and their finite-size comparisons against exact tower contractions.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::output::fmt_f64;
use crate::scar::{CoherentState, OperatorSpec, ScarTower};
use crate::spin::{apply_local, LocalKind, ModelParams, SectorBasis};
use crate::spin::operator::dot;
use crate::{ScarError, ScarResult, C64};

/// `f(ζ̄′, ζ) = −log(1 + ζ̄′ζ)` on the principal branch.
pub fn overlap_log_density(zbar_prime: C64, zeta: C64) -> ScarResult<C64> {
    let w = C64::new(1.0, 0.0) + zbar_prime * zeta;
    if w.norm() == 0.0 {
        return Err(ScarError::BranchPoint);
    }
    Ok(-w.ln())
}

fn check_density(rho: f64) -> ScarResult<()> {
    if rho > 0.0 && rho < 1.0 {
        Ok(())
    } else {
        Err(ScarError::BoundaryDensity(rho))
    }
}

/// `|ζ_ρ| = √(ρ/(1−ρ))`.
pub fn saddle_modulus(rho: f64) -> ScarResult<f64> {
    check_density(rho)?;
    Ok((rho / (1.0 - rho)).sqrt())
}

/// `ρ = |ζ|²/(1+|ζ|²)`, the inverse of [`saddle_modulus`].
pub fn density_of_modulus(zeta_abs: f64) -> f64 {
    let a2 = zeta_abs * zeta_abs;
    a2 / (1.0 + a2)
}

/// `F(|ζ|²) = (1+|ζ|²)^{−2}`.
pub fn projector_weight(zeta_abs2: f64) -> f64 {
    (1.0 + zeta_abs2).powi(-2)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaddleContext {
    pub rho: f64,
    pub zeta_rho: f64,
    pub omega: f64,
}

impl SaddleContext {
    pub fn new(rho: f64, omega: f64) -> ScarResult<Self> {
        Ok(SaddleContext { rho, zeta_rho: saddle_modulus(rho)?, omega })
    }
}

fn stagger(j: i64) -> f64 {
    if j.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `⟨ζ|O_j|ζ⟩` in closed form.
pub fn coherent_expectation(kind: LocalKind, j: usize, zeta: C64) -> C64 {
    let d = 1.0 + zeta.norm_sqr();
    let s = stagger(j as i64);
    match kind {
        LocalKind::SPlusSq => zeta.conj() * (2.0 * s / d),
        LocalKind::SMinusSq => zeta * (2.0 * s / d),
        LocalKind::Sz => C64::new((zeta.norm_sqr() - 1.0) / d, 0.0),
        LocalKind::SzSq => C64::new(1.0, 0.0),
    }
}

/// Nodes of the trapezoidal phase average; exact for Fourier modes below this.
const PHASE_NODES: usize = 64;

/// `ω∫₀^{2π/ω} dt/2π e^{inωt} g(e^{−iωt}|ζ|)`, written in the phase
/// `θ = ωt`.
fn phase_average(n: i64, zeta_abs: f64, g: impl Fn(C64) -> C64) -> C64 {
    let sum: C64 = (0..PHASE_NODES)
        .map(|k| {
            let th = std::f64::consts::TAU * k as f64 / PHASE_NODES as f64;
            C64::from_polar(1.0, n as f64 * th) * g(C64::from_polar(zeta_abs, -th))
        })
        .sum();
    let v = sum / PHASE_NODES as f64;
    // exact zeros of the selection rule survive as round-off
    if v.norm() < 1e-14 {
        C64::new(0.0, 0.0)
    } else {
        v
    }
}

fn single_site(op: &OperatorSpec) -> ScarResult<(LocalKind, usize)> {
    match op.factors.as_slice() {
        [(k, j)] => Ok((*k, *j)),
        _ => Err(ScarError::Unsupported(format!("{} factors; only single-site operators have closed forms", op.factors.len()))),
    }
}

/// Large-`L` value of `⟨N|O|N+n⟩` at density `ρ = N/L`.
pub fn predicted_offdiag(rho: f64, n: i64, op: &OperatorSpec) -> ScarResult<C64> {
    let (kind, j) = single_site(op)?;
    let a = saddle_modulus(rho)?;
    Ok(phase_average(n, a, |z| coherent_expectation(kind, j, z)))
}

/// Large-`L` connected correlator `⟨N|O_x O′_0|N⟩ − ⟨N|O_x|N⟩⟨N|O′_0|N⟩`
/// for sites a distance `x` apart.
pub fn scar_lro(rho: f64, x: i64, o: LocalKind, o_prime: LocalKind) -> ScarResult<C64> {
    let a = saddle_modulus(rho)?;
    // the stagger only depends on the parity of the distance
    let site = x.rem_euclid(2) as usize;
    let both = phase_average(0, a, |z| coherent_expectation(o, site, z) * coherent_expectation(o_prime, 0, z));
    let first = phase_average(0, a, |z| coherent_expectation(o, site, z));
    let second = phase_average(0, a, |z| coherent_expectation(o_prime, 0, z));
    let v = both - first * second;
    Ok(if v.norm() < 1e-14 { C64::new(0.0, 0.0) } else { v })
}

/// `|⟨ζ|O′(t) Π_W O|ζ⟩ − ⟨ζ|O′(t)|ζ⟩⟨ζ|O|ζ⟩|` with `O = (S⁺_{x0})²`,
/// `O′ = (S⁻_{x0+x})²` and `Π_W` the exact projector on the tower, for every
/// pair in `xs × ts` (row-major in `ts`).
///
/// Both states are exactly solvable: `e^{−iHt}Π_W O|ζ⟩` stays in the tower
/// and `e^{−iHt}|ζ⟩ = |e^{−iωt}ζ⟩`.
pub fn projector_irrelevance_gaps(params: &ModelParams, zeta: C64, x0: usize, xs: &[i64], ts: &[f64]) -> ScarResult<Vec<f64>> {
    let l = params.l;
    let sites = crate::dynamics::correlator::target_sites(l, x0, xs)?;
    let tower = ScarTower::build(params)?;
    let full = Arc::new(SectorBasis::full(l)?);
    let coh = CoherentState::new(zeta, l)?;
    let psi = coh.materialize(&full)?;
    let raised = apply_local(LocalKind::SPlusSq, x0, &psi, &full)?;
    let c = tower.project(&raised)?;
    let o_exp = coherent_expectation(LocalKind::SPlusSq, x0, zeta);
    let omega = params.omega();
    let mut out = Vec::with_capacity(ts.len() * sites.len());
    for &t in ts {
        let ct: Vec<C64> = c.iter().enumerate().map(|(n, a)| a * C64::from_polar(1.0, -omega * n as f64 * t)).collect();
        let w = tower.combine(&ct, &full)?;
        let zt = zeta * C64::from_polar(1.0, -omega * t);
        let bra = CoherentState::new(zt, l)?.materialize(&full)?;
        for &y in &sites {
            let lowered = apply_local(LocalKind::SMinusSq, y, &w, &full)?;
            let lhs = dot(&bra.amps, &lowered.amps);
            let rhs = coherent_expectation(LocalKind::SMinusSq, y, zt) * o_exp;
            out.push((lhs - rhs).norm());
        }
    }
    Ok(out)
}

/// Single-point form of [`projector_irrelevance_gaps`] at the chain center.
pub fn projector_irrelevance_gap(params: &ModelParams, zeta: C64, x: i64, t: f64) -> ScarResult<f64> {
    Ok(projector_irrelevance_gaps(params, zeta, params.l / 2, &[x], &[t])?[0])
}

/// One line of a finite-size convergence table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub l: usize,
    pub quantity: String,
    pub ed_value: f64,
    pub predicted: f64,
    pub abs_gap: f64,
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut s = String::from("L,quantity,ed_value,predicted,abs_gap\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{},{}\n", r.l, r.quantity, fmt_f64(r.ed_value), fmt_f64(r.predicted), fmt_f64(r.abs_gap)));
    }
    s
}

/// Lowest site of a pair `x` apart, centered on the chain.
fn centered_pair(l: usize, x: usize) -> ScarResult<usize> {
    if x >= l {
        return Err(ScarError::OutOfRange(format!("distance {x} on L = {l}")));
    }
    Ok((l - x) / 2)
}

/// Tower values at `N = L/2` against the closed forms, for each even `L`:
/// `offdiag` is `⟨N|(S⁻_j)²|N+1⟩` at the central site and `lro` the connected
/// `⟨N|(S⁻_{j+x})²(S⁺_j)²|N⟩` for a centered pair `x` apart.
pub fn convergence_table(template: &ModelParams, ls: &[usize], x: usize) -> ScarResult<Vec<ConvergenceRow>> {
    let mut rows = Vec::new();
    for &l in ls {
        if l % 2 != 0 {
            return Err(ScarError::InvalidParams(format!("L = {l} has no half-filled scar")));
        }
        let p = ModelParams { l, ..template.clone() };
        let tower = ScarTower::build(&p)?;
        let n = l / 2;
        let rho = 0.5;
        let j = l / 2;
        let op = OperatorSpec::local(LocalKind::SMinusSq, j);
        let ed = tower.matrix_element(n, &op, n + 1)?;
        let pred = predicted_offdiag(rho, 1, &op)?;
        rows.push(ConvergenceRow { l, quantity: "offdiag".into(), ed_value: ed.re, predicted: pred.re, abs_gap: (ed - pred).norm() });

        let a = centered_pair(l, x)?;
        let pair = OperatorSpec::pair(LocalKind::SMinusSq, a + x, LocalKind::SPlusSq, a);
        let both = tower.matrix_element(n, &pair, n)?;
        let m1 = tower.matrix_element(n, &OperatorSpec::local(LocalKind::SMinusSq, a + x), n)?;
        let m2 = tower.matrix_element(n, &OperatorSpec::local(LocalKind::SPlusSq, a), n)?;
        let ed = both - m1 * m2;
        let pred = scar_lro(rho, x as i64, LocalKind::SMinusSq, LocalKind::SPlusSq)?;
        rows.push(ConvergenceRow { l, quantity: "lro".into(), ed_value: ed.re, predicted: pred.re, abs_gap: (ed - pred).norm() });
    }
    Ok(rows)
}
