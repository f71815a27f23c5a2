//! Coherent-state autocorrelator from MPS time evolution.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mpo::{build_mpo, build_mpo_h0};
use super::schedule::{Evolver, Schedule, TrajectoryRecord};
use super::state::{apply_squared_raising, op_matrix, product_mps, site_profile};
use super::taylor::{apply_mpo, compress};
use crate::dynamics::correlator::target_sites;
use crate::dynamics::{CorrelatorGrid, GridMetadata, StateLabel};
use crate::spin::{LocalKind, ModelParams};
use crate::{ScarError, ScarResult, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MpsMode {
    /// Evolve `(S⁺_{x0})²|ζ⟩` to `t` and contract with the revived bra.
    Direct,
    /// Evolve ket and bra to `t/2` under `H₀ = H − hΣ(Sᶻ+1)`.
    HalfTime,
}

#[derive(Clone, Debug)]
pub struct MpsCorrelatorRun {
    pub grid: CorrelatorGrid,
    /// Log of the evolved ket; energies are of `H` (direct) or `H₀` (half-time).
    pub trajectory: Vec<TrajectoryRecord>,
}

/// `‖H₀|ζ⟩‖`, which vanishes for every coherent state of the tower.
pub fn h0_annihilation_residual(params: &ModelParams, zeta: C64) -> ScarResult<f64> {
    let h0 = build_mpo_h0(params)?;
    let v = compress(&apply_mpo(&h0, &product_mps(zeta, params.l)?)?, 0.0, usize::MAX)?;
    Ok(v.norm())
}

fn check_times(times: &[f64]) -> ScarResult<()> {
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(ScarError::InvalidParams("times must be finite and non-negative".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(ScarError::InvalidParams("times must be sorted".into()));
    }
    Ok(())
}

fn covering(schedule: &Schedule, needed: f64) -> ScarResult<Schedule> {
    schedule.validate()?;
    if needed <= 0.0 {
        return Ok(schedule.clone());
    }
    if schedule.t_end() < needed - 1e-12 {
        return Err(ScarError::Schedule(format!("schedule ends at {} before t = {needed}", schedule.t_end())));
    }
    Ok(schedule.until(needed))
}

pub fn autocorrelator_mps(
    params: &ModelParams,
    zeta: C64,
    x0: usize,
    positions: &[i64],
    times: &[f64],
    schedule: &Schedule,
    mode: MpsMode,
) -> ScarResult<CorrelatorGrid> {
    autocorrelator_mps_run(params, zeta, x0, positions, times, schedule, mode).map(|r| r.grid)
}

/// Same as [`autocorrelator_mps`], also returning the trajectory log.
pub fn autocorrelator_mps_run(
    params: &ModelParams,
    zeta: C64,
    x0: usize,
    positions: &[i64],
    times: &[f64],
    schedule: &Schedule,
    mode: MpsMode,
) -> ScarResult<MpsCorrelatorRun> {
    let l = params.l;
    let sites = target_sites(l, x0, positions)?;
    check_times(times)?;
    let t_max = times.last().copied().unwrap_or(0.0);
    let omega = params.omega();
    let bra0 = product_mps(zeta, l)?;
    let ket0 = apply_squared_raising(&bra0, x0)?;
    // disconnected factors by direct contraction of the product state
    let raised = site_profile(&bra0, &bra0, &op_matrix(LocalKind::SPlusSq))?[x0];
    let lowered = site_profile(&bra0, &bra0, &op_matrix(LocalKind::SMinusSq))?;
    let disc: Vec<C64> = sites.iter().map(|&y| lowered[y] * raised).collect();
    let nx = sites.len();
    let mut values = vec![C64::new(0.0, 0.0); times.len() * nx];
    let lower = op_matrix(LocalKind::SMinusSq);
    let (trajectory, sched, final_bond, trunc) = match mode {
        MpsMode::Direct => {
            let sched = covering(schedule, t_max)?;
            let mpo = build_mpo(params)?;
            let mut ev = Evolver::new(ket0, &mpo, &sched, 1.0, true)?;
            for (it, &t) in times.iter().enumerate() {
                ev.advance_to(t)?;
                let phase = C64::from_polar(1.0, -omega * t);
                let bra = product_mps(zeta * phase, l)?;
                let prof = site_profile(&bra, &ev.state, &lower)?;
                for (ix, &y) in sites.iter().enumerate() {
                    values[it * nx + ix] = prof[y] - disc[ix] * phase;
                }
            }
            let (b, e) = (ev.state.max_bond(), ev.state.trunc_err);
            (ev.records, sched, b, e)
        }
        MpsMode::HalfTime => {
            let sched = covering(schedule, 0.5 * t_max)?;
            let mpo = build_mpo_h0(params)?;
            let mut ket = Evolver::new(ket0, &mpo, &sched, 1.0, true)?;
            let mut bras = sites
                .iter()
                .map(|&y| Evolver::new(apply_squared_raising(&bra0, y)?, &mpo, &sched, -1.0, false))
                .collect::<ScarResult<Vec<_>>>()?;
            for (it, &t) in times.iter().enumerate() {
                let tau = 0.5 * t;
                ket.advance_to(tau)?;
                bras.par_iter_mut().map(|b| b.advance_to(tau)).collect::<ScarResult<Vec<()>>>()?;
                let phase = C64::from_polar(1.0, -omega * t);
                for (ix, b) in bras.iter().enumerate() {
                    values[it * nx + ix] = (b.state.overlap(&ket.state)? - disc[ix]) * phase;
                }
            }
            let b = bras.iter().map(|b| b.state.max_bond()).fold(ket.state.max_bond(), usize::max);
            let e = bras.iter().map(|b| b.state.trunc_err).fold(ket.state.trunc_err, f64::max);
            (ket.records, sched, b, e)
        }
    };
    let mut provenance = BTreeMap::new();
    provenance.insert("schedule".to_string(), serde_json::to_value(&sched)?);
    provenance.insert("mode".to_string(), serde_json::to_value(mode)?);
    provenance.insert("final_max_bond".to_string(), serde_json::json!(final_bond));
    provenance.insert("trunc_err".to_string(), serde_json::json!(trunc));
    let meta = GridMetadata {
        params: Some(params.clone()),
        state: StateLabel::coherent(zeta),
        method: match mode {
            MpsMode::Direct => "mps_direct".into(),
            MpsMode::HalfTime => "mps_half_time".into(),
        },
        x0,
        omega,
        provenance,
    };
    let grid = CorrelatorGrid::new(positions.to_vec(), times.to_vec(), values, meta)?;
    Ok(MpsCorrelatorRun { grid, trajectory })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::autocorrelator_ed;

    #[test]
    fn tower_is_annihilated_by_h0() {
        for l in [6, 10] {
            let r = h0_annihilation_residual(&ModelParams::reference(l), C64::new(0.3, -0.9)).unwrap();
            assert!(r < 1e-10, "L = {l}: {r}");
        }
    }

    #[test]
    fn initial_row_and_short_time_agreement() {
        let p = ModelParams::reference(6);
        let zeta = C64::new(0.0, -1.0);
        let positions = [-2i64, -1, 0, 1, 2];
        let times = [0.0, 0.3, 0.6, 1.0];
        let sched = Schedule::standard(1.0, 1000);
        let ed = autocorrelator_ed(&p, zeta, 3, &positions, &times, 1e-12).unwrap();
        for mode in [MpsMode::Direct, MpsMode::HalfTime] {
            let g = autocorrelator_mps(&p, zeta, 3, &positions, &times, &sched, mode).unwrap();
            for (ix, &x) in positions.iter().enumerate() {
                let want = if x == 0 { 1.0 } else { 0.0 };
                assert!((g.get(0, ix) - C64::new(want, 0.0)).norm() < 1e-12);
            }
            assert!(g.max_abs_diff(&ed).unwrap() < 1e-6, "{mode:?}");
        }
    }

    #[test]
    fn short_schedule_is_rejected() {
        let p = ModelParams::reference(6);
        let sched = Schedule::standard(0.5, 16);
        let r = autocorrelator_mps(&p, C64::new(0.0, -1.0), 3, &[0], &[0.0, 1.0], &sched, MpsMode::Direct);
        assert!(matches!(r, Err(ScarError::Schedule(_))));
        let per = ModelParams { boundary: crate::spin::Boundary::Periodic, ..p };
        let r = autocorrelator_mps(&per, C64::new(0.0, -1.0), 3, &[0], &[0.0], &Schedule::standard(1.0, 8), MpsMode::Direct);
        assert!(matches!(r, Err(ScarError::Unsupported(_))));
    }
}
