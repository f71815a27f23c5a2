//! Phased time-evolution schedules and per-step trajectory records.

use serde::{Deserialize, Serialize};

use super::mpo::MpoOperator;
use super::state::MpsState;
use super::taylor::taylor_step;
use super::tdvp::{tdvp1_step, tdvp2_step};
use crate::{ScarError, ScarResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Taylor series of exact MPO applications with SVD compression.
    Taylor,
    Tdvp2,
    Tdvp1,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub method: Method,
    pub dt: f64,
    pub eps: f64,
    pub max_bond: usize,
    pub t_end: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub phases: Vec<Phase>,
    /// Bond dimension at which two-site phases hand over to one-site TDVP.
    #[serde(default)]
    pub switch_bond: Option<usize>,
}

impl Schedule {
    /// Exact start to `t = 0.2`, then two-site TDVP at `dt = 0.1`,
    /// `eps = 1e-12` up to `t_end`, switching to one-site TDVP once the bond
    /// dimension reaches `max_bond`.
    pub fn standard(t_end: f64, max_bond: usize) -> Self {
        let start = 0.2f64.min(t_end);
        let mut phases = vec![Phase { method: Method::Taylor, dt: 0.02, eps: 1e-14, max_bond, t_end: start }];
        if t_end > start {
            phases.push(Phase { method: Method::Tdvp2, dt: 0.1, eps: 1e-12, max_bond, t_end });
        }
        Schedule { phases, switch_bond: Some(max_bond) }
    }

    /// Same schedule with the last phase extended or cut to `t_end`.
    pub fn until(&self, t_end: f64) -> Self {
        let mut phases: Vec<Phase> = Vec::new();
        for p in &self.phases {
            if phases.last().is_some_and(|q: &Phase| q.t_end >= t_end) {
                break;
            }
            phases.push(Phase { t_end: p.t_end.min(t_end), ..*p });
        }
        if let Some(last) = phases.last_mut() {
            last.t_end = t_end;
        }
        Schedule { phases, switch_bond: self.switch_bond }
    }

    pub fn t_end(&self) -> f64 {
        self.phases.last().map_or(0.0, |p| p.t_end)
    }

    pub fn validate(&self) -> ScarResult<()> {
        if self.phases.is_empty() {
            return Err(ScarError::Schedule("schedule has no phases".into()));
        }
        let mut prev = 0.0;
        for (k, p) in self.phases.iter().enumerate() {
            if !(p.dt > 0.0 && p.dt.is_finite()) {
                return Err(ScarError::Schedule(format!("phase {k}: dt = {} must be positive", p.dt)));
            }
            if !(p.eps >= 0.0 && p.eps < 1.0) {
                return Err(ScarError::Schedule(format!("phase {k}: eps = {} outside [0, 1)", p.eps)));
            }
            if p.max_bond == 0 {
                return Err(ScarError::Schedule(format!("phase {k}: max_bond = 0")));
            }
            if !(p.t_end > prev) || !p.t_end.is_finite() {
                return Err(ScarError::Schedule(format!("phase {k}: t_end = {} does not exceed {prev}", p.t_end)));
            }
            prev = p.t_end;
        }
        Ok(())
    }
}

/// One line of the trajectory log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub max_bond: usize,
    pub trunc_err: f64,
    pub energy: f64,
    pub magnetization: f64,
    pub norm: f64,
}

impl TrajectoryRecord {
    pub fn of(t: f64, mps: &MpsState, mpo: &MpoOperator) -> ScarResult<Self> {
        Ok(TrajectoryRecord {
            t,
            max_bond: mps.max_bond(),
            trunc_err: mps.trunc_err,
            energy: mps.expectation(mpo)?,
            magnetization: mps.magnetization()?,
            norm: mps.norm(),
        })
    }
}

/// Newline-delimited JSON, one record per line.
pub fn trajectory_ndjson(records: &[TrajectoryRecord]) -> ScarResult<String> {
    let mut s = String::new();
    for r in records {
        s.push_str(&serde_json::to_string(r)?);
        s.push('\n');
    }
    Ok(s)
}

/// Steps a state through a schedule; time may run backwards (`sign = −1`),
/// evolving with `e^{+iHt}`.
pub struct Evolver<'a> {
    pub state: MpsState,
    mpo: &'a MpoOperator,
    schedule: Schedule,
    sign: f64,
    /// Elapsed time, always non-negative.
    pub t: f64,
    phase: usize,
    switched: bool,
    pub records: Vec<TrajectoryRecord>,
    record: bool,
}

impl<'a> Evolver<'a> {
    pub fn new(state: MpsState, mpo: &'a MpoOperator, schedule: &Schedule, sign: f64, record: bool) -> ScarResult<Self> {
        schedule.validate()?;
        if mpo.len() != state.len() {
            return Err(ScarError::DimensionMismatch { expected: state.len(), found: mpo.len() });
        }
        let mut state = state;
        state.canonicalize(0);
        let mut ev = Evolver { state, mpo, schedule: schedule.clone(), sign: sign.signum(), t: 0.0, phase: 0, switched: false, records: Vec::new(), record };
        if record {
            ev.records.push(TrajectoryRecord::of(0.0, &ev.state, mpo)?);
        }
        Ok(ev)
    }

    /// Method currently in use.
    pub fn method(&self) -> Method {
        let p = &self.schedule.phases[self.phase.min(self.schedule.phases.len() - 1)];
        if self.switched && p.method == Method::Tdvp2 {
            Method::Tdvp1
        } else {
            p.method
        }
    }

    /// Evolves to elapsed time `target`, never stepping over it.
    pub fn advance_to(&mut self, target: f64) -> ScarResult<()> {
        let tol = 1e-12 * target.abs().max(1.0);
        if target > self.schedule.t_end() + tol {
            return Err(ScarError::Schedule(format!("time {target} beyond schedule end {}", self.schedule.t_end())));
        }
        while self.t < target - tol {
            while self.t >= self.schedule.phases[self.phase].t_end - tol {
                self.phase += 1;
            }
            let p = self.schedule.phases[self.phase];
            let h = p.dt.min(p.t_end - self.t).min(target - self.t);
            let dt = self.sign * h;
            self.state = match self.method() {
                Method::Taylor => taylor_step(&self.state, self.mpo, dt, p.eps, p.max_bond)?,
                Method::Tdvp2 => tdvp2_step(&self.state, self.mpo, dt, p.eps, p.max_bond)?,
                Method::Tdvp1 => tdvp1_step(&self.state, self.mpo, dt)?,
            };
            self.t = if (p.t_end - self.t - h).abs() <= tol {
                p.t_end
            } else if (target - self.t - h).abs() <= tol {
                target
            } else {
                self.t + h
            };
            if let Some(d) = self.schedule.switch_bond {
                if p.method == Method::Tdvp2 && self.state.max_bond() >= d {
                    self.switched = true;
                }
            }
            if self.record {
                self.records.push(TrajectoryRecord::of(self.t, &self.state, self.mpo)?);
            }
        }
        Ok(())
    }
}

/// Final state and per-step log of a full schedule.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub state: MpsState,
    pub records: Vec<TrajectoryRecord>,
}

pub fn evolve_schedule(mps: &MpsState, mpo: &MpoOperator, schedule: &Schedule) -> ScarResult<Trajectory> {
    let mut ev = Evolver::new(mps.clone(), mpo, schedule, 1.0, true)?;
    ev.advance_to(schedule.t_end())?;
    Ok(Trajectory { state: ev.state, records: ev.records })
}

#[cfg(test)]
mod tests {
    use super::super::mpo::build_mpo;
    use super::super::state::{apply_squared_raising, product_mps};
    use super::*;
    use crate::spin::ModelParams;
    use crate::C64;

    #[test]
    fn validation() {
        let mut s = Schedule::standard(1.0, 16);
        assert!(s.validate().is_ok());
        s.phases[1].t_end = 0.1;
        assert!(matches!(s.validate(), Err(ScarError::Schedule(_))));
        assert!(Schedule { phases: vec![], switch_bond: None }.validate().is_err());
        let short = Schedule::standard(3.0, 8).until(0.1);
        assert_eq!(short.phases.len(), 1);
        assert_eq!(short.t_end(), 0.1);
    }

    #[test]
    fn capped_run_switches_and_logs() {
        let p = ModelParams::reference(8);
        let mpo = build_mpo(&p).unwrap();
        let m = apply_squared_raising(&product_mps(C64::new(0.0, -1.0), 8).unwrap(), 4).unwrap();
        let tr = evolve_schedule(&m, &mpo, &Schedule::standard(1.0, 6)).unwrap();
        let recs = &tr.records;
        assert_eq!(recs.len(), 1 + 10 + 8);
        assert!(recs.windows(2).all(|w| w[1].trunc_err >= w[0].trunc_err));
        assert!(recs.iter().all(|r| r.max_bond <= 6));
        // past the switch the one-site integrator holds energy and norm
        let tail = &recs[11..];
        for r in tail {
            assert!((r.energy - tail[0].energy).abs() < 1e-8);
            assert!((r.norm - tail[0].norm).abs() < 1e-10);
        }
        let line = trajectory_ndjson(&recs[..1]).unwrap();
        let keys: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
        for k in ["t", "max_bond", "trunc_err", "energy", "magnetization", "norm"] {
            assert!(keys.get(k).is_some());
        }
    }

    #[test]
    fn converged_run_conserves_magnetization() {
        let p = ModelParams::reference(8);
        let mpo = build_mpo(&p).unwrap();
        let m = apply_squared_raising(&product_mps(C64::new(0.0, -1.0), 8).unwrap(), 4).unwrap();
        let tr = evolve_schedule(&m, &mpo, &Schedule::standard(1.0, 1000)).unwrap();
        let m0 = tr.records[0].magnetization;
        let e0 = tr.records[0].energy;
        for r in &tr.records {
            assert!((r.magnetization - m0).abs() < 1e-8);
            assert!((r.energy - e0).abs() < 1e-8);
        }
    }
}
