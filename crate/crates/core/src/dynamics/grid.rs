use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::output::fmt_f64;
use crate::spin::ModelParams;
use crate::{ScarError, ScarResult, C64};

/// Which state the correlator is evaluated in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateLabel {
    Coherent { zeta_re: f64, zeta_im: f64 },
    InfiniteTemperature,
    Synthetic,
}

impl StateLabel {
    pub fn coherent(zeta: C64) -> Self {
        StateLabel::Coherent { zeta_re: zeta.re, zeta_im: zeta.im }
    }

    pub fn zeta(&self) -> Option<C64> {
        match self {
            StateLabel::Coherent { zeta_re, zeta_im } => Some(C64::new(*zeta_re, *zeta_im)),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridMetadata {
    pub params: Option<ModelParams>,
    pub state: StateLabel,
    pub method: String,
    /// Insertion site of `(S⁺)²`; positions are offsets from it.
    pub x0: usize,
    pub omega: f64,
    /// Free-form run details (tolerances, schedule, seed, version).
    #[serde(default)]
    pub provenance: BTreeMap<String, serde_json::Value>,
}

/// Complex `C(x, t)` on a rectangular grid, stored time-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorGrid {
    pub positions: Vec<i64>,
    pub times: Vec<f64>,
    pub values: Vec<C64>,
    /// One-sigma statistical error per value, for stochastic estimates.
    pub stderr: Option<Vec<f64>>,
    pub meta: GridMetadata,
}

impl CorrelatorGrid {
    pub fn new(positions: Vec<i64>, times: Vec<f64>, values: Vec<C64>, meta: GridMetadata) -> ScarResult<Self> {
        let expected = positions.len() * times.len();
        if values.len() != expected {
            return Err(ScarError::DimensionMismatch { expected, found: values.len() });
        }
        if let Some(v) = values.iter().find(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(ScarError::Analysis(format!("non-finite correlator value {v}")));
        }
        Ok(CorrelatorGrid { positions, times, values, stderr: None, meta })
    }

    pub fn zeros(positions: Vec<i64>, times: Vec<f64>, meta: GridMetadata) -> Self {
        let n = positions.len() * times.len();
        CorrelatorGrid { positions, times, values: vec![C64::new(0.0, 0.0); n], stderr: None, meta }
    }

    pub fn nx(&self) -> usize {
        self.positions.len()
    }

    pub fn nt(&self) -> usize {
        self.times.len()
    }

    pub fn get(&self, it: usize, ix: usize) -> C64 {
        self.values[it * self.nx() + ix]
    }

    pub fn set(&mut self, it: usize, ix: usize, v: C64) {
        let nx = self.nx();
        self.values[it * nx + ix] = v;
    }

    /// All positions at time index `it`.
    pub fn row(&self, it: usize) -> &[C64] {
        let nx = self.nx();
        &self.values[it * nx..(it + 1) * nx]
    }

    pub fn position_index(&self, x: i64) -> Option<usize> {
        self.positions.iter().position(|&p| p == x)
    }

    /// Time series at offset `x`.
    pub fn series(&self, x: i64) -> Option<Vec<C64>> {
        let ix = self.position_index(x)?;
        Some((0..self.nt()).map(|it| self.get(it, ix)).collect())
    }

    /// Same grid with new values and method tag.
    pub fn map_values<F: Fn(usize, usize, C64) -> C64>(&self, method: &str, f: F) -> CorrelatorGrid {
        let mut out = self.clone();
        for it in 0..self.nt() {
            for ix in 0..self.nx() {
                out.set(it, ix, f(it, ix, self.get(it, ix)));
            }
        }
        out.meta.method = method.to_string();
        out
    }

    /// Largest pointwise `|a − b|`; the grids must share their axes.
    pub fn max_abs_diff(&self, other: &CorrelatorGrid) -> ScarResult<f64> {
        if self.positions != other.positions || self.times.len() != other.times.len() {
            return Err(ScarError::DimensionMismatch { expected: self.values.len(), found: other.values.len() });
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    /// CSV with columns `x,t,re,im`, ordered by time then position.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,t,re,im\n");
        for (it, &t) in self.times.iter().enumerate() {
            for (ix, &x) in self.positions.iter().enumerate() {
                let v = self.get(it, ix);
                s.push_str(&format!("{x},{},{},{}\n", fmt_f64(t), fmt_f64(v.re), fmt_f64(v.im)));
            }
        }
        s
    }

    /// CSV `x,t,stderr` when statistical errors are present.
    pub fn stderr_csv(&self) -> Option<String> {
        let err = self.stderr.as_ref()?;
        let mut s = String::from("x,t,stderr\n");
        for (it, &t) in self.times.iter().enumerate() {
            for (ix, &x) in self.positions.iter().enumerate() {
                s.push_str(&format!("{x},{},{}\n", fmt_f64(t), fmt_f64(err[it * self.nx() + ix])));
            }
        }
        Some(s)
    }

    pub fn metadata_json(&self) -> ScarResult<String> {
        Ok(serde_json::to_string_pretty(&self.meta)? + "\n")
    }

    /// Writes `<stem>.csv`, `<stem>.json` and, if present, `<stem>_stderr.csv`.
    pub fn write(&self, dir: &Path, stem: &str) -> ScarResult<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut paths = vec![dir.join(format!("{stem}.csv")), dir.join(format!("{stem}.json"))];
        fs::write(&paths[0], self.to_csv())?;
        fs::write(&paths[1], self.metadata_json()?)?;
        if let Some(e) = self.stderr_csv() {
            let p = dir.join(format!("{stem}_stderr.csv"));
            fs::write(&p, e)?;
            paths.push(p);
        }
        Ok(paths)
    }

    /// Parses the CSV written by [`to_csv`](Self::to_csv).
    pub fn from_csv(text: &str, meta: GridMetadata) -> ScarResult<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == "x,t,re,im" => {}
            other => return Err(ScarError::Parse(format!("unexpected header {other:?}"))),
        }
        let mut rows: Vec<(i64, f64, C64)> = Vec::new();
        for (n, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(ScarError::Parse(format!("line {}: expected 4 fields", n + 2)));
            }
            let bad = |e: &dyn std::fmt::Display| ScarError::Parse(format!("line {}: {e}", n + 2));
            let x = f[0].trim().parse::<i64>().map_err(|e| bad(&e))?;
            let t = f[1].trim().parse::<f64>().map_err(|e| bad(&e))?;
            let re = f[2].trim().parse::<f64>().map_err(|e| bad(&e))?;
            let im = f[3].trim().parse::<f64>().map_err(|e| bad(&e))?;
            rows.push((x, t, C64::new(re, im)));
        }
        let mut positions: Vec<i64> = Vec::new();
        let mut times: Vec<f64> = Vec::new();
        for &(x, t, _) in &rows {
            if !positions.contains(&x) {
                positions.push(x);
            }
            if times.last() != Some(&t) {
                times.push(t);
            }
        }
        if positions.len() * times.len() != rows.len() {
            return Err(ScarError::Parse("grid is not rectangular".into()));
        }
        let values = rows.iter().map(|r| r.2).collect();
        let grid = CorrelatorGrid::new(positions, times, values, meta)?;
        for (k, &(x, t, _)) in rows.iter().enumerate() {
            if grid.positions[k % grid.nx()] != x || grid.times[k / grid.nx()] != t {
                return Err(ScarError::Parse("rows are not ordered by time then position".into()));
            }
        }
        Ok(grid)
    }

    /// Reads `<stem>.csv` and `<stem>.json`.
    pub fn read(dir: &Path, stem: &str) -> ScarResult<Self> {
        let meta: GridMetadata = serde_json::from_str(&fs::read_to_string(dir.join(format!("{stem}.json")))?)?;
        CorrelatorGrid::from_csv(&fs::read_to_string(dir.join(format!("{stem}.csv")))?, meta)
    }
}

/// Evenly spaced times `0, dt, …` up to and including `t_max`.
pub fn time_axis(t_max: f64, dt: f64) -> Vec<f64> {
    let n = (t_max / dt + 1e-9).floor() as usize;
    (0..=n).map(|k| k as f64 * dt).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> GridMetadata {
        GridMetadata {
            params: Some(ModelParams::reference(6)),
            state: StateLabel::coherent(C64::new(0.0, -1.0)),
            method: "test".into(),
            x0: 3,
            omega: 1.0,
            provenance: BTreeMap::new(),
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let positions = vec![-1, 0, 2];
        let times = vec![0.0, 0.1, 0.30000000000000004];
        let values = (0..9).map(|k| C64::new(1.0 / (k as f64 + 3.0), -(k as f64).sqrt())).collect();
        let g = CorrelatorGrid::new(positions, times, values, meta()).unwrap();
        let back = CorrelatorGrid::from_csv(&g.to_csv(), meta()).unwrap();
        assert_eq!(back, g);
        let m: GridMetadata = serde_json::from_str(&g.metadata_json().unwrap()).unwrap();
        assert_eq!(m, g.meta);
    }

    #[test]
    fn shape_is_checked() {
        assert!(CorrelatorGrid::new(vec![0, 1], vec![0.0], vec![C64::new(0.0, 0.0)], meta()).is_err());
        assert!(CorrelatorGrid::from_csv("x,t,re,im\n0,0,1,0\n1,0,1,0\n0,1,1,0\n", meta()).is_err());
    }

    #[test]
    fn time_axis_includes_end() {
        let t = time_axis(5.0, 0.1);
        assert_eq!(t.len(), 51);
        assert!((t[50] - 5.0).abs() < 1e-12);
    }
}
