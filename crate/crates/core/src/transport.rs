//! Post-processing of correlator grids: demodulation, sum rule, the η(t)
//! estimator, scaling collapse and light-cone fronts.

use serde::{Deserialize, Serialize};

use crate::dynamics::{CorrelatorGrid, GridMetadata, StateLabel};
use crate::output::fmt_f64;
use crate::spin::Boundary;
use crate::{ScarError, ScarResult, C64};

/// Sites this close to either chain end are left out of η and collapse sums.
pub const BOUNDARY_GUARD: usize = 2;

/// Interpolation points on the common support of a collapse.
const COLLAPSE_POINTS: usize = 200;

/// Curves with fewer grid points inside the common support are dropped.
const MIN_CURVE_POINTS: usize = 4;

fn stagger(x: i64) -> f64 {
    if x.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `M(x,t) = (−1)^x e^{iωt} C(x,t)`.
pub fn demodulate(grid: &CorrelatorGrid, omega: f64) -> CorrelatorGrid {
    let method = format!("{}+demodulated", grid.meta.method);
    grid.map_values(&method, |it, ix, v| v * C64::from_polar(stagger(grid.positions[ix]), omega * grid.times[it]))
}

/// Inverse of [`demodulate`].
pub fn remodulate(grid: &CorrelatorGrid, omega: f64) -> CorrelatorGrid {
    let method = grid.meta.method.trim_end_matches("+demodulated").to_string();
    grid.map_values(&method, |it, ix, v| v * C64::from_polar(stagger(grid.positions[ix]), -omega * grid.times[it]))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumRule {
    pub times: Vec<f64>,
    /// `s(t) = Σ_x (−1)^x e^{iωt} C(x,t)` over every position of the grid.
    pub values: Vec<C64>,
    /// Whether the signal reached the outermost positions of the window,
    /// in which case `s(t)` need not be constant.
    pub edge_reached: bool,
}

impl SumRule {
    /// `max_t |Re s(t) − Re s(0)|`.
    pub fn drift(&self) -> f64 {
        let Some(first) = self.values.first() else { return 0.0 };
        self.values.iter().map(|v| (v.re - first.re).abs()).fold(0.0, f64::max)
    }
}

/// Relative size of an edge value that counts as the front reaching it.
const EDGE_FRACTION: f64 = 1e-3;

pub fn sum_rule(grid: &CorrelatorGrid, omega: f64) -> SumRule {
    let m = demodulate(grid, omega);
    let values: Vec<C64> = (0..m.nt()).map(|it| m.row(it).iter().sum()).collect();
    let scale = grid.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut edges: Vec<usize> = match (grid.positions.iter().enumerate().min_by_key(|p| p.1), grid.positions.iter().enumerate().max_by_key(|p| p.1)) {
        (Some((a, _)), Some((b, _))) => vec![a, b],
        _ => vec![],
    };
    // an open chain's own ends truncate nothing
    if let Some(p) = grid.meta.params.as_ref().filter(|p| p.boundary == Boundary::Open) {
        let x0 = grid.meta.x0 as i64;
        edges.retain(|&ix| {
            let y = x0 + grid.positions[ix];
            y != 0 && y != p.l as i64 - 1
        });
    }
    let edge_reached = (0..grid.nt()).any(|it| edges.iter().any(|&ix| grid.get(it, ix).norm() > EDGE_FRACTION * scale));
    if edge_reached {
        log::warn!("correlator reaches the edge of the position window; the sum rule may drift");
    }
    SumRule { times: grid.times.clone(), values, edge_reached }
}

/// Column indices kept after the boundary guard; grids without chain
/// parameters keep every position.
pub fn interior_positions(grid: &CorrelatorGrid, guard: usize) -> Vec<usize> {
    let Some(p) = &grid.meta.params else { return (0..grid.nx()).collect() };
    let l = p.l as i64;
    let x0 = grid.meta.x0 as i64;
    (0..grid.nx())
        .filter(|&ix| {
            let site = x0 + grid.positions[ix];
            site >= guard as i64 && site < l - guard as i64
        })
        .collect()
}

/// Least-squares line `y = a + b x`; returns `(a, b, rms residual)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> ScarResult<(f64, f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(ScarError::Analysis(format!("linear fit needs at least 2 points, got {n}")));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(ScarError::Analysis("linear fit with a single abscissa".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let rms = (x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).sum::<f64>() / n as f64).sqrt();
    Ok((a, b, rms))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaFit {
    /// Fitted `1/z` from `η ∝ t^{−1/z}`.
    pub inv_z: f64,
    pub window: (f64, f64),
    /// RMS residual of the log-log fit.
    pub residual: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaSeries {
    pub times: Vec<f64>,
    pub eta: Vec<f64>,
    pub fit: Option<EtaFit>,
}

impl EtaSeries {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,eta\n");
        for (t, e) in self.times.iter().zip(&self.eta) {
            s.push_str(&format!("{},{}\n", fmt_f64(*t), fmt_f64(*e)));
        }
        s
    }

    /// Whether `η` decreases between consecutive times inside `[t_lo, t_hi]`.
    pub fn is_decreasing(&self, t_lo: f64, t_hi: f64) -> bool {
        let v: Vec<f64> = self.times.iter().zip(&self.eta).filter(|(t, _)| **t >= t_lo && **t <= t_hi).map(|p| *p.1).collect();
        v.windows(2).all(|w| w[1] <= w[0])
    }
}

/// Default fit window `[2, t_max]`.
pub const ETA_FIT_START: f64 = 2.0;

/// `η(t) = Σ_x |Re[e^{iωt} C(x,t)]|²` over guarded positions, with a
/// log-log fit over `window` (default `[2, t_max]`).
pub fn eta(grid: &CorrelatorGrid, omega: f64) -> ScarResult<EtaSeries> {
    eta_with(grid, omega, None, BOUNDARY_GUARD)
}

pub fn eta_with(grid: &CorrelatorGrid, omega: f64, window: Option<(f64, f64)>, guard: usize) -> ScarResult<EtaSeries> {
    let cols = interior_positions(grid, guard);
    let eta: Vec<f64> = (0..grid.nt())
        .map(|it| {
            let ph = C64::from_polar(1.0, omega * grid.times[it]);
            cols.iter().map(|&ix| (ph * grid.get(it, ix)).re.powi(2)).sum()
        })
        .collect();
    let t_max = grid.times.iter().copied().fold(0.0, f64::max);
    let (lo, hi) = window.unwrap_or((ETA_FIT_START, t_max));
    let (lx, ly): (Vec<f64>, Vec<f64>) = grid
        .times
        .iter()
        .zip(&eta)
        .filter(|(t, e)| **t > 0.0 && **t >= lo && **t <= hi && **e > 0.0)
        .map(|(t, e)| (t.ln(), e.ln()))
        .unzip();
    let fit = if eta.iter().all(|e| *e == 0.0) || lx.len() < 2 {
        None
    } else {
        let (_, b, r) = linear_fit(&lx, &ly)?;
        Some(EtaFit { inv_z: -b, window: (lo, hi), residual: r, points: lx.len() })
    };
    Ok(EtaSeries { times: grid.times.clone(), eta, fit })
}

/// Fitted `1/z`, failing when the series is identically zero or too short.
pub fn eta_exponent(series: &EtaSeries) -> ScarResult<f64> {
    series.fit.as_ref().map(|f| f.inv_z).ok_or_else(|| ScarError::Analysis("η fit refused: no usable points".into()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseCurve {
    pub t: f64,
    /// `x / t^{1/z}`, increasing.
    pub u: Vec<f64>,
    /// `t^{1/z} Re M(x,t)`.
    pub value: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseProfile {
    pub z: f64,
    pub curves: Vec<CollapseCurve>,
    pub quality: f64,
}

impl CollapseProfile {
    /// CSV `z,t,u,value`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("z,t,u,value\n");
        for c in &self.curves {
            for (u, v) in c.u.iter().zip(&c.value) {
                s.push_str(&format!("{},{},{},{}\n", fmt_f64(self.z), fmt_f64(c.t), fmt_f64(*u), fmt_f64(*v)));
            }
        }
        s
    }
}

/// Default first time slice of a collapse.
pub const COLLAPSE_T_MIN: f64 = 2.0;

/// Rescaled profiles for times `t ≥ t_min` and their collapse quality.
pub fn collapse(grid: &CorrelatorGrid, omega: f64, z: f64) -> ScarResult<CollapseProfile> {
    collapse_with(grid, omega, z, COLLAPSE_T_MIN, BOUNDARY_GUARD)
}

pub fn collapse_with(grid: &CorrelatorGrid, omega: f64, z: f64, t_min: f64, guard: usize) -> ScarResult<CollapseProfile> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(ScarError::Analysis(format!("z = {z} must be positive")));
    }
    let m = demodulate(grid, omega);
    let mut cols = interior_positions(grid, guard);
    cols.sort_by_key(|&ix| grid.positions[ix]);
    let mut curves: Vec<CollapseCurve> = Vec::new();
    for (it, &t) in grid.times.iter().enumerate() {
        if t < t_min || t <= 0.0 {
            continue;
        }
        let s = t.powf(1.0 / z);
        curves.push(CollapseCurve {
            t,
            u: cols.iter().map(|&ix| grid.positions[ix] as f64 / s).collect(),
            value: cols.iter().map(|&ix| s * m.get(it, ix).re).collect(),
        });
    }
    curves.sort_by(|a, b| a.t.total_cmp(&b.t));
    if curves.len() < 3 {
        return Err(ScarError::Analysis(format!("collapse needs at least 3 time slices with t >= {t_min}, got {}", curves.len())));
    }
    let mut profile = CollapseProfile { z, curves, quality: 0.0 };
    profile.quality = collapse_quality(&profile)?;
    Ok(profile)
}

fn interpolate(u: &[f64], v: &[f64], x: f64) -> f64 {
    let k = u.partition_point(|p| *p <= x);
    if k == 0 {
        return v[0];
    }
    if k >= u.len() {
        return v[u.len() - 1];
    }
    let (a, b) = (u[k - 1], u[k]);
    let w = if b > a { (x - a) / (b - a) } else { 0.0 };
    v[k - 1] * (1.0 - w) + v[k] * w
}

/// Mean pairwise RMS distance of the curves on their common support divided
/// by the mean RMS amplitude; lower is better.
pub fn collapse_quality(profile: &CollapseProfile) -> ScarResult<f64> {
    let lo = profile.curves.iter().filter_map(|c| c.u.first()).copied().fold(f64::NEG_INFINITY, f64::max);
    let hi = profile.curves.iter().filter_map(|c| c.u.last()).copied().fold(f64::INFINITY, f64::min);
    if !(hi > lo) {
        return Err(ScarError::Analysis("collapse curves share no abscissa range".into()));
    }
    let usable: Vec<&CollapseCurve> = profile
        .curves
        .iter()
        .filter(|c| c.u.iter().filter(|u| **u >= lo && **u <= hi).count() >= MIN_CURVE_POINTS)
        .collect();
    if usable.len() < 2 {
        return Err(ScarError::Analysis(format!("only {} usable collapse curves", usable.len())));
    }
    let grid: Vec<f64> = (0..COLLAPSE_POINTS).map(|k| lo + (hi - lo) * k as f64 / (COLLAPSE_POINTS - 1) as f64).collect();
    let sampled: Vec<Vec<f64>> = usable.iter().map(|c| grid.iter().map(|&x| interpolate(&c.u, &c.value, x)).collect()).collect();
    let rms = |v: &[f64]| (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt();
    let amp = sampled.iter().map(|v| rms(v)).sum::<f64>() / sampled.len() as f64;
    if amp == 0.0 {
        return Err(ScarError::Analysis("collapse curves vanish on their common support".into()));
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for a in 0..sampled.len() {
        for b in a + 1..sampled.len() {
            let d: Vec<f64> = sampled[a].iter().zip(&sampled[b]).map(|(p, q)| p - q).collect();
            total += rms(&d);
            pairs += 1;
        }
    }
    Ok(total / pairs as f64 / amp)
}

/// `z` on a uniform grid in `[z_lo, z_hi]` minimizing the collapse quality.
pub fn best_collapse_z(grid: &CorrelatorGrid, omega: f64, z_lo: f64, z_hi: f64, steps: usize) -> ScarResult<(f64, f64)> {
    let mut best = (f64::NAN, f64::INFINITY);
    for k in 0..=steps {
        let z = z_lo + (z_hi - z_lo) * k as f64 / steps.max(1) as f64;
        let q = collapse(grid, omega, z)?.quality;
        if q < best.1 {
            best = (z, q);
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontFit {
    pub times: Vec<f64>,
    /// Largest `|x|` with `|C(x,t)| > threshold`, or 0.
    pub fronts: Vec<f64>,
    pub velocity: f64,
    pub intercept: f64,
}

/// Light-cone front per time and a linear fit of its growth over times where
/// the front has left the origin and not yet reached the window edge.
pub fn front_velocity(grid: &CorrelatorGrid, threshold: f64) -> ScarResult<FrontFit> {
    let max_x = grid.positions.iter().map(|x| x.abs()).max().unwrap_or(0) as f64;
    let fronts: Vec<f64> = (0..grid.nt())
        .map(|it| {
            grid.positions
                .iter()
                .enumerate()
                .filter(|(ix, _)| grid.get(it, *ix).norm() > threshold)
                .map(|(_, x)| x.abs())
                .max()
                .unwrap_or(0) as f64
        })
        .collect();
    if fronts.iter().all(|f| *f <= 1.0) {
        return Err(ScarError::Analysis("front never exceeds one site; velocity undefined".into()));
    }
    let (tx, fy): (Vec<f64>, Vec<f64>) =
        grid.times.iter().zip(&fronts).filter(|(_, f)| **f > 0.0 && **f < max_x).map(|(t, f)| (*t, *f)).unzip();
    let (a, b, _) = linear_fit(&tx, &fy)?;
    Ok(FrontFit { times: grid.times.clone(), fronts, velocity: b, intercept: a })
}

/// Angular frequency of the largest Fourier component of a uniformly sampled
/// real series after removing its mean, scanned on a grid refined `pad`
/// times beyond the natural resolution.
pub fn dominant_frequency(series: &[f64], dt: f64, pad: usize) -> f64 {
    let n = series.len();
    if n < 2 {
        return 0.0;
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let nf = n * pad.max(1);
    let mut best = (0.0, -1.0);
    for k in 0..=nf / 2 {
        let w = std::f64::consts::TAU * k as f64 / (nf as f64 * dt);
        let s: C64 = series.iter().enumerate().map(|(j, v)| C64::from_polar(v - mean, -w * j as f64 * dt)).sum();
        if s.norm() > best.1 {
            best = (w, s.norm());
        }
    }
    best.0
}

fn synthetic_meta(omega: f64, method: &str) -> GridMetadata {
    GridMetadata {
        params: None,
        state: StateLabel::Synthetic,
        method: method.into(),
        x0: 0,
        omega,
        provenance: Default::default(),
    }
}

/// `C(x,t) = (−1)^x e^{−iωt} t^{−1/z} F(x/t^{1/z})`, zero at `t = 0`.
pub fn synthetic_scaling_grid(z: f64, omega: f64, positions: &[i64], times: &[f64], f: impl Fn(f64) -> f64) -> ScarResult<CorrelatorGrid> {
    let mut values = Vec::with_capacity(positions.len() * times.len());
    for &t in times {
        for &x in positions {
            let v = if t > 0.0 {
                let s = t.powf(1.0 / z);
                f(x as f64 / s) / s
            } else {
                0.0
            };
            values.push(C64::from_polar(stagger(x), -omega * t) * v);
        }
    }
    CorrelatorGrid::new(positions.to_vec(), times.to_vec(), values, synthetic_meta(omega, &format!("synthetic_z{z}")))
}

/// Unit-amplitude ballistic cone `|x| ≤ v t`.
pub fn synthetic_cone(velocity: f64, positions: &[i64], times: &[f64]) -> ScarResult<CorrelatorGrid> {
    let values = times
        .iter()
        .flat_map(|&t| positions.iter().map(move |&x| C64::new(if (x.abs() as f64) <= velocity * t { 1.0 } else { 0.0 }, 0.0)))
        .collect();
    CorrelatorGrid::new(positions.to_vec(), times.to_vec(), values, synthetic_meta(0.0, "synthetic_cone"))
}

/// Analysis summary written next to the plot data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportSummary {
    /// `z` from the η fit, if the fit was possible.
    pub fitted_z: Option<f64>,
    pub quality_by_z: Vec<(f64, f64)>,
    pub sum_rule_drift: f64,
}

pub fn summarize(grid: &CorrelatorGrid, omega: f64, zs: &[f64]) -> ScarResult<TransportSummary> {
    let series = eta(grid, omega)?;
    let quality_by_z = zs.iter().map(|&z| collapse(grid, omega, z).map(|c| (z, c.quality))).collect::<ScarResult<_>>()?;
    Ok(TransportSummary {
        fitted_z: series.fit.map(|f| 1.0 / f.inv_z),
        quality_by_z,
        sum_rule_drift: sum_rule(grid, omega).drift(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axis(lo: i64, hi: i64) -> Vec<i64> {
        (lo..=hi).collect()
    }

    fn slices() -> Vec<f64> {
        (0..=32).map(|k| k as f64 * 0.25).collect()
    }

    fn gauss(u: f64) -> f64 {
        (-u * u).exp()
    }

    #[test]
    fn demodulation_inverts_construction() {
        let g = synthetic_scaling_grid(1.5, 1.0, &axis(-10, 10), &slices(), gauss).unwrap();
        let m = demodulate(&g, 1.0);
        for (it, &t) in g.times.iter().enumerate() {
            for (ix, &x) in g.positions.iter().enumerate() {
                let want = if t > 0.0 { gauss(x as f64 / t.powf(2.0 / 3.0)) / t.powf(2.0 / 3.0) } else { 0.0 };
                assert!((m.get(it, ix) - C64::new(want, 0.0)).norm() < 1e-14);
            }
        }
        let back = remodulate(&m, 1.0);
        assert!(back.max_abs_diff(&g).unwrap() < 1e-15);
        assert_eq!(back.meta.method, g.meta.method);
    }

    #[test]
    fn zero_frequency_demodulation_is_the_stagger() {
        let g = synthetic_cone(1.0, &axis(-3, 3), &[0.0, 1.0, 2.0]).unwrap();
        let m = demodulate(&g, 0.0);
        for it in 0..g.nt() {
            for (ix, &x) in g.positions.iter().enumerate() {
                assert_eq!(m.get(it, ix), g.get(it, ix) * stagger(x));
            }
        }
    }

    #[test]
    fn eta_recovers_exponent() {
        for z in [1.0, 1.5, 2.0] {
            let g = synthetic_scaling_grid(z, 1.0, &axis(-60, 60), &slices(), gauss).unwrap();
            let s = eta(&g, 1.0).unwrap();
            let inv = eta_exponent(&s).unwrap();
            assert!((inv - 1.0 / z).abs() < 0.02 / z, "z = {z}: 1/z = {inv}");
            assert!(s.eta.iter().all(|e| *e >= 0.0));
        }
    }

    #[test]
    fn eta_ignores_the_stagger() {
        let g = synthetic_scaling_grid(1.5, 0.7, &axis(-20, 20), &slices(), gauss).unwrap();
        let flipped = g.map_values("flip", |_, ix, v| v * stagger(g.positions[ix]));
        let (a, b) = (eta(&g, 0.7).unwrap(), eta(&flipped, 0.7).unwrap());
        for (x, y) in a.eta.iter().zip(&b.eta) {
            assert!((x - y).abs() <= 1e-15 * x.abs().max(1.0));
        }
    }

    #[test]
    fn zero_grid_refuses_fit() {
        let g = synthetic_cone(0.0, &axis(-3, 3), &slices()).unwrap().map_values("zero", |_, _, _| C64::new(0.0, 0.0));
        let s = eta(&g, 1.0).unwrap();
        assert!(s.eta.iter().all(|e| *e == 0.0));
        assert!(eta_exponent(&s).is_err());
    }

    #[test]
    fn collapse_identifies_exponent() {
        for z in [1.0, 1.5, 2.0] {
            let g = synthetic_scaling_grid(z, 1.0, &axis(-60, 60), &slices(), gauss).unwrap();
            let q: Vec<f64> = [1.0, 1.5, 2.0].iter().map(|&c| collapse(&g, 1.0, c).unwrap().quality).collect();
            let best = [1.0, 1.5, 2.0][q.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap().0];
            assert_eq!(best, z, "qualities {q:?}");
            let wide = synthetic_scaling_grid(z, 1.0, &axis(-120, 120), &slices(), |u| gauss(u / 3.0)).unwrap();
            let (zf, _) = best_collapse_z(&wide, 1.0, 0.8, 2.5, 170).unwrap();
            assert!((zf - z).abs() < 0.02 * z, "z = {z}: scanned {zf}");
        }
    }

    #[test]
    fn quality_is_scale_invariant_and_zero_for_duplicates() {
        let g = synthetic_scaling_grid(1.5, 1.0, &axis(-30, 30), &slices(), gauss).unwrap();
        let c = collapse(&g, 1.0, 1.0).unwrap();
        let mut scaled = c.clone();
        scaled.curves.iter_mut().for_each(|cv| cv.value.iter_mut().for_each(|v| *v *= 7.5));
        assert!((collapse_quality(&scaled).unwrap() - c.quality).abs() < 1e-12 * c.quality);
        let mut dup = c.clone();
        let first = dup.curves[0].clone();
        dup.curves = vec![first.clone(), first.clone(), first];
        assert_eq!(collapse_quality(&dup).unwrap(), 0.0);
    }

    #[test]
    fn collapse_needs_slices() {
        let g = synthetic_scaling_grid(1.5, 1.0, &axis(-10, 10), &[0.0, 1.0, 2.0, 2.5], gauss).unwrap();
        assert!(matches!(collapse(&g, 1.0, 1.5), Err(ScarError::Analysis(_))));
    }

    #[test]
    fn ballistic_front() {
        let times: Vec<f64> = (0..=40).map(|k| k as f64 * 0.25).collect();
        let g = synthetic_cone(2.0, &axis(-30, 30), &times).unwrap();
        let f = front_velocity(&g, 0.5).unwrap();
        assert_eq!(f.fronts[0], 0.0);
        assert!((f.velocity - 2.0).abs() < 0.1, "{}", f.velocity);
        let still = synthetic_cone(0.0, &axis(-3, 3), &times).unwrap();
        assert!(front_velocity(&still, 0.5).is_err());
    }

    #[test]
    fn sum_rule_of_synthetic_grid_is_flat_inside_window() {
        let g = synthetic_scaling_grid(2.0, 1.0, &axis(-40, 40), &slices(), gauss).unwrap();
        let s = sum_rule(&g, 1.0);
        assert!(!s.edge_reached);
        // Σ_x t^{-1/2} e^{-x²/t} ≈ √π for t > 0
        for (t, v) in s.times.iter().zip(&s.values).skip(8) {
            assert!((v.re - std::f64::consts::PI.sqrt()).abs() < 1e-6, "t = {t}");
        }
    }

    #[test]
    fn dominant_frequency_of_a_cosine() {
        let dt = 0.1;
        let v: Vec<f64> = (0..200).map(|k| (1.3 * k as f64 * dt).cos()).collect();
        assert!((dominant_frequency(&v, dt, 8) - 1.3).abs() < 0.01);
    }
}
