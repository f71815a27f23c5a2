//! Acceptance suite: one line per criterion on stdout.
//!
//! Criteria 5 and 10b need long MPS runs and only execute when
//! `SCARLAB_ACCEPTANCE_FULL` is set; otherwise they print `SKIP`.
//! Run with `cargo test -p scarlab --test acceptance -- --nocapture`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::{json, Value};

use scarlab::dynamics::correlator::Projector;
use scarlab::dynamics::{
    autocorrelator_ed, eth_matrix_elements, infinite_temperature_autocorrelator_with, projected_autocorrelator,
    time_axis, CorrelatorGrid, TraceMode,
};
use scarlab::mps::{autocorrelator_mps_run, MpsMode, Schedule};
use scarlab::saddle::convergence_table;
use scarlab::scar::{revival_fidelities, verify_rsga_at, ScarTower, RSGA_CONTRAST_SEED};
use scarlab::spin::{build_hamiltonian, ModelParams};
use scarlab::transport::{demodulate, dominant_frequency, eta_with, sum_rule, BOUNDARY_GUARD};
use scarlab::C64;
use scarlab_cli::commands::synthetic_self_test;

const FULL_ENV: &str = "SCARLAB_ACCEPTANCE_FULL";

fn zeta() -> C64 {
    C64::new(0.0, -1.0)
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn full_run() -> bool {
    std::env::var_os(FULL_ENV).is_some()
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Verdict {
    Pass,
    Fail,
    /// Fails by construction; reported, not asserted.
    Unattainable,
    Skip,
}

struct Line {
    id: &'static str,
    title: &'static str,
    verdict: Verdict,
    detail: String,
}

impl Line {
    fn new(id: &'static str, title: &'static str, ok: bool, detail: String) -> Self {
        Line { id, title, verdict: if ok { Verdict::Pass } else { Verdict::Fail }, detail }
    }

    fn print(&self) {
        let tag = match self.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Unattainable => "FAIL (unattainable, not asserted)",
            Verdict::Skip => "SKIP",
        };
        println!("criterion {:<3} {tag}: {}: {}", self.id, self.title, self.detail);
    }
}

fn criterion_1() -> Line {
    let p = ModelParams::reference(8);
    let tower = ScarTower::build(&p).unwrap();
    let mut eig: f64 = 0.0;
    for (n, s) in tower.states().iter().enumerate() {
        let h = build_hamiltonian(&p, &s.state.basis).unwrap();
        let hv = h.matvec(&s.state.amps);
        let e = p.omega() * n as f64;
        eig = eig.max(hv.iter().zip(&s.state.amps).map(|(a, b)| (a - b * e).norm_sqr()).sum::<f64>().sqrt());
    }
    let r = verify_rsga_at(&p, p.omega(), RSGA_CONTRAST_SEED).unwrap();
    let ok = tower.states().len() == 9 && eig < 1e-10 && r.max_residual() < 1e-10 && r.random_residual > 0.1;
    Line::new(
        "1",
        "scar tower exactness, L=8",
        ok,
        format!(
            "{} scars, max eigen residual {eig:.2e}, max RSGA residual {:.2e}, random contrast {:.3}",
            tower.states().len(),
            r.max_residual(),
            r.random_residual
        ),
    )
}

fn criterion_2() -> Line {
    let p = ModelParams::reference(8);
    let times = [1.0, std::f64::consts::TAU / p.omega(), 10.0];
    let f = revival_fidelities(&p, zeta(), &times).unwrap();
    let worst = f.iter().map(|f| 1.0 - f).fold(0.0, f64::max);
    Line::new("2", "revivals, L=8, zeta=-i", worst < 1e-9, format!("max infidelity {worst:.2e} at t in {{1, 2pi/omega, 10}}"))
}

/// Local maxima of a sampled series, endpoints included.
fn envelope(v: &[f64]) -> Vec<f64> {
    let mut out = vec![v[0]];
    for w in v.windows(3) {
        if w[1] >= w[0] && w[1] >= w[2] {
            out.push(w[1]);
        }
    }
    out
}

fn criterion_3() -> Line {
    let p = ModelParams::reference(6);
    let positions: Vec<i64> = (-3..=2).collect();
    let times = time_axis(5.0, 0.05);
    let g = infinite_temperature_autocorrelator_with(&p, 3, &positions, &times, TraceMode::Exact, 1e-12).unwrap();
    let at0 = (g.get(0, 3) - C64::new(4.0 / 3.0, 0.0)).norm();
    let off = (0..g.nx()).filter(|&ix| ix != 3).map(|ix| g.get(0, ix).norm()).fold(0.0, f64::max);
    let abs: Vec<f64> = g.series(0).unwrap().iter().map(|c| c.norm()).collect();
    let env = envelope(&abs);
    let monotone = env.windows(2).all(|w| w[1] <= w[0] + 1e-12);

    let path = golden("envelope_l6.json");
    if std::env::var_os("SCARLAB_BLESS").is_some() {
        fs::write(&path, serde_json::to_string_pretty(&json!({ "L": 6, "dt": 0.05, "t_max": 5.0, "envelope": env })).unwrap() + "\n")
            .unwrap();
    }
    let want: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    let want: Vec<f64> = want["envelope"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let golden_ok = want.len() == env.len() && want.iter().zip(&env).all(|(a, b)| (a - b).abs() < 1e-10);
    Line::new(
        "3",
        "infinite-temperature anchor, L=6",
        at0 < 1e-12 && off < 1e-12 && monotone && golden_ok,
        format!(
            "|C0(0,0) - 4/3| = {at0:.2e}, max |C0(x!=0,0)| = {off:.2e}, envelope of {} maxima monotone: {monotone}, golden match: {golden_ok}",
            env.len()
        ),
    )
}

fn l10_grid(t_max: f64, positions: &[i64]) -> CorrelatorGrid {
    autocorrelator_ed(&ModelParams::reference(10), zeta(), 5, positions, &time_axis(t_max, 0.1), 1e-12).unwrap()
}

fn criterion_4(grid: &CorrelatorGrid) -> Line {
    let s = sum_rule(grid, 1.0);
    let at0 = (s.values[0].re - 1.0).abs();
    Line::new(
        "4",
        "sum rule, ED L=10, t<=5",
        s.drift() < 1e-6 && at0 < 1e-12,
        format!("s(0) - 1 = {at0:.2e}, max drift {:.2e}", s.drift()),
    )
}

fn criterion_5() -> Line {
    if !full_run() {
        return Line { id: "5", title: "ED-MPS cross-validation", verdict: Verdict::Skip, detail: format!("set {FULL_ENV}=1") };
    }
    let p = ModelParams::reference(10);
    let positions: Vec<i64> = (-5..=4).collect();
    let times = time_axis(4.0, 0.1);
    let ed = autocorrelator_ed(&p, zeta(), 5, &positions, &times, 1e-12).unwrap();
    let mps = autocorrelator_mps_run(&p, zeta(), 5, &positions, &times, &Schedule::standard(4.0, 10_000), MpsMode::Direct)
        .unwrap();
    let d_ed = mps.grid.max_abs_diff(&ed).unwrap();

    let p = ModelParams::reference(16);
    let positions: Vec<i64> = (-8..=7).collect();
    let times = time_axis(5.0, 0.1);
    let direct = autocorrelator_mps_run(&p, zeta(), 8, &positions, &times, &Schedule::standard(5.0, 256), MpsMode::Direct).unwrap();
    let half = autocorrelator_mps_run(&p, zeta(), 8, &positions, &times, &Schedule::standard(2.5, 256), MpsMode::HalfTime).unwrap();
    let d_modes = direct.grid.max_abs_diff(&half.grid).unwrap();
    Line::new(
        "5",
        "ED-MPS cross-validation",
        d_ed < 1e-4 && d_modes < 5e-3,
        format!("L=10 t<=4 max |C_ed - C_mps| = {d_ed:.2e}; L=16 t<=5 direct vs half-time = {d_modes:.2e}"),
    )
}

fn criterion_6() -> Line {
    let dt = 0.1;
    // t <= 5 is shorter than one carrier period, so both frequencies are
    // read from a longer on-site run
    let long = l10_grid(15.0, &[0]);
    let c: Vec<f64> = long.series(0).unwrap().iter().map(|v| v.re).collect();
    let w_c = dominant_frequency(&c, dt, 16);
    let m: Vec<f64> = demodulate(&long, 1.0).series(0).unwrap().iter().map(|v| v.re).collect();
    let w_m = dominant_frequency(&m, dt, 16);
    Line::new(
        "6",
        "modulation pattern, ED L=10",
        (w_c - 1.0).abs() < 0.05 && w_m < 0.5,
        format!("over t<=15: dominant frequency of Re C(0,t) = {w_c:.4} (omega = 1), of Re M(0,t) = {w_m:.4}"),
    )
}

fn criterion_7() -> Line {
    let times = time_axis(5.0, 0.25);
    let mut maxima = Vec::new();
    for l in [6usize, 8, 10] {
        let p = ModelParams::reference(l);
        let x0 = l / 2;
        let positions: Vec<i64> = (0..l as i64).map(|s| s - x0 as i64).collect();
        let qw = projected_autocorrelator(&p, zeta(), Projector::QW, x0, &positions, &times, 1e-12).unwrap();
        let cc = autocorrelator_ed(&p, zeta(), x0, &positions, &times, 1e-12).unwrap();
        maxima.push(qw.max_abs_diff(&cc).unwrap());
    }
    let ok = maxima.windows(2).all(|w| w[1] <= w[0]);
    Line::new(
        "7",
        "scar irrelevance, max |C_QW - C_c|",
        ok,
        format!("L=6: {:.4e}, L=8: {:.4e}, L=10: {:.4e}", maxima[0], maxima[1], maxima[2]),
    )
}

fn criterion_8() -> Line {
    let s = eth_matrix_elements(&ModelParams::reference(10), 5, 5).unwrap();
    let scar = s.scar_point().unwrap().value;
    let q99 = s.background_quantile(0.99).unwrap();
    let closed = 4.0 * 6.0 * 5.0 / 100.0;
    let ratio = scar / q99;
    Line::new(
        "8",
        "ETH outlier, L=10, N=5",
        (scar - closed).abs() < 1e-10 && ratio >= 100.0,
        format!("scar element {scar:.15} (closed form 1.2), 99th percentile {q99:.3e}, ratio {ratio:.3e}"),
    )
}

fn criterion_9() -> (Line, Line) {
    let rows = convergence_table(&ModelParams::reference(6), &[6, 8, 10], 1).unwrap();
    let offdiag: Vec<_> = rows.iter().filter(|r| r.quantity == "offdiag").collect();
    let mut agreement: f64 = 0.0;
    let mut gaps = Vec::new();
    for r in &offdiag {
        let (l, n) = (r.l as f64, (r.l / 2) as f64);
        let closed = 2.0 * ((l - n) * (n + 1.0)).sqrt() / l;
        agreement = agreement.max((r.ed_value.abs() - closed).abs());
        gaps.push(r.abs_gap);
    }
    let shrinking = gaps.windows(2).all(|w| w[1] < w[0]);
    let a = Line::new(
        "9a",
        "saddle-point convergence, closed form",
        agreement < 1e-10 && shrinking,
        format!("max |ED - 2sqrt((L-N)(N+1))/L| = {agreement:.2e}, gaps to the rho=1/2 limit {gaps:.4?}"),
    );
    let last = *gaps.last().unwrap();
    let b = Line {
        id: "9b",
        title: "saddle-point gap at L=10 below 0.06",
        verdict: if last < 0.06 { Verdict::Pass } else { Verdict::Unattainable },
        detail: format!("gap {last:.6}; the exact value is 2sqrt(30)/10 - 1 = {:.6}", 2.0 * 30f64.sqrt() / 10.0 - 1.0),
    };
    (a, b)
}

fn criterion_10a() -> Line {
    let mut parts = Vec::new();
    let mut ok = true;
    for z in [1.0, 1.5, 2.0] {
        let v = synthetic_self_test(z, &[1.0, 1.5, 2.0]).unwrap();
        ok &= v["passed"] == json!(true) && v["best_candidate"] == json!(z);
        parts.push(format!(
            "z={z}: eta {:.4}, collapse {:.4}, best candidate {}",
            v["eta_z"].as_f64().unwrap(),
            v["collapse_z"].as_f64().unwrap(),
            v["best_candidate"]
        ));
    }
    Line::new("10a", "synthetic exponent recovery within 2%", ok, parts.join("; "))
}

fn scarlab(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_scarlab")).args(args).status().unwrap().code().unwrap()
}

fn criterion_10b() -> Line {
    if !full_run() {
        return Line { id: "10b", title: "MPS transport run, L=24", verdict: Verdict::Skip, detail: format!("set {FULL_ENV}=1") };
    }
    let dir = std::env::temp_dir().join(format!("scarlab-acceptance-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let model = json!({ "J": 1.0, "h": 0.5, "D": 0.1, "J3": 0.5, "L": 24, "boundary": "open" });
    let auto = json!({
        "model": model,
        "method": "mps",
        "grid": { "x_min": -12, "x_max": 11, "t_max": 6.0, "dt": 0.1 },
        "mps": { "max_bond": 128 },
    });
    fs::write(dir.join("autocorr.json"), auto.to_string()).unwrap();
    let code = scarlab(&["autocorr", "--config", dir.join("autocorr.json").to_str().unwrap(), "--out", dir.join("run").to_str().unwrap()]);
    if code != 0 {
        return Line::new("10b", "MPS transport run, L=24", false, format!("autocorr exited with {code}"));
    }
    let grid = CorrelatorGrid::read(&dir.join("run"), "autocorr").unwrap();
    let eta = eta_with(&grid, 1.0, Some((2.0, 6.0)), BOUNDARY_GUARD).unwrap();
    let inv_z = eta.fit.as_ref().map(|f| f.inv_z).unwrap_or(f64::NAN);
    let decreasing = eta.is_decreasing(2.0, 6.0);

    let ana = json!({ "model": model, "analysis": { "inputs": ["run/autocorr"], "z_values": [1.0, 1.5, 2.0] } });
    fs::write(dir.join("analyze.json"), ana.to_string()).unwrap();
    let code = scarlab(&["analyze", "--config", dir.join("analyze.json").to_str().unwrap(), "--out", dir.join("analysis").to_str().unwrap()]);
    let artifacts = ["eta.csv", "collapse_z1.csv", "collapse_z1.5.csv", "collapse_z2.csv", "sum_rule.csv"]
        .iter()
        .all(|f| dir.join("analysis/autocorr").join(f).is_file());
    Line::new(
        "10b",
        "MPS transport run, L=24, chi=128",
        decreasing && (0.4..=1.0).contains(&inv_z) && code == 0 && artifacts,
        format!("eta decreasing on [2,6]: {decreasing}, fitted 1/z = {inv_z:.4}, analyze exit {code}, artifacts: {artifacts}, in {}", dir.display()),
    )
}

#[test]
fn acceptance() {
    let grid = l10_grid(5.0, &(-5..=4).collect::<Vec<_>>());
    let (c9a, c9b) = criterion_9();
    let lines = vec![
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(&grid),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        c9a,
        c9b,
        criterion_10a(),
        criterion_10b(),
    ];
    for l in &lines {
        l.print();
    }
    let failed: Vec<&str> = lines.iter().filter(|l| l.verdict == Verdict::Fail).map(|l| l.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
