//! Experiment configuration, parsed from JSON and validated before any
//! computation or output.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use scarlab::dynamics::{time_axis, TraceMode};
use scarlab::mps::{MpsMode, Schedule};
use scarlab::spin::ModelParams;
use scarlab::{ScarError, ScarResult, C64, DEFAULT_DENSE_CAP};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Zeta {
    pub re: f64,
    pub im: f64,
}

impl Zeta {
    pub fn value(&self) -> C64 {
        C64::new(self.re, self.im)
    }
}

impl Default for Zeta {
    fn default() -> Self {
        Zeta { re: 0.0, im: -1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ed,
    Mps,
    InfiniteTemperature,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectorChoice {
    QZeta,
    QW,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Insertion site; the chain center when absent.
    #[serde(default)]
    pub x0: Option<usize>,
    pub x_min: i64,
    pub x_max: i64,
    pub t_max: f64,
    pub dt: f64,
}

impl GridSpec {
    pub fn positions(&self) -> Vec<i64> {
        (self.x_min..=self.x_max).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        time_axis(self.t_max, self.dt)
    }

    pub fn x0(&self, l: usize) -> usize {
        self.x0.unwrap_or(l / 2)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpsSpec {
    #[serde(default = "default_mode")]
    pub mode: MpsMode,
    #[serde(default = "default_max_bond")]
    pub max_bond: usize,
    /// Explicit schedule; the standard one up to the needed time otherwise.
    #[serde(default)]
    pub schedule: Option<Schedule>,
}

fn default_mode() -> MpsMode {
    MpsMode::Direct
}

fn default_max_bond() -> usize {
    128
}

impl Default for MpsSpec {
    fn default() -> Self {
        MpsSpec { mode: default_mode(), max_bond: default_max_bond(), schedule: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    /// Grids to analyze, as `<dir>/<stem>` without extension, relative to the
    /// config file.
    #[serde(default)]
    pub inputs: Vec<String>,
    #[serde(default = "default_zs")]
    pub z_values: Vec<f64>,
    #[serde(default = "default_t_min")]
    pub t_min: f64,
    /// Largest `|C|` allowed on positions inside the boundary guard, relative
    /// to the grid maximum, at times `t ≥ t_min`.
    #[serde(default = "default_edge_tolerance")]
    pub edge_tolerance: f64,
    /// Exponents of synthetic self-test grids.
    #[serde(default)]
    pub synthetic: Vec<f64>,
}

fn default_zs() -> Vec<f64> {
    vec![1.0, 1.5, 2.0]
}

fn default_t_min() -> f64 {
    2.0
}

fn default_edge_tolerance() -> f64 {
    0.05
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        AnalysisSpec {
            inputs: Vec::new(),
            z_values: default_zs(),
            t_min: default_t_min(),
            edge_tolerance: default_edge_tolerance(),
            synthetic: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EthSpec {
    pub n: usize,
    /// Site of `(S⁺)²`; the chain center when absent.
    #[serde(default)]
    pub site: Option<usize>,
    #[serde(default = "default_bin_width")]
    pub bin_width: f64,
    /// Level-density broadening as a fraction of the spectral width.
    #[serde(default = "default_broadening")]
    pub broadening: f64,
}

fn default_bin_width() -> f64 {
    0.25
}

fn default_broadening() -> f64 {
    0.05
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    /// Tower frequency to check against; `2h` when absent.
    #[serde(default)]
    pub omega: Option<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_revival_times")]
    pub revival_times: Vec<f64>,
}

fn default_tol() -> f64 {
    1e-10
}

fn default_revival_times() -> Vec<f64> {
    vec![1.0, 10.0]
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec { omega: None, tol: default_tol(), revival_times: default_revival_times() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelParams,
    #[serde(default)]
    pub zeta: Zeta,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default)]
    pub projector: Option<ProjectorChoice>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub mps: MpsSpec,
    #[serde(default = "default_krylov_tol")]
    pub krylov_tol: f64,
    #[serde(default)]
    pub trace: TraceMode,
    #[serde(default)]
    pub analysis: AnalysisSpec,
    #[serde(default)]
    pub eth: Option<EthSpec>,
    #[serde(default)]
    pub verify: VerifySpec,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Output directory used when none is given on the command line.
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Directory of the config file, for resolving relative inputs.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_method() -> Method {
    Method::Ed
}

fn default_krylov_tol() -> f64 {
    1e-12
}

fn default_seed() -> u64 {
    12345
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Verify,
    Autocorr,
    Analyze,
    Eth,
}

fn invalid(msg: String) -> ScarError {
    ScarError::InvalidParams(msg)
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> ScarResult<Self> {
        serde_json::from_str(text).map_err(|e| ScarError::Parse(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> ScarResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ScarError::Parse(format!("{}: {e}", path.display())))?;
        let mut c = ExperimentConfig::from_json(&text)?;
        c.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(c)
    }

    /// Effective schedule of an MPS run.
    pub fn schedule(&self) -> ScarResult<Schedule> {
        let grid = self.grid.as_ref().ok_or_else(|| invalid("mps run without grid".into()))?;
        let needed = match self.mps.mode {
            MpsMode::Direct => grid.t_max,
            MpsMode::HalfTime => 0.5 * grid.t_max,
        };
        let s = self.mps.schedule.clone().unwrap_or_else(|| Schedule::standard(needed, self.mps.max_bond));
        s.validate()?;
        if s.t_end() < needed - 1e-12 {
            return Err(ScarError::Schedule(format!("schedule ends at {} before t = {needed}", s.t_end())));
        }
        Ok(s)
    }

    fn check_grid(&self) -> ScarResult<&GridSpec> {
        let l = self.model.l;
        let g = self.grid.as_ref().ok_or_else(|| invalid("autocorr needs a grid".into()))?;
        if !(g.dt > 0.0 && g.dt.is_finite() && g.t_max >= 0.0 && g.t_max.is_finite()) {
            return Err(invalid(format!("grid times: t_max = {}, dt = {}", g.t_max, g.dt)));
        }
        if g.x_min > g.x_max {
            return Err(invalid(format!("x_min = {} > x_max = {}", g.x_min, g.x_max)));
        }
        let x0 = g.x0(l) as i64;
        if x0 >= l as i64 || x0 + g.x_min < 0 || x0 + g.x_max >= l as i64 {
            return Err(invalid(format!("positions {}..={} around x0 = {x0} leave the chain of {l} sites", g.x_min, g.x_max)));
        }
        Ok(g)
    }

    /// Everything that can be checked without computing.
    pub fn validate(&self, cmd: Command) -> ScarResult<()> {
        self.model.validate()?;
        let z = self.zeta.value();
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(invalid("zeta is not finite".into()));
        }
        if !(self.krylov_tol > 0.0 && self.krylov_tol < 1.0) {
            return Err(invalid(format!("krylov_tol = {}", self.krylov_tol)));
        }
        match cmd {
            Command::Verify => {
                let dim = 3f64.powi(self.model.l as i32);
                if dim > DEFAULT_DENSE_CAP as f64 * 4.0 {
                    return Err(invalid(format!("verify needs L small enough for exact checks, got L = {}", self.model.l)));
                }
                if let Some(w) = self.verify.omega {
                    if !w.is_finite() {
                        return Err(invalid("verify.omega is not finite".into()));
                    }
                }
                if !(self.verify.tol > 0.0) || self.verify.revival_times.iter().any(|t| !t.is_finite() || *t < 0.0) {
                    return Err(invalid("verify tolerances and times must be positive".into()));
                }
            }
            Command::Autocorr => {
                self.check_grid()?;
                match self.method {
                    Method::Mps => {
                        if self.projector.is_some() {
                            return Err(ScarError::Unsupported("projected correlators need method ed".into()));
                        }
                        if self.mps.max_bond == 0 {
                            return Err(invalid("mps.max_bond = 0".into()));
                        }
                        self.schedule()?;
                    }
                    Method::InfiniteTemperature if self.projector.is_some() => {
                        return Err(ScarError::Unsupported("projectors apply to coherent states only".into()));
                    }
                    _ => {}
                }
            }
            Command::Analyze => {
                let a = &self.analysis;
                if a.inputs.is_empty() && a.synthetic.is_empty() {
                    return Err(invalid("analysis has neither inputs nor synthetic exponents".into()));
                }
                if a.z_values.is_empty() || a.z_values.iter().chain(&a.synthetic).any(|z| !(*z > 0.0 && z.is_finite())) {
                    return Err(invalid("analysis exponents must be positive".into()));
                }
                if !(a.edge_tolerance >= 0.0) {
                    return Err(invalid(format!("edge_tolerance = {}", a.edge_tolerance)));
                }
                for s in &a.inputs {
                    let (dir, stem) = self.input_path(s);
                    for ext in ["csv", "json"] {
                        let p = dir.join(format!("{stem}.{ext}"));
                        if !p.is_file() {
                            return Err(ScarError::Parse(format!("missing analysis input {}", p.display())));
                        }
                    }
                }
            }
            Command::Eth => {
                let e = self.eth.as_ref().ok_or_else(|| invalid("eth section missing".into()))?;
                let site = e.site.unwrap_or(self.model.l / 2);
                if site >= self.model.l {
                    return Err(ScarError::OutOfRange(format!("site {site} on L = {}", self.model.l)));
                }
                if e.n >= self.model.l {
                    return Err(ScarError::EmptySector { l: self.model.l, m: 2 * (e.n as i64 + 1) - self.model.l as i64 });
                }
                if !(e.bin_width > 0.0) || !(e.broadening > 0.0) {
                    return Err(invalid("eth bin_width and broadening must be positive".into()));
                }
            }
        }
        Ok(())
    }

    /// Directory and stem of an analysis input.
    pub fn input_path(&self, s: &str) -> (PathBuf, String) {
        let p = self.base_dir.join(s);
        let stem = p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
        (p.parent().map(Path::to_path_buf).unwrap_or_default(), stem)
    }
}
