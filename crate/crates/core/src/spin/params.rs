use serde::{Deserialize, Serialize};

use crate::{ScarError, ScarResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

/// Couplings and geometry of
///
/// ```text
/// H = J  Σ_j (SˣⱼSˣⱼ₊₁ + SʸⱼSʸⱼ₊₁) + h Σ_j (Sᶻⱼ + 1)
///   + D  Σ_j ((Sᶻⱼ)² − 1)         + J₃ Σ_j (SˣⱼSˣⱼ₊₃ + SʸⱼSʸⱼ₊₃)
/// ```
///
/// Serialized as a flat JSON object `{"J", "h", "D", "J3", "L", "boundary"}`.
/// Deserialization validates, so a `ModelParams` value always satisfies its
/// invariants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct ModelParams {
    #[serde(rename = "J")]
    pub j: f64,
    pub h: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "J3")]
    pub j3: f64,
    #[serde(rename = "L")]
    pub l: usize,
    pub boundary: Boundary,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    #[serde(rename = "J")]
    j: f64,
    h: f64,
    #[serde(rename = "D")]
    d: f64,
    #[serde(rename = "J3")]
    j3: f64,
    #[serde(rename = "L")]
    l: usize,
    boundary: Boundary,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = ScarError;

    fn try_from(raw: RawParams) -> ScarResult<Self> {
        ModelParams::new(raw.j, raw.h, raw.d, raw.j3, raw.l, raw.boundary)
    }
}

impl ModelParams {
    pub fn new(j: f64, h: f64, d: f64, j3: f64, l: usize, boundary: Boundary) -> ScarResult<Self> {
        let p = ModelParams { j, h, d, j3, l, boundary };
        p.validate()?;
        Ok(p)
    }

    /// `J = 1, D = 0.1, J₃ = 0.5, h = 0.5` on an open chain of `l` sites.
    pub fn reference(l: usize) -> Self {
        ModelParams::new(1.0, 0.5, 0.1, 0.5, l, Boundary::Open)
            .expect("reference couplings are valid for L >= 4")
    }

    pub fn validate(&self) -> ScarResult<()> {
        for (name, v) in [("J", self.j), ("h", self.h), ("D", self.d), ("J3", self.j3)] {
            if !v.is_finite() {
                return Err(ScarError::InvalidParams(format!("{name} = {v} is not finite")));
            }
        }
        if self.l < 2 {
            return Err(ScarError::InvalidParams(format!("L = {} < 2", self.l)));
        }
        // range-3 bonds need four distinct sites
        if self.j3 != 0.0 && self.l < 4 {
            return Err(ScarError::InvalidParams(format!(
                "J3 != 0 requires L >= 4, got L = {}",
                self.l
            )));
        }
        Ok(())
    }

    /// Scar spacing `ω = 2h`.
    pub fn omega(&self) -> f64 {
        2.0 * self.h
    }

    pub fn with_h(&self, h: f64) -> Self {
        ModelParams { h, ..self.clone() }
    }

    pub fn with_l(&self, l: usize) -> ScarResult<Self> {
        ModelParams::new(self.j, self.h, self.d, self.j3, l, self.boundary)
    }

    /// Bonds `(i, k, coupling)` of the XY terms, nearest-neighbour first.
    ///
    /// Periodic chains keep every term of the sum literally, so on very short
    /// rings the same pair can appear more than once.
    pub fn bonds(&self) -> Vec<(usize, usize, f64)> {
        let l = self.l;
        let mut out = Vec::new();
        for (range, c) in [(1usize, self.j), (3usize, self.j3)] {
            if c == 0.0 {
                continue;
            }
            match self.boundary {
                Boundary::Open => {
                    for i in 0..l.saturating_sub(range) {
                        out.push((i, i + range, c));
                    }
                }
                Boundary::Periodic => {
                    for i in 0..l {
                        out.push((i, (i + range) % l, c));
                    }
                }
            }
        }
        out
    }
}
