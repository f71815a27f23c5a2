//! Product-state bases of the spin-1 chain.
//!
//! A configuration is stored as a base-3 code with site 0 as the most
//! significant digit and digit `0 ↔ ↑ (s = +1)`, `1 ↔ 0`, `2 ↔ ↓ (s = −1)`.
//! Ascending codes are therefore lexicographic order with `↑ < 0 < ↓`, which
//! for `L = 2, M = 0` gives `(↑↓, 00, ↓↑)`.

use crate::{ScarError, ScarResult};

/// Largest chain that can be enumerated explicitly.
pub const MAX_ED_SITES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sector {
    Full,
    Magnetization(i64),
}

impl Sector {
    pub fn magnetization(&self) -> Option<i64> {
        match self {
            Sector::Full => None,
            Sector::Magnetization(m) => Some(*m),
        }
    }
}

/// Spin value of a base-3 digit.
#[inline]
pub fn spin_of_digit(d: u8) -> i64 {
    1 - d as i64
}

#[derive(Clone, Debug)]
pub struct SectorBasis {
    l: usize,
    sector: Sector,
    codes: Vec<u64>,
    pow3: Vec<u64>,
}

fn powers(l: usize) -> Vec<u64> {
    // pow3[j] is the weight of site j
    (0..l).map(|j| 3u64.pow((l - 1 - j) as u32)).collect()
}

impl SectorBasis {
    /// All configurations with total magnetization `m`, in lexicographic order.
    pub fn new(l: usize, m: i64) -> ScarResult<Self> {
        check_size(l)?;
        if m.unsigned_abs() as usize > l {
            return Err(ScarError::EmptySector { l, m });
        }
        let pow3 = powers(l);
        let mut codes = Vec::new();
        enumerate(l, 0, m, 0, &pow3, &mut codes);
        Ok(SectorBasis { l, sector: Sector::Magnetization(m), codes, pow3 })
    }

    /// The whole `3^L`-dimensional space; the index of a code is the code.
    pub fn full(l: usize) -> ScarResult<Self> {
        check_size(l)?;
        let pow3 = powers(l);
        let dim = 3u64.pow(l as u32);
        Ok(SectorBasis { l, sector: Sector::Full, codes: (0..dim).collect(), pow3 })
    }

    /// Target of an operator that leaves the physical range (`|M| > L`).
    pub(crate) fn empty(l: usize, m: i64) -> Self {
        SectorBasis { l, sector: Sector::Magnetization(m), codes: Vec::new(), pow3: powers(l) }
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn sector(&self) -> Sector {
        self.sector
    }

    pub fn dim(&self) -> usize {
        self.codes.len()
    }

    pub fn codes(&self) -> &[u64] {
        &self.codes
    }

    pub fn code(&self, idx: usize) -> u64 {
        self.codes[idx]
    }

    /// Weight `3^(L-1-site)` of `site` in a code.
    #[inline]
    pub fn site_weight(&self, site: usize) -> u64 {
        self.pow3[site]
    }

    #[inline]
    pub fn digit(&self, code: u64, site: usize) -> u8 {
        ((code / self.pow3[site]) % 3) as u8
    }

    #[inline]
    pub fn spin(&self, code: u64, site: usize) -> i64 {
        spin_of_digit(self.digit(code, site))
    }

    pub fn spins(&self, code: u64) -> Vec<i64> {
        (0..self.l).map(|j| self.spin(code, j)).collect()
    }

    pub fn index_of(&self, code: u64) -> Option<usize> {
        match self.sector {
            Sector::Full => ((code as usize) < self.codes.len()).then_some(code as usize),
            Sector::Magnetization(_) => self.codes.binary_search(&code).ok(),
        }
    }

    /// Code of a spin configuration `s_j ∈ {−1, 0, 1}`.
    pub fn encode(&self, spins: &[i64]) -> u64 {
        spins.iter().zip(&self.pow3).map(|(s, w)| (1 - s) as u64 * w).sum()
    }

    /// Whether both bases describe the same space (same `L` and sector).
    pub fn same_space(&self, other: &SectorBasis) -> bool {
        self.l == other.l && self.sector == other.sector
    }
}

fn check_size(l: usize) -> ScarResult<()> {
    if l == 0 || l > MAX_ED_SITES {
        return Err(ScarError::InvalidParams(format!(
            "explicit bases need 1 <= L <= {MAX_ED_SITES}, got {l}"
        )));
    }
    Ok(())
}

fn enumerate(l: usize, site: usize, remaining: i64, prefix: u64, pow3: &[u64], out: &mut Vec<u64>) {
    if site == l {
        if remaining == 0 {
            out.push(prefix);
        }
        return;
    }
    let left = (l - site - 1) as i64;
    for digit in 0..3u8 {
        let rest = remaining - spin_of_digit(digit);
        if rest.abs() <= left {
            enumerate(l, site + 1, rest, prefix + digit as u64 * pow3[site], pow3, out);
        }
    }
}

pub fn build_basis(l: usize, m: i64) -> ScarResult<SectorBasis> {
    SectorBasis::new(l, m)
}
