use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::basis::{Sector, SectorBasis};
use crate::{ScarError, ScarResult, C64};

/// Rows above this count are distributed over the rayon pool. Each output row
/// is summed in a fixed order, so the result does not depend on scheduling.
const PARALLEL_ROWS: usize = 8192;

/// Single-site operators used throughout the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalKind {
    /// `(S⁺)²`, maps `|↓⟩ → 2|↑⟩`.
    SPlusSq,
    /// `(S⁻)²`, maps `|↑⟩ → 2|↓⟩`.
    SMinusSq,
    Sz,
    SzSq,
}

impl LocalKind {
    /// Change of total magnetization caused by the operator.
    pub fn shift(&self) -> i64 {
        match self {
            LocalKind::SPlusSq => 2,
            LocalKind::SMinusSq => -2,
            LocalKind::Sz | LocalKind::SzSq => 0,
        }
    }

    /// Matrix in the local basis `(↑, 0, ↓)`, row = output.
    pub fn matrix(&self) -> [[f64; 3]; 3] {
        match self {
            LocalKind::SPlusSq => [[0.0, 0.0, 2.0], [0.0; 3], [0.0; 3]],
            LocalKind::SMinusSq => [[0.0; 3], [0.0; 3], [2.0, 0.0, 0.0]],
            LocalKind::Sz => [[1.0, 0.0, 0.0], [0.0; 3], [0.0, 0.0, -1.0]],
            LocalKind::SzSq => [[1.0, 0.0, 0.0], [0.0; 3], [0.0, 0.0, 1.0]],
        }
    }

    pub fn adjoint(&self) -> LocalKind {
        match self {
            LocalKind::SPlusSq => LocalKind::SMinusSq,
            LocalKind::SMinusSq => LocalKind::SPlusSq,
            k => *k,
        }
    }

    /// Image digit and amplitude of a single-site basis digit, if nonzero.
    #[inline]
    pub fn act_on_digit(&self, digit: u8) -> Option<(u8, f64)> {
        match (self, digit) {
            (LocalKind::SPlusSq, 2) => Some((0, 2.0)),
            (LocalKind::SMinusSq, 0) => Some((2, 2.0)),
            (LocalKind::Sz, 0) => Some((0, 1.0)),
            (LocalKind::Sz, 2) => Some((2, -1.0)),
            (LocalKind::SzSq, 0) | (LocalKind::SzSq, 2) => Some((digit, 1.0)),
            _ => None,
        }
    }
}

/// Complex amplitudes over a product basis.
#[derive(Clone, Debug)]
pub struct StateVector {
    pub basis: Arc<SectorBasis>,
    pub amps: Vec<C64>,
}

impl StateVector {
    pub fn new(basis: Arc<SectorBasis>, amps: Vec<C64>) -> ScarResult<Self> {
        if amps.len() != basis.dim() {
            return Err(ScarError::DimensionMismatch { expected: basis.dim(), found: amps.len() });
        }
        Ok(StateVector { basis, amps })
    }

    pub fn zeros(basis: Arc<SectorBasis>) -> Self {
        let n = basis.dim();
        StateVector { basis, amps: vec![C64::new(0.0, 0.0); n] }
    }

    /// Single product configuration with unit amplitude.
    pub fn basis_state(basis: Arc<SectorBasis>, code: u64) -> ScarResult<Self> {
        let idx = basis
            .index_of(code)
            .ok_or_else(|| ScarError::OutOfRange(format!("code {code} not in basis")))?;
        let mut v = StateVector::zeros(basis);
        v.amps[idx] = C64::new(1.0, 0.0);
        Ok(v)
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amps)
    }

    pub fn normalize(&mut self) -> f64 {
        let n = self.norm();
        if n > 0.0 {
            let inv = 1.0 / n;
            self.amps.iter_mut().for_each(|a| *a *= inv);
        }
        n
    }

    pub fn scale(&mut self, s: C64) {
        self.amps.iter_mut().for_each(|a| *a *= s);
    }

    /// Re-expresses the vector in another basis of the same chain; amplitudes
    /// on configurations missing from `target` must vanish.
    pub fn embed(&self, target: &Arc<SectorBasis>) -> ScarResult<StateVector> {
        if target.l() != self.basis.l() {
            return Err(ScarError::DimensionMismatch { expected: target.l(), found: self.basis.l() });
        }
        let mut out = StateVector::zeros(target.clone());
        for (i, a) in self.amps.iter().enumerate() {
            let code = self.basis.code(i);
            match target.index_of(code) {
                Some(j) => out.amps[j] = *a,
                None if a.norm_sqr() == 0.0 => {}
                None => {
                    return Err(ScarError::SectorMismatch(format!(
                        "nonzero amplitude on code {code} outside target basis"
                    )))
                }
            }
        }
        Ok(out)
    }
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// `⟨u|v⟩`, antilinear in `u`.
pub fn dot(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// Compressed-row operator between two product bases.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    domain: Arc<SectorBasis>,
    codomain: Arc<SectorBasis>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
    hermitian: bool,
}

impl SparseOperator {
    /// Assembles from coordinate triplets `(row, col, value)`; duplicate
    /// positions are summed.
    pub fn from_triplets(
        domain: Arc<SectorBasis>,
        codomain: Arc<SectorBasis>,
        mut triplets: Vec<(usize, usize, C64)>,
        hermitian: bool,
    ) -> ScarResult<Self> {
        let (nrows, ncols) = (codomain.dim(), domain.dim());
        if hermitian && nrows != ncols {
            return Err(ScarError::DimensionMismatch { expected: nrows, found: ncols });
        }
        if let Some(&(r, c, _)) = triplets.iter().find(|(r, c, _)| *r >= nrows || *c >= ncols) {
            return Err(ScarError::OutOfRange(format!("entry ({r}, {c}) in {nrows}x{ncols} operator")));
        }
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(SparseOperator { domain, codomain, row_ptr, cols, vals, hermitian })
    }

    pub fn domain(&self) -> &Arc<SectorBasis> {
        &self.domain
    }

    pub fn codomain(&self) -> &Arc<SectorBasis> {
        &self.codomain
    }

    pub fn nrows(&self) -> usize {
        self.codomain.dim()
    }

    pub fn ncols(&self) -> usize {
        self.domain.dim()
    }

    /// Square operators only.
    pub fn dim(&self) -> usize {
        self.nrows()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// Coordinate-format view, row-major.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows()).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k]))
        })
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[range.clone()].binary_search(&c) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }

    /// Largest `|value(r,c) − conj(value(c,r))|`.
    pub fn hermiticity_defect(&self) -> f64 {
        if self.nrows() != self.ncols() {
            return f64::INFINITY;
        }
        self.entries().map(|(r, c, v)| (v - self.get(c, r).conj()).norm()).fold(0.0, f64::max)
    }

    /// Row-sum bound on the operator 2-norm (exact for the ∞-norm).
    pub fn norm_bound(&self) -> f64 {
        (0..self.nrows())
            .map(|r| self.row(r).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C64 {
        (0..self.nrows().min(self.ncols())).map(|r| self.get(r, r)).sum()
    }

    /// `out = A v` on raw slices.
    pub fn matvec_into(&self, v: &[C64], out: &mut [C64]) {
        debug_assert_eq!(v.len(), self.ncols());
        debug_assert_eq!(out.len(), self.nrows());
        let row = |r: usize| -> C64 {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * v[self.cols[k]];
            }
            acc
        };
        if out.len() >= PARALLEL_ROWS {
            out.par_iter_mut().enumerate().for_each(|(r, o)| *o = row(r));
        } else {
            out.iter_mut().enumerate().for_each(|(r, o)| *o = row(r));
        }
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.nrows()];
        self.matvec_into(v, &mut out);
        out
    }

    pub fn apply(&self, v: &StateVector) -> ScarResult<StateVector> {
        if !v.basis.same_space(&self.domain) || v.dim() != self.ncols() {
            return Err(ScarError::DimensionMismatch { expected: self.ncols(), found: v.dim() });
        }
        Ok(StateVector { basis: self.codomain.clone(), amps: self.matvec(&v.amps) })
    }

    /// Dense copy, row-major, for small operators.
    pub fn to_dense(&self) -> Vec<Vec<C64>> {
        let mut m = vec![vec![C64::new(0.0, 0.0); self.ncols()]; self.nrows()];
        for (r, c, v) in self.entries() {
            m[r][c] = v;
        }
        m
    }

    /// Identity on a basis.
    pub fn identity(basis: Arc<SectorBasis>) -> Self {
        let n = basis.dim();
        let trips = (0..n).map(|i| (i, i, C64::new(1.0, 0.0))).collect();
        SparseOperator::from_triplets(basis.clone(), basis, trips, true)
            .expect("identity assembly cannot fail")
    }
}

pub fn apply(op: &SparseOperator, v: &StateVector) -> ScarResult<StateVector> {
    op.apply(v)
}

pub fn inner(u: &StateVector, v: &StateVector) -> ScarResult<C64> {
    if !u.basis.same_space(&v.basis) || u.dim() != v.dim() {
        return Err(ScarError::DimensionMismatch { expected: u.dim(), found: v.dim() });
    }
    Ok(dot(&u.amps, &v.amps))
}

pub fn expectation(op: &SparseOperator, v: &StateVector) -> ScarResult<C64> {
    let w = op.apply(v)?;
    if !w.basis.same_space(&v.basis) {
        return Err(ScarError::SectorMismatch("expectation of a sector-changing operator".into()));
    }
    inner(v, &w)
}

fn check_site(basis: &SectorBasis, site: usize) -> ScarResult<()> {
    if site >= basis.l() {
        return Err(ScarError::OutOfRange(format!("site {site} on a chain of {} sites", basis.l())));
    }
    Ok(())
}

/// Matrix of a single-site operator from `from` to `to`.
pub fn local_operator(
    kind: LocalKind,
    site: usize,
    from: &Arc<SectorBasis>,
    to: &Arc<SectorBasis>,
) -> ScarResult<SparseOperator> {
    check_site(from, site)?;
    if from.l() != to.l() {
        return Err(ScarError::SectorMismatch(format!("L = {} vs L = {}", from.l(), to.l())));
    }
    match (from.sector(), to.sector()) {
        (Sector::Full, Sector::Full) => {}
        (Sector::Magnetization(a), Sector::Magnetization(b)) if b == a + kind.shift() => {}
        (a, b) => {
            return Err(ScarError::SectorMismatch(format!(
                "{kind:?} cannot map {a:?} to {b:?}"
            )))
        }
    }
    let w = from.site_weight(site) as i64;
    let mut trips = Vec::new();
    for (col, &code) in from.codes().iter().enumerate() {
        let d = from.digit(code, site);
        if let Some((nd, amp)) = kind.act_on_digit(d) {
            let new_code = (code as i64 + (nd as i64 - d as i64) * w) as u64;
            let row = to
                .index_of(new_code)
                .ok_or_else(|| ScarError::SectorMismatch(format!("image code {new_code} missing")))?;
            trips.push((row, col, C64::new(amp, 0.0)));
        }
    }
    let herm = matches!(kind, LocalKind::Sz | LocalKind::SzSq) && from.same_space(to);
    SparseOperator::from_triplets(from.clone(), to.clone(), trips, herm)
}

/// Applies a single-site operator directly, returning a vector in `to`.
pub fn apply_local(
    kind: LocalKind,
    site: usize,
    v: &StateVector,
    to: &Arc<SectorBasis>,
) -> ScarResult<StateVector> {
    check_site(&v.basis, site)?;
    let from = &v.basis;
    let w = from.site_weight(site) as i64;
    let mut out = StateVector::zeros(to.clone());
    for (i, a) in v.amps.iter().enumerate() {
        if a.norm_sqr() == 0.0 {
            continue;
        }
        let code = from.code(i);
        let d = from.digit(code, site);
        if let Some((nd, amp)) = kind.act_on_digit(d) {
            let new_code = (code as i64 + (nd as i64 - d as i64) * w) as u64;
            let j = to.index_of(new_code).ok_or_else(|| {
                ScarError::SectorMismatch(format!("{kind:?} image outside target basis"))
            })?;
            out.amps[j] += a * amp;
        }
    }
    Ok(out)
}

/// Target basis of `kind` acting on `basis`, built on demand.
pub fn image_basis(kind: LocalKind, basis: &Arc<SectorBasis>) -> ScarResult<Arc<SectorBasis>> {
    match basis.sector() {
        Sector::Full => Ok(basis.clone()),
        Sector::Magnetization(_) if kind.shift() == 0 => Ok(basis.clone()),
        Sector::Magnetization(m) => {
            let target = m + kind.shift();
            if target.unsigned_abs() as usize > basis.l() {
                Ok(Arc::new(SectorBasis::empty(basis.l(), target)))
            } else {
                Ok(Arc::new(SectorBasis::new(basis.l(), target)?))
            }
        }
    }
}

/// `Σ_j Sᶻ_j` on a basis (diagonal).
pub fn total_sz(basis: &Arc<SectorBasis>) -> SparseOperator {
    let trips = basis
        .codes()
        .iter()
        .enumerate()
        .map(|(i, &c)| (i, i, C64::new(basis.spins(c).iter().sum::<i64>() as f64, 0.0)))
        .collect();
    SparseOperator::from_triplets(basis.clone(), basis.clone(), trips, true)
        .expect("diagonal assembly cannot fail")
}
