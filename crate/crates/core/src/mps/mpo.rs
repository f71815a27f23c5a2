//! Finite-state-machine MPO for the open chain.

use serde::{Deserialize, Serialize};

use super::tensor::PHYS;
use crate::spin::{Boundary, ModelParams};
use crate::{ScarError, ScarResult, C64};

pub type LocalMatrix = [[f64; 3]; 3];

const S2: f64 = std::f64::consts::SQRT_2;
const ID: LocalMatrix = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
const SP: LocalMatrix = [[0.0, S2, 0.0], [0.0, 0.0, S2], [0.0, 0.0, 0.0]];
const SM: LocalMatrix = [[0.0, 0.0, 0.0], [S2, 0.0, 0.0], [0.0, S2, 0.0]];

fn scaled(m: &LocalMatrix, c: f64) -> LocalMatrix {
    let mut out = *m;
    out.iter_mut().flatten().for_each(|x| *x *= c);
    out
}

/// One MPO site: sparse list of `(a, b, op)` with `W[a, b] = op`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MpoSite {
    pub wl: usize,
    pub wr: usize,
    pub terms: Vec<(usize, usize, LocalMatrix)>,
}

impl MpoSite {
    pub fn entry(&self, a: usize, b: usize) -> LocalMatrix {
        let mut out = [[0.0; 3]; 3];
        for (ta, tb, op) in &self.terms {
            if *ta == a && *tb == b {
                for s in 0..3 {
                    for sp in 0..3 {
                        out[s][sp] += op[s][sp];
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MpoOperator {
    pub sites: Vec<MpoSite>,
    /// Bond dimension in the bulk.
    pub bond_dim: usize,
}

/// Channels of the state machine.
struct Channels {
    init: usize,
    fin: usize,
    plus: Vec<usize>,
    minus: Vec<usize>,
}

impl MpoOperator {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Dense matrix over the full `3^L` product basis, ordered like
    /// `SectorBasis::full`.
    pub fn to_dense(&self) -> ScarResult<Vec<Vec<C64>>> {
        let l = self.len();
        if l > 8 {
            return Err(ScarError::DenseCapExceeded { dim: 3usize.pow(l as u32), cap: 3usize.pow(8) });
        }
        // rows: (code_out, code_in, channel) accumulated site by site
        let mut acc: Vec<Vec<Vec<f64>>> = vec![vec![vec![1.0]]];
        let mut dim = 1usize;
        for site in &self.sites {
            let nd = dim * PHYS;
            let mut next = vec![vec![vec![0.0; site.wr]; nd]; nd];
            for (r, row) in acc.iter().enumerate() {
                for (c, chans) in row.iter().enumerate() {
                    for (a, b, op) in &site.terms {
                        let v = chans[*a];
                        if v == 0.0 {
                            continue;
                        }
                        for s in 0..PHYS {
                            for sp in 0..PHYS {
                                if op[s][sp] != 0.0 {
                                    next[r * PHYS + s][c * PHYS + sp][*b] += v * op[s][sp];
                                }
                            }
                        }
                    }
                }
            }
            acc = next;
            dim = nd;
        }
        Ok(acc.into_iter().map(|row| row.into_iter().map(|c| C64::new(c[0], 0.0)).collect()).collect())
    }
}

/// MPO of the full Hamiltonian.
pub fn build_mpo(params: &ModelParams) -> ScarResult<MpoOperator> {
    build_mpo_with(params, params.h)
}

/// MPO of `H₀ = H − h Σ(Sᶻ+1)`, which annihilates the tower.
pub fn build_mpo_h0(params: &ModelParams) -> ScarResult<MpoOperator> {
    build_mpo_with(params, 0.0)
}

fn build_mpo_with(params: &ModelParams, h: f64) -> ScarResult<MpoOperator> {
    if params.boundary != Boundary::Open {
        return Err(ScarError::Unsupported("MPO evolution requires open boundaries".into()));
    }
    params.validate()?;
    let l = params.l;
    let long = params.j3 != 0.0;
    let ch = if long {
        Channels { init: 0, fin: 7, plus: vec![1, 2, 3], minus: vec![4, 5, 6] }
    } else {
        Channels { init: 0, fin: 3, plus: vec![1], minus: vec![2] }
    };
    let w = ch.fin + 1;
    // h(Sᶻ+1) + D((Sᶻ)²−1) on (↑, 0, ↓)
    let onsite: LocalMatrix = [[2.0 * h, 0.0, 0.0], [0.0, h - params.d, 0.0], [0.0, 0.0, 0.0]];
    let mut bulk: Vec<(usize, usize, LocalMatrix)> = vec![(ch.init, ch.init, ID), (ch.fin, ch.fin, ID), (ch.init, ch.fin, onsite)];
    if params.j != 0.0 {
        bulk.push((ch.init, ch.plus[0], SP));
        bulk.push((ch.plus[0], ch.fin, scaled(&SM, 0.5 * params.j)));
        bulk.push((ch.init, ch.minus[0], SM));
        bulk.push((ch.minus[0], ch.fin, scaled(&SP, 0.5 * params.j)));
    }
    if long {
        if params.j == 0.0 {
            bulk.push((ch.init, ch.plus[0], SP));
            bulk.push((ch.init, ch.minus[0], SM));
        }
        for k in 0..2 {
            bulk.push((ch.plus[k], ch.plus[k + 1], ID));
            bulk.push((ch.minus[k], ch.minus[k + 1], ID));
        }
        bulk.push((ch.plus[2], ch.fin, scaled(&SM, 0.5 * params.j3)));
        bulk.push((ch.minus[2], ch.fin, scaled(&SP, 0.5 * params.j3)));
    }
    let mut sites = Vec::with_capacity(l);
    for j in 0..l {
        let first = j == 0;
        let last = j + 1 == l;
        let terms = bulk
            .iter()
            .filter(|(a, b, _)| (!first || *a == ch.init) && (!last || *b == ch.fin))
            .map(|&(a, b, op)| (if first { 0 } else { a }, if last { 0 } else { b }, op))
            .collect();
        sites.push(MpoSite { wl: if first { 1 } else { w }, wr: if last { 1 } else { w }, terms });
    }
    Ok(MpoOperator { sites, bond_dim: w })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{build_hamiltonian, full_spectrum, SectorBasis};
    use std::sync::Arc;

    fn check_dense(p: &ModelParams) {
        let mpo = build_mpo(p).unwrap();
        let dense = mpo.to_dense().unwrap();
        let basis = Arc::new(SectorBasis::full(p.l).unwrap());
        let h = build_hamiltonian(p, &basis).unwrap();
        let n = basis.dim();
        for r in 0..n {
            for c in 0..n {
                assert!((dense[r][c] - h.get(r, c)).norm() < 1e-12, "entry ({r},{c})");
            }
        }
    }

    #[test]
    fn dense_contraction_matches_sparse_hamiltonian() {
        check_dense(&ModelParams::reference(6));
        check_dense(&ModelParams::reference(4));
        check_dense(&ModelParams::new(1.3, -0.2, 0.7, 0.0, 5, Boundary::Open).unwrap());
        check_dense(&ModelParams::new(0.0, 0.4, 0.0, 0.9, 5, Boundary::Open).unwrap());
    }

    #[test]
    fn bond_dimensions() {
        let nn = ModelParams::new(1.0, 0.5, 0.1, 0.0, 6, Boundary::Open).unwrap();
        assert_eq!(build_mpo(&nn).unwrap().bond_dim, 4);
        assert!(build_mpo(&ModelParams::reference(8)).unwrap().bond_dim <= 12);
        let per = ModelParams { boundary: Boundary::Periodic, ..ModelParams::reference(6) };
        assert!(matches!(build_mpo(&per), Err(ScarError::Unsupported(_))));
    }

    #[test]
    fn contracted_spectrum_matches() {
        let p = ModelParams::reference(6);
        let dense = build_mpo(&p).unwrap().to_dense().unwrap();
        let n = dense.len();
        let m = faer::Mat::<f64>::from_fn(n, n, |r, c| dense[r][c].re);
        let (mut ev, _) = crate::spin::spectrum::symmetric_eigen(m.as_ref()).unwrap();
        ev.sort_by(f64::total_cmp);
        let basis = Arc::new(SectorBasis::full(6).unwrap());
        let mut ed = full_spectrum(&p, &basis).unwrap().eigenvalues;
        ed.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(&ed) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
