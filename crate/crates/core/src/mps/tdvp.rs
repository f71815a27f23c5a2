//! One- and two-site TDVP sweeps.

use super::mpo::{MpoOperator, MpoSite};
use super::state::MpsState;
use super::tensor::{gemm, gemm_ah, gemm_bt, gemm_cbt, qr_rm, rm, rm_mut, svd_truncate, SiteTensor, ONE, PHYS, ZERO};
use crate::dynamics::{expm_krylov, KrylovOptions};
use crate::{ScarError, ScarResult, C64};

/// Options of the local exponentials.
pub const LOCAL_KRYLOV: KrylovOptions = KrylovOptions { tol: 1e-12, max_dim: 30, max_substeps: 10_000 };

/// Environment `E[a][β′][β]` with bra index `β′` and ket index `β`.
#[derive(Clone, Debug)]
pub(crate) struct Env {
    w: usize,
    db: usize,
    dk: usize,
    data: Vec<C64>,
}

impl Env {
    fn unit() -> Self {
        Env { w: 1, db: 1, dk: 1, data: vec![ONE] }
    }

    fn block(&self, a: usize) -> &[C64] {
        let n = self.db * self.dk;
        &self.data[a * n..(a + 1) * n]
    }
}

/// Left environment of the next bond, returned flat `[wr][bra.dr][ket.dr]`.
pub(crate) fn update_left(env: &[C64], wl: usize, bra: &SiteTensor, ket: &SiteTensor, w: &MpoSite) -> Vec<C64> {
    let (dlb, dlk) = (bra.dl, ket.dl);
    let blk = dlb * dlk;
    debug_assert_eq!(env.len(), wl * blk);
    let tsz = dlb * PHYS * ket.dr;
    let mut t1: Vec<Option<Vec<C64>>> = vec![None; wl];
    let mut t2: Vec<Option<Vec<C64>>> = vec![None; w.wr];
    for (a, b, op) in &w.terms {
        let x = t1[*a].get_or_insert_with(|| {
            let mut x = vec![ZERO; tsz];
            gemm(rm_mut(&mut x, dlb, PHYS * ket.dr), false, rm(&env[a * blk..(a + 1) * blk], dlb, dlk), ket.as_right_matrix());
            x
        });
        let y = t2[*b].get_or_insert_with(|| vec![ZERO; tsz]);
        apply_op(y, x, op, dlb, ket.dr);
    }
    let nb = bra.dr * ket.dr;
    let mut out = vec![ZERO; w.wr * nb];
    for (b, y) in t2.iter().enumerate() {
        if let Some(y) = y {
            gemm_ah(rm_mut(&mut out[b * nb..(b + 1) * nb], bra.dr, ket.dr), false, bra.as_left_matrix(), rm(y, dlb * PHYS, ket.dr));
        }
    }
    out
}

/// Right environment of the previous bond, flat `[wl][bra.dl][ket.dl]`.
pub(crate) fn update_right(env: &[C64], bra: &SiteTensor, ket: &SiteTensor, w: &MpoSite) -> Vec<C64> {
    let (drb, drk) = (bra.dr, ket.dr);
    let blk = drb * drk;
    let tsz = ket.dl * PHYS * drb;
    let mut t1: Vec<Option<Vec<C64>>> = vec![None; w.wr];
    let mut t2: Vec<Option<Vec<C64>>> = vec![None; w.wl];
    for (a, b, op) in &w.terms {
        let x = t1[*b].get_or_insert_with(|| {
            let mut x = vec![ZERO; tsz];
            gemm_bt(rm_mut(&mut x, ket.dl * PHYS, drb), false, ket.as_left_matrix(), rm(&env[b * blk..(b + 1) * blk], drb, drk));
            x
        });
        let y = t2[*a].get_or_insert_with(|| vec![ZERO; tsz]);
        apply_op(y, x, op, ket.dl, drb);
    }
    let nb = bra.dl * ket.dl;
    let mut out = vec![ZERO; w.wl * nb];
    for (a, y) in t2.iter().enumerate() {
        if let Some(y) = y {
            gemm_cbt(rm_mut(&mut out[a * nb..(a + 1) * nb], bra.dl, ket.dl), false, bra.as_right_matrix(), rm(y, ket.dl, PHYS * drb));
        }
    }
    out
}

/// `y[α][s][β] += Σ_{s′} op[s][s′] x[α][s′][β]`.
fn apply_op(y: &mut [C64], x: &[C64], op: &[[f64; 3]; 3], dl: usize, dr: usize) {
    for l in 0..dl {
        for s in 0..PHYS {
            for sp in 0..PHYS {
                let c = op[s][sp];
                if c == 0.0 {
                    continue;
                }
                let src = (l * PHYS + sp) * dr;
                let dst = (l * PHYS + s) * dr;
                for r in 0..dr {
                    y[dst + r] += x[src + r] * c;
                }
            }
        }
    }
}

/// Terms of two neighbouring MPO sites merged into 9×9 blocks.
struct PairTerms {
    terms: Vec<(usize, usize, Vec<f64>)>,
}

impl PairTerms {
    fn new(w1: &MpoSite, w2: &MpoSite) -> Self {
        let mut terms: Vec<(usize, usize, Vec<f64>)> = Vec::new();
        for (a, b, o1) in &w1.terms {
            for (b2, c, o2) in &w2.terms {
                if b != b2 {
                    continue;
                }
                let idx = match terms.iter().position(|(ta, tc, _)| ta == a && tc == c) {
                    Some(k) => k,
                    None => {
                        terms.push((*a, *c, vec![0.0; 81]));
                        terms.len() - 1
                    }
                };
                let m = &mut terms[idx].2;
                for s1 in 0..3 {
                    for t1 in 0..3 {
                        if o1[s1][t1] == 0.0 {
                            continue;
                        }
                        for s2 in 0..3 {
                            for t2 in 0..3 {
                                m[(s1 * 3 + s2) * 9 + t1 * 3 + t2] += o1[s1][t1] * o2[s2][t2];
                            }
                        }
                    }
                }
            }
        }
        PairTerms { terms }
    }
}

/// `H_eff θ` for a block of `p` physical indices (`p = 3` or `9`) between
/// environments `l` and `r`.
fn apply_block(
    l: &Env,
    r: &Env,
    terms: &[(usize, usize, &[f64])],
    p: usize,
    theta: &[C64],
    out: &mut [C64],
) {
    let (dl, dr) = (l.dk, r.dk);
    let sz = dl * p * dr;
    let mut xs: Vec<Option<Vec<C64>>> = vec![None; l.w];
    let mut ys: Vec<Option<Vec<C64>>> = vec![None; r.w];
    for &(a, c, op) in terms {
        let x = xs[a].get_or_insert_with(|| {
            let mut x = vec![ZERO; sz];
            gemm(rm_mut(&mut x, dl, p * dr), false, rm(l.block(a), dl, dl), rm(theta, dl, p * dr));
            x
        });
        let y = ys[c].get_or_insert_with(|| vec![ZERO; sz]);
        for al in 0..dl {
            for s in 0..p {
                for sp in 0..p {
                    let v = op[s * p + sp];
                    if v == 0.0 {
                        continue;
                    }
                    let src = (al * p + sp) * dr;
                    let dst = (al * p + s) * dr;
                    for g in 0..dr {
                        y[dst + g] += x[src + g] * v;
                    }
                }
            }
        }
    }
    out.iter_mut().for_each(|v| *v = ZERO);
    for (c, y) in ys.iter().enumerate() {
        if let Some(y) = y {
            gemm_bt(rm_mut(out, dl * p, dr), true, rm(y, dl * p, dr), rm(r.block(c), dr, dr));
        }
    }
}

fn site_terms(w: &MpoSite) -> Vec<(usize, usize, Vec<f64>)> {
    w.terms.iter().map(|(a, b, op)| (*a, *b, op.iter().flatten().copied().collect())).collect()
}

fn local_exp(site: usize, theta: &[C64], t: f64, mut apply: impl FnMut(&[C64], &mut [C64])) -> ScarResult<Vec<C64>> {
    expm_krylov(&mut apply, theta, t, &LOCAL_KRYLOV).map_err(|e| ScarError::LocalKrylov { site, reason: e.to_string() })
}

/// Environments of a sweep.
struct Sweeper<'a> {
    mpo: &'a MpoOperator,
    lenv: Vec<Env>,
    renv: Vec<Env>,
}

impl<'a> Sweeper<'a> {
    /// Expects the center at site 0.
    fn new(mps: &MpsState, mpo: &'a MpoOperator) -> Self {
        let l = mps.len();
        let mut renv = vec![Env::unit(); l + 1];
        for j in (1..l).rev() {
            let a = &mps.tensors[j];
            let data = update_right(&renv[j + 1].data, a, a, &mpo.sites[j]);
            renv[j] = Env { w: mpo.sites[j].wl, db: a.dl, dk: a.dl, data };
        }
        Sweeper { mpo, lenv: vec![Env::unit(); l + 1], renv }
    }

    fn push_left(&mut self, mps: &MpsState, j: usize) {
        let a = &mps.tensors[j];
        let w = &self.mpo.sites[j];
        let data = update_left(&self.lenv[j].data, w.wl, a, a, w);
        self.lenv[j + 1] = Env { w: w.wr, db: a.dr, dk: a.dr, data };
    }

    fn push_right(&mut self, mps: &MpsState, j: usize) {
        let a = &mps.tensors[j];
        let w = &self.mpo.sites[j];
        let data = update_right(&self.renv[j + 1].data, a, a, w);
        self.renv[j] = Env { w: w.wl, db: a.dl, dk: a.dl, data };
    }

    fn evolve_site(&self, mps: &mut MpsState, j: usize, t: f64) -> ScarResult<()> {
        let owned = site_terms(&self.mpo.sites[j]);
        let terms: Vec<(usize, usize, &[f64])> = owned.iter().map(|(a, b, o)| (*a, *b, o.as_slice())).collect();
        let (l, r) = (&self.lenv[j], &self.renv[j + 1]);
        let a = &mps.tensors[j];
        let out = local_exp(j, &a.data, t, |x, y| apply_block(l, r, &terms, PHYS, x, y))?;
        mps.tensors[j].data = out;
        Ok(())
    }

    /// Evolves the bond matrix `c` between sites `j` and `j+1`.
    fn evolve_bond(&self, j: usize, c: &[C64], t: f64) -> ScarResult<Vec<C64>> {
        let (l, r) = (&self.lenv[j + 1], &self.renv[j + 1]);
        let (dl, dr) = (l.dk, r.dk);
        local_exp(j, c, t, |x, y| {
            let mut tmp = vec![ZERO; dl * dr];
            y.iter_mut().for_each(|v| *v = ZERO);
            for a in 0..l.w {
                gemm(rm_mut(&mut tmp, dl, dr), false, rm(l.block(a), dl, dl), rm(x, dl, dr));
                gemm_bt(rm_mut(y, dl, dr), true, rm(&tmp, dl, dr), rm(r.block(a), dr, dr));
            }
        })
    }

    /// Two-site update of sites `j, j+1`; returns the discarded weight.
    fn evolve_pair(&self, mps: &mut MpsState, j: usize, t: f64, eps: f64, max_bond: usize, right: bool) -> ScarResult<f64> {
        let (a, b) = (&mps.tensors[j], &mps.tensors[j + 1]);
        let (dl, dr) = (a.dl, b.dr);
        let mut theta = vec![ZERO; dl * PHYS * PHYS * dr];
        gemm(rm_mut(&mut theta, dl * PHYS, PHYS * dr), false, a.as_left_matrix(), b.as_right_matrix());
        let pair = PairTerms::new(&self.mpo.sites[j], &self.mpo.sites[j + 1]);
        let terms: Vec<(usize, usize, &[f64])> = pair.terms.iter().map(|(a, c, o)| (*a, *c, o.as_slice())).collect();
        let (l, r) = (&self.lenv[j], &self.renv[j + 2]);
        let theta = local_exp(j, &theta, t, |x, y| apply_block(l, r, &terms, PHYS * PHYS, x, y))?;
        let svd = svd_truncate(&theta, dl * PHYS, PHYS * dr, eps, max_bond)?;
        let k = svd.k;
        let mut u = svd.u;
        let mut vh = svd.vh;
        if right {
            for (kk, s) in svd.s.iter().enumerate() {
                vh[kk * PHYS * dr..(kk + 1) * PHYS * dr].iter_mut().for_each(|v| *v *= *s);
            }
        } else {
            for row in 0..dl * PHYS {
                for (kk, s) in svd.s.iter().enumerate() {
                    u[row * k + kk] *= *s;
                }
            }
        }
        mps.tensors[j] = SiteTensor { dl, dr: k, data: u };
        mps.tensors[j + 1] = SiteTensor { dl: k, dr, data: vh };
        Ok(svd.discarded)
    }
}

fn check(mps: &MpsState, mpo: &MpoOperator) -> ScarResult<()> {
    if mps.len() != mpo.len() {
        return Err(ScarError::DimensionMismatch { expected: mps.len(), found: mpo.len() });
    }
    Ok(())
}

/// One symmetric two-site TDVP sweep over `dt`, truncating each bond to the
/// smallest rank with relative discarded weight at most `eps`, capped at
/// `max_bond`.
pub fn tdvp2_step(mps: &MpsState, mpo: &MpoOperator, dt: f64, eps: f64, max_bond: usize) -> ScarResult<MpsState> {
    check(mps, mpo)?;
    let mut m = mps.clone();
    m.canonicalize(0);
    let l = m.len();
    let half = 0.5 * dt;
    let mut sw = Sweeper::new(&m, mpo);
    let mut discarded = 0.0;
    for j in 0..l - 1 {
        discarded += sw.evolve_pair(&mut m, j, half, eps, max_bond, true)?;
        sw.push_left(&m, j);
        if j + 2 < l {
            sw.evolve_site(&mut m, j + 1, -half)?;
        }
    }
    for j in (0..l - 1).rev() {
        discarded += sw.evolve_pair(&mut m, j, half, eps, max_bond, false)?;
        sw.push_right(&m, j + 1);
        if j > 0 {
            sw.evolve_site(&mut m, j, -half)?;
        }
    }
    m.center = Some(0);
    m.trunc_err += discarded;
    Ok(m)
}

/// One symmetric one-site TDVP sweep over `dt`; bond dimensions are fixed.
pub fn tdvp1_step(mps: &MpsState, mpo: &MpoOperator, dt: f64) -> ScarResult<MpsState> {
    check(mps, mpo)?;
    let mut m = mps.clone();
    m.canonicalize(0);
    let l = m.len();
    let half = 0.5 * dt;
    let mut sw = Sweeper::new(&m, mpo);
    for j in 0..l {
        sw.evolve_site(&mut m, j, half)?;
        if j + 1 < l {
            let a = &m.tensors[j];
            let (dl, dr) = (a.dl, a.dr);
            let (q, r, k) = qr_rm(&a.data, dl * PHYS, dr);
            debug_assert_eq!(k, dr);
            m.tensors[j] = SiteTensor { dl, dr: k, data: q };
            sw.push_left(&m, j);
            let c = sw.evolve_bond(j, &r, -half)?;
            let b = &m.tensors[j + 1];
            let mut nb = SiteTensor::zeros(k, b.dr);
            gemm(rm_mut(&mut nb.data, k, PHYS * b.dr), false, rm(&c, k, dr), b.as_right_matrix());
            m.tensors[j + 1] = nb;
        }
    }
    for j in (0..l).rev() {
        sw.evolve_site(&mut m, j, half)?;
        if j > 0 {
            m.center = Some(j);
            let dl = m.tensors[j].dl;
            let before = m.tensors[j - 1].clone();
            m.shift_left(j);
            // recover the bond matrix C from A_{j−1} = B C
            let c = bond_factor(&before, &m.tensors[j - 1], dl);
            m.tensors[j - 1] = before;
            sw.push_right(&m, j);
            let c = sw.evolve_bond(j - 1, &c, -half)?;
            let b = &m.tensors[j - 1];
            let mut nb = SiteTensor::zeros(b.dl, dl);
            gemm(rm_mut(&mut nb.data, b.dl * PHYS, dl), false, b.as_left_matrix(), rm(&c, dl, dl));
            m.tensors[j - 1] = nb;
        }
    }
    m.center = Some(0);
    Ok(m)
}

/// Solves `after = before · C` for the `d × d` bond matrix `C`, with `before`
/// a left isometry.
fn bond_factor(before: &SiteTensor, after: &SiteTensor, d: usize) -> Vec<C64> {
    let mut c = vec![ZERO; d * d];
    gemm_ah(rm_mut(&mut c, d, d), false, before.as_left_matrix(), after.as_left_matrix());
    c
}

#[cfg(test)]
mod tests {
    use super::super::mpo::build_mpo;
    use super::super::state::{apply_squared_raising, product_mps};
    use super::super::taylor::taylor_step;
    use super::*;
    use crate::dynamics::krylov_evolve;
    use crate::spin::{full_space_hamiltonian, ModelParams, StateVector};

    #[test]
    fn zero_step_is_identity() {
        let p = ModelParams::reference(6);
        let mpo = build_mpo(&p).unwrap();
        let m = apply_squared_raising(&product_mps(C64::new(0.0, -1.0), 6).unwrap(), 3).unwrap();
        let d0 = m.to_dense().unwrap();
        for out in [tdvp2_step(&m, &mpo, 0.0, 1e-12, 64).unwrap(), tdvp1_step(&m, &mpo, 0.0).unwrap()] {
            let d1 = out.to_dense().unwrap();
            for (a, b) in d0.iter().zip(&d1) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn environments_reproduce_energy() {
        let p = ModelParams::reference(5);
        let mpo = build_mpo(&p).unwrap();
        let m = apply_squared_raising(&product_mps(C64::new(0.2, -0.7), 5).unwrap(), 2).unwrap();
        let mut m = tdvp2_step(&m, &mpo, 0.3, 0.0, 64).unwrap();
        m.canonicalize(0);
        let sw = Sweeper::new(&m, &mpo);
        let mut hx = vec![ZERO; m.tensors[0].data.len()];
        let owned = site_terms(&mpo.sites[0]);
        let terms: Vec<(usize, usize, &[f64])> = owned.iter().map(|(a, b, o)| (*a, *b, o.as_slice())).collect();
        apply_block(&sw.lenv[0], &sw.renv[1], &terms, PHYS, &m.tensors[0].data, &mut hx);
        let e: C64 = m.tensors[0].data.iter().zip(&hx).map(|(a, b)| a.conj() * b).sum();
        let nn = m.norm().powi(2);
        assert!((e.re / nn - m.expectation(&mpo).unwrap()).abs() < 1e-11);
    }

    #[test]
    fn two_site_matches_exact_evolution_short_chain() {
        let p = ModelParams::reference(6);
        let mpo = build_mpo(&p).unwrap();
        let zeta = C64::new(0.0, -1.0);
        let mut m = apply_squared_raising(&product_mps(zeta, 6).unwrap(), 3).unwrap();
        let (basis, h) = full_space_hamiltonian(&p).unwrap();
        let mut v = StateVector::new(basis, m.to_dense().unwrap()).unwrap();
        for _ in 0..10 {
            m = taylor_step(&m, &mpo, 0.02, 1e-14, 1000).unwrap();
        }
        for _ in 0..8 {
            m = tdvp2_step(&m, &mpo, 0.1, 1e-14, 1000).unwrap();
            assert!(m.isometry_residual() < 1e-12);
        }
        v = krylov_evolve(&h, &v, 1.0, 1e-12).unwrap();
        let d = m.to_dense().unwrap();
        let ov: C64 = v.amps.iter().zip(&d).map(|(a, b)| a.conj() * b).sum();
        let fid = ov.norm_sqr() / (v.norm().powi(2) * m.norm().powi(2));
        assert!(1.0 - fid < 1e-6, "infidelity {}", 1.0 - fid);
    }
}
