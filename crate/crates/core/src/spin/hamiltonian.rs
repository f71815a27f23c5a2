use std::sync::Arc;

use super::basis::{spin_of_digit, SectorBasis};
use super::operator::SparseOperator;
use super::params::ModelParams;
use crate::{ScarError, ScarResult, C64};

/// Hamiltonian restricted to `basis`, with the `+1` and `−1` constant shifts
/// of the field and anisotropy terms kept, so `E(⇓) = 0`.
///
/// The XY couplings are written as `½(S⁺S⁻ + S⁻S⁺)`; each allowed hop has
/// amplitude `c/2 · √2 · √2 = c`.
pub fn build_hamiltonian(params: &ModelParams, basis: &Arc<SectorBasis>) -> ScarResult<SparseOperator> {
    params.validate()?;
    if basis.l() != params.l {
        return Err(ScarError::DimensionMismatch { expected: params.l, found: basis.l() });
    }
    let bonds = params.bonds();
    let l = params.l;
    let mut trips = Vec::with_capacity(basis.dim() * (1 + 2 * bonds.len()));
    let mut digits = vec![0u8; l];
    for (col, &code) in basis.codes().iter().enumerate() {
        for (j, d) in digits.iter_mut().enumerate() {
            *d = basis.digit(code, j);
        }
        let diag: f64 = digits
            .iter()
            .map(|&d| {
                let s = spin_of_digit(d) as f64;
                params.h * (s + 1.0) + params.d * (s * s - 1.0)
            })
            .sum();
        if diag != 0.0 {
            trips.push((col, col, C64::new(diag, 0.0)));
        }
        for &(i, k, c) in &bonds {
            let (di, dk) = (digits[i] as i64, digits[k] as i64);
            let (wi, wk) = (basis.site_weight(i) as i64, basis.site_weight(k) as i64);
            // S⁺_i S⁻_k: digit_i decreases, digit_k increases
            if di > 0 && dk < 2 {
                let new = (code as i64 - wi + wk) as u64;
                push_hop(basis, &mut trips, new, col, c)?;
            }
            // S⁻_i S⁺_k
            if di < 2 && dk > 0 {
                let new = (code as i64 + wi - wk) as u64;
                push_hop(basis, &mut trips, new, col, c)?;
            }
        }
    }
    SparseOperator::from_triplets(basis.clone(), basis.clone(), trips, true)
}

/// Hamiltonian on the whole `3^L` space together with its basis.
pub fn full_space_hamiltonian(params: &ModelParams) -> ScarResult<(Arc<SectorBasis>, SparseOperator)> {
    let basis = Arc::new(SectorBasis::full(params.l)?);
    let h = build_hamiltonian(params, &basis)?;
    Ok((basis, h))
}

fn push_hop(
    basis: &SectorBasis,
    trips: &mut Vec<(usize, usize, C64)>,
    code: u64,
    col: usize,
    c: f64,
) -> ScarResult<()> {
    let row = basis
        .index_of(code)
        .ok_or_else(|| ScarError::SectorMismatch("hopping left the sector".into()))?;
    trips.push((row, col, C64::new(c, 0.0)));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::operator::{dot, total_sz, StateVector};
    use crate::spin::params::Boundary;
    use proptest::prelude::*;

    fn xy_only(l: usize, boundary: Boundary) -> ModelParams {
        ModelParams::new(1.0, 0.0, 0.0, 0.0, l, boundary).unwrap()
    }

    #[test]
    fn two_site_xy_block() {
        let b = Arc::new(SectorBasis::new(2, 0).unwrap());
        let h = build_hamiltonian(&xy_only(2, Boundary::Open), &b).unwrap();
        let dense = h.to_dense();
        let expect = [[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]];
        for r in 0..3 {
            for c in 0..3 {
                assert_eq!(dense[r][c], C64::new(expect[r][c], 0.0));
            }
        }
    }

    #[test]
    fn polarized_down_state_has_zero_energy() {
        for params in [ModelParams::reference(6), ModelParams::new(0.3, -1.2, 2.0, 0.7, 5, Boundary::Periodic).unwrap()] {
            let b = Arc::new(SectorBasis::new(params.l, -(params.l as i64)).unwrap());
            assert_eq!(b.dim(), 1);
            let h = build_hamiltonian(&params, &b).unwrap();
            assert_eq!(h.nnz(), 0);
        }
    }

    #[test]
    fn reference_sector_is_hermitian() {
        let b = Arc::new(SectorBasis::new(10, 0).unwrap());
        let h = build_hamiltonian(&ModelParams::reference(10), &b).unwrap();
        assert_eq!(h.dim(), 8953);
        assert_eq!(h.hermiticity_defect(), 0.0);
    }

    #[test]
    fn wrong_chain_length_rejected() {
        let b = Arc::new(SectorBasis::new(5, 0).unwrap());
        assert!(matches!(
            build_hamiltonian(&ModelParams::reference(6), &b),
            Err(ScarError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn periodic_xy_is_translation_invariant() {
        let l = 5;
        let params = ModelParams::new(0.8, 0.3, 0.4, 0.0, l, Boundary::Periodic).unwrap();
        let b = Arc::new(SectorBasis::full(l).unwrap());
        let h = build_hamiltonian(&params, &b).unwrap();
        let shift = |code: u64| {
            let s = b.spins(code);
            let rotated: Vec<i64> = (0..l).map(|j| s[(j + l - 1) % l]).collect();
            b.encode(&rotated)
        };
        for (r, c, v) in h.entries() {
            let (r2, c2) = (shift(b.code(r)) as usize, shift(b.code(c)) as usize);
            assert!((h.get(r2, c2) - v).norm() < 1e-14);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn hamiltonian_commutes_with_total_sz(
            j in -2.0..2.0f64, h in -2.0..2.0f64, d in -2.0..2.0f64, j3 in -2.0..2.0f64,
            l in 4usize..7, periodic in any::<bool>(), seed in 0u64..1000,
        ) {
            let boundary = if periodic { Boundary::Periodic } else { Boundary::Open };
            let params = ModelParams::new(j, h, d, j3, l, boundary).unwrap();
            let b = Arc::new(SectorBasis::full(l).unwrap());
            let ham = build_hamiltonian(&params, &b).unwrap();
            prop_assert!(ham.hermiticity_defect() < 1e-15);
            let sz = total_sz(&b);
            let amps = (0..b.dim())
                .map(|i| {
                    let x = ((i as u64 + 1) * (seed + 7)) as f64;
                    C64::new((x * 0.37).sin(), (x * 0.11).cos())
                })
                .collect();
            let v = StateVector::new(b.clone(), amps).unwrap();
            let a = ham.matvec(&sz.matvec(&v.amps));
            let c = sz.matvec(&ham.matvec(&v.amps));
            let diff: Vec<C64> = a.iter().zip(&c).map(|(x, y)| x - y).collect();
            prop_assert!(dot(&diff, &diff).re.sqrt() < 1e-12);
        }

        #[test]
        fn sector_hamiltonian_is_closed(l in 4usize..7, m in -3i64..4) {
            let params = ModelParams::reference(l);
            prop_assume!(m.unsigned_abs() as usize <= l);
            let b = Arc::new(SectorBasis::new(l, m).unwrap());
            // assembly would fail if any hop left the sector
            let h = build_hamiltonian(&params, &b).unwrap();
            prop_assert_eq!(h.dim(), b.dim());
        }
    }
}
