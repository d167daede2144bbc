use num_complex::Complex64;
use polaron_lab::froehlich::{Basis, FockConfig, Hamiltonian};
use polaron_lab::grid::{self, Grid, GridFunction};
use polaron_lab::{Potential, TestMeasure};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const N: usize = 65;

fn grid() -> Grid {
    Grid::new(8.0, N).unwrap()
}

/// Random values that vanish at both ends.
fn interior() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, N).prop_map(|mut v| {
        v[0] = 0.0;
        v[N - 1] = 0.0;
        v
    })
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn integration_is_linear(a in interior(), b in interior(), s in -3.0f64..3.0) {
        let g = grid();
        let fa = GridFunction::new(g, a.clone()).unwrap();
        let fb = GridFunction::new(g, b.clone()).unwrap();
        let mix = GridFunction::new(g, a.iter().zip(&b).map(|(x, y)| x + s * y).collect()).unwrap();
        let lhs = grid::integrate(&mix).unwrap();
        let rhs = grid::integrate(&fa).unwrap() + s * grid::integrate(&fb).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn normalize_is_idempotent(a in interior()) {
        prop_assume!(a.iter().any(|x| x.abs() > 1e-3));
        let u = grid::normalize(&GridFunction::new(grid(), a).unwrap()).unwrap();
        prop_assert!((u.norm2_sq() - 1.0).abs() < 1e-13);
        let again = grid::normalize(&u).unwrap();
        prop_assert!(again.sup_distance(&u) < 1e-14);
    }

    #[test]
    fn kinetic_energy_is_nonnegative(a in interior()) {
        let u = GridFunction::new(grid(), a).unwrap();
        prop_assert!(grid::kinetic_energy(&u).unwrap() >= -1e-12);
    }

    #[test]
    fn measure_mass_is_one(center in -2.0f64..2.0, width in 0.2f64..2.0) {
        let g = Grid::production();
        for w in [
            TestMeasure::dirac(center).unwrap(),
            TestMeasure::gaussian(center, width).unwrap(),
            TestMeasure::indicator(center, width).unwrap(),
        ] {
            let m: f64 = w.weights(&g).unwrap().iter().sum();
            prop_assert!((m - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn basis_size_is_stars_and_bars(slots in 0usize..7, cap in 0usize..5) {
        let b = Basis::new(slots, cap);
        let mut expect = 1usize;
        for i in 0..cap {
            expect = expect * (slots + cap - i) / (i + 1);
        }
        prop_assert_eq!(b.len(), expect);
    }

    #[test]
    fn hamiltonian_is_hermitian(
        alpha in 0.1f64..3.0,
        modes in 0usize..3,
        cap in 0usize..3,
        seed in any::<u64>(),
    ) {
        let cfg = FockConfig { electron_points: 9, modes, phonon_cap: cap, ..FockConfig::default() };
        let h = Hamiltonian::new(alpha, &Potential::sech2(2.0, 1.0).unwrap(), &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut next = || rng.random::<f64>() - 0.5;
        let y: Vec<Complex64> = (0..h.dimension()).map(|_| Complex64::new(next(), next())).collect();
        let z: Vec<Complex64> = (0..h.dimension()).map(|_| Complex64::new(next(), next())).collect();
        let d = (dot(&y, &h.apply_vec(&z)) - dot(&h.apply_vec(&y), &z)).norm();
        prop_assert!(d <= 1e-12 * dot(&y, &y).re.sqrt() * dot(&z, &z).re.sqrt());
    }
}
