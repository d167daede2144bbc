mod common;

use polaron_lab::grid::{self, Grid};
use polaron_lab::pekar::{self, PekarOptions};
use polaron_lab::Potential;

fn solve(v: &Potential, g: &Grid) -> pekar::PekarResult {
    pekar::minimize(v, g, &PekarOptions::default()).unwrap_or_else(|e| panic!("{v:?}: {e}"))
}

#[test]
fn free_minimizer_is_the_soliton() {
    let g = Grid::production();
    let t = std::time::Instant::now();
    let r = pekar::minimize(&Potential::Zero, &g, &PekarOptions::default()).unwrap_or_else(|e| panic!("{e}"));
    assert!(t.elapsed().as_secs_f64() < 10.0);
    assert!((r.energy + 1.0 / 12.0).abs() < 1e-6);
    assert!((r.lambda + 0.25).abs() < 1e-6);
    let sol = pekar::soliton(&g);
    assert!(r.minimizer.recenter().sup_distance(&sol) < 1e-4);
    assert!(r.el_residual <= 1e-8);
}

#[test]
fn sech2_matches_imaginary_time_oracle() {
    let v = Potential::sech2(2.0, 1.0).unwrap();
    let r = solve(&v, &Grid::production());
    let oracle = common::imaginary_time_energy(&v, 40.0, 8193);
    assert!((r.energy - oracle).abs() < 1e-6);
}

#[test]
fn result_invariants() {
    let g = Grid::production();
    for v in [
        Potential::sech2(2.0, 1.0).unwrap(),
        Potential::gaussian(1.0, 1.0).unwrap(),
        Potential::lorentzian(0.5, 0.5).unwrap(),
    ] {
        let r = solve(&v, &g);
        let u = &r.minimizer;
        assert!((u.norm2_sq() - 1.0).abs() < 1e-12);
        let vals = u.values();
        for i in 1..vals.len() - 1 {
            // Tail values below the solver's noise floor may carry either sign.
            assert!(vals[i] > 0.0 || vals[i].abs() <= 1e-12, "{v:?}: node {i}: {}", vals[i]);
            assert!((vals[i] - vals[g.mirror(i)]).abs() < 1e-10);
        }
        let q = grid::integrate(&u.map(|x| x.powi(4))).unwrap();
        assert!((r.lambda - (r.energy - q)).abs() < 1e-10);
        assert!(r.energy < 0.0);
        assert!(r.el_residual <= 1e-8);
        assert!(r.energy < -1.0 / 12.0);
        let l0 = polaron_lab::branch::lambda0(&v, &g).unwrap();
        assert!(r.lambda < l0);
        assert!((pekar::lagrange_multiplier(u, &v).unwrap() - r.lambda).abs() < 1e-8);
        assert!((pekar::eval_pekar(u, &v).unwrap() - r.energy).abs() < 1e-12);
    }
}

#[test]
fn dominates_candidate_battery() {
    let g = Grid::production();
    for v in [
        Potential::Zero,
        Potential::sech2(2.0, 1.0).unwrap(),
        Potential::gaussian(1.0, 1.0).unwrap(),
    ] {
        let r = solve(&v, &g);
        for c in common::candidate_battery(&g) {
            let e = pekar::eval_pekar(&c, &v).unwrap();
            assert!(r.energy <= e + 1e-10, "{v:?}: {} > {e}", r.energy);
        }
    }
}

#[test]
fn energy_decreases_with_amplitude() {
    let g = Grid::production();
    let mut last = f64::INFINITY;
    for a in [0.0, 1.0, 2.0, 4.0] {
        let v = Potential::sech2(a, 1.0).unwrap();
        let e = solve(&v, &g).energy;
        assert!(e < last, "amplitude {a}: {e} !< {last}");
        last = e;
    }
}

#[test]
fn iteration_cap_returns_best_iterate() {
    let opts = PekarOptions {
        max_iter: 3,
        ..PekarOptions::default()
    };
    let err = pekar::minimize(&Potential::sech2(2.0, 1.0).unwrap(), &Grid::production(), &opts).unwrap_err();
    match err {
        polaron_lab::Error::IterationLimit { best } => assert!(best.el_residual > 1e-8),
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn rejects_invalid_potential() {
    let g = Grid::new(5.0, 101).unwrap();
    let err = pekar::minimize(&Potential::lorentzian(1.0, 10.0).unwrap(), &g, &PekarOptions::default()).unwrap_err();
    assert_eq!(err.exit_code(), 1);
}
