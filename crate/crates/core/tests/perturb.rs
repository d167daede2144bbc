use polaron_lab::branch;
use polaron_lab::pekar::PekarOptions;
use polaron_lab::perturb::{self, Perturbation};
use polaron_lab::{Grid, Potential, TestMeasure};

fn sech2() -> Potential {
    Potential::sech2(2.0, 1.0).unwrap()
}

fn setup(w: TestMeasure) -> Perturbation {
    Perturbation::new(&sech2(), &w, &Grid::production(), &PekarOptions::default()).unwrap()
}

const DELTAS: [f64; 8] = [-0.2, -0.1, -0.05, -0.025, 0.025, 0.05, 0.1, 0.2];

#[test]
fn cross_resolution_energy() {
    let w = TestMeasure::gaussian(0.0, 0.5).unwrap();
    let opts = PekarOptions::default();
    let coarse = perturb::perturbed_energy(&sech2(), &w, 0.1, &Grid::production(), &opts).unwrap();
    let fine = perturb::perturbed_energy(&sech2(), &w, 0.1, &Grid::new(40.0, 8193).unwrap(), &opts).unwrap();
    assert!(
        (coarse.energy - fine.energy).abs() < 1e-6,
        "{} vs {}",
        coarse.energy,
        fine.energy
    );
}

#[test]
fn brackets_are_ordered_and_shrink() {
    let p = setup(TestMeasure::gaussian(0.0, 0.5).unwrap());
    let rows = p.brackets(&DELTAS).unwrap();
    for b in &rows {
        assert!(b.is_ordered(), "{b:?}");
        if b.delta > 0.0 {
            // Variational upper bound e(V+δW) ≤ e(V) + δ∫W u_V².
            assert!(b.quotient * b.delta <= b.upper * b.delta + 1e-10);
        }
    }
    // Gaps shrink toward δ = 0 on each side.
    let gap = |d: f64| {
        let b = rows.iter().find(|b| b.delta == d).unwrap();
        (b.upper - b.lower).abs()
    };
    for side in [1.0, -1.0] {
        let g: Vec<f64> = [0.2, 0.1, 0.05, 0.025].iter().map(|d| gap(side * d)).collect();
        assert!(g.windows(2).all(|w| w[1] < w[0]), "{g:?}");
    }
}

#[test]
fn central_difference_matches_derivative() {
    let p = setup(TestMeasure::gaussian(0.0, 0.5).unwrap());
    let hf = p.hf_derivative();
    let mut errors = Vec::new();
    for d in [0.2, 0.1, 0.05, 0.025] {
        let up = p.energy(d).unwrap().energy;
        let dn = p.energy(-d).unwrap().energy;
        errors.push(((up - dn) / (2.0 * d) - hf).abs());
    }
    assert!(errors[3] < 5e-3, "{errors:?}");
    // At least first-order convergence in δ.
    for w in errors.windows(2) {
        assert!(w[1] <= 0.6 * w[0], "{errors:?}");
    }
}

#[test]
fn energy_is_concave_in_delta() {
    let p = setup(TestMeasure::gaussian(0.0, 0.5).unwrap());
    let ds = [-0.2, -0.1, -0.05, -0.025, 0.0, 0.025, 0.05, 0.1, 0.2];
    let es: Vec<f64> = p.energies(&ds).unwrap().iter().map(|r| r.energy).collect();
    let mut checked = 0;
    for i in 0..ds.len() {
        for j in i + 1..ds.len() {
            let mid = 0.5 * (ds[i] + ds[j]);
            if let Some(k) = ds.iter().position(|&d| d == mid) {
                assert!(es[k] >= 0.5 * (es[i] + es[j]) - 1e-10, "({}, {})", ds[i], ds[j]);
                checked += 1;
            }
        }
    }
    assert!(checked >= 8);
}

#[test]
fn minimizers_converge_to_unperturbed() {
    let p = setup(TestMeasure::gaussian(0.0, 0.5).unwrap());
    let base = &p.unperturbed().minimizer;
    let dist: Vec<f64> = [0.2, 0.1, 0.05, 0.025]
        .iter()
        .map(|&d| p.energy(d).unwrap().minimizer.sup_distance(base))
        .collect();
    assert!(dist.windows(2).all(|w| w[1] < w[0] + 1e-8), "{dist:?}");
}

#[test]
fn dirac_derivative_is_peak_density() {
    let g = Grid::production();
    let v = sech2();
    let hf = perturb::hf_derivative(&v, &TestMeasure::dirac(0.0).unwrap(), &g, &PekarOptions::default()).unwrap();
    let (_, u) = branch::norm_match(&v, &g).unwrap();
    let peak = u.values()[g.center()].powi(2);
    assert!((hf - peak).abs() < 1e-5, "{hf} vs {peak}");
}

#[test]
fn dirac_tolerates_negative_delta() {
    let p = setup(TestMeasure::dirac(0.0).unwrap());
    let r = p.energy(-0.5).unwrap();
    assert!(r.energy < p.unperturbed().energy);
    assert!(p.bracket(-0.1).unwrap().is_ordered());
}

#[test]
fn wide_gaussian_is_bounded_by_peak() {
    let g = Grid::new(200.0, 20001).unwrap();
    let p = Perturbation::new(
        &sech2(),
        &TestMeasure::gaussian(0.0, 20.0).unwrap(),
        &g,
        &PekarOptions::default(),
    )
    .unwrap();
    let peak = p
        .unperturbed()
        .minimizer
        .values()
        .iter()
        .fold(0.0f64, |m, x| m.max(x * x));
    assert!(p.hf_derivative() <= peak);
}

#[test]
fn wide_indicator_averages_mass() {
    let p = setup(TestMeasure::indicator(0.0, 20.0).unwrap());
    let hf = p.hf_derivative();
    assert!(((1.0 - 1e-8) / 40.0..=1.0 / 40.0 + 1e-15).contains(&hf), "{hf}");
}
