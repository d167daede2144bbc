use polaron_lab::branch::{self, BranchSolver, LambdaGrid, Spacing};
use polaron_lab::pekar::{self, PekarOptions};
use polaron_lab::{Grid, Potential};

fn sech2() -> Potential {
    Potential::sech2(2.0, 1.0).unwrap()
}

#[test]
fn free_norms_follow_closed_form() {
    let g = Grid::production();
    let curve = branch::trace_branch(&Potential::Zero, &[-1.0, -0.5, -0.25, -0.1], &g).unwrap();
    for p in &curve.samples {
        let exact = 2.0 * (-p.lambda).sqrt();
        assert!(
            (p.norm2_sq - exact).abs() < 1e-5,
            "λ = {}: {} vs {exact}",
            p.lambda,
            p.norm2_sq
        );
        assert!(p.residual <= 1e-7);
    }
    assert!(curve.is_monotone());
}

#[test]
fn sech2_branch_is_monotone() {
    let g = Grid::production();
    let solver = BranchSolver::new(&sech2(), &g).unwrap();
    let lambdas = LambdaGrid {
        start: -3.0,
        end: -1.05,
        count: 20,
        spacing: Spacing::Log,
    }
    .values(solver.lambda0())
    .unwrap();
    let curve = solver.trace(&lambdas).unwrap();
    assert_eq!(curve.samples.len(), 20);
    assert!(curve.is_monotone());
    for p in &curve.samples {
        assert!(p.residual <= 1e-7, "λ = {}: residual {}", p.lambda, p.residual);
        let vals = p.u.values();
        assert!(vals[1..vals.len() - 1].iter().all(|&x| x > 0.0));
        let kappa = (-p.lambda).sqrt();
        let slope = p.tail_log_slope();
        assert!((slope + kappa).abs() <= 0.1 * kappa, "λ = {}: slope {slope}", p.lambda);
    }
}

#[test]
fn single_point_grid() {
    let g = Grid::production();
    let curve = branch::trace_branch(&sech2(), &[-2.0], &g).unwrap();
    assert_eq!(curve.samples.len(), 1);
    assert!(curve.is_monotone());
}

#[test]
fn norm_vanishes_at_bifurcation() {
    let g = Grid::production();
    let p = branch::solve_at_lambda(&sech2(), -1.0 - 1e-3, &g).unwrap();
    assert!(p.norm2_sq <= 0.05, "{}", p.norm2_sq);
}

#[test]
fn newton_from_several_heights_agrees() {
    let g = Grid::production();
    let solver = BranchSolver::new(&sech2(), &g).unwrap();
    for lambda in [-2.5, -1.5, -1.1] {
        let base = solver.solve(lambda).unwrap();
        for s0 in [0.1, 1.0, 5.0] {
            let p = solver.solve_from(lambda, s0).unwrap();
            assert!((p.height - base.height).abs() < 1e-10, "λ = {lambda}, s0 = {s0}");
            assert!(p.u.sup_distance(&base.u) < 1e-9);
        }
    }
}

#[test]
fn norm_match_reproduces_minimizer() {
    let g = Grid::production();
    for v in [sech2(), Potential::gaussian(1.0, 1.0).unwrap()] {
        let (lambda, u) = branch::norm_match(&v, &g).unwrap();
        assert!((u.norm2_sq() - 1.0).abs() < 1e-10);
        let r = pekar::minimize(&v, &g, &PekarOptions::default()).unwrap();
        assert!((lambda - r.lambda).abs() < 1e-6, "{v:?}: {lambda} vs {}", r.lambda);
        assert!(
            u.sup_distance(&r.minimizer) < 1e-5,
            "{v:?}: {}",
            u.sup_distance(&r.minimizer)
        );
    }
}

#[test]
fn free_norm_match_is_the_soliton() {
    let g = Grid::production();
    let (lambda, u) = branch::norm_match(&Potential::Zero, &g).unwrap();
    assert!((lambda + 0.25).abs() < 1e-6);
    assert!(u.sup_distance(&pekar::soliton(&g)) < 1e-5);
}

#[test]
fn rejects_unordered_grid() {
    let g = Grid::production();
    assert!(branch::trace_branch(&sech2(), &[-2.0, -3.0], &g).is_err());
}
