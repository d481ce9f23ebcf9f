//! Cross-checks between the solver, the Taylor expansion, the shape
//! derivative and the finite-difference route.

use wavedno::expansion::{dg_ii, expand, g0_i, taylor_gdno};
use wavedno::geometry::make_trivial_diffeo;
use wavedno::oracle::protocols::{fd_convergence, SlopeStudy};
use wavedno::oracle::verify_divcurl;
use wavedno::solver::{g_ii_trace, gdno, make_divfree_vorticity, solve_vector_potential, SolverOpts, SurfaceState, VorticityData};
use wavedno::spectral::{Field2, Field3, HGrid, VGrid, VectorField3};

fn opts() -> SolverOpts {
    SolverOpts { tol_fp: 1e-13, max_iter: 400, ..Default::default() }
}

#[test]
fn taylor_sum_converges_to_solver() {
    let hg = HGrid::square(16);
    let vg = VGrid::new(1.0, 20);
    let phi = Field2::from_fn(&hg, |x, y| x.sin() + 0.5 * (x + y).cos());
    let om = VectorField3::new(Field3::from_fn(&hg, &vg, |_, y, _| y.cos()), Field3::from_fn(&hg, &vg, |x, _, _| x.sin()), Field3::zeros(&hg, &vg));
    let mut errs = Vec::new();
    for a in [0.08, 0.04, 0.02] {
        let eta = Field2::from_fn(&hg, |x, y| a * (x.cos() + 0.5 * (2.0 * y).sin()));
        let d = make_trivial_diffeo(&eta, &vg, 0.5).unwrap();
        let st = SurfaceState::new(eta, phi.clone(), 0.5);
        let od = VorticityData { omega: om.clone() };
        let sol = gdno(&st, &od, &d, &opts()).unwrap();
        let t = taylor_gdno(&st, &od, &d, 2).unwrap();
        errs.push((a, (&sol.g - &t).norm_l2()));
    }
    let s = SlopeStudy::fit(errs).unwrap();
    assert!(s.within(3.0, 0.3), "{s:?}");
}

#[test]
fn expansion_orders_are_homogeneous() {
    let hg = HGrid::square(16);
    let vg = VGrid::new(1.0, 16);
    let eta = Field2::from_fn(&hg, |x, _| 0.05 * x.cos());
    let phi = Field2::from_fn(&hg, |_, y| y.sin());
    let d = make_trivial_diffeo(&eta, &vg, 0.5).unwrap();
    let st = SurfaceState::new(eta.clone(), phi.clone(), 0.5);
    let e1 = expand(&st, &VorticityData::zeros(&d), &d, 3).unwrap();
    let d2 = make_trivial_diffeo(&eta.scale(2.0), &vg, 0.5).unwrap();
    let e2 = expand(&SurfaceState::new(eta.scale(2.0), phi.clone(), 0.5), &VorticityData::zeros(&d2), &d2, 3).unwrap();
    assert!((&e1.g_i[0] - &g0_i(&phi, 1.0)).norm_l2() < 1e-13);
    for j in 0..=3 {
        let scale = 2f64.powi(j as i32);
        assert!((&e2.g_i[j] - &e1.g_i[j].scale(scale)).norm_l2() <= 1e-11 * (1.0 + e2.g_i[j].norm_l2()), "order {j}");
    }
}

#[test]
fn shape_derivative_matches_central_differences() {
    let hg = HGrid::square(16);
    let vg = VGrid::new(1.0, 20);
    let eta = Field2::from_fn(&hg, |x, y| 0.04 * (x.cos() + 0.5 * (2.0 * y).sin()));
    let om = VectorField3::new(Field3::zeros(&hg, &vg), Field3::from_fn(&hg, &vg, |x, _, _| x.cos()), Field3::zeros(&hg, &vg));
    let od = VorticityData { omega: om };
    let de = Field2::from_fn(&hg, |x, y| (x + y).cos());
    let d = make_trivial_diffeo(&eta, &vg, 0.5).unwrap();
    let want = dg_ii(&de, &od, &d, &opts()).unwrap();
    let gii = |e: &Field2| {
        let d = make_trivial_diffeo(e, &vg, 0.5).unwrap();
        g_ii_trace(&solve_vector_potential(&od, &d, &opts()).unwrap().0, e)
    };
    let eps = 2.5e-3;
    let fd = (&gii(&(&eta + &de.scale(eps))) - &gii(&(&eta - &de.scale(eps)))).scale(0.5 / eps);
    assert!((&fd - &want).norm_l2() < 1e-5 * want.norm_l2().max(1.0));
}

#[test]
fn finite_differences_agree_with_spectral_route() {
    let hg = HGrid::square(16);
    let vg = VGrid::new(1.0, 24);
    let eta = Field2::from_fn(&hg, |x, y| 0.03 * (x.cos() + 0.5 * (2.0 * y).sin()));
    let d = make_trivial_diffeo(&eta, &vg, 0.5).unwrap();
    let v = VectorField3::new(
        Field3::from_fn(&hg, &vg, |x, y, w| (w + 1.0) * (x + y).sin()),
        Field3::from_fn(&hg, &vg, |x, _, w| w * w * (2.0 * x).cos()),
        Field3::zeros(&hg, &vg),
    );
    let om = make_divfree_vorticity(&v, &d).unwrap();
    let phi = Field2::from_fn(&hg, |x, _| x.sin());
    let r = fd_convergence(&phi, &om.omega, &d, &[8, 16, 32], 1e-11, &opts()).unwrap();
    assert!(r.phi.within(2.0, 0.3) && r.a.within(2.0, 0.3), "{r:?}");
}

#[test]
fn converged_solves_satisfy_the_div_curl_system() {
    let hg = HGrid::square(32);
    let vg = VGrid::new(1.0, 32);
    let eta = Field2::from_fn(&hg, |x, y| 0.05 * x.cos() - 0.02 * (x + 2.0 * y).sin());
    let d = make_trivial_diffeo(&eta, &vg, 0.5).unwrap();
    let v = VectorField3::new(Field3::from_fn(&hg, &vg, |_, y, w| y.cos() * (1.0 + w)), Field3::zeros(&hg, &vg), Field3::from_fn(&hg, &vg, |x, _, _| x.sin()));
    let om = make_divfree_vorticity(&v, &d).unwrap();
    let phi = Field2::from_fn(&hg, |x, y| (x - y).cos());
    let sol = gdno(&SurfaceState::new(eta, phi.clone(), 0.5), &om, &d, &opts()).unwrap();
    let r = verify_divcurl(&sol.u, &om.omega, &phi, &d, 1e-6);
    assert!(r.pass, "{r:?}");
    assert!(sol.g.mean().abs() < 1e-12, "{} {} {}", sol.g.mean(), sol.g_i.mean(), sol.g_ii.mean());
}
