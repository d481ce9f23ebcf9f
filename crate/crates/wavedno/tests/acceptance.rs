//! Acceptance suite: one line per criterion, nonzero exit on any failure.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use wavedno::geometry::{make_regularizing_diffeo, make_trivial_diffeo, reg_delta_bound};
use wavedno::oracle::protocols::*;
use wavedno::oracle::DIVCURL_TOL;
use wavedno::paralin::Cutoff;
use wavedno::solver::{make_divfree_vorticity, SolverOpts};
use wavedno::spectral::{Field2, Field3, HGrid, SmoothStep, VGrid, VectorField3};
use wavedno::Result;

struct Outcome {
    pass: bool,
    detail: String,
}

fn opts() -> SolverOpts {
    SolverOpts { tol_fp: 1e-13, max_iter: 400, ..Default::default() }
}

fn eta_hat(hg: &Arc<HGrid>) -> Field2 {
    Field2::from_fn(hg, |x, y| x.cos() + 0.5 * (2.0 * y).sin())
}

fn phi0(hg: &Arc<HGrid>) -> Field2 {
    Field2::from_fn(hg, |x, y| x.sin() + 0.5 * (x + y).cos())
}

/// Depth-independent, divergence-free vorticities.
fn columnar_fields(hg: &Arc<HGrid>, vg: &Arc<VGrid>) -> Vec<VectorField3> {
    vec![
        VectorField3::new(Field3::from_fn(hg, vg, |_, y, _| y.cos()), Field3::from_fn(hg, vg, |x, _, _| x.sin()), Field3::from_fn(hg, vg, |x, y, _| (x + y).cos())),
        VectorField3::new(Field3::zeros(hg, vg), Field3::from_fn(hg, vg, |x, _, _| x.cos()), Field3::zeros(hg, vg)),
        VectorField3::new(
            Field3::from_fn(hg, vg, |x, y, _| (x - 2.0 * y).cos()),
            Field3::from_fn(hg, vg, |x, y, _| 0.5 * (x - 2.0 * y).cos()),
            Field3::from_fn(hg, vg, |_, y, _| (2.0 * y).sin()),
        ),
    ]
}

/// Depth-dependent potential whose flattened curl is the test vorticity.
fn sheared_potential(hg: &Arc<HGrid>, vg: &Arc<VGrid>) -> VectorField3 {
    VectorField3::new(
        Field3::from_fn(hg, vg, |x, y, w| (w + 1.0) * (x + y).sin()),
        Field3::from_fn(hg, vg, |x, _, w| w * w * (2.0 * x).cos()),
        Field3::from_fn(hg, vg, |_, y, w| (w + 1.0) * y.cos()),
    )
}

fn c1_flat_multiplier() -> Result<Outcome> {
    let r = flat_multiplier(&HGrid::square(32), &VGrid::new(1.0, 32), &opts())?;
    Ok(Outcome { pass: r.max_rel_err <= 1e-8, detail: format!("max rel err {:.2e} over {} modes (tol 1e-8)", r.max_rel_err, r.modes) })
}

fn c2_flat_rotational() -> Result<Outcome> {
    let hg = HGrid::square(32);
    let vg = VGrid::new(1.0, 32);
    let flat = make_trivial_diffeo(&Field2::zeros(&hg), &vg, 1.0)?;
    let mut fields = columnar_fields(&hg, &vg);
    fields.truncate(1);
    fields.push(make_divfree_vorticity(&sheared_potential(&hg, &vg), &flat)?.omega);
    fields.push(VectorField3::new(
        Field3::from_fn(&hg, &vg, |_, y, w| (2.0 * y).cos() * (1.0 + w).powi(2)),
        Field3::zeros(&hg, &vg),
        Field3::zeros(&hg, &vg),
    ));
    let r = flat_rotational(&vg, &fields, &opts())?;
    let worst = r.rel_err.iter().copied().fold(r.closed_form_rel_err, f64::max);
    Ok(Outcome {
        pass: worst <= 1e-8,
        detail: format!("rel errs {:?}, closed form {:.2e} (tol 1e-8)", r.rel_err.iter().map(|e| format!("{e:.1e}")).collect::<Vec<_>>(), r.closed_form_rel_err),
    })
}

fn c3_irrotational() -> Result<Outcome> {
    let hg = HGrid::square(32);
    let vg = VGrid::new(1.0, 32);
    let r = taylor_slopes(&eta_hat(&hg), &phi0(&hg), &[], &vg, 0.1, &[0.08, 0.04, 0.02], &[1, 2, 3], &[], &opts())?;
    let eta = eta_hat(&hg).scale(0.05);
    let d = make_trivial_diffeo(&eta, &vg, 0.1)?;
    let sol = wavedno::solver::gdno(&wavedno::solver::SurfaceState::new(eta, phi0(&hg), 0.1), &wavedno::solver::VorticityData::zeros(&d), &d, &opts())?;
    let gii = sol.g_ii.max_abs().max(r.g_ii_max);
    let slopes_ok = r.irrotational.iter().zip(1..).all(|(s, j)| s.within(j as f64 + 1.0, 0.3));
    Ok(Outcome {
        pass: gii <= 1e-12 && slopes_ok,
        detail: format!("max|G_II| {gii:.1e}; slopes J=1,2,3: {} (targets J+1 ± 0.3)", fmt_slopes(&r.irrotational)),
    })
}

fn c4_rotational_taylor() -> Result<Outcome> {
    let hg = HGrid::square(32);
    let vg = VGrid::new(1.0, 32);
    let fields = columnar_fields(&hg, &vg);
    let r = taylor_slopes(&eta_hat(&hg), &phi0(&hg), &fields, &vg, 0.1, &[0.08, 0.04, 0.02], &[], &[1, 2], &opts())?;
    let ok = r.rotational.iter().all(|f| f.iter().zip(1..).all(|(s, j)| s.within(j as f64 + 1.0, 0.4)));
    let txt: Vec<String> = r.rotational.iter().map(|f| fmt_slopes(f)).collect();
    Ok(Outcome { pass: ok, detail: format!("slopes J=1,2 per field: [{}] (targets J+1 ± 0.4)", txt.join("; ")) })
}

fn c5_differential() -> Result<Outcome> {
    let hg = HGrid::square(32);
    let vg = VGrid::new(1.0, 32);
    let eta = eta_hat(&hg).scale(0.05);
    let d = make_trivial_diffeo(&eta, &vg, 0.1)?;
    let om = make_divfree_vorticity(&sheared_potential(&hg, &vg), &d)?.omega;
    let deta = Field2::from_fn(&hg, |x, y| (x + y).cos());
    let r = differential_check(&eta, &deta, &om, &vg, 0.1, &[1e-2, 5e-3, 2.5e-3], &opts())?;
    Ok(Outcome {
        pass: r.study.within(2.0, 0.3) && r.finest <= 1e-5,
        detail: format!("slope {:.3} (2 ± 0.3), error at 2.5e-3 {:.2e} (tol 1e-5)", r.study.slope, r.finest),
    })
}

fn c6_oracle() -> Result<Outcome> {
    let hg = HGrid::square(32);
    let vg = VGrid::new(1.0, 33);
    let eta = Field2::from_fn(&hg, |x, y| 0.03 * (x.cos() + 0.5 * (2.0 * y).sin()));
    let c1 = eta.max_abs() + eta.dx().max_abs().max(eta.dy().max_abs());
    let d = make_trivial_diffeo(&eta, &vg, 0.1)?;
    let om = make_divfree_vorticity(&sheared_potential(&hg, &vg), &d)?.omega;
    let r = fd_convergence(&phi0(&hg), &om, &d, &[16, 32, 64], 1e-11, &SolverOpts { tol_fp: 1e-12, max_iter: 400, ..Default::default() })?;
    Ok(Outcome {
        pass: c1 <= 0.1 && r.phi.within(2.0, 0.3) && r.a.within(2.0, 0.3),
        detail: format!("|eta|_C1 {c1:.3}; rates phi {:.3}, A {:.3} (2 ± 0.3)", r.phi.slope, r.a.slope),
    })
}

fn c7_residuals() -> Result<Outcome> {
    let hg = HGrid::square(32);
    let eta = Field2::from_fn(&hg, |x, y| 0.05 * x.cos() + 0.03 * (x + 2.0 * y).sin());
    let phi = Field2::from_fn(&hg, |x, y| x.sin() + 0.5 * (2.0 * y).cos());
    let prof = SmoothStep::default();
    let bound = reg_delta_bound(&eta, 1.0, 0.5, &prof);
    let mut worst = 0.0f64;
    let mut pass = true;
    let mut cases = Vec::new();
    // The regularizing map resolves its cutoff profile in w only from 48 nodes on.
    for (name, nw) in [("trivial", 32), ("trivial/sheared", 32), ("regularizing", 48)] {
        let vg = VGrid::new(1.0, nw);
        let v = if name == "trivial/sheared" {
            sheared_potential(&hg, &vg)
        } else {
            VectorField3([
                Field3::from_fn(&hg, &vg, |_, y, w| y.cos() * (1.0 + w) * (1.0 + w)),
                Field3::from_fn(&hg, &vg, |x, y, w| (x - y).sin() * (0.5 * w).exp()),
                Field3::from_fn(&hg, &vg, |x, _, w| x.sin() * (1.0 + 0.3 * w)),
            ])
        };
        let d = if name == "regularizing" { make_regularizing_diffeo(&eta, &vg, 0.5, 0.5 * bound, prof)? } else { make_trivial_diffeo(&eta, &vg, 0.5)? };
        let om = make_divfree_vorticity(&v, &d)?.omega;
        let r = bvp_residuals(&phi, &om, &d, DIVCURL_TOL, &SolverOpts::default())?;
        let w = r.relative().iter().copied().fold(0.0, f64::max);
        worst = worst.max(w);
        pass &= r.pass;
        cases.push(format!("{name} 32²×{nw} {w:.1e}"));
    }
    Ok(Outcome { pass, detail: format!("worst relative residual per case: {} (tol 1e-6)", cases.join(", ")) })
}

fn c8_paradiff() -> Result<Outcome> {
    let r = paradiff_suite(&Cutoff::default(), &[32, 64], 64, &[10.0, 15.0, 22.0], 60)?;
    let drift = r.boundedness_drift();
    Ok(Outcome {
        pass: r.cutoff.pass() && drift <= 0.1 && r.margin() >= 0.5,
        detail: format!(
            "cutoff i/ii/iii {}/{}/{}; C32 {:.3} C64 {:.3} (drift {:.3} ≤ 0.1); slopes T_aT_b {:.2}, T_aT_b−T_ab {:.2}, margin {:.2} (≥ 0.5)",
            r.cutoff.prop_i,
            r.cutoff.prop_ii,
            r.cutoff.prop_iii,
            r.boundedness[0].1,
            r.boundedness[1].1,
            drift,
            r.composition.slope,
            r.remainder.slope,
            r.margin()
        ),
    })
}

fn c9_paralin() -> Result<Outcome> {
    let hg = HGrid::square(32);
    let vg = VGrid::new(1.0, 24);
    let eta = Field2::from_fn(&hg, |x, y| (8.0 * x).cos() + 0.5 * (8.0 * y).sin());
    let phi = Field2::from_fn(&hg, |x, y| x.cos() + 0.5 * (x + y).sin());
    let om = columnar_fields(&hg, &vg).swap_remove(0);
    let r = paralin_slopes(&eta, &phi, &om, &vg, 0.5, 0.4, &[0.01, 0.005, 0.0025], &Cutoff::default(), &opts())?;
    Ok(Outcome {
        pass: r.g_i.within(2.0, 0.4) && r.g_ii.within(2.0, 0.4),
        detail: format!("slopes G_I {:.3}, G_II {:.3} (2 ± 0.4)", r.g_i.slope, r.g_ii.slope),
    })
}

fn c10_symbols() -> Result<Outcome> {
    let hg = HGrid::square(32);
    let eta = Field2::from_fn(&hg, |x, y| 0.1 * x.cos() + 0.05 * (x + 2.0 * y).sin());
    let r = symbol_identities(&eta, 0.5);
    Ok(Outcome {
        pass: r.identity_err <= 1e-12 && r.symmetry_err <= 1e-12 && r.ellipticity_margin >= -1e-12,
        detail: format!("identity err {:.1e}, |Re m + Re n| {:.1e}, relative ellipticity margin {:.1e} (≥ −1e-12) over {} samples", r.identity_err, r.symmetry_err, r.ellipticity_margin, r.samples),
    })
}

fn c11_admissibility() -> Result<Outcome> {
    let hg = HGrid::square(32);
    let vg = VGrid::new(1.0, 16);
    let eta = Field2::from_fn(&hg, |x, y| 0.1 * x.cos() + 0.05 * (2.0 * y).sin());
    let r = admissibility(&eta, &vg, 0.5, SmoothStep::default(), 1.5, 0.5)?;
    Ok(Outcome {
        pass: r.pass(),
        detail: format!("bound {:.4}; rejected above: {}; below: min J {:.4} ≥ c0 {:.4} > 0", r.bound, r.rejected_above, r.jac_min, r.c0),
    })
}

fn fmt_slopes(s: &[SlopeStudy]) -> String {
    s.iter().map(|s| format!("{:.3}", s.slope)).collect::<Vec<_>>().join(", ")
}

type Criterion = (u32, &'static str, u64, fn() -> Result<Outcome>);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        (1, "flat multiplier exactness", 1, c1_flat_multiplier),
        (2, "rotational flat case", 5, c2_flat_rotational),
        (3, "irrotational reduction", 60, c3_irrotational),
        (4, "rotational Taylor consistency", 120, c4_rotational_taylor),
        (5, "differential formula", 120, c5_differential),
        (6, "oracle cross-validation", 600, c6_oracle),
        (7, "BVP residual suite", 30, c7_residuals),
        (8, "paradifferential suite", 60, c8_paradiff),
        (9, "paralinearization surrogates", 300, c9_paralin),
        (10, "symbol identities", 5, c10_symbols),
        (11, "diffeomorphism admissibility", 1, c11_admissibility),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, budget, f) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let out = f();
        let el = t.elapsed();
        let in_time = el <= Duration::from_secs(budget);
        let (pass, detail) = match out {
            Ok(o) => (o.pass && in_time, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!("{} {id:>2} {name}: {detail}; {:.2} s (budget {budget} s)", if pass { "PASS" } else { "FAIL" }, el.as_secs_f64());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
