//! Measurement protocols shared by the acceptance suite and the experiment
//! driver. Each returns the measured quantities; pass/fail thresholds are
//! supplied by the caller.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::Serialize;

use super::{fd_solve_a, fd_solve_phi, sample2, slope_fit, verify_divcurl, DivCurlReport, FDGrid};
use crate::error::{Error, Result};
use crate::expansion::{dg_ii, expand, g0_ii};
use crate::geometry::{make_regularizing_diffeo, make_trivial_diffeo, reg_delta_bound, Diffeo};
use crate::paralin::{
    band_norm, dno_principal_symbol, factorization_symbols, paralinearized_gi, paralinearized_gii, strip_localize, Cutoff,
    ParaMatrix, Symbol,
};
use crate::solver::{g_ii_trace, gdno, solve_vector_potential, SolverOpts, SurfaceState, VorticityData};
use crate::spectral::{Field2, HGrid, SmoothStep, VGrid, VectorField3};

/// Samples `(scale, error)` with their log-log fit.
#[derive(Clone, Debug, Serialize)]
pub struct SlopeStudy {
    pub samples: Vec<(f64, f64)>,
    pub slope: f64,
    pub r2: f64,
}

impl SlopeStudy {
    pub fn fit(samples: Vec<(f64, f64)>) -> Result<Self> {
        let (slope, r2) = slope_fit(&samples)?;
        Ok(SlopeStudy { samples, slope, r2 })
    }

    pub fn within(&self, target: f64, tol: f64) -> bool {
        (self.slope - target).abs() <= tol
    }
}

/// Field with unit-modulus coefficients of deterministic phase on every
/// kept nonzero mode, Hermitian so that it is real.
pub fn all_modes_field(hg: &Arc<HGrid>) -> Field2 {
    let mut f = Field2::zeros(hg);
    for k in 1..hg.len() {
        let (mx, my) = hg.modes(k);
        if !hg.kept(k) || (my, mx) < (0, 0) || (mx == 0 && my == 0) {
            continue;
        }
        let t = TAU * 0.618_033_988_749_895 * (1 + k) as f64;
        f.c[k] = C64::new(t.cos(), t.sin());
        f.c[hg.index(-mx, -my)] = C64::new(t.cos(), -t.sin());
    }
    f
}

#[derive(Clone, Debug, Serialize)]
pub struct FlatMultiplierReport {
    pub max_rel_err: f64,
    pub zero_mode: f64,
    pub modes: usize,
}

/// Solver `G` at `η = 0, ω̃ = 0` against `|ξ| tanh(h|ξ|)`, mode by mode.
pub fn flat_multiplier(hg: &Arc<HGrid>, vg: &Arc<VGrid>, opts: &SolverOpts) -> Result<FlatMultiplierReport> {
    let h = vg.h;
    let phi = all_modes_field(hg);
    let eta = Field2::zeros(hg);
    let d = make_trivial_diffeo(&eta, vg, h)?;
    let sol = gdno(&SurfaceState::new(eta, phi.clone(), h), &VorticityData::zeros(&d), &d, opts)?;
    let mut worst = 0.0f64;
    let mut modes = 0;
    for k in 1..hg.len() {
        if phi.c[k].norm() == 0.0 {
            continue;
        }
        let r = hg.xi_abs(k);
        let m = r * (h * r).tanh();
        worst = worst.max(((sol.g.c[k] / phi.c[k]) - m).norm() / m);
        modes += 1;
    }
    Ok(FlatMultiplierReport { max_rel_err: worst, zero_mode: sol.g.c[0].norm(), modes })
}

#[derive(Clone, Debug, Serialize)]
pub struct FlatRotationalReport {
    /// Relative error of the solver against the flat rotational formula, per field.
    pub rel_err: Vec<f64>,
    /// Relative error of the solver against `−(cosh h − 1)/cosh h · sin x` for `ω̃ = (0, cos x, 0)`.
    pub closed_form_rel_err: f64,
}

pub fn flat_rotational(vg: &Arc<VGrid>, fields: &[VectorField3], opts: &SolverOpts) -> Result<FlatRotationalReport> {
    let hg = fields.first().map(|f| f.0[0].hg.clone()).ok_or_else(|| Error::ConfigError("no vorticity fields".into()))?;
    let h = vg.h;
    let d = make_trivial_diffeo(&Field2::zeros(&hg), vg, h)?;
    let mut rel_err = Vec::new();
    for om in fields {
        let (a, _) = solve_vector_potential(&VorticityData { omega: om.clone() }, &d, opts)?;
        let g = g_ii_trace(&a, &d.eta);
        let want = g0_ii(om);
        rel_err.push((&g - &want).norm_l2() / want.norm_l2().max(f64::MIN_POSITIVE));
    }
    let om = VectorField3::new(
        crate::spectral::Field3::zeros(&hg, vg),
        crate::spectral::Field3::from_fn(&hg, vg, |x, _, _| x.cos()),
        crate::spectral::Field3::zeros(&hg, vg),
    );
    let (a, _) = solve_vector_potential(&VorticityData { omega: om }, &d, opts)?;
    let g = g_ii_trace(&a, &d.eta);
    let want = Field2::from_fn(&hg, |x, _| -(h.cosh() - 1.0) / h.cosh() * x.sin());
    Ok(FlatRotationalReport { rel_err, closed_form_rel_err: (&g - &want).norm_l2() / want.norm_l2() })
}

#[derive(Clone, Debug, Serialize)]
pub struct TaylorReport {
    /// `max |G_II|` along the ladder (zero vorticity only).
    pub g_ii_max: f64,
    /// Slope studies of `‖G_I − Σ_{j≤J} G_{j,I}‖` for `J = 1..`.
    pub irrotational: Vec<SlopeStudy>,
    /// Slope studies of `‖G_II − Σ_{j≤J} G_{j,II}‖`, one list per field.
    pub rotational: Vec<Vec<SlopeStudy>>,
}

/// Solver against truncated Taylor sums along `η = a η̂`.
///
/// `orders_i` are the truncation orders checked for `G_I` with `Φ`;
/// `orders_ii` those checked for `G_II` with each field of `fields`.
#[allow(clippy::too_many_arguments)]
pub fn taylor_slopes(
    eta_hat: &Field2,
    phi: &Field2,
    fields: &[VectorField3],
    vg: &Arc<VGrid>,
    h0: f64,
    ladder: &[f64],
    orders_i: &[usize],
    orders_ii: &[usize],
    opts: &SolverOpts,
) -> Result<TaylorReport> {
    let jmax = orders_i.iter().chain(orders_ii).copied().max().unwrap_or(1);
    let mut g_ii_max = 0.0f64;
    let mut err_i = vec![Vec::new(); orders_i.len()];
    let mut err_ii = vec![vec![Vec::new(); orders_ii.len()]; fields.len()];
    for &a in ladder {
        let eta = eta_hat.scale(a);
        let d = make_trivial_diffeo(&eta, vg, h0)?;
        let st = SurfaceState::new(eta.clone(), phi.clone(), h0);
        let zero = VorticityData::zeros(&d);
        let sol = gdno(&st, &zero, &d, opts)?;
        g_ii_max = g_ii_max.max(sol.g_ii.max_abs());
        let ex = expand(&st, &zero, &d, jmax)?;
        for (i, &j) in orders_i.iter().enumerate() {
            let s = ex.g_i[..=j].iter().skip(1).fold(ex.g_i[0].clone(), |acc, g| &acc + g);
            err_i[i].push((a, (&sol.g_i - &s).norm_l2()));
        }
        for (fi, om) in fields.iter().enumerate() {
            let od = VorticityData { omega: om.clone() };
            let sol = gdno(&st, &od, &d, opts)?;
            let ex = expand(&st, &od, &d, jmax)?;
            for (i, &j) in orders_ii.iter().enumerate() {
                let s = ex.g_ii[..=j].iter().skip(1).fold(ex.g_ii[0].clone(), |acc, g| &acc + g);
                err_ii[fi][i].push((a, (&sol.g_ii - &s).norm_l2()));
            }
        }
    }
    let irrotational = err_i.into_iter().map(SlopeStudy::fit).collect::<Result<_>>()?;
    let rotational = err_ii.into_iter().map(|v| v.into_iter().map(SlopeStudy::fit).collect::<Result<Vec<_>>>()).collect::<Result<_>>()?;
    Ok(TaylorReport { g_ii_max, irrotational, rotational })
}

#[derive(Clone, Debug, Serialize)]
pub struct DifferentialReport {
    pub study: SlopeStudy,
    /// Error at the smallest step.
    pub finest: f64,
}

/// Central differences of the solver's `G_II` in direction `δη` against the
/// shape derivative, `ω̃` fixed on the flat strip.
pub fn differential_check(eta: &Field2, deta: &Field2, omega: &VectorField3, vg: &Arc<VGrid>, h0: f64, steps: &[f64], opts: &SolverOpts) -> Result<DifferentialReport> {
    let od = VorticityData { omega: omega.clone() };
    let gii = |e: &Field2| -> Result<Field2> {
        let d = make_trivial_diffeo(e, vg, h0)?;
        let (a, _) = solve_vector_potential(&od, &d, opts)?;
        Ok(g_ii_trace(&a, e))
    };
    let d = make_trivial_diffeo(eta, vg, h0)?;
    let want = dg_ii(deta, &od, &d, opts)?;
    let mut samples = Vec::new();
    for &e in steps {
        let fd = (&gii(&(eta + &deta.scale(e)))? - &gii(&(eta - &deta.scale(e)))?).scale(0.5 / e);
        samples.push((e, (&fd - &want).norm_l2()));
    }
    let finest = samples.iter().min_by(|a, b| a.0.total_cmp(&b.0)).map_or(f64::NAN, |s| s.1);
    Ok(DifferentialReport { study: SlopeStudy::fit(samples)?, finest })
}

#[derive(Clone, Debug, Serialize)]
pub struct FdConvergenceReport {
    pub phi: SlopeStudy,
    pub a: SlopeStudy,
    pub iterations: Vec<(usize, usize)>,
}

/// Max-norm differences of surface traces between the finite-difference
/// route on `n × n × (n+1)` lattices and the spectral route; slopes are in
/// the lattice spacing.
pub fn fd_convergence(phi: &Field2, omega: &VectorField3, d: &Diffeo, sizes: &[usize], tol: f64, opts: &SolverOpts) -> Result<FdConvergenceReport> {
    let eta = &d.eta;
    let sol = gdno(&SurfaceState::new(eta.clone(), phi.clone(), 0.0), &VorticityData { omega: omega.clone() }, d, opts)?;
    let pw = sol.phi.dw().surface();
    let [a1, a2, _] = sol.a.surface();
    let maxdiff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let (mut ep, mut ea, mut its) = (Vec::new(), Vec::new(), Vec::new());
    for &n in sizes {
        let fg = FDGrid::new(eta.grid.lx, eta.grid.ly, n, n, n + 1, d.h)?;
        let (p, rp) = fd_solve_phi(phi, d, &fg, tol)?;
        ep.push((fg.dx, maxdiff(&p.surface_dw(fg.dw), &sample2(&pw, &fg))));
        let (a, ra) = fd_solve_a(omega, d, &fg, tol)?;
        ea.push((fg.dx, maxdiff(a[0].surface(), &sample2(&a1, &fg)).max(maxdiff(a[1].surface(), &sample2(&a2, &fg)))));
        its.push((rp.iterations, ra.iterations));
    }
    Ok(FdConvergenceReport { phi: SlopeStudy::fit(ep)?, a: SlopeStudy::fit(ea)?, iterations: its })
}

/// Div-curl residuals of one converged solve.
pub fn bvp_residuals(phi: &Field2, omega: &VectorField3, d: &Diffeo, tol: f64, opts: &SolverOpts) -> Result<DivCurlReport> {
    let od = VorticityData { omega: omega.clone() };
    let sol = gdno(&SurfaceState::new(d.eta.clone(), phi.clone(), 0.0), &od, d, opts)?;
    Ok(verify_divcurl(&sol.u, omega, phi, d, tol))
}

#[derive(Clone, Debug, Serialize)]
pub struct ParadiffReport {
    pub cutoff: crate::paralin::CutoffReport,
    /// `‖T_a‖/‖a‖_∞` per grid size.
    pub boundedness: Vec<(usize, f64)>,
    pub composition: SlopeStudy,
    pub remainder: SlopeStudy,
}

impl ParadiffReport {
    pub fn boundedness_drift(&self) -> f64 {
        let c = &self.boundedness;
        (c[c.len() - 1].1 / c[0].1 - 1.0).abs()
    }

    pub fn margin(&self) -> f64 {
        self.composition.slope - self.remainder.slope
    }
}

/// Cutoff properties, the `L²` bound of paraproducts across grid sizes and
/// the order drop of `T_aT_b − T_{ab}` for `a = b = λ^(1)`.
pub fn paradiff_suite(c: &Cutoff, sizes: &[usize], comp_n: usize, bands: &[f64], iters: usize) -> Result<ParadiffReport> {
    let cutoff = c.check(&HGrid::square(sizes[0]));
    let mut boundedness = Vec::new();
    for &n in sizes {
        let hg = HGrid::square(n);
        let a = Field2::from_fn(&hg, |x, y| 1.0 + 0.5 * x.cos() * (2.0 * y).sin() + 0.3 * (x + y).sin());
        let m = ParaMatrix::assemble_full(&Symbol::function(&a), c);
        let kept: Vec<usize> = (0..hg.len()).filter(|&q| hg.kept(q)).collect();
        let nrm = band_norm(&hg, &kept, iters, |u| m.apply(u), |v| m.apply_adjoint(v));
        boundedness.push((n, nrm / a.max_abs()));
    }
    let hg = HGrid::square(comp_n);
    let eta = Field2::from_fn(&hg, |x, _| 0.1 * x.cos());
    let lam = dno_principal_symbol(&eta);
    let (ex, ey) = (eta.dx().to_phys(), eta.dy().to_phys());
    let lam2 = Symbol::general(&hg, 2.0, move |xi| {
        (0..ex.len())
            .map(|j| {
                let s = xi[0] * ex[j] + xi[1] * ey[j];
                C64::new((1.0 + ex[j] * ex[j] + ey[j] * ey[j]) * (xi[0] * xi[0] + xi[1] * xi[1]) - s * s, 0.0)
            })
            .collect()
    });
    let all: Vec<usize> = (0..hg.len()).collect();
    let ma = ParaMatrix::assemble(&lam, c, &all);
    let mab = ParaMatrix::assemble(&lam2, c, &all);
    let (mut pc, mut pd) = (Vec::new(), Vec::new());
    for &k in bands {
        let band: Vec<usize> = (0..hg.len()).filter(|&q| hg.kept(q) && hg.xi_abs(q) >= k && hg.xi_abs(q) < k + 1.5).collect();
        if band.is_empty() {
            return Err(Error::ConfigError(format!("band at |xi| = {k} is empty on {comp_n}^2")));
        }
        pc.push((k, band_norm(&hg, &band, iters, |u| ma.apply(&ma.apply(u)), |v| ma.apply_adjoint(&ma.apply_adjoint(v)))));
        pd.push((
            k,
            band_norm(&hg, &band, iters, |u| &ma.apply(&ma.apply(u)) - &mab.apply(u), |v| &ma.apply_adjoint(&ma.apply_adjoint(v)) - &mab.apply_adjoint(v)),
        ));
    }
    Ok(ParadiffReport { cutoff, boundedness, composition: SlopeStudy::fit(pc)?, remainder: SlopeStudy::fit(pd)? })
}

#[derive(Clone, Debug, Serialize)]
pub struct ParalinReport {
    /// Norm of each residual at `a = 0`.
    pub base: [f64; 2],
    pub g_i: SlopeStudy,
    pub g_ii: SlopeStudy,
}

/// Residuals of the paralinearized `G_I` and `G_II` along `η = a η̂`, minus
/// their values at `a = 0`.
#[allow(clippy::too_many_arguments)]
pub fn paralin_slopes(eta_hat: &Field2, phi: &Field2, omega: &VectorField3, vg: &Arc<VGrid>, h0: f64, delta: f64, ladder: &[f64], c: &Cutoff, opts: &SolverOpts) -> Result<ParalinReport> {
    let od = VorticityData { omega: omega.clone() };
    let run = |a: f64| -> Result<(Field2, Field2)> {
        let eta = eta_hat.scale(a);
        let d = make_trivial_diffeo(&eta, vg, h0)?;
        let sol = gdno(&SurfaceState::new(eta.clone(), phi.clone(), h0), &od, &d, opts)?;
        let sf = strip_localize(&sol.a, omega, &d, delta, h0)?;
        Ok((paralinearized_gi(&eta, phi, &sol.g_i, c).residual, paralinearized_gii(&sf, &sol.g_ii, c).residual))
    };
    let (z1, z2) = run(0.0)?;
    let (mut p1, mut p2) = (Vec::new(), Vec::new());
    for &a in ladder {
        let (r1, r2) = run(a)?;
        p1.push((a, (&r1 - &z1).norm_l2()));
        p2.push((a, (&r2 - &z2).norm_l2()));
    }
    Ok(ParalinReport { base: [z1.norm_l2(), z2.norm_l2()], g_i: SlopeStudy::fit(p1)?, g_ii: SlopeStudy::fit(p2)? })
}

#[derive(Clone, Debug, Serialize)]
pub struct SymbolReport {
    /// `max |m^(1) − δ(iξ·∇η + λ^(1))/(1+|∇η|²)|`, with `m^(1)` the root of
    /// `m² + i b̌·ξ m − ǎ|ξ|² = 0` computed from the strip coefficients.
    pub identity_err: f64,
    /// `max |Re m^(1) + Re n^(1)|`.
    pub symmetry_err: f64,
    /// `min Re m^(1) (1+max|∇η|²)/(δ|ξ|) − 1`; zero where the bound is attained.
    pub ellipticity_margin: f64,
    pub samples: usize,
}

pub fn symbol_identities(eta: &Field2, delta: f64) -> SymbolReport {
    let hg = &eta.grid;
    let fac = factorization_symbols(eta, delta);
    let lam = dno_principal_symbol(eta);
    let (ex, ey) = (eta.dx().to_phys(), eta.dy().to_phys());
    let gmax = ex.iter().zip(&ey).map(|(a, b)| a * a + b * b).fold(0.0, f64::max);
    let (mut id, mut sym, mut ell, mut n) = (0.0f64, 0.0f64, f64::INFINITY, 0);
    for q in 1..hg.len() {
        if !hg.kept(q) {
            continue;
        }
        let xi = hg.xi(q);
        let r = hg.xi_abs(q);
        let (m1, n1, l1) = (fac.m1.column(xi), fac.n1.column(xi), lam.column(xi));
        for j in 0..hg.len() {
            let g = 1.0 + ex[j] * ex[j] + ey[j] * ey[j];
            let closed = (C64::new(0.0, xi[0] * ex[j] + xi[1] * ey[j]) + l1[j]) * (delta / g);
            let bx = -2.0 * delta * (ex[j] * xi[0] + ey[j] * xi[1]) / g;
            let root = 0.5 * (C64::new(0.0, -bx) + C64::new(-bx * bx + 4.0 * delta * delta / g * r * r, 0.0).sqrt());
            id = id.max((m1[j] - closed).norm()).max((m1[j] - root).norm());
            sym = sym.max((m1[j].re + n1[j].re).abs());
            ell = ell.min(m1[j].re / (delta * r / (1.0 + gmax)) - 1.0);
            n += 1;
        }
    }
    SymbolReport { identity_err: id, symmetry_err: sym, ellipticity_margin: ell, samples: n }
}

#[derive(Clone, Debug, Serialize)]
pub struct AdmissibilityReport {
    pub bound: f64,
    pub rejected_above: bool,
    pub c0: f64,
    pub jac_min: f64,
}

impl AdmissibilityReport {
    pub fn pass(&self) -> bool {
        self.rejected_above && self.c0 > 0.0 && self.jac_min >= self.c0
    }
}

/// Builds the regularizing map at `above × bound` (must be rejected) and
/// `below × bound` (must satisfy `min J ≥ c₀ > 0`).
pub fn admissibility(eta: &Field2, vg: &Arc<VGrid>, h0: f64, profile: SmoothStep, above: f64, below: f64) -> Result<AdmissibilityReport> {
    let bound = reg_delta_bound(eta, vg.h, h0, &profile);
    let rejected_above = matches!(make_regularizing_diffeo(eta, vg, h0, above * bound, profile), Err(Error::DeltaTooLarge { .. }));
    let d = make_regularizing_diffeo(eta, vg, h0, below * bound, profile)?;
    Ok(AdmissibilityReport { bound, rejected_above, c0: d.c0, jac_min: d.jac_min })
}
