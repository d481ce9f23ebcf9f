//! The generalized Dirichlet–Neumann operator by fixed-point iteration on
//! the flat strip.
//!
//! Both elliptic problems are written as a flat constant-coefficient problem
//! plus the defect `Δ^Σ - Δ` and boundary corrections, which are moved to the
//! right-hand side and iterated to convergence:
//!
//! * vector potential: `-Δ Ã = ω̃ + (Δ^Σ - Δ)Ã`, with `Ã_h(-h) = 0`,
//!   `∂_wÃ_3(-h) = 0`, `Ã·N = 0` and `(curl^Σ Ã)_∥ = -∇⊥Δ⁻¹(ω̃·N)` at `w = 0`;
//! * scalar potential: `-Δ φ̃ = (Δ^Σ - Δ)φ̃`, `∂_w^Σφ̃(-h) = 0`, `φ̃(0) = Φ`.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{curl, flat_curl, flat_div, flat_grad, Diffeo};
use crate::greens::{green_solve_a, green_solve_phi, green_trace_phi};
use crate::spectral::{Field2, Field3, VectorField2, VectorField3};

/// Surface unknowns: elevation and velocity-potential trace.
#[derive(Clone, Debug)]
pub struct SurfaceState {
    pub eta: Field2,
    pub phi: Field2,
    pub h0: f64,
}

/// Straightened vorticity on the flat strip.
#[derive(Clone, Debug)]
pub struct VorticityData {
    pub omega: VectorField3,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverOpts {
    pub tol_fp: f64,
    pub max_iter: usize,
    pub damping: f64,
    pub tol_div: f64,
}

impl Default for SolverOpts {
    fn default() -> Self {
        SolverOpts { tol_fp: 1e-10, max_iter: 200, damping: 1.0, tol_div: 1e-8 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub last_update: f64,
}

#[derive(Clone, Debug)]
pub struct BVPSolution {
    pub a: VectorField3,
    pub phi: Field3,
    pub u: VectorField3,
    pub g_i: Field2,
    pub g_ii: Field2,
    pub g: Field2,
    /// `U_∥ = ∇Φ - ∇⊥Δ⁻¹(ω̃·N|₀)`.
    pub u_par: VectorField2,
    /// Horizontal and vertical surface velocity.
    pub v: VectorField2,
    pub w: Field2,
    /// Vertical surface velocity of the irrotational part, `∂_w^Σφ̃(0)`.
    pub w_irr: Field2,
    /// `ω̃·N` at the surface; its mean is discarded before `Δ⁻¹`.
    pub omega_n: Field2,
    pub report_a: SolveReport,
    pub report_phi: SolveReport,
}

impl VorticityData {
    pub fn zeros(d: &Diffeo) -> Self {
        VorticityData { omega: VectorField3::zeros(d.hgrid(), d.vgrid()) }
    }

    /// `max |div^Σ ω̃|` on the grid.
    pub fn div_defect(&self, d: &Diffeo) -> f64 {
        flat_div(&self.omega, d).max_abs()
    }
}

impl SurfaceState {
    pub fn new(eta: Field2, phi: Field2, h0: f64) -> Self {
        SurfaceState { eta, phi, h0 }
    }
}

fn rel_update(new: f64, diff: f64) -> f64 {
    if new == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        diff / new
    }
}

/// `R₁₁ = (Δ^Σ - Δ)Ã`, `r₂₁ = Ã_h(0)·∇η` and the tangential-curl residual
/// `r₃₁ = (curl Ã)_h - (curl^Σ Ã)_h - (curl^Σ Ã)_3 ∇η + ∇⊥Δ⁻¹(ω̃_h·∇η)`
/// at `w = 0`.
pub fn residual_terms_a(d: &Diffeo, a: &VectorField3, omega: &VectorField3) -> (VectorField3, Field2, VectorField2) {
    let r11 = VectorField3([d.laplacian_defect(&a.0[0]), d.laplacian_defect(&a.0[1]), d.laplacian_defect(&a.0[2])]);
    let ge = d.eta.grad();
    let r21 = a.surface_h().dot(&ge);
    let c = curl(a).surface();
    let cs = flat_curl(a, d).surface();
    let wn = omega.surface_h().dot(&ge).inv_laplacian_meanfree().grad_perp();
    let r31 = VectorField2([
        &(&(&c[0] - &cs[0]) - &cs[2].prod(&ge.0[0])) + &wn.0[0],
        &(&(&c[1] - &cs[1]) - &cs[2].prod(&ge.0[1])) + &wn.0[1],
    ]);
    (r11, r21, r31)
}

/// `r₁₂ = (Δ^Σ - Δ)φ̃` and `r₂₂ = -∂_w^Σφ̃(-h) + ∂_wφ̃(-h)`.
pub fn residual_terms_phi(d: &Diffeo, phi: &Field3) -> (Field3, Field2) {
    let r12 = d.laplacian_defect(phi);
    let pw = phi.dw();
    let r22 = &pw.bottom() - &d.mul_jinv(&pw).bottom();
    (r12, r22)
}

pub fn solve_vector_potential(omega: &VorticityData, d: &Diffeo, opts: &SolverOpts) -> Result<(VectorField3, SolveReport)> {
    let w = &omega.omega;
    let s = w.0[2].surface();
    if w.max_coef() == 0.0 {
        return Ok((VectorField3::zeros(d.hgrid(), d.vgrid()), SolveReport::default()));
    }
    let hg = d.hgrid();
    if d.is_flat() {
        let a = green_solve_a(w, &Field2::zeros(hg), &VectorField2::zeros(hg), &s);
        return Ok((a, SolveReport { iterations: 1, last_update: 0.0 }));
    }
    let mut a = VectorField3::zeros(hg, d.vgrid());
    let mut last = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let (r11, r21, r31) = residual_terms_a(d, &a, w);
        let new = green_solve_a(&(w + &r11), &r21, &r31, &s);
        let diff = (&new - &a).norm_l2();
        last = rel_update(new.norm_l2(), diff);
        if !last.is_finite() {
            break;
        }
        a = if opts.damping == 1.0 { new } else { &a + &(&new - &a).scale(opts.damping) };
        if last < opts.tol_fp {
            return Ok((a, SolveReport { iterations: it, last_update: last }));
        }
    }
    Err(Error::NonConvergence { iterations: opts.max_iter, last_update: last })
}

/// Solution, report and the surface trace `∂_wφ̃(0)`.
fn solve_phi_inner(phi: &Field2, d: &Diffeo, opts: &SolverOpts) -> Result<(Field3, SolveReport, Field2)> {
    let (hg, vg) = (d.hgrid(), d.vgrid());
    let z3 = Field3::zeros(hg, vg);
    let z2 = Field2::zeros(hg);
    if phi.norm_l2() == 0.0 {
        return Ok((z3, SolveReport::default(), z2));
    }
    let mut u = green_solve_phi(&z3, &z2, phi);
    if d.is_flat() {
        let t = green_trace_phi(&z3, &z2, phi);
        return Ok((u, SolveReport { iterations: 1, last_update: 0.0 }, t));
    }
    let mut last = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let (r4, r5) = residual_terms_phi(d, &u);
        let new = green_solve_phi(&r4, &r5, phi);
        let diff = (&new - &u).norm_l2();
        last = rel_update(new.norm_l2(), diff);
        if !last.is_finite() {
            break;
        }
        u = if opts.damping == 1.0 { new } else { &u + &(&new - &u).scale(opts.damping) };
        if last < opts.tol_fp {
            let (r4, r5) = residual_terms_phi(d, &u);
            let t = green_trace_phi(&r4, &r5, phi);
            return Ok((u, SolveReport { iterations: it, last_update: last }, t));
        }
    }
    Err(Error::NonConvergence { iterations: opts.max_iter, last_update: last })
}

pub fn solve_harmonic_potential(phi: &Field2, d: &Diffeo, opts: &SolverOpts) -> Result<(Field3, SolveReport)> {
    solve_phi_inner(phi, d, opts).map(|(u, r, _)| (u, r))
}

/// `Ũ = curl^Σ Ã + ∇^Σ φ̃`.
pub fn reconstruct_velocity(a: &VectorField3, phi: &Field3, d: &Diffeo) -> VectorField3 {
    &flat_curl(a, d) + &flat_grad(phi, d)
}

/// `ω̃·N = ω̃_3 - ω̃_h·∇η` at the surface.
pub fn surface_normal_vorticity(omega: &VectorField3, eta: &Field2) -> Field2 {
    &omega.0[2].surface() - &omega.surface_h().dot(&eta.grad())
}

/// `G_II = Ã₂ₓ + η_y Ã₃ₓ - Ã₁ᵧ - η_x Ã₃ᵧ` at `w = 0`, which equals
/// `curl^ΣÃ·N` there because `σ(0) = η`.
pub fn g_ii_trace(a: &VectorField3, eta: &Field2) -> Field2 {
    let [a1, a2, a3] = a.surface();
    let t = eta.dy().prod(&a3.dx()) - eta.dx().prod(&a3.dy());
    &(&a2.dx() - &a1.dy()) + &t
}

pub fn gdno(state: &SurfaceState, omega: &VorticityData, d: &Diffeo, opts: &SolverOpts) -> Result<BVPSolution> {
    let (ra, rp) = rayon::join(|| solve_vector_potential(omega, d, opts), || solve_phi_inner(&state.phi, d, opts));
    let (a, report_a) = ra?;
    let (phi, report_phi, phi_w0) = rp?;
    let eta = &d.eta;
    let hg = d.hgrid();
    let (ex, ey) = (eta.dx().to_phys(), eta.dy().to_phys());
    let (px, py) = (state.phi.dx().to_phys(), state.phi.dy().to_phys());
    let (pw, jac) = (phi_w0.to_phys(), d.surface_jac().to_phys());
    let n = ex.len();
    let gn2: Vec<f64> = (0..n).map(|i| 1.0 + ex[i] * ex[i] + ey[i] * ey[i]).collect();
    let w_irr = Field2::from_phys(hg, &(0..n).map(|i| pw[i] / jac[i]).collect::<Vec<_>>()).dealiased();
    let g_i = Field2::from_phys(hg, &(0..n).map(|i| pw[i] * gn2[i] / jac[i] - ex[i] * px[i] - ey[i] * py[i]).collect::<Vec<_>>()).dealiased();
    let g_ii = g_ii_trace(&a, eta);
    let g = &g_i + &g_ii;
    let omega_n = surface_normal_vorticity(&omega.omega, eta);
    let u_par = &state.phi.grad() - &omega_n.inv_laplacian_meanfree().grad_perp();
    let (ux, uy, gp) = (u_par.0[0].to_phys(), u_par.0[1].to_phys(), g.to_phys());
    let wp: Vec<f64> = (0..n).map(|i| (gp[i] + ex[i] * ux[i] + ey[i] * uy[i]) / gn2[i]).collect();
    let w = Field2::from_phys(hg, &wp).dealiased();
    let v = VectorField2([
        Field2::from_phys(hg, &(0..n).map(|i| ux[i] - wp[i] * ex[i]).collect::<Vec<_>>()).dealiased(),
        Field2::from_phys(hg, &(0..n).map(|i| uy[i] - wp[i] * ey[i]).collect::<Vec<_>>()).dealiased(),
    ]);
    let u = reconstruct_velocity(&a, &phi, d);
    Ok(BVPSolution { a, phi, u, g_i, g_ii, g, u_par, v, w, w_irr, omega_n, report_a, report_phi })
}

/// `ω̃ := curl^Σ V`, divergence-free by construction.
pub fn make_divfree_vorticity(v: &VectorField3, d: &Diffeo) -> Result<VorticityData> {
    let omega = flat_curl(v, d);
    let mean = omega.0[2].bottom().mean();
    let tol = 1e-10 * omega.max_coef().max(1.0);
    if mean.abs() > tol {
        return Err(Error::BottomFluxNonzero { mean, tol });
    }
    Ok(VorticityData { omega })
}

fn phys_grad(f: &Field3, d: &Diffeo) -> [Vec<f64>; 3] {
    let g = flat_grad(f, d);
    [g.0[0].to_phys(), g.0[1].to_phys(), g.0[2].to_phys()]
}

/// Right-hand sides `(η_t, Φ_t, ω̃_t)` of the straightened Zakharov–Craig–Sulem
/// system with vorticity.
pub fn zcs_rhs(state: &SurfaceState, omega: &VorticityData, d: &Diffeo, opts: &SolverOpts, g: f64) -> Result<(Field2, Field2, VectorField3)> {
    let sol = gdno(state, omega, d, opts)?;
    Ok(zcs_rhs_from(state, omega, d, &sol, g))
}

pub fn zcs_rhs_from(state: &SurfaceState, omega: &VorticityData, d: &Diffeo, sol: &BVPSolution, g: f64) -> (Field2, Field2, VectorField3) {
    let hg = d.hgrid();
    let eta = &state.eta;
    let eta_t = sol.g.clone();
    let (ex, ey) = (eta.dx().to_phys(), eta.dy().to_phys());
    let (ux, uy, gp) = (sol.u_par.0[0].to_phys(), sol.u_par.0[1].to_phys(), sol.g.to_phys());
    let n = ex.len();
    let quad: Vec<f64> = (0..n)
        .map(|i| {
            let s = gp[i] + ex[i] * ux[i] + ey[i] * uy[i];
            -0.5 * (ux[i] * ux[i] + uy[i] * uy[i]) + s * s / (2.0 * (1.0 + ex[i] * ex[i] + ey[i] * ey[i]))
        })
        .collect();
    let nv = sol.v.scale_by(&sol.omega_n);
    let nl = VectorField2([nv.0[0].inv_laplacian_meanfree(), nv.0[1].inv_laplacian_meanfree()]).div_perp();
    let phi_t = &(&Field2::from_phys(hg, &quad).dealiased() - &eta.scale(g)) - &nl;

    let w = &omega.omega;
    if w.max_coef() == 0.0 {
        return (eta_t, phi_t, VectorField3::zeros(hg, d.vgrid()));
    }
    let st = d.mul_jinv(&d.sigma_of(&eta_t)).to_phys();
    let up: Vec<Vec<f64>> = sol.u.0.iter().map(|f| f.to_phys()).collect();
    let wp: Vec<Vec<f64>> = w.0.iter().map(|f| f.to_phys()).collect();
    let comps: Vec<Field3> = (0..3)
        .map(|c| {
            let gw = phys_grad(&w.0[c], d);
            let gu = phys_grad(&sol.u.0[c], d);
            let dw = w.0[c].dw().to_phys();
            let q: Vec<f64> = (0..dw.len())
                .map(|i| {
                    let adv: f64 = (0..3).map(|j| up[j][i] * gw[j][i]).sum();
                    let str_: f64 = (0..3).map(|j| wp[j][i] * gu[j][i]).sum();
                    st[i] * dw[i] - adv + str_
                })
                .collect();
            Field3::from_phys(hg, d.vgrid(), &q).dealiased()
        })
        .collect();
    let [a, b, c]: [Field3; 3] = comps.try_into().unwrap();
    (eta_t, phi_t, VectorField3([a, b, c]))
}

fn deriv2(f: &Field2, j: [u32; 2]) -> Field2 {
    let mut g = f.clone();
    for _ in 0..j[0] {
        g = g.dx();
    }
    for _ in 0..j[1] {
        g = g.dy();
    }
    g
}

fn deriv3(f: &Field3, j: [u32; 2]) -> Field3 {
    let mut g = f.clone();
    for _ in 0..j[0] {
        g = g.dx();
    }
    for _ in 0..j[1] {
        g = g.dy();
    }
    g
}

/// Good unknowns `Φ_(j) = ∂^jΦ - w̃_I ∂^jη`, `φ̃_(j) = ∂^jφ̃ - (∂^jσ)∂_w^Σφ̃`
/// and `Ã_(j) = ∂^jÃ - (∂^jσ)∂_w^ΣÃ`.
pub fn surface_good_unknowns(state: &SurfaceState, sol: &BVPSolution, d: &Diffeo, j: [u32; 2]) -> (Field2, Field3, VectorField3) {
    assert!(j[0] + j[1] >= 1, "multi-index must be nonzero");
    let dj_eta = deriv2(&state.eta, j);
    let big_phi = &deriv2(&state.phi, j) - &sol.w_irr.prod(&dj_eta);
    let djs = d.sigma_of(&dj_eta);
    let good = |f: &Field3| &deriv3(f, j) - &djs.prod(&d.dw(f));
    let a = VectorField3([good(&sol.a.0[0]), good(&sol.a.0[1]), good(&sol.a.0[2])]);
    (big_phi, good(&sol.phi), a)
}

/// Zero-mode coefficient of a field, for diagnostics.
pub fn zero_mode(f: &Field2) -> C64 {
    f.c[0]
}
