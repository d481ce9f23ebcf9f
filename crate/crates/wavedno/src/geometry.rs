//! Straightening maps of the fluid domain onto the flat strip and the
//! flattened differential operators they induce.
//!
//! A map is described by `z = w + σ(x′, w)` with `w ∈ [-h, 0]`. Writing
//! `J = 1 + ∂_wσ`, the flattened derivatives are
//! `∂_j^Σ = ∂_j - (∂_jσ / J) ∂_w` and `∂_w^Σ = ∂_w / J`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{smoothing_op, Field2, Field3, HGrid, SmoothStep, VGrid, VectorField3};

/// Smallest admissible value of `1 + ∂_wσ` on the grid.
pub const MIN_JACOBIAN: f64 = 1e-6;

/// Sobolev index used for the admissibility bound of the regularizing map.
pub const REG_SOBOLEV: f64 = 3.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiffeoKind {
    /// `σ = (1 + w/h) η`.
    Trivial,
    /// `σ = (1 + w/h) χ(δ w |D|) η`.
    Regularizing { delta: f64, profile: SmoothStep },
    /// Affine strip map `z = δ w + η`, so `σ = (δ - 1) w + η`.
    Strip { delta: f64 },
}

/// Physical samples of the coefficient fields, level-major.
#[derive(Clone, Debug)]
struct PhysCoeffs {
    jac: Vec<f64>,
    jinv: Vec<f64>,
    sx: Vec<f64>,
    sy: Vec<f64>,
    qx: Vec<f64>,
    qy: Vec<f64>,
    a_m1: Vec<f64>,
    b1: Vec<f64>,
    b2: Vec<f64>,
    c: Vec<f64>,
    pww: Vec<f64>,
}

/// A straightening map together with its cached derivative fields.
#[derive(Clone, Debug)]
pub struct Diffeo {
    pub kind: DiffeoKind,
    pub h: f64,
    pub eta: Field2,
    pub sigma: Field3,
    pub sx: Field3,
    pub sy: Field3,
    pub sw: Field3,
    /// Lower bound for `1 + ∂_wσ`: measured for the trivial and strip maps,
    /// the a priori bound for the regularizing map.
    pub c0: f64,
    /// Measured minimum of `1 + ∂_wσ` on the physical grid.
    pub jac_min: f64,
    phys: PhysCoeffs,
}

/// Coefficients of `Δ^Σ = a ∂_w² + Δ + b·∇∂_w - c ∂_w` and the matrix of the
/// divergence form `J⁻¹ ∇·(P ∇)`.
#[derive(Clone, Debug)]
pub struct FlatCoeffs {
    pub a: Field3,
    pub b: [Field3; 2],
    pub c: Field3,
    pub p: [[Field3; 3]; 3],
}

/// `min (h + η) ≥ h0` on the physical grid.
pub fn check_strict_connectedness(eta: &Field2, h: f64, h0: f64) -> bool {
    h + eta.min_phys() >= h0
}

/// Discrete analogue of `C(χ) = ‖χ′‖_∞ [Σ (1+|ξ|²)^{-(s-1)}]^{1/2}` on the grid.
pub fn reg_constant(hg: &HGrid, profile: &SmoothStep, s: f64) -> f64 {
    let sum: f64 = (0..hg.len()).map(|k| (1.0 + hg.xi_abs(k).powi(2)).powf(-(s - 1.0))).sum();
    profile.deriv_sup() * sum.sqrt()
}

/// Largest admissible `δ` for the regularizing map.
pub fn reg_delta_bound(eta: &Field2, h: f64, h0: f64, profile: &SmoothStep) -> f64 {
    let n = eta.sobolev_norm(REG_SOBOLEV);
    if n == 0.0 {
        return f64::INFINITY;
    }
    h0 / (h * reg_constant(&eta.grid, profile, REG_SOBOLEV) * n)
}

pub fn make_trivial_diffeo(eta: &Field2, vg: &Arc<VGrid>, h0: f64) -> Result<Diffeo> {
    let h = vg.h;
    check_depth(eta, h, h0)?;
    let prof = |w: f64| 1.0 + w / h;
    let (ex, ey) = (eta.dx(), eta.dy());
    let sigma = Field3::separable(eta, vg, prof);
    let sx = Field3::separable(&ex, vg, prof);
    let sy = Field3::separable(&ey, vg, prof);
    let sw = Field3::separable(eta, vg, |_| 1.0 / h);
    let sxw = Field3::separable(&ex, vg, |_| 1.0 / h);
    let syw = Field3::separable(&ey, vg, |_| 1.0 / h);
    let sww = Field3::zeros(&eta.grid, vg);
    let slap = Field3::separable(&eta.laplacian(), vg, prof);
    Diffeo::assemble(DiffeoKind::Trivial, eta, sigma, [sx, sy, sw, sxw, syw, sww, slap], None)
}

pub fn make_regularizing_diffeo(eta: &Field2, vg: &Arc<VGrid>, h0: f64, delta: f64, profile: SmoothStep) -> Result<Diffeo> {
    let h = vg.h;
    check_depth(eta, h, h0)?;
    let bound = reg_delta_bound(eta, h, h0, &profile);
    if !(delta > 0.0 && delta < bound) {
        return Err(Error::DeltaTooLarge { delta, bound });
    }
    let levels: Vec<Field2> = vg.nodes.iter().map(|&w| smoothing_op(eta, delta, w, &profile).scale(1.0 + w / h)).collect();
    let sigma = Field3::from_levels(vg, &levels);
    let sx = sigma.dx();
    let sy = sigma.dy();
    let sw = sigma.dw();
    let sxw = sw.dx();
    let syw = sw.dy();
    let sww = sigma.dww();
    let slap = sigma.lap_h();
    // J ≥ 1 + min η^δ / h - δ C ‖η‖_{H^s}; the smoothed elevation replaces h0.
    let smin = levels.iter().zip(&vg.nodes).map(|(l, &w)| if w == -h { 0.0 } else { l.min_phys() / (1.0 + w / h) }).fold(f64::INFINITY, f64::min);
    let floor = (h0 / h).min(1.0 + smin.min(0.0) / h);
    let c0 = floor - delta * reg_constant(&eta.grid, &profile, REG_SOBOLEV) * eta.sobolev_norm(REG_SOBOLEV);
    Diffeo::assemble(DiffeoKind::Regularizing { delta, profile }, eta, sigma, [sx, sy, sw, sxw, syw, sww, slap], Some(c0))
}

/// Affine map `z = δ w + η` used for localization near the surface.
pub fn make_strip_diffeo(eta: &Field2, vg: &Arc<VGrid>, delta: f64) -> Result<Diffeo> {
    let hg = &eta.grid;
    let sigma = Field3::separable(eta, vg, |_| 1.0) + &Field3::separable(&Field2::constant(hg, 1.0), vg, |w| (delta - 1.0) * w);
    let sx = Field3::broadcast(&eta.dx(), vg);
    let sy = Field3::broadcast(&eta.dy(), vg);
    let sw = Field3::broadcast(&Field2::constant(hg, delta - 1.0), vg);
    let z = Field3::zeros(hg, vg);
    let slap = Field3::broadcast(&eta.laplacian(), vg);
    Diffeo::assemble(DiffeoKind::Strip { delta }, eta, sigma, [sx, sy, sw, z.clone(), z.clone(), z, slap], None)
}

fn check_depth(eta: &Field2, h: f64, h0: f64) -> Result<()> {
    if !check_strict_connectedness(eta, h, h0) {
        return Err(Error::StrictConnectednessViolated { min_depth: h + eta.min_phys(), h0 });
    }
    Ok(())
}

impl Diffeo {
    fn assemble(kind: DiffeoKind, eta: &Field2, sigma: Field3, d: [Field3; 7], c0: Option<f64>) -> Result<Self> {
        let [sx, sy, sw, sxw, syw, sww, slap] = d;
        let h = sigma.vg.h;
        let p = |f: &Field3| f.to_phys();
        let (psx, psy, psw, psxw, psyw, psww, plap) = (p(&sx), p(&sy), p(&sw), p(&sxw), p(&syw), p(&sww), p(&slap));
        let n = psx.len();
        let mut pc = PhysCoeffs {
            jac: vec![0.0; n],
            jinv: vec![0.0; n],
            sx: psx.clone(),
            sy: psy.clone(),
            qx: vec![0.0; n],
            qy: vec![0.0; n],
            a_m1: vec![0.0; n],
            b1: vec![0.0; n],
            b2: vec![0.0; n],
            c: vec![0.0; n],
            pww: vec![0.0; n],
        };
        let mut jmin = f64::INFINITY;
        for i in 0..n {
            let j = 1.0 + psw[i];
            jmin = jmin.min(j);
            let g2 = psx[i] * psx[i] + psy[i] * psy[i];
            pc.jac[i] = j;
            pc.jinv[i] = 1.0 / j;
            pc.qx[i] = psx[i] / j;
            pc.qy[i] = psy[i] / j;
            pc.a_m1[i] = (g2 - psw[i] * (2.0 + psw[i])) / (j * j);
            pc.b1[i] = -2.0 * psx[i] / j;
            pc.b2[i] = -2.0 * psy[i] / j;
            let a = (1.0 + g2) / (j * j);
            pc.c[i] = (plap[i] + pc.b1[i] * psxw[i] + pc.b2[i] * psyw[i] + a * psww[i]) / j;
            pc.pww[i] = (1.0 + g2) / j;
        }
        if !(jmin >= MIN_JACOBIAN) {
            return Err(Error::DegenerateJacobian { min_jac: jmin });
        }
        Ok(Diffeo { kind, h, eta: eta.clone(), sigma, sx, sy, sw, c0: c0.unwrap_or(jmin), jac_min: jmin, phys: pc })
    }

    /// True when `σ` vanishes identically on the grid.
    pub fn is_flat(&self) -> bool {
        self.sigma.max_coef() == 0.0 && matches!(self.kind, DiffeoKind::Trivial | DiffeoKind::Regularizing { .. })
    }

    /// The linear part of the map applied to another surface field: the
    /// `σ` this map would build from `f`, without the affine offset of the
    /// strip map. Used for `∂_tσ` and `∂^jσ`.
    pub fn sigma_of(&self, f: &Field2) -> Field3 {
        let vg = self.vgrid();
        let h = self.h;
        match &self.kind {
            DiffeoKind::Trivial => Field3::separable(f, vg, |w| 1.0 + w / h),
            DiffeoKind::Regularizing { delta, profile } => {
                let levels: Vec<Field2> = vg.nodes.iter().map(|&w| smoothing_op(f, *delta, w, profile).scale(1.0 + w / h)).collect();
                Field3::from_levels(vg, &levels)
            }
            DiffeoKind::Strip { .. } => Field3::broadcast(f, vg),
        }
    }

    /// `1 + ∂_wσ` at the surface.
    pub fn surface_jac(&self) -> Field2 {
        let n = self.hgrid().len();
        let l = self.vgrid().nw - 1;
        Field2::from_phys(self.hgrid(), &self.phys.jac[l * n..(l + 1) * n])
    }

    pub fn hgrid(&self) -> &Arc<HGrid> {
        &self.sigma.hg
    }

    pub fn vgrid(&self) -> &Arc<VGrid> {
        &self.sigma.vg
    }

    /// `∂_wσ` on the strip, as used by the straightened transport term.
    pub fn sigma_w(&self) -> &Field3 {
        &self.sw
    }

    /// `1 / (1 + ∂_wσ)` as a field.
    pub fn jac_inv(&self) -> Field3 {
        Field3::from_phys(self.hgrid(), self.vgrid(), &self.phys.jinv).dealiased()
    }

    /// Product with the physical samples of `1 / J`.
    pub fn mul_jinv(&self, f: &Field3) -> Field3 {
        f.mul_phys(&self.phys.jinv)
    }

    pub fn dx(&self, f: &Field3) -> Field3 {
        &f.dx() - &f.dw().mul_phys(&self.phys.qx)
    }

    pub fn dy(&self, f: &Field3) -> Field3 {
        &f.dy() - &f.dw().mul_phys(&self.phys.qy)
    }

    pub fn dw(&self, f: &Field3) -> Field3 {
        f.dw().mul_phys(&self.phys.jinv)
    }

    /// `Δ^Σ f - Δ_{x′,w} f = (a-1)∂_w² f + b·∇∂_w f - c ∂_w f`.
    pub fn laplacian_defect(&self, f: &Field3) -> Field3 {
        let fw = f.dw();
        let pc = &self.phys;
        let (a0, a1, a2, a3) = (f.dww().to_phys(), fw.dx().to_phys(), fw.dy().to_phys(), fw.to_phys());
        let q: Vec<f64> = (0..a0.len()).map(|i| pc.a_m1[i] * a0[i] + pc.b1[i] * a1[i] + pc.b2[i] * a2[i] - pc.c[i] * a3[i]).collect();
        Field3::from_phys(&f.hg, &f.vg, &q).dealiased()
    }
}

pub fn flat_grad(f: &Field3, d: &Diffeo) -> VectorField3 {
    VectorField3([d.dx(f), d.dy(f), d.dw(f)])
}

pub fn flat_div(v: &VectorField3, d: &Diffeo) -> Field3 {
    let [f1, f2, f3] = &v.0;
    let s = &f1.dx() + &f2.dy();
    let pc = &d.phys;
    let (w1, w2, w3) = (f1.dw().to_phys(), f2.dw().to_phys(), f3.dw().to_phys());
    let q: Vec<f64> = (0..w1.len()).map(|i| (w3[i] - pc.sx[i] * w1[i] - pc.sy[i] * w2[i]) * pc.jinv[i]).collect();
    &s + &Field3::from_phys(&f1.hg, &f1.vg, &q).dealiased()
}

pub fn flat_curl(v: &VectorField3, d: &Diffeo) -> VectorField3 {
    let [f1, f2, f3] = &v.0;
    VectorField3([&d.dy(f3) - &d.dw(f2), &d.dw(f1) - &d.dx(f3), &d.dx(f2) - &d.dy(f1)])
}

/// Ordinary curl on the flat strip.
pub fn curl(v: &VectorField3) -> VectorField3 {
    let [f1, f2, f3] = &v.0;
    VectorField3([&f3.dy() - &f2.dw(), &f1.dw() - &f3.dx(), &f2.dx() - &f1.dy()])
}

/// Coefficient form `a ∂_w² + Δ + b·∇∂_w - c ∂_w`.
pub fn flat_laplacian(f: &Field3, d: &Diffeo) -> Field3 {
    &(&f.lap_h() + &f.dww()) + &d.laplacian_defect(f)
}

/// Divergence form `J⁻¹ ∇_{x′,w}·(P ∇_{x′,w} f)`.
pub fn flat_laplacian_div(f: &Field3, d: &Diffeo) -> Field3 {
    let pc = &d.phys;
    let (fx, fy, fw) = (f.dx().to_phys(), f.dy().to_phys(), f.dw().to_phys());
    let n = fx.len();
    let g1: Vec<f64> = (0..n).map(|i| pc.jac[i] * fx[i] - pc.sx[i] * fw[i]).collect();
    let g2: Vec<f64> = (0..n).map(|i| pc.jac[i] * fy[i] - pc.sy[i] * fw[i]).collect();
    let g3: Vec<f64> = (0..n).map(|i| -pc.sx[i] * fx[i] - pc.sy[i] * fy[i] + pc.pww[i] * fw[i]).collect();
    let (hg, vg) = (&f.hg, &f.vg);
    let s = &(&Field3::from_phys(hg, vg, &g1).dx() + &Field3::from_phys(hg, vg, &g2).dy()) + &Field3::from_phys(hg, vg, &g3).dw();
    s.mul_phys(&pc.jinv)
}

pub fn flat_coeffs(d: &Diffeo) -> FlatCoeffs {
    let (hg, vg) = (d.hgrid(), d.vgrid());
    let pc = &d.phys;
    let f = |v: Vec<f64>| Field3::from_phys(hg, vg, &v).dealiased();
    let a = f(pc.a_m1.iter().map(|v| 1.0 + v).collect());
    let msx = f(pc.sx.iter().map(|v| -v).collect());
    let msy = f(pc.sy.iter().map(|v| -v).collect());
    let jac = f(pc.jac.clone());
    let zero = Field3::zeros(hg, vg);
    let p = [
        [jac.clone(), zero.clone(), msx.clone()],
        [zero, jac, msy.clone()],
        [msx, msy, f(pc.pww.clone())],
    ];
    FlatCoeffs { a, b: [f(pc.b1.clone()), f(pc.b2.clone())], c: f(pc.c.clone()), p }
}

/// Resamples a field given on the strip of `from` onto the strip of `to`
/// by matching physical heights column by column.
pub fn resample(f: &Field3, from: &Diffeo, to: &Diffeo) -> Field3 {
    let (hg, vg) = (f.hg.clone(), f.vg.clone());
    let n = hg.len();
    let nw = vg.nw;
    let pf = f.to_phys();
    let zt = to_heights(to);
    let sf = from.sigma.to_phys();
    let mut out = vec![0.0; n * nw];
    for p in 0..n {
        let heights: Vec<f64> = (0..nw).map(|l| vg.nodes[l] + sf[l * n + p]).collect();
        let vals: Vec<f64> = (0..nw).map(|l| pf[l * n + p]).collect();
        for l in 0..nw {
            let w = invert_height(&heights, &vg, zt[l * n + p]);
            out[l * n + p] = vg.interpolate(&vals, w);
        }
    }
    Field3::from_phys(&hg, &vg, &out)
}

fn to_heights(d: &Diffeo) -> Vec<f64> {
    let s = d.sigma.to_phys();
    let vg = d.vgrid();
    let n = d.hgrid().len();
    (0..s.len()).map(|i| vg.nodes[i / n] + s[i]).collect()
}

/// Solves `w + σ(w) = z` for `w` on one column by Newton iteration on the
/// Chebyshev interpolant.
fn invert_height(heights: &[f64], vg: &VGrid, z: f64) -> f64 {
    let h = vg.h;
    let (z0, z1) = (heights[0], heights[vg.nw - 1]);
    let mut w = -h + (z - z0) / (z1 - z0) * h;
    let dh: Vec<f64> = {
        let d = vg.d1();
        (0..vg.nw).map(|i| (0..vg.nw).map(|j| d[i * vg.nw + j] * heights[j]).sum()).collect()
    };
    for _ in 0..50 {
        let f = vg.interpolate(heights, w) - z;
        let fp = vg.interpolate(&dh, w);
        let step = f / fp;
        w -= step;
        if step.abs() < 1e-15 * h {
            break;
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grids(n: usize, nw: usize) -> (Arc<HGrid>, Arc<VGrid>) {
        (HGrid::square(n), VGrid::new(1.0, nw))
    }

    #[test]
    fn trivial_pins_bottom_and_surface() {
        let (hg, vg) = grids(16, 17);
        let eta = Field2::from_fn(&hg, |x, _| 0.1 * x.cos());
        let d = make_trivial_diffeo(&eta, &vg, 0.5).unwrap();
        assert!(d.sigma.bottom().norm_l2() < 1e-15);
        assert!((&d.sigma.surface() - &eta).norm_l2() < 1e-15);
        let z = make_trivial_diffeo(&Field2::zeros(&hg), &vg, 0.5).unwrap();
        assert_eq!(z.sigma.max_coef(), 0.0);
        assert_eq!(z.sw.max_coef(), 0.0);
    }

    #[test]
    fn strict_connectedness_examples() {
        let hg = HGrid::square(16);
        assert!(check_strict_connectedness(&Field2::zeros(&hg), 1.0, 0.5));
        assert!(!check_strict_connectedness(&Field2::constant(&hg, -0.96), 1.0, 0.1));
        assert!(check_strict_connectedness(&Field2::from_fn(&hg, |x, _| 0.3 * x.cos()), 1.0, 0.5));
        let vg = VGrid::new(1.0, 9);
        let e = make_trivial_diffeo(&Field2::constant(&hg, -0.96), &vg, 0.1).unwrap_err();
        assert!(matches!(e, Error::StrictConnectednessViolated { .. }));
    }

    #[test]
    fn flat_operators_at_rest() {
        let (hg, vg) = grids(16, 17);
        let d = make_trivial_diffeo(&Field2::zeros(&hg), &vg, 0.5).unwrap();
        let f = Field3::from_fn(&hg, &vg, |_, _, w| w);
        let g = flat_grad(&f, &d);
        assert!(g.0[0].max_coef() < 1e-14 && g.0[1].max_coef() < 1e-14);
        assert_abs_diff_eq!(g.0[2].level(3).mean(), 1.0, epsilon = 1e-12);
        let v = VectorField3([
            Field3::from_fn(&hg, &vg, |x, y, w| (x + w).sin() * y.cos()),
            Field3::from_fn(&hg, &vg, |x, _, w| x.cos() * w * w),
            Field3::from_fn(&hg, &vg, |_, y, w| (2.0 * y).sin() * (w).exp()),
        ]);
        assert!((&flat_curl(&v, &d) - &curl(&v)).max_coef() < 1e-14);
        let c = flat_coeffs(&d);
        assert!((c.a.level(2).mean() - 1.0).abs() < 1e-15 && c.b[0].max_coef() == 0.0 && c.c.max_coef() == 0.0);
    }

    #[test]
    fn curl_of_flat_gradient_vanishes() {
        let (hg, vg) = grids(32, 32);
        let eta = Field2::from_fn(&hg, |x, y| 0.08 * x.cos() + 0.04 * (x + y).sin());
        let d = make_trivial_diffeo(&eta, &vg, 0.5).unwrap();
        let g = Field3::from_fn(&hg, &vg, |x, y, w| (x - y).sin() * (0.5 * w).cosh() + w * w * y.cos());
        let c = flat_curl(&flat_grad(&g, &d), &d);
        assert!(c.max_coef() < 1e-10, "{}", c.max_coef());
    }

    #[test]
    fn laplacian_forms_agree() {
        let (hg, vg) = grids(32, 32);
        let eta = Field2::from_fn(&hg, |x, y| 0.1 * (x + 0.3).cos() * y.sin() + 0.05 * (2.0 * y).cos());
        for d in [
            make_trivial_diffeo(&eta, &vg, 0.5).unwrap(),
            make_regularizing_diffeo(&eta, &vg, 0.5, 0.05, SmoothStep::default()).unwrap(),
        ] {
            let f = Field3::from_fn(&hg, &vg, |x, y, w| (x + 2.0 * y).cos() * (w + 0.3).exp() + y.sin() * w * w);
            let a = flat_laplacian(&f, &d);
            let b = flat_laplacian_div(&f, &d);
            assert!((&a - &b).max_coef() < 1e-8, "{}", (&a - &b).max_coef());
        }
    }

    #[test]
    fn chain_rule_against_composed_function() {
        let (hg, vg) = grids(32, 24);
        let eta = Field2::from_fn(&hg, |x, _| 0.1 * x.cos());
        let d = make_trivial_diffeo(&eta, &vg, 0.5).unwrap();
        // f(x, z) = sin x e^z composed with z = w + (1 + w) η.
        let z = |x: f64, w: f64| w + (1.0 + w) * 0.1 * x.cos();
        let ft = Field3::from_fn(&hg, &vg, |x, _, w| x.sin() * z(x, w).exp());
        let g = flat_grad(&ft, &d);
        let want_x = Field3::from_fn(&hg, &vg, |x, _, w| x.cos() * z(x, w).exp());
        let want_z = Field3::from_fn(&hg, &vg, |x, _, w| x.sin() * z(x, w).exp());
        assert!((&g.0[0] - &want_x).max_coef() < 1e-9);
        assert!((&g.0[2] - &want_z).max_coef() < 1e-9);
    }

    #[test]
    fn regularizing_limits() {
        let (hg, vg) = grids(16, 17);
        let eta = Field2::from_fn(&hg, |x, y| 0.1 * x.cos() + 0.05 * (2.0 * y).sin());
        let r = make_regularizing_diffeo(&eta, &vg, 0.5, 1e-4, SmoothStep::default()).unwrap();
        let t = make_trivial_diffeo(&eta, &vg, 0.5).unwrap();
        assert!((&r.sigma - &t.sigma).max_coef() < 1e-10);
        let z = make_regularizing_diffeo(&Field2::zeros(&hg), &vg, 0.5, 0.3, SmoothStep::default()).unwrap();
        assert_eq!(z.sigma.max_coef(), 0.0);
        let bound = reg_delta_bound(&eta, 1.0, 0.5, &SmoothStep::default());
        let e = make_regularizing_diffeo(&eta, &vg, 0.5, 1.01 * bound, SmoothStep::default()).unwrap_err();
        assert!(matches!(e, Error::DeltaTooLarge { .. }));
        let ok = make_regularizing_diffeo(&eta, &vg, 0.5, 0.9 * bound, SmoothStep::default()).unwrap();
        assert!(ok.c0 > 0.0 && ok.jac_min >= ok.c0);
    }

    #[test]
    fn regularizing_kills_high_mode_at_depth() {
        let (hg, vg) = grids(32, 17);
        let mut eta = Field2::zeros(&hg);
        eta.c[hg.index(8, 0)] = 0.5e-3.into();
        eta.c[hg.index(-8, 0)] = 0.5e-3.into();
        let d = make_regularizing_diffeo(&eta, &vg, 0.5, 0.25, SmoothStep::default()).unwrap();
        // δ|w||ξ| = 0.25·|w|·8 ≥ 1 once |w| ≥ 0.5.
        for (l, &w) in vg.nodes.iter().enumerate() {
            if w <= -0.5 {
                assert_eq!(d.sigma.level(l).norm_l2(), 0.0);
            }
        }
    }

    #[test]
    fn strip_map_is_affine() {
        let (hg, vg) = grids(16, 17);
        let eta = Field2::from_fn(&hg, |x, _| 0.1 * x.cos());
        let d = make_strip_diffeo(&eta, &vg, 0.4).unwrap();
        assert_abs_diff_eq!(d.jac_min, 0.4, epsilon = 1e-14);
        let f = Field3::from_fn(&hg, &vg, |x, _, w| x.sin() * w);
        let g = d.dw(&f);
        let want = Field3::from_fn(&hg, &vg, |x, _, _| x.sin() / 0.4);
        assert!((&g - &want).max_coef() < 1e-12);
    }

    #[test]
    fn resample_identity_and_linear() {
        let (hg, vg) = grids(16, 24);
        let eta = Field2::from_fn(&hg, |x, _| 0.05 * x.cos());
        let t = make_trivial_diffeo(&eta, &vg, 0.5).unwrap();
        let s = make_strip_diffeo(&eta, &vg, 0.6).unwrap();
        // f(z) = z on the trivial strip resampled to the affine strip gives δw + η.
        let zf = Field3::from_fn(&hg, &vg, |x, _, w| w + (1.0 + w) * 0.05 * x.cos());
        let r = resample(&zf, &t, &s);
        let want = Field3::from_fn(&hg, &vg, |x, _, w| 0.6 * w + 0.05 * x.cos());
        assert!((&r - &want).max_coef() < 1e-12);
        let back = resample(&r, &s, &s);
        assert!((&back - &r).max_coef() < 1e-13);
    }
}
