use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::Arc;

use num_complex::Complex64 as C64;

use super::grid::HGrid;
use crate::error::{Error, Result};

/// Default relative tolerance for the zero-mode check of `Δ⁻¹`.
pub const TOL_MEAN: f64 = 1e-10;

/// Real doubly periodic field held as Fourier coefficients,
/// `u(x) = Σ_k c_k e^{i ξ_k · x}`.
#[derive(Clone, Debug)]
pub struct Field2 {
    pub grid: Arc<HGrid>,
    pub c: Vec<C64>,
}

/// Pair of [`Field2`] components.
#[derive(Clone, Debug)]
pub struct VectorField2(pub [Field2; 2]);

impl Field2 {
    pub fn zeros(grid: &Arc<HGrid>) -> Self {
        Field2 { grid: grid.clone(), c: vec![C64::new(0.0, 0.0); grid.len()] }
    }

    pub fn constant(grid: &Arc<HGrid>, v: f64) -> Self {
        let mut f = Self::zeros(grid);
        f.c[0] = C64::new(v, 0.0);
        f
    }

    /// Samples `f(x, y)` on the physical grid.
    pub fn from_fn(grid: &Arc<HGrid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut p = Vec::with_capacity(grid.len());
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                p.push(f(grid.x(ix), grid.y(iy)));
            }
        }
        Self::from_phys(grid, &p)
    }

    pub fn from_phys(grid: &Arc<HGrid>, p: &[f64]) -> Self {
        assert_eq!(p.len(), grid.len());
        let mut c: Vec<C64> = p.iter().map(|&v| C64::new(v, 0.0)).collect();
        grid.forward(&mut c);
        Field2 { grid: grid.clone(), c }
    }

    pub fn to_phys(&self) -> Vec<f64> {
        let mut b = self.c.clone();
        self.grid.inverse(&mut b);
        b.into_iter().map(|z| z.re).collect()
    }

    /// Coefficient of the mode `(mx, my)`.
    pub fn coef(&self, mx: i64, my: i64) -> C64 {
        self.c[self.grid.index(mx, my)]
    }

    pub fn mean(&self) -> f64 {
        self.c[0].re
    }

    /// Physical-space `f(u)` followed by 2/3 truncation.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let p: Vec<f64> = self.to_phys().into_iter().map(f).collect();
        Self::from_phys(&self.grid, &p).dealiased()
    }

    /// Physical-space `f(u, v)` followed by 2/3 truncation.
    pub fn zip(&self, o: &Field2, f: impl Fn(f64, f64) -> f64) -> Self {
        let (a, b) = (self.to_phys(), o.to_phys());
        let p: Vec<f64> = a.iter().zip(&b).map(|(&x, &y)| f(x, y)).collect();
        Self::from_phys(&self.grid, &p).dealiased()
    }

    /// Dealiased pointwise product.
    pub fn prod(&self, o: &Field2) -> Self {
        self.zip(o, |a, b| a * b)
    }

    /// Product with physical samples, dealiased.
    pub fn mul_phys(&self, p: &[f64]) -> Self {
        let q: Vec<f64> = self.to_phys().iter().zip(p).map(|(a, b)| a * b).collect();
        Self::from_phys(&self.grid, &q).dealiased()
    }

    pub fn dealias(&mut self) {
        for k in 0..self.c.len() {
            if !self.grid.kept(k) {
                self.c[k] = C64::new(0.0, 0.0);
            }
        }
    }

    pub fn dealiased(mut self) -> Self {
        self.dealias();
        self
    }

    /// Mode-wise multiplication by `m(ξ)`; fails if `m` is not finite somewhere.
    pub fn apply_multiplier(&self, m: impl Fn([f64; 2]) -> C64) -> Result<Self> {
        let mut out = self.clone();
        for k in 0..out.c.len() {
            let v = m(self.grid.xi(k));
            if !v.re.is_finite() || !v.im.is_finite() {
                let (mx, my) = self.grid.modes(k);
                return Err(Error::InvalidMultiplier { mx, my });
            }
            out.c[k] *= v;
        }
        Ok(out)
    }

    /// Real multiplier of `|ξ|`, infallible variant for internal use.
    pub fn radial(&self, m: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        for k in 0..out.c.len() {
            out.c[k] *= m(self.grid.xi_abs(k));
        }
        out
    }

    pub fn dx(&self) -> Self {
        let mut out = self.clone();
        for k in 0..out.c.len() {
            out.c[k] *= C64::new(0.0, self.grid.xi_deriv(k)[0]);
        }
        out
    }

    pub fn dy(&self) -> Self {
        let mut out = self.clone();
        for k in 0..out.c.len() {
            out.c[k] *= C64::new(0.0, self.grid.xi_deriv(k)[1]);
        }
        out
    }

    pub fn grad(&self) -> VectorField2 {
        VectorField2([self.dx(), self.dy()])
    }

    /// `∇⊥u = (∂_y u, -∂_x u)`.
    pub fn grad_perp(&self) -> VectorField2 {
        VectorField2([self.dy(), -&self.dx()])
    }

    pub fn laplacian(&self) -> Self {
        let mut out = self.clone();
        for k in 0..out.c.len() {
            let [a, b] = self.grid.xi(k);
            out.c[k] *= -(a * a + b * b);
        }
        out
    }

    /// Mean-zero solution of `Δv = u`; the zero mode of `u` must vanish
    /// relative to `tol * ‖u‖`.
    pub fn inv_laplacian_tol(&self, tol: f64) -> Result<Self> {
        let scale = self.norm_l2().max(f64::MIN_POSITIVE);
        let mean = self.c[0].norm();
        if mean > tol * scale && mean > 1e-300 {
            return Err(Error::NonZeroMean { mean, tol });
        }
        Ok(self.inv_laplacian_meanfree())
    }

    pub fn inv_laplacian(&self) -> Result<Self> {
        self.inv_laplacian_tol(TOL_MEAN)
    }

    /// `Δ⁻¹` after discarding the zero mode.
    pub fn inv_laplacian_meanfree(&self) -> Self {
        let mut out = self.clone();
        for k in 0..out.c.len() {
            let [a, b] = self.grid.xi(k);
            let q = a * a + b * b;
            out.c[k] = if q == 0.0 { C64::new(0.0, 0.0) } else { out.c[k] / (-q) };
        }
        out
    }

    pub fn without_mean(&self) -> Self {
        let mut out = self.clone();
        out.c[0] = C64::new(0.0, 0.0);
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        Field2 { grid: self.grid.clone(), c: self.c.iter().map(|&z| z * s).collect() }
    }

    /// `(Σ |c_k|²)^{1/2}`, equal to the area-normalized `L²` norm.
    pub fn norm_l2(&self) -> f64 {
        self.c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let mut acc = 0.0;
        for k in 0..self.c.len() {
            let q = self.grid.xi_abs(k).powi(2);
            acc += (1.0 + q).powf(s) * self.c[k].norm_sqr();
        }
        acc.sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.to_phys().into_iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_phys(&self) -> f64 {
        self.to_phys().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// `max_k |c_k - conj(c_{-k})|`.
    pub fn hermitian_defect(&self) -> f64 {
        let g = &self.grid;
        let mut d: f64 = 0.0;
        for k in 0..self.c.len() {
            let (a, b) = g.modes(k);
            let j = g.index(-a, -b);
            d = d.max((self.c[k] - self.c[j].conj()).norm());
        }
        d
    }

    /// Inner product `⟨u, v⟩` as the area-normalized integral of `u v`.
    pub fn dot(&self, o: &Field2) -> f64 {
        self.c.iter().zip(&o.c).map(|(a, b)| (a * b.conj()).re).sum()
    }

    pub fn axpy(&mut self, a: f64, x: &Field2) {
        for (u, v) in self.c.iter_mut().zip(&x.c) {
            *u += v * a;
        }
    }
}

impl<'a> Add<&'a Field2> for &'a Field2 {
    type Output = Field2;
    fn add(self, o: &Field2) -> Field2 {
        Field2 { grid: self.grid.clone(), c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect() }
    }
}

impl<'a> Sub<&'a Field2> for &'a Field2 {
    type Output = Field2;
    fn sub(self, o: &Field2) -> Field2 {
        Field2 { grid: self.grid.clone(), c: self.c.iter().zip(&o.c).map(|(a, b)| a - b).collect() }
    }
}

impl Add for Field2 {
    type Output = Field2;
    fn add(self, o: Field2) -> Field2 {
        &self + &o
    }
}

impl Sub for Field2 {
    type Output = Field2;
    fn sub(self, o: Field2) -> Field2 {
        &self - &o
    }
}

impl AddAssign<&Field2> for Field2 {
    fn add_assign(&mut self, o: &Field2) {
        for (a, b) in self.c.iter_mut().zip(&o.c) {
            *a += b;
        }
    }
}

impl SubAssign<&Field2> for Field2 {
    fn sub_assign(&mut self, o: &Field2) {
        for (a, b) in self.c.iter_mut().zip(&o.c) {
            *a -= b;
        }
    }
}

impl Neg for &Field2 {
    type Output = Field2;
    fn neg(self) -> Field2 {
        self.scale(-1.0)
    }
}

impl Neg for Field2 {
    type Output = Field2;
    fn neg(self) -> Field2 {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &Field2 {
    type Output = Field2;
    fn mul(self, s: f64) -> Field2 {
        self.scale(s)
    }
}

impl Mul<f64> for Field2 {
    type Output = Field2;
    fn mul(self, s: f64) -> Field2 {
        self.scale(s)
    }
}

impl VectorField2 {
    pub fn zeros(grid: &Arc<HGrid>) -> Self {
        VectorField2([Field2::zeros(grid), Field2::zeros(grid)])
    }

    pub fn x(&self) -> &Field2 {
        &self.0[0]
    }

    pub fn y(&self) -> &Field2 {
        &self.0[1]
    }

    pub fn div(&self) -> Field2 {
        &self.0[0].dx() + &self.0[1].dy()
    }

    /// `∇⊥ · F = ∂_y F_1 - ∂_x F_2`.
    pub fn div_perp(&self) -> Field2 {
        &self.0[0].dy() - &self.0[1].dx()
    }

    /// `F^⊥ = (F_2, -F_1)`.
    pub fn perp(&self) -> Self {
        VectorField2([self.0[1].clone(), -&self.0[0]])
    }

    /// Dealiased pointwise dot product.
    pub fn dot(&self, o: &VectorField2) -> Field2 {
        let (a0, a1, b0, b1) = (self.0[0].to_phys(), self.0[1].to_phys(), o.0[0].to_phys(), o.0[1].to_phys());
        let p: Vec<f64> = (0..a0.len()).map(|j| a0[j] * b0[j] + a1[j] * b1[j]).collect();
        Field2::from_phys(&self.0[0].grid, &p).dealiased()
    }

    /// Dealiased product with a scalar.
    pub fn scale_by(&self, s: &Field2) -> Self {
        VectorField2([self.0[0].prod(s), self.0[1].prod(s)])
    }

    pub fn scale(&self, s: f64) -> Self {
        VectorField2([self.0[0].scale(s), self.0[1].scale(s)])
    }

    pub fn norm_l2(&self) -> f64 {
        self.0[0].norm_l2().hypot(self.0[1].norm_l2())
    }

    /// Zero-mode pair as a real vector.
    pub fn mean(&self) -> [f64; 2] {
        [self.0[0].mean(), self.0[1].mean()]
    }
}

impl<'a> Add<&'a VectorField2> for &'a VectorField2 {
    type Output = VectorField2;
    fn add(self, o: &VectorField2) -> VectorField2 {
        VectorField2([&self.0[0] + &o.0[0], &self.0[1] + &o.0[1]])
    }
}

impl<'a> Sub<&'a VectorField2> for &'a VectorField2 {
    type Output = VectorField2;
    fn sub(self, o: &VectorField2) -> VectorField2 {
        VectorField2([&self.0[0] - &o.0[0], &self.0[1] - &o.0[1]])
    }
}

impl Neg for &VectorField2 {
    type Output = VectorField2;
    fn neg(self) -> VectorField2 {
        VectorField2([-&self.0[0], -&self.0[1]])
    }
}

/// Helmholtz–Hodge split `F = ∇Φ + ∇⊥Ψ + mean` with mean-zero potentials.
pub fn hodge_decompose(f: &VectorField2) -> (Field2, Field2, [f64; 2]) {
    let mean = f.mean();
    let phi = f.div().inv_laplacian_meanfree();
    let psi = f.div_perp().inv_laplacian_meanfree();
    (phi, psi, mean)
}

/// Profile used for smoothing and cutoffs: equal to one on `|t| <= t0`,
/// zero for `|t| >= t1`, `C^∞` in between.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SmoothStep {
    pub t0: f64,
    pub t1: f64,
}

fn bump_tail(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

impl SmoothStep {
    pub fn new(t0: f64, t1: f64) -> Self {
        assert!(0.0 <= t0 && t0 < t1, "need 0 <= t0 < t1");
        SmoothStep { t0, t1 }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let a = t.abs();
        if a <= self.t0 {
            return 1.0;
        }
        if a >= self.t1 {
            return 0.0;
        }
        let s = (a - self.t0) / (self.t1 - self.t0);
        let (p, q) = (bump_tail(1.0 - s), bump_tail(s));
        p / (p + q)
    }

    pub fn deriv(&self, t: f64) -> f64 {
        let e = 1e-6 * (self.t1 - self.t0);
        (self.eval(t + e) - self.eval(t - e)) / (2.0 * e)
    }

    /// `‖f'‖_∞`, sampled on a fine grid of the transition band.
    pub fn deriv_sup(&self) -> f64 {
        let n = 20000;
        (0..=n)
            .map(|i| self.t0 + (self.t1 - self.t0) * i as f64 / n as f64)
            .map(|t| self.deriv(t).abs())
            .fold(0.0, f64::max)
    }
}

impl Default for SmoothStep {
    fn default() -> Self {
        SmoothStep { t0: 0.25, t1: 1.0 }
    }
}

/// `χ(δ w |ξ|) η̂` at depth `w`.
pub fn smoothing_op(eta: &Field2, delta: f64, w: f64, profile: &SmoothStep) -> Field2 {
    eta.radial(|k| profile.eval(delta * w * k))
}
