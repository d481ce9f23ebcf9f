use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::field2::{Field2, VectorField2};
use super::grid::HGrid;
use super::vertical::VGrid;

/// Field on the flat strip: horizontal coefficients at each vertical node,
/// stored level-major (`c[l * n_modes + k]`).
#[derive(Clone, Debug)]
pub struct Field3 {
    pub hg: Arc<HGrid>,
    pub vg: Arc<VGrid>,
    pub c: Vec<C64>,
}

#[derive(Clone, Debug)]
pub struct VectorField3(pub [Field3; 3]);

impl Field3 {
    pub fn zeros(hg: &Arc<HGrid>, vg: &Arc<VGrid>) -> Self {
        Field3 { hg: hg.clone(), vg: vg.clone(), c: vec![C64::new(0.0, 0.0); hg.len() * vg.nw] }
    }

    pub fn from_fn(hg: &Arc<HGrid>, vg: &Arc<VGrid>, f: impl Fn(f64, f64, f64) -> f64 + Sync) -> Self {
        let levels: Vec<Field2> = vg.nodes.iter().map(|&w| Field2::from_fn(hg, |x, y| f(x, y, w))).collect();
        Self::from_levels(vg, &levels)
    }

    /// `f(w) * u(x, y)`.
    pub fn separable(u: &Field2, vg: &Arc<VGrid>, f: impl Fn(f64) -> f64) -> Self {
        let levels: Vec<Field2> = vg.nodes.iter().map(|&w| u.scale(f(w))).collect();
        Self::from_levels(vg, &levels)
    }

    pub fn from_levels(vg: &Arc<VGrid>, levels: &[Field2]) -> Self {
        assert_eq!(levels.len(), vg.nw);
        let hg = levels[0].grid.clone();
        let mut c = Vec::with_capacity(hg.len() * vg.nw);
        for l in levels {
            c.extend_from_slice(&l.c);
        }
        Field3 { hg, vg: vg.clone(), c }
    }

    pub fn n_modes(&self) -> usize {
        self.hg.len()
    }

    pub fn level_slice(&self, l: usize) -> &[C64] {
        let n = self.n_modes();
        &self.c[l * n..(l + 1) * n]
    }

    pub fn level(&self, l: usize) -> Field2 {
        Field2 { grid: self.hg.clone(), c: self.level_slice(l).to_vec() }
    }

    pub fn set_level(&mut self, l: usize, f: &Field2) {
        let n = self.n_modes();
        self.c[l * n..(l + 1) * n].copy_from_slice(&f.c);
    }

    pub fn surface(&self) -> Field2 {
        self.level(self.vg.nw - 1)
    }

    pub fn bottom(&self) -> Field2 {
        self.level(0)
    }

    /// Vertical profile of mode `k`.
    pub fn column(&self, k: usize) -> Vec<C64> {
        let n = self.n_modes();
        (0..self.vg.nw).map(|l| self.c[l * n + k]).collect()
    }

    pub fn set_column(&mut self, k: usize, col: &[C64]) {
        let n = self.n_modes();
        for (l, v) in col.iter().enumerate() {
            self.c[l * n + k] = *v;
        }
    }

    fn map_modes(&self, f: impl Fn(usize) -> C64 + Sync) -> Self {
        let n = self.n_modes();
        let mut out = self.clone();
        out.c.par_chunks_mut(n).for_each(|lev| {
            for (k, v) in lev.iter_mut().enumerate() {
                *v *= f(k);
            }
        });
        out
    }

    pub fn dx(&self) -> Self {
        let g = self.hg.clone();
        self.map_modes(move |k| C64::new(0.0, g.xi_deriv(k)[0]))
    }

    pub fn dy(&self) -> Self {
        let g = self.hg.clone();
        self.map_modes(move |k| C64::new(0.0, g.xi_deriv(k)[1]))
    }

    pub fn lap_h(&self) -> Self {
        let g = self.hg.clone();
        self.map_modes(move |k| C64::new(-g.xi_abs(k).powi(2), 0.0))
    }

    fn apply_vertical(&self, m: &[f64]) -> Self {
        let (n, nw) = (self.n_modes(), self.vg.nw);
        let mut out = Field3::zeros(&self.hg, &self.vg);
        out.c.par_chunks_mut(n).enumerate().for_each(|(i, lev)| {
            for j in 0..nw {
                let a = m[i * nw + j];
                if a != 0.0 {
                    let src = &self.c[j * n..(j + 1) * n];
                    for (o, s) in lev.iter_mut().zip(src) {
                        *o += s * a;
                    }
                }
            }
        });
        out
    }

    pub fn dw(&self) -> Self {
        self.apply_vertical(self.vg.d1())
    }

    pub fn dww(&self) -> Self {
        self.apply_vertical(self.vg.d2())
    }

    /// Physical samples, level-major.
    pub fn to_phys(&self) -> Vec<f64> {
        let n = self.n_modes();
        let mut out = vec![0.0; n * self.vg.nw];
        out.par_chunks_mut(n).enumerate().for_each(|(l, o)| {
            let mut b = self.level_slice(l).to_vec();
            self.hg.inverse(&mut b);
            for (d, s) in o.iter_mut().zip(&b) {
                *d = s.re;
            }
        });
        out
    }

    pub fn from_phys(hg: &Arc<HGrid>, vg: &Arc<VGrid>, p: &[f64]) -> Self {
        let n = hg.len();
        assert_eq!(p.len(), n * vg.nw);
        let mut c = vec![C64::new(0.0, 0.0); n * vg.nw];
        c.par_chunks_mut(n).enumerate().for_each(|(l, o)| {
            for (d, s) in o.iter_mut().zip(&p[l * n..(l + 1) * n]) {
                *d = C64::new(*s, 0.0);
            }
            hg.forward(o);
        });
        Field3 { hg: hg.clone(), vg: vg.clone(), c }
    }

    pub fn dealias(&mut self) {
        let n = self.n_modes();
        let g = self.hg.clone();
        self.c.par_chunks_mut(n).for_each(|lev| {
            for (k, v) in lev.iter_mut().enumerate() {
                if !g.kept(k) {
                    *v = C64::new(0.0, 0.0);
                }
            }
        });
    }

    pub fn dealiased(mut self) -> Self {
        self.dealias();
        self
    }

    pub fn prod(&self, o: &Field3) -> Self {
        let (a, b) = (self.to_phys(), o.to_phys());
        let p: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        Field3::from_phys(&self.hg, &self.vg, &p).dealiased()
    }

    /// Product with physical samples `p` (level-major), dealiased.
    pub fn mul_phys(&self, p: &[f64]) -> Self {
        let a = self.to_phys();
        let q: Vec<f64> = a.iter().zip(p).map(|(x, y)| x * y).collect();
        Field3::from_phys(&self.hg, &self.vg, &q).dealiased()
    }

    /// Product with a horizontal field, broadcast over depth.
    pub fn prod2(&self, f: &Field2) -> Self {
        let a = self.to_phys();
        let b = f.to_phys();
        let n = b.len();
        let p: Vec<f64> = a.iter().enumerate().map(|(i, x)| x * b[i % n]).collect();
        Field3::from_phys(&self.hg, &self.vg, &p).dealiased()
    }

    /// Multiplication of level `l` by `s[l]`.
    pub fn scale_levels(&self, s: &[f64]) -> Self {
        let n = self.n_modes();
        let mut out = self.clone();
        for (l, lev) in out.c.chunks_mut(n).enumerate() {
            for v in lev.iter_mut() {
                *v *= s[l];
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        for v in out.c.iter_mut() {
            *v *= s;
        }
        out
    }

    pub fn broadcast(f: &Field2, vg: &Arc<VGrid>) -> Self {
        Self::separable(f, vg, |_| 1.0)
    }

    /// `(∫ Σ_k |c_k(w)|² dw)^{1/2}`.
    pub fn norm_l2(&self) -> f64 {
        self.sobolev_norm(0.0)
    }

    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let n = self.n_modes();
        let mut acc = 0.0;
        for l in 0..self.vg.nw {
            let lev = self.level_slice(l);
            let mut t = 0.0;
            for (k, z) in lev.iter().enumerate() {
                t += (1.0 + self.hg.xi_abs(k).powi(2)).powf(s) * z.norm_sqr();
            }
            acc += self.vg.weights[l] * t;
        }
        let _ = n;
        acc.sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.to_phys().into_iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_coef(&self) -> f64 {
        self.c.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn axpy(&mut self, a: f64, x: &Field3) {
        for (u, v) in self.c.iter_mut().zip(&x.c) {
            *u += v * a;
        }
    }

    /// Value at an arbitrary depth by Chebyshev interpolation.
    pub fn at_depth(&self, w: f64) -> Field2 {
        let row = self.vg.lagrange_row(w);
        let n = self.n_modes();
        let mut out = Field2::zeros(&self.hg);
        for (l, &r) in row.iter().enumerate() {
            if r != 0.0 {
                for k in 0..n {
                    out.c[k] += self.c[l * n + k] * r;
                }
            }
        }
        out
    }
}

impl<'a> Add<&'a Field3> for &'a Field3 {
    type Output = Field3;
    fn add(self, o: &Field3) -> Field3 {
        Field3 { hg: self.hg.clone(), vg: self.vg.clone(), c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect() }
    }
}

impl<'a> Sub<&'a Field3> for &'a Field3 {
    type Output = Field3;
    fn sub(self, o: &Field3) -> Field3 {
        Field3 { hg: self.hg.clone(), vg: self.vg.clone(), c: self.c.iter().zip(&o.c).map(|(a, b)| a - b).collect() }
    }
}

impl Add<&Field3> for Field3 {
    type Output = Field3;
    fn add(self, o: &Field3) -> Field3 {
        &self + o
    }
}

impl Neg for &Field3 {
    type Output = Field3;
    fn neg(self) -> Field3 {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &Field3 {
    type Output = Field3;
    fn mul(self, s: f64) -> Field3 {
        self.scale(s)
    }
}

impl VectorField3 {
    pub fn new(a: Field3, b: Field3, c: Field3) -> Self {
        VectorField3([a, b, c])
    }

    pub fn zeros(hg: &Arc<HGrid>, vg: &Arc<VGrid>) -> Self {
        VectorField3([Field3::zeros(hg, vg), Field3::zeros(hg, vg), Field3::zeros(hg, vg)])
    }

    pub fn surface(&self) -> [Field2; 3] {
        [self.0[0].surface(), self.0[1].surface(), self.0[2].surface()]
    }

    pub fn bottom(&self) -> [Field2; 3] {
        [self.0[0].bottom(), self.0[1].bottom(), self.0[2].bottom()]
    }

    pub fn surface_h(&self) -> VectorField2 {
        VectorField2([self.0[0].surface(), self.0[1].surface()])
    }

    pub fn norm_l2(&self) -> f64 {
        self.0.iter().map(|f| f.norm_l2().powi(2)).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        VectorField3([self.0[0].scale(s), self.0[1].scale(s), self.0[2].scale(s)])
    }

    pub fn max_coef(&self) -> f64 {
        self.0.iter().map(|f| f.max_coef()).fold(0.0, f64::max)
    }

    pub fn dw(&self) -> Self {
        VectorField3([self.0[0].dw(), self.0[1].dw(), self.0[2].dw()])
    }

    pub fn dealiased(self) -> Self {
        let [a, b, c] = self.0;
        VectorField3([a.dealiased(), b.dealiased(), c.dealiased()])
    }
}

impl<'a> Add<&'a VectorField3> for &'a VectorField3 {
    type Output = VectorField3;
    fn add(self, o: &VectorField3) -> VectorField3 {
        VectorField3([&self.0[0] + &o.0[0], &self.0[1] + &o.0[1], &self.0[2] + &o.0[2]])
    }
}

impl<'a> Sub<&'a VectorField3> for &'a VectorField3 {
    type Output = VectorField3;
    fn sub(self, o: &VectorField3) -> VectorField3 {
        VectorField3([&self.0[0] - &o.0[0], &self.0[1] - &o.0[1], &self.0[2] - &o.0[2]])
    }
}

impl Neg for &VectorField3 {
    type Output = VectorField3;
    fn neg(self) -> VectorField3 {
        self.scale(-1.0)
    }
}
