use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

/// Doubly periodic horizontal grid on `[0, lx) x [0, ly)`.
///
/// Mode `k` is stored at `k = iy * nx + ix`; physical sample `j` uses the
/// same layout with `x = ix * lx / nx`.
pub struct HGrid {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
    mx: Vec<i64>,
    my: Vec<i64>,
    kx: Vec<f64>,
    ky: Vec<f64>,
    kxd: Vec<f64>,
    kyd: Vec<f64>,
    keep: Vec<bool>,
    fx: Arc<dyn Fft<f64>>,
    fy: Arc<dyn Fft<f64>>,
    ix_: Arc<dyn Fft<f64>>,
    iy_: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for HGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HGrid")
            .field("lx", &self.lx)
            .field("ly", &self.ly)
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .finish()
    }
}

impl PartialEq for HGrid {
    fn eq(&self, o: &Self) -> bool {
        self.nx == o.nx && self.ny == o.ny && self.lx == o.lx && self.ly == o.ly
    }
}

fn signed(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

impl HGrid {
    /// Panics unless `nx`, `ny` are even and at least 4.
    pub fn new(lx: f64, ly: f64, nx: usize, ny: usize) -> Arc<Self> {
        assert!(nx >= 4 && ny >= 4 && nx % 2 == 0 && ny % 2 == 0, "grid sizes must be even and >= 4");
        assert!(lx > 0.0 && ly > 0.0);
        let n = nx * ny;
        let (mut mx, mut my) = (Vec::with_capacity(n), Vec::with_capacity(n));
        let (mut kx, mut ky, mut kxd, mut kyd) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let mut keep = vec![false; n];
        for iy in 0..ny {
            for ix in 0..nx {
                let k = iy * nx + ix;
                let (a, b) = (signed(ix, nx), signed(iy, ny));
                mx.push(a);
                my.push(b);
                kx[k] = 2.0 * PI * a as f64 / lx;
                ky[k] = 2.0 * PI * b as f64 / ly;
                kxd[k] = if 2 * ix == nx { 0.0 } else { kx[k] };
                kyd[k] = if 2 * iy == ny { 0.0 } else { ky[k] };
                keep[k] = 3 * a.unsigned_abs() < nx as u64 && 3 * b.unsigned_abs() < ny as u64;
            }
        }
        let mut p = FftPlanner::new();
        Arc::new(HGrid {
            lx,
            ly,
            nx,
            ny,
            mx,
            my,
            kx,
            ky,
            kxd,
            kyd,
            keep,
            fx: p.plan_fft_forward(nx),
            fy: p.plan_fft_forward(ny),
            ix_: p.plan_fft_inverse(nx),
            iy_: p.plan_fft_inverse(ny),
        })
    }

    /// Square `2π`-periodic grid.
    pub fn square(n: usize) -> Arc<Self> {
        Self::new(2.0 * PI, 2.0 * PI, n, n)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, mx: i64, my: i64) -> usize {
        let ix = mx.rem_euclid(self.nx as i64) as usize;
        let iy = my.rem_euclid(self.ny as i64) as usize;
        iy * self.nx + ix
    }

    /// Integer mode numbers of slot `k`.
    pub fn modes(&self, k: usize) -> (i64, i64) {
        (self.mx[k], self.my[k])
    }

    /// Wavenumber of slot `k` (Nyquist slots carry `-N/2`).
    pub fn xi(&self, k: usize) -> [f64; 2] {
        [self.kx[k], self.ky[k]]
    }

    pub fn xi_abs(&self, k: usize) -> f64 {
        self.kx[k].hypot(self.ky[k])
    }

    /// Wavenumber used by odd derivatives (Nyquist set to zero).
    pub fn xi_deriv(&self, k: usize) -> [f64; 2] {
        [self.kxd[k], self.kyd[k]]
    }

    /// Whether slot `k` survives 2/3-rule truncation.
    pub fn kept(&self, k: usize) -> bool {
        self.keep[k]
    }

    pub fn x(&self, ix: usize) -> f64 {
        self.lx * ix as f64 / self.nx as f64
    }

    pub fn y(&self, iy: usize) -> f64 {
        self.ly * iy as f64 / self.ny as f64
    }

    /// Area-normalized physical quadrature weight.
    pub fn cell(&self) -> f64 {
        1.0 / self.len() as f64
    }

    pub fn forward(&self, buf: &mut [C64]) {
        self.fft2(buf, true);
        let s = 1.0 / self.len() as f64;
        for v in buf.iter_mut() {
            *v *= s;
        }
    }

    pub fn inverse(&self, buf: &mut [C64]) {
        self.fft2(buf, false);
    }

    fn fft2(&self, buf: &mut [C64], fwd: bool) {
        let (nx, ny) = (self.nx, self.ny);
        assert_eq!(buf.len(), nx * ny);
        let (fx, fy) = if fwd { (&self.fx, &self.fy) } else { (&self.ix_, &self.iy_) };
        fx.process(buf);
        let mut t = vec![C64::new(0.0, 0.0); nx * ny];
        for iy in 0..ny {
            for ix in 0..nx {
                t[ix * ny + iy] = buf[iy * nx + ix];
            }
        }
        fy.process(&mut t);
        for iy in 0..ny {
            for ix in 0..nx {
                buf[iy * nx + ix] = t[ix * ny + iy];
            }
        }
    }

    pub fn same(&self, o: &HGrid) -> bool {
        self == o
    }
}
