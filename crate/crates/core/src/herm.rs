//! Split-plane complex matrices for the density-matrix stepper.
//!
//! Row-major separate re/im planes keep the hot loops on contiguous f64
//! slices the compiler can vectorize. Scratch buffers hold non-Hermitian
//! intermediates (H*rho); `hermitize` restores exact symmetry after each
//! step so round-off never accumulates into the skew part.

use nalgebra::{Complex, DMatrix};

/// Dense complex matrix as two row-major f64 planes.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    pub n: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl CMat {
    pub fn zeros(n: usize) -> Self {
        CMat { n, re: vec![0.0; n * n], im: vec![0.0; n * n] }
    }

    /// Real diagonal, zero elsewhere.
    pub fn from_diag_re(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = CMat::zeros(n);
        for (i, &d) in diag.iter().enumerate() {
            m.re[i * n + i] = d;
        }
        m
    }

    #[inline]
    pub fn idx(&self, i: usize, k: usize) -> usize {
        i * self.n + k
    }

    pub fn set(&mut self, i: usize, k: usize, re: f64, im: f64) {
        let p = self.idx(i, k);
        self.re[p] = re;
        self.im[p] = im;
    }

    pub fn get(&self, i: usize, k: usize) -> (f64, f64) {
        let p = self.idx(i, k);
        (self.re[p], self.im[p])
    }

    pub fn fill_zero(&mut self) {
        self.re.fill(0.0);
        self.im.fill(0.0);
    }

    pub fn copy_from(&mut self, src: &CMat) {
        debug_assert_eq!(self.n, src.n);
        self.re.copy_from_slice(&src.re);
        self.im.copy_from_slice(&src.im);
    }

    /// self += a * x, both planes.
    pub fn axpy(&mut self, a: f64, x: &CMat) {
        debug_assert_eq!(self.n, x.n);
        for (y, &v) in self.re.iter_mut().zip(&x.re) {
            *y += a * v;
        }
        for (y, &v) in self.im.iter_mut().zip(&x.im) {
            *y += a * v;
        }
    }

    /// self = (self + self^dagger) / 2. Diagonal imaginary parts are zeroed.
    pub fn hermitize(&mut self) {
        let n = self.n;
        for i in 0..n {
            self.im[i * n + i] = 0.0;
            for k in (i + 1)..n {
                let a = i * n + k;
                let b = k * n + i;
                let r = 0.5 * (self.re[a] + self.re[b]);
                let m = 0.5 * (self.im[a] - self.im[b]);
                self.re[a] = r;
                self.re[b] = r;
                self.im[a] = m;
                self.im[b] = -m;
            }
        }
    }

    pub fn trace_re(&self) -> f64 {
        (0..self.n).map(|i| self.re[i * self.n + i]).sum()
    }

    pub fn diag_re(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.re[i * self.n + i]).collect()
    }

    /// tr(rho^2) for Hermitian rho equals the squared Frobenius norm.
    pub fn purity(&self) -> f64 {
        let sq: f64 =
            self.re.iter().map(|v| v * v).sum::<f64>() + self.im.iter().map(|v| v * v).sum::<f64>();
        sq
    }

    /// Smallest eigenvalue of a Hermitian matrix via the real symmetric
    /// embedding [[Re, -Im], [Im, Re]], whose spectrum is the Hermitian
    /// spectrum doubled.
    pub fn min_eigenvalue(&self) -> f64 {
        let n = self.n;
        let mut s = DMatrix::<f64>::zeros(2 * n, 2 * n);
        for i in 0..n {
            for k in 0..n {
                let re = self.re[i * n + k];
                let im = self.im[i * n + k];
                s[(i, k)] = re;
                s[(n + i, n + k)] = re;
                s[(i, n + k)] = -im;
                s[(n + i, k)] = im;
            }
        }
        s.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn to_dmatrix(&self) -> DMatrix<Complex<f64>> {
        let n = self.n;
        DMatrix::from_fn(n, n, |i, k| Complex::new(self.re[i * n + k], self.im[i * n + k]))
    }

    pub fn from_dmatrix(m: &DMatrix<Complex<f64>>) -> Self {
        let n = m.nrows();
        assert_eq!(m.ncols(), n, "square matrix required");
        let mut c = CMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                c.re[i * n + k] = m[(i, k)].re;
                c.im[i * n + k] = m[(i, k)].im;
            }
        }
        c
    }
}

/// Real symmetric sparse matrix in row-of-pairs form, both orientations
/// stored so products walk rows only.
#[derive(Debug, Clone)]
pub struct SparseSym {
    pub n: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl SparseSym {
    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        assert_eq!(m.ncols(), n, "square matrix required");
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .filter_map(|j| {
                        let v = m[(i, j)];
                        (v != 0.0).then_some((j, v))
                    })
                    .collect()
            })
            .collect();
        SparseSym { n, rows }
    }

    /// out = self * x. Edge-outer accumulation: each nonzero contributes a
    /// contiguous row AXPY, which is the whole performance story.
    /// Neighbors are consumed in pairs so each output row is swept
    /// ceil(deg/2) times instead of deg times; the first sweep assigns, so
    /// no zero fill of `out` is needed.
    pub fn mul(&self, x: &CMat, out: &mut CMat) {
        debug_assert_eq!(self.n, x.n);
        debug_assert_eq!(self.n, out.n);
        let n = self.n;
        let (xre, xim) = (&x.re, &x.im);
        for (i, row) in self.rows.iter().enumerate() {
            let (ore, oim) = (&mut out.re[i * n..(i + 1) * n], &mut out.im[i * n..(i + 1) * n]);
            if row.is_empty() {
                ore.fill(0.0);
                oim.fill(0.0);
                continue;
            }
            let mut pairs = row.chunks_exact(2);
            let mut started = false;
            for pair in &mut pairs {
                let ((j0, w0), (j1, w1)) = (pair[0], pair[1]);
                let x0 = &xre[j0 * n..(j0 + 1) * n];
                let x1 = &xre[j1 * n..(j1 + 1) * n];
                let y0 = &xim[j0 * n..(j0 + 1) * n];
                let y1 = &xim[j1 * n..(j1 + 1) * n];
                if started {
                    for k in 0..n {
                        ore[k] = w0.mul_add(x0[k], w1.mul_add(x1[k], ore[k]));
                    }
                    for k in 0..n {
                        oim[k] = w0.mul_add(y0[k], w1.mul_add(y1[k], oim[k]));
                    }
                } else {
                    for k in 0..n {
                        ore[k] = w0.mul_add(x0[k], w1 * x1[k]);
                    }
                    for k in 0..n {
                        oim[k] = w0.mul_add(y0[k], w1 * y1[k]);
                    }
                    started = true;
                }
            }
            if let Some(&(j, w)) = pairs.remainder().first() {
                let x0 = &xre[j * n..(j + 1) * n];
                let y0 = &xim[j * n..(j + 1) * n];
                if started {
                    for k in 0..n {
                        ore[k] = w.mul_add(x0[k], ore[k]);
                    }
                    for k in 0..n {
                        oim[k] = w.mul_add(y0[k], oim[k]);
                    }
                } else {
                    for k in 0..n {
                        ore[k] = w * x0[k];
                    }
                    for k in 0..n {
                        oim[k] = w * y0[k];
                    }
                }
            }
        }
    }
}
