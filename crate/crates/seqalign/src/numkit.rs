//! Deterministic numerical primitives shared by every other module:
//! stable reductions, softmax, seeded pseudo-randomness and a dense
//! row-major matrix container.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Dense matrix of 64-bit floats in row-major order.
///
/// Feature sequences are stored with one column per time step, so a
/// `d x L` matrix holds `L` hidden vectors of dimension `d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "matrix {}x{} needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from row slices; all rows must share a length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Shape("matrix needs at least one row".into()));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("rows have unequal lengths".into()));
        }
        let data = rows.iter().flatten().copied().collect();
        Matrix::from_vec(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Copies column `j` into a fresh vector (columns are strided in
    /// row-major storage).
    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_col(&mut self, j: usize, v: &[f64]) {
        debug_assert_eq!(v.len(), self.rows);
        for (i, &x) in v.iter().enumerate() {
            self[(i, j)] = x;
        }
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "matmul {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// `self += scale * other`; shapes must match.
    pub fn add_scaled(&mut self, other: &Matrix, scale: f64) {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, &b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += scale * b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for a in self.data.iter_mut() {
            *a *= s;
        }
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// log(sum(exp(v))) computed with a max shift so it never overflows for
/// finite inputs.
pub fn logsumexp(v: &[f64]) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::Contract("logsumexp of empty vector".into()));
    }
    Ok(logsumexp_unchecked(v))
}

/// Infallible variant for internal hot loops; empty input yields -inf.
#[inline]
pub fn logsumexp_unchecked(v: &[f64]) -> f64 {
    let m = v.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = v.iter().map(|&x| (x - m).exp()).sum();
    m + sum.ln()
}

/// Binary log-add used by dynamic programs: log(exp(a) + exp(b)).
#[inline]
pub fn logadd(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    if a > b {
        a + (b - a).exp().ln_1p()
    } else {
        b + (a - b).exp().ln_1p()
    }
}

/// Shift-invariant softmax; entries lie in (0, 1] and sum to 1.
pub fn softmax(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::Contract("softmax of empty vector".into()));
    }
    let m = v.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut out: Vec<f64> = v.iter().map(|&x| (x - m).exp()).collect();
    let sum: f64 = out.iter().sum();
    for x in out.iter_mut() {
        *x /= sum;
    }
    Ok(out)
}

/// log(softmax(v)); rows of CTC frame tables are produced with this.
pub fn log_softmax(v: &[f64]) -> Vec<f64> {
    let lse = logsumexp_unchecked(v);
    v.iter().map(|&x| x - lse).collect()
}

/// Seed of a deterministic random stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seed(pub u64);

/// Well-known sub-stream indices so independent consumers of one run seed
/// never interleave draws.
pub mod streams {
    pub const SYNTH_PROTOTYPES: u64 = 0;
    pub const SYNTH_SAMPLES: u64 = 1;
    pub const PARAM_INIT: u64 = 2;
    pub const TRAIN_SHUFFLE: u64 = 3;
    pub const DROPOUT: u64 = 4;
}

/// Deterministic generator of uniform and Gaussian draws.
///
/// Sub-streams are derived by index from the same seed (ChaCha stream
/// selection), so two consumers with distinct indices never interleave.
#[derive(Clone, Debug)]
pub struct RngStream {
    rng: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: Seed, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed.0);
        rng.set_stream(stream);
        RngStream { rng }
    }

    /// Uniform draw in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    /// Uniform integer in `[lo, hi]` (inclusive).
    pub fn uniform_int(&mut self, lo: usize, hi: usize) -> usize {
        self.rng.gen_range(lo..=hi)
    }

    /// Standard normal draw via Box-Muller.
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform(); // (0, 1]
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// Fisher-Yates shuffle driven by this stream.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.uniform_int(0, i);
            xs.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn logsumexp_matches_hand_values() {
        assert!((logsumexp(&[0.0, 0.0]).unwrap() - 2.0f64.ln()).abs() < 1e-12);
        assert!((logsumexp(&[1000.0, 1000.0]).unwrap() - (1000.0 + 2.0f64.ln())).abs() < 1e-12);
        assert_eq!(logsumexp(&[5.0]).unwrap(), 5.0);
    }

    #[test]
    fn logsumexp_rejects_empty() {
        assert!(logsumexp(&[]).is_err());
    }

    #[test]
    fn softmax_hand_values() {
        let s = softmax(&[0.0, 0.0]).unwrap();
        assert!((s[0] - 0.5).abs() < 1e-15 && (s[1] - 0.5).abs() < 1e-15);
        let s = softmax(&[42.0]).unwrap();
        assert_eq!(s, vec![1.0]);
        // softmax([ln 1, ln 3]) = [1/4, 3/4]
        let s = softmax(&[0.0, 3.0f64.ln()]).unwrap();
        assert!((s[0] - 0.25).abs() < 1e-12);
        assert!((s[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn rng_streams_are_deterministic_and_distinct() {
        let mut a = RngStream::new(Seed(7), 0);
        let mut b = RngStream::new(Seed(7), 0);
        let draws_a: Vec<f64> = (0..1000).map(|_| a.uniform()).collect();
        let draws_b: Vec<f64> = (0..1000).map(|_| b.uniform()).collect();
        assert_eq!(draws_a, draws_b);

        let mut c = RngStream::new(Seed(7), 1);
        let draws_c: Vec<f64> = (0..10).map(|_| c.uniform()).collect();
        assert_ne!(&draws_a[..10], &draws_c[..]);
    }

    #[test]
    fn gaussian_sample_mean_is_centered() {
        let mut r = RngStream::new(Seed(123), 0);
        let n = 100_000;
        let mean = (0..n).map(|_| r.normal()).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.02, "sample mean {mean}");
    }

    #[test]
    fn matmul_small() {
        let a = Matrix::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = Matrix::from_vec(2, 1, vec![5.0, 6.0]).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.data(), &[17.0, 39.0]);
    }

    proptest! {
        #[test]
        fn logsumexp_shift_invariance(v in proptest::collection::vec(-50.0f64..50.0, 1..8), c in -20.0f64..20.0) {
            let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
            let lhs = logsumexp(&shifted).unwrap();
            let rhs = logsumexp(&v).unwrap() + c;
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn softmax_sums_to_one_and_keeps_argmax(v in proptest::collection::vec(-30.0f64..30.0, 1..8)) {
            let s = softmax(&v).unwrap();
            let sum: f64 = s.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            let arg_in = v.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap().0;
            let arg_out = s.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap().0;
            prop_assert_eq!(arg_in, arg_out);
        }
    }
}
