//! Central finite-difference harness for the hand-written backward passes,
//! shared by the unit tests and the `gradcheck` CLI command.

use crate::numkit::Matrix;

/// Central differences of a scalar function at `x` with step `h`.
pub fn central_diff(f: &mut impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let plus = f(&probe);
        probe[i] = orig - h;
        let minus = f(&probe);
        probe[i] = orig;
        out[i] = (plus - minus) / (2.0 * h);
    }
    out
}

/// Worst-case error between analytic and finite-difference gradients.
///
/// Elements with |fd| >= 1e-8 are compared relatively; smaller ones
/// absolutely (the relative quotient is meaningless near zero).
pub fn max_err(analytic: &[f64], fd: &[f64]) -> f64 {
    assert_eq!(analytic.len(), fd.len());
    let mut worst = 0.0f64;
    for (&a, &f) in analytic.iter().zip(fd.iter()) {
        let err = if f.abs() < 1e-8 {
            (a - f).abs()
        } else {
            (a - f).abs() / f.abs()
        };
        worst = worst.max(err);
    }
    worst
}

/// One finite-difference check: a named comparison with its tolerance.
#[derive(Clone, Debug)]
pub struct CheckReport {
    pub name: String,
    pub max_err: f64,
    pub tolerance: f64,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.max_err <= self.tolerance
    }
}

/// Convenience wrapper: runs a check over a matrix-valued input.
pub fn check_matrix_grad(
    name: &str,
    analytic: &Matrix,
    x: &Matrix,
    h: f64,
    tolerance: f64,
    f: &mut impl FnMut(&Matrix) -> f64,
) -> CheckReport {
    let rows = x.rows();
    let cols = x.cols();
    let mut eval = |flat: &[f64]| {
        let m = Matrix::from_vec(rows, cols, flat.to_vec()).expect("shape preserved");
        f(&m)
    };
    let fd = central_diff(&mut eval, x.data(), h);
    CheckReport {
        name: name.to_string(),
        max_err: max_err(analytic.data(), &fd),
        tolerance,
    }
}

// Suite runners used by the CLI live in `suites`; they are ordinary library
// code so both `cargo test` and the binary exercise the same checks.
pub mod suites;
