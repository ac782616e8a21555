//! Eigenvalue computation tuned for stochastic matrices.
//!
//! Matrices that are exactly permutations bypass iterative factorization:
//! their spectrum follows from the cycle decomposition, which keeps ties at
//! eigenvalue one exact instead of smeared by roundoff. Everything else goes
//! through balancing and a real Schur decomposition.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Full spectrum, sorted by descending modulus, then descending real part,
/// then descending imaginary part.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    values: Vec<Complex64>,
}

impl Spectrum {
    fn new(mut values: Vec<Complex64>) -> Self {
        values.sort_by(|a, b| {
            b.norm()
                .total_cmp(&a.norm())
                .then(b.re.total_cmp(&a.re))
                .then(b.im.total_cmp(&a.im))
        });
        Spectrum { values }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Subdominant eigenvalue of a row-stochastic matrix, with the two derived
/// quantities the classifier consumes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lambda2 {
    pub value: Complex64,
    pub modulus: f64,
    pub distance_to_one: f64,
}

/// All eigenvalues of a real square matrix.
///
/// Exact permutation matrices are resolved through their cycle structure;
/// other inputs are balanced and factored. Non-convergence of the iteration
/// is reported as a numerical error, never as a wrong answer.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Spectrum> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::Shape(format!(
            "need a nonempty square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("matrix has a non-finite entry".into()));
    }
    if let Some(map) = as_permutation(a) {
        return Ok(Spectrum::new(permutation_spectrum(&map)));
    }
    if n == 1 {
        return Ok(Spectrum::new(vec![Complex64::new(a[(0, 0)], 0.0)]));
    }
    let balanced = balance(a);
    let max_niter = 50 * n + 1_000;
    // A deflation threshold at machine epsilon is unattainable for matrices
    // with highly degenerate spectra; 1e-15 converges and costs accuracy far
    // below every tolerance used downstream.
    let schur = nalgebra::linalg::Schur::try_new(balanced, 1e-15, max_niter)
        .ok_or_else(|| {
            Error::Numerical(format!(
                "eigenvalue iteration on a {n}x{n} matrix did not converge within {max_niter} iterations"
            ))
        })?;
    let values = schur.complex_eigenvalues().iter().cloned().collect();
    Ok(Spectrum::new(values))
}

/// Subdominant eigenvalue: drops the one eigenvalue closest to `1 + 0i` and
/// returns the largest-modulus survivor. Among equal moduli the survivor
/// with the larger real part wins, then the larger imaginary part.
///
/// Rows must sum to one within 1e-6 and `n >= 2`.
pub fn second_eigenvalue(a: &DMatrix<f64>) -> Result<Lambda2> {
    let n = a.nrows();
    if n < 2 {
        return Err(Error::Domain(format!(
            "subdominant eigenvalue needs n >= 2, got {n}"
        )));
    }
    if a.ncols() != n {
        return Err(Error::Shape(format!(
            "need a square matrix, got {n}x{}",
            a.ncols()
        )));
    }
    let mut worst_row = 0;
    let mut worst_dev = 0.0;
    for i in 0..n {
        let sum: f64 = (0..n).map(|j| a[(i, j)]).sum();
        let dev = (sum - 1.0).abs();
        if dev > worst_dev {
            worst_dev = dev;
            worst_row = i;
        }
    }
    if worst_dev > 1e-6 {
        let sum: f64 = (0..n).map(|j| a[(worst_row, j)]).sum();
        return Err(Error::Domain(format!(
            "matrix is not row-stochastic: row {worst_row} sums to {sum} (off by {worst_dev:e})"
        )));
    }

    let spectrum = eigenvalues(a)?;
    let values = spectrum.values();
    let nearest_one = values
        .iter()
        .enumerate()
        .min_by(|(_, x), (_, y)| {
            (**x - 1.0).norm().total_cmp(&(**y - 1.0).norm())
        })
        .map(|(i, _)| i)
        .expect("spectrum is nonempty");
    // The sort order already encodes the modulus and sign tie-breaks, so the
    // first survivor is the subdominant eigenvalue.
    let value = values
        .iter()
        .enumerate()
        .find(|(i, _)| *i != nearest_one)
        .map(|(_, v)| *v)
        .expect("n >= 2 leaves a survivor");
    Ok(Lambda2 {
        value,
        modulus: value.norm(),
        distance_to_one: (value - 1.0).norm(),
    })
}

/// Returns the permutation map when every row is exactly a standard basis
/// vector and the ones form a bijection.
fn as_permutation(a: &DMatrix<f64>) -> Option<Vec<usize>> {
    let n = a.nrows();
    let mut map = vec![0usize; n];
    let mut column_hit = vec![false; n];
    for i in 0..n {
        let mut one_at = None;
        for j in 0..n {
            let x = a[(i, j)];
            if x == 1.0 {
                if one_at.is_some() {
                    return None;
                }
                one_at = Some(j);
            } else if x != 0.0 {
                return None;
            }
        }
        let j = one_at?;
        if column_hit[j] {
            return None;
        }
        column_hit[j] = true;
        map[i] = j;
    }
    Some(map)
}

/// Spectrum of a permutation from its cycle lengths: each cycle of length L
/// contributes the L-th roots of unity. Real roots are emitted exactly and
/// complex roots in exactly conjugate pairs.
fn permutation_spectrum(map: &[usize]) -> Vec<Complex64> {
    let n = map.len();
    let mut visited = vec![false; n];
    let mut values = Vec::with_capacity(n);
    for start in 0..n {
        if visited[start] {
            continue;
        }
        let mut len = 0usize;
        let mut i = start;
        while !visited[i] {
            visited[i] = true;
            i = map[i];
            len += 1;
        }
        values.push(Complex64::new(1.0, 0.0));
        if len % 2 == 0 {
            values.push(Complex64::new(-1.0, 0.0));
        }
        for k in 1..=(len - 1) / 2 {
            let theta = std::f64::consts::TAU * k as f64 / len as f64;
            let (sin, cos) = theta.sin_cos();
            values.push(Complex64::new(cos, sin));
            values.push(Complex64::new(cos, -sin));
        }
    }
    values
}

/// Similarity scaling by powers of two that roughly equalizes row and column
/// norms. Leaves the spectrum exactly unchanged.
fn balance(a: &DMatrix<f64>) -> DMatrix<f64> {
    let mut m = a.clone();
    let n = m.nrows();
    for _ in 0..100 {
        let mut converged = true;
        for i in 0..n {
            let mut c: f64 = (0..n).filter(|&j| j != i).map(|j| m[(j, i)].abs()).sum();
            let r: f64 = (0..n).filter(|&j| j != i).map(|j| m[(i, j)].abs()).sum();
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            while c < r / 2.0 {
                f *= 2.0;
                c *= 4.0;
            }
            while c > r * 2.0 {
                f /= 2.0;
                c /= 4.0;
            }
            if (c + r) / f < 0.95 * s {
                converged = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                }
                for j in 0..n {
                    m[(j, i)] *= f;
                }
            }
        }
        if converged {
            break;
        }
    }
    m
}
