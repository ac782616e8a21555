//! Householder reflectors, permutation matrices, and the unistochastic
//! matrices built from them.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use std::fmt;
use std::io;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rng_dist::{SeedSpec, UnitVector};

/// Symmetric orthogonal reflector `H = I - 2vv^T` together with the unit
/// vector that generated it. `H` is exactly symmetric by construction and an
/// involution within 1e-10 in Frobenius norm.
#[derive(Clone, Debug, PartialEq)]
pub struct HouseholderMatrix {
    matrix: DMatrix<f64>,
    generator: UnitVector,
}

impl HouseholderMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn generator(&self) -> &UnitVector {
        &self.generator
    }

    pub fn dim(&self) -> usize {
        self.generator.dim()
    }
}

/// Builds the reflector for a unit vector: diagonal `1 - 2v_i^2`,
/// off-diagonal `-2 v_i v_j`.
pub fn householder(v: &UnitVector) -> HouseholderMatrix {
    let e = v.entries();
    let n = e.len();
    let matrix = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0 - 2.0 * e[i] * e[i]
        } else {
            -2.0 * e[i] * e[j]
        }
    });
    HouseholderMatrix {
        matrix,
        generator: v.clone(),
    }
}

/// Permutation on `{0, .., n-1}`; the matrix has a one at `(i, map[i])`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermutationMatrix {
    map: Vec<usize>,
}

impl PermutationMatrix {
    pub fn identity(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("permutation size must be >= 1".into()));
        }
        Ok(PermutationMatrix {
            map: (0..n).collect(),
        })
    }

    /// Validates that `map` is a bijection.
    pub fn from_map(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        if n == 0 {
            return Err(Error::Parameter("permutation size must be >= 1".into()));
        }
        let mut seen = vec![false; n];
        for (i, &j) in map.iter().enumerate() {
            if j >= n {
                return Err(Error::Parameter(format!(
                    "image {j} of {i} is out of range for size {n}"
                )));
            }
            if seen[j] {
                return Err(Error::Parameter(format!("image {j} appears twice")));
            }
            seen[j] = true;
        }
        Ok(PermutationMatrix { map })
    }

    pub fn dim(&self) -> usize {
        self.map.len()
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    /// Number of cycles, counting fixed points. Equals the algebraic
    /// multiplicity of eigenvalue one of the permutation matrix.
    pub fn cycle_count(&self) -> usize {
        let n = self.map.len();
        let mut visited = vec![false; n];
        let mut cycles = 0;
        for start in 0..n {
            if visited[start] {
                continue;
            }
            cycles += 1;
            let mut i = start;
            while !visited[i] {
                visited[i] = true;
                i = self.map[i];
            }
        }
        cycles
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.map.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, &j) in self.map.iter().enumerate() {
            m[(i, j)] = 1.0;
        }
        m
    }
}

/// Constraint on the permutations drawn for the Monte Carlo null.
///
/// `MinCycles(k)` restricts to permutations with at least `k` cycles;
/// `MinCycles(n)` leaves only the identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PermConstraint {
    Any,
    MinCycles(usize),
}

impl fmt::Display for PermConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            PermConstraint::Any => write!(f, "any"),
            PermConstraint::MinCycles(k) => write!(f, "min-cycles:{k}"),
        }
    }
}

impl FromStr for PermConstraint {
    type Err = Error;

    /// Grammar: `any` or `min-cycles:K`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "any" {
            return Ok(PermConstraint::Any);
        }
        if let Some(k) = s.strip_prefix("min-cycles:") {
            let k: usize = k.parse().map_err(|_| {
                Error::Parameter(format!("min-cycles: expected an integer, got {k:?}"))
            })?;
            return Ok(PermConstraint::MinCycles(k));
        }
        Err(Error::Parameter(format!(
            "unknown permutation constraint {s:?}; expected any or min-cycles:K"
        )))
    }
}

impl serde::Serialize for PermConstraint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for PermConstraint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Draws a permutation uniformly from the set allowed by `constraint`.
pub fn random_permutation(
    n: usize,
    constraint: PermConstraint,
    seed: SeedSpec,
) -> Result<PermutationMatrix> {
    let mut rng = seed.rng();
    random_permutation_with(n, constraint, &mut rng)
}

/// As [`random_permutation`], advancing a caller-held generator.
///
/// Unconstrained draws and `MinCycles(k <= 1)` are a Fisher-Yates shuffle.
/// For `2 <= k < n` the draw selects a cycle count with probability
/// proportional to the number of permutations attaining it, then builds a
/// uniform permutation with exactly that many cycles by sequential insertion.
/// Both stages follow the cycle-count recurrence
/// `c(m, j) = c(m-1, j-1) + (m-1) c(m-1, j)`, evaluated in log space, so the
/// sampled law is uniform on the constrained set up to the rounding of the
/// branch probabilities. Costs O(n^2) time and memory.
pub fn random_permutation_with<R: Rng>(
    n: usize,
    constraint: PermConstraint,
    rng: &mut R,
) -> Result<PermutationMatrix> {
    if n == 0 {
        return Err(Error::Parameter("permutation size must be >= 1".into()));
    }
    let k = match constraint {
        PermConstraint::Any => 0,
        PermConstraint::MinCycles(k) => {
            if k > n {
                return Err(Error::Parameter(format!(
                    "min-cycles:{k} is unsatisfiable for size {n}"
                )));
            }
            k
        }
    };
    if k <= 1 {
        let mut map: Vec<usize> = (0..n).collect();
        map.shuffle(rng);
        return Ok(PermutationMatrix { map });
    }
    if k == n {
        // Only the identity has n cycles.
        return PermutationMatrix::identity(n);
    }

    // ln_c[m][j] = ln of the number of permutations of m elements with
    // exactly j cycles.
    let mut ln_c: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    ln_c.push(vec![0.0]);
    for m in 1..=n {
        let prev = &ln_c[m - 1];
        let mut row = vec![f64::NEG_INFINITY; m + 1];
        for j in 1..=m {
            let stay = if j <= m - 1 {
                ((m - 1) as f64).ln() + prev[j]
            } else {
                f64::NEG_INFINITY
            };
            let grow = prev[j - 1];
            row[j] = log_add_exp(grow, stay);
        }
        ln_c.push(row);
    }

    // Pick the exact cycle count j in k..=n with weight c(n, j).
    let weights: Vec<f64> = (k..=n).map(|j| ln_c[n][j]).collect();
    let max_w = weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = weights.iter().map(|w| (w - max_w).exp()).sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut target = n;
    for (offset, w) in weights.iter().enumerate() {
        acc += (w - max_w).exp();
        if u < acc {
            target = k + offset;
            break;
        }
    }

    // Walk the recurrence down, deciding for each element whether it opens a
    // new cycle. Forced branches have probability exactly 0 or 1.
    let mut new_cycle = vec![false; n];
    let mut j = target;
    for m in (1..=n).rev() {
        let p_new = (ln_c[m - 1][j - 1] - ln_c[m][j]).exp();
        if rng.random::<f64>() < p_new {
            new_cycle[m - 1] = true;
            j -= 1;
        }
    }
    debug_assert_eq!(j, 0);

    // Insert elements in order: a new cycle is a fixed point, otherwise the
    // element splices in after a uniformly chosen earlier element.
    let mut map: Vec<usize> = (0..n).collect();
    for e in 0..n {
        if !new_cycle[e] {
            let t = rng.random_range(0..e);
            map[e] = map[t];
            map[t] = e;
        }
    }
    let perm = PermutationMatrix { map };
    debug_assert_eq!(perm.cycle_count(), target);
    Ok(perm)
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Doubly stochastic matrix whose entries are the squares of an orthogonal
/// matrix, kept alongside that witness. Row and column sums are one within
/// 1e-10 and `entries[i][j] == witness[i][j]^2` exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct UnistochasticMatrix {
    entries: DMatrix<f64>,
    witness: DMatrix<f64>,
}

impl UnistochasticMatrix {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn witness(&self) -> &DMatrix<f64> {
        &self.witness
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }
}

/// Entrywise square of `Q H`: row `i` of the witness is row `map[i]` of the
/// reflector.
pub fn unistochastic_from(
    q: &PermutationMatrix,
    h: &HouseholderMatrix,
) -> Result<UnistochasticMatrix> {
    let n = h.dim();
    if q.dim() != n {
        return Err(Error::Shape(format!(
            "permutation is {}x{} but reflector is {n}x{n}",
            q.dim(),
            q.dim()
        )));
    }
    let hm = h.matrix();
    let witness = DMatrix::from_fn(n, n, |i, j| hm[(q.map()[i], j)]);
    let entries = witness.map(|x| x * x);
    debug_assert!(stochastic_both_ways(&entries, 1e-10));
    Ok(UnistochasticMatrix { entries, witness })
}

fn stochastic_both_ways(m: &DMatrix<f64>, tol: f64) -> bool {
    let n = m.nrows();
    (0..n).all(|i| {
        let row: f64 = (0..n).map(|j| m[(i, j)]).sum();
        let col: f64 = (0..n).map(|j| m[(j, i)]).sum();
        (row - 1.0).abs() <= tol && (col - 1.0).abs() <= tol
    })
}

/// The unistochastic matrix generated by the constant unit vector and the
/// identity permutation: diagonal `(n-2)^2/n^2`, off-diagonal `4/n^2`.
/// Its witness is `I - (2/n) J`.
pub fn equal_components_matrix(n: usize) -> Result<UnistochasticMatrix> {
    if n < 2 {
        return Err(Error::Parameter(format!(
            "equal-components matrix needs n >= 2, got {n}"
        )));
    }
    let nf = n as f64;
    let wdiag = 1.0 - 2.0 / nf;
    let woff = -2.0 / nf;
    let witness = DMatrix::from_fn(n, n, |i, j| if i == j { wdiag } else { woff });
    let entries = witness.map(|x| x * x);
    Ok(UnistochasticMatrix { entries, witness })
}

/// Writes a matrix as headerless CSV, row-major, one row per record, entries
/// formatted to round-trip exactly.
pub fn write_matrix_csv<W: io::Write>(m: &DMatrix<f64>, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for i in 0..m.nrows() {
        let record: Vec<String> = (0..m.ncols()).map(|j| m[(i, j)].to_string()).collect();
        out.write_record(&record)?;
    }
    out.flush()?;
    Ok(())
}
