//! Closed-form companions to the Monte Carlo machinery: expected-deviation
//! bounds for squared-matrix ensembles, determinants of two structured
//! symmetric families, the exact spectrum of the equal-components matrix,
//! and the complete two-region case where everything is solvable by hand.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng_dist::MomentSet;

/// Whether a closed-form bound applies to the requested parameters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Validity {
    Valid,
    PreconditionViolated(String),
}

/// A bound on `E(||M - I||_F^2)`. `value` is finite exactly when `validity`
/// is `Valid`; otherwise it is `+inf`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundResult {
    pub value: f64,
    pub n: usize,
    pub validity: Validity,
}

impl BoundResult {
    pub fn is_valid(&self) -> bool {
        self.validity == Validity::Valid
    }

    fn violated(n: usize, reason: impl Into<String>) -> Self {
        BoundResult {
            value: f64::INFINITY,
            n,
            validity: Validity::PreconditionViolated(reason.into()),
        }
    }
}

/// Moment-form bound, valid for any component distribution with finite
/// fourth and eighth moments of both `u` and `1/u`:
///
/// `16n/(n-1)^4 im8 m8 + 16n/(n-1)^2 im4 m4 + 16n(n-1)/(n-2)^4 im8 m4^2`.
pub fn bound_general(n: usize, m: &MomentSet) -> BoundResult {
    if n < 3 {
        return BoundResult::violated(n, format!("needs n >= 3, got {n}"));
    }
    if !m.all_finite() {
        let mut missing = Vec::new();
        for (name, v) in [("m4", m.m4), ("m8", m.m8), ("im4", m.im4), ("im8", m.im8)] {
            if !v.is_finite() {
                missing.push(name);
            }
        }
        return BoundResult::violated(
            n,
            format!(
                "moment(s) {} are infinite; the moment-form bound does not apply",
                missing.join(", ")
            ),
        );
    }
    let nf = n as f64;
    let value = 16.0 * nf / (nf - 1.0).powi(4) * m.im8 * m.m8
        + 16.0 * nf / (nf - 1.0).powi(2) * m.im4 * m.m4
        + 16.0 * nf * (nf - 1.0) / (nf - 2.0).powi(4) * m.im8 * m.m4 * m.m4;
    BoundResult {
        value,
        n,
        validity: Validity::Valid,
    }
}

/// Specialized bound for standard normal components, valid from n = 11 where
/// every denominator factor is positive:
///
/// `1680n/((n-3)(n-5)(n-7)(n-9)) + 48n/((n-3)(n-5)) + 144n(n-1)/((n-4)(n-6)(n-8)(n-10))`.
pub fn bound_normal(n: usize) -> BoundResult {
    if n < 11 {
        return BoundResult::violated(
            n,
            format!("needs n >= 11 so the inverse-moment factors exist, got {n}"),
        );
    }
    let nf = n as f64;
    let value = 1680.0 * nf / ((nf - 3.0) * (nf - 5.0) * (nf - 7.0) * (nf - 9.0))
        + 48.0 * nf / ((nf - 3.0) * (nf - 5.0))
        + 144.0 * nf * (nf - 1.0) / ((nf - 4.0) * (nf - 6.0) * (nf - 8.0) * (nf - 10.0));
    BoundResult {
        value,
        n,
        validity: Validity::Valid,
    }
}

/// Specialized bound for gamma components with shape `alpha`, any rate (the
/// bound is scale-free because the unit vector quotients out scale). Valid
/// under `8/alpha + 2 < n`, which keeps every denominator factor positive.
///
/// The degree-8 numerator and denominator products overflow f64 for large
/// parameters well before the quotient does, so each term is assembled in
/// log space.
pub fn bound_gamma(n: usize, alpha: f64) -> BoundResult {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return BoundResult::violated(n, format!("shape must be finite and positive, got {alpha}"));
    }
    if !(8.0 / alpha + 2.0 < n as f64) {
        return BoundResult::violated(
            n,
            format!(
                "needs 8/alpha + 2 < n; got 8/{alpha} + 2 = {} with n = {n}",
                8.0 / alpha + 2.0
            ),
        );
    }
    let nf = n as f64;
    let ln_num4: f64 = (0..4).map(|i| (alpha + i as f64).ln()).sum();
    let ln_num8: f64 = (0..8).map(|i| (alpha + i as f64).ln()).sum();
    let ln_den = |scale: f64, count: usize| -> f64 {
        (1..=count).map(|i| (scale * alpha - i as f64).ln()).sum()
    };

    let ln16 = 16f64.ln();
    let t1 = (ln16 + 5.0 * nf.ln() + ln_num8 - ln_den(nf - 1.0, 8)).exp();
    let t2 = (ln16 + 3.0 * nf.ln() + ln_num4 - ln_den(nf - 1.0, 4)).exp();
    let t3 = (ln16 + 5.0 * nf.ln() + (nf - 1.0).ln() + 2.0 * ln_num4 - ln_den(nf - 2.0, 8)).exp();
    BoundResult {
        value: t1 + t2 + t3,
        n,
        validity: Validity::Valid,
    }
}

/// The two symmetric families with closed-form determinants. `Compound` has
/// `alpha` down the diagonal and `beta` everywhere else; `Cornered` is the
/// same matrix with the (0,0) entry lowered to `beta`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StructuredKind {
    Compound,
    Cornered,
}

/// Dense realization of a structured matrix, mainly for cross-checks.
pub fn structured_matrix(alpha: f64, beta: f64, n: usize, kind: StructuredKind) -> DMatrix<f64> {
    let mut m = DMatrix::from_fn(n, n, |i, j| if i == j { alpha } else { beta });
    if kind == StructuredKind::Cornered && n > 0 {
        m[(0, 0)] = beta;
    }
    m
}

/// Closed-form determinant: `(alpha-beta)^(n-1) (alpha + (n-1) beta)` for
/// `Compound`, `(alpha-beta)^(n-1) beta` for `Cornered`.
pub fn det_structured(alpha: f64, beta: f64, n: usize, kind: StructuredKind) -> Result<f64> {
    let min_n = match kind {
        StructuredKind::Compound => 1,
        StructuredKind::Cornered => 2,
    };
    if n < min_n {
        return Err(Error::Parameter(format!(
            "structured determinant needs n >= {min_n} for this kind, got {n}"
        )));
    }
    let lead = (alpha - beta).powi(n as i32 - 1);
    let det = match kind {
        StructuredKind::Compound => lead * (alpha + (n - 1) as f64 * beta),
        StructuredKind::Cornered => lead * beta,
    };
    Ok(det)
}

/// Exact spectral data of the equal-components reference matrix: the
/// squared entries of the reflector across the all-equal unit vector.
#[derive(Clone, Debug, PartialEq)]
pub struct EqualComponentsSpectrum {
    pub det: f64,
    pub trace: f64,
    /// Sorted by modulus: 1 first, then `(n-4)/n` with multiplicity `n-1`.
    pub eigenvalues: Vec<f64>,
}

/// `det = ((n-4)/n)^(n-1)`, `trace = (n-2)^2/n`, eigenvalues
/// `{1, (n-4)/n (x n-1)}`; the matrix is diagonalizable.
pub fn equal_components_spectrum(n: usize) -> Result<EqualComponentsSpectrum> {
    if n < 2 {
        return Err(Error::Parameter(format!(
            "equal-components spectrum needs n >= 2, got {n}"
        )));
    }
    let nf = n as f64;
    let repeated = (nf - 4.0) / nf;
    let mut eigenvalues = vec![1.0];
    eigenvalues.extend(std::iter::repeat(repeated).take(n - 1));
    Ok(EqualComponentsSpectrum {
        det: repeated.powi(n as i32 - 1),
        trace: (nf - 2.0) * (nf - 2.0) / nf,
        eigenvalues,
    })
}

/// Sign choice for the two-region construction: `Plus` pairs the reflector
/// with the identity permutation, `Minus` with the swap.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Branch::Plus => "plus",
            Branch::Minus => "minus",
        })
    }
}

impl std::str::FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" => Ok(Branch::Plus),
            "minus" => Ok(Branch::Minus),
            other => Err(Error::Parameter(format!(
                "unknown branch {other:?}; expected \"plus\" or \"minus\""
            ))),
        }
    }
}

/// A two-region instance is determined by the first component of the unit
/// vector and the branch; the second component is `sqrt(1 - v1^2)` up to
/// sign, which the squared entries cannot see.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoRegionCase {
    pub v1: f64,
    pub branch: Branch,
}

fn check_v1(v1: f64) {
    assert!(
        v1.is_finite() && v1.abs() <= 1.0,
        "v1 must lie in [-1, 1], got {v1}"
    );
}

/// The explicit 2x2 doubly stochastic matrix for a two-region case.
pub fn two_region_matrix(case: TwoRegionCase) -> DMatrix<f64> {
    check_v1(case.v1);
    let s = case.v1 * case.v1;
    let diag = (1.0 - 2.0 * s) * (1.0 - 2.0 * s);
    let off = 4.0 * s * (1.0 - s);
    match case.branch {
        Branch::Plus => DMatrix::from_row_slice(2, 2, &[diag, off, off, diag]),
        Branch::Minus => DMatrix::from_row_slice(2, 2, &[off, diag, diag, off]),
    }
}

/// Exact second eigenvalue of the two-region matrix:
/// `8 v1^4 - 8 v1^2 + 1` on the `Plus` branch and its negation on `Minus`.
pub fn lambda2_two_region(case: TwoRegionCase) -> f64 {
    check_v1(case.v1);
    let s = case.v1 * case.v1;
    let plus = 8.0 * s * s - 8.0 * s + 1.0;
    match case.branch {
        Branch::Plus => plus,
        Branch::Minus => -plus,
    }
}

/// Expected second eigenvalue when `v1` is Beta(alpha, beta) distributed:
/// the fourth and second moments of the beta law pushed through the
/// two-region eigenvalue polynomial.
pub fn expected_lambda2_beta(alpha: f64, beta: f64, branch: Branch) -> Result<f64> {
    for (name, x) in [("alpha", alpha), ("beta", beta)] {
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::Parameter(format!(
                "{name} must be finite and positive, got {x}"
            )));
        }
    }
    let s = alpha + beta;
    let m4: f64 = (0..4).map(|i| (alpha + i as f64) / (s + i as f64)).product();
    let m2 = alpha * (alpha + 1.0) / (s * (s + 1.0));
    let plus = 8.0 * m4 - 8.0 * m2 + 1.0;
    Ok(match branch {
        Branch::Plus => plus,
        Branch::Minus => -plus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrices::{
        equal_components_matrix, householder, unistochastic_from, PermutationMatrix,
    };
    use crate::rng_dist::{sample_iid_with, to_unit_vector, DistributionSpec, SeedSpec};
    use crate::spectra::{eigenvalues, second_eigenvalue};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand_distr::Distribution;

    fn deviation_fro2(m: &DMatrix<f64>) -> f64 {
        let n = m.nrows();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                let d = m[(i, j)] - target;
                acc += d * d;
            }
        }
        acc
    }

    /// Mean and standard error of `||M - I||_F^2` over `draws` matrices with
    /// identity permutation and the given component distribution.
    fn simulated_deviation(dist: &DistributionSpec, n: usize, draws: usize, seed: u64) -> (f64, f64) {
        let mut rng = SeedSpec {
            master_seed: seed,
            stream_index: 0,
        }
        .rng();
        let q = PermutationMatrix::identity(n).unwrap();
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..draws {
            let u = sample_iid_with(dist, n, &mut rng).unwrap();
            let v = to_unit_vector(&u).unwrap();
            let h = householder(&v);
            let m = unistochastic_from(&q, &h).unwrap();
            let x = deviation_fro2(m.entries());
            sum += x;
            sum_sq += x * x;
        }
        let mean = sum / draws as f64;
        let var = (sum_sq / draws as f64 - mean * mean).max(0.0);
        (mean, (var / draws as f64).sqrt())
    }

    #[test]
    fn general_bound_matches_constant_moment_arithmetic() {
        let m = DistributionSpec::Constant(1.0).moments();
        let b = bound_general(10, &m);
        assert!(b.is_valid());
        // 160/9^4 + 160/81 + 1440/8^4, reduced by hand.
        assert_relative_eq!(b.value, 2.351257668419448, max_relative = 1e-14);
    }

    #[test]
    fn general_bound_shrinks_with_dimension() {
        let m = DistributionSpec::Constant(2.0).moments();
        let b10 = bound_general(10, &m).value;
        let b1k = bound_general(1_000, &m).value;
        let b1m = bound_general(1_000_000, &m).value;
        assert!(b10 > b1k && b1k > b1m);
        // Dominant term is 16 im4 m4 / n.
        assert!(b1m < 2e-5 * 16.0);
    }

    #[test]
    fn general_bound_flags_infinite_moments_and_small_n() {
        let normal = bound_general(50, &DistributionSpec::StandardNormal.moments());
        assert!(!normal.is_valid());
        assert!(normal.value.is_infinite());
        match &normal.validity {
            Validity::PreconditionViolated(reason) => {
                assert!(reason.contains("im4") && reason.contains("im8"), "{reason}");
            }
            Validity::Valid => panic!("normal moments should not satisfy the moment form"),
        }

        let straddling = DistributionSpec::Uniform {
            low: -1.0,
            high: 2.0,
        };
        assert!(!bound_general(50, &straddling.moments()).is_valid());

        let thin_tail = DistributionSpec::Beta {
            alpha: 3.0,
            beta: 1.0,
        };
        assert!(!bound_general(50, &thin_tail.moments()).is_valid());

        let m = DistributionSpec::Constant(1.0).moments();
        assert!(!bound_general(2, &m).is_valid());
    }

    #[test]
    fn normal_bound_matches_hand_reduced_values() {
        // 18480/384 + 528/48 + 15840/105
        assert_relative_eq!(
            bound_normal(11).value,
            209.98214285714286,
            max_relative = 1e-12
        );
        // 33600/36465 + 960/255 + 54720/26880
        assert_relative_eq!(
            bound_normal(20).value,
            6.721851677734031,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            bound_normal(15).value,
            19.102272727272727,
            max_relative = 1e-12
        );
    }

    #[test]
    fn normal_bound_needs_eleven_components() {
        for n in [0, 3, 10] {
            let b = bound_normal(n);
            assert!(!b.is_valid(), "n={n}");
            assert!(b.value.is_infinite());
        }
        assert!(bound_normal(11).is_valid());
    }

    #[test]
    fn gamma_bound_matches_product_form_arithmetic() {
        // Oracles evaluated independently with exact rational arithmetic.
        for (n, alpha, expect) in [
            (7, 2.0, 78777.74545454545),
            (5, 4.0, 22545.454545454544),
            (12, 9.0, 6.284839789268139),
        ] {
            let b = bound_gamma(n, alpha);
            assert!(b.is_valid(), "n={n} alpha={alpha}");
            assert_relative_eq!(b.value, expect, max_relative = 1e-10);
        }
    }

    #[test]
    fn gamma_bound_enforces_its_hypothesis() {
        // 8/1 + 2 = 10 is not strictly below n = 10.
        assert!(!bound_gamma(10, 1.0).is_valid());
        assert!(bound_gamma(11, 1.0).is_valid());
        assert!(!bound_gamma(7, 1.0).is_valid());
        assert!(!bound_gamma(12, 0.0).is_valid());
        assert!(!bound_gamma(12, -3.0).is_valid());
        assert!(bound_gamma(12, 1.0).is_valid());
    }

    #[test]
    fn normal_bound_dominates_simulated_deviations() {
        for (n, seed) in [(11, 41u64), (15, 42), (20, 43)] {
            let bound = bound_normal(n).value;
            let (mean, _) =
                simulated_deviation(&DistributionSpec::StandardNormal, n, 2000, seed);
            assert!(
                mean < bound,
                "n={n}: simulated mean {mean} is not below bound {bound}"
            );
        }
    }

    #[test]
    fn gamma_bound_dominates_simulated_deviations_and_ignores_scale() {
        for (alpha, n, seed) in [(2.0, 7, 51u64), (4.0, 5, 52), (9.0, 12, 53)] {
            let bound = bound_gamma(n, alpha).value;
            // Rate 1 and rate 5 runs; the bound has no scale parameter.
            let unit = DistributionSpec::Gamma {
                shape: alpha,
                scale: 1.0,
            };
            let fifth = DistributionSpec::Gamma {
                shape: alpha,
                scale: 0.2,
            };
            let (m1, se1) = simulated_deviation(&unit, n, 2000, seed);
            let (m5, se5) = simulated_deviation(&fifth, n, 2000, seed + 100);
            assert!(m1 < bound, "alpha={alpha} n={n}: {m1} !< {bound}");
            assert!(m5 < bound, "alpha={alpha} n={n}: {m5} !< {bound}");
            let gap = (m1 - m5).abs();
            let combined = (se1 * se1 + se5 * se5).sqrt();
            assert!(
                gap < 3.0 * combined,
                "alpha={alpha} n={n}: scale changed the mean by {gap} (3 SE = {})",
                3.0 * combined
            );
        }
    }

    #[test]
    fn structured_determinants_match_hand_examples() {
        assert_eq!(
            det_structured(3.0, 1.0, 2, StructuredKind::Compound).unwrap(),
            8.0
        );
        assert_eq!(
            det_structured(3.0, 1.0, 2, StructuredKind::Cornered).unwrap(),
            2.0
        );
        assert_eq!(
            det_structured(5.0, 2.0, 1, StructuredKind::Compound).unwrap(),
            5.0
        );
        // At n = 1 the matrix is just [alpha]; the zero determinant from
        // matching parameters needs the off-diagonal band to exist.
        for n in 2..=6 {
            assert_eq!(
                det_structured(2.5, 2.5, n, StructuredKind::Compound).unwrap(),
                0.0,
                "n={n}"
            );
        }
        assert_eq!(
            det_structured(2.5, 2.5, 1, StructuredKind::Compound).unwrap(),
            2.5
        );
        for n in 2..=6 {
            assert_eq!(
                det_structured(2.5, 2.5, n, StructuredKind::Cornered).unwrap(),
                0.0,
                "n={n}"
            );
        }
        assert!(det_structured(1.0, 2.0, 0, StructuredKind::Compound).is_err());
        assert!(det_structured(1.0, 2.0, 1, StructuredKind::Cornered).is_err());
    }

    #[test]
    fn structured_determinants_match_dense_evaluation() {
        let mut rng = SeedSpec {
            master_seed: 61,
            stream_index: 0,
        }
        .rng();
        use rand::Rng;
        for n in 1..=12 {
            for _ in 0..20 {
                // Keep alpha and beta separated so the (alpha-beta)^(n-1)
                // factor does not sink the relative comparison.
                let (alpha, beta) = loop {
                    let a: f64 = rng.random_range(1.0..4.0);
                    let b: f64 = rng.random_range(1.0..4.0);
                    if (a - b).abs() >= 0.5 {
                        break (a, b);
                    }
                };
                let closed = det_structured(alpha, beta, n, StructuredKind::Compound).unwrap();
                let dense = structured_matrix(alpha, beta, n, StructuredKind::Compound)
                    .determinant();
                assert_relative_eq!(closed, dense, max_relative = 1e-8);

                if n >= 2 {
                    let closed = det_structured(alpha, beta, n, StructuredKind::Cornered).unwrap();
                    let dense = structured_matrix(alpha, beta, n, StructuredKind::Cornered)
                        .determinant();
                    assert_relative_eq!(closed, dense, max_relative = 1e-8);
                }
            }
        }
    }

    #[test]
    fn equal_components_closed_forms() {
        let s4 = equal_components_spectrum(4).unwrap();
        assert_eq!(s4.det, 0.0);
        assert_eq!(s4.trace, 1.0);
        assert_eq!(s4.eigenvalues, vec![1.0, 0.0, 0.0, 0.0]);

        let s2 = equal_components_spectrum(2).unwrap();
        assert_eq!(s2.det, -1.0);
        assert_eq!(s2.trace, 0.0);
        assert_eq!(s2.eigenvalues, vec![1.0, -1.0]);

        let s10 = equal_components_spectrum(10).unwrap();
        assert_relative_eq!(s10.det, 0.010077696, max_relative = 1e-12);
        assert_relative_eq!(s10.trace, 6.4, max_relative = 1e-14);
        assert_eq!(s10.eigenvalues.len(), 10);

        assert!(equal_components_spectrum(1).is_err());
    }

    #[test]
    fn equal_components_spectrum_matches_the_eigensolver() {
        let closed = equal_components_spectrum(10).unwrap();
        let m = equal_components_matrix(10).unwrap();
        let computed = eigenvalues(m.entries()).unwrap();
        assert_eq!(computed.len(), 10);
        for (c, e) in closed.eigenvalues.iter().zip(computed.values()) {
            assert_relative_eq!(*c, e.re, epsilon = 1e-9);
            assert!(e.im.abs() < 1e-9);
        }
    }

    #[test]
    fn two_region_eigenvalue_hits_the_landmark_points() {
        let at = |v1: f64, branch| lambda2_two_region(TwoRegionCase { v1, branch });
        assert!((at(2f64.sqrt() / 2.0, Branch::Plus) + 1.0).abs() < 1e-8);
        assert_relative_eq!(
            at(6f64.sqrt() / 6.0, Branch::Plus),
            -1.0 / 9.0,
            max_relative = 1e-12
        );
        assert_eq!(at(0.0, Branch::Plus), 1.0);
        assert_eq!(at(1.0, Branch::Plus), 1.0);
        assert_eq!(at(-1.0, Branch::Plus), 1.0);
        assert_eq!(at(0.0, Branch::Minus), -1.0);
    }

    #[test]
    fn two_region_closed_form_agrees_with_the_eigensolver() {
        for branch in [Branch::Plus, Branch::Minus] {
            for k in 0..=100 {
                let v1 = 0.02 * k as f64 - 1.0;
                let case = TwoRegionCase { v1, branch };
                let matrix = two_region_matrix(case);
                let lambda = second_eigenvalue(&matrix).unwrap();
                assert!(
                    lambda.value.im.abs() < 1e-12,
                    "v1={v1} {branch}: complex eigenvalue {}",
                    lambda.value
                );
                assert_relative_eq!(
                    lambda.value.re,
                    lambda2_two_region(case),
                    epsilon = 1e-10
                );
            }
        }
    }

    proptest! {
        #[test]
        fn minus_branch_negates_plus(v1 in -1.0f64..=1.0) {
            let plus = lambda2_two_region(TwoRegionCase { v1, branch: Branch::Plus });
            let minus = lambda2_two_region(TwoRegionCase { v1, branch: Branch::Minus });
            prop_assert_eq!(minus, -plus);
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&plus));
        }
    }

    #[test]
    fn beta_expectation_matches_closed_fractions() {
        assert_relative_eq!(
            expected_lambda2_beta(1.0, 1.0, Branch::Plus).unwrap(),
            -1.0 / 15.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            expected_lambda2_beta(3.0, 1.0, Branch::Plus).unwrap(),
            -13.0 / 35.0,
            max_relative = 1e-14
        );
        assert_eq!(
            expected_lambda2_beta(2.0, 5.0, Branch::Minus).unwrap(),
            -expected_lambda2_beta(2.0, 5.0, Branch::Plus).unwrap()
        );
        assert!(expected_lambda2_beta(0.0, 1.0, Branch::Plus).is_err());
        assert!(expected_lambda2_beta(1.0, -2.0, Branch::Plus).is_err());
    }

    #[test]
    fn beta_expectation_matches_monte_carlo() {
        let mut rng = SeedSpec {
            master_seed: 77,
            stream_index: 0,
        }
        .rng();
        use rand::Rng;
        for _ in 0..5 {
            let alpha: f64 = rng.random_range(0.5..6.0);
            let beta: f64 = rng.random_range(0.5..6.0);
            let closed = expected_lambda2_beta(alpha, beta, Branch::Plus).unwrap();

            let law = rand_distr::Beta::new(alpha, beta).unwrap();
            let draws = 200_000;
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..draws {
                let v1: f64 = law.sample(&mut rng);
                let x = lambda2_two_region(TwoRegionCase {
                    v1,
                    branch: Branch::Plus,
                });
                sum += x;
                sum_sq += x * x;
            }
            let mean = sum / draws as f64;
            let var = (sum_sq / draws as f64 - mean * mean).max(0.0);
            let se = (var / draws as f64).sqrt();
            assert!(
                (closed - mean).abs() < 3.0 * se,
                "alpha={alpha} beta={beta}: closed {closed} vs mean {mean} (3 SE = {})",
                3.0 * se
            );
        }
    }

    #[test]
    fn bound_values_are_finite_exactly_when_valid() {
        let results = [
            bound_normal(9),
            bound_normal(12),
            bound_gamma(10, 1.0),
            bound_gamma(12, 3.0),
            bound_general(10, &DistributionSpec::Constant(1.0).moments()),
            bound_general(10, &DistributionSpec::StandardNormal.moments()),
        ];
        for b in &results {
            assert_eq!(b.value.is_finite(), b.is_valid(), "{b:?}");
        }
    }

    #[test]
    fn branch_names_round_trip() {
        for branch in [Branch::Plus, Branch::Minus] {
            let parsed: Branch = branch.to_string().parse().unwrap();
            assert_eq!(parsed, branch);
        }
        assert!("sideways".parse::<Branch>().is_err());
    }
}
