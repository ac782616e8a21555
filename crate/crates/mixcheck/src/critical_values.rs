//! Monte Carlo calibration of the decision thresholds.
//!
//! The null model draws a random unit vector, builds the unistochastic
//! matrix of its reflector composed with a random permutation, and records
//! the subdominant eigenvalue. Two order statistics of such samples become
//! the thresholds: `c1` from the distances `|lambda2 - 1|` under a
//! concentration constraint on the permutations, `c2` from the moduli
//! `|lambda2|` under the unconstrained draw.

use num_complex::Complex64;
use rayon::prelude::*;
use std::io;

use crate::error::{Error, Result};
use crate::matrices::{householder, random_permutation_with, unistochastic_from, PermConstraint};
use crate::rng_dist::{sample_iid_with, to_unit_vector, DistributionSpec, SeedSpec};
use crate::spectra::second_eigenvalue;

/// One Monte Carlo sampling run: dimension, sample size, component
/// distribution, permutation constraint, and the seed of the run.
#[derive(Clone, Debug, PartialEq)]
pub struct McConfig {
    pub n: usize,
    pub num_samples: usize,
    pub dist: DistributionSpec,
    pub perm_constraint: PermConstraint,
    pub seed: SeedSpec,
}

impl McConfig {
    /// Dimension at least 3, at least 100 samples, valid distribution,
    /// satisfiable constraint.
    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::Parameter(format!(
                "Monte Carlo calibration needs n >= 3, got {}",
                self.n
            )));
        }
        if self.num_samples < 100 {
            return Err(Error::Parameter(format!(
                "need at least 100 samples for usable order statistics, got {}",
                self.num_samples
            )));
        }
        self.dist.validate()?;
        if let PermConstraint::MinCycles(k) = self.perm_constraint {
            if k > self.n {
                return Err(Error::Parameter(format!(
                    "min-cycles:{k} is unsatisfiable for n={}",
                    self.n
                )));
            }
        }
        Ok(())
    }
}

/// Subdominant eigenvalues of one Monte Carlo run, in draw order.
#[derive(Clone, Debug, PartialEq)]
pub struct Lambda2Sample {
    values: Vec<Complex64>,
    config: McConfig,
}

impl Lambda2Sample {
    /// Wraps precomputed values. The length must match the config and every
    /// modulus must lie in the closed unit disk up to 1e-8.
    pub fn from_parts(values: Vec<Complex64>, config: McConfig) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Parameter("sample must be nonempty".into()));
        }
        if values.len() != config.num_samples {
            return Err(Error::Config(format!(
                "sample holds {} values but the config says {}",
                values.len(),
                config.num_samples
            )));
        }
        if let Some(v) = values.iter().find(|v| v.norm() > 1.0 + 1e-8) {
            return Err(Error::Domain(format!(
                "value {v} lies outside the unit disk"
            )));
        }
        Ok(Lambda2Sample { values, config })
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn config(&self) -> &McConfig {
        &self.config
    }

    fn distances(&self) -> Vec<f64> {
        self.values.iter().map(|v| (v - 1.0).norm()).collect()
    }

    fn moduli(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }
}

/// Draws the null sample. Deterministic in the config, bit for bit, for any
/// thread count: draw `i` consumes only the substream `i` generator, vector
/// components first, then the permutation.
pub fn sample_lambda2(config: &McConfig) -> Result<Lambda2Sample> {
    config.validate()?;
    let draws: Vec<Result<Complex64>> = (0..config.num_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = config.seed.substream(i as u64).rng();
            let u = sample_iid_with(&config.dist, config.n, &mut rng)?;
            let v = to_unit_vector(&u)?;
            let h = householder(&v);
            let q = random_permutation_with(config.n, config.perm_constraint, &mut rng)?;
            let m = unistochastic_from(&q, &h)?;
            Ok(second_eigenvalue(m.entries())?.value)
        })
        .collect();
    let mut values = Vec::with_capacity(config.num_samples);
    for (index, draw) in draws.into_iter().enumerate() {
        values.push(draw.map_err(|e| Error::Sample {
            index,
            source: Box::new(e),
        })?);
    }
    Lambda2Sample::from_parts(values, config.clone())
}

/// Rounds values that sit within 1e-9 relative of an integer before taking
/// ceil or floor, so quantile indices are immune to products like
/// `0.95 * 5000 = 4750.000000000001`.
fn snap_to_integer(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x
    }
}

fn check_alpha(name: &str, alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "{name} must lie strictly between 0 and 1, got {alpha}"
        )))
    }
}

/// Threshold from the distances `|lambda2 - 1|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct C1Estimate {
    pub c1: f64,
    /// Fraction of the sample at or above `c1`; at most `alpha1` unless the
    /// order statistic is tied.
    pub achieved: f64,
    /// All distances identical.
    pub degenerate: bool,
    /// `c1` occurs more than once in the sample.
    pub tied: bool,
}

/// `c1` is the order statistic `d_(j)` of the ascending distances with
/// `j = min(N, ceil((1 - alpha1) N) + 1)`.
pub fn critical_value_c1(sample: &Lambda2Sample, alpha1: f64) -> Result<C1Estimate> {
    check_alpha("alpha1", alpha1)?;
    let mut d = sample.distances();
    d.sort_by(f64::total_cmp);
    let n = d.len();
    let j = ((snap_to_integer((1.0 - alpha1) * n as f64).ceil() as usize) + 1).min(n);
    let c1 = d[j - 1];
    let at_or_above = d.iter().filter(|&&x| x >= c1).count();
    Ok(C1Estimate {
        c1,
        achieved: at_or_above as f64 / n as f64,
        degenerate: d[0] == d[n - 1],
        tied: d.iter().filter(|&&x| x == c1).count() > 1,
    })
}

/// Threshold from the moduli `|lambda2|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct C2Estimate {
    pub c2: f64,
    /// Fraction of the sample at or below `c2`; at most `alpha2` when
    /// `alpha2 * N >= 1` and the order statistic is untied.
    pub achieved: f64,
    /// `c2` was cut down to `1 - c1` to keep the decision regions disjoint.
    pub clamped: bool,
    /// All moduli identical.
    pub degenerate: bool,
    /// The raw order statistic occurs more than once in the sample.
    pub tied: bool,
}

/// `c2` is the order statistic `m_(k)` of the ascending moduli with
/// `k = max(1, floor(alpha2 N))`, clamped to `1 - c1`.
pub fn critical_value_c2(sample: &Lambda2Sample, alpha2: f64, c1: f64) -> Result<C2Estimate> {
    check_alpha("alpha2", alpha2)?;
    let mut m = sample.moduli();
    m.sort_by(f64::total_cmp);
    let n = m.len();
    let k = (snap_to_integer(alpha2 * n as f64).floor() as usize).max(1);
    let raw = m[k - 1];
    let cap = 1.0 - c1;
    let clamped = raw > cap;
    let c2 = if clamped { cap } else { raw };
    let at_or_below = m.iter().filter(|&&x| x <= c2).count();
    Ok(C2Estimate {
        c2,
        achieved: at_or_below as f64 / n as f64,
        clamped,
        degenerate: m[0] == m[n - 1],
        tied: m.iter().filter(|&&x| x == raw).count() > 1,
    })
}

/// Scalar reduction applied to the sample before building its ECDF.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleTransform {
    DistanceFromOne,
    Modulus,
}

/// Right-continuous empirical distribution: `(x, P(X <= x))` at each
/// distinct sample value, ascending.
pub fn ecdf(sample: &Lambda2Sample, transform: SampleTransform) -> Vec<(f64, f64)> {
    let mut xs = match transform {
        SampleTransform::DistanceFromOne => sample.distances(),
        SampleTransform::Modulus => sample.moduli(),
    };
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut points: Vec<(f64, f64)> = Vec::new();
    for (i, x) in xs.iter().enumerate() {
        let p = (i + 1) as f64 / n;
        match points.last_mut() {
            Some(last) if last.0 == *x => last.1 = p,
            _ => points.push((*x, p)),
        }
    }
    points
}

/// Full calibration request: one dimension and sample size, one component
/// distribution, a permutation constraint per threshold, both risk levels,
/// and a base seed.
#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationConfig {
    pub n: usize,
    pub num_samples: usize,
    pub dist: DistributionSpec,
    pub c1_constraint: PermConstraint,
    pub c2_constraint: PermConstraint,
    pub alpha1: f64,
    pub alpha2: f64,
    pub seed: SeedSpec,
}

impl CalibrationConfig {
    /// The two sampling runs: the `c1` sample on stream `2s`, the `c2`
    /// sample on stream `2s + 1`, where `s` is the base stream.
    pub fn mc_configs(&self) -> (McConfig, McConfig) {
        let base = |constraint, offset| McConfig {
            n: self.n,
            num_samples: self.num_samples,
            dist: self.dist.clone(),
            perm_constraint: constraint,
            seed: SeedSpec::new(self.seed.master_seed, 2 * self.seed.stream_index + offset),
        };
        (
            base(self.c1_constraint, 0),
            base(self.c2_constraint, 1),
        )
    }

    /// Runs both samples and reduces them to thresholds.
    pub fn estimate(&self) -> Result<CriticalValues> {
        self.estimate_with_samples().map(|(cv, _, _)| cv)
    }

    /// Like [`estimate`](Self::estimate), but hands back the two raw
    /// eigenvalue samples for export or inspection.
    pub fn estimate_with_samples(&self) -> Result<(CriticalValues, Lambda2Sample, Lambda2Sample)> {
        check_alpha("alpha1", self.alpha1)?;
        check_alpha("alpha2", self.alpha2)?;
        let (cfg1, cfg2) = self.mc_configs();
        let sample1 = sample_lambda2(&cfg1)?;
        let sample2 = sample_lambda2(&cfg2)?;
        let e1 = critical_value_c1(&sample1, self.alpha1)?;
        let e2 = critical_value_c2(&sample2, self.alpha2, e1.c1)?;
        let cv = CriticalValues {
            n: self.n,
            num_samples: self.num_samples,
            dist: self.dist.clone(),
            c1_constraint: self.c1_constraint,
            c2_constraint: self.c2_constraint,
            alpha1: self.alpha1,
            alpha2: self.alpha2,
            c1: e1.c1,
            c2: e2.c2,
            achieved1: e1.achieved,
            achieved2: e2.achieved,
            clamped: e2.clamped,
            degenerate1: e1.degenerate,
            degenerate2: e2.degenerate,
            ties1: e1.tied,
            ties2: e2.tied,
            seed: self.seed,
        };
        Ok((cv, sample1, sample2))
    }
}

/// Calibrated thresholds with full provenance. `c2 <= 1 - c1` always holds
/// (enforced by clamping); `c1` and `c2` land strictly inside `(0, 1)` for
/// healthy samples, and the degenerate flags mark the samples that cannot
/// promise that.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(into = "CriticalValuesWire", from = "CriticalValuesWire")]
pub struct CriticalValues {
    pub n: usize,
    pub num_samples: usize,
    pub dist: DistributionSpec,
    pub c1_constraint: PermConstraint,
    pub c2_constraint: PermConstraint,
    pub alpha1: f64,
    pub alpha2: f64,
    pub c1: f64,
    pub c2: f64,
    pub achieved1: f64,
    pub achieved2: f64,
    pub clamped: bool,
    pub degenerate1: bool,
    pub degenerate2: bool,
    pub ties1: bool,
    pub ties2: bool,
    pub seed: SeedSpec,
}

impl CriticalValues {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(serde::Serialize, serde::Deserialize)]
struct ConstraintPairWire {
    c1: PermConstraint,
    c2: PermConstraint,
}

#[derive(serde::Serialize, serde::Deserialize)]
struct CriticalValuesWire {
    n: usize,
    #[serde(rename = "N")]
    num_samples: usize,
    dist: DistributionSpec,
    perm_constraint: ConstraintPairWire,
    alpha1: f64,
    alpha2: f64,
    c1: f64,
    c2: f64,
    achieved1: f64,
    achieved2: f64,
    clamped: bool,
    degenerate1: bool,
    degenerate2: bool,
    ties1: bool,
    ties2: bool,
    seed: SeedSpec,
}

impl From<CriticalValues> for CriticalValuesWire {
    fn from(v: CriticalValues) -> Self {
        CriticalValuesWire {
            n: v.n,
            num_samples: v.num_samples,
            dist: v.dist,
            perm_constraint: ConstraintPairWire {
                c1: v.c1_constraint,
                c2: v.c2_constraint,
            },
            alpha1: v.alpha1,
            alpha2: v.alpha2,
            c1: v.c1,
            c2: v.c2,
            achieved1: v.achieved1,
            achieved2: v.achieved2,
            clamped: v.clamped,
            degenerate1: v.degenerate1,
            degenerate2: v.degenerate2,
            ties1: v.ties1,
            ties2: v.ties2,
            seed: v.seed,
        }
    }
}

impl From<CriticalValuesWire> for CriticalValues {
    fn from(w: CriticalValuesWire) -> Self {
        CriticalValues {
            n: w.n,
            num_samples: w.num_samples,
            dist: w.dist,
            c1_constraint: w.perm_constraint.c1,
            c2_constraint: w.perm_constraint.c2,
            alpha1: w.alpha1,
            alpha2: w.alpha2,
            c1: w.c1,
            c2: w.c2,
            achieved1: w.achieved1,
            achieved2: w.achieved2,
            clamped: w.clamped,
            degenerate1: w.degenerate1,
            degenerate2: w.degenerate2,
            ties1: w.ties1,
            ties2: w.ties2,
            seed: w.seed,
        }
    }
}

/// Writes a sample as CSV: `index,re,im,modulus,distance_to_one`.
pub fn write_sample_csv<W: io::Write>(sample: &Lambda2Sample, writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["index", "re", "im", "modulus", "distance_to_one"])?;
    for (i, v) in sample.values().iter().enumerate() {
        out.write_record([
            i.to_string(),
            v.re.to_string(),
            v.im.to_string(),
            v.norm().to_string(),
            (v - 1.0).norm().to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Writes an ECDF as CSV: `value,cumulative_probability`.
pub fn write_ecdf_csv<W: io::Write>(points: &[(f64, f64)], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["value", "cumulative_probability"])?;
    for (x, p) in points {
        out.write_record([x.to_string(), p.to_string()])?;
    }
    out.flush()?;
    Ok(())
}
