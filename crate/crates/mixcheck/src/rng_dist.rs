//! Scalar distributions, their moments, unit vectors, and seeded randomness.
//!
//! Everything random in this crate flows through [`SeedSpec`], a counter-mode
//! generator description that makes every pipeline stage a pure function of
//! `(master_seed, stream_index)`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Distribution of the i.i.d. components used to build random unit vectors.
///
/// Sampling never yields an exact zero: zero draws are rejected and redrawn,
/// which changes nothing measure-theoretically for the continuous kinds and
/// is ruled out by validation for `Constant`.
#[derive(Clone, Debug, PartialEq)]
pub enum DistributionSpec {
    StandardNormal,
    Gamma { shape: f64, scale: f64 },
    Beta { alpha: f64, beta: f64 },
    Uniform { low: f64, high: f64 },
    Constant(f64),
}

/// Fourth and eighth moments of `u` and of `1/u`, as extended reals.
///
/// A moment that does not exist is `f64::INFINITY`; finite values are
/// strictly positive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentSet {
    pub m4: f64,
    pub m8: f64,
    pub im4: f64,
    pub im8: f64,
}

impl MomentSet {
    pub fn all_finite(&self) -> bool {
        self.m4.is_finite() && self.m8.is_finite() && self.im4.is_finite() && self.im8.is_finite()
    }
}

impl DistributionSpec {
    /// Checks parameter admissibility: positive shape/scale parameters,
    /// ordered finite uniform bounds, nonzero constant.
    pub fn validate(&self) -> Result<()> {
        fn positive(name: &str, x: f64) -> Result<()> {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(Error::Parameter(format!(
                    "{name} must be finite and positive, got {x}"
                )))
            }
        }
        match *self {
            DistributionSpec::StandardNormal => Ok(()),
            DistributionSpec::Gamma { shape, scale } => {
                positive("gamma shape", shape)?;
                positive("gamma scale", scale)
            }
            DistributionSpec::Beta { alpha, beta } => {
                positive("beta alpha", alpha)?;
                positive("beta beta", beta)
            }
            DistributionSpec::Uniform { low, high } => {
                if !low.is_finite() || !high.is_finite() {
                    return Err(Error::Parameter(format!(
                        "uniform bounds must be finite, got {low},{high}"
                    )));
                }
                if low >= high {
                    return Err(Error::Parameter(format!(
                        "uniform bounds must satisfy low < high, got {low},{high}"
                    )));
                }
                Ok(())
            }
            DistributionSpec::Constant(c) => {
                if !c.is_finite() || c == 0.0 {
                    Err(Error::Parameter(format!(
                        "constant must be finite and nonzero, got {c}"
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Closed-form moments `E[u^4]`, `E[u^8]`, `E[u^-4]`, `E[u^-8]`.
    pub fn moments(&self) -> MomentSet {
        match *self {
            DistributionSpec::StandardNormal => MomentSet {
                m4: 3.0,
                m8: 105.0,
                im4: f64::INFINITY,
                im8: f64::INFINITY,
            },
            DistributionSpec::Gamma { shape, scale } => MomentSet {
                m4: gamma_moment(shape, scale, 4),
                m8: gamma_moment(shape, scale, 8),
                im4: gamma_inverse_moment(shape, scale, 4),
                im8: gamma_inverse_moment(shape, scale, 8),
            },
            DistributionSpec::Beta { alpha, beta } => MomentSet {
                m4: beta_moment(alpha, beta, 4),
                m8: beta_moment(alpha, beta, 8),
                im4: beta_inverse_moment(alpha, beta, 4),
                im8: beta_inverse_moment(alpha, beta, 8),
            },
            DistributionSpec::Uniform { low, high } => MomentSet {
                m4: uniform_moment(low, high, 4),
                m8: uniform_moment(low, high, 8),
                im4: uniform_inverse_moment(low, high, 4),
                im8: uniform_inverse_moment(low, high, 8),
            },
            DistributionSpec::Constant(c) => MomentSet {
                m4: c.powi(4),
                m8: c.powi(8),
                im4: c.powi(-4),
                im8: c.powi(-8),
            },
        }
    }
}

/// `E[u^k] = scale^k * shape * (shape+1) * ... * (shape+k-1)`.
fn gamma_moment(shape: f64, scale: f64, k: i32) -> f64 {
    let mut m = scale.powi(k);
    for i in 0..k {
        m *= shape + f64::from(i);
    }
    m
}

/// `E[u^-k]` exists iff `shape > k`.
fn gamma_inverse_moment(shape: f64, scale: f64, k: i32) -> f64 {
    if shape <= f64::from(k) {
        return f64::INFINITY;
    }
    let mut m = scale.powi(-k);
    for i in 1..=k {
        m /= shape - f64::from(i);
    }
    m
}

/// `E[u^k] = prod_{i<k} (alpha+i) / (alpha+beta+i)`.
fn beta_moment(alpha: f64, beta: f64, k: i32) -> f64 {
    let mut m = 1.0;
    for i in 0..k {
        m *= (alpha + f64::from(i)) / (alpha + beta + f64::from(i));
    }
    m
}

/// `E[u^-k]` exists iff `alpha > k`.
fn beta_inverse_moment(alpha: f64, beta: f64, k: i32) -> f64 {
    if alpha <= f64::from(k) {
        return f64::INFINITY;
    }
    let mut m = 1.0;
    for i in 1..=k {
        m *= (alpha + beta - f64::from(i)) / (alpha - f64::from(i));
    }
    m
}

/// `E[u^k] = (high^{k+1} - low^{k+1}) / ((k+1)(high - low))`.
fn uniform_moment(low: f64, high: f64, k: i32) -> f64 {
    (high.powi(k + 1) - low.powi(k + 1)) / (f64::from(k + 1) * (high - low))
}

/// `E[u^-k]` exists iff the support excludes zero.
fn uniform_inverse_moment(low: f64, high: f64, k: i32) -> f64 {
    if low <= 0.0 && high >= 0.0 {
        return f64::INFINITY;
    }
    (low.powi(1 - k) - high.powi(1 - k)) / (f64::from(k - 1) * (high - low))
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            DistributionSpec::StandardNormal => write!(f, "normal"),
            DistributionSpec::Gamma { shape, scale } => write!(f, "gamma:{shape},{scale}"),
            DistributionSpec::Beta { alpha, beta } => write!(f, "beta:{alpha},{beta}"),
            DistributionSpec::Uniform { low, high } => write!(f, "uniform:{low},{high}"),
            DistributionSpec::Constant(c) => write!(f, "const:{c}"),
        }
    }
}

impl FromStr for DistributionSpec {
    type Err = Error;

    /// Grammar: `normal`, `gamma:SHAPE,SCALE`, `beta:ALPHA,BETA`,
    /// `uniform:LOW,HIGH`, `const:VALUE`. Parsed specs are validated.
    fn from_str(s: &str) -> Result<Self> {
        fn one(kind: &str, args: &str) -> Result<f64> {
            args.parse::<f64>().map_err(|_| {
                Error::Parameter(format!("{kind}: expected a number, got {args:?}"))
            })
        }
        fn two(kind: &str, args: &str) -> Result<(f64, f64)> {
            let (a, b) = args.split_once(',').ok_or_else(|| {
                Error::Parameter(format!("{kind}: expected two comma-separated numbers"))
            })?;
            Ok((one(kind, a)?, one(kind, b)?))
        }

        let (kind, args) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        let spec = match (kind, args) {
            ("normal", None) => DistributionSpec::StandardNormal,
            ("normal", Some(_)) => {
                return Err(Error::Parameter("normal takes no parameters".into()))
            }
            ("gamma", Some(a)) => {
                let (shape, scale) = two("gamma", a)?;
                DistributionSpec::Gamma { shape, scale }
            }
            ("beta", Some(a)) => {
                let (alpha, beta) = two("beta", a)?;
                DistributionSpec::Beta { alpha, beta }
            }
            ("uniform", Some(a)) => {
                let (low, high) = two("uniform", a)?;
                DistributionSpec::Uniform { low, high }
            }
            ("const", Some(a)) => DistributionSpec::Constant(one("const", a)?),
            (k, _) => {
                return Err(Error::Parameter(format!(
                    "unknown distribution {k:?}; expected normal, gamma:A,B, beta:A,B, uniform:A,B, or const:C"
                )))
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl serde::Serialize for DistributionSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for DistributionSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Deterministic generator description: a ChaCha8 master seed plus a stream
/// index. Equal specs produce bitwise-equal draw sequences on every platform
/// and thread count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        SeedSpec {
            master_seed,
            stream_index,
        }
    }

    /// Fresh generator positioned at this spec's stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }

    /// Derived seed for work item `index`, disjoint from every other
    /// substream of this spec.
    ///
    /// Disjointness holds for one level of derivation with both
    /// `stream_index` and `index` below 2^32; deriving from an already
    /// derived spec is not supported.
    pub fn substream(&self, index: u64) -> SeedSpec {
        assert!(index < (1 << 32), "substream index out of range");
        SeedSpec {
            master_seed: self.master_seed,
            stream_index: (self.stream_index << 32) | index,
        }
    }
}

/// Unit vector in `R^n`, `n >= 2`, Euclidean norm within 1e-12 of one.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitVector {
    entries: Vec<f64>,
}

impl UnitVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::Domain(format!(
                "unit vector needs dimension >= 2, got {}",
                entries.len()
            )));
        }
        if let Some(i) = entries.iter().position(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("non-finite entry at position {i}")));
        }
        let norm = euclidean_norm(&entries);
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!(
                "norm is {norm}, not 1 within 1e-12"
            )));
        }
        Ok(UnitVector { entries })
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }
}

/// Overflow-safe Euclidean norm (scaled by the largest magnitude).
fn euclidean_norm(v: &[f64]) -> f64 {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let sum: f64 = v.iter().map(|x| (x / scale) * (x / scale)).sum();
    scale * sum.sqrt()
}

/// Draws `n >= 2` i.i.d. components, rejecting exact zeros.
pub fn sample_iid(dist: &DistributionSpec, n: usize, seed: SeedSpec) -> Result<Vec<f64>> {
    let mut rng = seed.rng();
    sample_iid_with(dist, n, &mut rng)
}

/// As [`sample_iid`], advancing a caller-held generator.
pub fn sample_iid_with<R: Rng>(dist: &DistributionSpec, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::Parameter(format!("need n >= 2 components, got {n}")));
    }
    dist.validate()?;

    fn bad(e: impl fmt::Display) -> Error {
        Error::Parameter(e.to_string())
    }
    fn draw_nonzero<R: Rng>(n: usize, rng: &mut R, mut f: impl FnMut(&mut R) -> f64) -> Vec<f64> {
        (0..n)
            .map(|_| loop {
                let x = f(rng);
                if x != 0.0 {
                    return x;
                }
            })
            .collect()
    }

    match *dist {
        DistributionSpec::Constant(c) => Ok(vec![c; n]),
        DistributionSpec::StandardNormal => {
            let d = rand_distr::StandardNormal;
            Ok(draw_nonzero(n, rng, |r| d.sample(r)))
        }
        DistributionSpec::Gamma { shape, scale } => {
            let d = rand_distr::Gamma::new(shape, scale).map_err(bad)?;
            Ok(draw_nonzero(n, rng, move |r| d.sample(r)))
        }
        DistributionSpec::Beta { alpha, beta } => {
            let d = rand_distr::Beta::new(alpha, beta).map_err(bad)?;
            Ok(draw_nonzero(n, rng, move |r| d.sample(r)))
        }
        DistributionSpec::Uniform { low, high } => {
            let d = rand_distr::Uniform::new(low, high).map_err(bad)?;
            Ok(draw_nonzero(n, rng, move |r| d.sample(r)))
        }
    }
}

/// Normalizes a nonzero finite vector to unit length.
pub fn to_unit_vector(u: &[f64]) -> Result<UnitVector> {
    if u.len() < 2 {
        return Err(Error::Domain(format!(
            "unit vector needs dimension >= 2, got {}",
            u.len()
        )));
    }
    if let Some(i) = u.iter().position(|x| !x.is_finite()) {
        return Err(Error::Domain(format!("non-finite entry at position {i}")));
    }
    let norm = euclidean_norm(u);
    if norm == 0.0 {
        return Err(Error::Domain("cannot normalize the zero vector".into()));
    }
    UnitVector::new(u.iter().map(|x| x / norm).collect())
}
