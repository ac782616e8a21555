//! Reference stirring protocols with known classifications: fixed points,
//! circle rotations, and two uniformly expanding torus maps. All four
//! preserve Lebesgue measure, so they exercise the pipeline without
//! violating its modeling assumptions.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng_dist::SeedSpec;
use crate::ulam::{Domain, PartitionSpec, Point, TransitionData};

/// A concrete measure-preserving map.
///
/// `Identity` and `CircleRotation` act on the unit interval read as a
/// circle; `CatMap` and `BakerMap` act on the unit torus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProtocolSpec {
    Identity,
    /// `x -> x + theta mod 1` with `theta` in `[0, 1)`.
    CircleRotation { theta: f64 },
    /// `(x, y) -> (x + y, x + 2y) mod 1`.
    CatMap,
    /// `(x, y) -> (2x mod 1, (y + floor(2x)) / 2)`.
    BakerMap,
}

impl ProtocolSpec {
    pub fn domain(&self) -> Domain {
        match self {
            ProtocolSpec::Identity | ProtocolSpec::CircleRotation { .. } => Domain::UnitInterval,
            ProtocolSpec::CatMap | ProtocolSpec::BakerMap => Domain::UnitTorus2D,
        }
    }
}

impl std::fmt::Display for ProtocolSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProtocolSpec::Identity => f.write_str("identity"),
            ProtocolSpec::CircleRotation { theta } => write!(f, "rotation:{theta}"),
            ProtocolSpec::CatMap => f.write_str("cat"),
            ProtocolSpec::BakerMap => f.write_str("baker"),
        }
    }
}

impl std::str::FromStr for ProtocolSpec {
    type Err = Error;

    /// Grammar: `identity`, `cat`, `baker`, or `rotation:T` where `T` is a
    /// decimal angle or a fraction `P/Q`; angles are wrapped into `[0, 1)`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => return Ok(ProtocolSpec::Identity),
            "cat" => return Ok(ProtocolSpec::CatMap),
            "baker" => return Ok(ProtocolSpec::BakerMap),
            _ => {}
        }
        if let Some(raw) = s.strip_prefix("rotation:") {
            let value = if let Some((p, q)) = raw.split_once('/') {
                let p: f64 = p
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parameter(format!("bad fraction numerator {p:?}")))?;
                let q: f64 = q
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parameter(format!("bad fraction denominator {q:?}")))?;
                if q == 0.0 {
                    return Err(Error::Parameter("fraction denominator is zero".into()));
                }
                p / q
            } else {
                raw.parse::<f64>()
                    .map_err(|_| Error::Parameter(format!("bad rotation angle {raw:?}")))?
            };
            if !value.is_finite() {
                return Err(Error::Parameter(format!(
                    "rotation angle must be finite, got {value}"
                )));
            }
            let mut theta = value.rem_euclid(1.0);
            if theta >= 1.0 {
                theta = 0.0;
            }
            return Ok(ProtocolSpec::CircleRotation { theta });
        }
        Err(Error::Parameter(format!(
            "unknown protocol {s:?}; expected identity, rotation:T, cat, or baker"
        )))
    }
}

fn wrap(s: f64) -> f64 {
    let mut w = s - s.floor();
    if w >= 1.0 {
        w = 0.0;
    }
    w
}

/// One application of the map. The point must live on the protocol's domain
/// and the result stays in `[0, 1)` per coordinate.
pub fn apply(spec: ProtocolSpec, point: Point) -> Point {
    match (spec, point) {
        (ProtocolSpec::Identity, Point::Interval(x)) => Point::Interval(x),
        (ProtocolSpec::CircleRotation { theta }, Point::Interval(x)) => {
            // x and theta both sit in [0, 1), so one conditional subtraction
            // wraps the sum and keeps grid-aligned angles exact.
            let s = x + theta;
            Point::Interval(if s >= 1.0 { s - 1.0 } else { s })
        }
        (ProtocolSpec::CatMap, Point::Torus(x, y)) => Point::Torus(wrap(x + y), wrap(x + 2.0 * y)),
        (ProtocolSpec::BakerMap, Point::Torus(x, y)) => {
            let doubled = 2.0 * x;
            let digit = doubled.floor();
            Point::Torus(doubled - digit, (y + digit) / 2.0)
        }
        (spec, point) => panic!("point {point:?} does not live on the domain of {spec}"),
    }
}

/// Uniform point in region `region` of an interval or torus partition.
fn sample_in_region(partition: &PartitionSpec, region: usize, rng: &mut impl rand::Rng) -> Point {
    match partition.domain() {
        Domain::UnitInterval => {
            let u: f64 = rng.random();
            Point::Interval((region as f64 + u) / partition.nx() as f64)
        }
        Domain::UnitTorus2D => {
            let ix = region % partition.nx();
            let iy = region / partition.nx();
            let u: f64 = rng.random();
            let w: f64 = rng.random();
            Point::Torus(
                (ix as f64 + u) / partition.nx() as f64,
                (iy as f64 + w) / partition.ny() as f64,
            )
        }
    }
}

/// Draw `points_per_region` uniform points in every region, push each one
/// through the map once, and record `(start region, end region)` pairs.
///
/// Regions get independent seed substreams, so the output is a pure function
/// of `(spec, partition, points_per_region, seed)` regardless of thread
/// count; pairs are ordered by region, then by draw index.
pub fn simulate(
    spec: ProtocolSpec,
    partition: &PartitionSpec,
    points_per_region: usize,
    seed: SeedSpec,
) -> Result<TransitionData> {
    if spec.domain() != partition.domain() {
        return Err(Error::Config(format!(
            "protocol {spec} acts on the {}, but the partition covers the {}",
            spec.domain(),
            partition.domain()
        )));
    }
    if points_per_region == 0 {
        return Err(Error::Parameter(
            "need at least one point per region".into(),
        ));
    }

    let n = partition.n();
    let per_region: Vec<Vec<(usize, usize)>> = (0..n)
        .into_par_iter()
        .map(|region| {
            let mut rng = seed.substream(region as u64).rng();
            (0..points_per_region)
                .map(|_| {
                    let start = sample_in_region(partition, region, &mut rng);
                    debug_assert_eq!(partition.region_of(start), region);
                    (region, partition.region_of(apply(spec, start)))
                })
                .collect()
        })
        .collect();

    TransitionData::new(per_region.into_iter().flatten().collect(), n)
}
