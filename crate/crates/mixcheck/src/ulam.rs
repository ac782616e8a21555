//! Equal-measure partitions and the empirical transition matrices built by
//! counting where sampled points land.

use nalgebra::DMatrix;
use std::fmt;
use std::io;
use std::str::FromStr;

use crate::error::{Error, Result};

/// State space the partition covers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    UnitInterval,
    UnitTorus2D,
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::UnitInterval => write!(f, "unit interval"),
            Domain::UnitTorus2D => write!(f, "unit torus"),
        }
    }
}

/// A point of one of the two supported domains. Coordinates outside `[0, 1)`
/// are interpreted modulo one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Point {
    Interval(f64),
    Torus(f64, f64),
}

/// Equal-measure partition: `nx` cells of the unit interval, or an
/// `nx * ny` grid of the unit torus. Regions are numbered row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PartitionSpec {
    domain: Domain,
    nx: usize,
    ny: usize,
}

impl PartitionSpec {
    pub fn interval(cells: usize) -> Result<Self> {
        if cells == 0 {
            return Err(Error::Parameter("partition needs at least one cell".into()));
        }
        Ok(PartitionSpec {
            domain: Domain::UnitInterval,
            nx: cells,
            ny: 1,
        })
    }

    pub fn torus(nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::Parameter(format!(
                "torus grid must be positive in both directions, got {nx}x{ny}"
            )));
        }
        Ok(PartitionSpec {
            domain: Domain::UnitTorus2D,
            nx,
            ny,
        })
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Total number of regions.
    pub fn n(&self) -> usize {
        self.nx * self.ny
    }

    /// Region index of a point, wrapping coordinates into `[0, 1)` first.
    ///
    /// The point must be finite and belong to this partition's domain.
    pub fn region_of(&self, point: Point) -> usize {
        match (self.domain, point) {
            (Domain::UnitInterval, Point::Interval(x)) => cell_index(x, self.nx),
            (Domain::UnitTorus2D, Point::Torus(x, y)) => {
                cell_index(y, self.ny) * self.nx + cell_index(x, self.nx)
            }
            (d, p) => panic!("point {p:?} does not belong to the {d}"),
        }
    }
}

/// Index of the cell containing `x` after wrapping into `[0, 1)`. The final
/// clamp absorbs the one-ulp case where `wrapped * cells` rounds up to the
/// cell count.
fn cell_index(x: f64, cells: usize) -> usize {
    assert!(x.is_finite(), "coordinate must be finite");
    let mut w = x.rem_euclid(1.0);
    if w >= 1.0 {
        w = 0.0;
    }
    ((w * cells as f64).floor() as usize).min(cells - 1)
}

impl fmt::Display for PartitionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.domain {
            Domain::UnitInterval => write!(f, "{}", self.nx),
            Domain::UnitTorus2D => write!(f, "{}x{}", self.nx, self.ny),
        }
    }
}

impl FromStr for PartitionSpec {
    type Err = Error;

    /// Grammar: `N` for an interval partition, `NXxNY` for a torus grid.
    fn from_str(s: &str) -> Result<Self> {
        fn positive(s: &str) -> Result<usize> {
            s.parse::<usize>()
                .ok()
                .filter(|&v| v > 0)
                .ok_or_else(|| {
                    Error::Parameter(format!("expected a positive integer, got {s:?}"))
                })
        }
        match s.split_once('x') {
            Some((a, b)) => PartitionSpec::torus(positive(a)?, positive(b)?),
            None => PartitionSpec::interval(positive(s)?),
        }
    }
}

/// Observed `(start region, end region)` pairs over `n` regions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionData {
    pairs: Vec<(usize, usize)>,
    n: usize,
}

impl TransitionData {
    pub fn new(pairs: Vec<(usize, usize)>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("need at least one region".into()));
        }
        for (idx, &(s, e)) in pairs.iter().enumerate() {
            let bad = if s >= n {
                Some(s)
            } else if e >= n {
                Some(e)
            } else {
                None
            };
            if let Some(r) = bad {
                return Err(Error::Domain(format!(
                    "pair {idx}: region index {r} out of range for n={n}"
                )));
            }
        }
        Ok(TransitionData { pairs, n })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// Tallies transitions into an `n x n` count matrix.
pub fn transition_counts(data: &TransitionData) -> DMatrix<u64> {
    let mut counts = DMatrix::zeros(data.n, data.n);
    for &(s, e) in &data.pairs {
        counts[(s, e)] += 1;
    }
    counts
}

/// Row-normalized transition counts. Rows sum to one within 1e-12; the raw
/// counts and per-region totals are retained.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalStochasticMatrix {
    entries: DMatrix<f64>,
    counts: DMatrix<u64>,
    points_per_region: Vec<u64>,
}

impl EmpiricalStochasticMatrix {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn counts(&self) -> &DMatrix<u64> {
        &self.counts
    }

    pub fn points_per_region(&self) -> &[u64] {
        &self.points_per_region
    }
}

/// Normalizes each row of a count matrix. Every region must have at least
/// one outgoing transition.
pub fn empirical_matrix(counts: &DMatrix<u64>) -> Result<EmpiricalStochasticMatrix> {
    let n = counts.nrows();
    if n == 0 || counts.ncols() != n {
        return Err(Error::Shape(format!(
            "need a nonempty square count matrix, got {}x{}",
            counts.nrows(),
            counts.ncols()
        )));
    }
    let totals: Vec<u64> = (0..n)
        .map(|i| (0..n).map(|j| counts[(i, j)]).sum())
        .collect();
    if let Some(i) = totals.iter().position(|&t| t == 0) {
        return Err(Error::Domain(format!(
            "region {i} has no sampled transitions; every region needs at least one point"
        )));
    }
    let entries = DMatrix::from_fn(n, n, |i, j| counts[(i, j)] as f64 / totals[i] as f64);
    Ok(EmpiricalStochasticMatrix {
        entries,
        counts: counts.clone(),
        points_per_region: totals,
    })
}

/// Reads `start,end` transition pairs. The header is row 0 and must be
/// exactly `start,end`; data rows are numbered from 1 in errors.
pub fn load_transitions<R: io::Read>(reader: R, n: usize) -> Result<TransitionData> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    {
        let headers = csv.headers()?;
        if headers.len() != 2 || &headers[0] != "start" || &headers[1] != "end" {
            return Err(Error::Data {
                row: 0,
                message: format!(
                    "expected header start,end, got {:?}",
                    headers.iter().collect::<Vec<_>>().join(",")
                ),
            });
        }
    }
    let mut pairs = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Data {
            row,
            message: e.to_string(),
        })?;
        if record.len() != 2 {
            return Err(Error::Data {
                row,
                message: format!("expected 2 fields, got {}", record.len()),
            });
        }
        let parse = |field: &str| -> Result<usize> {
            let v: usize = field.parse().map_err(|_| Error::Data {
                row,
                message: format!("region index {field:?} is not a nonnegative integer"),
            })?;
            if v >= n {
                return Err(Error::Data {
                    row,
                    message: format!("region index {v} out of range for n={n}"),
                });
            }
            Ok(v)
        };
        pairs.push((parse(&record[0])?, parse(&record[1])?));
    }
    TransitionData::new(pairs, n)
}

/// Writes transition pairs with the `start,end` header understood by
/// [`load_transitions`].
pub fn write_transitions<W: io::Write>(data: &TransitionData, writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["start", "end"])?;
    for &(s, e) in data.pairs() {
        out.write_record([s.to_string(), e.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a pre-aggregated count matrix: headerless CSV, one row per region,
/// nonnegative integers. Rows are numbered from 1 in errors.
pub fn load_counts<R: io::Read>(reader: R) -> Result<DMatrix<u64>> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut rows: Vec<Vec<u64>> = Vec::new();
    let mut width = None;
    for (i, record) in csv.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Data {
            row,
            message: e.to_string(),
        })?;
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(Error::Data {
                row,
                message: format!("expected {w} fields, got {}", record.len()),
            });
        }
        let mut parsed = Vec::with_capacity(w);
        for field in record.iter() {
            parsed.push(field.parse::<u64>().map_err(|_| Error::Data {
                row,
                message: format!("count {field:?} is not a nonnegative integer"),
            })?);
        }
        rows.push(parsed);
    }
    let n = rows.len();
    if n == 0 || rows[0].len() != n {
        return Err(Error::Shape(format!(
            "count matrix must be square and nonempty, got {n}x{}",
            rows.first().map_or(0, Vec::len)
        )));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}
