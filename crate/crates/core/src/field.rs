//! Spatial generating functions, sensor arrays and the sampled coefficient
//! matrix `f_kj = f_k(r_j)`.
//!
//! Row `k` of a [`CoefficientMatrix`] stands for the generator
//! `G_k = sum_j f_kj Z_j`, where `Z_j` is the collective Pauli-z of site `j`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::OrthoBasis;

/// Default relative tolerance for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// A family of spatial functions `f_k(r)`.
///
/// Row indices are 0-based. For [`Taylor`](Self::Taylor) row `i` is the
/// power `k = i`; for [`FourierSine`](Self::FourierSine) row `i` is the
/// harmonic `k = i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneratingFunctionSet {
    /// `f_k(r) = (r / r0)^k`, `k = 0..count`. One-dimensional.
    Taylor { length_scale: f64, count: usize },
    /// `f_k(r) = sin(k pi r / r0)`, `k = 1..=count`. One-dimensional.
    FourierSine { length_scale: f64, count: usize },
    /// `f_k(r) = B_k |r - R_k|^(-beta)`, one function per source.
    PointSources {
        sources: Vec<Vec<f64>>,
        exponent: f64,
        strengths: Vec<f64>,
    },
    /// Explicit `K x J` samples.
    Tabulated { values: Vec<Vec<f64>> },
}

impl GeneratingFunctionSet {
    pub fn num_functions(&self) -> usize {
        match self {
            Self::Taylor { count, .. } | Self::FourierSine { count, .. } => *count,
            Self::PointSources { sources, .. } => sources.len(),
            Self::Tabulated { values } => values.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Taylor {
                length_scale,
                count,
            }
            | Self::FourierSine {
                length_scale,
                count,
            } => {
                if !(length_scale.is_finite() && *length_scale > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "length scale must be positive, got {length_scale}"
                    )));
                }
                if *count == 0 {
                    return Err(Error::InvalidInput("function set is empty".into()));
                }
            }
            Self::PointSources {
                sources,
                exponent,
                strengths,
            } => {
                if sources.is_empty() {
                    return Err(Error::InvalidInput("no point sources".into()));
                }
                if strengths.len() != sources.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "{} sources but {} strengths",
                        sources.len(),
                        strengths.len()
                    )));
                }
                if !(exponent.is_finite() && *exponent >= 1.0) {
                    return Err(Error::InvalidInput(format!(
                        "point-source exponent must be >= 1, got {exponent}"
                    )));
                }
                let d = sources[0].len();
                if !(1..=3).contains(&d) {
                    return Err(Error::DimensionMismatch(format!(
                        "source dimension must be 1, 2 or 3, got {d}"
                    )));
                }
                for (k, src) in sources.iter().enumerate() {
                    if src.len() != d {
                        return Err(Error::DimensionMismatch(format!(
                            "source {k} has dimension {} (expected {d})",
                            src.len()
                        )));
                    }
                    if src
                        .iter()
                        .chain(std::iter::once(&strengths[k]))
                        .any(|x| !x.is_finite())
                    {
                        return Err(Error::InvalidInput(format!("source {k} is not finite")));
                    }
                    if sources[..k].iter().any(|other| other == src) {
                        return Err(Error::InvalidInput(format!(
                            "source {k} coincides with an earlier source"
                        )));
                    }
                }
            }
            Self::Tabulated { values } => {
                CoefficientMatrix::from_rows(values.clone())?;
            }
        }
        Ok(())
    }
}

/// Sensor positions and per-site qubit budgets.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorArray {
    positions: Vec<Vec<f64>>,
    qubit_counts: Vec<u32>,
}

impl SensorArray {
    pub fn new(positions: Vec<Vec<f64>>, qubit_counts: Vec<u32>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidInput("sensor array is empty".into()));
        }
        if positions.len() != qubit_counts.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} positions but {} qubit counts",
                positions.len(),
                qubit_counts.len()
            )));
        }
        let d = positions[0].len();
        if !(1..=3).contains(&d) {
            return Err(Error::DimensionMismatch(format!(
                "position dimension must be 1, 2 or 3, got {d}"
            )));
        }
        for (j, p) in positions.iter().enumerate() {
            if p.len() != d {
                return Err(Error::DimensionMismatch(format!(
                    "sensor {j} has dimension {} (expected {d})",
                    p.len()
                )));
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "sensor {j} position is not finite"
                )));
            }
            if positions[..j].iter().any(|q| q == p) {
                return Err(Error::InvalidInput(format!(
                    "sensor {j} coincides with an earlier sensor"
                )));
            }
        }
        if qubit_counts.iter().map(|&n| u64::from(n)).sum::<u64>() == 0 {
            return Err(Error::InvalidInput("sensor array holds no qubits".into()));
        }
        Ok(Self {
            positions,
            qubit_counts,
        })
    }

    /// Sensors on a line at the given coordinates.
    pub fn on_line(coords: &[f64], qubit_counts: Vec<u32>) -> Result<Self> {
        Self::new(coords.iter().map(|&x| vec![x]).collect(), qubit_counts)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.positions[0].len()
    }

    pub fn positions(&self) -> &[Vec<f64>] {
        &self.positions
    }

    pub fn qubit_counts(&self) -> &[u32] {
        &self.qubit_counts
    }

    pub fn total_qubits(&self) -> u64 {
        self.qubit_counts.iter().map(|&n| u64::from(n)).sum()
    }

    /// Half-widths of the box `O_n = [-n_1, n_1] x ... x [-n_J, n_J]`.
    pub fn box_bounds(&self) -> Vec<f64> {
        self.qubit_counts.iter().map(|&n| f64::from(n)).collect()
    }
}

/// `K x J` matrix of samples `f_kj`; row `k` is the coefficient vector of `G_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix {
    rows: Vec<Vec<f64>>,
    sites: usize,
}

impl CoefficientMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::InvalidInput("coefficient matrix has no rows".into()));
        };
        let sites = first.len();
        if sites == 0 {
            return Err(Error::InvalidInput(
                "coefficient matrix has no columns".into(),
            ));
        }
        for (k, row) in rows.iter().enumerate() {
            if row.len() != sites {
                return Err(Error::DimensionMismatch(format!(
                    "row {k} has {} entries (expected {sites})",
                    row.len()
                )));
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "row {k} has non-finite entries"
                )));
            }
        }
        Ok(Self { rows, sites })
    }

    /// Number of functions `K`.
    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Number of sites `J`.
    pub fn num_sites(&self) -> usize {
        self.sites
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.rows[k]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// `f_k . s`, the eigenvalue of `G_k` on the product eigenstate `|s>`.
    pub fn eigenvalue(&self, k: usize, s: &[f64]) -> f64 {
        crate::linalg::dot(&self.rows[k], s)
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows.len(), self.sites, |k, j| self.rows[k][j])
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Samples every function of `fns` at every sensor position.
pub fn sample_coefficients(
    fns: &GeneratingFunctionSet,
    array: &SensorArray,
) -> Result<CoefficientMatrix> {
    fns.validate()?;
    let rows = match fns {
        GeneratingFunctionSet::Taylor {
            length_scale,
            count,
        } => {
            require_line(array)?;
            (0..*count)
                .map(|k| {
                    array
                        .positions()
                        .iter()
                        .map(|p| (p[0] / length_scale).powi(k as i32))
                        .collect()
                })
                .collect()
        }
        GeneratingFunctionSet::FourierSine {
            length_scale,
            count,
        } => {
            require_line(array)?;
            (1..=*count)
                .map(|k| {
                    array
                        .positions()
                        .iter()
                        .map(|p| (k as f64 * std::f64::consts::PI * p[0] / length_scale).sin())
                        .collect()
                })
                .collect()
        }
        GeneratingFunctionSet::PointSources {
            sources,
            exponent,
            strengths,
        } => {
            if sources[0].len() != array.dimension() {
                return Err(Error::DimensionMismatch(format!(
                    "sources are {}-dimensional but sensors are {}-dimensional",
                    sources[0].len(),
                    array.dimension()
                )));
            }
            let mut rows = Vec::with_capacity(sources.len());
            for (k, (src, b)) in sources.iter().zip(strengths).enumerate() {
                let mut row = Vec::with_capacity(array.len());
                for (j, p) in array.positions().iter().enumerate() {
                    let d = distance(p, src);
                    if d == 0.0 {
                        return Err(Error::PositionOnSource {
                            sensor: j,
                            source_index: k,
                        });
                    }
                    row.push(b * d.powf(-exponent));
                }
                rows.push(row);
            }
            rows
        }
        GeneratingFunctionSet::Tabulated { values } => {
            if values[0].len() != array.len() {
                return Err(Error::DimensionMismatch(format!(
                    "tabulated values have {} columns for {} sensors",
                    values[0].len(),
                    array.len()
                )));
            }
            values.clone()
        }
    };
    CoefficientMatrix::from_rows(rows)
}

fn require_line(array: &SensorArray) -> Result<()> {
    if array.dimension() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "Taylor and Fourier sets are one-dimensional, sensors are {}-dimensional",
            array.dimension()
        )));
    }
    Ok(())
}

/// Positions of the `k_star` antinodes of `sin(k_star pi r / r0)` on
/// `(0, r0)`: `r_j = r0 (j - 1/2) / k_star`. The sampled signal row is
/// `(1, -1, 1, ...)`.
pub fn fourier_extremal_positions(k_star: usize, r0: f64) -> Result<Vec<f64>> {
    if k_star == 0 {
        return Err(Error::InvalidInput("k_star must be >= 1".into()));
    }
    if !(r0.is_finite() && r0 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "length scale must be positive, got {r0}"
        )));
    }
    Ok((1..=k_star)
        .map(|j| r0 * (j as f64 - 0.5) / k_star as f64)
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankReport {
    pub rank: usize,
    /// Rows lying (within tolerance) in the span of the rows before them.
    pub dependent_rows: Vec<usize>,
}

/// Numerical rank of `f` and the rows that add nothing to the span.
///
/// The rank comes from a column-pivoted QR of `f^T`: diagonal entries of `R`
/// below `tol * |R_00|` are treated as zero. Dependent rows are found by a
/// separate greedy Gram-Schmidt pass in row order, so the two routes can be
/// compared.
pub fn rank_report(f: &CoefficientMatrix, tol: f64) -> Result<RankReport> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "rank tolerance must be positive, got {tol}"
        )));
    }
    let ft = f.to_dmatrix().transpose();
    let qr = ft.col_piv_qr();
    let r = qr.r();
    let diag: Vec<f64> = (0..r.nrows().min(r.ncols()))
        .map(|i| r[(i, i)].abs())
        .collect();
    let lead = diag.iter().cloned().fold(0.0_f64, f64::max);
    let rank = if lead == 0.0 {
        0
    } else {
        diag.iter().filter(|&&d| d > tol * lead).count()
    };

    let mut basis = OrthoBasis::new(f.num_sites());
    let dependent_rows = f
        .rows()
        .iter()
        .enumerate()
        .filter_map(|(k, row)| (!basis.push(row, tol)).then_some(k))
        .collect();
    Ok(RankReport {
        rank,
        dependent_rows,
    })
}
