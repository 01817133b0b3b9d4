//! Alternating-signal scenario: single-qubit sensors at `r_j = j / J`, the
//! signal `f(r_j) = (-1)^j` and nearest-neighbour noise
//! `f_k(r_j) = delta_{k,j} + delta_{k,j+1}` for `k = 1..J-1`.
//!
//! Only `+-(1,-1,1,...)` share all noise eigenvalues, so after the worst-case
//! twirl a sensor-product state keeps signal information only in that one
//! two-dimensional block, whose weight is at most `2^-(J-1)`.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::branch::{product_state, qfi_mixed, twirl, SiteAmplitudes, TWIRL_TOL};
use crate::design::{optimal_probe_integer, DesignProblem, ProbePair};
use crate::error::{Error, Result};
use crate::field::{CoefficientMatrix, SensorArray};

pub const MAX_CENSUS_STATES: u64 = 1_000_000;
pub const MAX_SWEEP_SITES: usize = 12;
/// Grid points per site angle when `J <= GRID_MAX_SITES`.
pub const GRID_POINTS: usize = 32;
pub const GRID_MAX_SITES: usize = 4;
pub const SWEEP_SEED: u64 = 0x5eed_a17e;

#[derive(Debug, Clone, PartialEq)]
pub struct AlternatingScenario {
    sites: usize,
    coefficients: CoefficientMatrix,
    array: SensorArray,
}

/// `(-1)^j` for 1-based `j`.
fn alternating_sign(j: usize) -> f64 {
    if j.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

pub fn build_alternating(sites: usize) -> Result<AlternatingScenario> {
    if sites < 2 || !sites.is_multiple_of(2) {
        return Err(Error::OddJ(sites));
    }
    let mut rows = Vec::with_capacity(sites);
    rows.push((1..=sites).map(alternating_sign).collect());
    for k in 1..sites {
        rows.push(
            (1..=sites)
                .map(|j| if j == k || j == k + 1 { 1.0 } else { 0.0 })
                .collect(),
        );
    }
    let coords: Vec<f64> = (1..=sites).map(|j| j as f64 / sites as f64).collect();
    Ok(AlternatingScenario {
        sites,
        coefficients: CoefficientMatrix::from_rows(rows)?,
        array: SensorArray::on_line(&coords, vec![1; sites])?,
    })
}

impl AlternatingScenario {
    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn coefficients(&self) -> &CoefficientMatrix {
        &self.coefficients
    }

    pub fn array(&self) -> &SensorArray {
        &self.array
    }

    pub const SIGNAL: usize = 0;

    pub fn noise_indices(&self) -> BTreeSet<usize> {
        (1..self.sites).collect()
    }

    pub fn signal_row(&self) -> &[f64] {
        self.coefficients.row(Self::SIGNAL)
    }

    /// Integer-mode design problem with unit budgets.
    pub fn problem(&self) -> Result<DesignProblem> {
        DesignProblem::for_array(
            self.coefficients.clone(),
            &self.array,
            Self::SIGNAL,
            self.noise_indices(),
            true,
        )
    }

    /// Sites `cos(theta_j) |(-1)^j> + sin(theta_j) |(-1)^(j+1)>`.
    pub fn product_sites(&self, angles: &[f64]) -> Vec<SiteAmplitudes> {
        angles
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let up = alternating_sign(i + 1);
                SiteAmplitudes::real(t.cos(), t.sin(), up, -up)
            })
            .collect()
    }

    /// Twirled signal QFI of the product state with the given site angles.
    pub fn product_qfi(&self, angles: &[f64]) -> Result<f64> {
        let sites = self.product_sites(angles);
        let state = product_state(&sites)?;
        let blocks = twirl(&state, &self.coefficients, &self.noise_indices(), TWIRL_TOL)?;
        Ok(qfi_mixed(&blocks, self.signal_row()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockCensus {
    /// Block dimension -> number of blocks of that dimension.
    pub dims: BTreeMap<usize, usize>,
    /// Members of every block with more than one state.
    pub multi_blocks: Vec<Vec<Vec<f64>>>,
}

impl BlockCensus {
    pub fn total_states(&self) -> usize {
        self.dims.iter().map(|(d, c)| d * c).sum()
    }

    /// `"1x2 62x1"`-style summary, largest blocks first.
    pub fn summary(&self) -> String {
        self.dims
            .iter()
            .rev()
            .map(|(d, c)| format!("{c}x{d}"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Enumerates all `2^J` eigenvectors `s in {+-1}^J` and groups them by their
/// noise eigenvalues. The eigenvalues are integers here, so grouping is exact.
pub fn enumerate_blocks(scenario: &AlternatingScenario) -> Result<BlockCensus> {
    let j = scenario.sites;
    let states = 1u64.checked_shl(j as u32).unwrap_or(u64::MAX);
    if states > MAX_CENSUS_STATES {
        return Err(Error::TooLarge {
            what: "block census",
            size: u128::from(states),
            limit: u128::from(MAX_CENSUS_STATES),
        });
    }
    let noise = scenario.noise_indices();
    let mut groups: BTreeMap<Vec<i64>, Vec<Vec<f64>>> = BTreeMap::new();
    for mask in 0..states {
        let s: Vec<f64> = (0..j)
            .map(|i| {
                if mask >> (j - 1 - i) & 1 == 0 {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        let key = noise
            .iter()
            .map(|&k| scenario.coefficients.eigenvalue(k, &s).round() as i64)
            .collect();
        groups.entry(key).or_default().push(s);
    }
    let mut dims = BTreeMap::new();
    let mut multi_blocks = Vec::new();
    for members in groups.into_values() {
        *dims.entry(members.len()).or_insert(0) += 1;
        if members.len() > 1 {
            multi_blocks.push(members);
        }
    }
    Ok(BlockCensus { dims, multi_blocks })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdvantageReport {
    pub sites: usize,
    pub optimal: ProbePair,
    pub optimal_qfi: f64,
    pub max_product_qfi: f64,
    pub ratio: f64,
    /// `2^-(J-1)`.
    pub bound: f64,
    /// Site angles of the best product state found.
    pub best_angles: Vec<f64>,
    pub candidates: usize,
}

/// Compares the optimal entangled probe with the best sampled sensor-product
/// state after the twirl.
///
/// Candidates have real nonnegative amplitudes `(cos t, sin t)` per site.
/// Phases can be dropped: the twirl weights depend only on moduli, and inside
/// the single informative block `{s*, -s*}` the QFI of
/// `alpha |s*> + beta |-s*>` is `4 |alpha|^2 |beta|^2 Delta^2`, again only
/// moduli. For `J <= 4` the candidates are a `32^J` grid over
/// `t in [0, pi/2]`; beyond that `num_samples` seeded uniform draws. The
/// uniform state `t = pi/4` is always included.
pub fn product_advantage_sweep(
    scenario: &AlternatingScenario,
    num_samples: usize,
) -> Result<AdvantageReport> {
    let j = scenario.sites;
    if j > MAX_SWEEP_SITES {
        return Err(Error::TooLarge {
            what: "advantage sweep sites",
            size: j as u128,
            limit: MAX_SWEEP_SITES as u128,
        });
    }
    let optimal = optimal_probe_integer(&scenario.problem()?)?;
    let optimal_qfi = optimal.qfi;

    let quarter = std::f64::consts::FRAC_PI_4;
    let mut candidates: Vec<Vec<f64>> = vec![vec![quarter; j]];
    if j <= GRID_MAX_SITES {
        let step = std::f64::consts::FRAC_PI_2 / (GRID_POINTS - 1) as f64;
        let total = GRID_POINTS.pow(j as u32);
        candidates.extend((0..total).map(|mut idx| {
            let mut angles = vec![0.0; j];
            for a in angles.iter_mut().rev() {
                *a = (idx % GRID_POINTS) as f64 * step;
                idx /= GRID_POINTS;
            }
            angles
        }));
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(SWEEP_SEED ^ j as u64);
        candidates.extend((0..num_samples).map(|_| {
            (0..j)
                .map(|_| rng.random_range(0.0..=std::f64::consts::FRAC_PI_2))
                .collect()
        }));
    }

    // Max QFI, ties to the earliest candidate: independent of scheduling.
    let (best_idx, max_product_qfi) = candidates
        .par_iter()
        .enumerate()
        .map(|(i, angles)| scenario.product_qfi(angles).map(|q| (i, q)))
        .try_reduce(
            || (usize::MAX, f64::NEG_INFINITY),
            |a, b| {
                let pick_b = b.1 > a.1 || (b.1 == a.1 && b.0 < a.0);
                Ok(if pick_b { b } else { a })
            },
        )?;
    Ok(AdvantageReport {
        sites: j,
        ratio: max_product_qfi / optimal_qfi,
        bound: 0.5_f64.powi(j as i32 - 1),
        best_angles: candidates[best_idx].clone(),
        candidates: candidates.len(),
        optimal,
        optimal_qfi,
        max_product_qfi,
    })
}
