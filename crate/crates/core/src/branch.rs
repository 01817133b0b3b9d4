//! Branch-level simulation of probe states.
//!
//! All generators are diagonal in the product eigenbasis, so a probe is kept
//! as a list of branches `c_b |s_b>`, where `s_b` holds the effective `Z_j`
//! eigenvalue of every site. Permutation degeneracy inside a site is never
//! resolved; the qubit-level oracle in [`crate::oracle`] checks that this
//! reduction is faithful.

use std::collections::{BTreeSet, HashMap};

use nalgebra::DMatrix;

use crate::design::ProbePair;
use crate::error::{Error, Result};
use crate::field::CoefficientMatrix;
use crate::linalg::dot;

pub type C64 = nalgebra::Complex<f64>;

/// Tolerance on `sum |c_b|^2 = 1`.
pub const NORM_TOL: f64 = 1e-12;
/// Absolute tolerance for grouping noise eigenvalue tuples into blocks.
pub const TWIRL_TOL: f64 = 1e-9;
/// Branch vectors closer than this (per coordinate) are the same branch.
const MERGE_TOL: f64 = 1e-12;
/// Largest site count accepted by [`product_state`].
pub const MAX_PRODUCT_SITES: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub amplitude: C64,
    pub s: Vec<f64>,
}

/// `sum_b c_b |s_b>` with pairwise distinct `s_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchState {
    branches: Vec<Branch>,
    sites: usize,
}

fn same_vector(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

fn merge(raw: Vec<(C64, Vec<f64>)>) -> Result<(Vec<Branch>, usize)> {
    let Some(sites) = raw.first().map(|(_, s)| s.len()) else {
        return Err(Error::InvalidInput("state has no branches".into()));
    };
    let mut out: Vec<Branch> = Vec::with_capacity(raw.len());
    for (c, s) in raw {
        if s.len() != sites {
            return Err(Error::DimensionMismatch(format!(
                "branch with {} sites in a {sites}-site state",
                s.len()
            )));
        }
        if !(c.re.is_finite() && c.im.is_finite()) || s.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite branch".into()));
        }
        match out.iter_mut().find(|b| same_vector(&b.s, &s, MERGE_TOL)) {
            Some(b) => b.amplitude += c,
            None => out.push(Branch { amplitude: c, s }),
        }
    }
    out.retain(|b| b.amplitude.norm_sqr() > 0.0);
    if out.is_empty() {
        return Err(Error::NotNormalized(0.0));
    }
    Ok((out, sites))
}

impl BranchState {
    /// Builds a state from raw branches, merging duplicates. The result must
    /// be normalized to [`NORM_TOL`].
    pub fn new(raw: Vec<(C64, Vec<f64>)>) -> Result<Self> {
        let (branches, sites) = merge(raw)?;
        let state = Self { branches, sites };
        let n = state.norm_sqr();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(n));
        }
        Ok(state)
    }

    /// Like [`new`](Self::new) but rescales the merged amplitudes to unit norm.
    pub fn normalized(raw: Vec<(C64, Vec<f64>)>) -> Result<Self> {
        let (mut branches, sites) = merge(raw)?;
        let n = branches
            .iter()
            .map(|b| b.amplitude.norm_sqr())
            .sum::<f64>()
            .sqrt();
        for b in &mut branches {
            b.amplitude /= n;
        }
        Ok(Self { branches, sites })
    }

    /// Single product eigenstate `|s>`.
    pub fn basis(s: Vec<f64>) -> Result<Self> {
        Self::new(vec![(C64::new(1.0, 0.0), s)])
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn num_sites(&self) -> usize {
        self.sites
    }

    pub fn norm_sqr(&self) -> f64 {
        self.branches.iter().map(|b| b.amplitude.norm_sqr()).sum()
    }

    /// `<self|other>` over branch labels.
    pub fn inner(&self, other: &Self) -> C64 {
        self.branches
            .iter()
            .filter_map(|a| {
                other
                    .branches
                    .iter()
                    .find(|b| same_vector(&a.s, &b.s, MERGE_TOL))
                    .map(|b| a.amplitude.conj() * b.amplitude)
            })
            .sum()
    }

    /// Density matrix `|psi><psi|` in the given branch basis.
    pub fn density_matrix(&self, basis: &[Vec<f64>]) -> DMatrix<C64> {
        let amps: Vec<C64> = basis
            .iter()
            .map(|v| {
                self.branches
                    .iter()
                    .find(|b| same_vector(&b.s, v, MERGE_TOL))
                    .map_or(C64::new(0.0, 0.0), |b| b.amplitude)
            })
            .collect();
        DMatrix::from_fn(basis.len(), basis.len(), |i, j| amps[i] * amps[j].conj())
    }

    fn check_sites(&self, f: &CoefficientMatrix) -> Result<()> {
        if f.num_sites() != self.sites {
            return Err(Error::DimensionMismatch(format!(
                "state has {} sites, coefficient matrix has {}",
                self.sites,
                f.num_sites()
            )));
        }
        Ok(())
    }
}

/// `(|s> + |r>) / sqrt(2)`; collapses to `|s>` when `s = r`.
pub fn probe_state(pair: &ProbePair) -> Result<BranchState> {
    let c = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    BranchState::normalized(vec![(c, pair.s.clone()), (c, pair.r.clone())])
}

/// One site of a product state: `a |up> + b |down>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteAmplitudes {
    pub a: C64,
    pub b: C64,
    pub up: f64,
    pub down: f64,
}

impl SiteAmplitudes {
    pub fn real(a: f64, b: f64, up: f64, down: f64) -> Self {
        Self {
            a: C64::new(a, 0.0),
            b: C64::new(b, 0.0),
            up,
            down,
        }
    }
}

/// Expands `prod_j (a_j |up_j> + b_j |down_j>)` into its `2^J` branches.
/// Zero-amplitude branches are dropped.
pub fn product_state(sites: &[SiteAmplitudes]) -> Result<BranchState> {
    if sites.len() > MAX_PRODUCT_SITES {
        return Err(Error::TooLarge {
            what: "product state sites",
            size: sites.len() as u128,
            limit: MAX_PRODUCT_SITES as u128,
        });
    }
    if sites.is_empty() {
        return Err(Error::InvalidInput(
            "product state needs at least one site".into(),
        ));
    }
    for (j, site) in sites.iter().enumerate() {
        let n = site.a.norm_sqr() + site.b.norm_sqr();
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized(n));
        }
        if site.up == site.down {
            return Err(Error::InvalidInput(format!(
                "site {j} superposes two equal eigenvalues"
            )));
        }
    }
    let mut branches = vec![(C64::new(1.0, 0.0), Vec::with_capacity(sites.len()))];
    for site in sites {
        let mut next = Vec::with_capacity(branches.len() * 2);
        for (c, s) in branches {
            for (amp, val) in [(site.a, site.up), (site.b, site.down)] {
                if amp.norm_sqr() > 0.0 {
                    let mut s2: Vec<f64> = s.clone();
                    s2.push(val);
                    next.push((c * amp, s2));
                }
            }
        }
        branches = next;
    }
    // Branches differ in at least one site because up != down, so no merge is needed.
    let norm = branches
        .iter()
        .map(|(c, _)| c.norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(BranchState {
        branches: branches
            .into_iter()
            .map(|(c, s)| Branch {
                amplitude: c / norm,
                s,
            })
            .collect(),
        sites: sites.len(),
    })
}

/// Phases `Phi_k = t alpha_k`, one per row of the coefficient matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionParams {
    phases: Vec<f64>,
}

impl EvolutionParams {
    pub fn new(phases: Vec<f64>) -> Result<Self> {
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidInput("phases must be finite".into()));
        }
        Ok(Self { phases })
    }

    pub fn zeros(k: usize) -> Self {
        Self {
            phases: vec![0.0; k],
        }
    }

    /// Only `Phi_k` nonzero.
    pub fn single(k: usize, index: usize, phase: f64) -> Result<Self> {
        let mut phases = vec![0.0; k];
        phases[index] = phase;
        Self::new(phases)
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }
}

/// Applies `exp(i sum_k Phi_k G_k)`: each branch picks up
/// `exp(i sum_k Phi_k f_k . s_b)`.
pub fn evolve(
    state: &BranchState,
    params: &EvolutionParams,
    f: &CoefficientMatrix,
) -> Result<BranchState> {
    state.check_sites(f)?;
    if params.phases.len() != f.num_rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} phases for {} generators",
            params.phases.len(),
            f.num_rows()
        )));
    }
    let branches = state
        .branches
        .iter()
        .map(|b| {
            let angle: f64 = params
                .phases
                .iter()
                .enumerate()
                .filter(|(_, p)| **p != 0.0)
                .map(|(k, p)| p * f.eigenvalue(k, &b.s))
                .sum();
            Branch {
                amplitude: b.amplitude * C64::from_polar(1.0, angle),
                s: b.s.clone(),
            }
        })
        .collect();
    Ok(BranchState {
        branches,
        sites: state.sites,
    })
}

/// A block of the twirled state: branches sharing the noise eigenvalues
/// `lambda`, their total probability and the renormalized pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub lambda: Vec<f64>,
    pub weight: f64,
    pub state: BranchState,
}

/// Block-diagonal mixture `sum_lambda w_lambda |psi_lambda><psi_lambda|`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDecomposition {
    blocks: Vec<Block>,
}

impl BlockDecomposition {
    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn total_weight(&self) -> f64 {
        self.blocks.iter().map(|b| b.weight).sum()
    }

    /// `Tr rho^2`. Blocks are mutually orthogonal pure states.
    pub fn purity(&self) -> f64 {
        self.blocks.iter().map(|b| b.weight * b.weight).sum()
    }

    /// Block sizes, in block order.
    pub fn dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.state.branches.len()).collect()
    }

    /// Distinct branch vectors, in order of first appearance.
    pub fn support(&self) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = Vec::new();
        for b in &self.blocks {
            for br in &b.state.branches {
                if !out.iter().any(|v| same_vector(v, &br.s, MERGE_TOL)) {
                    out.push(br.s.clone());
                }
            }
        }
        out
    }

    pub fn density_matrix(&self, basis: &[Vec<f64>]) -> DMatrix<C64> {
        let n = basis.len();
        let mut rho = DMatrix::zeros(n, n);
        for b in &self.blocks {
            rho += b.state.density_matrix(basis) * C64::new(b.weight, 0.0);
        }
        rho
    }

    /// Unitary evolution applied block by block.
    pub fn evolve(&self, params: &EvolutionParams, f: &CoefficientMatrix) -> Result<Self> {
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                Ok(Block {
                    lambda: b.lambda.clone(),
                    weight: b.weight,
                    state: evolve(&b.state, params, f)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { blocks })
    }

    /// Applies the twirl channel to the mixture itself.
    pub fn twirl(&self, f: &CoefficientMatrix, noise: &BTreeSet<usize>, tol: f64) -> Result<Self> {
        let mut out: Vec<Block> = Vec::new();
        for b in &self.blocks {
            for inner in twirl(&b.state, f, noise, tol)?.blocks {
                let w = b.weight * inner.weight;
                match out
                    .iter_mut()
                    .find(|o| same_vector(&o.lambda, &inner.lambda, tol))
                {
                    // Two source blocks landing on the same label would have to be
                    // mixed, which a single pure block cannot hold.
                    Some(_) => {
                        return Err(Error::InvalidInput(
                            "mixture has two components with the same noise label".into(),
                        ))
                    }
                    None => out.push(Block {
                        lambda: inner.lambda,
                        weight: w,
                        state: inner.state,
                    }),
                }
            }
        }
        Ok(Self { blocks: out })
    }
}

/// Worst-case dephasing by the noise generators: coherence between branches
/// with different noise eigenvalue tuples is removed. Equivalent to
/// `rho -> sum_lambda Pi_lambda rho Pi_lambda`.
pub fn twirl(
    state: &BranchState,
    f: &CoefficientMatrix,
    noise: &BTreeSet<usize>,
    tol: f64,
) -> Result<BlockDecomposition> {
    state.check_sites(f)?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "twirl tolerance must be positive, got {tol}"
        )));
    }
    if let Some(&k) = noise.iter().find(|&&k| k >= f.num_rows()) {
        return Err(Error::InvalidInput(format!("noise index {k} out of range")));
    }
    // Exactly repeated tuples hit the hash; a miss falls back to a scan so that
    // tuples within `tol` of an existing block still join it.
    let mut groups: Vec<(Vec<f64>, Vec<Branch>)> = Vec::new();
    let mut index: HashMap<Vec<i64>, usize> = HashMap::new();
    for b in &state.branches {
        let lambda: Vec<f64> = noise.iter().map(|&k| f.eigenvalue(k, &b.s)).collect();
        let key: Vec<i64> = lambda.iter().map(|x| (x / tol).round() as i64).collect();
        let slot = match index.get(&key) {
            Some(&g) if same_vector(&groups[g].0, &lambda, tol) => Some(g),
            _ => groups
                .iter()
                .position(|(l, _)| same_vector(l, &lambda, tol)),
        };
        let g = match slot {
            Some(g) => g,
            None => {
                groups.push((lambda, Vec::new()));
                groups.len() - 1
            }
        };
        index.entry(key).or_insert(g);
        groups[g].1.push(b.clone());
    }
    let blocks = groups
        .into_iter()
        .map(|(lambda, members)| {
            let weight: f64 = members.iter().map(|b| b.amplitude.norm_sqr()).sum();
            let sqrt_w = weight.sqrt();
            let branches = members
                .into_iter()
                .map(|b| Branch {
                    amplitude: b.amplitude / sqrt_w,
                    s: b.s,
                })
                .collect();
            Block {
                lambda,
                weight,
                state: BranchState {
                    branches,
                    sites: state.sites,
                },
            }
        })
        .collect();
    Ok(BlockDecomposition { blocks })
}

/// `4 Var(G)` for the diagonal generator `G |s> = (g . s) |s>`.
pub fn qfi_pure(state: &BranchState, g: &[f64]) -> f64 {
    let (mut m1, mut m2) = (0.0, 0.0);
    for b in &state.branches {
        let p = b.amplitude.norm_sqr();
        let e = dot(g, &b.s);
        m1 += p * e;
        m2 += p * e * e;
    }
    (4.0 * (m2 - m1 * m1)).max(0.0)
}

/// QFI of the twirled mixture.
///
/// The general formula `2 sum_ij (p_i - p_j)^2 / (p_i + p_j) |<i|G|j>|^2`
/// runs over an eigenbasis of rho. Here rho is a direct sum of pure blocks
/// with parameter-independent weights and `G` maps each block into itself,
/// so no cross-block term survives and the sum reduces to
/// `sum_lambda w_lambda * qfi_pure(psi_lambda)`.
pub fn qfi_mixed(blocks: &BlockDecomposition, g: &[f64]) -> f64 {
    blocks
        .blocks
        .iter()
        .map(|b| b.weight * qfi_pure(&b.state, g))
        .sum()
}

/// Classical Fisher information of the two-outcome parity readout of a
/// two-branch probe.
///
/// The fringe is `p(+-|Phi) = (1 +- cos(Delta Phi)) / 2` with
/// `Delta = f_signal . (s - r)`, so `F = Delta^2 sin^2 / (1 - cos^2)`, which is
/// `Delta^2` wherever defined and is extended by continuity at the extrema.
pub fn parity_fisher(
    pair: &ProbePair,
    f: &CoefficientMatrix,
    signal: usize,
    phi: f64,
) -> Result<f64> {
    if same_vector(&pair.s, &pair.r, MERGE_TOL) {
        return Err(Error::NotTwoBranch);
    }
    if pair.s.len() != f.num_sites() || signal >= f.num_rows() {
        return Err(Error::DimensionMismatch(
            "probe does not match coefficients".into(),
        ));
    }
    let delta = pair.gap(f.row(signal));
    let x = delta * phi;
    let p_plus = 0.5 * (1.0 + x.cos());
    let p_minus = 0.5 * (1.0 - x.cos());
    let dp = 0.5 * delta * x.sin();
    if p_plus.min(p_minus) < 1e-9 {
        return Ok(delta * delta);
    }
    Ok(dp * dp / p_plus + dp * dp / p_minus)
}
