//! Full qubit-level reference simulation.
//!
//! Every site holds `n_j` physical qubits and the state lives in the
//! `2^N`-dimensional computational basis. A site eigenvalue `s_j` is realized
//! by putting the first `(n_j + s_j) / 2` qubits of the site in `|+1>` and the
//! rest in `|-1>`. Generators are evaluated qubit by qubit, the twirl is an
//! explicit projection onto eigenspaces of the qubit-level noise generators,
//! and the QFI comes from an eigendecomposition of the resulting density
//! matrix. Nothing here reuses the branch-level code paths.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::branch::{BranchState, EvolutionParams, C64};
use crate::design::ProbePair;
use crate::error::{Error, Result};
use crate::field::CoefficientMatrix;

pub const MAX_ORACLE_QUBITS: u64 = 12;
const EIGEN_CUTOFF: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult {
    /// QFI of the evolved pure state.
    pub qfi: f64,
    /// QFI after the noise twirl.
    pub twirled_qfi: f64,
    /// Number of nonzero noise blocks after the twirl.
    pub blocks: usize,
}

struct Register {
    site_of: Vec<usize>,
    offsets: Vec<usize>,
    counts: Vec<u32>,
}

impl Register {
    fn new(counts: &[u32]) -> Result<Self> {
        let total: u64 = counts.iter().map(|&n| u64::from(n)).sum();
        if total > MAX_ORACLE_QUBITS {
            return Err(Error::TooLarge {
                what: "oracle qubit count",
                size: u128::from(total),
                limit: u128::from(MAX_ORACLE_QUBITS),
            });
        }
        let mut site_of = Vec::new();
        let mut offsets = Vec::new();
        for (j, &n) in counts.iter().enumerate() {
            offsets.push(site_of.len());
            site_of.extend(std::iter::repeat_n(j, n as usize));
        }
        Ok(Self {
            site_of,
            offsets,
            counts: counts.to_vec(),
        })
    }

    fn qubits(&self) -> usize {
        self.site_of.len()
    }

    fn dim(&self) -> usize {
        1 << self.qubits()
    }

    /// Basis index of the canonical pattern for site eigenvalues `s`.
    /// Bit `q` set means qubit `q` is in `|-1>`.
    fn index_of(&self, s: &[f64]) -> Result<usize> {
        let mut idx = 0usize;
        for (j, (&v, &n)) in s.iter().zip(&self.counts).enumerate() {
            let rounded = v.round();
            let n_i = i64::from(n);
            let vi = rounded as i64;
            if (v - rounded).abs() > 1e-9 || vi.abs() > n_i || (n_i + vi) % 2 != 0 {
                return Err(Error::NonIntegerEigenvalue {
                    site: j,
                    value: v,
                    qubits: n,
                });
            }
            let ups = ((n_i + vi) / 2) as usize;
            for q in ups..n as usize {
                idx |= 1 << (self.offsets[j] + q);
            }
        }
        Ok(idx)
    }

    /// Diagonal of `sum_q row[site(q)] z_q`.
    fn generator_diagonal(&self, row: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|idx| {
                self.site_of
                    .iter()
                    .enumerate()
                    .map(|(q, &j)| if idx >> q & 1 == 0 { row[j] } else { -row[j] })
                    .sum()
            })
            .collect()
    }

    fn embed(&self, state: &BranchState) -> Result<Vec<C64>> {
        let mut psi = vec![C64::new(0.0, 0.0); self.dim()];
        for b in state.branches() {
            psi[self.index_of(&b.s)?] += b.amplitude;
        }
        Ok(psi)
    }
}

fn check_shapes(counts: &[u32], f: &CoefficientMatrix, state_sites: usize) -> Result<()> {
    if counts.len() != f.num_sites() || state_sites != f.num_sites() {
        return Err(Error::DimensionMismatch(
            "qubit counts, coefficients and state disagree on the number of sites".into(),
        ));
    }
    Ok(())
}

fn evolve_in_place(
    psi: &mut [C64],
    reg: &Register,
    f: &CoefficientMatrix,
    params: &EvolutionParams,
) {
    for (k, &phi) in params.phases().iter().enumerate() {
        if phi == 0.0 {
            continue;
        }
        let diag = reg.generator_diagonal(f.row(k));
        for (a, d) in psi.iter_mut().zip(&diag) {
            *a *= C64::from_polar(1.0, phi * d);
        }
    }
}

/// QFI of `rho = sum_c |v_c><v_c|` for a diagonal generator, through the
/// eigendecomposition of rho restricted to its support:
/// `F = sum_i 4 p_i <i|G^2|i> - sum_ij 8 p_i p_j / (p_i + p_j) |<i|G|j>|^2`.
fn qfi_from_components(components: &[Vec<C64>], g: &[f64]) -> f64 {
    let r = components.len();
    if r == 0 {
        return 0.0;
    }
    let gram = DMatrix::from_fn(r, r, |a, b| {
        components[a]
            .iter()
            .zip(&components[b])
            .map(|(x, y)| x.conj() * y)
            .sum::<C64>()
    });
    let eig = SymmetricEigen::new(gram);
    let mut probs = Vec::new();
    let mut vecs: Vec<Vec<C64>> = Vec::new();
    for (i, &mu) in eig.eigenvalues.iter().enumerate() {
        if mu <= EIGEN_CUTOFF {
            continue;
        }
        let w = eig.eigenvectors.column(i);
        let scale = 1.0 / mu.sqrt();
        let dim = components[0].len();
        let mut u = vec![C64::new(0.0, 0.0); dim];
        for (c, comp) in components.iter().enumerate() {
            let coeff = w[c] * scale;
            for (ui, x) in u.iter_mut().zip(comp) {
                *ui += coeff * x;
            }
        }
        probs.push(mu);
        vecs.push(u);
    }
    let mut fisher = 0.0;
    for (i, u) in vecs.iter().enumerate() {
        let g2: f64 = u.iter().zip(g).map(|(x, gi)| x.norm_sqr() * gi * gi).sum();
        fisher += 4.0 * probs[i] * g2;
    }
    for i in 0..vecs.len() {
        for j in 0..vecs.len() {
            let gij: C64 = vecs[i]
                .iter()
                .zip(&vecs[j])
                .zip(g)
                .map(|((x, y), gi)| x.conj() * y * *gi)
                .sum();
            fisher -= 8.0 * probs[i] * probs[j] / (probs[i] + probs[j]) * gij.norm_sqr();
        }
    }
    fisher.max(0.0)
}

/// Evolves `state` at the qubit level, twirls over the noise generators and
/// returns the signal QFI before and after the twirl.
pub fn statevector_oracle(
    qubit_counts: &[u32],
    f: &CoefficientMatrix,
    signal: usize,
    noise: &BTreeSet<usize>,
    state: &BranchState,
    params: &EvolutionParams,
    tol: f64,
) -> Result<OracleResult> {
    check_shapes(qubit_counts, f, state.num_sites())?;
    if params.phases().len() != f.num_rows() || signal >= f.num_rows() {
        return Err(Error::DimensionMismatch("phases or signal index".into()));
    }
    let reg = Register::new(qubit_counts)?;
    let mut psi = reg.embed(state)?;
    evolve_in_place(&mut psi, &reg, f, params);
    let g = reg.generator_diagonal(f.row(signal));
    let qfi = qfi_from_components(std::slice::from_ref(&psi), &g);

    let noise_diags: Vec<Vec<f64>> = noise
        .iter()
        .map(|&k| reg.generator_diagonal(f.row(k)))
        .collect();
    let mut labels: Vec<Vec<f64>> = Vec::new();
    let mut projected: Vec<Vec<C64>> = Vec::new();
    for (idx, &amp) in psi.iter().enumerate() {
        let label: Vec<f64> = noise_diags.iter().map(|d| d[idx]).collect();
        let slot = match labels
            .iter()
            .position(|l| l.iter().zip(&label).all(|(a, b)| (a - b).abs() <= tol))
        {
            Some(p) => p,
            None => {
                labels.push(label);
                projected.push(vec![C64::new(0.0, 0.0); reg.dim()]);
                labels.len() - 1
            }
        };
        projected[slot][idx] = amp;
    }
    projected.retain(|v| v.iter().any(|x| x.norm_sqr() > 0.0));
    let twirled_qfi = qfi_from_components(&projected, &g);
    Ok(OracleResult {
        qfi,
        twirled_qfi,
        blocks: projected.len(),
    })
}

/// Classical Fisher information of the product-of-X parity readout, computed
/// on the qubit-level state of `pair` after a signal phase `phi`.
///
/// The parity operator acts on every qubit whose canonical pattern differs
/// between `s` and `r`. With `E = <P>`, the two outcomes have
/// `p = (1 +- E) / 2` and `F = (dE/dphi)^2 / (1 - E^2)`, where
/// `dE/dphi = -2 Im <psi| P G |psi>`.
pub fn statevector_parity_fisher(
    qubit_counts: &[u32],
    f: &CoefficientMatrix,
    signal: usize,
    pair: &ProbePair,
    phi: f64,
) -> Result<f64> {
    let reg = Register::new(qubit_counts)?;
    if qubit_counts.len() != f.num_sites() || pair.s.len() != f.num_sites() {
        return Err(Error::DimensionMismatch(
            "probe does not match qubit counts".into(),
        ));
    }
    let (is, ir) = (reg.index_of(&pair.s)?, reg.index_of(&pair.r)?);
    let mask = is ^ ir;
    if mask == 0 {
        return Err(Error::NotTwoBranch);
    }
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut psi = vec![C64::new(0.0, 0.0); reg.dim()];
    psi[is] = h;
    psi[ir] = h;
    let g = reg.generator_diagonal(f.row(signal));
    for (a, d) in psi.iter_mut().zip(&g) {
        *a *= C64::from_polar(1.0, phi * d);
    }
    let mut expect = C64::new(0.0, 0.0);
    let mut pg = C64::new(0.0, 0.0);
    for idx in 0..reg.dim() {
        let flipped = idx ^ mask;
        expect += psi[idx].conj() * psi[flipped];
        pg += psi[idx].conj() * psi[flipped] * g[flipped];
    }
    let e = expect.re;
    let de = -2.0 * pg.im;
    Ok(de * de / (1.0 - e * e))
}
