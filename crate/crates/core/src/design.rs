//! Optimal probe configurations.
//!
//! A probe is the equal superposition of two product eigenstates `|s>` and
//! `|r>` with effective per-site eigenvalues inside the box `O_n`. It is blind
//! to noise generator `G_k` iff `f_k . (s - r) = 0`, and its quantum Fisher
//! information for the signal is `(f_signal . (s - r))^2`.
//!
//! The best noise-blind probe uses `r = -s` with `s` solving
//!
//! ```text
//! max f_signal . s   s.t.  f_k . s = 0 for every noise row k,  |s_j| <= n_j
//! ```
//!
//! Since the box is symmetric under inversion, any pair `(s, r)` can be
//! replaced by `((s - r)/2, (r - s)/2)` without losing Fisher information,
//! which is why only the single-vector program has to be solved.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::field::{CoefficientMatrix, SensorArray};
use crate::linalg::{dot, norm, sub, OrthoBasis};
use crate::lp::{maximize_lexmin, BoxLp};

/// Relative tolerance for the noise-insensitivity and box checks.
pub const CONSTRAINT_TOL: f64 = 1e-9;
/// `|f_perp| / |f_signal|` below this means the signal cannot be separated.
pub const INDISTINGUISHABLE_TOL: f64 = 1e-9;
/// Largest box enumerated by [`optimal_probe_integer`].
pub const MAX_INTEGER_POINTS: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct DesignProblem {
    coefficients: CoefficientMatrix,
    signal: usize,
    noise: BTreeSet<usize>,
    bounds: Vec<f64>,
    integer_mode: bool,
    tol: f64,
}

impl DesignProblem {
    pub fn new(
        coefficients: CoefficientMatrix,
        signal: usize,
        noise: impl IntoIterator<Item = usize>,
        bounds: Vec<f64>,
        integer_mode: bool,
    ) -> Result<Self> {
        let k = coefficients.num_rows();
        let noise: BTreeSet<usize> = noise.into_iter().collect();
        if signal >= k {
            return Err(Error::InvalidInput(format!(
                "signal index {signal} out of range for {k} functions"
            )));
        }
        if let Some(&bad) = noise.iter().find(|&&i| i >= k) {
            return Err(Error::InvalidInput(format!(
                "noise index {bad} out of range for {k} functions"
            )));
        }
        if noise.contains(&signal) {
            return Err(Error::InvalidInput(format!(
                "signal index {signal} is also listed as noise"
            )));
        }
        if bounds.len() != coefficients.num_sites() {
            return Err(Error::DimensionMismatch(format!(
                "{} box bounds for {} sites",
                bounds.len(),
                coefficients.num_sites()
            )));
        }
        if bounds.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
            return Err(Error::InvalidInput(
                "box bounds must be finite and >= 0".into(),
            ));
        }
        Ok(Self {
            coefficients,
            signal,
            noise,
            bounds,
            integer_mode,
            tol: CONSTRAINT_TOL,
        })
    }

    /// Problem whose box is the qubit budget of `array`.
    pub fn for_array(
        coefficients: CoefficientMatrix,
        array: &SensorArray,
        signal: usize,
        noise: impl IntoIterator<Item = usize>,
        integer_mode: bool,
    ) -> Result<Self> {
        Self::new(
            coefficients,
            signal,
            noise,
            array.box_bounds(),
            integer_mode,
        )
    }

    pub fn coefficients(&self) -> &CoefficientMatrix {
        &self.coefficients
    }

    pub fn signal_index(&self) -> usize {
        self.signal
    }

    pub fn noise_indices(&self) -> &BTreeSet<usize> {
        &self.noise
    }

    pub fn bounds(&self) -> &[f64] {
        &self.bounds
    }

    pub fn integer_mode(&self) -> bool {
        self.integer_mode
    }

    pub fn signal_row(&self) -> &[f64] {
        self.coefficients.row(self.signal)
    }

    pub fn noise_rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.noise.iter().map(|&k| self.coefficients.row(k))
    }

    /// Relative tolerance for constraint residuals and objective ties.
    pub fn constraint_tol(&self) -> f64 {
        self.tol
    }

    pub fn with_constraint_tol(mut self, tol: f64) -> Result<Self> {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(Error::InvalidInput(format!(
                "constraint tolerance {tol} must be > 0"
            )));
        }
        self.tol = tol;
        Ok(self)
    }

    pub fn with_integer_mode(mut self, integer_mode: bool) -> Self {
        self.integer_mode = integer_mode;
        self
    }

    /// Same problem with the signal row replaced.
    pub fn with_signal_row(&self, row: Vec<f64>) -> Result<Self> {
        let mut rows = self.coefficients.rows().to_vec();
        rows[self.signal] = row;
        let mut p = Self::new(
            CoefficientMatrix::from_rows(rows)?,
            self.signal,
            self.noise.iter().copied(),
            self.bounds.clone(),
            self.integer_mode,
        )?;
        p.tol = self.tol;
        Ok(p)
    }
}

/// The superposition `(|s> + |r>) / sqrt(2)` together with its signal QFI.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbePair {
    pub s: Vec<f64>,
    pub r: Vec<f64>,
    pub qfi: f64,
}

impl ProbePair {
    pub fn new(s: Vec<f64>, r: Vec<f64>, signal_row: &[f64]) -> Self {
        let gap = dot(signal_row, &sub(&s, &r));
        Self {
            s,
            r,
            qfi: gap * gap,
        }
    }

    /// Symmetric pair `(s, -s)`.
    pub fn symmetric(s: Vec<f64>, signal_row: &[f64]) -> Self {
        let r = s.iter().map(|x| -x).collect();
        Self::new(s, r, signal_row)
    }

    /// Eigenvalue gap `f . (s - r)` along `row`.
    pub fn gap(&self, row: &[f64]) -> f64 {
        dot(row, &sub(&self.s, &self.r))
    }

    /// Largest relative violation `|f_k.(s-r)| / (|f_k| |s-r|)` over the noise rows.
    pub fn max_noise_residual(&self, problem: &DesignProblem) -> f64 {
        let diff = sub(&self.s, &self.r);
        let dn = norm(&diff);
        problem
            .noise_rows()
            .map(|row| {
                let denom = norm(row) * dn;
                if denom == 0.0 {
                    0.0
                } else {
                    dot(row, &diff).abs() / denom
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn in_box(&self, bounds: &[f64], tol: f64) -> bool {
        self.s
            .iter()
            .chain(&self.r)
            .zip(bounds.iter().chain(bounds))
            .all(|(x, b)| x.abs() <= b + tol)
    }
}

/// `f_signal = f_perp + f_par` with `f_par` in the noise span.
#[derive(Debug, Clone, PartialEq)]
pub struct PerpDecomposition {
    pub f_perp: Vec<f64>,
    pub f_par: Vec<f64>,
    /// Orthonormal basis of `{ s : f_k . s = 0 for all noise k }`.
    pub dfs_basis: Vec<Vec<f64>>,
}

fn noise_basis(problem: &DesignProblem) -> OrthoBasis {
    let mut basis = OrthoBasis::new(problem.coefficients.num_sites());
    for row in problem.noise_rows() {
        basis.push(row, INDISTINGUISHABLE_TOL);
    }
    basis
}

pub fn perp_decompose(problem: &DesignProblem) -> Result<PerpDecomposition> {
    let basis = noise_basis(problem);
    let f = problem.signal_row();
    let f_perp = basis.residual(f);
    let f_par = sub(f, &f_perp);
    let perp_norm = norm(&f_perp);
    let signal_norm = norm(f);
    if perp_norm <= INDISTINGUISHABLE_TOL * signal_norm {
        return Err(Error::SignalIndistinguishable {
            perp_norm,
            signal_norm,
        });
    }
    Ok(PerpDecomposition {
        f_perp,
        f_par,
        dfs_basis: basis.complement(),
    })
}

/// Extremal eigenstates of the signal generator when nothing is noisy:
/// `s_j = n_j sign(f_j)`, `r = -s`.
pub fn noiseless_optimum(problem: &DesignProblem) -> Result<ProbePair> {
    if !problem.noise.is_empty() {
        return Err(Error::InvalidInput(
            "noiseless optimum requires an empty noise set".into(),
        ));
    }
    let f = problem.signal_row();
    let s = f
        .iter()
        .zip(&problem.bounds)
        .map(|(&fj, &n)| if fj == 0.0 { 0.0 } else { n * fj.signum() })
        .collect();
    Ok(ProbePair::symmetric(s, f))
}

/// Continuous optimum over the box (effective eigenvalues reachable with
/// dynamical control).
pub fn optimal_probe(problem: &DesignProblem) -> Result<ProbePair> {
    if problem.integer_mode {
        return Err(Error::InvalidInput(
            "problem is in integer mode; use optimal_probe_integer".into(),
        ));
    }
    perp_decompose(problem)?;
    let basis = noise_basis(problem);
    let constraints = basis.vectors();
    let rhs = vec![0.0; constraints.len()];
    let lower: Vec<f64> = problem.bounds.iter().map(|b| -b).collect();
    let sol = maximize_lexmin(&BoxLp {
        objective: problem.signal_row(),
        equalities: constraints,
        rhs: &rhs,
        lower: &lower,
        upper: &problem.bounds,
    })?;
    let f = problem.signal_row();
    let scale = norm(f) * norm(&problem.bounds);
    if sol.value <= problem.tol * scale {
        return Err(Error::Degenerate);
    }
    // Snap round-off at the box faces and at zero.
    let s = sol
        .x
        .iter()
        .zip(&problem.bounds)
        .map(|(&x, &b)| {
            if (x - b).abs() <= 1e-12 * b.max(1.0) {
                b
            } else if (x + b).abs() <= 1e-12 * b.max(1.0) {
                -b
            } else if x.abs() <= 1e-13 {
                0.0
            } else {
                x
            }
        })
        .collect();
    Ok(ProbePair::symmetric(s, f))
}

/// Exhaustive search over the integer points of the box.
pub fn optimal_probe_integer(problem: &DesignProblem) -> Result<ProbePair> {
    if !problem.integer_mode {
        return Err(Error::InvalidInput(
            "problem is not in integer mode; use optimal_probe".into(),
        ));
    }
    let limits: Vec<i64> = problem.bounds.iter().map(|b| b.floor() as i64).collect();
    let points = limits
        .iter()
        .try_fold(1u128, |acc, &n| acc.checked_mul(2 * n as u128 + 1))
        .unwrap_or(u128::MAX);
    if points > MAX_INTEGER_POINTS {
        return Err(Error::TooLarge {
            what: "integer search space",
            size: points,
            limit: MAX_INTEGER_POINTS,
        });
    }
    perp_decompose(problem)?;

    let f = problem.signal_row();
    let noise: Vec<&[f64]> = problem.noise_rows().collect();
    let noise_norms: Vec<f64> = noise.iter().map(|r| norm(r)).collect();
    let j = limits.len();

    // Odometer over the box with the last coordinate fastest, so points are
    // visited in lexicographic order. Dot products are updated incrementally.
    let mut s: Vec<i64> = limits.iter().map(|n| -n).collect();
    let sf = |s: &[i64]| s.iter().map(|&x| x as f64).collect::<Vec<f64>>();
    let mut obj = dot(f, &sf(&s));
    let mut proj: Vec<f64> = noise.iter().map(|row| dot(row, &sf(&s))).collect();
    let mut any_feasible = false;
    let mut best: Option<(f64, Vec<i64>)> = None;
    let fscale = norm(f);
    let tol = problem.tol;
    'search: loop {
        let s_norm = s.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt();
        if s_norm > 0.0 {
            let feasible = proj
                .iter()
                .zip(&noise_norms)
                .all(|(p, nn)| p.abs() <= tol * nn * s_norm);
            if feasible {
                any_feasible = true;
                let improves = match &best {
                    None => true,
                    Some((b, _)) => obj > b + tol * fscale * s_norm.max(1.0),
                };
                if improves {
                    best = Some((obj, s.clone()));
                }
            }
        }
        let mut pos = j;
        loop {
            if pos == 0 {
                break 'search;
            }
            pos -= 1;
            if s[pos] < limits[pos] {
                s[pos] += 1;
                obj += f[pos];
                for (p, row) in proj.iter_mut().zip(&noise) {
                    *p += row[pos];
                }
                break;
            }
            let span = (2 * limits[pos]) as f64;
            s[pos] = -limits[pos];
            obj -= f[pos] * span;
            for (p, row) in proj.iter_mut().zip(&noise) {
                *p -= row[pos] * span;
            }
        }
        // Recompute exactly whenever a carry happened, to stop drift.
        if pos + 1 < j {
            let v = sf(&s);
            obj = dot(f, &v);
            for (p, row) in proj.iter_mut().zip(&noise) {
                *p = dot(row, &v);
            }
        }
    }

    if !any_feasible {
        return Err(Error::Infeasible);
    }
    let (value, s) = best.expect("feasible point recorded");
    if value <= tol * fscale {
        return Err(Error::Degenerate);
    }
    Ok(ProbePair::symmetric(sf(&s), f))
}

/// Dispatches on the problem's integer mode.
pub fn design(problem: &DesignProblem) -> Result<ProbePair> {
    if problem.integer_mode {
        optimal_probe_integer(problem)
    } else {
        optimal_probe(problem)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{sample_coefficients, GeneratingFunctionSet};

    fn taylor_problem(n: u32, integer: bool) -> DesignProblem {
        let arr = SensorArray::on_line(&[-2.0, -1.0, 0.0, 1.0, 2.0], vec![n, 2 * n, 0, 2 * n, n])
            .unwrap();
        let f = sample_coefficients(
            &GeneratingFunctionSet::Taylor {
                length_scale: 1.0,
                count: 5,
            },
            &arr,
        )
        .unwrap();
        DesignProblem::for_array(f, &arr, 3, [0, 1, 2, 4], integer).unwrap()
    }

    fn problem(
        rows: Vec<Vec<f64>>,
        signal: usize,
        noise: &[usize],
        bounds: Vec<f64>,
    ) -> DesignProblem {
        DesignProblem::new(
            CoefficientMatrix::from_rows(rows).unwrap(),
            signal,
            noise.iter().copied(),
            bounds,
            false,
        )
        .unwrap()
    }

    fn parallel(a: &[f64], b: &[f64]) -> bool {
        let d = dot(a, b);
        (d * d - dot(a, a) * dot(b, b)).abs() < 1e-9 * dot(a, a) * dot(b, b)
    }

    #[test]
    fn taylor_perp_matches_gram_schmidt() {
        let d = perp_decompose(&taylor_problem(1, false)).unwrap();
        assert!(parallel(&d.f_perp, &[-1.0, 2.0, 0.0, -2.0, 1.0]));
        assert_eq!(d.dfs_basis.len(), 1);
        let sum: Vec<f64> = d.f_perp.iter().zip(&d.f_par).map(|(a, b)| a + b).collect();
        for (x, y) in sum.iter().zip([-8.0, -1.0, 0.0, 1.0, 8.0]) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_noise_keeps_full_space() {
        let p = problem(vec![vec![1.0, 2.0, 3.0]], 0, &[], vec![1.0; 3]);
        let d = perp_decompose(&p).unwrap();
        assert_eq!(d.f_perp, vec![1.0, 2.0, 3.0]);
        assert_eq!(d.dfs_basis.len(), 3);
    }

    #[test]
    fn point_source_perp_and_dfs() {
        let (r1, r2, r3) = (1.5_f64, 2.0_f64, 0.7_f64);
        let p = problem(
            vec![
                vec![r1.powi(-2), r2.powi(-2), r3.powi(-2)],
                vec![0.0, 0.0, 1.0],
            ],
            0,
            &[1],
            vec![1.0; 3],
        );
        let d = perp_decompose(&p).unwrap();
        assert!(parallel(&d.f_perp, &[r2 * r2, r1 * r1, 0.0]));
        assert_eq!(d.dfs_basis.len(), 2);
        let s = optimal_probe(&p).unwrap();
        assert_eq!(s.s, vec![1.0, 1.0, 0.0]);
    }

    #[test]
    fn indistinguishable_signal() {
        let p = problem(
            vec![vec![1.0, 2.0], vec![2.0, 4.0]],
            0,
            &[1],
            vec![1.0, 1.0],
        );
        assert!(matches!(
            perp_decompose(&p),
            Err(Error::SignalIndistinguishable { .. })
        ));
        assert!(matches!(
            optimal_probe(&p),
            Err(Error::SignalIndistinguishable { .. })
        ));
    }

    #[test]
    fn noiseless_examples() {
        let p = problem(vec![vec![1.0, -1.0]], 0, &[], vec![1.0, 1.0]);
        let pair = noiseless_optimum(&p).unwrap();
        assert_eq!(pair.s, vec![1.0, -1.0]);
        assert_eq!(pair.r, vec![-1.0, 1.0]);
        assert_eq!(pair.qfi, 16.0);

        let p = problem(vec![vec![0.0, 0.0]], 0, &[], vec![3.0, 2.0]);
        assert_eq!(noiseless_optimum(&p).unwrap().qfi, 0.0);

        let p = problem(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            0,
            &[1],
            vec![1.0, 1.0],
        );
        assert!(noiseless_optimum(&p).is_err());
    }

    #[test]
    fn taylor_optimum_scales_with_n() {
        for n in 1..=3 {
            let nf = n as f64;
            let pair = optimal_probe(&taylor_problem(n, false)).unwrap();
            assert_eq!(pair.s, vec![-nf, 2.0 * nf, 0.0, -2.0 * nf, nf]);
            assert!((pair.qfi - (24.0 * nf).powi(2)).abs() < 1e-9 * pair.qfi);
        }
    }

    #[test]
    fn taylor_integer_matches_continuous() {
        let pair = optimal_probe_integer(&taylor_problem(1, true)).unwrap();
        assert_eq!(pair.s, vec![-1.0, 2.0, 0.0, -2.0, 1.0]);
        assert_eq!(pair.qfi, 576.0);
    }

    #[test]
    fn pinned_coordinates() {
        let j = 4;
        let rows: Vec<Vec<f64>> = (0..j)
            .map(|k| (0..j).map(|i| if i == k { 1.0 } else { 0.0 }).collect())
            .collect();
        let p = problem(rows, 0, &[1, 2, 3], vec![5.0; j]);
        assert_eq!(optimal_probe(&p).unwrap().s, vec![5.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn integer_infeasible_and_too_large() {
        let p = problem(
            vec![vec![1.0, 0.0], vec![1.0, 2f64.sqrt()]],
            0,
            &[1],
            vec![3.0, 3.0],
        )
        .with_integer_mode(true);
        assert_eq!(optimal_probe_integer(&p), Err(Error::Infeasible));

        let p = problem(vec![vec![1.0; 8]], 0, &[], vec![10.0; 8]).with_integer_mode(true);
        assert!(matches!(
            optimal_probe_integer(&p),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn degenerate_when_budget_excludes_signal() {
        // Signal lives only on the site with no qubits.
        let p = problem(
            vec![vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 1.0]],
            0,
            &[1],
            vec![1.0, 0.0, 1.0],
        );
        assert_eq!(optimal_probe(&p), Err(Error::Degenerate));
    }

    #[test]
    fn mode_mismatch_is_an_error() {
        let p = taylor_problem(1, true);
        assert!(optimal_probe(&p).is_err());
        assert!(design(&p).is_ok());
    }

    #[test]
    fn problem_validation() {
        let f = CoefficientMatrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(DesignProblem::new(f.clone(), 0, [0], vec![1.0, 1.0], false).is_err());
        assert!(DesignProblem::new(f.clone(), 2, [], vec![1.0, 1.0], false).is_err());
        assert!(DesignProblem::new(f.clone(), 0, [5], vec![1.0, 1.0], false).is_err());
        assert!(DesignProblem::new(f, 0, [1], vec![1.0], false).is_err());
    }
}
