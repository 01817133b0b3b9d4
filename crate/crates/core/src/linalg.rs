//! Small dense vector helpers and an incremental Gram-Schmidt basis.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[f64], c: f64) -> Vec<f64> {
    a.iter().map(|x| x * c).collect()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Orthonormal basis grown one vector at a time by modified Gram-Schmidt.
///
/// Every candidate is orthogonalized twice against the current basis, which
/// keeps the basis orthonormal to working precision even for nearly
/// dependent inputs.
#[derive(Debug, Clone)]
pub struct OrthoBasis {
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

impl OrthoBasis {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            vectors: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// Component of `v` orthogonal to the span of the basis.
    pub fn residual(&self, v: &[f64]) -> Vec<f64> {
        let mut r = v.to_vec();
        for _ in 0..2 {
            for q in &self.vectors {
                let c = dot(q, &r);
                for (ri, qi) in r.iter_mut().zip(q) {
                    *ri -= c * qi;
                }
            }
        }
        r
    }

    /// Orthogonal projection of `v` onto the span of the basis.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        sub(v, &self.residual(v))
    }

    /// Adds `v` unless its residual is below `rel_tol * |v|`. Returns whether
    /// the vector enlarged the span.
    pub fn push(&mut self, v: &[f64], rel_tol: f64) -> bool {
        assert_eq!(
            v.len(),
            self.dim,
            "vector length must match basis dimension"
        );
        let n = norm(v);
        if n == 0.0 {
            return false;
        }
        let r = self.residual(v);
        let rn = norm(&r);
        if rn < rel_tol * n {
            return false;
        }
        self.vectors.push(scale(&r, 1.0 / rn));
        true
    }

    /// Orthonormal basis of the orthogonal complement, obtained by pushing the
    /// standard basis vectors through a copy of `self`.
    pub fn complement(&self) -> Vec<Vec<f64>> {
        let mut full = self.clone();
        let start = full.rank();
        for i in 0..self.dim {
            if full.rank() == self.dim {
                break;
            }
            let mut e = vec![0.0; self.dim];
            e[i] = 1.0;
            full.push(&e, 1e-8);
        }
        full.vectors.split_off(start)
    }
}
