//! Sparse covariate vectors.

/// One round's covariate vector, stored sparsely.
///
/// `entries` holds `(index, value)` pairs with strictly increasing indices,
/// all below `dim`. Constructors in [`crate::datasets`] enforce this; code
/// building contexts by hand should go through [`Context::new`].
#[derive(Clone, Debug, PartialEq)]
pub struct Context {
    dim: usize,
    entries: Vec<(u32, f64)>,
}

impl Context {
    /// Build from sparse entries. Panics if indices are not strictly
    /// increasing or exceed `dim`.
    pub fn new(dim: usize, entries: Vec<(u32, f64)>) -> Self {
        for w in entries.windows(2) {
            assert!(w[0].0 < w[1].0, "context indices must be strictly increasing");
        }
        if let Some(last) = entries.last() {
            assert!((last.0 as usize) < dim, "context index out of range");
        }
        Self { dim, entries }
    }

    /// Build from a dense value slice (all positions stored).
    pub fn dense(values: &[f64]) -> Self {
        Self {
            dim: values.len(),
            entries: values
                .iter()
                .enumerate()
                .map(|(i, &v)| (i as u32, v))
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    /// Dot product against a dense weight vector of length `dim`.
    pub fn dot(&self, dense: &[f64]) -> f64 {
        debug_assert_eq!(dense.len(), self.dim);
        self.entries
            .iter()
            .map(|&(i, v)| v * dense[i as usize])
            .sum()
    }

    /// Squared Euclidean norm.
    pub fn sq_norm(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v * v).sum()
    }

    /// Densify (mostly for tests and small-dimension fitting).
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &(i, v) in &self.entries {
            out[i as usize] = v;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_and_norm() {
        let x = Context::new(5, vec![(1, 2.0), (4, -1.0)]);
        assert_eq!(x.dot(&[1.0, 3.0, 0.0, 0.0, 2.0]), 4.0);
        assert_eq!(x.sq_norm(), 5.0);
        assert_eq!(x.to_dense(), vec![0.0, 2.0, 0.0, 0.0, -1.0]);
    }

    #[test]
    #[should_panic]
    fn rejects_unsorted_entries() {
        let _ = Context::new(5, vec![(3, 1.0), (1, 2.0)]);
    }
}
