use crate::error::{OccError, Result};

/// Block time permutation: output block `n` is input block `order[n]`,
/// run backwards when `signs[n] == -1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimePermutation {
    order: Vec<usize>,
    signs: Vec<i8>,
}

impl TimePermutation {
    /// `order` is zero-based; `signs` entries must be `1` or `-1`.
    pub fn new(order: Vec<usize>, signs: Vec<i8>) -> Result<Self> {
        let n = order.len();
        if n == 0 || signs.len() != n {
            return Err(OccError::Dimension(format!(
                "permutation of {n} blocks needs {n} signs, got {}",
                signs.len()
            )));
        }
        let mut seen = vec![false; n];
        for &k in &order {
            if k >= n || seen[k] {
                return Err(OccError::Config(format!("{order:?} is not a permutation")));
            }
            seen[k] = true;
        }
        if signs.iter().any(|s| *s != 1 && *s != -1) {
            return Err(OccError::Config("signs must be +1 or -1".into()));
        }
        Ok(Self { order, signs })
    }

    pub fn identity(n_blocks: usize) -> Self {
        Self {
            order: (0..n_blocks).collect(),
            signs: vec![1; n_blocks],
        }
    }

    pub fn n_blocks(&self) -> usize {
        self.order.len()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    /// Permutation undoing `self`.
    pub fn inverse(&self) -> Self {
        let n = self.order.len();
        let mut order = vec![0; n];
        let mut signs = vec![1; n];
        for (out, &src) in self.order.iter().enumerate() {
            order[src] = out;
            signs[src] = self.signs[out];
        }
        Self { order, signs }
    }
}

/// Rearranges the piecewise-constant step values of a path by blocks.
pub fn shuffle_path(values: &[f64], perm: &TimePermutation) -> Result<Vec<f64>> {
    let n = perm.n_blocks();
    if !values.len().is_multiple_of(n) {
        return Err(OccError::Dimension(format!(
            "path of length {} does not split into {n} equal blocks",
            values.len()
        )));
    }
    let b = values.len() / n;
    let mut out = Vec::with_capacity(values.len());
    for (&src, &sign) in perm.order.iter().zip(&perm.signs) {
        let block = &values[src * b..(src + 1) * b];
        if sign == 1 {
            out.extend_from_slice(block);
        } else {
            out.extend(block.iter().rev());
        }
    }
    Ok(out)
}
