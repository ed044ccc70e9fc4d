//! Joint epsilon-typicality over a finite set of variables.
//!
//! Sequences `x_1..x_k`, each of length `n`, are jointly typical for a
//! single-letter law `P` when every nonempty subset `U` of the variables
//! satisfies `| -(1/n) log2 P_U(x_U) - H(U) | < eps`, with `P_U` the marginal
//! of `P` on `U` applied letter by letter. A letter of probability zero makes
//! its subset fail.

use crate::error::{Error, Result};
use crate::rates::entropy;

/// Largest number of variables a [`JointPmf`] may have.
pub const MAX_VARIABLES: usize = 8;

/// Single-letter law of `k` variables, flat with the first variable most
/// significant.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    dims: Vec<usize>,
    probs: Vec<f64>,
}

impl JointPmf {
    pub fn new(dims: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        if dims.is_empty() || dims.len() > MAX_VARIABLES || dims.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "joint law needs 1 to {MAX_VARIABLES} nonempty variables, got {dims:?}"
            )));
        }
        let size: usize = dims.iter().product();
        if probs.len() != size {
            return Err(Error::DimensionMismatch { what: "joint law", expected: size, found: probs.len() });
        }
        let total: f64 = probs.iter().sum();
        if probs.iter().any(|p| p.is_nan() || *p < 0.0) || (total - 1.0).abs() > crate::STOCHASTIC_TOL {
            return Err(Error::InvalidArgument(format!("joint law is not a distribution (total {total})")));
        }
        Ok(Self { dims, probs })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn variables(&self) -> usize {
        self.dims.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    /// Dimensions of the variables in `mask` (bit `i` is variable `i`).
    fn sub_dims(&self, mask: u32) -> Vec<usize> {
        (0..self.dims.len()).filter(|i| mask >> i & 1 == 1).map(|i| self.dims[i]).collect()
    }

    /// Marginal on the variables in `mask`, laid out like the full law.
    pub fn marginal(&self, mask: u32) -> Vec<f64> {
        let k = self.dims.len();
        let sub = self.sub_dims(mask);
        let mut out = vec![0.0; sub.iter().product()];
        let mut digits = vec![0usize; k];
        for &p in &self.probs {
            let mut idx = 0;
            for i in 0..k {
                if mask >> i & 1 == 1 {
                    idx = idx * self.dims[i] + digits[i];
                }
            }
            out[idx] += p;
            // advance the mixed-radix counter, last variable fastest
            for i in (0..k).rev() {
                digits[i] += 1;
                if digits[i] < self.dims[i] {
                    break;
                }
                digits[i] = 0;
            }
        }
        out
    }

    /// Entropy in bits of the variables in `mask`.
    pub fn subset_entropy(&self, mask: u32) -> f64 {
        entropy(&self.marginal(mask))
    }
}

/// Per-subset `log2` marginals and entropies, indexed by mask.
#[derive(Debug, Clone)]
pub struct SubsetTables {
    /// `strides[mask][i]`: weight of variable `i` in the flat marginal index
    /// of `mask` (0 for variables outside the mask).
    pub(crate) strides: Vec<Vec<usize>>,
    /// `log2 P_U`, `-inf` where the marginal vanishes.
    pub(crate) log2: Vec<Vec<f64>>,
    pub(crate) entropy: Vec<f64>,
}

impl SubsetTables {
    pub fn new(law: &JointPmf) -> Self {
        let k = law.variables();
        let masks = 1usize << k;
        let mut strides = vec![vec![0; k]; masks];
        let mut log2 = vec![Vec::new(); masks];
        let mut ent = vec![0.0; masks];
        for mask in 1..masks as u32 {
            let mut stride = 1;
            for i in (0..k).rev() {
                if mask >> i & 1 == 1 {
                    strides[mask as usize][i] = stride;
                    stride *= law.dims[i];
                }
            }
            let marg = law.marginal(mask);
            ent[mask as usize] = entropy(&marg);
            log2[mask as usize] = marg.iter().map(|&p| if p > 0.0 { p.log2() } else { f64::NEG_INFINITY }).collect();
        }
        Self { strides, log2, entropy: ent }
    }

    /// `|-(1/n) sum_t log2 P_U(x_t) - H(U)| < eps` for the subset `mask`,
    /// given the flat marginal index of each letter.
    pub(crate) fn passes(&self, mask: usize, indices: impl Iterator<Item = usize>, n: usize, eps: f64) -> bool {
        let table = &self.log2[mask];
        let mut sum = 0.0;
        for idx in indices {
            let l = table[idx];
            if l == f64::NEG_INFINITY {
                return false;
            }
            sum += l;
        }
        (-sum / n as f64 - self.entropy[mask]).abs() < eps
    }
}

/// Whether `sequences` (one per variable of `law`, all of one length) are
/// jointly `epsilon`-typical. All `2^k - 1` nonempty subsets are checked.
pub fn typicality_check(sequences: &[&[usize]], law: &JointPmf, epsilon: f64) -> Result<bool> {
    let k = law.variables();
    if sequences.len() != k {
        return Err(Error::DimensionMismatch { what: "typicality sequences", expected: k, found: sequences.len() });
    }
    let n = sequences[0].len();
    if n == 0 {
        return Err(Error::InvalidArgument("typicality needs nonempty sequences".into()));
    }
    for (i, seq) in sequences.iter().enumerate() {
        if seq.len() != n {
            return Err(Error::DimensionMismatch { what: "typicality sequence length", expected: n, found: seq.len() });
        }
        if let Some(&x) = seq.iter().find(|&&x| x >= law.dims[i]) {
            return Err(Error::OutOfRange { what: "typicality letter", index: x, bound: law.dims[i] });
        }
    }
    let tables = SubsetTables::new(law);
    Ok((1..1usize << k).all(|mask| {
        let strides = &tables.strides[mask];
        let indices = (0..n).map(|t| (0..k).map(|i| sequences[i][t] * strides[i]).sum::<usize>());
        tables.passes(mask, indices, n, epsilon)
    }))
}
