//! Shannon strategies: deterministic maps from an encoder's observation
//! alphabet to its input alphabet.
//!
//! A strategy is stored as its lookup table and identified by a little-endian
//! mixed-radix id: observation symbol 0 is the least significant digit, so
//! `id = sum_k table[k] * input_size^k`. Ids show up in reports and policy
//! files, so this ordering is part of the public format.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// The set of all maps from `obs_size` observation symbols to `input_size`
/// input symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategySpace {
    obs_size: usize,
    input_size: usize,
    count: usize,
}

/// One strategy: `table[obs]` is the input sent when `obs` is observed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Strategy {
    table: Vec<usize>,
    id: usize,
}

impl StrategySpace {
    /// Fails if either alphabet is empty or `input_size^obs_size` overflows.
    pub fn new(obs_size: usize, input_size: usize) -> Result<Self> {
        if obs_size == 0 || input_size == 0 {
            return Err(Error::InvalidArgument(format!(
                "strategy space needs nonempty alphabets (obs {obs_size}, input {input_size})"
            )));
        }
        let count = u32::try_from(obs_size)
            .ok()
            .and_then(|e| input_size.checked_pow(e))
            .ok_or(Error::CapExceeded {
                what: "strategy space size",
                value: u128::MAX,
                cap: usize::MAX as u128,
            })?;
        Ok(Self {
            obs_size,
            input_size,
            count,
        })
    }

    pub fn obs_size(&self) -> usize {
        self.obs_size
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    /// Number of strategies, `input_size^obs_size`.
    pub fn count(&self) -> usize {
        self.count
    }

    /// Errors with [`Error::CapExceeded`] if the space has more than `cap` members.
    pub fn check_cap(&self, cap: usize) -> Result<()> {
        if self.count > cap {
            return Err(Error::CapExceeded {
                what: "strategy space size",
                value: self.count as u128,
                cap: cap as u128,
            });
        }
        Ok(())
    }

    /// Input chosen by strategy `id` on observation `obs`, without building the table.
    #[inline]
    pub fn input_of(&self, id: usize, obs: usize) -> usize {
        debug_assert!(id < self.count && obs < self.obs_size);
        (id / self.input_size.pow(obs as u32)) % self.input_size
    }

    pub fn decode(&self, id: usize) -> Result<Strategy> {
        if id >= self.count {
            return Err(Error::OutOfRange {
                what: "strategy id",
                index: id,
                bound: self.count,
            });
        }
        let mut rest = id;
        let table = (0..self.obs_size)
            .map(|_| {
                let digit = rest % self.input_size;
                rest /= self.input_size;
                digit
            })
            .collect();
        Ok(Strategy { table, id })
    }

    pub fn encode(&self, table: &[usize]) -> Result<usize> {
        if table.len() != self.obs_size {
            return Err(Error::DimensionMismatch {
                what: "strategy table",
                expected: self.obs_size,
                found: table.len(),
            });
        }
        let mut id = 0;
        for &x in table.iter().rev() {
            if x >= self.input_size {
                return Err(Error::OutOfRange {
                    what: "strategy input symbol",
                    index: x,
                    bound: self.input_size,
                });
            }
            id = id * self.input_size + x;
        }
        Ok(id)
    }

    pub fn strategy(&self, table: Vec<usize>) -> Result<Strategy> {
        let id = self.encode(&table)?;
        Ok(Strategy { table, id })
    }

    /// All strategies in ascending id order, provided the space fits under `cap`.
    pub fn enumerate(&self, cap: usize) -> Result<Vec<Strategy>> {
        self.check_cap(cap)?;
        (0..self.count).map(|id| self.decode(id)).collect()
    }

    /// Flat `count x obs_size` lookup table: entry `id * obs_size + obs` is the
    /// input of strategy `id` on observation `obs`.
    pub fn lookup_table(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.count * self.obs_size);
        for id in 0..self.count {
            let mut rest = id;
            for _ in 0..self.obs_size {
                out.push(rest % self.input_size);
                rest /= self.input_size;
            }
        }
        out
    }
}

impl Strategy {
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    pub fn apply(&self, obs: usize) -> Result<usize> {
        self.table.get(obs).copied().ok_or(Error::OutOfRange {
            what: "observation symbol",
            index: obs,
            bound: self.table.len(),
        })
    }
}
