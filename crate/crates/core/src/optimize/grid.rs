//! Exhaustive grid oracle for the sum rate on tiny strategy spaces.
//!
//! Evaluates `I(T_a,T_b;Y|S)` on every pair of points of the simplex lattices
//! `{pi : resolution * pi integral}` and returns the maximum. The evaluation
//! code here is deliberately separate from the optimizer's.
//!
//! To keep a resolution-100 sweep over two 4-strategy simplices (about
//! 3 * 10^10 pairs) tractable, a whole `pi_b` slice is skipped when an upper
//! bound on its best value does not exceed the best value already found. The
//! bound is valid, so the returned maximum is exactly the lattice maximum.

use crate::error::{Error, Result};
use crate::model::{FsMacSpec, Pmf, StrategyChannel};
use crate::par;
use crate::rates::{entropy, TeamPolicy};

/// Largest strategy space the oracle accepts, per user.
pub const GRID_MAX_STRATEGIES: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct GridOracleResult {
    /// Maximum of the sum-rate bound over the lattice, in bits.
    pub value: f64,
    /// A lattice policy attaining it.
    pub policy: TeamPolicy,
    /// Number of `(pi_a, pi_b)` pairs actually evaluated.
    pub evaluated: u64,
    /// Number of `pi_b` lattice points skipped by the bound.
    pub pruned_slices: u64,
}

/// All compositions of `resolution` into `parts` nonnegative integers, as
/// probability vectors, in lexicographic order of the integer parts.
pub fn simplex_lattice(parts: usize, resolution: usize) -> Vec<Vec<f64>> {
    fn rec(parts: usize, left: usize, res: f64, prefix: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if prefix.len() + 1 == parts {
            prefix.push(left);
            out.push(prefix.iter().map(|&k| k as f64 / res).collect());
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            rec(parts, left - k, res, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(parts, resolution, resolution as f64, &mut Vec::new(), &mut out);
    out
}

/// Sum-rate pieces that depend only on `pi_b`.
struct Slice {
    /// `V[s][ta][y] = sum_tb pi_b(tb) Q(y|s,ta,tb)`.
    v: Vec<f64>,
    /// `-sum_s P(s) sum_tb pi_b(tb) H(Q(.|s,ta,tb))` per `ta`.
    lin: Vec<f64>,
}

struct Oracle<'a> {
    state: &'a [f64],
    q: &'a StrategyChannel,
    row_h: Vec<f64>,
}

impl<'a> Oracle<'a> {
    fn slice(&self, pi_b: &[f64]) -> Slice {
        let (ns, na, nb, ny) = self.q.dims();
        let mut v = vec![0.0; ns * na * ny];
        let mut lin = vec![0.0; na];
        for s in 0..ns {
            for ta in 0..na {
                for tb in 0..nb {
                    let w = pi_b[tb];
                    if w == 0.0 {
                        continue;
                    }
                    let row = self.q.row(s, ta, tb);
                    for y in 0..ny {
                        v[(s * na + ta) * ny + y] += w * row[y];
                    }
                    lin[ta] -= self.state[s] * w * self.row_h[(s * na + ta) * nb + tb];
                }
            }
        }
        Slice { v, lin }
    }

    /// `I(T_a,T_b;Y|S)` for `pi_a` against a prepared `pi_b` slice.
    fn value(&self, sl: &Slice, pi_a: &[f64], scratch: &mut [f64]) -> f64 {
        let (ns, na, _, ny) = self.q.dims();
        let mut total: f64 = pi_a.iter().zip(&sl.lin).map(|(p, l)| p * l).sum();
        for s in 0..ns {
            scratch.fill(0.0);
            for ta in 0..na {
                let p = pi_a[ta];
                if p == 0.0 {
                    continue;
                }
                for y in 0..ny {
                    scratch[y] += p * sl.v[(s * na + ta) * ny + y];
                }
            }
            total += self.state[s] * entropy(scratch);
        }
        total
    }

    /// Upper bound on `max_{pi_a} value(sl, pi_a)` over the whole simplex.
    fn slice_bound(&self, sl: &Slice) -> f64 {
        let (ns, na, _, ny) = self.q.dims();
        let mut bound = sl.lin.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for s in 0..ns {
            // output law for state s ranges over the convex hull of V[s][.]
            let h_max = if ny == 2 {
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for ta in 0..na {
                    let p0 = sl.v[(s * na + ta) * ny];
                    lo = lo.min(p0);
                    hi = hi.max(p0);
                }
                if lo <= 0.5 && 0.5 <= hi {
                    1.0
                } else {
                    let nearest = if hi < 0.5 { hi } else { lo };
                    entropy(&[nearest, 1.0 - nearest])
                }
            } else {
                let support = (0..ny)
                    .filter(|&y| (0..na).any(|ta| sl.v[(s * na + ta) * ny + y] > 0.0))
                    .count();
                (support.max(1) as f64).log2()
            };
            bound += self.state[s] * h_max;
        }
        bound
    }
}

/// Maximum of the sum-rate bound over the product lattice with spacing
/// `1/resolution`. Both strategy spaces must have at most
/// [`GRID_MAX_STRATEGIES`] members.
pub fn grid_oracle_sum_rate(spec: &FsMacSpec, q: &StrategyChannel, resolution: usize) -> Result<GridOracleResult> {
    grid_oracle_impl(spec, q, resolution, true)
}

pub(crate) fn grid_oracle_impl(
    spec: &FsMacSpec,
    q: &StrategyChannel,
    resolution: usize,
    prune: bool,
) -> Result<GridOracleResult> {
    let (ns, na, nb, _) = q.dims();
    for n in [na, nb] {
        if n > GRID_MAX_STRATEGIES {
            return Err(Error::CapExceeded {
                what: "grid oracle strategy count",
                value: n as u128,
                cap: GRID_MAX_STRATEGIES as u128,
            });
        }
    }
    if resolution == 0 {
        return Err(Error::InvalidArgument("grid resolution must be positive".into()));
    }
    let mut row_h = Vec::with_capacity(ns * na * nb);
    for s in 0..ns {
        for ta in 0..na {
            for tb in 0..nb {
                row_h.push(entropy(q.row(s, ta, tb)));
            }
        }
    }
    let oracle = Oracle {
        state: spec.state_pmf().as_slice(),
        q,
        row_h,
    };
    let ny = q.dims().3;

    // coarse pass on a sub-lattice to get a good incumbent
    let coarse_res = (1..=resolution.min(10)).rev().find(|d| resolution.is_multiple_of(*d)).unwrap_or(1);
    let coarse_a = simplex_lattice(na, coarse_res);
    let coarse_b = simplex_lattice(nb, coarse_res);
    let mut scratch = vec![0.0; ny];
    let mut best = (f64::NEG_INFINITY, coarse_a[0].clone(), coarse_b[0].clone());
    let mut evaluated = 0u64;
    for pb in &coarse_b {
        let sl = oracle.slice(pb);
        for pa in &coarse_a {
            let v = oracle.value(&sl, pa, &mut scratch);
            evaluated += 1;
            if v > best.0 {
                best = (v, pa.clone(), pb.clone());
            }
        }
    }

    let fine_a = simplex_lattice(na, resolution);
    let fine_b = simplex_lattice(nb, resolution);
    const CHUNK: usize = 256;
    let n_chunks = fine_b.len().div_ceil(CHUNK);
    let incumbent = best.0;
    let chunk_results = par::map_indexed(n_chunks, |c| {
        let mut scratch = vec![0.0; ny];
        let mut local: Option<(f64, usize, usize)> = None;
        let mut bar = incumbent;
        let (mut evals, mut pruned) = (0u64, 0u64);
        for ib in c * CHUNK..((c + 1) * CHUNK).min(fine_b.len()) {
            let sl = oracle.slice(&fine_b[ib]);
            if prune && oracle.slice_bound(&sl) <= bar {
                pruned += 1;
                continue;
            }
            for (ia, pa) in fine_a.iter().enumerate() {
                let v = oracle.value(&sl, pa, &mut scratch);
                evals += 1;
                if v > bar {
                    bar = v;
                    local = Some((v, ia, ib));
                }
            }
        }
        (local, evals, pruned)
    });
    let mut pruned_slices = 0;
    for (local, evals, pruned) in chunk_results {
        evaluated += evals;
        pruned_slices += pruned;
        if let Some((v, ia, ib)) = local {
            if v > best.0 {
                best = (v, fine_a[ia].clone(), fine_b[ib].clone());
            }
        }
    }
    Ok(GridOracleResult {
        value: best.0,
        policy: TeamPolicy::new(Pmf::from_vec_unchecked(best.1), Pmf::from_vec_unchecked(best.2)),
        evaluated,
        pruned_slices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{induced_strategy_channel, instances, StrategyCaps};
    use crate::rates::pentagon;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lattice_sizes() {
        // C(res + k - 1, k - 1)
        assert_eq!(simplex_lattice(4, 100).len(), 176_851);
        assert_eq!(simplex_lattice(2, 200).len(), 201);
        assert_eq!(simplex_lattice(3, 1).len(), 3);
        assert!(simplex_lattice(3, 7).iter().all(|p| (p.iter().sum::<f64>() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn oracle_evaluation_matches_pentagon() {
        let spec = instances::mod2_adder(0.1, 0.25);
        let q = induced_strategy_channel(&spec);
        let oracle = Oracle {
            state: spec.state_pmf().as_slice(),
            q: &q,
            row_h: (0..2)
                .flat_map(|s| (0..4).flat_map(move |a| (0..4).map(move |b| (s, a, b))))
                .map(|(s, a, b)| entropy(q.row(s, a, b)))
                .collect(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut scratch = vec![0.0; 2];
        for _ in 0..20 {
            let mut draw = || {
                let v: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
                let z: f64 = v.iter().sum();
                v.into_iter().map(|x| x / z).collect::<Vec<_>>()
            };
            let (pa, pb) = (draw(), draw());
            let sl = oracle.slice(&pb);
            let v = oracle.value(&sl, &pa, &mut scratch);
            let pol = TeamPolicy::new(Pmf::new(pa).unwrap(), Pmf::new(pb).unwrap());
            let pent = pentagon(&spec, &q, &pol).unwrap();
            assert!((v - pent.bound_sum).abs() < 1e-12);
            assert!(oracle.slice_bound(&sl) >= v - 1e-12);
        }
    }

    #[test]
    fn resolution_one_is_vertex_maximum() {
        let spec = instances::mod2_adder(0.1, 0.0);
        let q = induced_strategy_channel(&spec);
        let res = grid_oracle_sum_rate(&spec, &q, 1).unwrap();
        let mut best = f64::NEG_INFINITY;
        for a in 0..4 {
            for b in 0..4 {
                let pol = TeamPolicy::new(Pmf::point(4, a), Pmf::point(4, b));
                best = best.max(pentagon(&spec, &q, &pol).unwrap().bound_sum);
            }
        }
        assert_eq!(res.value, best);
    }

    #[test]
    fn pruning_does_not_change_the_maximum() {
        for (ca, cb) in [(0.0, 0.0), (0.2, 0.1), (0.4, 0.45)] {
            let spec = instances::mod2_adder(ca, cb);
            let q = induced_strategy_channel(&spec);
            let pruned = grid_oracle_impl(&spec, &q, 12, true).unwrap();
            let full = grid_oracle_impl(&spec, &q, 12, false).unwrap();
            assert_eq!(pruned.value, full.value);
        }
        let spec = instances::stateless_adder();
        let q = induced_strategy_channel(&spec);
        let pruned = grid_oracle_impl(&spec, &q, 40, true).unwrap();
        let full = grid_oracle_impl(&spec, &q, 40, false).unwrap();
        assert_eq!(pruned.value, full.value);
    }

    #[test]
    fn guard_rejects_large_spaces() {
        let spec = FsMacSpec::from_fn(
            3,
            2,
            2,
            vec![0.5, 0.5],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![1.0], vec![1.0]],
            StrategyCaps::default(),
            |_, a, b| if (a + b) % 2 == 0 { vec![1.0, 0.0] } else { vec![0.0, 1.0] },
        )
        .unwrap();
        let q = induced_strategy_channel(&spec);
        assert!(matches!(
            grid_oracle_sum_rate(&spec, &q, 10),
            Err(Error::CapExceeded { .. })
        ));
    }
}
