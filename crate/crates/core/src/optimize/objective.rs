//! Weighted pentagon objective restricted to one user's policy.
//!
//! With the other user's policy fixed, every pentagon bound is a concave
//! function of the free policy:
//!
//! - `I(T_own;Y|T_other,S)` is a mixture of mutual informations of the
//!   channels `Q(.|s,.,t_other)`, hence concave;
//! - `I(T_own,T_other;Y|S) = H(Y|S) - H(Y|T,S)` is concave plus linear;
//! - `I(T_other;Y|T_own,S)` is linear in the free policy.
//!
//! [`Block`] caches everything that depends only on the fixed policy, so the
//! inner solvers pay `O(|S| |T_own| |Y|)` per sum-rate evaluation.

use crate::model::StrategyChannel;
use crate::rates::entropy;

/// Nonnegative weights of `w_own * I(T_own;Y|T_other,S) + w_other *
/// I(T_other;Y|T_own,S) + w_sum * I(T_own,T_other;Y|S)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct BlockWeights {
    pub own: f64,
    pub other: f64,
    pub sum: f64,
}

/// Strategy channel laid out with the free user first, plus per-row entropies.
#[derive(Debug)]
pub(crate) struct Layout {
    pub q: StrategyChannel,
    /// `H(Q(.|s,own,other))`, flat `[s][own][other]`.
    pub row_entropy: Vec<f64>,
}

impl Layout {
    pub fn new(q: StrategyChannel) -> Self {
        let (ns, no, nt, _) = q.dims();
        let mut row_entropy = Vec::with_capacity(ns * no * nt);
        for s in 0..ns {
            for o in 0..no {
                for t in 0..nt {
                    row_entropy.push(entropy(q.row(s, o, t)));
                }
            }
        }
        Self { q, row_entropy }
    }
}

// log2 of a vanishing output probability that still carries weight; only
// reachable for strategies with zero mass (conditional-gradient vertices)
const LOG2_FLOOR: f64 = -1100.0;

#[inline]
fn safe_log2(x: f64) -> f64 {
    if x > 0.0 {
        x.log2()
    } else {
        LOG2_FLOOR
    }
}

/// The objective in the free policy, with the other policy frozen.
pub(crate) struct Block<'a> {
    layout: &'a Layout,
    state: &'a [f64],
    other: &'a [f64],
    weights: BlockWeights,
    /// `V[s][own][y] = sum_t other(t) Q(y|s,own,t)`.
    mixed: Vec<f64>,
    /// Coefficients of the part that is linear in the free policy.
    linear: Vec<f64>,
}

impl<'a> Block<'a> {
    pub fn new(layout: &'a Layout, state: &'a [f64], other: &'a [f64], weights: BlockWeights) -> Self {
        let (ns, no, nt, ny) = layout.q.dims();
        debug_assert_eq!(other.len(), nt);
        let mut mixed = vec![0.0; ns * no * ny];
        // -sum_s p(s) sum_t other(t) H(Q(.|s,own,t)), the -H(Y|T,S) part
        let mut cond_entropy = vec![0.0; no];
        for s in 0..ns {
            for o in 0..no {
                let dst = &mut mixed[(s * no + o) * ny..(s * no + o + 1) * ny];
                let mut h = 0.0;
                for (t, &pt) in other.iter().enumerate() {
                    if pt == 0.0 {
                        continue;
                    }
                    for (d, &qy) in dst.iter_mut().zip(layout.q.row(s, o, t)) {
                        *d += pt * qy;
                    }
                    h += pt * layout.row_entropy[(s * no + o) * nt + t];
                }
                cond_entropy[o] -= state[s] * h;
            }
        }
        let mut linear: Vec<f64> = cond_entropy
            .iter()
            .map(|&h| (weights.sum + weights.own) * h)
            .collect();
        if weights.other > 0.0 {
            // I(T_other;Y|T_own,S) = sum_own pi(own) [H(Y|own,S) - H(Y|own,T_other,S)]
            for (o, lin) in linear.iter_mut().enumerate() {
                let h_given_own: f64 = (0..ns)
                    .map(|s| state[s] * entropy(&mixed[(s * no + o) * ny..(s * no + o + 1) * ny]))
                    .sum();
                *lin += weights.other * (h_given_own + cond_entropy[o]);
            }
        }
        Self {
            layout,
            state,
            other,
            weights,
            mixed,
            linear,
        }
    }

    pub fn len(&self) -> usize {
        self.linear.len()
    }

    /// Objective value at `pi`; fills `grad` (up to an additive constant,
    /// which the simplex solvers ignore) when given.
    pub fn eval(&self, pi: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
        let (ns, no, nt, ny) = self.layout.q.dims();
        let mut value: f64 = pi.iter().zip(&self.linear).map(|(p, l)| p * l).sum();
        if let Some(g) = grad.as_deref_mut() {
            g.copy_from_slice(&self.linear);
        }
        let mut out = vec![0.0; ny];
        if self.weights.sum > 0.0 {
            for s in 0..ns {
                let ps = self.state[s];
                if ps == 0.0 {
                    continue;
                }
                out.fill(0.0);
                for (o, &p) in pi.iter().enumerate() {
                    let v = &self.mixed[(s * no + o) * ny..(s * no + o + 1) * ny];
                    for (r, &vy) in out.iter_mut().zip(v) {
                        *r += p * vy;
                    }
                }
                value += self.weights.sum * ps * entropy(&out);
                if let Some(g) = grad.as_deref_mut() {
                    let logs: Vec<f64> = out.iter().map(|&r| safe_log2(r)).collect();
                    for (o, gi) in g.iter_mut().enumerate() {
                        let v = &self.mixed[(s * no + o) * ny..(s * no + o + 1) * ny];
                        let cross: f64 = v.iter().zip(&logs).filter(|(vy, _)| **vy > 0.0).map(|(vy, l)| vy * l).sum();
                        *gi -= self.weights.sum * ps * cross;
                    }
                }
            }
        }
        if self.weights.own > 0.0 {
            for s in 0..ns {
                for t in 0..nt {
                    let w = self.state[s] * self.other[t];
                    if w == 0.0 {
                        continue;
                    }
                    out.fill(0.0);
                    for (o, &p) in pi.iter().enumerate() {
                        for (r, &qy) in out.iter_mut().zip(self.layout.q.row(s, o, t)) {
                            *r += p * qy;
                        }
                    }
                    value += self.weights.own * w * entropy(&out);
                    if let Some(g) = grad.as_deref_mut() {
                        let logs: Vec<f64> = out.iter().map(|&r| safe_log2(r)).collect();
                        for (o, gi) in g.iter_mut().enumerate() {
                            let cross: f64 = self
                                .layout
                                .q
                                .row(s, o, t)
                                .iter()
                                .zip(&logs)
                                .filter(|(qy, _)| **qy > 0.0)
                                .map(|(qy, l)| qy * l)
                                .sum();
                            *gi -= self.weights.own * w * cross;
                        }
                    }
                }
            }
        }
        value
    }
}

/// Outcome of one inner solve.
#[derive(Debug, Clone, Copy)]
pub(crate) struct InnerOutcome {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Frank-Wolfe gap `max_i g_i - <pi, g>`; bounds the suboptimality of a concave objective.
fn duality_gap(pi: &[f64], grad: &[f64]) -> f64 {
    let best = grad.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let avg: f64 = pi.iter().zip(grad).map(|(p, g)| p * g).sum();
    best - avg
}

fn gap_small(gap: f64, value: f64, rel_tol: f64) -> bool {
    gap <= rel_tol * value.abs().max(1.0)
}

/// Multiplicative-weights ascent on the simplex with backtracking.
///
/// Every accepted step is non-decreasing. A step size of `ln 2` on the
/// sum-rate objective is the classical Blahut-Arimoto update; the step grows
/// after each success and halves on failure.
pub(crate) fn exponentiated_gradient(block: &Block<'_>, pi: &mut [f64], max_iters: usize, rel_tol: f64) -> InnerOutcome {
    let n = block.len();
    let mut grad = vec![0.0; n];
    let mut cand = vec![0.0; n];
    let mut value = block.eval(pi, Some(&mut grad));
    let mut step = std::f64::consts::LN_2;
    for it in 0..max_iters {
        if gap_small(duality_gap(pi, &grad), value, rel_tol) {
            return InnerOutcome { value, iterations: it, converged: true };
        }
        let gmax = grad.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut accepted = None;
        for _ in 0..60 {
            let mut z = 0.0;
            for ((c, &p), &g) in cand.iter_mut().zip(pi.iter()).zip(&grad) {
                *c = p * (step * (g - gmax)).exp();
                z += *c;
            }
            cand.iter_mut().for_each(|c| *c /= z);
            let v = block.eval(&cand, None);
            if v >= value {
                accepted = Some(v);
                break;
            }
            step *= 0.5;
        }
        let Some(v) = accepted else {
            // no ascent step left at double precision
            return InnerOutcome { value, iterations: it, converged: true };
        };
        let improvement = v - value;
        pi.copy_from_slice(&cand);
        value = block.eval(pi, Some(&mut grad));
        if improvement == 0.0 {
            return InnerOutcome { value, iterations: it + 1, converged: true };
        }
        step = (step * 2.0).min(1e6);
    }
    let converged = gap_small(duality_gap(pi, &grad), value, rel_tol);
    InnerOutcome { value, iterations: max_iters, converged }
}

/// Frank-Wolfe: move toward the best vertex with a backtracked step.
pub(crate) fn conditional_gradient(block: &Block<'_>, pi: &mut [f64], max_iters: usize, rel_tol: f64) -> InnerOutcome {
    let n = block.len();
    let mut grad = vec![0.0; n];
    let mut cand = vec![0.0; n];
    let mut value = block.eval(pi, Some(&mut grad));
    for it in 0..max_iters {
        let gap = duality_gap(pi, &grad);
        if gap_small(gap, value, rel_tol) {
            return InnerOutcome { value, iterations: it, converged: true };
        }
        let vertex = grad
            .iter()
            .enumerate()
            .fold(0, |best, (i, &g)| if g > grad[best] { i } else { best });
        let mut gamma = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            for (i, (c, &p)) in cand.iter_mut().zip(pi.iter()).enumerate() {
                *c = (1.0 - gamma) * p + if i == vertex { gamma } else { 0.0 };
            }
            let v = block.eval(&cand, None);
            if v > value {
                accepted = Some(v);
                break;
            }
            gamma *= 0.5;
        }
        if accepted.is_none() {
            return InnerOutcome { value, iterations: it, converged: true };
        }
        pi.copy_from_slice(&cand);
        value = block.eval(pi, Some(&mut grad));
    }
    let converged = gap_small(duality_gap(pi, &grad), value, rel_tol);
    InnerOutcome { value, iterations: max_iters, converged }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{induced_strategy_channel, instances, Pmf};
    use crate::rates::{pentagon, TeamPolicy};

    fn check_block_matches_pentagon(crossover_a: f64, crossover_b: f64) {
        let spec = instances::mod2_adder(crossover_a, crossover_b);
        let q = induced_strategy_channel(&spec);
        let layout_a = Layout::new(q.clone());
        let layout_b = Layout::new(q.transposed());
        let pa = vec![0.1, 0.2, 0.3, 0.4];
        let pb = vec![0.35, 0.05, 0.25, 0.35];
        let pent = pentagon(
            &spec,
            &q,
            &TeamPolicy::new(Pmf::new(pa.clone()).unwrap(), Pmf::new(pb.clone()).unwrap()),
        )
        .unwrap();
        let state = spec.state_pmf().as_slice();
        let weights = [(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0), (0.3, 0.2, 0.5)];
        for (own, other, sum) in weights {
            let w = BlockWeights { own, other, sum };
            let expect_a = own * pent.bound_a + other * pent.bound_b + sum * pent.bound_sum;
            let expect_b = own * pent.bound_b + other * pent.bound_a + sum * pent.bound_sum;
            let va = Block::new(&layout_a, state, &pb, w).eval(&pa, None);
            let vb = Block::new(&layout_b, state, &pa, w).eval(&pb, None);
            assert!((va - expect_a).abs() < 1e-12, "{va} vs {expect_a}");
            assert!((vb - expect_b).abs() < 1e-12, "{vb} vs {expect_b}");
        }
    }

    #[test]
    fn block_values_match_generic_pentagon() {
        check_block_matches_pentagon(0.0, 0.0);
        check_block_matches_pentagon(0.1, 0.3);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let spec = instances::mod2_adder(0.15, 0.05);
        let q = induced_strategy_channel(&spec);
        let layout = Layout::new(q);
        let pb = vec![0.3, 0.2, 0.1, 0.4];
        let w = BlockWeights { own: 0.4, other: 0.7, sum: 1.3 };
        let block = Block::new(&layout, spec.state_pmf().as_slice(), &pb, w);
        let pi = vec![0.25, 0.15, 0.4, 0.2];
        let mut grad = vec![0.0; 4];
        block.eval(&pi, Some(&mut grad));
        // directional derivatives along e_i - e_j are constant-free
        let h = 1e-6;
        for i in 0..4 {
            for j in 0..4 {
                if i == j {
                    continue;
                }
                let mut up = pi.clone();
                let mut down = pi.clone();
                up[i] += h;
                up[j] -= h;
                down[i] -= h;
                down[j] += h;
                let fd = (block.eval(&up, None) - block.eval(&down, None)) / (2.0 * h);
                let an = grad[i] - grad[j];
                assert!((fd - an).abs() < 1e-6, "({i},{j}) fd {fd} analytic {an}");
            }
        }
    }

    #[test]
    fn solvers_reach_single_user_optimum() {
        // with pi_b on the constant strategies, user a alone can reach 1 bit
        let spec = instances::mod2_adder(0.0, 0.0);
        let layout = Layout::new(induced_strategy_channel(&spec));
        let pb = vec![0.9, 0.0, 0.0, 0.1];
        let block = Block::new(&layout, spec.state_pmf().as_slice(), &pb, BlockWeights { own: 0.0, other: 0.0, sum: 1.0 });
        for solve in [exponentiated_gradient, conditional_gradient] {
            let mut pi = vec![0.7, 0.1, 0.1, 0.1];
            let out = solve(&block, &mut pi, 2000, 1e-12);
            assert!(out.converged);
            assert!((out.value - 1.0).abs() < 1e-9, "{}", out.value);
        }
    }
}
