//! Sum-rate maximization over product team policies and the inner bound region.
//!
//! Both problems use one engine. It alternates between the two users' policies
//! and maximizes a nonnegative combination of the pentagon bounds over one
//! simplex while the other policy stays fixed. Each such block problem is concave (see
//! [`objective`]), so every accepted step is an ascent step and the objective
//! trace is nondecreasing. Alternation finds coordinate-wise optima only, so
//! the engine runs several restarts from Dirichlet(1) draws and keeps the best.
//!
//! Restarts and region directions are independent work items. Each draws its
//! initial policy from [`crate::rng::item_rng`] keyed by its own index, and
//! merging is by index, so results do not depend on the thread count.

mod grid;
mod hull;
mod objective;

pub use grid::{grid_oracle_sum_rate, simplex_lattice, GridOracleResult, GRID_MAX_STRATEGIES};
pub use hull::{convex_hull_2d, RateRegion};

use crate::error::{Error, Result};
use crate::model::{FsMacSpec, Pmf, StrategyChannel};
use crate::par;
use crate::rates::{pentagon, RatePentagon, TeamPolicy};
use crate::rng::{item_rng, Role};
use objective::{Block, BlockWeights, InnerOutcome, Layout};
use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

/// Solver for the concave single-user block problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerSolver {
    #[default]
    ExponentiatedGradient,
    ConditionalGradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    /// Cap on outer alternations and on iterations of each inner solve.
    pub max_iters: usize,
    pub rel_tol: f64,
    pub seed: u64,
    pub inner_solver: InnerSolver,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 16,
            max_iters: 500,
            rel_tol: 1e-9,
            seed: 0,
            inner_solver: InnerSolver::ExponentiatedGradient,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidArgument("restarts must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::InvalidArgument(format!("rel_tol must be positive, got {}", self.rel_tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumRateResult {
    /// `I(T_a,T_b;Y|S)` of `policy`, in bits.
    pub value: f64,
    pub policy: TeamPolicy,
    /// Outer alternations used by the winning restart.
    pub iterations: usize,
    pub converged: bool,
    /// Index of the winning restart.
    pub restart: usize,
    pub restarts_used: usize,
}

/// One run of alternating maximization.
#[derive(Debug, Clone, PartialEq)]
pub struct AlternatingTrace {
    /// Objective after the initial point and after every half step.
    pub values: Vec<f64>,
    pub policy: TeamPolicy,
    pub iterations: usize,
    /// Inner solver iterations summed over both blocks.
    pub inner_iterations: usize,
    pub converged: bool,
}

/// Objective `w_a * I(T_a;Y|T_b,S) + w_b * I(T_b;Y|T_a,S) + w_sum * I(T_a,T_b;Y|S)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PentagonWeights {
    pub a: f64,
    pub b: f64,
    pub sum: f64,
}

impl PentagonWeights {
    pub const SUM_RATE: PentagonWeights = PentagonWeights { a: 0.0, b: 0.0, sum: 1.0 };

    /// The support function of a pentagon in direction `(c_a, c_b)`, written
    /// as a nonnegative combination of the bounds.
    pub fn direction(c_a: f64, c_b: f64) -> Result<Self> {
        check_direction(c_a, c_b)?;
        Ok(if c_a >= c_b {
            PentagonWeights { a: c_a - c_b, b: 0.0, sum: c_b }
        } else {
            PentagonWeights { a: 0.0, b: c_b - c_a, sum: c_a }
        })
    }

    pub fn apply(&self, pent: &RatePentagon) -> f64 {
        self.a * pent.bound_a + self.b * pent.bound_b + self.sum * pent.bound_sum
    }

    fn for_a(&self) -> BlockWeights {
        BlockWeights { own: self.a, other: self.b, sum: self.sum }
    }

    fn for_b(&self) -> BlockWeights {
        BlockWeights { own: self.b, other: self.a, sum: self.sum }
    }
}

fn check_direction(c_a: f64, c_b: f64) -> Result<()> {
    if !(c_a.is_finite() && c_b.is_finite()) || c_a < 0.0 || c_b < 0.0 || (c_a == 0.0 && c_b == 0.0) {
        return Err(Error::InvalidArgument(format!(
            "direction ({c_a}, {c_b}) must be nonnegative, finite and nonzero"
        )));
    }
    Ok(())
}

/// Maximizes `c_a R_a + c_b R_b` over the pentagon; returns an optimal vertex
/// and the value.
pub fn pentagon_support(pent: &RatePentagon, dir: (f64, f64)) -> Result<((f64, f64), f64)> {
    let (c_a, c_b) = dir;
    check_direction(c_a, c_b)?;
    let v = pent.vertices();
    // the corner on the sum face next to the axis of the larger weight
    let point = if c_a >= c_b { v[2] } else { v[3] };
    Ok((point, c_a * point.0 + c_b * point.1))
}

/// Shared state for all runs on one instance.
struct Engine<'a> {
    state: &'a [f64],
    layout_a: Layout,
    layout_b: Layout,
    cfg: &'a OptimizerConfig,
}

impl<'a> Engine<'a> {
    fn new(spec: &'a FsMacSpec, q: &StrategyChannel, cfg: &'a OptimizerConfig) -> Result<Self> {
        cfg.validate()?;
        let (ns, na, nb, ny) = q.dims();
        let al = spec.alphabets();
        if ns != al.s || na != spec.space_a().count() || nb != spec.space_b().count() || ny != al.y {
            return Err(Error::DimensionMismatch {
                what: "strategy channel",
                expected: al.s * spec.space_a().count() * spec.space_b().count() * al.y,
                found: ns * na * nb * ny,
            });
        }
        Ok(Self {
            state: spec.state_pmf().as_slice(),
            layout_a: Layout::new(q.clone()),
            layout_b: Layout::new(q.transposed()),
            cfg,
        })
    }

    fn solve(&self, block: &Block<'_>, pi: &mut [f64]) -> InnerOutcome {
        match self.cfg.inner_solver {
            InnerSolver::ExponentiatedGradient => {
                objective::exponentiated_gradient(block, pi, self.cfg.max_iters, self.cfg.rel_tol)
            }
            InnerSolver::ConditionalGradient => {
                objective::conditional_gradient(block, pi, self.cfg.max_iters, self.cfg.rel_tol)
            }
        }
    }

    fn run(&self, weights: PentagonWeights, mut pa: Vec<f64>, mut pb: Vec<f64>) -> AlternatingTrace {
        let mut value = Block::new(&self.layout_a, self.state, &pb, weights.for_a()).eval(&pa, None);
        let mut values = vec![value];
        let mut converged = false;
        let mut iterations = 0;
        let mut inner_iterations = 0;
        while iterations < self.cfg.max_iters {
            iterations += 1;
            let start = value;
            let out_a = self.solve(&Block::new(&self.layout_a, self.state, &pb, weights.for_a()), &mut pa);
            values.push(out_a.value);
            let out_b = self.solve(&Block::new(&self.layout_b, self.state, &pa, weights.for_b()), &mut pb);
            values.push(out_b.value);
            value = out_b.value;
            inner_iterations += out_a.iterations + out_b.iterations;
            if value - start <= self.cfg.rel_tol * start.abs().max(1.0) {
                converged = out_a.converged && out_b.converged;
                break;
            }
        }
        AlternatingTrace {
            values,
            policy: TeamPolicy::new(Pmf::from_vec_unchecked(pa), Pmf::from_vec_unchecked(pb)),
            iterations,
            inner_iterations,
            converged,
        }
    }

    /// Dirichlet(1) starting policies for work item `item`.
    fn initial(&self, item: u64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = item_rng(self.cfg.seed, item, Role::Init);
        let mut draw = |n: usize| {
            let mut v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
            let z: f64 = v.iter().sum();
            v.iter_mut().for_each(|x| *x /= z);
            v
        };
        let pa = draw(self.layout_a.q.dims().1);
        let pb = draw(self.layout_b.q.dims().1);
        (pa, pb)
    }
}

/// Work-item id of restart `r` for direction `k`; the sum rate uses `k = None`.
fn item_id(direction: Option<usize>, restart: usize) -> u64 {
    let hi = direction.map_or(0, |k| k as u64 + 1);
    (hi << 32) | restart as u64
}

/// Index of the largest value, ties to the lowest index.
fn argmax(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.into_iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// One alternating run of the sum-rate objective from an explicit start.
pub fn alternating_run(
    spec: &FsMacSpec,
    q: &StrategyChannel,
    cfg: &OptimizerConfig,
    start: &TeamPolicy,
) -> Result<AlternatingTrace> {
    start.check_against(spec)?;
    let engine = Engine::new(spec, q, cfg)?;
    Ok(engine.run(
        PentagonWeights::SUM_RATE,
        start.pi_a.as_slice().to_vec(),
        start.pi_b.as_slice().to_vec(),
    ))
}

/// Multi-start alternating maximization of `I(T_a,T_b;Y|S)`.
pub fn maximize_sum_rate(spec: &FsMacSpec, q: &StrategyChannel, cfg: &OptimizerConfig) -> Result<SumRateResult> {
    let engine = Engine::new(spec, q, cfg)?;
    let runs = par::map_indexed(cfg.restarts, |r| {
        let (pa, pb) = engine.initial(item_id(None, r));
        engine.run(PentagonWeights::SUM_RATE, pa, pb)
    });
    let winner = argmax(runs.iter().map(|t| *t.values.last().unwrap()));
    let best = &runs[winner];
    Ok(SumRateResult {
        value: pentagon(spec, q, &best.policy)?.bound_sum,
        policy: best.policy.clone(),
        iterations: best.iterations,
        converged: best.converged,
        restart: winner,
        restarts_used: cfg.restarts,
    })
}

/// Best policy found for one direction of the region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionSupport {
    pub theta: f64,
    pub point: (f64, f64),
    pub value: f64,
    pub pentagon: RatePentagon,
    pub policy: TeamPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionResult {
    /// Convex hull of every pentagon found.
    pub inner: RateRegion,
    /// Largest sum-rate bound found by any run; the outer bound is the
    /// half-plane `R_a + R_b <= outer_sum` within the quadrant.
    pub outer_sum: f64,
    pub sum_rate: SumRateResult,
    pub directions: Vec<DirectionSupport>,
}

/// Traces the inner bound region: the convex hull of pentagons of policies
/// that maximize the support function in `directions` evenly spaced angles
/// on `[0, pi/2]`, both axes included.
pub fn inner_bound_region(
    spec: &FsMacSpec,
    q: &StrategyChannel,
    cfg: &OptimizerConfig,
    directions: usize,
) -> Result<RegionResult> {
    if directions < 3 {
        return Err(Error::InvalidArgument(format!("directions must be at least 3, got {directions}")));
    }
    let engine = Engine::new(spec, q, cfg)?;
    let sum_rate = maximize_sum_rate(spec, q, cfg)?;
    let thetas: Vec<f64> = (0..directions)
        .map(|k| std::f64::consts::FRAC_PI_2 * k as f64 / (directions - 1) as f64)
        .collect();
    let dirs: Vec<(f64, f64)> = thetas
        .iter()
        .map(|t| {
            // exact axes, so the intercepts are the single-user maxima
            let (s, c) = t.sin_cos();
            (if c.abs() < 1e-15 { 0.0 } else { c }, if s.abs() < 1e-15 { 0.0 } else { s })
        })
        .collect();
    let restarts = cfg.restarts;
    let runs = par::map_indexed(directions * restarts, |i| {
        let (k, r) = (i / restarts, i % restarts);
        let weights = PentagonWeights::direction(dirs[k].0, dirs[k].1).expect("valid direction");
        let (pa, pb) = engine.initial(item_id(Some(k), r));
        engine.run(weights, pa, pb).policy
    });
    let mut supports = Vec::with_capacity(directions);
    let mut points: Vec<(f64, f64)> = pentagon(spec, q, &sum_rate.policy)?.vertices().to_vec();
    let mut outer_sum = sum_rate.value;
    for (k, chunk) in runs.chunks(restarts).enumerate() {
        let pents = chunk
            .iter()
            .map(|pol| pentagon(spec, q, pol))
            .collect::<Result<Vec<_>>>()?;
        let weights = PentagonWeights::direction(dirs[k].0, dirs[k].1)?;
        let winner = argmax(pents.iter().map(|p| weights.apply(p)));
        let pent = pents[winner];
        let (point, value) = pentagon_support(&pent, dirs[k])?;
        points.extend(pent.vertices());
        outer_sum = outer_sum.max(pents.iter().map(|p| p.bound_sum).fold(0.0, f64::max));
        supports.push(DirectionSupport {
            theta: thetas[k],
            point,
            value,
            pentagon: pent,
            policy: chunk[winner].clone(),
        });
    }
    Ok(RegionResult {
        inner: convex_hull_2d(&points)?,
        outer_sum,
        sum_rate,
        directions: supports,
    })
}
