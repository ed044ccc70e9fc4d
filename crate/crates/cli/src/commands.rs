//! One function per subcommand.

use crate::report::{CmdResult, Failure, Reporter};
use crate::{ConverseArgs, DecoderArg, GlobalOpts, OptimizerOpts, RegionArgs, SimulateArgs, SolverArg, SumrateArgs};
use fsmac::converse::verify_random_encoders;
use fsmac::mcsim::{estimate_error, Decoder, SimConfig};
use fsmac::model::{induced_strategy_channel, instances, load_spec, StrategyCaps};
use fsmac::optimize::{grid_oracle_sum_rate, inner_bound_region, maximize_sum_rate, InnerSolver, OptimizerConfig};
use fsmac::rates::{pentagon as pentagon_of, RatePentagon, TeamPolicy};
use fsmac::FsMacSpec;
use serde_json::json;
use std::fmt::Write as _;
use std::path::Path;

/// Slack for checking pentagon orderings on computed results.
const PENTAGON_TOL: f64 = 1e-9;
/// Largest factorization deviation accepted from the converse check.
const FACTORIZATION_TOL: f64 = 1e-12;
/// Largest gap accepted between the two sides of the decomposition identity.
const DECOMPOSITION_TOL: f64 = 1e-9;

fn caps(g: &GlobalOpts) -> StrategyCaps {
    StrategyCaps { per_user: g.strategy_cap, ..StrategyCaps::default() }
}

fn load(g: &GlobalOpts, spec: &Path) -> CmdResult<FsMacSpec> {
    Ok(load_spec(spec, caps(g))?)
}

fn load_policy(spec: &FsMacSpec, path: Option<&Path>) -> CmdResult<TeamPolicy> {
    let pol = match path {
        Some(p) => TeamPolicy::load(p)?,
        None => TeamPolicy::uniform(spec),
    };
    pol.check_against(spec)?;
    Ok(pol)
}

fn check_pentagon(p: &RatePentagon, what: &str) -> CmdResult {
    p.check(PENTAGON_TOL).map_err(|e| Failure::Invariant(format!("{what}: {e}")))
}

fn optimizer_config(o: &OptimizerOpts) -> CmdResult<OptimizerConfig> {
    let cfg = OptimizerConfig {
        restarts: o.restarts,
        max_iters: o.max_iters,
        rel_tol: o.rel_tol,
        seed: o.seed,
        inner_solver: match o.solver {
            SolverArg::ExponentiatedGradient => InnerSolver::ExponentiatedGradient,
            SolverArg::ConditionalGradient => InnerSolver::ConditionalGradient,
        },
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn validate(g: &GlobalOpts, spec_path: &Path) -> CmdResult {
    let rep = Reporter::new("validate", g.out.clone(), g.threads);
    let spec = load(g, spec_path)?;
    let al = spec.alphabets();
    let (ta, tb) = (spec.space_a().count(), spec.space_b().count());
    let payload = json!({
        "valid": true,
        "alphabets": al,
        "strategies": { "a": ta, "b": tb },
        "strategy_channel_entries": al.s * ta * tb * al.y,
    });
    let manifest = rep.manifest(Some(spec_path), json!({ "strategy_cap": g.strategy_cap }), None);
    rep.finish(&manifest, &payload, &format!("valid: {ta} x {tb} strategy pairs"))
}

pub fn pentagon(g: &GlobalOpts, spec_path: &Path, policy: Option<&Path>) -> CmdResult {
    let rep = Reporter::new("pentagon", g.out.clone(), g.threads);
    let spec = load(g, spec_path)?;
    let pol = load_policy(&spec, policy)?;
    let q = induced_strategy_channel(&spec);
    let pent = pentagon_of(&spec, &q, &pol)?;
    check_pentagon(&pent, "policy pentagon")?;
    let payload = json!({ "policy": pol, "pentagon": pent, "vertices": pent.vertices() });
    let manifest = rep.manifest(
        Some(spec_path),
        json!({ "policy": policy, "strategy_cap": g.strategy_cap }),
        None,
    );
    let summary = format!(
        "R_a <= {:.6}, R_b <= {:.6}, R_a + R_b <= {:.6} bits",
        pent.bound_a, pent.bound_b, pent.bound_sum
    );
    rep.finish(&manifest, &payload, &summary)
}

pub fn sumrate(g: &GlobalOpts, a: &SumrateArgs) -> CmdResult {
    let rep = Reporter::new("sumrate", g.out.clone(), g.threads);
    let cfg = optimizer_config(&a.opt)?;
    let spec = load(g, &a.opt.spec)?;
    let q = induced_strategy_channel(&spec);
    let res = maximize_sum_rate(&spec, &q, &cfg)?;
    let pent = pentagon_of(&spec, &q, &res.policy)?;
    check_pentagon(&pent, "optimal policy pentagon")?;
    let y_bits = (spec.alphabets().y as f64).log2();
    if !(res.value >= 0.0 && res.value <= y_bits + PENTAGON_TOL) {
        return Err(Failure::Invariant(format!("sum rate {} outside [0, log2|Y|]", res.value)));
    }
    let grid = match a.resolution {
        Some(r) => {
            let oracle = grid_oracle_sum_rate(&spec, &q, r)?;
            if oracle.value > res.value + 1e-6 {
                eprintln!(
                    "warning: grid oracle {} exceeds the optimizer value {}; try more restarts",
                    oracle.value, res.value
                );
            }
            Some(json!({ "resolution": r, "value": oracle.value, "policy": oracle.policy }))
        }
        None => None,
    };
    let payload = json!({
        "value": res.value,
        "policy": res.policy,
        "restarts_used": res.restarts_used,
        "winning_restart": res.restart,
        "iterations": res.iterations,
        "converged": res.converged,
        "pentagon": pent,
        "grid_oracle": grid,
    });
    let manifest = rep.manifest(
        Some(&a.opt.spec),
        json!({ "optimizer": cfg, "resolution": a.resolution, "strategy_cap": g.strategy_cap }),
        Some(cfg.seed),
    );
    rep.finish(&manifest, &payload, &format!("C_sum = {:.6} bits", res.value))
}

pub fn region(g: &GlobalOpts, a: &RegionArgs) -> CmdResult {
    let rep = Reporter::new("region", g.out.clone(), g.threads);
    let cfg = optimizer_config(&a.opt)?;
    let spec = load(g, &a.opt.spec)?;
    let q = induced_strategy_channel(&spec);
    let res = inner_bound_region(&spec, &q, &cfg, a.directions)?;
    for d in &res.directions {
        check_pentagon(&d.pentagon, "direction pentagon")?;
    }
    let hull = &res.inner;
    if !hull.is_convex(1e-12) || !hull.in_nonnegative_quadrant(1e-12) {
        return Err(Failure::Invariant("inner region hull is not a convex subset of the quadrant".into()));
    }
    let inner_max = hull.max_sum();
    if inner_max > res.outer_sum + PENTAGON_TOL {
        return Err(Failure::Invariant(format!(
            "inner region reaches R_a + R_b = {inner_max}, above the outer bound {}",
            res.outer_sum
        )));
    }
    let mut csv = String::from("ra,rb\n");
    for (x, y) in &hull.hull {
        let _ = writeln!(csv, "{x},{y}");
    }
    rep.side_file("region.csv", &csv)?;
    let payload = json!({
        "hull": hull.hull,
        "area": hull.area(),
        "inner_max_sum": inner_max,
        "outer_sum": res.outer_sum,
        "sum_gap": res.outer_sum - inner_max,
        "sum_rate": {
            "value": res.sum_rate.value,
            "policy": res.sum_rate.policy,
            "winning_restart": res.sum_rate.restart,
            "converged": res.sum_rate.converged,
        },
        "directions": res.directions,
    });
    let manifest = rep.manifest(
        Some(&a.opt.spec),
        json!({ "optimizer": cfg, "directions": a.directions, "strategy_cap": g.strategy_cap }),
        Some(cfg.seed),
    );
    let summary = format!(
        "inner region: {} vertices, max R_a + R_b = {:.6}; outer bound R_a + R_b <= {:.6} bits",
        hull.hull.len(),
        inner_max,
        res.outer_sum
    );
    rep.finish(&manifest, &payload, &summary)
}

pub fn simulate(g: &GlobalOpts, a: &SimulateArgs) -> CmdResult {
    let rep = Reporter::new("simulate", g.out.clone(), g.threads);
    if a.n.is_empty() {
        return Err(Failure::Domain("--n needs at least one block length".into()));
    }
    let spec = load(g, &a.spec)?;
    let pol = load_policy(&spec, a.policy.as_deref())?;
    let q = induced_strategy_channel(&spec);
    let decoder = match a.decoder {
        DecoderArg::Typicality => Decoder::Typicality,
        DecoderArg::MaxLikelihood => Decoder::MaxLikelihood,
    };
    let configs: Vec<SimConfig> = a
        .n
        .iter()
        .map(|&n| SimConfig { n, rate_a: a.ra, rate_b: a.rb, epsilon: a.eps, trials: a.trials, seed: a.seed, decoder })
        .collect();
    // check every guard before spending time on any run
    for c in &configs {
        c.validate()?;
    }
    let mut runs = Vec::with_capacity(configs.len());
    let mut summary = Vec::new();
    let mut csv = String::from("n,rate_a,rate_b,m_a,m_b,trials,errors,error_rate,wilson_lo,wilson_hi,no_candidate,ambiguous,wrong\n");
    for c in &configs {
        let r = estimate_error(&spec, &q, &pol, c)?;
        let (lo, hi) = r.wilson_interval;
        if !(0.0 <= lo && lo <= r.error_rate && r.error_rate <= hi && hi <= 1.0) {
            return Err(Failure::Invariant(format!("Wilson interval {:?} does not bracket {}", r.wilson_interval, r.error_rate)));
        }
        summary.push(format!("n = {}: error rate {:.4} (95% CI [{:.4}, {:.4}])", r.n, r.error_rate, lo, hi));
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.rate_a,
            r.rate_b,
            r.codebook_sizes.0,
            r.codebook_sizes.1,
            r.trials,
            r.errors,
            r.error_rate,
            lo,
            hi,
            r.decoder_no_candidate_count,
            r.decoder_ambiguous_count,
            r.decoder_wrong_count
        );
        runs.push(r);
    }
    if a.csv {
        rep.side_file("simulate.csv", &csv)?;
    }
    let payload = json!({ "policy": pol, "runs": runs });
    let manifest = rep.manifest(
        Some(&a.spec),
        json!({
            "policy": a.policy,
            "n": a.n,
            "rate_a": a.ra,
            "rate_b": a.rb,
            "epsilon": a.eps,
            "trials": a.trials,
            "decoder": decoder,
            "strategy_cap": g.strategy_cap,
        }),
        Some(a.seed),
    );
    rep.finish(&manifest, &payload, &summary.join("\n"))
}

pub fn verify_converse(g: &GlobalOpts, a: &ConverseArgs) -> CmdResult {
    let rep = Reporter::new("verify-converse", g.out.clone(), g.threads);
    let spec = match &a.spec {
        Some(p) => load(g, p)?,
        None => instances::mod2_adder(0.1, 0.1),
    };
    let report = verify_random_encoders(&spec, a.n, a.trials, a.max_messages, a.seed)?;
    let manifest = rep.manifest(
        a.spec.as_deref(),
        json!({ "n": a.n, "trials": a.trials, "max_messages": a.max_messages, "strategy_cap": g.strategy_cap }),
        Some(a.seed),
    );
    let summary = format!(
        "max_deviation = {:.3e} over {} cases; decomposition gap = {:.3e}",
        report.max_deviation, report.cases, report.max_decomposition_gap
    );
    rep.finish(&manifest, &report, &summary)?;
    if report.max_deviation >= FACTORIZATION_TOL {
        return Err(Failure::Invariant(format!(
            "factorization deviation {} at t = {}, sigma = '{}'",
            report.max_deviation, report.worst_case.t, report.worst_case.sigma
        )));
    }
    if report.max_decomposition_gap > DECOMPOSITION_TOL {
        return Err(Failure::Invariant(format!("decomposition gap {}", report.max_decomposition_gap)));
    }
    Ok(())
}
