//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use fsmac::converse::{
    alpha_weighted_sum_rate, direct_time_averaged_sum_rate, unpack_string, verify_factorization_with, EncoderMaps,
};
use fsmac::mcsim::{estimate_error, typicality_check, Decoder, JointPmf, SimConfig};
use fsmac::model::{induced_strategy_channel, instances, load_spec, CondPmf, StrategyCaps};
use fsmac::optimize::{grid_oracle_sum_rate, inner_bound_region, maximize_sum_rate, OptimizerConfig};
use fsmac::rates::{conditional_mutual_information, entropy, joint_law, pentagon_of_law, VarSet};
use fsmac::{FsMacSpec, Pmf, TeamPolicy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_row<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n)
        .map(|_| if rng.random_bool(0.15) { 0.0 } else { rng.random::<f64>() + 1e-3 })
        .collect();
    let v = if v.iter().all(|&x| x == 0.0) { vec![1.0; n] } else { v };
    let z: f64 = v.iter().sum();
    v.into_iter().map(|x| x / z).collect()
}

fn random_spec<R: Rng>(rng: &mut R, dims: [usize; 6]) -> FsMacSpec {
    let [xa, xb, s, sa, sb, y] = dims;
    let state = random_row(rng, s);
    let obs_a = (0..s).map(|_| random_row(rng, sa)).collect();
    let obs_b = (0..s).map(|_| random_row(rng, sb)).collect();
    let chan: Vec<Vec<f64>> = (0..s * xa * xb).map(|_| random_row(rng, y)).collect();
    FsMacSpec::from_fn(xa, xb, y, state, obs_a, obs_b, StrategyCaps::default(), |s, a, b| {
        chan[(s * xa + a) * xb + b].clone()
    })
    .expect("random spec is valid")
}

fn two_strategy_policy() -> TeamPolicy {
    let half = Pmf::new(vec![0.0, 0.5, 0.5, 0.0]).unwrap();
    TeamPolicy::new(half.clone(), half)
}

fn examples_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples")
}

fn bundled_specs() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = ["mod2-adder-noiseless", "mod2-adder-bsc01", "stateless-mac", "null-channel"]
        .iter()
        .map(|n| examples_dir().join(format!("{n}.json")))
        .collect();
    v.sort();
    v
}

fn sum_rate_capacity() -> Outcome {
    let start = Instant::now();
    let spec = instances::mod2_adder(0.0, 0.0);
    let q = induced_strategy_channel(&spec);
    let opt = maximize_sum_rate(&spec, &q, &OptimizerConfig { seed: 1, ..Default::default() }).unwrap();
    let grid = grid_oracle_sum_rate(&spec, &q, 100).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let (e_opt, e_grid) = ((opt.value - 1.0).abs(), (grid.value - opt.value).abs());
    outcome(
        e_opt <= 1e-6 && e_grid <= 1e-3 && secs < 30.0,
        format!(
            "optimizer {:.9} bits (|err| {e_opt:.1e} <= 1e-6), grid@100 {:.9} (|diff| {e_grid:.1e} <= 1e-3, \
             {} pi_b slices pruned), {secs:.1} s < 30 s",
            opt.value, grid.value, grid.pruned_slices
        ),
    )
}

fn factorization() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for trial in 0..50 {
        let spec = random_spec(&mut rng, [2; 6]);
        let q = induced_strategy_channel(&spec);
        let n = 1 + trial % 3;
        let messages = (rng.random_range(1..=4), rng.random_range(1..=4));
        let enc = EncoderMaps::random(&spec, n, messages, &mut rng).unwrap();
        for t in 1..=n {
            for idx in 0..1usize << (t - 1) {
                let sigma = unpack_string(idx, 2, t - 1);
                worst = worst.max(verify_factorization_with(&enc, &spec, &q, t, &sigma).unwrap());
                cases += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst < 1e-12 && secs < 120.0,
        format!("50 encoder pairs, {cases} (t, sigma) cases, max deviation {worst:.2e} < 1e-12, {secs:.2} s < 120 s"),
    )
}

fn decomposition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst: f64 = 0.0;
    for k in 0..10 {
        let spec = random_spec(&mut rng, [2; 6]);
        let q = induced_strategy_channel(&spec);
        let n = 2 + k % 2;
        let enc = EncoderMaps::random(&spec, n, (rng.random_range(1..=4), rng.random_range(1..=4)), &mut rng).unwrap();
        let lhs = alpha_weighted_sum_rate(&enc, &spec, &q).unwrap();
        let rhs = direct_time_averaged_sum_rate(&enc, &spec).unwrap();
        worst = worst.max((lhs - rhs).abs());
    }
    outcome(worst < 1e-9, format!("10 encoder instances (n = 2, 3), max |alpha-average - direct| = {worst:.2e} < 1e-9"))
}

fn pentagon_fuzz() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut violations = 0;
    let mut worst_chain: f64 = 0.0;
    for _ in 0..10_000 {
        let dims: [usize; 6] = std::array::from_fn(|_| rng.random_range(2..=3));
        let spec = random_spec(&mut rng, dims);
        let q = induced_strategy_channel(&spec);
        let pol = TeamPolicy::new(
            Pmf::new(random_row(&mut rng, spec.space_a().count())).unwrap(),
            Pmf::new(random_row(&mut rng, spec.space_b().count())).unwrap(),
        );
        let law = joint_law(&spec, &q, &pol).unwrap();
        let p = pentagon_of_law(&law);
        if p.check(1e-9).is_err() {
            violations += 1;
        }
        // I(Ta,Tb;Y|S) = I(Tb;Y|S) + I(Ta;Y|Tb,S) = I(Ta;Y|S) + I(Tb;Y|Ta,S)
        let via_b = conditional_mutual_information(&law, VarSet::TB, VarSet::Y, VarSet::S) + p.bound_a;
        let via_a = conditional_mutual_information(&law, VarSet::TA, VarSet::Y, VarSet::S) + p.bound_b;
        let gap = (p.bound_sum - via_b).abs().max((p.bound_sum - via_a).abs());
        worst_chain = worst_chain.max(gap);
        if gap > 1e-9 {
            violations += 1;
        }
    }
    outcome(
        violations == 0,
        format!("10^4 fuzzed (spec, policy) pairs, {violations} violations, max chain-rule gap {worst_chain:.2e} <= 1e-9"),
    )
}

fn degradation_monotonicity() -> Outcome {
    let base = instances::mod2_adder(0.0, 0.0);
    let q = induced_strategy_channel(&base);
    let cfg = OptimizerConfig { seed: 5, ..Default::default() };
    let reference = maximize_sum_rate(&base, &q, &cfg).unwrap().value;
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut worst = f64::NEG_INFINITY;
    let mut worst_grid_gap: f64 = 0.0;
    for k in 0..20 {
        let extra = if k == 0 {
            CondPmf::identity(2)
        } else {
            CondPmf::new(vec![random_row(&mut rng, 2), random_row(&mut rng, 2)]).unwrap()
        };
        let obs = base.obs_a().compose(&CondPmf::bsc(0.2)).unwrap().compose(&extra).unwrap();
        let degraded = base.with_obs_a(obs).unwrap();
        let qd = induced_strategy_channel(&degraded);
        let opt = maximize_sum_rate(&degraded, &qd, &OptimizerConfig { seed: k, ..cfg.clone() }).unwrap().value;
        let grid = grid_oracle_sum_rate(&degraded, &qd, 20).unwrap().value;
        worst = worst.max(opt.max(grid) - reference);
        worst_grid_gap = worst_grid_gap.max(grid - opt);
    }
    outcome(
        worst <= 1e-3 && worst_grid_gap <= 1e-6,
        format!(
            "20 degradations of obs_a through BSC(0.2): max increase over {reference:.6} is {worst:.2e} <= 1e-3 \
             (grid@20 never beats optimizer by more than {worst_grid_gap:.1e})"
        ),
    )
}

fn inner_outer_consistency() -> Outcome {
    let cfg = OptimizerConfig { seed: 6, ..Default::default() };
    let mut worst = f64::NEG_INFINITY;
    let mut lines = Vec::new();
    for path in bundled_specs() {
        let spec = load_spec(&path, StrategyCaps::default()).unwrap();
        let q = induced_strategy_channel(&spec);
        let c_sum = maximize_sum_rate(&spec, &q, &cfg).unwrap().value;
        let region = inner_bound_region(&spec, &q, &cfg, 33).unwrap();
        let excess = region.inner.hull.iter().map(|(a, b)| a + b - c_sum).fold(f64::NEG_INFINITY, f64::max);
        worst = worst.max(excess);
        lines.push(format!("{} C_sum {:.6}", path.file_stem().unwrap().to_string_lossy(), c_sum));
    }
    outcome(
        worst <= 1e-6,
        format!("max over hull vertices of R_a + R_b - C_sum = {worst:.2e} <= 1e-6 [{}]", lines.join(", ")),
    )
}

fn achievability_trend() -> Outcome {
    let start = Instant::now();
    let spec = instances::mod2_adder(0.0, 0.0);
    let q = induced_strategy_channel(&spec);
    let pol = two_strategy_policy();
    let run = |n, rate| {
        let cfg = SimConfig {
            n,
            rate_a: rate,
            rate_b: rate,
            epsilon: 0.05,
            trials: 2000,
            seed: 7,
            decoder: Decoder::Typicality,
        };
        estimate_error(&spec, &q, &pol, &cfg).unwrap().error_rate
    };
    let (e4, e12, e_over) = (run(4, 0.2), run(12, 0.2), run(12, 0.7));
    let secs = start.elapsed().as_secs_f64();
    outcome(
        e12 < e4 && e_over > 0.5 && secs < 300.0,
        format!(
            "(0.2, 0.2): n=4 {e4:.4} > n=12 {e12:.4}; (0.7, 0.7) n=12 {e_over:.4} > 0.5; 2000 trials each, {secs:.1} s < 300 s"
        ),
    )
}

fn typicality_exhaustive() -> Outcome {
    let mut mismatches = 0;
    let mut counts = Vec::new();
    for p1 in [0.5, 0.3] {
        let law = JointPmf::new(vec![2], vec![1.0 - p1, p1]).unwrap();
        let h = entropy(&[1.0 - p1, p1]);
        let mut count = 0;
        for bits in 0..1usize << 10 {
            let seq: Vec<usize> = (0..10).map(|t| bits >> t & 1).collect();
            let got = typicality_check(&[&seq], &law, 0.1).unwrap();
            let prob: f64 = seq.iter().map(|&x| if x == 1 { p1 } else { 1.0 - p1 }).product();
            let want = (-prob.log2() / 10.0 - h).abs() < 0.1;
            mismatches += usize::from(got != want);
            count += usize::from(got);
        }
        counts.push(format!("p1 = {p1}: {count} typical"));
    }
    outcome(
        mismatches == 0,
        format!("all 2^10 binary sequences, n = 10, eps = 0.1: {mismatches} mismatches ({})", counts.join(", ")),
    )
}

/// Bytes of a report after its manifest.
fn payload_bytes(path: &Path) -> Result<String, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    text.find("\"payload\":")
        .map(|i| text[i..].to_string())
        .ok_or_else(|| format!("{} has no payload", path.display()))
}

fn run_cli(args: &[&str], threads: &str, via_env: bool, out: &Path) -> Result<(), String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fsmac"));
    cmd.args(args).arg("--out").arg(out);
    if via_env {
        cmd.env("FSMAC_THREADS", threads);
    } else {
        cmd.env_remove("FSMAC_THREADS").args(["--threads", threads]);
    }
    let output = cmd.output().map_err(|e| e.to_string())?;
    if !output.status.success() {
        return Err(format!("{args:?} exited with {}: {}", output.status, String::from_utf8_lossy(&output.stderr)));
    }
    Ok(())
}

fn determinism() -> Outcome {
    let ex = examples_dir();
    let spec = |n: &str| ex.join(format!("{n}.json")).to_string_lossy().into_owned();
    let (noiseless, bsc, policy) = (spec("mod2-adder-noiseless"), spec("mod2-adder-bsc01"), spec("mod2-two-strategy-policy"));
    let commands: Vec<(&str, Vec<&str>, Vec<&str>)> = vec![
        ("validate", vec!["validate", "--spec", &bsc], vec!["validate.json"]),
        ("pentagon", vec!["pentagon", "--spec", &bsc, "--policy", &policy], vec!["pentagon.json"]),
        ("sumrate", vec!["sumrate", "--spec", &bsc, "--seed", "3", "--resolution", "10"], vec!["sumrate.json"]),
        (
            "region",
            vec!["region", "--spec", &bsc, "--seed", "3", "--restarts", "6", "--directions", "9"],
            vec!["region.json", "region.csv"],
        ),
        (
            "simulate",
            vec![
                "simulate", "--spec", &noiseless, "--policy", &policy, "--n", "4,8", "--ra", "0.3", "--rb", "0.3",
                "--trials", "300", "--seed", "9", "--csv",
            ],
            vec!["simulate.json", "simulate.csv"],
        ),
        (
            "verify-converse",
            vec!["verify-converse", "--spec", &bsc, "--n", "3", "--trials", "8", "--seed", "4"],
            vec!["verify-converse.json"],
        ),
    ];
    // (threads, via FSMAC_THREADS) for each rerun
    let runs = [("1", false), ("1", false), ("3", false), ("2", true)];
    let root = tempfile::tempdir().unwrap();
    let mut mismatched = Vec::new();
    let mut compared = 0;
    for (name, args, files) in &commands {
        let mut first: Option<Vec<String>> = None;
        for (i, (threads, via_env)) in runs.iter().enumerate() {
            let dir = root.path().join(format!("{name}-{i}"));
            if let Err(e) = run_cli(args, threads, *via_env, &dir) {
                return outcome(false, e);
            }
            let contents: Result<Vec<String>, String> = files
                .iter()
                .map(|f| {
                    let p = dir.join(f);
                    if f.ends_with(".json") {
                        payload_bytes(&p)
                    } else {
                        std::fs::read_to_string(&p).map_err(|e| format!("{}: {e}", p.display()))
                    }
                })
                .collect();
            let contents = match contents {
                Ok(c) => c,
                Err(e) => return outcome(false, e),
            };
            match &first {
                None => first = Some(contents),
                Some(f) => {
                    compared += 1;
                    if *f != contents {
                        mismatched.push(format!("{name} (threads {threads})"));
                    }
                }
            }
        }
    }
    outcome(
        mismatched.is_empty(),
        format!(
            "{} commands x {} runs (threads 1, 1, 3, FSMAC_THREADS=2): {compared} payload comparisons, mismatches: {:?}",
            commands.len(),
            runs.len(),
            mismatched
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("sum-rate capacity of the mod-2 adder", sum_rate_capacity),
        ("factorization on random encoders", factorization),
        ("time-average decomposition identity", decomposition),
        ("pentagon invariants under fuzzing", pentagon_fuzz),
        ("monotonicity under observation degradation", degradation_monotonicity),
        ("inner/outer consistency on bundled specs", inner_outer_consistency),
        ("achievability trend of the simulator", achievability_trend),
        ("typicality predicate, exhaustive", typicality_exhaustive),
        ("CLI determinism across reruns and threads", determinism),
    ];
    let mut failed = 0;
    let total = Instant::now();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        failed += usize::from(!result.pass);
        println!(
            "{} [{}] {name}: {} ({:.1} s)",
            if result.pass { "PASS" } else { "FAIL" },
            i + 1,
            result.detail,
            Duration::as_secs_f64(&start.elapsed())
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1} s",
        criteria.len() - failed,
        total.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
