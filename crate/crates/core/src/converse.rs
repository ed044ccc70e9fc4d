//! Brute-force checks of the sum-rate converse on explicit encoders.
//!
//! An encoder for block length `n` picks, at time `t`, a Shannon strategy from
//! its message and the string of its own past observations. Conditioned on a
//! past state string `sigma`, the strategies in force at time `t` are
//! independent of each other and of the current state, and their laws are the
//! sigma-policies built by counting messages. This module computes those
//! policies, the exact conditional law by enumeration, and the deviation
//! between the two. It also checks that averaging the per-sigma sum-rate
//! bounds with weights `(1/n) P(sigma)` reproduces the time-averaged mutual
//! information computed directly.
//!
//! State strings are little-endian when packed into an index (the first
//! letter is least significant) and are written in time order when printed.

use crate::error::{Error, Result};
use crate::model::{induced_strategy_channel, FsMacSpec, Pmf, StrategyChannel};
use crate::par;
use crate::rates::{entropy, pentagon, TeamPolicy};
use crate::rng::{item_rng, Role};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Cap on the number of terms summed by [`brute_force_conditional`].
pub const ENUMERATION_CAP: u128 = 100_000_000;
/// Cap on `|S|^(n-1)` for [`alpha_sigma_weights`].
pub const SIGMA_CAP: u128 = 1_000_000;

fn checked_pow(base: usize, exp: usize, what: &'static str, cap: u128) -> Result<usize> {
    let v = (base as u128).checked_pow(exp as u32).unwrap_or(u128::MAX);
    if v > cap {
        return Err(Error::CapExceeded { what, value: v, cap });
    }
    Ok(v as usize)
}

/// Letters of the little-endian index `idx` as a string of length `len`.
pub fn unpack_string(mut idx: usize, radix: usize, len: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push(idx % radix);
        idx /= radix;
    }
    out
}

/// Little-endian index of a string over `0..radix`.
pub fn pack_string(letters: &[usize], radix: usize) -> usize {
    letters.iter().rev().fold(0, |acc, &l| acc * radix + l)
}

/// Time-ordered rendering of a state string; letters are separated by dots
/// when the alphabet has more than ten symbols.
pub fn format_string(letters: &[usize], radix: usize) -> String {
    let sep = if radix > 10 { "." } else { "" };
    letters.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(sep)
}

/// Deterministic encoders given as lookup tables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderMaps {
    n: usize,
    messages_a: usize,
    messages_b: usize,
    obs_a: usize,
    obs_b: usize,
    /// `phi_a[t-1][w * |S_a|^(t-1) + past]`: strategy id used at time `t`.
    phi_a: Vec<Vec<usize>>,
    phi_b: Vec<Vec<usize>>,
}

impl EncoderMaps {
    /// Checks table shapes and strategy ids against `spec`.
    pub fn new(
        spec: &FsMacSpec,
        messages: (usize, usize),
        phi_a: Vec<Vec<usize>>,
        phi_b: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let al = spec.alphabets();
        let n = phi_a.len();
        if n == 0 || phi_b.len() != n {
            return Err(Error::invalid(
                "encoder",
                format!("need one table per time for both users, got {} and {}", phi_a.len(), phi_b.len()),
            ));
        }
        if messages.0 == 0 || messages.1 == 0 {
            return Err(Error::invalid("encoder", "message sets must be nonempty"));
        }
        for (tables, m, obs, count, what) in [
            (&phi_a, messages.0, al.sa, spec.space_a().count(), "phi_a"),
            (&phi_b, messages.1, al.sb, spec.space_b().count(), "phi_b"),
        ] {
            for (t0, table) in tables.iter().enumerate() {
                let expected = m * checked_pow(obs, t0, "encoder table size", ENUMERATION_CAP)?;
                if table.len() != expected {
                    return Err(Error::DimensionMismatch { what, expected, found: table.len() });
                }
                if let Some(&id) = table.iter().find(|&&id| id >= count) {
                    return Err(Error::OutOfRange { what, index: id, bound: count });
                }
            }
        }
        Ok(Self {
            n,
            messages_a: messages.0,
            messages_b: messages.1,
            obs_a: al.sa,
            obs_b: al.sb,
            phi_a,
            phi_b,
        })
    }

    /// Tables with every entry drawn uniformly from the strategy space.
    pub fn random<R: Rng + ?Sized>(spec: &FsMacSpec, n: usize, messages: (usize, usize), rng: &mut R) -> Result<Self> {
        let al = spec.alphabets();
        let (ca, cb) = (spec.space_a().count(), spec.space_b().count());
        let mut draw = |m: usize, obs: usize, count: usize| -> Result<Vec<Vec<usize>>> {
            (0..n)
                .map(|t0| {
                    let len = m * checked_pow(obs, t0, "encoder table size", ENUMERATION_CAP)?;
                    Ok((0..len).map(|_| rng.random_range(0..count)).collect())
                })
                .collect()
        };
        let phi_a = draw(messages.0, al.sa, ca)?;
        let phi_b = draw(messages.1, al.sb, cb)?;
        Self::new(spec, messages, phi_a, phi_b)
    }

    pub fn horizon(&self) -> usize {
        self.n
    }

    pub fn messages(&self) -> (usize, usize) {
        (self.messages_a, self.messages_b)
    }

    /// Strategy of user a at time `t` (1-based) for message `w` and past
    /// observation index `past`.
    pub fn strategy_a(&self, t: usize, w: usize, past: usize) -> usize {
        let stride = self.phi_a[t - 1].len() / self.messages_a;
        self.phi_a[t - 1][w * stride + past]
    }

    pub fn strategy_b(&self, t: usize, w: usize, past: usize) -> usize {
        let stride = self.phi_b[t - 1].len() / self.messages_b;
        self.phi_b[t - 1][w * stride + past]
    }

    fn check_time(&self, spec: &FsMacSpec, t: usize, sigma: &[usize]) -> Result<()> {
        if t == 0 || t > self.n {
            return Err(Error::OutOfRange { what: "time index", index: t, bound: self.n + 1 });
        }
        if sigma.len() != t - 1 {
            return Err(Error::DimensionMismatch { what: "state string length", expected: t - 1, found: sigma.len() });
        }
        let al = spec.alphabets();
        if self.obs_a != al.sa || self.obs_b != al.sb {
            return Err(Error::DimensionMismatch { what: "encoder observation alphabet", expected: al.sa, found: self.obs_a });
        }
        if let Some(&s) = sigma.iter().find(|&&s| s >= al.s) {
            return Err(Error::OutOfRange { what: "state letter", index: s, bound: al.s });
        }
        Ok(())
    }
}

/// Strategy laws at one time step given a past state string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaPolicy {
    pub pi_a_sigma: Pmf,
    pub pi_b_sigma: Pmf,
    pub sigma: Vec<usize>,
}

impl SigmaPolicy {
    pub fn team(&self) -> TeamPolicy {
        TeamPolicy::new(self.pi_a_sigma.clone(), self.pi_b_sigma.clone())
    }
}

/// Message-counting strategy law of one user mixed over its past observations.
fn sigma_law(
    sigma: &[usize],
    obs: &crate::model::CondPmf,
    messages: usize,
    count: usize,
    pick: impl Fn(usize, usize) -> usize,
) -> Vec<f64> {
    let radix = obs.cols();
    let strings = radix.pow(sigma.len() as u32);
    let mut out = vec![0.0; count];
    for past in 0..strings {
        let letters = unpack_string(past, radix, sigma.len());
        let weight: f64 = sigma.iter().zip(&letters).map(|(&s, &o)| obs.get(s, o)).product();
        if weight == 0.0 {
            continue;
        }
        let share = weight / messages as f64;
        for w in 0..messages {
            out[pick(w, past)] += share;
        }
    }
    out
}

/// The sigma-policies in force at time `t` (1-based) after state string `sigma`.
pub fn induced_sigma_policy(enc: &EncoderMaps, spec: &FsMacSpec, t: usize, sigma: &[usize]) -> Result<SigmaPolicy> {
    enc.check_time(spec, t, sigma)?;
    let pa = sigma_law(sigma, spec.obs_a(), enc.messages_a, spec.space_a().count(), |w, p| enc.strategy_a(t, w, p));
    let pb = sigma_law(sigma, spec.obs_b(), enc.messages_b, spec.space_b().count(), |w, p| enc.strategy_b(t, w, p));
    Ok(SigmaPolicy {
        pi_a_sigma: Pmf::from_vec_unchecked(pa),
        pi_b_sigma: Pmf::from_vec_unchecked(pb),
        sigma: sigma.to_vec(),
    })
}

/// Exact law of `(T_a, T_b, Y, S)` at time `t` given the past state string,
/// flat `[ta][tb][y][s]`, by summing over messages, past and current
/// observations, and the channel transition.
pub fn brute_force_conditional(enc: &EncoderMaps, spec: &FsMacSpec, t: usize, sigma: &[usize]) -> Result<Vec<f64>> {
    enc.check_time(spec, t, sigma)?;
    let al = spec.alphabets();
    let (sa_n, sb_n) = (al.sa, al.sb);
    let past_a = checked_pow(sa_n, t - 1, "past observation strings", ENUMERATION_CAP)?;
    let past_b = checked_pow(sb_n, t - 1, "past observation strings", ENUMERATION_CAP)?;
    let terms = (enc.messages_a as u128) * (enc.messages_b as u128) * (past_a as u128) * (past_b as u128)
        * (sa_n as u128)
        * (sb_n as u128);
    if terms > ENUMERATION_CAP {
        return Err(Error::CapExceeded { what: "converse enumeration", value: terms, cap: ENUMERATION_CAP });
    }
    let (space_a, space_b) = (spec.space_a(), spec.space_b());
    let (ta_n, tb_n) = (space_a.count(), space_b.count());
    let idx = |ta: usize, tb: usize, y: usize, s: usize| ((ta * tb_n + tb) * al.y + y) * al.s + s;
    let mut p = vec![0.0; ta_n * tb_n * al.y * al.s];
    let past_weight = |obs: &crate::model::CondPmf, radix: usize, past: usize| -> f64 {
        let letters = unpack_string(past, radix, sigma.len());
        sigma.iter().zip(&letters).map(|(&s, &o)| obs.get(s, o)).product()
    };
    let msg_weight = 1.0 / (enc.messages_a * enc.messages_b) as f64;
    for wa in 0..enc.messages_a {
        for pa in 0..past_a {
            let wpa = past_weight(spec.obs_a(), sa_n, pa);
            if wpa == 0.0 {
                continue;
            }
            let ta = enc.strategy_a(t, wa, pa);
            for wb in 0..enc.messages_b {
                for pb in 0..past_b {
                    let wpb = past_weight(spec.obs_b(), sb_n, pb);
                    if wpb == 0.0 {
                        continue;
                    }
                    let tb = enc.strategy_b(t, wb, pb);
                    for s in 0..al.s {
                        let ws = msg_weight * wpa * wpb * spec.state_pmf()[s];
                        for sa in 0..sa_n {
                            let xa = space_a.input_of(ta, sa);
                            for sb in 0..sb_n {
                                let w = ws * spec.obs_a().get(s, sa) * spec.obs_b().get(s, sb);
                                if w == 0.0 {
                                    continue;
                                }
                                let xb = space_b.input_of(tb, sb);
                                for (y, &py) in spec.transition(s, xa, xb).iter().enumerate() {
                                    p[idx(ta, tb, y, s)] += w * py;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(p)
}

/// Largest entry of `|brute force - P_S(s) Q(y|s,ta,tb) pi_a(ta) pi_b(tb)|`.
pub fn verify_factorization(enc: &EncoderMaps, spec: &FsMacSpec, t: usize, sigma: &[usize]) -> Result<f64> {
    let q = induced_strategy_channel(spec);
    verify_factorization_with(enc, spec, &q, t, sigma)
}

/// [`verify_factorization`] with a precomputed strategy channel.
pub fn verify_factorization_with(
    enc: &EncoderMaps,
    spec: &FsMacSpec,
    q: &StrategyChannel,
    t: usize,
    sigma: &[usize],
) -> Result<f64> {
    let lhs = brute_force_conditional(enc, spec, t, sigma)?;
    let pol = induced_sigma_policy(enc, spec, t, sigma)?;
    let (ns, na, nb, ny) = q.dims();
    let mut worst: f64 = 0.0;
    for ta in 0..na {
        for tb in 0..nb {
            let w = pol.pi_a_sigma[ta] * pol.pi_b_sigma[tb];
            for s in 0..ns {
                let row = q.row(s, ta, tb);
                for y in 0..ny {
                    let rhs = spec.state_pmf()[s] * row[y] * w;
                    worst = worst.max((lhs[((ta * nb + tb) * ny + y) * ns + s] - rhs).abs());
                }
            }
        }
    }
    Ok(worst)
}

/// Weight `(1/n) P(sigma)` of a past state string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaWeight {
    pub sigma: Vec<usize>,
    pub weight: f64,
}

/// Weights of all state strings of lengths `0..n`, shortest first and
/// little-endian within a length. They sum to 1.
pub fn alpha_sigma_weights(spec: &FsMacSpec, n: usize) -> Result<Vec<AlphaWeight>> {
    if n == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let ns = spec.alphabets().s;
    checked_pow(ns, n - 1, "state strings", SIGMA_CAP)?;
    let mut out = Vec::new();
    for len in 0..n {
        for idx in 0..ns.pow(len as u32) {
            let sigma = unpack_string(idx, ns, len);
            let p: f64 = sigma.iter().map(|&s| spec.state_pmf()[s]).product();
            out.push(AlphaWeight { sigma, weight: p / n as f64 });
        }
    }
    Ok(out)
}

/// Sum over `t` and `sigma` of `alpha_sigma * I(T_a,T_b;Y|S)` under the
/// sigma-policies.
pub fn alpha_weighted_sum_rate(enc: &EncoderMaps, spec: &FsMacSpec, q: &StrategyChannel) -> Result<f64> {
    let mut total = 0.0;
    for aw in alpha_sigma_weights(spec, enc.n)? {
        if aw.weight == 0.0 {
            continue;
        }
        let pol = induced_sigma_policy(enc, spec, aw.sigma.len() + 1, &aw.sigma)?;
        total += aw.weight * pentagon(spec, q, &pol.team())?.bound_sum;
    }
    Ok(total)
}

/// `(1/n) sum_t I(T_t^a, T_t^b; Y_t | S_1..S_t)` from the enumerated joint
/// laws, using `I(T;Y|Z) = H(Y,Z) - H(Z) - H(T,Y,Z) + H(T,Z)` with `Z` the
/// state string up to and including time `t`.
pub fn direct_time_averaged_sum_rate(enc: &EncoderMaps, spec: &FsMacSpec) -> Result<f64> {
    let al = spec.alphabets();
    let (na, nb) = (spec.space_a().count(), spec.space_b().count());
    let mut total = 0.0;
    for t in 1..=enc.n {
        let strings = checked_pow(al.s, t - 1, "state strings", SIGMA_CAP)?;
        // entropies accumulate over the disjoint blocks z = (sigma, s)
        let (mut h_yz, mut h_z, mut h_tyz, mut h_tz) = (0.0, 0.0, 0.0, 0.0);
        for idx in 0..strings {
            let sigma = unpack_string(idx, al.s, t - 1);
            let p_sigma: f64 = sigma.iter().map(|&s| spec.state_pmf()[s]).product();
            if p_sigma == 0.0 {
                continue;
            }
            let cond = brute_force_conditional(enc, spec, t, &sigma)?;
            for s in 0..al.s {
                let at = |ta: usize, tb: usize, y: usize| p_sigma * cond[((ta * nb + tb) * al.y + y) * al.s + s];
                let mut py = vec![0.0; al.y];
                let mut pt = vec![0.0; na * nb];
                let mut pty = Vec::with_capacity(na * nb * al.y);
                for ta in 0..na {
                    for tb in 0..nb {
                        for (y, acc) in py.iter_mut().enumerate() {
                            let v = at(ta, tb, y);
                            *acc += v;
                            pt[ta * nb + tb] += v;
                            pty.push(v);
                        }
                    }
                }
                let pz: f64 = py.iter().sum();
                h_yz += entropy(&py);
                h_z += entropy(&[pz]);
                h_tyz += entropy(&pty);
                h_tz += entropy(&pt);
            }
        }
        total += h_yz - h_z - h_tyz + h_tz;
    }
    Ok(total / enc.n as f64)
}

/// Where the largest factorization deviation occurred.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCase {
    pub trial: usize,
    pub t: usize,
    pub sigma: String,
}

/// Outcome of a randomized converse check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConverseReport {
    pub max_deviation: f64,
    /// Largest gap between the alpha-weighted and the direct time average.
    pub max_decomposition_gap: f64,
    pub trials: usize,
    /// Number of `(trial, t, sigma)` cases checked.
    pub cases: usize,
    pub worst_case: WorstCase,
}

/// Draws `trials` random encoder pairs of horizon `n` with message counts
/// uniform in `1..=max_messages` and checks every time step and state string.
pub fn verify_random_encoders(
    spec: &FsMacSpec,
    n: usize,
    trials: usize,
    max_messages: usize,
    seed: u64,
) -> Result<ConverseReport> {
    if n == 0 || trials == 0 || max_messages == 0 {
        return Err(Error::InvalidArgument("n, trials and max_messages must be positive".into()));
    }
    let ns = spec.alphabets().s;
    checked_pow(ns, n - 1, "state strings", SIGMA_CAP)?;
    let q = induced_strategy_channel(spec);
    let per_trial = par::map_indexed(trials, |trial| -> Result<(f64, usize, Vec<usize>, f64, usize)> {
        let mut rng = item_rng(seed, trial as u64, Role::Encoder);
        let messages = (rng.random_range(1..=max_messages), rng.random_range(1..=max_messages));
        let enc = EncoderMaps::random(spec, n, messages, &mut rng)?;
        let mut worst = (-1.0, 1, Vec::new());
        let mut cases = 0;
        for t in 1..=n {
            for idx in 0..ns.pow(t as u32 - 1) {
                let sigma = unpack_string(idx, ns, t - 1);
                let dev = verify_factorization_with(&enc, spec, &q, t, &sigma)?;
                cases += 1;
                if dev > worst.0 {
                    worst = (dev, t, sigma);
                }
            }
        }
        let gap = (alpha_weighted_sum_rate(&enc, spec, &q)? - direct_time_averaged_sum_rate(&enc, spec)?).abs();
        Ok((worst.0, worst.1, worst.2, gap, cases))
    });
    let mut report = ConverseReport {
        max_deviation: -1.0,
        max_decomposition_gap: 0.0,
        trials,
        cases: 0,
        worst_case: WorstCase { trial: 0, t: 1, sigma: String::new() },
    };
    for (trial, res) in per_trial.into_iter().enumerate() {
        let (dev, t, sigma, gap, cases) = res?;
        report.cases += cases;
        report.max_decomposition_gap = report.max_decomposition_gap.max(gap);
        if dev > report.max_deviation {
            report.max_deviation = dev;
            report.worst_case = WorstCase { trial, t, sigma: format_string(&sigma, ns) };
        }
    }
    Ok(report)
}
