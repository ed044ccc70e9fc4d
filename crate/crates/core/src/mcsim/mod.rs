//! Random-coding simulation of a team policy.
//!
//! Each trial draws fresh codebooks: every codeword is an `n`-string of
//! strategy ids drawn i.i.d. from the user's policy. It then draws uniform
//! messages and an i.i.d. state sequence and passes the state through each
//! encoder's observation channel. The strategy in force applies to the
//! current observation, and the output is sampled from the channel. The
//! decoder knows the state sequence. It either looks for the unique jointly
//! typical codeword pair or picks the maximum-likelihood pair.
//!
//! Trial `i` uses generators keyed by `(seed, i)` with one stream per role, so
//! reports are identical for every thread count.

mod typicality;

pub use typicality::{typicality_check, JointPmf, SubsetTables, MAX_VARIABLES};

use crate::error::{Error, Result};
use crate::model::{FsMacSpec, StrategyChannel};
use crate::par;
use crate::rates::{joint_law, TeamPolicy};
use crate::rng::{item_rng, Role};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Cap on each codebook size and on their product.
pub const CODEBOOK_CAP: u64 = 1 << 20;
/// Cap on the size of the single-letter law used by the typicality decoder.
pub const LAW_CAP: usize = 1 << 24;

/// Variable order of the single-letter law: `(T_a, T_b, Y, S)`.
const VAR_TA: usize = 0;
const VAR_TB: usize = 1;
const VAR_Y: usize = 2;
const VAR_S: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decoder {
    #[default]
    Typicality,
    MaxLikelihood,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub rate_a: f64,
    pub rate_b: f64,
    pub epsilon: f64,
    pub trials: usize,
    pub seed: u64,
    pub decoder: Decoder,
}

/// `ceil(2^(n * rate))`, or `None` past the cap.
fn codebook_size(n: usize, rate: f64) -> Option<u64> {
    let bits = n as f64 * rate;
    if bits > 20.0 {
        return None;
    }
    let m = bits.exp2().ceil() as u64;
    (m <= CODEBOOK_CAP).then_some(m.max(1))
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("block length n must be at least 1".into()));
        }
        for (name, r) in [("rate_a", self.rate_a), ("rate_b", self.rate_b)] {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be a nonnegative number, got {r}")));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        let (ma, mb) = self.codebook_sizes()?;
        if ma * mb > CODEBOOK_CAP {
            return Err(Error::CapExceeded { what: "codebook pair count", value: (ma * mb) as u128, cap: CODEBOOK_CAP as u128 });
        }
        Ok(())
    }

    /// `(M_a, M_b)` with `M = ceil(2^(n * rate))`.
    pub fn codebook_sizes(&self) -> Result<(u64, u64)> {
        let size = |rate: f64| {
            codebook_size(self.n, rate).ok_or(Error::CapExceeded {
                what: "codebook size",
                value: (self.n as f64 * rate).exp2().ceil().min(u128::MAX as f64) as u128,
                cap: CODEBOOK_CAP as u128,
            })
        };
        Ok((size(self.rate_a)?, size(self.rate_b)?))
    }
}

/// Codewords of both users: `book[w][t]` is a strategy id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Codebooks {
    pub book_a: Vec<Vec<usize>>,
    pub book_b: Vec<Vec<usize>>,
}

fn sampler(probs: &[f64], what: &'static str) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(probs).map_err(|e| Error::invalid(what, e.to_string()))
}

/// Draws `m_a` and `m_b` codewords of length `n` i.i.d. from the policy.
pub fn generate_codebooks<R: Rng + ?Sized>(
    pol: &TeamPolicy,
    n: usize,
    sizes: (u64, u64),
    rng_a: &mut R,
    rng_b: &mut R,
) -> Result<Codebooks> {
    let da = sampler(pol.pi_a.as_slice(), "pi_a")?;
    let db = sampler(pol.pi_b.as_slice(), "pi_b")?;
    let book = |m: u64, d: &WeightedIndex<f64>, rng: &mut R| -> Vec<Vec<usize>> {
        (0..m).map(|_| (0..n).map(|_| d.sample(rng)).collect()).collect()
    };
    Ok(Codebooks {
        book_a: book(sizes.0, &da, rng_a),
        book_b: book(sizes.1, &db, rng_b),
    })
}

/// Samplers for the state, the observations and the channel.
pub struct ChannelSampler<'a> {
    spec: &'a FsMacSpec,
    state: WeightedIndex<f64>,
    obs_a: Vec<WeightedIndex<f64>>,
    obs_b: Vec<WeightedIndex<f64>>,
    /// One sampler per `(s, xa, xb)`.
    channel: Vec<WeightedIndex<f64>>,
}

/// One use of the channel over a block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transmission {
    pub s: Vec<usize>,
    pub sa: Vec<usize>,
    pub sb: Vec<usize>,
    pub y: Vec<usize>,
}

impl<'a> ChannelSampler<'a> {
    pub fn new(spec: &'a FsMacSpec) -> Result<Self> {
        let al = spec.alphabets();
        let rows = |c: &crate::model::CondPmf, what| (0..c.rows()).map(|i| sampler(c.row(i), what)).collect::<Result<Vec<_>>>();
        let mut channel = Vec::with_capacity(al.s * al.xa * al.xb);
        for s in 0..al.s {
            for xa in 0..al.xa {
                for xb in 0..al.xb {
                    channel.push(sampler(spec.transition(s, xa, xb), "channel")?);
                }
            }
        }
        Ok(Self {
            spec,
            state: sampler(spec.state_pmf().as_slice(), "state_pmf")?,
            obs_a: rows(spec.obs_a(), "obs_a")?,
            obs_b: rows(spec.obs_b(), "obs_b")?,
            channel,
        })
    }

    /// Sends codewords `ta`, `tb` (strategy ids per time) over the channel.
    pub fn transmit<R: Rng + ?Sized>(&self, ta: &[usize], tb: &[usize], rng: &mut R) -> Transmission {
        let al = self.spec.alphabets();
        let (space_a, space_b) = (self.spec.space_a(), self.spec.space_b());
        let n = ta.len();
        let mut out = Transmission {
            s: Vec::with_capacity(n),
            sa: Vec::with_capacity(n),
            sb: Vec::with_capacity(n),
            y: Vec::with_capacity(n),
        };
        for t in 0..n {
            let s = self.state.sample(rng);
            let sa = self.obs_a[s].sample(rng);
            let sb = self.obs_b[s].sample(rng);
            let xa = space_a.input_of(ta[t], sa);
            let xb = space_b.input_of(tb[t], sb);
            let y = self.channel[(s * al.xa + xa) * al.xb + xb].sample(rng);
            out.s.push(s);
            out.sa.push(sa);
            out.sb.push(sb);
            out.y.push(y);
        }
        out
    }
}

/// The single-letter law of `(T_a, T_b, Y, S)` under `pol`.
pub fn letter_law(spec: &FsMacSpec, q: &StrategyChannel, pol: &TeamPolicy) -> Result<JointPmf> {
    let law = joint_law(spec, q, pol)?;
    let [ns, na, nb, ny] = law.dims();
    let size = ns * na * nb * ny;
    if size > LAW_CAP {
        return Err(Error::CapExceeded { what: "single-letter law size", value: size as u128, cap: LAW_CAP as u128 });
    }
    let mut probs = vec![0.0; size];
    for s in 0..ns {
        for ta in 0..na {
            for tb in 0..nb {
                for y in 0..ny {
                    probs[((ta * nb + tb) * ny + y) * ns + s] = law.get(s, ta, tb, y);
                }
            }
        }
    }
    // renormalise away rounding so the law passes the distribution check
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    JointPmf::new(vec![na, nb, ny, ns], probs)
}

/// How a trial ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Correct,
    /// No candidate pair passed the decoding test.
    NoCandidate,
    /// Two or more pairs passed (or tied for the likelihood maximum).
    Ambiguous,
    /// A single pair passed and it was the wrong one.
    WrongUnique,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialResult {
    pub truth: (usize, usize),
    pub decoded: Option<(usize, usize)>,
    pub outcome: Outcome,
}

/// Decoding state shared by all trials.
pub struct Simulator<'a> {
    spec: &'a FsMacSpec,
    q: &'a StrategyChannel,
    pol: &'a TeamPolicy,
    cfg: &'a SimConfig,
    sizes: (u64, u64),
    channel: ChannelSampler<'a>,
    tables: Option<SubsetTables>,
}

const MASK_TA: usize = 1 << VAR_TA;
const MASK_TB: usize = 1 << VAR_TB;

impl<'a> Simulator<'a> {
    pub fn new(spec: &'a FsMacSpec, q: &'a StrategyChannel, pol: &'a TeamPolicy, cfg: &'a SimConfig) -> Result<Self> {
        cfg.validate()?;
        pol.check_against(spec)?;
        let tables = match cfg.decoder {
            Decoder::Typicality => Some(SubsetTables::new(&letter_law(spec, q, pol)?)),
            Decoder::MaxLikelihood => None,
        };
        Ok(Self {
            spec,
            q,
            pol,
            cfg,
            sizes: cfg.codebook_sizes()?,
            channel: ChannelSampler::new(spec)?,
            tables,
        })
    }

    pub fn codebook_sizes(&self) -> (u64, u64) {
        self.sizes
    }

    /// Runs trial `index` with its own generators.
    pub fn run_trial(&self, index: u64) -> Result<TrialResult> {
        let seed = self.cfg.seed;
        let books = generate_codebooks(
            self.pol,
            self.cfg.n,
            self.sizes,
            &mut item_rng(seed, index, Role::CodebookA),
            &mut item_rng(seed, index, Role::CodebookB),
        )?;
        let mut msg_rng = item_rng(seed, index, Role::Messages);
        let truth = (
            msg_rng.random_range(0..self.sizes.0 as usize),
            msg_rng.random_range(0..self.sizes.1 as usize),
        );
        let tx = self.channel.transmit(
            &books.book_a[truth.0],
            &books.book_b[truth.1],
            &mut item_rng(seed, index, Role::Channel),
        );
        let (decoded, ambiguous) = match &self.tables {
            Some(tables) => self.decode_typical(tables, &books, &tx),
            None => self.decode_ml(&books, &tx),
        };
        let outcome = match decoded {
            _ if ambiguous => Outcome::Ambiguous,
            None => Outcome::NoCandidate,
            Some(d) if d == truth => Outcome::Correct,
            Some(_) => Outcome::WrongUnique,
        };
        Ok(TrialResult { truth, decoded: decoded.filter(|_| !ambiguous), outcome })
    }

    /// Returns the unique jointly typical pair, if any, and whether more than
    /// one pair is typical. Subsets are grouped by which codewords they
    /// involve so each test runs once per codeword or pair.
    fn decode_typical(&self, tables: &SubsetTables, books: &Codebooks, tx: &Transmission) -> (Option<(usize, usize)>, bool) {
        let n = self.cfg.n;
        let eps = self.cfg.epsilon;
        let idx = |mask: usize, ta: usize, tb: usize, t: usize| {
            let st = &tables.strides[mask];
            ta * st[VAR_TA] + tb * st[VAR_TB] + tx.y[t] * st[VAR_Y] + tx.s[t] * st[VAR_S]
        };
        let rest: Vec<usize> = (1..16).filter(|m| m & (MASK_TA | MASK_TB) == 0).collect();
        let only_a: Vec<usize> = (1..16).filter(|m| m & MASK_TA != 0 && m & MASK_TB == 0).collect();
        let only_b: Vec<usize> = (1..16).filter(|m| m & MASK_TB != 0 && m & MASK_TA == 0).collect();
        let both: Vec<usize> = (1..16).filter(|m| m & MASK_TA != 0 && m & MASK_TB != 0).collect();
        if !rest.iter().all(|&m| tables.passes(m, (0..n).map(|t| idx(m, 0, 0, t)), n, eps)) {
            return (None, false);
        }
        let pass_a: Vec<usize> = (0..books.book_a.len())
            .filter(|&w| {
                let cw = &books.book_a[w];
                only_a.iter().all(|&m| tables.passes(m, (0..n).map(|t| idx(m, cw[t], 0, t)), n, eps))
            })
            .collect();
        let pass_b: Vec<usize> = (0..books.book_b.len())
            .filter(|&w| {
                let cw = &books.book_b[w];
                only_b.iter().all(|&m| tables.passes(m, (0..n).map(|t| idx(m, 0, cw[t], t)), n, eps))
            })
            .collect();
        let mut found = None;
        for &wa in &pass_a {
            let ca = &books.book_a[wa];
            for &wb in &pass_b {
                let cb = &books.book_b[wb];
                if both.iter().all(|&m| tables.passes(m, (0..n).map(|t| idx(m, ca[t], cb[t], t)), n, eps)) {
                    if found.is_some() {
                        return (found, true);
                    }
                    found = Some((wa, wb));
                }
            }
        }
        (found, false)
    }

    /// Maximum-likelihood pair; a tie for the maximum is ambiguous.
    fn decode_ml(&self, books: &Codebooks, tx: &Transmission) -> (Option<(usize, usize)>, bool) {
        let mut best = f64::NEG_INFINITY;
        let mut arg = None;
        let mut tie = false;
        for (wa, ca) in books.book_a.iter().enumerate() {
            for (wb, cb) in books.book_b.iter().enumerate() {
                let mut ll = 0.0;
                for t in 0..self.cfg.n {
                    let p = self.q.row(tx.s[t], ca[t], cb[t])[tx.y[t]];
                    if p == 0.0 {
                        ll = f64::NEG_INFINITY;
                        break;
                    }
                    ll += p.ln();
                }
                if ll == f64::NEG_INFINITY {
                    continue;
                }
                if ll > best {
                    best = ll;
                    arg = Some((wa, wb));
                    tie = false;
                } else if ll == best {
                    tie = true;
                }
            }
        }
        (arg, tie)
    }

    pub fn spec(&self) -> &FsMacSpec {
        self.spec
    }
}

/// 95% Wilson score interval for `errors` out of `trials`.
pub fn wilson_interval(errors: u64, trials: u64) -> (f64, f64) {
    const Z: f64 = 1.959963984540054;
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0).min(p), (center + half).min(1.0).max(p))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub n: usize,
    pub rate_a: f64,
    pub rate_b: f64,
    pub codebook_sizes: (u64, u64),
    pub decoder: Decoder,
    pub trials: usize,
    pub errors: u64,
    pub error_rate: f64,
    pub wilson_interval: (f64, f64),
    /// Trials where no pair passed the decoding test.
    pub decoder_no_candidate_count: u64,
    /// Trials where several pairs passed the decoding test.
    pub decoder_ambiguous_count: u64,
    /// Trials decoded to a single wrong pair.
    pub decoder_wrong_count: u64,
}

/// Runs `cfg.trials` independent trials and summarises the errors.
pub fn estimate_error(spec: &FsMacSpec, q: &StrategyChannel, pol: &TeamPolicy, cfg: &SimConfig) -> Result<SimReport> {
    let sim = Simulator::new(spec, q, pol, cfg)?;
    let outcomes = par::map_indexed(cfg.trials, |i| sim.run_trial(i as u64).map(|r| r.outcome));
    let mut counts = [0u64; 4];
    for o in outcomes {
        counts[o? as usize] += 1;
    }
    let [_, none, ambiguous, wrong] = counts;
    let errors = none + ambiguous + wrong;
    Ok(SimReport {
        n: cfg.n,
        rate_a: cfg.rate_a,
        rate_b: cfg.rate_b,
        codebook_sizes: sim.codebook_sizes(),
        decoder: cfg.decoder,
        trials: cfg.trials,
        errors,
        error_rate: errors as f64 / cfg.trials as f64,
        wilson_interval: wilson_interval(errors, cfg.trials as u64),
        decoder_no_candidate_count: none,
        decoder_ambiguous_count: ambiguous,
        decoder_wrong_count: wrong,
    })
}
