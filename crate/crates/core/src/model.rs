//! Problem instances: alphabets, the i.i.d. state law, the two noisy state
//! observation channels, and the state-dependent MAC transition law.
//!
//! A [`FsMacSpec`] can only be built through validation, so every function
//! downstream may assume its invariants hold. [`SpecFile`] is the raw JSON
//! form; [`validate_spec`] checks one without building anything.

use crate::error::{Error, Result};
use crate::par;
use crate::strategy::StrategySpace;
use crate::STOCHASTIC_TOL;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// A probability vector over a finite alphabet.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Pmf(Vec<f64>);

impl Pmf {
    /// Validates nonnegativity and unit sum (within [`STOCHASTIC_TOL`]).
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_pmf(&probs, "pmf")?;
        Ok(Pmf(probs))
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform pmf over an empty alphabet");
        Pmf(vec![1.0 / n as f64; n])
    }

    pub fn point(n: usize, at: usize) -> Self {
        assert!(at < n);
        let mut v = vec![0.0; n];
        v[at] = 1.0;
        Pmf(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Skips validation; callers guarantee the vector is a distribution.
    pub(crate) fn from_vec_unchecked(v: Vec<f64>) -> Self {
        Pmf(v)
    }
}

impl std::ops::Index<usize> for Pmf {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl<'de> Deserialize<'de> for Pmf {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        Pmf::new(v).map_err(serde::de::Error::custom)
    }
}

/// A stochastic matrix: one [`Pmf`] per conditioning symbol, all the same length.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct CondPmf(Vec<Pmf>);

impl CondPmf {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        check_cond(&rows, "conditional pmf", None)?;
        Ok(CondPmf(rows.into_iter().map(Pmf).collect()))
    }

    /// Row `i` is a point mass on `i`.
    pub fn identity(n: usize) -> Self {
        CondPmf((0..n).map(|i| Pmf::point(n, i)).collect())
    }

    /// Binary symmetric channel with the given crossover probability.
    pub fn bsc(crossover: f64) -> Self {
        CondPmf(vec![
            Pmf(vec![1.0 - crossover, crossover]),
            Pmf(vec![crossover, 1.0 - crossover]),
        ])
    }

    pub fn rows(&self) -> usize {
        self.0.len()
    }

    pub fn cols(&self) -> usize {
        self.0.first().map_or(0, Pmf::len)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.0[i].as_slice()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i].0[j]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.0.iter().map(|p| p.0.clone()).collect()
    }

    /// Matrix product `self * next`: observe through `self`, then pass the
    /// observation through `next`.
    pub fn compose(&self, next: &CondPmf) -> Result<CondPmf> {
        if self.cols() != next.rows() {
            return Err(Error::DimensionMismatch {
                what: "composed observation channel",
                expected: self.cols(),
                found: next.rows(),
            });
        }
        let rows = self
            .0
            .iter()
            .map(|row| {
                let mut out = vec![0.0; next.cols()];
                for (k, &p) in row.0.iter().enumerate() {
                    for (o, q) in out.iter_mut().zip(next.row(k)) {
                        *o += p * q;
                    }
                }
                Pmf(out)
            })
            .collect();
        Ok(CondPmf(rows))
    }

    /// Entrywise `lambda * self + (1 - lambda) * other`.
    pub fn mix(&self, other: &CondPmf, lambda: f64) -> Result<CondPmf> {
        if self.rows() != other.rows() || self.cols() != other.cols() {
            return Err(Error::DimensionMismatch {
                what: "mixed observation channel",
                expected: self.rows() * self.cols(),
                found: other.rows() * other.cols(),
            });
        }
        let rows = self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| {
                Pmf(a.0
                    .iter()
                    .zip(&b.0)
                    .map(|(x, y)| lambda * x + (1.0 - lambda) * y)
                    .collect())
            })
            .collect();
        Ok(CondPmf(rows))
    }
}

/// Alphabet cardinalities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabets {
    pub xa: usize,
    pub xb: usize,
    pub s: usize,
    pub sa: usize,
    pub sb: usize,
    pub y: usize,
}

/// Limits on the Shannon-strategy blow-up `|X|^|S_obs|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyCaps {
    /// Cap on each user's strategy count.
    pub per_user: usize,
    /// Cap on the product of the two counts.
    pub product: usize,
}

impl Default for StrategyCaps {
    fn default() -> Self {
        Self {
            per_user: 4096,
            product: 10_000_000,
        }
    }
}

/// JSON layout of a problem instance. `channel` is indexed `[s][xa][xb][y]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub alphabets: Alphabets,
    pub state_pmf: Vec<f64>,
    pub obs_a: Vec<Vec<f64>>,
    pub obs_b: Vec<Vec<f64>>,
    pub channel: Vec<Vec<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<serde_json::Value>,
}

/// A validated FS-MAC instance.
#[derive(Debug, Clone, PartialEq)]
pub struct FsMacSpec {
    alphabets: Alphabets,
    state_pmf: Pmf,
    obs_a: CondPmf,
    obs_b: CondPmf,
    /// Flat `[s][xa][xb][y]`.
    channel: Vec<f64>,
    space_a: StrategySpace,
    space_b: StrategySpace,
}

fn check_pmf(v: &[f64], what: &str) -> Result<()> {
    if v.is_empty() {
        return Err(Error::invalid("spec", format!("{what} is empty")));
    }
    for (i, &p) in v.iter().enumerate() {
        if !p.is_finite() {
            return Err(Error::invalid("spec", format!("non-finite entry at {what}[{i}]")));
        }
        if p < 0.0 {
            return Err(Error::invalid(
                "spec",
                format!("negative entry at {what}[{i}]: {p}"),
            ));
        }
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::invalid("spec", format!("{what} sums to {sum}, not 1")));
    }
    Ok(())
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        });
    }
    Ok(())
}

fn check_cond(rows: &[Vec<f64>], what: &str, shape: Option<(usize, usize)>) -> Result<()> {
    if let Some((r, c)) = shape {
        if rows.len() != r {
            return Err(Error::invalid(
                "spec",
                format!("{what} has {} rows, expected {r}", rows.len()),
            ));
        }
        if let Some((i, row)) = rows.iter().enumerate().find(|(_, row)| row.len() != c) {
            return Err(Error::invalid(
                "spec",
                format!("{what} row {i} has {} entries, expected {c}", row.len()),
            ));
        }
    } else if let Some(first) = rows.first() {
        if let Some(i) = rows.iter().position(|r| r.len() != first.len()) {
            return Err(Error::invalid("spec", format!("{what} row {i} has a different length")));
        }
    }
    for (i, row) in rows.iter().enumerate() {
        check_pmf(row, &format!("{what} row {i}"))?;
    }
    Ok(())
}

/// Strategy-space sizes for both users, checked against `caps`.
fn strategy_spaces(al: &Alphabets, caps: StrategyCaps) -> Result<(StrategySpace, StrategySpace)> {
    let a = StrategySpace::new(al.sa, al.xa)?;
    let b = StrategySpace::new(al.sb, al.xb)?;
    a.check_cap(caps.per_user)?;
    b.check_cap(caps.per_user)?;
    let product = a.count() as u128 * b.count() as u128;
    if product > caps.product as u128 {
        return Err(Error::CapExceeded {
            what: "strategy-pair count",
            value: product,
            cap: caps.product as u128,
        });
    }
    Ok((a, b))
}

/// Checks every invariant of a raw instance, reporting the first violation.
pub fn validate_spec(file: &SpecFile, caps: StrategyCaps) -> Result<()> {
    let al = &file.alphabets;
    for (name, v) in [
        ("xa", al.xa),
        ("xb", al.xb),
        ("s", al.s),
        ("sa", al.sa),
        ("sb", al.sb),
        ("y", al.y),
    ] {
        if v == 0 {
            return Err(Error::invalid("spec", format!("alphabet {name} is empty")));
        }
    }
    check_len("state_pmf", al.s, file.state_pmf.len())?;
    check_pmf(&file.state_pmf, "state_pmf")?;
    check_cond(&file.obs_a, "obs_a", Some((al.s, al.sa)))?;
    check_cond(&file.obs_b, "obs_b", Some((al.s, al.sb)))?;
    check_len("channel (states)", al.s, file.channel.len())?;
    for (s, by_xa) in file.channel.iter().enumerate() {
        check_len("channel (x_a)", al.xa, by_xa.len())?;
        for (xa, by_xb) in by_xa.iter().enumerate() {
            check_len("channel (x_b)", al.xb, by_xb.len())?;
            for (xb, row) in by_xb.iter().enumerate() {
                check_len("channel (y)", al.y, row.len())?;
                check_pmf(row, &format!("channel[{s}][{xa}][{xb}]"))?;
            }
        }
    }
    strategy_spaces(al, caps)?;
    Ok(())
}

/// Reads, parses and validates a JSON instance.
pub fn load_spec(path: impl AsRef<Path>, caps: StrategyCaps) -> Result<FsMacSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_spec(&text, caps)
}

pub fn parse_spec(json: &str, caps: StrategyCaps) -> Result<FsMacSpec> {
    let file: SpecFile = serde_json::from_str(json)?;
    FsMacSpec::from_file(&file, caps)
}

impl FsMacSpec {
    pub fn from_file(file: &SpecFile, caps: StrategyCaps) -> Result<Self> {
        validate_spec(file, caps)?;
        let (space_a, space_b) = strategy_spaces(&file.alphabets, caps)?;
        let channel = file
            .channel
            .iter()
            .flatten()
            .flatten()
            .flatten()
            .copied()
            .collect();
        Ok(Self {
            alphabets: file.alphabets,
            state_pmf: Pmf(file.state_pmf.clone()),
            obs_a: CondPmf(file.obs_a.iter().cloned().map(Pmf).collect()),
            obs_b: CondPmf(file.obs_b.iter().cloned().map(Pmf).collect()),
            channel,
            space_a,
            space_b,
        })
    }

    /// Builds an instance from a transition function `w(s, xa, xb) -> P(.|...)`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_fn<F>(
        xa: usize,
        xb: usize,
        y: usize,
        state_pmf: Vec<f64>,
        obs_a: Vec<Vec<f64>>,
        obs_b: Vec<Vec<f64>>,
        caps: StrategyCaps,
        mut w: F,
    ) -> Result<Self>
    where
        F: FnMut(usize, usize, usize) -> Vec<f64>,
    {
        let s = state_pmf.len();
        let alphabets = Alphabets {
            xa,
            xb,
            s,
            sa: obs_a.first().map_or(0, Vec::len),
            sb: obs_b.first().map_or(0, Vec::len),
            y,
        };
        let channel = (0..s)
            .map(|si| {
                (0..xa)
                    .map(|a| (0..xb).map(|b| w(si, a, b)).collect())
                    .collect()
            })
            .collect();
        Self::from_file(
            &SpecFile {
                alphabets,
                state_pmf,
                obs_a,
                obs_b,
                channel,
                labels: None,
            },
            caps,
        )
    }

    /// Same instance with encoder a's observation channel replaced.
    pub fn with_obs_a(&self, obs_a: CondPmf) -> Result<Self> {
        let mut file = self.to_file();
        file.alphabets.sa = obs_a.cols();
        file.obs_a = obs_a.to_rows();
        Self::from_file(&file, StrategyCaps { per_user: usize::MAX, product: usize::MAX })
    }

    /// Same instance with encoder b's observation channel replaced.
    pub fn with_obs_b(&self, obs_b: CondPmf) -> Result<Self> {
        let mut file = self.to_file();
        file.alphabets.sb = obs_b.cols();
        file.obs_b = obs_b.to_rows();
        Self::from_file(&file, StrategyCaps { per_user: usize::MAX, product: usize::MAX })
    }

    pub fn to_file(&self) -> SpecFile {
        let al = self.alphabets;
        let channel = (0..al.s)
            .map(|s| {
                (0..al.xa)
                    .map(|xa| (0..al.xb).map(|xb| self.transition(s, xa, xb).to_vec()).collect())
                    .collect()
            })
            .collect();
        SpecFile {
            alphabets: al,
            state_pmf: self.state_pmf.0.clone(),
            obs_a: self.obs_a.to_rows(),
            obs_b: self.obs_b.to_rows(),
            channel,
            labels: None,
        }
    }

    pub fn alphabets(&self) -> Alphabets {
        self.alphabets
    }

    pub fn state_pmf(&self) -> &Pmf {
        &self.state_pmf
    }

    pub fn obs_a(&self) -> &CondPmf {
        &self.obs_a
    }

    pub fn obs_b(&self) -> &CondPmf {
        &self.obs_b
    }

    pub fn space_a(&self) -> StrategySpace {
        self.space_a
    }

    pub fn space_b(&self) -> StrategySpace {
        self.space_b
    }

    /// `W(. | xa, xb, s)`.
    #[inline]
    pub fn transition(&self, s: usize, xa: usize, xb: usize) -> &[f64] {
        let al = &self.alphabets;
        let start = ((s * al.xa + xa) * al.xb + xb) * al.y;
        &self.channel[start..start + al.y]
    }
}

/// `Q(y | s, t_a, t_b)`: the channel seen by a pair of Shannon strategies once
/// the encoders' observations are averaged out.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyChannel {
    s: usize,
    ta: usize,
    tb: usize,
    y: usize,
    /// Flat `[s][ta][tb][y]`.
    q: Vec<f64>,
}

impl StrategyChannel {
    /// Wraps a dense table. Rows are not re-validated.
    pub fn from_dense(s: usize, ta: usize, tb: usize, y: usize, q: Vec<f64>) -> Result<Self> {
        check_len("strategy channel", s * ta * tb * y, q.len())?;
        Ok(Self { s, ta, tb, y, q })
    }

    /// `(|S|, |T_a|, |T_b|, |Y|)`.
    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (self.s, self.ta, self.tb, self.y)
    }

    #[inline]
    pub fn row(&self, s: usize, ta: usize, tb: usize) -> &[f64] {
        let start = ((s * self.ta + ta) * self.tb + tb) * self.y;
        &self.q[start..start + self.y]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.q
    }

    /// Same channel with the roles of the two users swapped (`[s][tb][ta][y]`).
    pub fn transposed(&self) -> StrategyChannel {
        let mut q = vec![0.0; self.q.len()];
        for s in 0..self.s {
            for ta in 0..self.ta {
                for tb in 0..self.tb {
                    let dst = ((s * self.tb + tb) * self.ta + ta) * self.y;
                    q[dst..dst + self.y].copy_from_slice(self.row(s, ta, tb));
                }
            }
        }
        StrategyChannel {
            s: self.s,
            ta: self.tb,
            tb: self.ta,
            y: self.y,
            q,
        }
    }
}

/// Computes `Q(y|s,ta,tb) = sum_{sa,sb} P(sa|s) P(sb|s) W(y | ta(sa), tb(sb), s)`.
///
/// The double sum is evaluated by first pushing each observation law through
/// its strategy, giving `P(xa | s, ta)` and `P(xb | s, tb)`, then mixing the
/// transition rows.
pub fn induced_strategy_channel(spec: &FsMacSpec) -> StrategyChannel {
    let al = spec.alphabets();
    let (sa_space, sb_space) = (spec.space_a(), spec.space_b());
    let (ta_n, tb_n) = (sa_space.count(), sb_space.count());

    // input_law_a[(s * ta_n + ta) * xa + x] = P(x_a = x | s, ta)
    let push = |space: StrategySpace, obs: &CondPmf, x_n: usize| -> Vec<f64> {
        let lookup = space.lookup_table();
        let (t_n, o_n) = (space.count(), space.obs_size());
        let mut out = vec![0.0; al.s * t_n * x_n];
        for s in 0..al.s {
            for t in 0..t_n {
                let dst = &mut out[(s * t_n + t) * x_n..(s * t_n + t + 1) * x_n];
                for o in 0..o_n {
                    dst[lookup[t * o_n + o]] += obs.get(s, o);
                }
            }
        }
        out
    };
    let law_a = push(sa_space, spec.obs_a(), al.xa);
    let law_b = push(sb_space, spec.obs_b(), al.xb);

    let mut q = vec![0.0; al.s * ta_n * tb_n * al.y];
    let row_len = tb_n * al.y;
    par::for_each_chunk(&mut q, row_len, |chunk_idx, out| {
        let (s, ta) = (chunk_idx / ta_n, chunk_idx % ta_n);
        let pa = &law_a[(s * ta_n + ta) * al.xa..(s * ta_n + ta + 1) * al.xa];
        for tb in 0..tb_n {
            let pb = &law_b[(s * tb_n + tb) * al.xb..(s * tb_n + tb + 1) * al.xb];
            let dst = &mut out[tb * al.y..(tb + 1) * al.y];
            for (xa, &wa) in pa.iter().enumerate() {
                if wa == 0.0 {
                    continue;
                }
                for (xb, &wb) in pb.iter().enumerate() {
                    let w = wa * wb;
                    if w == 0.0 {
                        continue;
                    }
                    for (d, &p) in dst.iter_mut().zip(spec.transition(s, xa, xb)) {
                        *d += w * p;
                    }
                }
            }
        }
    });
    StrategyChannel {
        s: al.s,
        ta: ta_n,
        tb: tb_n,
        y: al.y,
        q,
    }
}

/// Reference instances used throughout tests, benches and the bundled corpus.
pub mod instances {
    use super::*;

    fn bsc_rows(p: f64) -> Vec<Vec<f64>> {
        CondPmf::bsc(p).to_rows()
    }

    /// `y = x_a xor x_b xor s` with uniform binary state. Each encoder sees the
    /// state through a binary symmetric channel with the given crossover
    /// (0 means noiseless).
    pub fn mod2_adder(crossover_a: f64, crossover_b: f64) -> FsMacSpec {
        FsMacSpec::from_fn(
            2,
            2,
            2,
            vec![0.5, 0.5],
            bsc_rows(crossover_a),
            bsc_rows(crossover_b),
            StrategyCaps::default(),
            |s, a, b| {
                let mut row = vec![0.0; 2];
                row[a ^ b ^ s] = 1.0;
                row
            },
        )
        .expect("mod-2 adder is valid")
    }

    /// Output uniform on `y` symbols regardless of inputs and state.
    pub fn null_channel(y: usize) -> FsMacSpec {
        FsMacSpec::from_fn(
            2,
            2,
            y,
            vec![0.5, 0.5],
            bsc_rows(0.0),
            bsc_rows(0.0),
            StrategyCaps::default(),
            |_, _, _| vec![1.0 / y as f64; y],
        )
        .expect("null channel is valid")
    }

    /// Single-state binary adder MAC `y = x_a + x_b` in `{0, 1, 2}`.
    pub fn stateless_adder() -> FsMacSpec {
        FsMacSpec::from_fn(
            2,
            2,
            3,
            vec![1.0],
            vec![vec![1.0]],
            vec![vec![1.0]],
            StrategyCaps::default(),
            |_, a, b| {
                let mut row = vec![0.0; 3];
                row[a + b] = 1.0;
                row
            },
        )
        .expect("adder MAC is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn mod2_json(obs_a: &str, state: &str) -> String {
        format!(
            r#"{{
              "alphabets": {{"xa":2,"xb":2,"s":2,"sa":2,"sb":2,"y":2}},
              "state_pmf": {state},
              "obs_a": {obs_a},
              "obs_b": [[1,0],[0,1]],
              "channel": [
                [[[1,0],[0,1]],[[0,1],[1,0]]],
                [[[0,1],[1,0]],[[1,0],[0,1]]]
              ],
              "labels": {{"y": ["zero", "one"]}}
            }}"#
        )
    }

    #[test]
    fn parses_hand_written_spec() {
        let spec = parse_spec(&mod2_json("[[1,0],[0,1]]", "[0.5,0.5]"), StrategyCaps::default())
            .unwrap();
        assert_eq!(spec.alphabets().s, 2);
        assert_eq!(spec, instances::mod2_adder(0.0, 0.0));
    }

    #[test]
    fn bad_row_sum_names_the_row() {
        let err = parse_spec(&mod2_json("[[1,0],[0.5,0.4]]", "[0.5,0.5]"), StrategyCaps::default())
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("obs_a row 1"), "{msg}");
        assert!(msg.contains("0.9"), "{msg}");
    }

    #[test]
    fn negative_entry_reported() {
        let err = parse_spec(&mod2_json("[[1,0],[0,1]]", "[1.5,-0.5]"), StrategyCaps::default())
            .unwrap_err();
        assert!(err.to_string().contains("negative entry at state_pmf[1]"), "{err}");
    }

    #[test]
    fn malformed_json_is_a_parse_error() {
        let err = parse_spec("{ not json", StrategyCaps::default()).unwrap_err();
        assert!(err.is_input_error());
    }

    #[test]
    fn ternary_observation_four_inputs_is_under_cap() {
        // |T_a| = 4^3 = 64
        let spec = FsMacSpec::from_fn(
            4,
            2,
            2,
            vec![0.5, 0.5],
            vec![vec![0.5, 0.25, 0.25], vec![0.0, 0.5, 0.5]],
            vec![vec![1.0], vec![1.0]],
            StrategyCaps::default(),
            |_, a, _| if a % 2 == 0 { vec![1.0, 0.0] } else { vec![0.0, 1.0] },
        )
        .unwrap();
        assert_eq!(spec.space_a().count(), 64);
        assert_eq!(spec.space_b().count(), 2);
    }

    #[test]
    fn strategy_cap_is_enforced() {
        let small = StrategyCaps {
            per_user: 16,
            product: 100,
        };
        let file = instances::mod2_adder(0.0, 0.0).to_file();
        assert!(validate_spec(&file, small).is_ok());
        let tiny = StrategyCaps {
            per_user: 3,
            product: 100,
        };
        let err = validate_spec(&file, tiny).unwrap_err();
        assert!(err.to_string().contains("cap of 3"), "{err}");
        let tight_product = StrategyCaps {
            per_user: 16,
            product: 15,
        };
        let err = validate_spec(&file, tight_product).unwrap_err();
        assert!(err.to_string().contains("strategy-pair count"), "{err}");
    }

    #[test]
    fn wrong_channel_shape() {
        let mut file = instances::mod2_adder(0.0, 0.0).to_file();
        file.channel[1][0].pop();
        assert!(matches!(
            validate_spec(&file, StrategyCaps::default()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn input_independent_channel_passes_through() {
        let spec = FsMacSpec::from_fn(
            2,
            3,
            3,
            vec![0.3, 0.7],
            vec![vec![0.8, 0.2], vec![0.1, 0.9]],
            vec![vec![1.0], vec![1.0]],
            StrategyCaps::default(),
            |s, _, _| if s == 0 { vec![0.2, 0.3, 0.5] } else { vec![0.6, 0.4, 0.0] },
        )
        .unwrap();
        let q = induced_strategy_channel(&spec);
        let (s_n, ta_n, tb_n, _) = q.dims();
        for s in 0..s_n {
            for ta in 0..ta_n {
                for tb in 0..tb_n {
                    for (a, b) in q.row(s, ta, tb).iter().zip(spec.transition(s, 0, 0)) {
                        assert_abs_diff_eq!(a, b, epsilon = 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn noiseless_observation_collapses_sums() {
        let spec = instances::mod2_adder(0.0, 0.0);
        let q = induced_strategy_channel(&spec);
        let (a, b) = (spec.space_a(), spec.space_b());
        for s in 0..2 {
            for ta in 0..a.count() {
                for tb in 0..b.count() {
                    let expect = spec.transition(s, a.input_of(ta, s), b.input_of(tb, s));
                    assert_eq!(q.row(s, ta, tb), expect);
                }
            }
        }
    }

    #[test]
    fn transpose_swaps_users() {
        let spec = instances::mod2_adder(0.1, 0.3);
        let q = induced_strategy_channel(&spec);
        let qt = q.transposed();
        for s in 0..2 {
            for ta in 0..4 {
                for tb in 0..4 {
                    assert_eq!(q.row(s, ta, tb), qt.row(s, tb, ta));
                }
            }
        }
    }

    #[test]
    fn compose_and_mix() {
        let a = CondPmf::bsc(0.1);
        let b = CondPmf::bsc(0.2);
        let c = a.compose(&b).unwrap();
        // crossover of a cascade: p + q - 2pq
        assert_abs_diff_eq!(c.get(0, 1), 0.1 + 0.2 - 2.0 * 0.02, epsilon = 1e-15);
        let m = a.mix(&b, 0.25).unwrap();
        assert_abs_diff_eq!(m.get(1, 0), 0.25 * 0.1 + 0.75 * 0.2, epsilon = 1e-15);
    }

    #[test]
    fn round_trip_through_file() {
        let spec = instances::mod2_adder(0.1, 0.0);
        let text = serde_json::to_string(&spec.to_file()).unwrap();
        assert_eq!(parse_spec(&text, StrategyCaps::default()).unwrap(), spec);
    }
}
