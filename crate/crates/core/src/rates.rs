//! Joint law of a memoryless stationary team policy and its rate pentagon.
//!
//! For a policy `(pi_a, pi_b)` the variables `(S, T_a, T_b, Y)` have law
//! `P_S(s) Q(y|s,ta,tb) pi_a(ta) pi_b(tb)`. The pentagon is cut out by
//! `R_a <= I(T_a;Y|T_b,S)`, `R_b <= I(T_b;Y|T_a,S)` and
//! `R_a + R_b <= I(T_a,T_b;Y|S)`. All information quantities are in bits.

use crate::error::{Error, Result};
use crate::model::{FsMacSpec, Pmf, StrategyChannel};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// A product distribution over the two strategy spaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamPolicy {
    pub pi_a: Pmf,
    pub pi_b: Pmf,
}

impl TeamPolicy {
    pub fn new(pi_a: Pmf, pi_b: Pmf) -> Self {
        Self { pi_a, pi_b }
    }

    pub fn uniform(spec: &FsMacSpec) -> Self {
        Self::new(
            Pmf::uniform(spec.space_a().count()),
            Pmf::uniform(spec.space_b().count()),
        )
    }

    /// Checks that the component lengths match the instance's strategy counts.
    pub fn check_against(&self, spec: &FsMacSpec) -> Result<()> {
        for (what, pi, n) in [
            ("pi_a", &self.pi_a, spec.space_a().count()),
            ("pi_b", &self.pi_b, spec.space_b().count()),
        ] {
            if pi.len() != n {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: n,
                    found: pi.len(),
                });
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Shannon entropy in bits, with `0 log 0 = 0`.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.log2())
        .sum::<f64>()
}

/// Axes of a [`JointLaw`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    S = 0,
    Ta = 1,
    Tb = 2,
    Y = 3,
}

/// A subset of the four axes, as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct VarSet(u8);

impl VarSet {
    pub const EMPTY: VarSet = VarSet(0);
    pub const S: VarSet = VarSet(1 << Axis::S as u8);
    pub const TA: VarSet = VarSet(1 << Axis::Ta as u8);
    pub const TB: VarSet = VarSet(1 << Axis::Tb as u8);
    pub const Y: VarSet = VarSet(1 << Axis::Y as u8);

    pub const fn union(self, other: VarSet) -> VarSet {
        VarSet(self.0 | other.0)
    }

    pub const fn contains(self, axis: Axis) -> bool {
        self.0 & (1 << axis as u8) != 0
    }

    pub const fn is_disjoint(self, other: VarSet) -> bool {
        self.0 & other.0 == 0
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }
}

impl std::ops::BitOr for VarSet {
    type Output = VarSet;
    fn bitor(self, rhs: VarSet) -> VarSet {
        self.union(rhs)
    }
}

/// Dense table `P[s][ta][tb][y]`.
///
/// The state axis may be any finite set; the converse checks reuse this type
/// with past-and-present state strings in that slot.
#[derive(Debug, Clone, PartialEq)]
pub struct JointLaw {
    dims: [usize; 4],
    p: Vec<f64>,
}

impl JointLaw {
    pub fn from_dense(dims: [usize; 4], p: Vec<f64>) -> Result<Self> {
        let n = dims.iter().product();
        if p.len() != n {
            return Err(Error::DimensionMismatch {
                what: "joint law",
                expected: n,
                found: p.len(),
            });
        }
        Ok(Self { dims, p })
    }

    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }

    #[inline]
    pub fn get(&self, s: usize, ta: usize, tb: usize, y: usize) -> f64 {
        let [_, na, nb, ny] = self.dims;
        self.p[((s * na + ta) * nb + tb) * ny + y]
    }

    /// Strides that map a full coordinate to its index in the marginal over `keep`.
    fn projection(&self, keep: VarSet) -> [usize; 4] {
        let mut strides = [0; 4];
        let mut stride = 1;
        for axis in (0..4).rev() {
            if keep.0 & (1 << axis) != 0 {
                strides[axis] = stride;
                stride *= self.dims[axis];
            }
        }
        strides
    }

    fn marginal_len(&self, keep: VarSet) -> usize {
        (0..4)
            .filter(|&a| keep.0 & (1 << a) != 0)
            .map(|a| self.dims[a])
            .product()
    }

    /// Marginal over the axes in `keep`, flattened in axis order `S, Ta, Tb, Y`.
    pub fn marginal(&self, keep: VarSet) -> Vec<f64> {
        let strides = self.projection(keep);
        let mut out = vec![0.0; self.marginal_len(keep)];
        self.for_each_entry(|coord, p| {
            out[dot(&coord, &strides)] += p;
        });
        out
    }

    fn for_each_entry(&self, mut f: impl FnMut([usize; 4], f64)) {
        let [ns, na, nb, ny] = self.dims;
        let mut i = 0;
        for s in 0..ns {
            for ta in 0..na {
                for tb in 0..nb {
                    for y in 0..ny {
                        f([s, ta, tb, y], self.p[i]);
                        i += 1;
                    }
                }
            }
        }
    }
}

#[inline]
fn dot(coord: &[usize; 4], strides: &[usize; 4]) -> usize {
    coord[0] * strides[0] + coord[1] * strides[1] + coord[2] * strides[2] + coord[3] * strides[3]
}

/// `P(s,ta,tb,y) = P_S(s) Q(y|s,ta,tb) pi_a(ta) pi_b(tb)`.
pub fn joint_law(spec: &FsMacSpec, q: &StrategyChannel, pol: &TeamPolicy) -> Result<JointLaw> {
    pol.check_against(spec)?;
    let (ns, na, nb, ny) = q.dims();
    if ns != spec.alphabets().s || na != pol.pi_a.len() || nb != pol.pi_b.len() {
        return Err(Error::DimensionMismatch {
            what: "strategy channel",
            expected: spec.alphabets().s * pol.pi_a.len() * pol.pi_b.len(),
            found: ns * na * nb,
        });
    }
    let mut p = Vec::with_capacity(ns * na * nb * ny);
    for s in 0..ns {
        let ps = spec.state_pmf()[s];
        for ta in 0..na {
            let wa = ps * pol.pi_a[ta];
            for tb in 0..nb {
                let w = wa * pol.pi_b[tb];
                p.extend(q.row(s, ta, tb).iter().map(|&qy| w * qy));
            }
        }
    }
    JointLaw::from_dense([ns, na, nb, ny], p)
}

/// `I(X;Y|Z)` in bits, where the three arguments pick disjoint axis sets.
///
/// Evaluated as `sum P(x,y,z) log [P(x,y,z) P(z) / (P(x,z) P(y,z))]` over
/// entries with positive probability.
pub fn conditional_mutual_information(law: &JointLaw, x: VarSet, y: VarSet, z: VarSet) -> f64 {
    assert!(
        x.is_disjoint(y) && x.is_disjoint(z) && y.is_disjoint(z),
        "variable groups must be disjoint"
    );
    assert!(!x.is_empty() && !y.is_empty(), "X and Y must be nonempty");
    let (xz, yz, xyz) = (x | z, y | z, x | y | z);
    let p_xz = law.marginal(xz);
    let p_yz = law.marginal(yz);
    let p_z = law.marginal(z);
    let p_xyz = law.marginal(xyz);
    let (s_xz, s_yz, s_z, s_xyz) = (
        law.projection(xz),
        law.projection(yz),
        law.projection(z),
        law.projection(xyz),
    );
    let mut acc = 0.0;
    law.for_each_entry(|c, p| {
        if p > 0.0 {
            let joint = p_xyz[dot(&c, &s_xyz)];
            let ratio = joint * p_z[dot(&c, &s_z)] / (p_xz[dot(&c, &s_xz)] * p_yz[dot(&c, &s_yz)]);
            acc += p * ratio.log2();
        }
    });
    acc
}

/// The three bounds of a policy's rate region, in bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePentagon {
    pub bound_a: f64,
    pub bound_b: f64,
    pub bound_sum: f64,
}

impl RatePentagon {
    /// Checks `0 <= max(A, B) <= C <= A + B` with slack `tol`.
    pub fn check(&self, tol: f64) -> std::result::Result<(), String> {
        let Self {
            bound_a: a,
            bound_b: b,
            bound_sum: c,
        } = *self;
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(format!("non-finite pentagon bound {self:?}"));
        }
        if a < -tol || b < -tol {
            return Err(format!("negative pentagon bound {self:?}"));
        }
        if a.max(b) > c + tol {
            return Err(format!("single-user bound exceeds sum bound {self:?}"));
        }
        if c > a + b + tol {
            return Err(format!("sum bound exceeds A + B {self:?}"));
        }
        Ok(())
    }

    /// Vertices of the closed pentagon, counterclockwise from the origin.
    /// Degenerate pentagons repeat points.
    pub fn vertices(&self) -> [(f64, f64); 5] {
        let c = self.bound_sum.max(0.0);
        let a = self.bound_a.clamp(0.0, c);
        let b = self.bound_b.clamp(0.0, c);
        [
            (0.0, 0.0),
            (a, 0.0),
            (a, (c - a).clamp(0.0, b)),
            ((c - b).clamp(0.0, a), b),
            (0.0, b),
        ]
    }

    /// Whether `(ra, rb)` lies in the closed pentagon (with slack `tol`).
    pub fn contains(&self, ra: f64, rb: f64, tol: f64) -> bool {
        ra >= -tol
            && rb >= -tol
            && ra <= self.bound_a + tol
            && rb <= self.bound_b + tol
            && ra + rb <= self.bound_sum + tol
    }
}

/// Bounds below this are rounding noise and are reported as exactly 0.
pub const ZERO_RATE_TOL: f64 = 1e-13;

fn snap(v: f64) -> f64 {
    if v < ZERO_RATE_TOL {
        0.0
    } else {
        v
    }
}

/// Evaluates the pentagon of `pol` from its materialised joint law.
///
/// Rounding can leave a vanishing mutual information a few ulps away from
/// zero; bounds below [`ZERO_RATE_TOL`] are reported as 0.
pub fn pentagon(spec: &FsMacSpec, q: &StrategyChannel, pol: &TeamPolicy) -> Result<RatePentagon> {
    let law = joint_law(spec, q, pol)?;
    Ok(pentagon_of_law(&law))
}

pub fn pentagon_of_law(law: &JointLaw) -> RatePentagon {
    use VarSet as V;
    RatePentagon {
        bound_a: snap(conditional_mutual_information(law, V::TA, V::Y, V::TB | V::S)),
        bound_b: snap(conditional_mutual_information(law, V::TB, V::Y, V::TA | V::S)),
        bound_sum: snap(conditional_mutual_information(law, V::TA | V::TB, V::Y, V::S)),
    }
}
