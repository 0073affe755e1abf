//! Exact information quantities on small finite alphabets.
//!
//! All logarithms are base 2. Joint tables are dense `Vec<f64>` in row-major
//! order and every quantity is computed by direct summation; nothing is
//! estimated.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

mod bounds;
pub mod random;
pub mod sweep;

pub use bounds::{
    bayes_error, check_contamination, check_fano_positivity, check_foreground_anchor, check_ib_decomposition,
    fano_rhs, AnchorReport, ContaminationReport, FanoReport, FanoStatus, FanoTerm, IbReport,
};

/// Tolerance for "sums to one" and for the exogeneity / balance flags.
pub const PMF_TOLERANCE: f64 = 1e-12;
/// Alphabet size above which sweeps warn.
pub const SOFT_ALPHABET_CAP: usize = 8;

#[inline]
fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

fn check_mass(p: &[f64]) -> Result<()> {
    match p.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        Some(v) => Err(Error::InvalidValue(format!("probability mass {v} is negative or not finite"))),
        None => Ok(()),
    }
}

fn check_sum(p: &[f64]) -> Result<()> {
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > PMF_TOLERANCE {
        return Err(Error::InvalidValue(format!("probabilities sum to {total}")));
    }
    Ok(())
}

/// Shannon entropy in bits, `0 log 0 = 0`. Mass must be nonnegative and sum to one.
pub fn entropy(pmf: &[f64]) -> Result<f64> {
    check_mass(pmf)?;
    check_sum(pmf)?;
    Ok(entropy_unchecked(pmf))
}

/// Entropy of a nonnegative vector, without checks; exact for sub-normalized
/// marginals used in sums of the form `-sum p log p`.
pub(crate) fn entropy_unchecked(pmf: &[f64]) -> f64 {
    -pmf.iter().map(|&p| plogp(p)).sum::<f64>()
}

/// `h(p) = -p log p - (1 - p) log(1 - p)`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidValue(format!("binary entropy argument {p} outside [0, 1]")));
    }
    Ok(-plogp(p) - plogp(1.0 - p))
}

/// Reconstruction slack `C(eps) = eps * log|K| + h(eps)` for `eps` in `[0, 1/2]`.
pub fn slack_c(eps: f64, k: usize) -> Result<f64> {
    if !(0.0..=0.5).contains(&eps) {
        return Err(Error::InvalidValue(format!("slack budget {eps} outside [0, 0.5]")));
    }
    if k == 0 {
        return Err(Error::InvalidValue("mode alphabet is empty".into()));
    }
    Ok(eps * (k as f64).log2() + binary_entropy(eps)?)
}

/// Joint pmf over three finite variables `(A, B, C)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Joint3 {
    dims: [usize; 3],
    p: Vec<f64>,
}

impl Joint3 {
    pub fn new(na: usize, nb: usize, nc: usize, p: Vec<f64>) -> Result<Self> {
        if na == 0 || nb == 0 || nc == 0 {
            return Err(Error::Shape("empty alphabet".into()));
        }
        if p.len() != na * nb * nc {
            return Err(Error::Shape(format!("table has {} entries, expected {}", p.len(), na * nb * nc)));
        }
        check_mass(&p)?;
        check_sum(&p)?;
        Ok(Self { dims: [na, nb, nc], p })
    }

    /// Builds a joint from `fill`, which pushes `(a, b, c, mass)` entries;
    /// repeated cells accumulate. No normalization check.
    pub(crate) fn from_fn(dims: [usize; 3], mut fill: impl FnMut(&mut dyn FnMut(usize, usize, usize, f64))) -> Self {
        let mut p = vec![0.0; dims[0] * dims[1] * dims[2]];
        fill(&mut |a, b, c, m| p[(a * dims[1] + b) * dims[2] + c] += m);
        Self { dims, p }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn table(&self) -> &[f64] {
        &self.p
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.p[(a * self.dims[1] + b) * self.dims[2] + c]
    }

    fn iter(&self) -> impl Iterator<Item = (usize, usize, usize, f64)> + '_ {
        let [_, nb, nc] = self.dims;
        self.p.iter().enumerate().map(move |(i, &m)| (i / (nb * nc), (i / nc) % nb, i % nc, m))
    }

    /// Marginal over the variables selected by `keep` (`[a, b, c]` flags),
    /// flattened in `a, b, c` order.
    pub fn marginal(&self, keep: [bool; 3]) -> Vec<f64> {
        let sizes: Vec<usize> = (0..3).map(|i| if keep[i] { self.dims[i] } else { 1 }).collect();
        let mut out = vec![0.0; sizes.iter().product()];
        for (a, b, c, m) in self.iter() {
            let idx = [a, b, c];
            let sel = |i: usize| if keep[i] { idx[i] } else { 0 };
            out[(sel(0) * sizes[1] + sel(1)) * sizes[2] + sel(2)] += m;
        }
        out
    }

    /// Joint entropy of the selected variables.
    pub fn entropy_of(&self, keep: [bool; 3]) -> f64 {
        entropy_unchecked(&self.marginal(keep))
    }

    /// `I(A; B | C)` by direct summation of
    /// `p(a,b,c) log[p(a,b,c) p(c) / (p(a,c) p(b,c))]`.
    pub fn cond_mutual_info(&self) -> f64 {
        let nc = self.dims[2];
        let pc = self.marginal([false, false, true]);
        let pac = self.marginal([true, false, true]);
        let pbc = self.marginal([false, true, true]);
        let mut acc = 0.0;
        for (a, b, c, m) in self.iter() {
            if m > 0.0 {
                acc += m * (m * pc[c] / (pac[a * nc + c] * pbc[b * nc + c])).log2();
            }
        }
        acc.max(0.0)
    }

    /// `I(A; C)` by direct summation.
    pub fn mutual_info_ac(&self) -> f64 {
        let nc = self.dims[2];
        let pa = self.marginal([true, false, false]);
        let pc = self.marginal([false, false, true]);
        let pac = self.marginal([true, false, true]);
        let mut acc = 0.0;
        for (i, &m) in pac.iter().enumerate() {
            if m > 0.0 {
                acc += m * (m / (pa[i / nc] * pc[i % nc])).log2();
            }
        }
        acc.max(0.0)
    }

    /// `I(A; B, C) = H(A) + H(B, C) - H(A, B, C)`, an entropy path independent
    /// of [`Self::cond_mutual_info`].
    pub fn mutual_info_a_bc(&self) -> f64 {
        (self.entropy_of([true, false, false]) + self.entropy_of([false, true, true]) - self.entropy_of([true, true, true])).max(0.0)
    }

    /// Reorders the variables: output variable `i` is input variable `order[i]`.
    pub fn permute(&self, order: [usize; 3]) -> Joint3 {
        let dims = [self.dims[order[0]], self.dims[order[1]], self.dims[order[2]]];
        Joint3::from_fn(dims, |push| {
            for (a, b, c, m) in self.iter() {
                let v = [a, b, c];
                push(v[order[0]], v[order[1]], v[order[2]], m);
            }
        })
    }
}

/// Joint pmf `p(s, k, x)` over state, corruption mode and observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FiniteJointData", into = "FiniteJointData")]
pub struct FiniteJoint {
    joint: Joint3,
    balanced: bool,
    exogenous: bool,
}

#[derive(Serialize, Deserialize)]
struct FiniteJointData {
    s: usize,
    k: usize,
    x: usize,
    p: Vec<f64>,
}

impl TryFrom<FiniteJointData> for FiniteJoint {
    type Error = Error;

    fn try_from(d: FiniteJointData) -> Result<Self> {
        FiniteJoint::new(d.s, d.k, d.x, d.p)
    }
}

impl From<FiniteJoint> for FiniteJointData {
    fn from(j: FiniteJoint) -> Self {
        let [s, k, x] = j.joint.dims;
        FiniteJointData { s, k, x, p: j.joint.p }
    }
}

impl FiniteJoint {
    /// Validates the table and records whether the balance (`p(k) = 1/|K|`)
    /// and exogeneity (`p(s,k) = p(s) p(k)`) conditions hold.
    pub fn new(ns: usize, nk: usize, nx: usize, p: Vec<f64>) -> Result<Self> {
        let joint = Joint3::new(ns, nk, nx, p)?;
        let pk = joint.marginal([false, true, false]);
        let ps = joint.marginal([true, false, false]);
        let psk = joint.marginal([true, true, false]);
        let balanced = pk.iter().all(|&v| (v - 1.0 / nk as f64).abs() <= PMF_TOLERANCE);
        let exogenous = (0..ns).all(|s| (0..nk).all(|k| (psk[s * nk + k] - ps[s] * pk[k]).abs() <= PMF_TOLERANCE));
        Ok(Self { joint, balanced, exogenous })
    }

    pub fn ns(&self) -> usize {
        self.joint.dims[0]
    }

    pub fn nk(&self) -> usize {
        self.joint.dims[1]
    }

    pub fn nx(&self) -> usize {
        self.joint.dims[2]
    }

    pub fn joint(&self) -> &Joint3 {
        &self.joint
    }

    pub fn p(&self, s: usize, k: usize, x: usize) -> f64 {
        self.joint.get(s, k, x)
    }

    pub fn is_balanced(&self) -> bool {
        self.balanced
    }

    pub fn is_exogenous(&self) -> bool {
        self.exogenous
    }

    pub fn p_s(&self) -> Vec<f64> {
        self.joint.marginal([true, false, false])
    }

    /// Fails unless both modelling assumptions hold.
    pub fn require_assumptions(&self) -> Result<()> {
        if !self.exogenous {
            return Err(Error::Assumption("K is not independent of S".into()));
        }
        if !self.balanced {
            return Err(Error::Assumption("mode marginal is not uniform".into()));
        }
        Ok(())
    }

    /// `I(X; K | S)`.
    pub fn i_xk_given_s(&self) -> f64 {
        self.joint.permute([2, 1, 0]).cond_mutual_info()
    }

    /// `p(s, k, m(x))` for a map `m` on the observation alphabet.
    pub fn push_forward(&self, map: &[usize], n_out: usize) -> Joint3 {
        let [ns, nk, _] = self.joint.dims;
        Joint3::from_fn([ns, nk, n_out], |push| {
            for (s, k, x, m) in self.joint.iter() {
                push(s, k, map[x], m);
            }
        })
    }
}

/// `I(V; K | S)` for a joint laid out as `(s, k, v)`.
pub fn i_vk_given_s(skv: &Joint3) -> f64 {
    skv.permute([2, 1, 0]).cond_mutual_info()
}

/// Deterministic encoder `X -> Z` and optional decoder `Z -> X̂`, with `X̂`
/// in the alphabet of `X`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderMap {
    pub encoder: Vec<usize>,
    pub nz: usize,
    pub decoder: Option<Vec<usize>>,
}

impl EncoderMap {
    pub fn new(encoder: Vec<usize>, nz: usize, decoder: Option<Vec<usize>>) -> Result<Self> {
        if let Some(z) = encoder.iter().find(|&&z| z >= nz) {
            return Err(Error::InvalidValue(format!("encoder output {z} outside alphabet of size {nz}")));
        }
        if let Some(d) = &decoder {
            if d.len() != nz {
                return Err(Error::Shape(format!("decoder defined on {} codes, expected {nz}", d.len())));
            }
            if let Some(x) = d.iter().find(|&&x| x >= encoder.len()) {
                return Err(Error::InvalidValue(format!("decoder output {x} outside alphabet of size {}", encoder.len())));
            }
        }
        Ok(Self { encoder, nz, decoder })
    }

    pub fn identity(nx: usize) -> Self {
        Self { encoder: (0..nx).collect(), nz: nx, decoder: Some((0..nx).collect()) }
    }

    pub fn constant(nx: usize) -> Self {
        Self { encoder: vec![0; nx], nz: 1, decoder: Some(vec![0]) }
    }

    pub fn nx(&self) -> usize {
        self.encoder.len()
    }

    /// `X̂ = g(f(x))`; identity when no decoder is given and `Z = X`.
    pub fn reconstruct(&self, x: usize) -> usize {
        let z = self.encoder[x];
        match &self.decoder {
            Some(d) => d[z],
            None => z.min(self.nx() - 1),
        }
    }
}

/// Possibly stochastic encoder `p(z | x)`, one row per `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub rows: Vec<Vec<f64>>,
}

impl Channel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let nz = rows.first().map_or(0, Vec::len);
        if nz == 0 {
            return Err(Error::Shape("channel has no outputs".into()));
        }
        for row in &rows {
            if row.len() != nz {
                return Err(Error::Shape("ragged channel rows".into()));
            }
            check_mass(row)?;
            check_sum(row)?;
        }
        Ok(Self { rows })
    }

    pub fn deterministic(map: &[usize], nz: usize) -> Self {
        Self {
            rows: map
                .iter()
                .map(|&z| {
                    let mut r = vec![0.0; nz];
                    r[z] = 1.0;
                    r
                })
                .collect(),
        }
    }

    pub fn nz(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    /// The underlying map when every row is a point mass.
    pub fn as_map(&self) -> Option<Vec<usize>> {
        self.rows.iter().map(|r| r.iter().position(|&p| p == 1.0).filter(|_| r.iter().filter(|&&p| p != 0.0).count() == 1)).collect()
    }
}

/// Distortion table `d(x, x̂)` in `[0, 1]` with `1{x != x̂} <= d(x, x̂)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionSpec {
    n: usize,
    d: Vec<f64>,
}

impl DistortionSpec {
    pub fn new(n: usize, d: Vec<f64>) -> Result<Self> {
        if d.len() != n * n {
            return Err(Error::Shape(format!("distortion table has {} entries, expected {}", d.len(), n * n)));
        }
        for x in 0..n {
            for xh in 0..n {
                let v = d[x * n + xh];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidValue(format!("d({x}, {xh}) = {v} outside [0, 1]")));
                }
                if x != xh && v < 1.0 {
                    return Err(Error::InvalidValue(format!("d({x}, {xh}) = {v} violates the mismatch property")));
                }
            }
        }
        Ok(Self { n, d })
    }

    /// Hamming distortion `1{x != x̂}`.
    pub fn hamming(n: usize) -> Self {
        Self { n, d: (0..n * n).map(|i| if i / n == i % n { 0.0 } else { 1.0 }).collect() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, x: usize, xh: usize) -> f64 {
        self.d[x * self.n + xh]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&[0.5, 0.5]).unwrap(), 1.0);
        assert_eq!(entropy(&[1.0, 0.0, 0.0]).unwrap(), 0.0);
        let u7 = vec![1.0 / 7.0; 7];
        assert!((entropy(&u7).unwrap() - 2.807_354_922_057_604).abs() < 1e-12);
        assert!(entropy(&[1.2, -0.2]).is_err());
        assert!(entropy(&[0.3, 0.3]).is_err());
    }

    #[test]
    fn slack_examples() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert!(binary_entropy(1.5).is_err());
        assert!(slack_c(1e-9, 7).unwrap() < 1e-6);
        assert_eq!(slack_c(0.0, 7).unwrap(), 0.0);
        assert!((slack_c(0.5, 7).unwrap() - 2.403_677_461_028_802).abs() < 1e-12);
        assert!(slack_c(0.6, 7).is_err());
        assert!(slack_c(-0.1, 7).is_err());
    }

    #[test]
    fn cmi_examples() {
        // A = B uniform on 4, C independent uniform on 2.
        let j = Joint3::from_fn([4, 4, 2], |push| {
            for a in 0..4 {
                for c in 0..2 {
                    push(a, a, c, 1.0 / 8.0);
                }
            }
        });
        assert!((j.cond_mutual_info() - 2.0).abs() < 1e-12);
        // A and B independent given C.
        let j = Joint3::from_fn([2, 3, 2], |push| {
            let pa = [[0.2, 0.8], [0.6, 0.4]];
            let pb = [[0.1, 0.3, 0.6], [0.5, 0.25, 0.25]];
            for c in 0..2 {
                for a in 0..2 {
                    for b in 0..3 {
                        push(a, b, c, 0.5 * pa[c][a] * pb[c][b]);
                    }
                }
            }
        });
        assert!(j.cond_mutual_info().abs() < 1e-12);
    }

    #[test]
    fn joint_validation() {
        assert!(Joint3::new(1, 1, 2, vec![0.5, 0.5]).is_ok());
        assert!(Joint3::new(1, 1, 2, vec![0.5]).is_err());
        assert!(Joint3::new(1, 1, 2, vec![0.7, 0.5]).is_err());
        assert!(Joint3::new(0, 1, 2, vec![]).is_err());
    }

    #[test]
    fn flags() {
        // K uniform and independent of S.
        let j = FiniteJoint::new(2, 2, 1, vec![0.15, 0.15, 0.35, 0.35]).unwrap();
        assert!(j.is_balanced() && j.is_exogenous());
        let j = FiniteJoint::new(2, 2, 1, vec![0.3, 0.2, 0.2, 0.3]).unwrap();
        assert!(j.is_balanced() && !j.is_exogenous());
        let j = FiniteJoint::new(1, 2, 1, vec![0.7, 0.3]).unwrap();
        assert!(!j.is_balanced() && j.is_exogenous());
        assert!(j.require_assumptions().is_err());
    }

    #[test]
    fn distortion_mismatch_property() {
        assert!(DistortionSpec::new(2, vec![0.0, 1.0, 1.0, 0.2]).is_ok());
        assert!(DistortionSpec::new(2, vec![0.0, 0.9, 1.0, 0.0]).is_err());
        assert!(DistortionSpec::new(2, vec![0.0, 1.0, 1.0]).is_err());
        let h = DistortionSpec::hamming(3);
        assert_eq!(h.get(1, 1), 0.0);
        assert_eq!(h.get(1, 2), 1.0);
    }

    #[test]
    fn channel_map() {
        let c = Channel::deterministic(&[1, 0, 1], 2);
        assert_eq!(c.as_map(), Some(vec![1, 0, 1]));
        let s = Channel::new(vec![vec![0.5, 0.5], vec![1.0, 0.0]]).unwrap();
        assert_eq!(s.as_map(), None);
        assert!(Channel::new(vec![vec![0.5, 0.4]]).is_err());
    }

    #[test]
    fn encoder_validation() {
        assert!(EncoderMap::new(vec![0, 2], 2, None).is_err());
        assert!(EncoderMap::new(vec![0, 1], 2, Some(vec![0])).is_err());
        assert!(EncoderMap::new(vec![0, 1], 2, Some(vec![0, 5])).is_err());
        let e = EncoderMap::new(vec![1, 0], 2, Some(vec![1, 0])).unwrap();
        assert_eq!(e.reconstruct(0), 0);
    }
}
