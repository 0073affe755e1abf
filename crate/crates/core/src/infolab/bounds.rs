//! The contamination bound, the conditional Fano step, the foreground anchor
//! and the bottleneck decomposition, each as an exact check with a report.

use serde::{Deserialize, Serialize};

use super::{binary_entropy, check_mass, check_sum, entropy_unchecked, i_vk_given_s, slack_c, Channel, DistortionSpec, EncoderMap, FiniteJoint, Joint3};
use crate::error::{Error, Result};

/// Numeric slack below which a bound margin counts as a violation.
pub const VIOLATION_SLACK: f64 = 1e-9;
/// Tolerance for identities that hold with equality.
pub const IDENTITY_TOLERANCE: f64 = 1e-10;
/// Tolerance for quantities that must vanish exactly.
pub const ZERO_TOLERANCE: f64 = 1e-12;

/// Conditional Bayes error of the best mode predictor from `X` given `S = s`:
/// `1 - sum_x max_k p(k, x | s)`.
pub fn bayes_error(joint: &FiniteJoint, s: usize) -> Result<f64> {
    if s >= joint.ns() {
        return Err(Error::InvalidValue(format!("state {s} outside alphabet of size {}", joint.ns())));
    }
    let ps: f64 = (0..joint.nk()).flat_map(|k| (0..joint.nx()).map(move |x| (k, x))).map(|(k, x)| joint.p(s, k, x)).sum();
    if ps <= 0.0 {
        return Err(Error::InvalidValue(format!("state {s} has zero probability")));
    }
    let hit: f64 = (0..joint.nx())
        .map(|x| (0..joint.nk()).map(|k| joint.p(s, k, x)).fold(0.0, f64::max))
        .sum();
    Ok((1.0 - hit / ps).max(0.0))
}

/// `log|K| - h(Pe) - Pe log(|K| - 1)`.
pub fn fano_rhs(k: usize, pe: f64) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidValue(format!("Fano bound needs at least two modes, got {k}")));
    }
    let k = k as f64;
    Ok(k.log2() - binary_entropy(pe)? - pe * (k - 1.0).log2())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContaminationReport {
    pub i_xk_given_s: f64,
    pub i_zk_given_s: f64,
    pub i_xhatk_given_s: f64,
    pub epsilon: f64,
    /// Slack at `min(epsilon, 1/2)`.
    pub c_eps: f64,
    /// `I(Z;K|S) - (I(X;K|S) - C)`.
    pub margin: f64,
    /// The bound is asserted when `epsilon <= 1/2`, or when the clamped slack
    /// already covers `log|K|`, the largest possible `I(X;K|S)`.
    pub claimed: bool,
    pub violation: bool,
    pub dpi_holds: bool,
    /// `Pr(X != X̂ | S = s)` and `E[d(X, X̂) | S = s]` per state.
    pub mismatch_per_s: Vec<(f64, f64)>,
    pub mismatch_holds: bool,
}

pub fn check_contamination(joint: &FiniteJoint, maps: &EncoderMap, distortion: &DistortionSpec) -> Result<ContaminationReport> {
    joint.require_assumptions()?;
    let nx = joint.nx();
    if maps.nx() != nx || distortion.n() != nx {
        return Err(Error::Shape(format!(
            "observation alphabet {nx}, encoder domain {}, distortion table {}",
            maps.nx(),
            distortion.n()
        )));
    }
    let xhat: Vec<usize> = (0..nx).map(|x| maps.reconstruct(x)).collect();

    let i_x = joint.i_xk_given_s();
    let i_z = i_vk_given_s(&joint.push_forward(&maps.encoder, maps.nz));
    let i_xhat = i_vk_given_s(&joint.push_forward(&xhat, nx));

    let mut epsilon = 0.0;
    let mut mismatch_per_s = Vec::with_capacity(joint.ns());
    for s in 0..joint.ns() {
        let (mut ps, mut miss, mut dist) = (0.0, 0.0, 0.0);
        for k in 0..joint.nk() {
            for (x, &xh) in xhat.iter().enumerate() {
                let m = joint.p(s, k, x);
                ps += m;
                dist += m * distortion.get(x, xh);
                if x != xh {
                    miss += m;
                }
            }
        }
        epsilon += dist;
        mismatch_per_s.push(if ps > 0.0 { (miss / ps, dist / ps) } else { (0.0, 0.0) });
    }
    let mismatch_holds = mismatch_per_s.iter().all(|&(p, d)| p <= d + ZERO_TOLERANCE);

    let c_eps = slack_c(epsilon.min(0.5), joint.nk())?;
    let margin = i_z - (i_x - c_eps);
    let claimed = epsilon <= 0.5 || c_eps >= (joint.nk() as f64).log2();
    Ok(ContaminationReport {
        i_xk_given_s: i_x,
        i_zk_given_s: i_z,
        i_xhatk_given_s: i_xhat,
        epsilon,
        c_eps,
        margin,
        claimed,
        violation: claimed && margin < -VIOLATION_SLACK,
        dpi_holds: i_x + IDENTITY_TOLERANCE >= i_z && i_z + IDENTITY_TOLERANCE >= i_xhat,
        mismatch_per_s,
        mismatch_holds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FanoTerm {
    pub s: usize,
    pub p_s: f64,
    pub bayes_error: f64,
    /// `I(X; K | S = s)`.
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FanoStatus {
    Identifiable,
    IdentifiabilityFails,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FanoReport {
    pub status: FanoStatus,
    pub terms: Vec<FanoTerm>,
    pub i_xk_given_s: f64,
    /// Every per-state margin is nonnegative up to [`VIOLATION_SLACK`].
    pub inequality_holds: bool,
    /// Under identifiability the averaged information is strictly positive.
    pub positive: bool,
}

impl FanoReport {
    pub fn violation(&self) -> bool {
        !self.inequality_holds || (self.status == FanoStatus::Identifiable && !self.positive)
    }
}

/// Per-state Fano lower bound on `I(X; K | S = s)`. States of zero mass are skipped.
pub fn check_fano_positivity(joint: &FiniteJoint) -> Result<FanoReport> {
    joint.require_assumptions()?;
    let nk = joint.nk();
    let floor = 1.0 - 1.0 / nk as f64;
    let ps_all = joint.p_s();
    let mut terms = Vec::new();
    for (s, &ps) in ps_all.iter().enumerate() {
        if ps <= 0.0 {
            continue;
        }
        let pe = bayes_error(joint, s)?;
        let cond: Vec<f64> = (0..nk).flat_map(|k| (0..joint.nx()).map(move |x| (k, x))).map(|(k, x)| joint.p(s, k, x) / ps).collect();
        let lhs = mutual_info_2d(&cond, nk, joint.nx());
        let rhs = fano_rhs(nk, pe.min(1.0))?;
        terms.push(FanoTerm { s, p_s: ps, bayes_error: pe, lhs, rhs, margin: lhs - rhs });
    }
    let identifiable = terms.iter().all(|t| t.bayes_error < floor - ZERO_TOLERANCE);
    let i_xk_given_s = terms.iter().map(|t| t.p_s * t.lhs).sum::<f64>();
    Ok(FanoReport {
        status: if identifiable { FanoStatus::Identifiable } else { FanoStatus::IdentifiabilityFails },
        inequality_holds: terms.iter().all(|t| t.margin >= -VIOLATION_SLACK),
        positive: i_xk_given_s > 0.0,
        terms,
        i_xk_given_s,
    })
}

/// `I(U; V)` for a normalized `nu x nv` table.
fn mutual_info_2d(p: &[f64], nu: usize, nv: usize) -> f64 {
    let pu: Vec<f64> = (0..nu).map(|u| p[u * nv..(u + 1) * nv].iter().sum()).collect();
    let pv: Vec<f64> = (0..nv).map(|v| (0..nu).map(|u| p[u * nv + v]).sum()).collect();
    let mut acc = 0.0;
    for u in 0..nu {
        for v in 0..nv {
            let m = p[u * nv + v];
            if m > 0.0 {
                acc += m * (m / (pu[u] * pv[v])).log2();
            }
        }
    }
    acc.max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorReport {
    pub i_fk_given_y: f64,
    pub h_y: f64,
    /// `H(Y | F)`, the task information the foreground leaves out.
    pub eta: f64,
    pub i_fy: f64,
    pub invariance_holds: bool,
    /// `|I(F;Y) - (H(Y) - eta)|`.
    pub identity_residual: f64,
}

/// Foreground `F = h1(S)` and task variable `Y = h2(S)`, with the mode `K`
/// drawn independently of `S`.
pub fn check_foreground_anchor(
    p_s: &[f64],
    h1: &[usize],
    nf: usize,
    h2: &[usize],
    ny: usize,
    p_k: &[f64],
) -> Result<AnchorReport> {
    for pmf in [p_s, p_k] {
        check_mass(pmf)?;
        check_sum(pmf)?;
    }
    if h1.len() != p_s.len() || h2.len() != p_s.len() {
        return Err(Error::Shape("maps must be defined on the whole state alphabet".into()));
    }
    if h1.iter().any(|&f| f >= nf) || h2.iter().any(|&y| y >= ny) {
        return Err(Error::InvalidValue("map output outside its alphabet".into()));
    }
    let fky = Joint3::from_fn([nf, p_k.len(), ny], |push| {
        for (s, &ps) in p_s.iter().enumerate() {
            for (k, &pk) in p_k.iter().enumerate() {
                push(h1[s], k, h2[s], ps * pk);
            }
        }
    });
    let i_fk_given_y = fky.cond_mutual_info();
    let h_y = fky.entropy_of([false, false, true]);
    let eta = fky.entropy_of([true, false, true]) - fky.entropy_of([true, false, false]);
    let i_fy = fky.mutual_info_ac();
    Ok(AnchorReport {
        i_fk_given_y,
        h_y,
        eta,
        i_fy,
        invariance_holds: i_fk_given_y <= ZERO_TOLERANCE,
        identity_residual: (i_fy - (h_y - eta)).abs(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IbReport {
    pub i_zx: f64,
    pub i_zy: f64,
    pub i_zx_given_y: f64,
    pub h_z_given_y: f64,
    pub i_zk_given_y: f64,
    /// `I(Z;X) - I(Z;Y) - I(Z;X|Y)`.
    pub chain_residual: f64,
    pub holds: bool,
}

/// Checks `I(Z;X) = I(Z;Y) + I(Z;X|Y)` and `I(Z;X|Y) = H(Z|Y) >= I(Z;K|Y)`
/// for a joint over `(X, Y, K)` and a deterministic encoder of `X`. Use a
/// single-letter `K` alphabet when there is no mode variable.
pub fn check_ib_decomposition(xyk: &Joint3, encoder: &Channel) -> Result<IbReport> {
    let map = encoder
        .as_map()
        .ok_or_else(|| Error::InvalidValue("the decomposition requires a deterministic encoder".into()))?;
    let [nx, ny, nk] = xyk.dims();
    if map.len() != nx {
        return Err(Error::Shape(format!("encoder defined on {} inputs, expected {nx}", map.len())));
    }
    let nz = encoder.nz();
    let mut zxy = vec![0.0; nz * nx * ny];
    let mut zky = vec![0.0; nz * nk * ny];
    for x in 0..nx {
        for y in 0..ny {
            for k in 0..nk {
                let m = xyk.get(x, y, k);
                zxy[(map[x] * nx + x) * ny + y] += m;
                zky[(map[x] * nk + k) * ny + y] += m;
            }
        }
    }
    let zxy = Joint3::from_fn([nz, nx, ny], |push| {
        for (i, &m) in zxy.iter().enumerate() {
            push(i / (nx * ny), (i / ny) % nx, i % ny, m);
        }
    });
    let zky = Joint3::from_fn([nz, nk, ny], |push| {
        for (i, &m) in zky.iter().enumerate() {
            push(i / (nk * ny), (i / ny) % nk, i % ny, m);
        }
    });
    let i_zx_given_y = zxy.cond_mutual_info();
    let i_zy = zxy.mutual_info_ac();
    let i_zx = zxy.permute([0, 2, 1]).mutual_info_ac();
    let h_z_given_y = zxy.entropy_of([true, false, true]) - entropy_unchecked(&zxy.marginal([false, false, true]));
    let i_zk_given_y = zky.cond_mutual_info();
    let chain_residual = i_zx - i_zy - i_zx_given_y;
    let holds = chain_residual.abs() <= IDENTITY_TOLERANCE
        && (i_zx_given_y - h_z_given_y).abs() <= IDENTITY_TOLERANCE
        && i_zk_given_y <= h_z_given_y + IDENTITY_TOLERANCE;
    Ok(IbReport { i_zx, i_zy, i_zx_given_y, h_z_given_y, i_zk_given_y, chain_residual, holds })
}
