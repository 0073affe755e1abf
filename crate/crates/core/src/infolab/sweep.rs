//! Randomized sweeps over generated instances.
//!
//! Instance `i` of a sweep seeded with `seed` is built from the substream
//! `[THEORY, i]`, so any instance can be regenerated on its own and sweeps
//! can run in parallel without changing results.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::random::{dirichlet, random_encoder, random_joint, random_map, size_between};
use super::{
    check_contamination, check_fano_positivity, check_foreground_anchor, check_ib_decomposition, Channel, DistortionSpec,
    EncoderMap, FanoStatus, FiniteJoint, SOFT_ALPHABET_CAP,
};
use crate::error::{Error, Result};
use crate::rng::{domain, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderKind {
    Random,
    Identity,
    Constant,
}

impl FromStr for EncoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Self::Random),
            "identity" => Ok(Self::Identity),
            "constant" => Ok(Self::Constant),
            _ => Err(Error::InvalidValue(format!("unknown encoder kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Contamination,
    Fano,
    Anchor,
    Ib,
}

impl Check {
    pub const ALL: [Check; 4] = [Check::Contamination, Check::Fano, Check::Anchor, Check::Ib];
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Check::Contamination => "contamination",
            Check::Fano => "fano",
            Check::Anchor => "anchor",
            Check::Ib => "ib",
        })
    }
}

impl FromStr for Check {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Check::ALL
            .into_iter()
            .find(|c| c.to_string() == s)
            .ok_or_else(|| Error::InvalidValue(format!("unknown check {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub instances: u64,
    pub max_alphabet: usize,
    pub seed: u64,
    pub encoder: EncoderKind,
    /// Checks to run; empty means all.
    pub checks: Vec<Check>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { instances: 1000, max_alphabet: 4, seed: 0, encoder: EncoderKind::Random, checks: Vec::new() }
    }
}

impl SweepOptions {
    pub fn validate(&self) -> Result<()> {
        if self.instances == 0 {
            return Err(Error::InvalidValue("need at least one instance".into()));
        }
        if self.max_alphabet < 2 {
            return Err(Error::InvalidValue("max alphabet must be at least 2".into()));
        }
        if self.max_alphabet > SOFT_ALPHABET_CAP {
            log::warn!("alphabets up to {} exceed the soft cap of {SOFT_ALPHABET_CAP}; sums grow quickly", self.max_alphabet);
        }
        Ok(())
    }
}

/// Foreground-anchor construction: `F = h1(S)`, `Y = h2(S)`, `K ~ p_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorInstance {
    pub p_s: Vec<f64>,
    pub h1: Vec<usize>,
    pub nf: usize,
    pub h2: Vec<usize>,
    pub ny: usize,
    pub p_k: Vec<f64>,
}

/// Everything one sweep entry evaluates; serializable for replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub instance_id: u64,
    pub seed: u64,
    pub joint: FiniteJoint,
    pub maps: EncoderMap,
    pub distortion: DistortionSpec,
    pub anchor: AnchorInstance,
    /// Deterministic encoder for the bottleneck check, on `X`.
    pub ib_encoder: Vec<usize>,
    pub ib_nz: usize,
}

/// Regenerates instance `id` of the sweep.
pub fn make_instance(opts: &SweepOptions, id: u64) -> Result<Instance> {
    let mut rng = RngStream::substream(opts.seed, &[domain::THEORY, id]);
    let m = opts.max_alphabet;
    let ns = size_between(&mut rng, 1, m);
    let nk = size_between(&mut rng, 2, m);
    let nx = size_between(&mut rng, 1, m);
    let joint = random_joint(&mut rng, ns, nk, nx)?;

    let random_maps = random_encoder(&mut rng, nx);
    let maps = match opts.encoder {
        EncoderKind::Random => random_maps,
        EncoderKind::Identity => EncoderMap::identity(nx),
        EncoderKind::Constant => EncoderMap::constant(nx),
    };

    // Half the random-encoder instances use a non-zero diagonal, which still
    // satisfies the mismatch property. Fixed encoders keep Hamming distortion
    // so a perfect reconstruction has zero distortion.
    let mut table = DistortionSpec::hamming(nx);
    let diag: Vec<f64> = (0..nx).map(|_| rng.uniform(0.0, 0.3)).collect();
    if rng.bernoulli(0.5) && opts.encoder == EncoderKind::Random {
        let d: Vec<f64> = (0..nx * nx).map(|i| if i / nx == i % nx { diag[i / nx] } else { 1.0 }).collect();
        table = DistortionSpec::new(nx, d)?;
    }

    let nf = size_between(&mut rng, 1, ns);
    let ny = size_between(&mut rng, 1, ns);
    let anchor = AnchorInstance {
        p_s: joint.p_s(),
        h1: random_map(&mut rng, ns, nf),
        nf,
        h2: random_map(&mut rng, ns, ny),
        ny,
        p_k: dirichlet(&mut rng, nk),
    };

    let ib_nz = size_between(&mut rng, 1, nx);
    let ib_encoder = random_map(&mut rng, nx, ib_nz);
    Ok(Instance { instance_id: id, seed: opts.seed, joint, maps, distortion: table, anchor, ib_encoder, ib_nz })
}

/// One JSONL line of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceReport {
    pub instance_id: u64,
    pub alphabet: [usize; 3],
    #[serde(rename = "I_XKgS", skip_serializing_if = "Option::is_none", default)]
    pub i_xk_given_s: Option<f64>,
    #[serde(rename = "I_ZKgS", skip_serializing_if = "Option::is_none", default)]
    pub i_zk_given_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub epsilon: Option<f64>,
    #[serde(rename = "C_eps", skip_serializing_if = "Option::is_none", default)]
    pub c_eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fano_margin_per_s: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fano_status: Option<FanoStatus>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub anchor_i_fk_given_y: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub anchor_eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ib_chain_residual: Option<f64>,
    /// Names of the failed checks.
    pub violations: Vec<String>,
}

impl InstanceReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn evaluate(inst: &Instance, checks: &[Check]) -> Result<InstanceReport> {
    let runs = |c| checks.is_empty() || checks.contains(&c);
    let j = &inst.joint;
    let mut r = InstanceReport {
        instance_id: inst.instance_id,
        alphabet: [j.ns(), j.nk(), j.nx()],
        i_xk_given_s: None,
        i_zk_given_s: None,
        epsilon: None,
        c_eps: None,
        margin: None,
        fano_margin_per_s: None,
        fano_status: None,
        anchor_i_fk_given_y: None,
        anchor_eta: None,
        ib_chain_residual: None,
        violations: Vec::new(),
    };
    if runs(Check::Contamination) {
        let c = check_contamination(j, &inst.maps, &inst.distortion)?;
        if c.violation {
            r.violations.push("contamination".into());
        }
        if !c.dpi_holds {
            r.violations.push("dpi".into());
        }
        if !c.mismatch_holds {
            r.violations.push("mismatch".into());
        }
        r.i_xk_given_s = Some(c.i_xk_given_s);
        r.i_zk_given_s = Some(c.i_zk_given_s);
        r.epsilon = Some(c.epsilon);
        r.c_eps = Some(c.c_eps);
        r.margin = Some(c.margin);
    }
    if runs(Check::Fano) {
        let f = check_fano_positivity(j)?;
        if f.violation() {
            r.violations.push("fano".into());
        }
        r.fano_margin_per_s = Some(f.terms.iter().map(|t| t.margin).collect());
        r.fano_status = Some(f.status);
    }
    if runs(Check::Anchor) {
        let a = &inst.anchor;
        let rep = check_foreground_anchor(&a.p_s, &a.h1, a.nf, &a.h2, a.ny, &a.p_k)?;
        if !rep.invariance_holds || rep.identity_residual > super::bounds::IDENTITY_TOLERANCE {
            r.violations.push("anchor".into());
        }
        r.anchor_i_fk_given_y = Some(rep.i_fk_given_y);
        r.anchor_eta = Some(rep.eta);
    }
    if runs(Check::Ib) {
        // Joint over (X, S, K): the state plays the task variable.
        let xsk = j.joint().permute([2, 0, 1]);
        let rep = check_ib_decomposition(&xsk, &Channel::deterministic(&inst.ib_encoder, inst.ib_nz))?;
        if !rep.holds {
            r.violations.push("ib".into());
        }
        r.ib_chain_residual = Some(rep.chain_residual);
    }
    Ok(r)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub instances: u64,
    pub failing_instances: u64,
    pub contamination_violations: u64,
    pub fano_violations: u64,
    pub anchor_violations: u64,
    pub ib_violations: u64,
    pub dpi_violations: u64,
    pub mismatch_violations: u64,
    pub identifiability_fails: u64,
}

impl SweepSummary {
    pub fn from_reports(reports: &[InstanceReport]) -> Self {
        let count = |name: &str| reports.iter().filter(|r| r.violations.iter().any(|v| v == name)).count() as u64;
        Self {
            instances: reports.len() as u64,
            failing_instances: reports.iter().filter(|r| !r.ok()).count() as u64,
            contamination_violations: count("contamination"),
            fano_violations: count("fano"),
            anchor_violations: count("anchor"),
            ib_violations: count("ib"),
            dpi_violations: count("dpi"),
            mismatch_violations: count("mismatch"),
            identifiability_fails: reports.iter().filter(|r| r.fano_status == Some(FanoStatus::IdentifiabilityFails)).count() as u64,
        }
    }
}

/// Runs every instance on the current rayon pool; reports come back in
/// instance order.
pub fn run_sweep(opts: &SweepOptions) -> Result<(Vec<(Instance, InstanceReport)>, SweepSummary)> {
    opts.validate()?;
    let out: Vec<(Instance, InstanceReport)> = (0..opts.instances)
        .into_par_iter()
        .map(|id| {
            let inst = make_instance(opts, id)?;
            let rep = evaluate(&inst, &opts.checks)?;
            Ok((inst, rep))
        })
        .collect::<Result<_>>()?;
    let reports: Vec<InstanceReport> = out.iter().map(|(_, r)| r.clone()).collect();
    let summary = SweepSummary::from_reports(&reports);
    Ok((out, summary))
}
