use degrade_core::infolab::{
    bayes_error, check_contamination, check_fano_positivity, check_foreground_anchor, check_ib_decomposition, fano_rhs,
};
use degrade_core::infolab::random::{dirichlet, random_encoder, random_joint, random_joint3, random_map, size_between};
use degrade_core::infolab::sweep::{make_instance, run_sweep, EncoderKind, SweepOptions};
use degrade_core::infolab::{Channel, DistortionSpec, EncoderMap, FiniteJoint, Joint3};
use degrade_core::RngStream;
use proptest::prelude::*;

/// `I(A;B|C)` straight from `sum p(a,b,c) log p(a,b,c) p(c) / (p(a,c) p(b,c))`.
fn cmi_oracle(t: &Joint3) -> f64 {
    let [na, nb, nc] = t.dims();
    let mut pac = vec![0.0; na * nc];
    let mut pbc = vec![0.0; nb * nc];
    let mut pc = vec![0.0; nc];
    for a in 0..na {
        for b in 0..nb {
            for c in 0..nc {
                let m = t.get(a, b, c);
                pac[a * nc + c] += m;
                pbc[b * nc + c] += m;
                pc[c] += m;
            }
        }
    }
    let mut acc = 0.0;
    for a in 0..na {
        for b in 0..nb {
            for c in 0..nc {
                let m = t.get(a, b, c);
                if m > 0.0 {
                    acc += m * (m * pc[c] / (pac[a * nc + c] * pbc[b * nc + c])).log2();
                }
            }
        }
    }
    acc
}

/// `I(X;K|S)` for a `(s, k, x)` joint.
fn ixk_s(j: &FiniteJoint) -> f64 {
    cmi_oracle(&j.joint().permute([2, 1, 0]))
}

/// Every predictor `g: X -> K`, the best one's error given `S = s`.
fn brute_force_bayes_error(j: &FiniteJoint, s: usize) -> f64 {
    let (nk, nx) = (j.nk(), j.nx());
    let ps: f64 = (0..nk).flat_map(|k| (0..nx).map(move |x| (k, x))).map(|(k, x)| j.p(s, k, x)).sum();
    let mut best = 0.0f64;
    for code in 0..nk.pow(nx as u32) {
        let mut g = code;
        let mut hit = 0.0;
        for x in 0..nx {
            hit += j.p(s, g % nk, x);
            g /= nk;
        }
        best = best.max(hit);
    }
    (1.0 - best / ps).max(0.0)
}

fn joint_strategy() -> impl Strategy<Value = FiniteJoint> {
    (any::<u64>(), 1usize..=4, 2usize..=4, 1usize..=4)
        .prop_map(|(seed, ns, nk, nx)| random_joint(&mut RngStream::new(seed), ns, nk, nx).unwrap())
}

#[test]
fn contamination_sweep_has_no_violations() {
    let (out, summary) = run_sweep(&SweepOptions::default()).unwrap();
    assert_eq!(summary.instances, 1000);
    assert_eq!(summary.contamination_violations, 0);
    assert_eq!(summary.dpi_violations, 0);
    assert_eq!(summary.mismatch_violations, 0);
    for (inst, rep) in &out {
        let [ns, nk, nx] = rep.alphabet;
        assert!(ns <= 4 && (2..=4).contains(&nk) && nx <= 4);
        assert!(inst.joint.is_balanced() && inst.joint.is_exogenous());
        assert!(rep.margin.unwrap() >= -1e-9, "instance {}", rep.instance_id);
        assert!((rep.i_xk_given_s.unwrap() - ixk_s(&inst.joint)).abs() <= 1e-10);
    }
}

#[test]
fn identity_encoder_margin_is_exactly_zero() {
    let opts = SweepOptions { encoder: EncoderKind::Identity, ..SweepOptions::default() };
    let (out, summary) = run_sweep(&opts).unwrap();
    assert_eq!(summary.failing_instances, 0);
    for (_, rep) in out {
        assert_eq!(rep.epsilon, Some(0.0));
        assert!(rep.margin.unwrap().abs() <= 1e-12);
    }
}

#[test]
fn constant_encoder_loses_everything_but_stays_bounded() {
    let opts = SweepOptions { instances: 300, encoder: EncoderKind::Constant, ..SweepOptions::default() };
    let (out, summary) = run_sweep(&opts).unwrap();
    assert_eq!(summary.contamination_violations, 0);
    for (_, rep) in out {
        assert!(rep.i_zk_given_s.unwrap().abs() <= 1e-12);
    }
}

#[test]
fn sweep_instances_replay() {
    let opts = SweepOptions::default();
    let a = make_instance(&opts, 417).unwrap();
    let text = serde_json::to_string(&a).unwrap();
    let b = serde_json::from_str(&text).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, make_instance(&opts, 417).unwrap());
}

#[test]
fn fano_rhs_vanishes_at_chance_error() {
    for k in 2..=16 {
        let pe = 1.0 - 1.0 / k as f64;
        assert!(fano_rhs(k, pe).unwrap().abs() <= 1e-12, "k = {k}");
    }
    assert!((fano_rhs(4, 0.0).unwrap() - 2.0).abs() <= 1e-12);
}

#[test]
fn anchor_invariance_on_random_constructions() {
    let mut rng = RngStream::new(0xa2c4);
    for _ in 0..1000 {
        let ns = size_between(&mut rng, 1, 4);
        let nk = size_between(&mut rng, 2, 4);
        let nf = size_between(&mut rng, 1, ns);
        let ny = size_between(&mut rng, 1, ns);
        let p_s = dirichlet(&mut rng, ns);
        let p_k = dirichlet(&mut rng, nk);
        let h1 = random_map(&mut rng, ns, nf);
        let h2 = random_map(&mut rng, ns, ny);
        let rep = check_foreground_anchor(&p_s, &h1, nf, &h2, ny, &p_k).unwrap();
        assert!(rep.i_fk_given_y.abs() <= 1e-12);
        assert!(rep.identity_residual <= 1e-10);

        let mut fky = vec![0.0; nf * nk * ny];
        for s in 0..ns {
            for k in 0..nk {
                fky[(h1[s] * nk + k) * ny + h2[s]] += p_s[s] * p_k[k];
            }
        }
        let oracle = cmi_oracle(&Joint3::new(nf, nk, ny, fky).unwrap());
        assert!(oracle.abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn bayes_error_matches_enumeration(j in joint_strategy()) {
        for s in 0..j.ns() {
            if j.p_s()[s] > 0.0 {
                prop_assert_eq!(bayes_error(&j, s).unwrap(), brute_force_bayes_error(&j, s));
            }
        }
    }

    #[test]
    fn fano_terms_bound_information(j in joint_strategy()) {
        let rep = check_fano_positivity(&j).unwrap();
        prop_assert!(!rep.violation());
        prop_assert!((rep.i_xk_given_s - ixk_s(&j)).abs() <= 1e-10);
    }

    #[test]
    fn cmi_matches_oracle_and_chain_rule(seed in any::<u64>(), na in 1usize..=4, nb in 1usize..=4, nc in 1usize..=4) {
        let t = random_joint3(&mut RngStream::new(seed), [na, nb, nc]).unwrap();
        let cmi = t.cond_mutual_info();
        prop_assert!((cmi - cmi_oracle(&t)).abs() <= 1e-10);
        // I(A;BC) = I(A;C) + I(A;B|C)
        prop_assert!((t.mutual_info_a_bc() - t.mutual_info_ac() - cmi).abs() <= 1e-10);
        // symmetric in A and B
        prop_assert!((t.permute([1, 0, 2]).cond_mutual_info() - cmi).abs() <= 1e-10);
    }

    #[test]
    fn processing_never_adds_information(j in joint_strategy(), seed in any::<u64>()) {
        let mut rng = RngStream::new(seed);
        let maps = random_encoder(&mut rng, j.nx());
        let rep = check_contamination(&j, &maps, &DistortionSpec::hamming(j.nx())).unwrap();
        prop_assert!(rep.dpi_holds);
        prop_assert!(rep.mismatch_holds);
        let z = j.push_forward(&maps.encoder, maps.nz);
        let iz = cmi_oracle(&z.permute([2, 1, 0]));
        prop_assert!(iz <= ixk_s(&j) + 1e-10);
        prop_assert!((rep.i_zk_given_s - iz).abs() <= 1e-10);
        if rep.claimed {
            prop_assert!(rep.margin >= -1e-9);
        }
    }

    #[test]
    fn ib_chain_rule(seed in any::<u64>(), nx in 1usize..=4, ny in 1usize..=4, nk in 1usize..=4) {
        let mut rng = RngStream::new(seed);
        let xyk = random_joint3(&mut rng, [nx, ny, nk]).unwrap();
        let nz = size_between(&mut rng, 1, nx);
        let map = random_map(&mut rng, nx, nz);
        let rep = check_ib_decomposition(&xyk, &Channel::deterministic(&map, nz)).unwrap();
        prop_assert!(rep.holds);
        prop_assert!(rep.chain_residual.abs() <= 1e-10);
        // deterministic Z: I(Z;X) = H(Z)
        let mut pz = vec![0.0; nz];
        for x in 0..nx {
            for y in 0..ny {
                for k in 0..nk {
                    pz[map[x]] += xyk.get(x, y, k);
                }
            }
        }
        let hz: f64 = pz.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum();
        prop_assert!((rep.i_zx - hz).abs() <= 1e-10);
    }
}

#[test]
fn assumptions_are_enforced() {
    // K depends on S: p(s,k) != p(s) p(k)
    let p = vec![0.5, 0.0, 0.0, 0.5];
    let j = FiniteJoint::new(2, 2, 1, p).unwrap();
    assert!(!j.is_exogenous());
    assert!(check_contamination(&j, &EncoderMap::identity(1), &DistortionSpec::hamming(1)).is_err());
    assert!(check_fano_positivity(&j).is_err());
}

#[test]
fn stochastic_encoder_is_rejected_by_ib_check() {
    let xyk = random_joint3(&mut RngStream::new(3), [2, 2, 1]).unwrap();
    let ch = Channel::new(vec![vec![0.5, 0.5], vec![1.0, 0.0]]).unwrap();
    assert!(check_ib_decomposition(&xyk, &ch).is_err());
}
