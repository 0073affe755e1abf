//! Random instances that satisfy the modelling assumptions by construction.
//!
//! A joint is assembled as `p(s) * (1/|K|) * p(x | s, k)` with `p(s)` and every
//! row `p(x | s, k)` drawn from a flat Dirichlet, so `K` is uniform and
//! independent of `S` exactly (up to the product rounding).

use super::{EncoderMap, FiniteJoint, Joint3};
use crate::error::Result;
use crate::rng::RngStream;

/// Flat Dirichlet sample of dimension `n` (normalized exponentials).
pub fn dirichlet(rng: &mut RngStream, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| rng.exponential()).collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|v| v / total).collect()
}

/// Uniform size in `lo..=hi`.
pub fn size_between(rng: &mut RngStream, lo: usize, hi: usize) -> usize {
    lo + rng.below(hi - lo + 1)
}

/// Exogenous, balanced joint on `ns x nk x nx`.
pub fn random_joint(rng: &mut RngStream, ns: usize, nk: usize, nx: usize) -> Result<FiniteJoint> {
    let ps = dirichlet(rng, ns);
    let mut p = Vec::with_capacity(ns * nk * nx);
    for &s_mass in &ps {
        for _ in 0..nk {
            let row = dirichlet(rng, nx);
            p.extend(row.into_iter().map(|v| s_mass / nk as f64 * v));
        }
    }
    FiniteJoint::new(ns, nk, nx, p)
}

/// Uniformly random map `0..n -> 0..m`.
pub fn random_map(rng: &mut RngStream, n: usize, m: usize) -> Vec<usize> {
    (0..n).map(|_| rng.below(m)).collect()
}

/// Random deterministic encoder with a code alphabet of size `1..=nx` and a
/// random decoder back to the observation alphabet.
pub fn random_encoder(rng: &mut RngStream, nx: usize) -> EncoderMap {
    let nz = size_between(rng, 1, nx);
    let encoder = random_map(rng, nx, nz);
    let decoder = random_map(rng, nz, nx);
    EncoderMap { encoder, nz, decoder: Some(decoder) }
}

/// Random normalized table over three variables.
pub fn random_joint3(rng: &mut RngStream, dims: [usize; 3]) -> Result<Joint3> {
    Joint3::new(dims[0], dims[1], dims[2], dirichlet(rng, dims.iter().product()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instances_satisfy_flags() {
        let mut rng = RngStream::new(12);
        for _ in 0..200 {
            let (ns, nk, nx) = (size_between(&mut rng, 1, 4), size_between(&mut rng, 2, 4), size_between(&mut rng, 1, 4));
            let j = random_joint(&mut rng, ns, nk, nx).unwrap();
            assert!(j.is_balanced() && j.is_exogenous());
        }
    }

    #[test]
    fn dirichlet_is_normalized() {
        let mut rng = RngStream::new(3);
        for n in 1..10 {
            let d = dirichlet(&mut rng, n);
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(d.iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn encoders_are_total() {
        let mut rng = RngStream::new(4);
        for nx in 1..6 {
            let e = random_encoder(&mut rng, nx);
            assert!(EncoderMap::new(e.encoder.clone(), e.nz, e.decoder.clone()).is_ok());
        }
    }
}
