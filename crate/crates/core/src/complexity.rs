//! The Wigner-harmonics complexity measure.
//!
//! For a state rho over N spins, the weight of the harmonic mask mu is the
//! summed squared magnitude of the matrix elements <n + mu| rho |n> over
//! all kets |n> that are down on every transition site, normalized over
//! the 2^N independent masks. The Shannon entropy S of that distribution
//! measures the phase-space structural richness of the state; exp(S)
//! counts excited harmonics, and S is bounded by N ln 2.
//!
//! Masks with all transitions reversed (up-to-down) carry identical
//! weights and are not enumerated; mixed-sign harmonics lie outside the
//! independent set by construction.

use num_complex::Complex64;

use crate::basis::{DensityMatrix, PureState};
use crate::error::{Error, Result};

/// Norm slack accepted by [`harmonics_from_pure`].
const PURE_NORM_TOL: f64 = 1e-6;

/// Weights below this are treated as exactly zero before taking logs.
const WEIGHT_FLOOR: f64 = 1e-300;

/// Normalized weights over the 2^N independent harmonic masks, indexed by
/// mask bits.
#[derive(Clone, Debug)]
pub struct HarmonicsDistribution {
    weights: Vec<f64>,
    n_sites: usize,
}

impl HarmonicsDistribution {
    /// Validates length 2^N, nonnegativity, unit sum (1e-12) and a
    /// positive zeroth weight.
    pub fn new(weights: Vec<f64>, n_sites: usize) -> Result<Self> {
        let expected = 1usize << n_sites;
        if weights.len() != expected {
            return Err(Error::Dimension {
                expected,
                got: weights.len(),
            });
        }
        if weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(Error::InvalidArgument(
                "harmonic weights must be finite and nonnegative".to_string(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "harmonic weights sum to {total}, expected 1"
            )));
        }
        if weights[0] <= 0.0 {
            return Err(Error::InvalidArgument(
                "zeroth harmonic weight must be positive".to_string(),
            ));
        }
        Ok(Self { weights, n_sites })
    }

    fn from_raw(mut raw: Vec<f64>, n_sites: usize) -> Self {
        let total: f64 = raw.iter().sum();
        debug_assert!(total > 0.0, "zero harmonic mass");
        for w in &mut raw {
            *w /= total;
        }
        debug_assert!(raw[0] > 0.0);
        Self {
            weights: raw,
            n_sites,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }
}

/// Harmonics distribution of a pure state in O(3^N) operations.
pub fn harmonics_from_pure(psi: &PureState) -> Result<HarmonicsDistribution> {
    let deviation = (psi.norm() - 1.0).abs();
    if deviation > PURE_NORM_TOL {
        return Err(Error::NotNormalized { deviation });
    }
    let probs: Vec<f64> = psi.amplitudes().iter().map(|a| a.norm_sqr()).collect();
    Ok(HarmonicsDistribution::from_raw(
        raw_weights(probs.len(), |bra, ket| probs[bra] * probs[ket]),
        psi.n_sites(),
    ))
}

/// Harmonics distribution of a density operator: weight of mu sums
/// |rho[n + mu, n]|^2 over compatible kets.
pub fn harmonics_from_density(rho: &DensityMatrix) -> Result<HarmonicsDistribution> {
    let tr_dev = (rho.trace() - Complex64::ONE).norm();
    if tr_dev > crate::basis::DENSITY_TOL {
        return Err(Error::InvalidDensity {
            what: "unit trace",
            deviation: tr_dev,
        });
    }
    Ok(HarmonicsDistribution::from_raw(
        raw_weights(rho.dim(), |bra, ket| rho.entry(bra, ket).norm_sqr()),
        rho.n_sites(),
    ))
}

/// Sum `element(s | mu, s)` over every mask mu and every ket s compatible
/// with it. The subset enumeration visits each of the 3^N (mask, ket)
/// pairs once, in a fixed order.
fn raw_weights(dim: usize, element: impl Fn(usize, usize) -> f64) -> Vec<f64> {
    let full = dim - 1;
    let mut raw = vec![0.0; dim];
    for (mu, slot) in raw.iter_mut().enumerate() {
        let comp = full & !mu;
        let mut acc = 0.0;
        let mut s = comp;
        loop {
            acc += element(s | mu, s);
            if s == 0 {
                break;
            }
            s = (s - 1) & comp;
        }
        *slot = acc;
    }
    raw
}

/// Shannon entropy S = -sum w ln w over the independent masks, with
/// 0 ln 0 = 0. Bounded by N ln 2.
pub fn wigner_entropy(dist: &HarmonicsDistribution) -> f64 {
    let mut s = 0.0;
    for &w in &dist.weights {
        if w > WEIGHT_FLOOR {
            s -= w * w.ln();
        }
    }
    let s_max = dist.n_sites as f64 * std::f64::consts::LN_2;
    debug_assert!(
        (-1e-9..=s_max + 1e-9).contains(&s),
        "entropy {s} outside [0, {s_max}]"
    );
    s.max(0.0)
}

/// Second moment of the harmonics distribution. Each transition site
/// contributes m_a^2 + m_b^2 = 2, so mask mu carries 2 popcount(mu).
pub fn second_moment(dist: &HarmonicsDistribution) -> f64 {
    dist.weights
        .iter()
        .enumerate()
        .map(|(mu, w)| w * 2.0 * mu.count_ones() as f64)
        .sum()
}

/// exp(S): the effective number of excited harmonics, in [1, 2^N].
pub fn harmonic_count(dist: &HarmonicsDistribution) -> f64 {
    wigner_entropy(dist).exp()
}

/// S divided by its maximum N ln 2, in [0, 1].
pub fn normalized_entropy(dist: &HarmonicsDistribution) -> f64 {
    wigner_entropy(dist) / (dist.n_sites as f64 * std::f64::consts::LN_2)
}
