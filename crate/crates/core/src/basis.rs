//! Computational-basis bookkeeping for spin-1/2 chains.
//!
//! A chain of `N` sites is indexed by bitmasks: bit `i` set means spin `i`
//! points up along the current quantization axis (occupation `n_a = 1`,
//! `n_b = 0` in the two-boson picture), bit `i` clear means down. Bit 0 is
//! the first site. Harmonic indices use the same bit layout: a set bit
//! encodes a down-to-up transition at that site (`m_a = +1`, `m_b = -1`),
//! a clear bit encodes no transition. The complementary all-up-to-down
//! masks carry the same weights and are not enumerated.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default cap on the chain length; 2^14 amplitudes is the largest state
/// the desk-scale drivers are expected to handle.
pub const DEFAULT_MAX_SITES: usize = 14;

/// Hard ceiling for operations that materialize dense 2^N x 2^N matrices.
pub const MAX_DENSE_SITES: usize = 13;

/// Norm tolerance enforced on [`PureState`] construction.
pub const NORM_TOL: f64 = 1e-9;

/// Tolerance for Hermiticity/trace checks on [`DensityMatrix`] construction.
pub const DENSITY_TOL: f64 = 1e-9;

/// Boundary condition of the chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    /// Bonds between sites (i, i+1) for i = 0..N-2.
    Open,
    /// Open-chain bonds plus the wrap-around bond (N-1, 0).
    Periodic,
}

/// Quantization axis of the basis states.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuantAxis {
    /// Basis states are eigenstates of every sigma^z_i.
    Z,
    /// Basis states are eigenstates of every sigma^x_i.
    X,
}

/// Physical model of the chain: sigma^z sigma^z coupling with transverse
/// (x) and longitudinal (z) fields, in units hbar = 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainSpec {
    pub n_sites: usize,
    pub coupling: f64,
    pub field_x: f64,
    pub field_z: f64,
    pub boundary: Boundary,
    pub quant_axis: QuantAxis,
}

impl ChainSpec {
    /// Open-boundary, z-quantized chain. Errors if `n_sites` is outside
    /// `1..=DEFAULT_MAX_SITES` or a parameter is not finite.
    pub fn new(n_sites: usize, coupling: f64, field_x: f64, field_z: f64) -> Result<Self> {
        Self::with_cap(n_sites, coupling, field_x, field_z, DEFAULT_MAX_SITES)
    }

    /// Like [`ChainSpec::new`] with an explicit cap on the chain length.
    pub fn with_cap(
        n_sites: usize,
        coupling: f64,
        field_x: f64,
        field_z: f64,
        cap: usize,
    ) -> Result<Self> {
        if n_sites < 1 || n_sites > cap {
            return Err(Error::Size { n_sites, cap });
        }
        for (value, name) in [
            (coupling, "coupling"),
            (field_x, "field_x"),
            (field_z, "field_z"),
        ] {
            if !value.is_finite() {
                return Err(Error::NonFinite { name });
            }
        }
        Ok(Self {
            n_sites,
            coupling,
            field_x,
            field_z,
            boundary: Boundary::Open,
            quant_axis: QuantAxis::Z,
        })
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_axis(mut self, axis: QuantAxis) -> Self {
        self.quant_axis = axis;
        self
    }

    /// Hilbert-space dimension 2^N.
    pub fn dim(&self) -> usize {
        1 << self.n_sites
    }

    /// Bitmask with one bit per site.
    pub fn full_mask(&self) -> u32 {
        ((1u64 << self.n_sites) - 1) as u32
    }
}

/// A computational basis state; bit i set = spin i up.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisState(pub u32);

/// Independent harmonic index; bit i set = down-to-up transition at site i.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HarmonicIndex(pub u32);

impl HarmonicIndex {
    /// Number of transition sites.
    pub fn order(&self) -> u32 {
        self.0.count_ones()
    }
}

/// Set the mask bits in `state`. Errors if any transition site is already up.
pub fn flip(state: BasisState, mask: HarmonicIndex) -> Result<BasisState> {
    if state.0 & mask.0 != 0 {
        return Err(Error::IncompatibleMask {
            bits: state.0,
            mask: mask.0,
        });
    }
    Ok(BasisState(state.0 | mask.0))
}

/// All basis states with every mask bit clear, ascending. These are exactly
/// the kets |n> for which |n + m> stays in the physical subspace.
pub fn compatible_kets(mask: HarmonicIndex, n_sites: usize) -> Vec<BasisState> {
    debug_assert!(n_sites >= 1 && n_sites <= 32);
    debug_assert!((mask.0 as u64) < (1u64 << n_sites));
    let full = ((1u64 << n_sites) - 1) as u32;
    let comp = full & !mask.0;
    let count = 1usize << comp.count_ones();
    let mut kets = Vec::with_capacity(count);
    for u in 0..count {
        kets.push(BasisState(deposit_bits(u as u32, comp)));
    }
    kets
}

/// Scatter the low bits of `value` into the set positions of `positions`,
/// lowest position first (software PDEP).
pub fn deposit_bits(value: u32, positions: u32) -> u32 {
    let mut out = 0u32;
    let mut rest = positions;
    let mut v = value;
    while rest != 0 {
        let lowest = rest & rest.wrapping_neg();
        if v & 1 != 0 {
            out |= lowest;
        }
        v >>= 1;
        rest &= rest - 1;
    }
    out
}

/// Gather the bits of `value` at the set positions of `positions` into the
/// low bits of the result (software PEXT, inverse of [`deposit_bits`]).
pub fn extract_bits(value: u32, positions: u32) -> u32 {
    let mut out = 0u32;
    let mut rest = positions;
    let mut shift = 0;
    while rest != 0 {
        let lowest = rest & rest.wrapping_neg();
        if value & lowest != 0 {
            out |= 1 << shift;
        }
        shift += 1;
        rest &= rest - 1;
    }
    out
}

/// Pure quantum state as a complex amplitude vector over the 2^N basis.
#[derive(Clone, Debug)]
pub struct PureState {
    amps: Vec<Complex64>,
    n_sites: usize,
}

impl PureState {
    /// Validates the length and that the norm is 1 within [`NORM_TOL`].
    pub fn new(amps: Vec<Complex64>, n_sites: usize) -> Result<Self> {
        let expected = 1usize << n_sites;
        if amps.len() != expected {
            return Err(Error::Dimension {
                expected,
                got: amps.len(),
            });
        }
        let deviation = (norm(&amps) - 1.0).abs();
        if deviation > NORM_TOL {
            return Err(Error::NotNormalized { deviation });
        }
        Ok(Self { amps, n_sites })
    }

    /// Rescales an arbitrary nonzero vector to unit norm.
    pub fn normalized(mut amps: Vec<Complex64>, n_sites: usize) -> Result<Self> {
        let expected = 1usize << n_sites;
        if amps.len() != expected {
            return Err(Error::Dimension {
                expected,
                got: amps.len(),
            });
        }
        let n = norm(&amps);
        if n < 1e-300 {
            return Err(Error::NotNormalized { deviation: 1.0 });
        }
        for a in &mut amps {
            *a /= n;
        }
        Ok(Self { amps, n_sites })
    }

    /// Skips validation; for internal paths that construct unit vectors by
    /// construction.
    pub(crate) fn from_raw(amps: Vec<Complex64>, n_sites: usize) -> Self {
        debug_assert_eq!(amps.len(), 1usize << n_sites);
        debug_assert!((norm(&amps) - 1.0).abs() < 1e-6);
        Self { amps, n_sites }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amp(&self, state: BasisState) -> Complex64 {
        self.amps[state.0 as usize]
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amps)
    }

    /// <self|other>.
    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// |<self|other>|, the phase-insensitive overlap.
    pub fn fidelity(&self, other: &PureState) -> f64 {
        self.inner(other).norm()
    }
}

fn norm(amps: &[Complex64]) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// |down...down>: amplitude 1 on the all-bits-zero basis state.
pub fn all_down_state(n_sites: usize) -> Result<PureState> {
    all_down_state_with_cap(n_sites, DEFAULT_MAX_SITES)
}

/// [`all_down_state`] with an explicit chain-length cap.
pub fn all_down_state_with_cap(n_sites: usize, cap: usize) -> Result<PureState> {
    if n_sites < 1 || n_sites > cap {
        return Err(Error::Size { n_sites, cap });
    }
    let mut amps = vec![Complex64::ZERO; 1 << n_sites];
    amps[0] = Complex64::ONE;
    Ok(PureState { amps, n_sites })
}

/// |up...up>: amplitude 1 on the all-bits-one basis state.
pub fn all_up_state(n_sites: usize) -> Result<PureState> {
    if n_sites < 1 || n_sites > DEFAULT_MAX_SITES {
        return Err(Error::Size {
            n_sites,
            cap: DEFAULT_MAX_SITES,
        });
    }
    let dim = 1usize << n_sites;
    let mut amps = vec![Complex64::ZERO; dim];
    amps[dim - 1] = Complex64::ONE;
    Ok(PureState { amps, n_sites })
}

/// Hermitian, trace-one density operator over the 2^N basis, row-major.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    data: Vec<Complex64>,
    dim: usize,
    n_sites: usize,
}

impl DensityMatrix {
    /// Validates Hermiticity and unit trace within [`DENSITY_TOL`] and that
    /// no diagonal entry is below `-DENSITY_TOL` (a cheap necessary
    /// condition for positivity; the full spectrum is not checked here).
    pub fn new(data: Vec<Complex64>, n_sites: usize) -> Result<Self> {
        let dim = 1usize << n_sites;
        if data.len() != dim * dim {
            return Err(Error::Dimension {
                expected: dim * dim,
                got: data.len(),
            });
        }
        let mut herm_dev: f64 = 0.0;
        for i in 0..dim {
            for j in i..dim {
                let d = (data[i * dim + j] - data[j * dim + i].conj()).norm();
                herm_dev = herm_dev.max(d);
            }
        }
        if herm_dev > DENSITY_TOL {
            return Err(Error::InvalidDensity {
                what: "Hermiticity",
                deviation: herm_dev,
            });
        }
        let trace: Complex64 = (0..dim).map(|i| data[i * dim + i]).sum();
        let tr_dev = (trace - Complex64::ONE).norm();
        if tr_dev > DENSITY_TOL {
            return Err(Error::InvalidDensity {
                what: "unit trace",
                deviation: tr_dev,
            });
        }
        let min_diag = (0..dim)
            .map(|i| data[i * dim + i].re)
            .fold(f64::INFINITY, f64::min);
        if min_diag < -DENSITY_TOL {
            return Err(Error::InvalidDensity {
                what: "positivity (diagonal)",
                deviation: -min_diag,
            });
        }
        Ok(Self {
            data,
            dim,
            n_sites,
        })
    }

    pub(crate) fn from_raw(data: Vec<Complex64>, n_sites: usize) -> Self {
        let dim = 1usize << n_sites;
        debug_assert_eq!(data.len(), dim * dim);
        Self {
            data,
            dim,
            n_sites,
        }
    }

    /// rho = |psi><psi|.
    pub fn from_pure(psi: &PureState) -> Self {
        let dim = psi.dim();
        let a = psi.amplitudes();
        let mut data = vec![Complex64::ZERO; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                data[i * dim + j] = a[i] * a[j].conj();
            }
        }
        Self {
            data,
            dim,
            n_sites: psi.n_sites(),
        }
    }

    /// rho = I / 2^N.
    pub fn maximally_mixed(n_sites: usize) -> Self {
        let dim = 1usize << n_sites;
        let mut data = vec![Complex64::ZERO; dim * dim];
        let p = 1.0 / dim as f64;
        for i in 0..dim {
            data[i * dim + i] = Complex64::new(p, 0.0);
        }
        Self {
            data,
            dim,
            n_sites,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    /// Row-major backing storage.
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }
}
