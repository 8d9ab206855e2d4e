//! Tilted-field Ising chain: H = J sum_i sigma^z_i sigma^z_{i+1}
//! + sum_i (h_x sigma^x_i + h_z sigma^z_i), hbar = 1.
//!
//! The matrix is expressed in the basis selected by
//! [`ChainSpec::quant_axis`]. Along `z` the coupling and longitudinal field
//! are diagonal and the transverse field hops between states differing in
//! one bit. Along `x` the roles swap: the transverse field is diagonal
//! while the coupling flips adjacent bit pairs and the longitudinal field
//! flips single bits. Both forms are real symmetric.

mod symmetry;

use faer::{Mat, MatRef};
use num_complex::Complex64;

use crate::basis::{Boundary, ChainSpec, PureState, QuantAxis, MAX_DENSE_SITES};
use crate::error::{Error, Result};

pub use symmetry::SectorSpectrum;

/// Mean consecutive-spacing ratio of an integrable (Poisson) spectrum,
/// 2 ln 2 - 1.
pub const POISSON_MEAN_RATIO: f64 = 0.386_294_361_119_890_6;

/// Mean consecutive-spacing ratio of the Gaussian orthogonal ensemble.
pub const GOE_MEAN_RATIO: f64 = 0.5307;

/// One term of the chain Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Term {
    /// J sum over bonds of sigma^z sigma^z.
    ZzCoupling(f64),
    /// h_x sum over sites of sigma^x.
    TransverseField(f64),
    /// h_z sum over sites of sigma^z.
    LongitudinalField(f64),
}

/// Split of the Hamiltonian into the part diagonal in the quantization
/// basis (`diagonal`) and the transverse perturbation (`perturbation`).
#[derive(Clone, Debug)]
pub struct HamiltonianSplit {
    pub spec: ChainSpec,
    pub diagonal: Vec<Term>,
    pub perturbation: Vec<Term>,
}

impl HamiltonianSplit {
    pub fn of(spec: &ChainSpec) -> Self {
        let (diagonal, perturbation) = match spec.quant_axis {
            QuantAxis::Z => (
                vec![
                    Term::ZzCoupling(spec.coupling),
                    Term::LongitudinalField(spec.field_z),
                ],
                vec![Term::TransverseField(spec.field_x)],
            ),
            QuantAxis::X => (
                vec![Term::TransverseField(spec.field_x)],
                vec![
                    Term::ZzCoupling(spec.coupling),
                    Term::LongitudinalField(spec.field_z),
                ],
            ),
        };
        Self {
            spec: *spec,
            diagonal,
            perturbation,
        }
    }
}

fn check_dense(spec: &ChainSpec) -> Result<()> {
    if spec.n_sites > MAX_DENSE_SITES {
        return Err(Error::DenseSize {
            n_sites: spec.n_sites,
            max: MAX_DENSE_SITES,
        });
    }
    Ok(())
}

/// Sum over bonds of z_i z_{i+1} for the bit pattern `s` (+1 for equal
/// neighbors, -1 for unequal).
fn zz_bond_sum(s: u32, n: usize, boundary: Boundary) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let bond_mask = (1u32 << (n - 1)) - 1;
    let unequal = ((s ^ (s >> 1)) & bond_mask).count_ones();
    let mut total = (n - 1) as f64 - 2.0 * unequal as f64;
    if boundary == Boundary::Periodic {
        let wrap_unequal = ((s >> (n - 1)) ^ s) & 1;
        total += 1.0 - 2.0 * wrap_unequal as f64;
    }
    total
}

/// Sum over sites of z_i: +1 per up bit, -1 per down bit.
fn z_site_sum(s: u32, n: usize) -> f64 {
    2.0 * s.count_ones() as f64 - n as f64
}

/// Dense real symmetric Hamiltonian in the quantization basis of `spec`.
pub fn build_dense(spec: &ChainSpec) -> Result<Mat<f64>> {
    check_dense(spec)?;
    let n = spec.n_sites;
    let dim = spec.dim();
    let mut h = Mat::<f64>::zeros(dim, dim);
    match spec.quant_axis {
        QuantAxis::Z => {
            for s in 0..dim {
                let bits = s as u32;
                h[(s, s)] = spec.coupling * zz_bond_sum(bits, n, spec.boundary)
                    + spec.field_z * z_site_sum(bits, n);
                if spec.field_x != 0.0 {
                    for i in 0..n {
                        h[(s ^ (1 << i), s)] += spec.field_x;
                    }
                }
            }
        }
        QuantAxis::X => {
            for s in 0..dim {
                let bits = s as u32;
                h[(s, s)] = spec.field_x * z_site_sum(bits, n);
                for (i, j) in bond_pairs(n, spec.boundary) {
                    let flipped = s ^ (1 << i) ^ (1 << j);
                    h[(flipped, s)] += spec.coupling;
                }
                if spec.field_z != 0.0 {
                    for i in 0..n {
                        h[(s ^ (1 << i), s)] += spec.field_z;
                    }
                }
            }
        }
    }
    Ok(h)
}

/// Bonds (i, i+1) for i = 0..n-2, plus (n-1, 0) when periodic and n >= 2.
fn bond_pairs(n: usize, boundary: Boundary) -> Vec<(usize, usize)> {
    let mut bonds: Vec<(usize, usize)> = (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect();
    if boundary == Boundary::Periodic && n >= 2 {
        bonds.push((n - 1, 0));
    }
    bonds
}

/// Matrix-free form of the chain Hamiltonian: the diagonal is precomputed,
/// off-diagonal terms are applied by bit flips. Application costs
/// O(N 2^N) and never materializes the matrix.
#[derive(Clone, Debug)]
pub struct IsingOperator {
    diag: Vec<f64>,
    hop_single: f64,
    hop_bond: f64,
    bonds: Vec<(usize, usize)>,
    n_sites: usize,
}

impl IsingOperator {
    pub fn new(spec: &ChainSpec) -> Self {
        let n = spec.n_sites;
        let dim = spec.dim();
        let mut diag = vec![0.0; dim];
        let (hop_single, hop_bond) = match spec.quant_axis {
            QuantAxis::Z => {
                for (s, d) in diag.iter_mut().enumerate() {
                    *d = spec.coupling * zz_bond_sum(s as u32, n, spec.boundary)
                        + spec.field_z * z_site_sum(s as u32, n);
                }
                (spec.field_x, 0.0)
            }
            QuantAxis::X => {
                for (s, d) in diag.iter_mut().enumerate() {
                    *d = spec.field_x * z_site_sum(s as u32, n);
                }
                (spec.field_z, spec.coupling)
            }
        };
        Self {
            diag,
            hop_single,
            hop_bond,
            bonds: bond_pairs(n, spec.boundary),
            n_sites: n,
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// out = H v.
    pub fn apply_into(&self, v: &[Complex64], out: &mut [Complex64]) {
        let dim = self.dim();
        assert_eq!(v.len(), dim);
        assert_eq!(out.len(), dim);
        for (o, (d, x)) in out.iter_mut().zip(self.diag.iter().zip(v)) {
            *o = *x * *d;
        }
        if self.hop_single != 0.0 {
            for i in 0..self.n_sites {
                let bit = 1usize << i;
                for s in 0..dim {
                    out[s ^ bit] += v[s] * self.hop_single;
                }
            }
        }
        if self.hop_bond != 0.0 {
            for &(i, j) in &self.bonds {
                let bits = (1usize << i) | (1usize << j);
                for s in 0..dim {
                    out[s ^ bits] += v[s] * self.hop_bond;
                }
            }
        }
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::ZERO; self.dim()];
        self.apply_into(v, &mut out);
        out
    }

    /// Upper bound on the spectral radius (sum of term magnitudes).
    pub fn norm_bound(&self) -> f64 {
        let diag_max = self.diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        diag_max
            + self.hop_single.abs() * self.n_sites as f64
            + self.hop_bond.abs() * self.bonds.len() as f64
    }
}

/// H v without materializing the matrix; agrees with
/// [`build_dense`] times `v` to machine precision.
pub fn apply(spec: &ChainSpec, v: &[Complex64]) -> Result<Vec<Complex64>> {
    if v.len() != spec.dim() {
        return Err(Error::Dimension {
            expected: spec.dim(),
            got: v.len(),
        });
    }
    Ok(IsingOperator::new(spec).apply(v))
}

/// Apply the involutive single-site rotation exchanging the sigma^z and
/// sigma^x eigenbases (entries 1/sqrt(2), symmetric sign convention:
/// |down> -> (|down> + |up>)/sqrt(2), |up> -> (|down> - |up>)/sqrt(2))
/// to every site. Applying twice returns the input.
pub fn rotate_axis(state: &PureState) -> PureState {
    let n = state.n_sites();
    let mut amps = state.amplitudes().to_vec();
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        let bit = 1usize << i;
        for s in 0..amps.len() {
            if s & bit == 0 {
                let a = amps[s];
                let b = amps[s | bit];
                amps[s] = (a + b) * inv_sqrt2;
                amps[s | bit] = (a - b) * inv_sqrt2;
            }
        }
    }
    PureState::from_raw(amps, n)
}

/// Result of the consecutive-spacing-ratio diagnostic.
#[derive(Clone, Debug)]
pub struct SpacingRatio {
    /// Mean of min(s_k, s_{k+1}) / max(s_k, s_{k+1}) over the central half
    /// of the sector spectrum.
    pub mean: f64,
    /// Number of ratios averaged.
    pub n_ratios: usize,
    /// Dimension of the symmetry sector that was diagonalized.
    pub sector_dim: usize,
    /// Which sector, e.g. "reflection=+1" or "momentum k=1".
    pub sector: String,
    /// False when symmetry resolution was disabled; such ratios mix
    /// sectors and are biased toward Poisson.
    pub resolved: bool,
}

/// Mean consecutive-spacing ratio in the largest symmetry sector of the
/// chain. Resolves spatial reflection parity (open) or momentum sectors
/// (periodic), plus the global spin-flip parity when `field_z == 0`.
pub fn spacing_ratio(spec: &ChainSpec) -> Result<SpacingRatio> {
    spacing_ratio_with(spec, true)
}

/// [`spacing_ratio`] with optional symmetry resolution. With
/// `resolve = false` the full spectrum is used and the result is flagged.
pub fn spacing_ratio_with(spec: &ChainSpec, resolve: bool) -> Result<SpacingRatio> {
    let h = build_dense(spec)?;
    let (eigenvalues, sector_dim, sector) = if resolve {
        let sector = symmetry::largest_sector_spectrum(spec, h.as_ref())?;
        (sector.eigenvalues, sector.dim, sector.label)
    } else {
        log::warn!("spacing ratios without symmetry resolution mix sectors and bias toward Poisson");
        let evd = crate::propagator::spectral_decompose(h.as_ref())?;
        let dim = evd.dim();
        (evd.into_eigenvalues(), dim, "unresolved".to_string())
    };
    let (mean, n_ratios) = mean_spacing_ratio(&eigenvalues)?;
    Ok(SpacingRatio {
        mean,
        n_ratios,
        sector_dim,
        sector,
        resolved: resolve,
    })
}

/// Mean of min/max consecutive-spacing ratios over the central half of a
/// sorted spectrum. Zero spacings (degeneracies) are skipped; fewer than
/// 10 usable ratios is an error.
pub fn mean_spacing_ratio(eigenvalues: &[f64]) -> Result<(f64, usize)> {
    let n = eigenvalues.len();
    let lo = n / 4;
    let hi = n - n / 4;
    let window = &eigenvalues[lo..hi];
    let span = eigenvalues
        .last()
        .copied()
        .unwrap_or(0.0)
        .max(-eigenvalues.first().copied().unwrap_or(0.0));
    let tol = 1e-10 * span.max(1.0);
    let mut sum = 0.0;
    let mut count = 0usize;
    for w in window.windows(3) {
        let s1 = w[1] - w[0];
        let s2 = w[2] - w[1];
        if s1 > tol && s2 > tol {
            sum += s1.min(s2) / s1.max(s2);
            count += 1;
        }
    }
    if count < 10 {
        return Err(Error::InsufficientData {
            what: "spacing ratios",
            got: count,
            need: 10,
        });
    }
    Ok((sum / count as f64, count))
}

/// Max |H[i,j] - H[j,i]| over the upper triangle.
pub fn max_asymmetry(h: MatRef<'_, f64>) -> f64 {
    let n = h.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            dev = dev.max((h[(i, j)] - h[(j, i)]).abs());
        }
    }
    dev
}
