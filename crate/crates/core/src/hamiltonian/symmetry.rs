//! Symmetry resolution for level statistics.
//!
//! Spacing ratios are only meaningful within one symmetry sector; mixing
//! sectors superposes independent spectra and biases the statistic toward
//! Poisson. The chain always carries spatial reflection symmetry. A
//! periodic chain adds translations, and a vanishing longitudinal field
//! adds the global spin-flip parity. All of these act as signed
//! permutations of the basis, so sectors are built by character
//! projection: P = (1/|G|) sum_g conj(chi(g)) U(g) applied to each orbit.

use std::collections::BTreeMap;

use faer::{Mat, MatRef, Side};
use num_complex::Complex64;

use crate::basis::{Boundary, ChainSpec, QuantAxis};
use crate::error::{Error, Result};

/// Eigenvalues of one symmetry-resolved block.
#[derive(Clone, Debug)]
pub struct SectorSpectrum {
    pub eigenvalues: Vec<f64>,
    pub dim: usize,
    pub label: String,
}

/// A group element acting on basis vectors as e_s -> sign[s] * e_{perm[s]}.
#[derive(Clone)]
struct Element {
    perm: Vec<u32>,
    sign: Vec<f64>,
}

impl Element {
    fn identity(dim: usize) -> Self {
        Self {
            perm: (0..dim as u32).collect(),
            sign: vec![1.0; dim],
        }
    }

    fn from_perm(perm: Vec<u32>) -> Self {
        let dim = perm.len();
        Self {
            perm,
            sign: vec![1.0; dim],
        }
    }

    /// self after other: (a.compose(b))(s) applies b first.
    fn compose(&self, other: &Element) -> Self {
        let dim = self.perm.len();
        let mut perm = vec![0u32; dim];
        let mut sign = vec![1.0; dim];
        for s in 0..dim {
            let mid = other.perm[s] as usize;
            perm[s] = self.perm[mid];
            sign[s] = other.sign[s] * self.sign[mid];
        }
        Self { perm, sign }
    }
}

/// One candidate sector: group elements with their 1D character values.
struct Sector {
    elements: Vec<Element>,
    chars: Vec<Complex64>,
    label: String,
}

fn reverse_bits(s: u32, n: usize) -> u32 {
    s.reverse_bits() >> (32 - n)
}

fn reflection(n: usize) -> Element {
    let dim = 1usize << n;
    Element::from_perm((0..dim as u32).map(|s| reverse_bits(s, n)).collect())
}

fn rotate_left(n: usize) -> Element {
    let dim = 1usize << n;
    let full = (dim - 1) as u32;
    Element::from_perm(
        (0..dim as u32)
            .map(|s| ((s << 1) | (s >> (n - 1))) & full)
            .collect(),
    )
}

/// Global spin flip. Only a symmetry when field_z == 0. Along z it
/// complements every bit; along x it is diagonal with sign (-1)^(down count).
fn spin_flip(spec: &ChainSpec) -> Element {
    let n = spec.n_sites;
    let dim = 1usize << n;
    let full = (dim - 1) as u32;
    match spec.quant_axis {
        QuantAxis::Z => Element::from_perm((0..dim as u32).map(|s| s ^ full).collect()),
        QuantAxis::X => {
            let sign: Vec<f64> = (0..dim as u32)
                .map(|s| {
                    let downs = n as u32 - s.count_ones();
                    if downs % 2 == 0 { 1.0 } else { -1.0 }
                })
                .collect();
            Element {
                perm: (0..dim as u32).collect(),
                sign,
            }
        }
    }
}

/// Extend every sector by a Z2 generator: each existing sector splits into
/// generator-parity +1 and -1 sectors.
fn extend_by_z2(sectors: Vec<Sector>, gen: &Element, name: &str) -> Vec<Sector> {
    let mut out = Vec::with_capacity(sectors.len() * 2);
    for sector in &sectors {
        for parity in [1.0, -1.0] {
            let mut elements = sector.elements.clone();
            let mut chars = sector.chars.clone();
            for (el, ch) in sector.elements.iter().zip(&sector.chars) {
                elements.push(gen.compose(el));
                chars.push(ch * parity);
            }
            out.push(Sector {
                elements,
                chars,
                label: format!("{},{}={:+}", sector.label, name, parity as i32),
            });
        }
    }
    out
}

fn sector_candidates(spec: &ChainSpec) -> Vec<Sector> {
    let n = spec.n_sites;
    let dim = 1usize << n;
    let translations_usable = spec.boundary == Boundary::Periodic && n >= 3;

    let mut sectors: Vec<Sector> = if translations_usable {
        let t = rotate_left(n);
        let mut powers = Vec::with_capacity(n);
        powers.push(Element::identity(dim));
        for j in 1..n {
            let prev = &powers[j - 1];
            powers.push(t.compose(prev));
        }
        let mut sectors = Vec::new();
        for k in 0..n {
            let chars: Vec<Complex64> = (0..n)
                .map(|j| {
                    Complex64::from_polar(
                        1.0,
                        -2.0 * std::f64::consts::PI * (k * j) as f64 / n as f64,
                    )
                })
                .collect();
            let sector = Sector {
                elements: powers.clone(),
                chars,
                label: format!("momentum k={k}"),
            };
            // real momentum sectors retain reflection symmetry; resolve it
            if k == 0 || 2 * k == n {
                sectors.extend(extend_by_z2(vec![sector], &reflection(n), "reflection"));
            } else {
                sectors.push(sector);
            }
        }
        sectors
    } else {
        extend_by_z2(
            vec![Sector {
                elements: vec![Element::identity(dim)],
                chars: vec![Complex64::ONE],
                label: String::new(),
            }],
            &reflection(n),
            "reflection",
        )
        .into_iter()
        .map(|mut s| {
            s.label = s.label.trim_start_matches(',').to_string();
            s
        })
        .collect()
    };

    if spec.field_z == 0.0 {
        sectors = extend_by_z2(sectors, &spin_flip(spec), "flip");
    }
    sectors
}

/// Character-projected orthonormal basis, one sparse column per orbit that
/// supports the character.
fn sector_basis(sector: &Sector, dim: usize) -> Vec<Vec<(u32, Complex64)>> {
    let mut visited = vec![false; dim];
    let mut cols = Vec::new();
    for s in 0..dim as u32 {
        if visited[s as usize] {
            continue;
        }
        let mut accum: BTreeMap<u32, Complex64> = BTreeMap::new();
        for (el, ch) in sector.elements.iter().zip(&sector.chars) {
            let target = el.perm[s as usize];
            visited[target as usize] = true;
            *accum.entry(target).or_insert(Complex64::ZERO) +=
                ch.conj() * el.sign[s as usize];
        }
        let norm_sqr: f64 = accum.values().map(|c| c.norm_sqr()).sum();
        if norm_sqr > 1e-12 {
            let norm = norm_sqr.sqrt();
            cols.push(
                accum
                    .into_iter()
                    .filter(|(_, c)| c.norm() > 1e-14)
                    .map(|(i, c)| (i, c / norm))
                    .collect(),
            );
        }
    }
    cols
}

fn chars_are_real(sector: &Sector) -> bool {
    sector.chars.iter().all(|c| c.im == 0.0)
}

fn block_eigenvalues_real(
    basis: &[Vec<(u32, Complex64)>],
    h: MatRef<'_, f64>,
) -> Result<Vec<f64>> {
    let d = basis.len();
    let mut block = Mat::<f64>::zeros(d, d);
    for a in 0..d {
        for b in a..d {
            let mut acc = 0.0;
            for &(i, ci) in &basis[a] {
                for &(j, cj) in &basis[b] {
                    acc += ci.re * h[(i as usize, j as usize)] * cj.re;
                }
            }
            block[(a, b)] = acc;
            block[(b, a)] = acc;
        }
    }
    let evd = block
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let mut evals: Vec<f64> = (0..d).map(|i| evd.S()[i]).collect();
    evals.sort_by(f64::total_cmp);
    Ok(evals)
}

fn block_eigenvalues_complex(
    basis: &[Vec<(u32, Complex64)>],
    h: MatRef<'_, f64>,
) -> Result<Vec<f64>> {
    let d = basis.len();
    let mut block = Mat::<Complex64>::zeros(d, d);
    for a in 0..d {
        for b in a..d {
            let mut acc = Complex64::ZERO;
            for &(i, ci) in &basis[a] {
                for &(j, cj) in &basis[b] {
                    acc += ci.conj() * h[(i as usize, j as usize)] * cj;
                }
            }
            block[(a, b)] = acc;
            block[(b, a)] = acc.conj();
        }
    }
    let evd = block
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let mut evals: Vec<f64> = (0..d).map(|i| evd.S()[i].re).collect();
    evals.sort_by(f64::total_cmp);
    Ok(evals)
}

/// Diagonalize the largest symmetry-resolved block of `h`.
pub(super) fn largest_sector_spectrum(
    spec: &ChainSpec,
    h: MatRef<'_, f64>,
) -> Result<SectorSpectrum> {
    let dim = spec.dim();
    let sectors = sector_candidates(spec);
    let mut best: Option<(Vec<Vec<(u32, Complex64)>>, &Sector)> = None;
    for sector in &sectors {
        let basis = sector_basis(sector, dim);
        if best.as_ref().map_or(true, |(b, _)| basis.len() > b.len()) {
            best = Some((basis, sector));
        }
    }
    let (basis, sector) = best.expect("at least one sector candidate");
    let d = basis.len();
    let eigenvalues = if chars_are_real(sector) {
        block_eigenvalues_real(&basis, h)?
    } else {
        block_eigenvalues_complex(&basis, h)?
    };
    Ok(SectorSpectrum {
        eigenvalues,
        dim: d,
        label: sector.label.clone(),
    })
}
