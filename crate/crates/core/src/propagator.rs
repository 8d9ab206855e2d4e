//! Time evolution: exact spectral propagation, Lanczos-subspace (Krylov)
//! stepping for chains too long to diagonalize, unitary evolution of
//! density matrices, and Gibbs-state construction.

use faer::{Mat, MatRef, Side};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::basis::{DensityMatrix, PureState, MAX_DENSE_SITES};
use crate::error::{Error, Result};
use crate::hamiltonian::IsingOperator;

/// Default Lanczos subspace dimension for [`evolve_krylov`].
pub const KRYLOV_DEFAULT_DIM: usize = 30;

/// Default Krylov step.
pub const KRYLOV_DEFAULT_STEP: f64 = 0.05;

/// Per-step residual bound before a Krylov step is bisected.
pub const KRYLOV_RESIDUAL_TOL: f64 = 1e-10;

const MAX_BISECTIONS: usize = 40;

/// How many sample times one pass over the eigenvector matrix serves in
/// [`SpectralEvolver::states_at`].
const TIME_BATCH: usize = 8;

/// Eigenvalues (ascending) and orthogonal eigenvectors of a real symmetric
/// Hamiltonian.
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: Mat<f64>,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> MatRef<'_, f64> {
        self.eigenvectors.as_ref()
    }

    pub fn into_eigenvalues(self) -> Vec<f64> {
        self.eigenvalues
    }

    /// Ground-state energy.
    pub fn e_min(&self) -> f64 {
        self.eigenvalues[0]
    }
}

/// Full eigendecomposition of a real symmetric matrix. Errors if the
/// matrix is not square, exceeds the dense cap, or is asymmetric beyond
/// 1e-12 relative to its largest entry.
pub fn spectral_decompose(h: MatRef<'_, f64>) -> Result<SpectralDecomposition> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(Error::Dimension {
            expected: n,
            got: h.ncols(),
        });
    }
    if n > (1 << MAX_DENSE_SITES) {
        return Err(Error::DenseSize {
            n_sites: n.ilog2() as usize,
            max: MAX_DENSE_SITES,
        });
    }
    let scale = (0..n)
        .map(|i| (0..n).map(|j| h[(i, j)].abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    let asym = crate::hamiltonian::max_asymmetry(h);
    if asym > 1e-12 * scale.max(1.0) {
        return Err(Error::NotSymmetric { deviation: asym });
    }

    let evd = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let mut eigenvalues: Vec<f64> = (0..n).map(|i| evd.S()[i]).collect();
    let mut eigenvectors = evd.U().to_owned();

    // faer returns ascending eigenvalues; enforce it anyway
    if eigenvalues.windows(2).any(|w| w[0] > w[1]) {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eigenvalues[a].total_cmp(&eigenvalues[b]));
        let sorted_vals: Vec<f64> = order.iter().map(|&i| eigenvalues[i]).collect();
        let mut sorted_vecs = Mat::<f64>::zeros(n, n);
        for (new, &old) in order.iter().enumerate() {
            for i in 0..n {
                sorted_vecs[(i, new)] = eigenvectors[(i, old)];
            }
        }
        eigenvalues = sorted_vals;
        eigenvectors = sorted_vecs;
    }

    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Psi(t) = V exp(-i E t) V^T Psi(0). Any real t, evaluated directly.
pub fn evolve_spectral(
    decomp: &SpectralDecomposition,
    psi0: &PureState,
    t: f64,
) -> Result<PureState> {
    SpectralEvolver::new(decomp, psi0)?.state_at(t)
}

/// Caches V^T Psi(0) so that many sample times reuse one projection.
pub struct SpectralEvolver<'a> {
    decomp: &'a SpectralDecomposition,
    coeffs: Vec<Complex64>,
    n_sites: usize,
}

impl<'a> SpectralEvolver<'a> {
    pub fn new(decomp: &'a SpectralDecomposition, psi0: &PureState) -> Result<Self> {
        let n = decomp.dim();
        if psi0.dim() != n {
            return Err(Error::Dimension {
                expected: n,
                got: psi0.dim(),
            });
        }
        let v = decomp.eigenvectors();
        let amps = psi0.amplitudes();
        let coeffs: Vec<Complex64> = (0..n)
            .map(|k| {
                let col = v.col(k);
                let mut acc = Complex64::ZERO;
                for i in 0..n {
                    acc += amps[i] * col[i];
                }
                acc
            })
            .collect();
        Ok(Self {
            decomp,
            coeffs,
            n_sites: psi0.n_sites(),
        })
    }

    pub fn state_at(&self, t: f64) -> Result<PureState> {
        Ok(self.states_at(&[t]).pop().expect("one state"))
    }

    /// Evolved states at each sample time. Times are processed in fixed
    /// blocks with a fixed accumulation order, so results are bitwise
    /// reproducible for any worker count.
    pub fn states_at(&self, times: &[f64]) -> Vec<PureState> {
        let chunks: Vec<&[f64]> = times.chunks(TIME_BATCH).collect();
        let states: Vec<Vec<PureState>> = chunks
            .par_iter()
            .map(|chunk| self.states_chunk(chunk))
            .collect();
        states.into_iter().flatten().collect()
    }

    fn states_chunk(&self, times: &[f64]) -> Vec<PureState> {
        let n = self.decomp.dim();
        let v = self.decomp.eigenvectors();
        let b = times.len();
        let mut outs = vec![vec![Complex64::ZERO; n]; b];
        let mut coefs = vec![Complex64::ZERO; b];
        for k in 0..n {
            let ck = self.coeffs[k];
            if ck.norm_sqr() == 0.0 {
                continue;
            }
            let ek = self.decomp.eigenvalues[k];
            for (c, &t) in coefs.iter_mut().zip(times) {
                *c = Complex64::from_polar(1.0, -ek * t) * ck;
            }
            let col = v.col(k);
            for (out, &c) in outs.iter_mut().zip(coefs.iter()) {
                for i in 0..n {
                    out[i] += col[i] * c;
                }
            }
        }
        outs.into_iter()
            .map(|amps| PureState::from_raw(amps, self.n_sites))
            .collect()
    }
}

/// Repeatedly applies a Lanczos-subspace approximation of exp(-i H step)
/// built from the matrix-free operator. Steps whose residual estimate
/// exceeds [`KRYLOV_RESIDUAL_TOL`] are bisected; the state is renormalized
/// after every step and the accumulated drift is logged.
pub fn evolve_krylov(
    spec: &crate::basis::ChainSpec,
    psi0: &PureState,
    t: f64,
    step: f64,
    subspace_dim: usize,
) -> Result<PureState> {
    if step <= 0.0 || !step.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "Krylov step must be positive, got {step}"
        )));
    }
    if subspace_dim < 4 {
        return Err(Error::InvalidArgument(format!(
            "Krylov subspace dimension must be at least 4, got {subspace_dim}"
        )));
    }
    if psi0.dim() != spec.dim() {
        return Err(Error::Dimension {
            expected: spec.dim(),
            got: psi0.dim(),
        });
    }

    let op = IsingOperator::new(spec);
    let mut amps = psi0.amplitudes().to_vec();
    let mut remaining = t.abs();
    let direction = t.signum();
    let mut drift = 0.0f64;

    while remaining > 1e-15 {
        let tau = step.min(remaining);
        let advanced = krylov_step(&op, &mut amps, direction * tau, subspace_dim)?;
        drift += advanced;
        remaining -= tau;
    }
    log::debug!("krylov norm renormalization drift over t={t}: {drift:.3e}");
    Ok(PureState::from_raw(amps, psi0.n_sites()))
}

/// One error-controlled step: Lanczos subspace of dimension `m`, bisected
/// until the residual estimate drops below tolerance. Returns the
/// accumulated |norm - 1| that was renormalized away.
fn krylov_step(
    op: &IsingOperator,
    amps: &mut Vec<Complex64>,
    tau: f64,
    m: usize,
) -> Result<f64> {
    let mut remaining = tau;
    let mut sub_tau = tau;
    let mut bisections = 0usize;
    let mut drift = 0.0;
    while remaining.abs() > 1e-15 {
        let piece = if remaining.abs() < sub_tau.abs() {
            remaining
        } else {
            sub_tau
        };
        match try_lanczos_exp(op, amps, piece, m) {
            LanczosOutcome::Converged(next, d) => {
                *amps = next;
                drift += d;
                remaining -= piece;
            }
            LanczosOutcome::Residual(residual) => {
                bisections += 1;
                if bisections > MAX_BISECTIONS {
                    return Err(Error::NonConvergence {
                        bisections,
                        residual,
                    });
                }
                sub_tau *= 0.5;
            }
        }
    }
    Ok(drift)
}

enum LanczosOutcome {
    /// Evolved amplitudes and the renormalized |norm - 1|.
    Converged(Vec<Complex64>, f64),
    /// Residual estimate too large; caller should bisect.
    Residual(f64),
}

fn try_lanczos_exp(
    op: &IsingOperator,
    amps: &[Complex64],
    tau: f64,
    m: usize,
) -> LanczosOutcome {
    let dim = op.dim();
    let scale = op.norm_bound().max(1.0);

    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m + 1);
    let mut alphas: Vec<f64> = Vec::with_capacity(m);
    let mut betas: Vec<f64> = Vec::with_capacity(m);

    let norm0 = l2_norm(amps);
    basis.push(amps.iter().map(|a| a / norm0).collect());

    let mut happy = false;
    for j in 0..m {
        let mut w = op.apply(&basis[j]);
        let alpha = re_inner(&basis[j], &w);
        axpy(&mut w, -Complex64::from(alpha), &basis[j]);
        if j > 0 {
            axpy(&mut w, -Complex64::from(betas[j - 1]), &basis[j - 1]);
        }
        // full reorthogonalization; cheap next to the operator applies
        for prev in &basis {
            let overlap = inner(prev, &w);
            if overlap.norm_sqr() > 0.0 {
                axpy(&mut w, -overlap, prev);
            }
        }
        alphas.push(alpha);
        let beta = l2_norm(&w);
        if beta < 1e-13 * scale {
            happy = true;
            break;
        }
        betas.push(beta);
        if j + 1 < m {
            for x in &mut w {
                *x /= beta;
            }
            basis.push(w);
        }
    }

    let k = alphas.len();
    let mut t_small = Mat::<f64>::zeros(k, k);
    for i in 0..k {
        t_small[(i, i)] = alphas[i];
        if i + 1 < k {
            t_small[(i + 1, i)] = betas[i];
            t_small[(i, i + 1)] = betas[i];
        }
    }
    let evd = t_small
        .self_adjoint_eigen(Side::Lower)
        .expect("small tridiagonal eigensolve");
    let q = evd.U();
    // y = Q exp(-i Lambda tau) Q^T e_1
    let mut y = vec![Complex64::ZERO; k];
    for c in 0..k {
        let phase = Complex64::from_polar(1.0, -evd.S()[c] * tau);
        let q0 = q[(0, c)];
        for (r, yr) in y.iter_mut().enumerate() {
            *yr += q[(r, c)] * phase * q0;
        }
    }

    if !happy {
        let beta_next = betas.get(k - 1).copied().unwrap_or(0.0);
        let residual = (beta_next * y[k - 1].norm() * tau.abs()).abs();
        if residual > KRYLOV_RESIDUAL_TOL {
            return LanczosOutcome::Residual(residual);
        }
    }

    let mut out = vec![Complex64::ZERO; dim];
    for (j, yj) in y.iter().enumerate() {
        let coef = yj * norm0;
        for (o, b) in out.iter_mut().zip(&basis[j]) {
            *o += b * coef;
        }
    }
    let norm_out = l2_norm(&out);
    let drift = (norm_out - 1.0).abs();
    for x in &mut out {
        *x /= norm_out;
    }
    LanczosOutcome::Converged(out, drift)
}

fn l2_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn re_inner(a: &[Complex64], b: &[Complex64]) -> f64 {
    inner(a, b).re
}

fn axpy(y: &mut [Complex64], alpha: Complex64, x: &[Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// rho(t) = U rho U^dagger with U = V exp(-i E t) V^T, computed by
/// transforming to the eigenbasis, applying phase differences
/// elementwise, and transforming back.
pub fn evolve_density(
    decomp: &SpectralDecomposition,
    rho0: &DensityMatrix,
    t: f64,
) -> Result<DensityMatrix> {
    let n = decomp.dim();
    if rho0.dim() != n {
        return Err(Error::Dimension {
            expected: n,
            got: rho0.dim(),
        });
    }
    let v = decomp.eigenvectors();

    let mut re = Mat::<f64>::zeros(n, n);
    let mut im = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let z = rho0.entry(i, j);
            re[(i, j)] = z.re;
            im[(i, j)] = z.im;
        }
    }
    // eigenbasis: V^T rho V
    let re_t = v.transpose() * &re * v;
    let im_t = v.transpose() * &im * v;

    // phases: exp(-i (E_k - E_l) t)
    let e = decomp.eigenvalues();
    let mut re_p = Mat::<f64>::zeros(n, n);
    let mut im_p = Mat::<f64>::zeros(n, n);
    for k in 0..n {
        for l in 0..n {
            let phase = Complex64::from_polar(1.0, -(e[k] - e[l]) * t);
            let z = Complex64::new(re_t[(k, l)], im_t[(k, l)]) * phase;
            re_p[(k, l)] = z.re;
            im_p[(k, l)] = z.im;
        }
    }

    // back: V rho' V^T
    let re_b = v * &re_p * v.transpose();
    let im_b = v * &im_p * v.transpose();
    let mut data = vec![Complex64::ZERO; n * n];
    for i in 0..n {
        for j in 0..n {
            data[i * n + j] = Complex64::new(re_b[(i, j)], im_b[(i, j)]);
        }
    }
    DensityMatrix::new(data, rho0.n_sites())
}

/// Gibbs state exp(-beta H)/Z in the eigenbasis, with the spectrum shifted
/// by the ground-state energy so no exponential overflows.
pub fn gibbs_state(decomp: &SpectralDecomposition, beta: f64) -> Result<DensityMatrix> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "inverse temperature must be finite and nonnegative, got {beta}"
        )));
    }
    let n = decomp.dim();
    let e0 = decomp.e_min();
    let weights: Vec<f64> = decomp
        .eigenvalues()
        .iter()
        .map(|e| (-beta * (e - e0)).exp())
        .collect();
    let z: f64 = weights.iter().sum();
    let v = decomp.eigenvectors();
    // scale columns by p_k, multiply by V^T
    let mut scaled = Mat::<f64>::zeros(n, n);
    for k in 0..n {
        let p = weights[k] / z;
        for i in 0..n {
            scaled[(i, k)] = v[(i, k)] * p;
        }
    }
    let rho = &scaled * v.transpose();
    let n_sites = n.ilog2() as usize;
    let mut data = vec![Complex64::ZERO; n * n];
    for i in 0..n {
        for j in 0..n {
            data[i * n + j] = Complex64::new(rho[(i, j)], 0.0);
        }
    }
    DensityMatrix::new(data, n_sites)
}

/// Uniform sampling grid for trajectories.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub dt: f64,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, dt: f64) -> Result<Self> {
        if !(t_start.is_finite() && t_end.is_finite() && dt.is_finite()) {
            return Err(Error::NonFinite { name: "time grid" });
        }
        if t_end <= t_start {
            return Err(Error::InvalidArgument(format!(
                "time grid end {t_end} must exceed start {t_start}"
            )));
        }
        if dt <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "time step must be positive, got {dt}"
            )));
        }
        if (t_end - t_start) / dt > 1e7 {
            return Err(Error::InvalidArgument(
                "time grid exceeds 1e7 steps".to_string(),
            ));
        }
        Ok(Self { t_start, t_end, dt })
    }

    pub fn len(&self) -> usize {
        ((self.t_end - self.t_start) / self.dt + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Sample times t_start + k dt, inclusive of both ends when they land
    /// on the grid.
    pub fn times(&self) -> Vec<f64> {
        (0..self.len())
            .map(|k| self.t_start + k as f64 * self.dt)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{all_down_state, ChainSpec};
    use crate::hamiltonian::build_dense;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_state(n: usize, rng: &mut ChaCha8Rng) -> PureState {
        let dim = 1usize << n;
        let amps: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        PureState::normalized(amps, n).unwrap()
    }

    fn decompose(spec: &ChainSpec) -> SpectralDecomposition {
        spectral_decompose(build_dense(spec).unwrap().as_ref()).unwrap()
    }

    #[test]
    fn decompose_diagonal_matrix() {
        let mut h = Mat::<f64>::zeros(4, 4);
        for (i, d) in [1.0, -1.0, -1.0, 1.0].iter().enumerate() {
            h[(i, i)] = *d;
        }
        let d = spectral_decompose(h.as_ref()).unwrap();
        let expected = [-1.0, -1.0, 1.0, 1.0];
        for (a, b) in d.eigenvalues().iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn decompose_sigma_x() {
        let mut h = Mat::<f64>::zeros(2, 2);
        h[(0, 1)] = 1.0;
        h[(1, 0)] = 1.0;
        let d = spectral_decompose(h.as_ref()).unwrap();
        assert_abs_diff_eq!(d.eigenvalues()[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d.eigenvalues()[1], 1.0, epsilon = 1e-14);
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        let v = d.eigenvectors();
        for k in 0..2 {
            assert_abs_diff_eq!(v[(0, k)].abs(), inv_sqrt2, epsilon = 1e-14);
            assert_abs_diff_eq!(v[(1, k)].abs(), inv_sqrt2, epsilon = 1e-14);
        }
    }

    #[test]
    fn decompose_trace_identity() {
        let spec = ChainSpec::new(8, 1.0, 0.9, 0.5).unwrap();
        let h = build_dense(&spec).unwrap();
        let trace: f64 = (0..spec.dim()).map(|i| h[(i, i)]).sum();
        let d = spectral_decompose(h.as_ref()).unwrap();
        let eigensum: f64 = d.eigenvalues().iter().sum();
        assert_abs_diff_eq!(trace, eigensum, epsilon = 1e-9);
    }

    #[test]
    fn decompose_rejects_asymmetric() {
        let mut h = Mat::<f64>::zeros(3, 3);
        h[(0, 1)] = 1.0;
        assert!(matches!(
            spectral_decompose(h.as_ref()),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn decompose_reconstructs_matrix() {
        let spec = ChainSpec::new(6, 1.0, 0.7, 0.4).unwrap();
        let h = build_dense(&spec).unwrap();
        let d = spectral_decompose(h.as_ref()).unwrap();
        let v = d.eigenvectors();
        let n = spec.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let col = (rng.random::<f64>() * n as f64) as usize % n;
            for i in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += v[(i, k)] * d.eigenvalues()[k] * v[(col, k)];
                }
                assert_abs_diff_eq!(acc, h[(i, col)], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn stationary_state_under_diagonal_hamiltonian() {
        let spec = ChainSpec::new(6, 1.0, 0.0, 1.0).unwrap();
        let d = decompose(&spec);
        let psi0 = all_down_state(6).unwrap();
        for t in [0.5, 3.0, 50.0] {
            let psi_t = evolve_spectral(&d, &psi0, t).unwrap();
            assert_abs_diff_eq!(psi_t.fidelity(&psi0), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_spin_rabi_closed_form() {
        let hx = 0.7;
        let spec = ChainSpec::new(1, 0.0, hx, 0.0).unwrap();
        let d = decompose(&spec);
        let psi0 = all_down_state(1).unwrap();
        for t in [0.0, 0.3, 1.9, 7.7] {
            let psi = evolve_spectral(&d, &psi0, t).unwrap();
            let expected0 = Complex64::new((hx * t).cos(), 0.0);
            let expected1 = Complex64::new(0.0, -(hx * t).sin());
            assert!((psi.amplitudes()[0] - expected0).norm() < 1e-12);
            assert!((psi.amplitudes()[1] - expected1).norm() < 1e-12);
        }
    }

    #[test]
    fn evolve_at_zero_time_is_identity() {
        let spec = ChainSpec::new(5, 1.0, 0.8, 0.6).unwrap();
        let d = decompose(&spec);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let psi = random_state(5, &mut rng);
        let evolved = evolve_spectral(&d, &psi, 0.0).unwrap();
        for (a, b) in psi.amplitudes().iter().zip(evolved.amplitudes()) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn unitarity_composition_and_reversal() {
        let spec = ChainSpec::new(5, 1.0, 0.9, 0.5).unwrap();
        let d = decompose(&spec);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let psi = random_state(5, &mut rng);

        let t1 = 0.73;
        let t2 = 1.41;
        let once = evolve_spectral(&d, &psi, t1 + t2).unwrap();
        let twice = evolve_spectral(&d, &evolve_spectral(&d, &psi, t1).unwrap(), t2).unwrap();
        for (a, b) in once.amplitudes().iter().zip(twice.amplitudes()) {
            assert!((a - b).norm() < 1e-10);
        }

        let back = evolve_spectral(&d, &once, -(t1 + t2)).unwrap();
        for (a, b) in back.amplitudes().iter().zip(psi.amplitudes()) {
            assert!((a - b).norm() < 1e-10);
        }

        for t in [10.0, 100.0] {
            let evolved = evolve_spectral(&d, &psi, t).unwrap();
            assert_abs_diff_eq!(evolved.norm(), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn states_at_matches_state_at() {
        let spec = ChainSpec::new(6, 1.0, 0.8, 0.3).unwrap();
        let d = decompose(&spec);
        let psi0 = all_down_state(6).unwrap();
        let evolver = SpectralEvolver::new(&d, &psi0).unwrap();
        let times: Vec<f64> = (0..23).map(|k| 0.1 * k as f64).collect();
        let batch = evolver.states_at(&times);
        for (t, state) in times.iter().zip(&batch) {
            let single = evolver.state_at(*t).unwrap();
            for (a, b) in state.amplitudes().iter().zip(single.amplitudes()) {
                assert!((a - b).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn krylov_matches_spectral() {
        let spec = ChainSpec::new(8, 1.0, 0.9, 0.5).unwrap();
        let d = decompose(&spec);
        let psi0 = all_down_state(8).unwrap();
        let t = 10.0;
        let spectral = evolve_spectral(&d, &psi0, t).unwrap();
        let krylov = evolve_krylov(&spec, &psi0, t, KRYLOV_DEFAULT_STEP, KRYLOV_DEFAULT_DIM)
            .unwrap();
        let fidelity = krylov.fidelity(&spectral);
        assert!(
            fidelity > 1.0 - 1e-10,
            "krylov-spectral fidelity {fidelity}"
        );
        assert_abs_diff_eq!(krylov.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn krylov_stationary_state_up_to_phase() {
        let spec = ChainSpec::new(6, 1.0, 0.0, 1.0).unwrap();
        let psi0 = all_down_state(6).unwrap();
        let evolved = evolve_krylov(&spec, &psi0, 3.7, 0.1, 10).unwrap();
        assert_abs_diff_eq!(evolved.fidelity(&psi0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn krylov_conserves_energy() {
        let spec = ChainSpec::new(10, 1.0, 0.8, 0.6).unwrap();
        let psi0 = all_down_state(10).unwrap();
        let op = IsingOperator::new(&spec);
        let e_initial = re_inner(psi0.amplitudes(), &op.apply(psi0.amplitudes()));
        let mut psi = psi0;
        for _ in 0..4 {
            psi = evolve_krylov(&spec, &psi, 5.0, KRYLOV_DEFAULT_STEP, KRYLOV_DEFAULT_DIM)
                .unwrap();
            let e = re_inner(psi.amplitudes(), &op.apply(psi.amplitudes()));
            let rel = ((e - e_initial) / e_initial.abs().max(1.0)).abs();
            assert!(rel < 1e-9, "energy drift {rel}");
        }
    }

    #[test]
    fn krylov_rejects_bad_arguments() {
        let spec = ChainSpec::new(4, 1.0, 0.5, 0.5).unwrap();
        let psi0 = all_down_state(4).unwrap();
        assert!(evolve_krylov(&spec, &psi0, 1.0, 0.0, 30).is_err());
        assert!(evolve_krylov(&spec, &psi0, 1.0, 0.05, 3).is_err());
    }

    #[test]
    fn density_evolution_consistent_with_pure_evolution() {
        let spec = ChainSpec::new(4, 1.0, 0.7, 0.4).unwrap();
        let d = decompose(&spec);
        let psi0 = all_down_state(4).unwrap();
        let t = 1.3;
        let rho_t = evolve_density(&d, &DensityMatrix::from_pure(&psi0), t).unwrap();
        let psi_t = evolve_spectral(&d, &psi0, t).unwrap();
        let expected = DensityMatrix::from_pure(&psi_t);
        for i in 0..spec.dim() {
            for j in 0..spec.dim() {
                assert!((rho_t.entry(i, j) - expected.entry(i, j)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn maximally_mixed_state_is_invariant() {
        let spec = ChainSpec::new(4, 1.0, 0.9, 0.2).unwrap();
        let d = decompose(&spec);
        let rho = DensityMatrix::maximally_mixed(4);
        let evolved = evolve_density(&d, &rho, 2.9).unwrap();
        for i in 0..16 {
            for j in 0..16 {
                assert!((evolved.entry(i, j) - rho.entry(i, j)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn density_evolution_preserves_trace() {
        let spec = ChainSpec::new(4, 1.0, 0.6, 0.8).unwrap();
        let d = decompose(&spec);
        let rho = gibbs_state(&d, 0.7).unwrap();
        let evolved = evolve_density(&d, &rho, 4.2).unwrap();
        assert_abs_diff_eq!(evolved.trace().re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(evolved.trace().im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn gibbs_limits() {
        let spec = ChainSpec::new(4, 1.0, 0.8, 0.3).unwrap();
        let d = decompose(&spec);

        let hot = gibbs_state(&d, 0.0).unwrap();
        let mixed = DensityMatrix::maximally_mixed(4);
        for i in 0..16 {
            for j in 0..16 {
                assert!((hot.entry(i, j) - mixed.entry(i, j)).norm() < 1e-14);
            }
        }

        // large beta on a gapped spectrum: ground-state projector
        let cold = gibbs_state(&d, 1e3).unwrap();
        let v = d.eigenvectors();
        for i in 0..16 {
            for j in 0..16 {
                let proj = v[(i, 0)] * v[(j, 0)];
                assert!((cold.entry(i, j).re - proj).abs() < 1e-6);
            }
        }

        assert_abs_diff_eq!(gibbs_state(&d, 2.5).unwrap().trace().re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn gibbs_energy_decreases_with_beta() {
        let spec = ChainSpec::new(4, 1.0, 0.9, 0.7).unwrap();
        let h = build_dense(&spec).unwrap();
        let d = decompose(&spec);
        let energy = |rho: &DensityMatrix| -> f64 {
            let n = spec.dim();
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    acc += (rho.entry(i, j) * h[(j, i)]).re;
                }
            }
            acc
        };
        let mut last = f64::INFINITY;
        for beta in [0.0, 0.2, 0.5, 1.0, 2.0, 5.0] {
            let e = energy(&gibbs_state(&d, beta).unwrap());
            assert!(e <= last + 1e-12, "energy not monotone at beta={beta}");
            last = e;
        }
    }

    #[test]
    fn gibbs_rejects_bad_beta() {
        let spec = ChainSpec::new(3, 1.0, 0.5, 0.5).unwrap();
        let d = decompose(&spec);
        assert!(gibbs_state(&d, -1.0).is_err());
        assert!(gibbs_state(&d, f64::INFINITY).is_err());
    }

    #[test]
    fn time_grid_validation_and_sampling() {
        let grid = TimeGrid::new(0.0, 1.0, 0.25).unwrap();
        assert_eq!(grid.len(), 5);
        let times = grid.times();
        assert_abs_diff_eq!(times[4], 1.0);

        assert!(TimeGrid::new(1.0, 1.0, 0.1).is_err());
        assert!(TimeGrid::new(0.0, 1.0, -0.1).is_err());
        assert!(TimeGrid::new(0.0, 1e9, 1e-2).is_err());
    }
}
