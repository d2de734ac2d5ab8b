//! Reduced Gaussian models for heavy power sweeps.
//!
//! Both tests consume the observation only through its pairings with the
//! dictionary, and each pairing vector is exactly Gaussian: for the sup test
//! against `f = δ·ê_k` the normalized statistic vector is `(δ/σ)·R e_k + g`
//! with `g ~ N(0, R)` and `R` the normalized-image correlation matrix; for
//! the χ² test against `f = Σ_k c_k u_k` the pairing vector is
//! `B̃ c + σ·L z` with `B̃_{mk} = ⟨A u_k, v_m⟩_n`, `Ξ = L Lᵀ` the vaguelette
//! Gram, and `z` standard normal. Sampling those finite-dimensional vectors
//! reproduces each test's rejection probability exactly while skipping the
//! full observation grid, which makes large replication counts affordable.

use crate::detect::chi2_null_quantile_from_eigenvalues;
use crate::dict::{build_index_set_interval, build_index_set_square_2d, DictIndex, DictionarySystem};
use crate::error::{Error, Result};
use crate::experiments::power::{run_mc, sample_sphere_coefficients_real, PowerEstimate};
use crate::gram::{gram, GramVariant};
use crate::operators::{integrate_forward, radon_forward};
use crate::rng::{compose_stream, fill_standard_normal, stream_rng, StreamKind};
use crate::sampling::{
    inner_product_n, make_product_grid_2d, make_uniform_grid, Grid, SampledFunction, ScalarField,
};
use crate::wavelets::{wavelet_element, wavelet_element_2d, WaveletBasis1D};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::sync::Arc;

/// Lower Cholesky factor, with a positive-definiteness error naming the
/// matrix when the factorization fails.
fn cholesky_lower(matrix: &DMatrix<f64>, name: &str) -> Result<DMatrix<f64>> {
    match nalgebra::linalg::Cholesky::new(matrix.clone()) {
        Some(c) => Ok(c.unpack()),
        None => {
            let eigs = matrix.symmetric_eigenvalues();
            let min_eig = eigs.iter().copied().fold(f64::INFINITY, f64::min);
            let max_eig = eigs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Err(Error::NotPositiveDefinite {
                name: name.into(),
                min_eig,
                max_eig,
            })
        }
    }
}

/// Accumulate `out += scale · L z` for a lower-triangular `L` stored
/// column-major (nalgebra layout), sweeping columns for contiguous access.
fn add_lower_triangular_mv(l: &DMatrix<f64>, z: &[f64], scale: f64, out: &mut [f64]) {
    let n = z.len();
    let data = l.as_slice();
    for (i, &zi) in z.iter().enumerate() {
        let s = scale * zi;
        if s == 0.0 {
            continue;
        }
        let col = &data[i * n..(i + 1) * n];
        for m in i..n {
            out[m] += col[m] * s;
        }
    }
}

/// Exact reduced model of the sup test: the correlation matrix of the
/// normalized images and its Cholesky factor.
#[derive(Debug, Clone)]
pub struct ReducedSupModel {
    corr: DMatrix<f64>,
    chol: DMatrix<f64>,
}

impl ReducedSupModel {
    /// Build from real dictionary images (normalization happens here).
    pub fn from_images(images: &[SampledFunction]) -> Result<Self> {
        if images.is_empty() {
            return Err(Error::EmptyIndexSet("reduced sup model over no images".into()));
        }
        let n = images.len();
        let mut g = DMatrix::zeros(n, n);
        for k in 0..n {
            for k2 in k..n {
                let ip = inner_product_n(&images[k], &images[k2])?;
                if ip.im != 0.0 {
                    return Err(Error::InvalidArgument(
                        "reduced sup model requires real images".into(),
                    ));
                }
                g[(k, k2)] = ip.re;
                g[(k2, k)] = ip.re;
            }
        }
        Self::from_gram(g)
    }

    /// Build from a precomputed image Gram matrix (any positive scaling per
    /// element; rows/columns are normalized to a correlation matrix here).
    pub fn from_gram(gram_matrix: DMatrix<f64>) -> Result<Self> {
        let n = gram_matrix.nrows();
        if n == 0 || gram_matrix.ncols() != n {
            return Err(Error::InvalidArgument(
                "image Gram matrix must be square and nonempty".into(),
            ));
        }
        let mut d = vec![0.0; n];
        for (k, dk) in d.iter_mut().enumerate() {
            let diag = gram_matrix[(k, k)];
            if !(diag.is_finite() && diag > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "image {k} has non-positive squared norm {diag}"
                )));
            }
            *dk = diag.sqrt();
        }
        let mut corr = gram_matrix;
        for k in 0..n {
            for k2 in 0..n {
                corr[(k, k2)] /= d[k] * d[k2];
            }
        }
        let chol = cholesky_lower(&corr, "image correlation")?;
        Ok(ReducedSupModel { corr, chol })
    }

    pub fn n(&self) -> usize {
        self.corr.nrows()
    }

    pub fn correlation(&self) -> &DMatrix<f64> {
        &self.corr
    }

    /// Monte-Carlo power of the sup test at threshold `threshold` against the
    /// cycled single-anomaly alternatives `f = δ·ê_k`, drawing the statistic
    /// vector `(δ/σ)·R e_k + L z` directly.
    pub fn power_case1(
        &self,
        delta: f64,
        sigma: f64,
        threshold: f64,
        replications: u64,
        seed: u64,
        rep_salt: u64,
    ) -> Result<PowerEstimate> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "noise level must be positive, got {sigma}"
            )));
        }
        let n = self.n();
        let snr = delta / sigma;
        run_mc(replications, Some(n), |rep| {
            let k = (rep % n as u64) as usize;
            let mut rng = stream_rng(seed, compose_stream(StreamKind::Noise, rep_salt + rep));
            let mut z = vec![0.0; n];
            fill_standard_normal(&mut rng, &mut z);
            let mut stat = vec![0.0; n];
            add_lower_triangular_mv(&self.chol, &z, 1.0, &mut stat);
            let mut best = 0.0f64;
            for m in 0..n {
                let s = (snr * self.corr[(m, k)] + stat[m]).abs();
                if s > best {
                    best = s;
                }
            }
            Ok((best > threshold, Some(k)))
        })
    }
}

/// Exact reduced model of the χ² test: the image-vaguelette pairing matrix,
/// the vaguelette Gram's Cholesky factor and eigenvalues, and the
/// quasi-singular values that define the alternative sphere.
#[derive(Debug, Clone)]
pub struct ReducedChi2Model {
    b_tilde: DMatrix<f64>,
    chol: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    lambdas: Vec<f64>,
}

impl ReducedChi2Model {
    /// Build from a dictionary system with vaguelettes by direct pairings
    /// (quadratic in the dictionary size; for large translation-invariant
    /// systems prefer [`radon_translation_chi2_model`]).
    pub fn from_system(system: &DictionarySystem) -> Result<Self> {
        let vags = system
            .vaguelettes()
            .ok_or_else(|| Error::MissingData("reduced χ² model needs vaguelettes".into()))?;
        let lambdas = system.quasi_singular().unwrap().to_vec();
        let xi = gram(system, GramVariant::Xi)?;
        let xi_mat = xi
            .real_matrix()
            .ok_or_else(|| {
                Error::InvalidArgument("reduced χ² model requires a real vaguelette Gram".into())
            })?
            .clone();
        let n = system.n();
        let mut b_tilde = DMatrix::zeros(n, n);
        for m in 0..n {
            for k in 0..n {
                let ip = inner_product_n(&system.images()[k], &vags[m])?;
                if ip.im != 0.0 {
                    return Err(Error::InvalidArgument(
                        "reduced χ² model requires real pairings".into(),
                    ));
                }
                b_tilde[(m, k)] = ip.re;
            }
        }
        Self::from_parts(b_tilde, xi_mat, lambdas)
    }

    /// Build from precomputed parts: `b_tilde[m, k] = ⟨A u_k, v_m⟩_n` and the
    /// vaguelette Gram `xi`.
    pub fn from_parts(
        b_tilde: DMatrix<f64>,
        xi: DMatrix<f64>,
        lambdas: Vec<f64>,
    ) -> Result<Self> {
        let n = xi.nrows();
        if n == 0 || xi.ncols() != n {
            return Err(Error::InvalidArgument("Ξ must be square and nonempty".into()));
        }
        if b_tilde.nrows() != n || b_tilde.ncols() != lambdas.len() {
            return Err(Error::InvalidArgument(format!(
                "pairing matrix is {}×{}, expected {n} rows and {} columns",
                b_tilde.nrows(),
                b_tilde.ncols(),
                lambdas.len()
            )));
        }
        let mut eigenvalues: Vec<f64> = xi.symmetric_eigenvalues().iter().copied().collect();
        eigenvalues.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let (min_eig, max_eig) = (eigenvalues[n - 1], eigenvalues[0]);
        if !(min_eig.is_finite() && min_eig > 1e-10 * max_eig.max(0.0)) {
            return Err(Error::NotPositiveDefinite {
                name: GramVariant::Xi.name().into(),
                min_eig,
                max_eig,
            });
        }
        let chol = cholesky_lower(&xi, GramVariant::Xi.name())?;
        Ok(ReducedChi2Model {
            b_tilde,
            chol,
            eigenvalues,
            lambdas,
        })
    }

    pub fn n(&self) -> usize {
        self.chol.nrows()
    }

    /// Ξ eigenvalues, nonincreasing.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn b_tilde(&self) -> &DMatrix<f64> {
        &self.b_tilde
    }

    /// Monte-Carlo `1−α` quantile of the null statistic `σ²·Σ_i s_i χ²` from
    /// the stored Ξ eigenvalues.
    pub fn quantile(
        &self,
        sigma: f64,
        alpha: f64,
        field: ScalarField,
        mc_draws: u64,
        seed: u64,
    ) -> Result<f64> {
        chi2_null_quantile_from_eigenvalues(&self.eigenvalues, sigma, alpha, field, mc_draws, seed)
    }

    /// Monte-Carlo power of the χ² test at `quantile` against alternatives
    /// drawn uniformly from the `δ`-sphere, sampling the pairing vector
    /// `B̃ c + σ L z` directly.
    pub fn power_case2(
        &self,
        delta: f64,
        sigma: f64,
        quantile: f64,
        replications: u64,
        seed: u64,
        rep_salt: u64,
    ) -> Result<PowerEstimate> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "noise level must be positive, got {sigma}"
            )));
        }
        let n = self.n();
        let b_data = self.b_tilde.as_slice();
        run_mc(replications, None, |rep| {
            let mut alt_rng =
                stream_rng(seed, compose_stream(StreamKind::Alternative, rep_salt + rep));
            let c = sample_sphere_coefficients_real(&mut alt_rng, &self.lambdas, delta)?;
            let mut p = vec![0.0; n];
            for (k, &ck) in c.iter().enumerate() {
                if ck == 0.0 {
                    continue;
                }
                let col = &b_data[k * n..(k + 1) * n];
                for (pm, &b) in p.iter_mut().zip(col) {
                    *pm += b * ck;
                }
            }
            let mut rng = stream_rng(seed, compose_stream(StreamKind::Noise, rep_salt + rep));
            let mut z = vec![0.0; n];
            fill_standard_normal(&mut rng, &mut z);
            add_lower_triangular_mv(&self.chol, &z, sigma, &mut p);
            let t: f64 = p.iter().map(|x| x * x).sum();
            Ok((t > quantile, None))
        })
    }
}

/// Correlation matrix of the normalized cumulative-integration images of a
/// full single-scale interval wavelet dictionary, assembled in banded form.
///
/// Images vanish identically before the wavelet's support and are constant
/// after it, so for translations at least one support length apart the raw
/// Gram entry collapses to (earlier image's final constant) × (grid-weighted
/// sample sum of the later image); only pairs inside the band need a full
/// inner product. Agrees with the dense Gram to rounding error at a fraction
/// of its cost.
pub fn integration_image_correlation(
    basis: &WaveletBasis1D,
    j: i32,
    grid: &Arc<Grid>,
) -> Result<DMatrix<f64>> {
    let indices = build_index_set_interval(basis, j)?;
    let n = indices.len();
    let mut translations = Vec::with_capacity(n);
    let mut images = Vec::with_capacity(n);
    for idx in &indices {
        let (jj, l) = match idx {
            DictIndex::Interval { j, l } => (*j, *l),
            _ => unreachable!("interval index sets contain interval indices"),
        };
        translations.push(l);
        images.push(integrate_forward(&wavelet_element(basis, jj, l, grid)?)?);
    }
    let ax = grid
        .axis1()
        .ok_or_else(|| Error::InvalidArgument("integration images need a 1-D grid".into()))?;
    let w = (ax.b - ax.a) / ax.n as f64;
    let band = basis.support_length() as i64;
    let mut tails = Vec::with_capacity(n);
    let mut weighted_sums = Vec::with_capacity(n);
    for img in &images {
        let vals = img
            .values_real()
            .ok_or_else(|| Error::InvalidArgument("integration images must be real".into()))?;
        tails.push(vals[vals.len() - 1]);
        weighted_sums.push(w * vals.iter().sum::<f64>());
    }
    let mut g = DMatrix::zeros(n, n);
    for k in 0..n {
        for k2 in k..n {
            // Index sets are sorted by translation, so k pairs with the
            // earlier (left) support.
            let entry = if translations[k2] - translations[k] >= band {
                tails[k] * weighted_sums[k2]
            } else {
                inner_product_n(&images[k], &images[k2])?.re
            };
            g[(k, k2)] = entry;
            g[(k2, k)] = entry;
        }
    }
    ReducedSupModel::from_gram(g).map(|m| m.corr)
}

/// A χ² reduced model assembled from sinogram translation structure, plus
/// diagnostics used by the packaged studies.
#[derive(Debug, Clone)]
pub struct RadonTranslationModel {
    pub model: ReducedChi2Model,
    /// Frobenius norm of the assembled vaguelette Gram.
    pub xi_frobenius: f64,
    pub index_set: Vec<DictIndex>,
}

/// Assemble the χ² reduced model for the Radon dictionary at scale `j`
/// without materializing all dictionary sinograms.
///
/// Translating a wavelet by `Δl` lattice steps translates its sinogram in
/// the offset variable by `2^{−j}(Δl₁ cos θ + Δl₂ sin θ)` at each angle, so
/// every pairing is a cross-correlation of two *reference* profiles (one per
/// tensor type) evaluated at an angle-dependent fractional lag. Per angle the
/// cross-correlations are computed once by zero-padded FFT, oversampled 8×
/// in the lag by spectral zero-insertion, and read off by linear
/// interpolation for every translation difference. Cost is dominated by six
/// Radon transforms instead of `2N`.
pub fn radon_translation_chi2_model(
    basis: &WaveletBasis1D,
    j: i32,
    npix: usize,
    t_count: usize,
    theta_count: usize,
) -> Result<RadonTranslationModel> {
    const R: f64 = std::f64::consts::FRAC_1_SQRT_2;
    let image_grid = make_product_grid_2d((-R, R, npix), (-R, R, npix))?;
    let t_grid = make_uniform_grid(-R, R, t_count)?;
    let theta_grid = make_uniform_grid(0.0, std::f64::consts::PI, theta_count)?;
    let indices = build_index_set_square_2d(basis, j)?;
    let n = indices.len();

    let supp = basis.support_length() as i64;
    let lo = -(1i64 << (j - 1));
    let hi = (1i64 << (j - 1)) - supp;
    let l_ref = (lo + hi).div_euclid(2);
    let lambda = 2f64.powf(-(j as f64) / 2.0);

    // Reference sinogram profiles, one image + one vaguelette per tensor type.
    let mut image_sinos = Vec::with_capacity(3);
    let mut vag_sinos = Vec::with_capacity(3);
    for eps in 1u8..=3 {
        let eta = wavelet_element_2d(basis, j, (l_ref, l_ref), eps, &image_grid)?;
        image_sinos.push(radon_forward(&eta, &t_grid, &theta_grid)?);
        let omega = crate::dict::ramp_filter_2d(&eta)?;
        vag_sinos.push(radon_forward(&omega, &t_grid, &theta_grid)?.scale(lambda));
    }

    // Lag tables over translation differences, summed over angles.
    let dlr = (hi - lo) as usize;
    let dim = 2 * dlr + 1;
    let m = (2 * t_count).next_power_of_two();
    let up = 8usize;
    let m8 = m * up;
    let dt = 2.0 * R / t_count as f64;
    let scale_j = 2f64.powi(-j);

    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(m);
    let inv = planner.plan_fft_inverse(m8);

    let thetas = theta_grid.axis1().unwrap().points();
    // vv tables for type pairs (e1 ≤ e2); iv tables for all ordered pairs.
    let mut vv_tables = vec![vec![0.0f64; dim * dim]; 6];
    let mut iv_tables = vec![vec![0.0f64; dim * dim]; 9];
    let vv_slot = |e1: usize, e2: usize| -> usize {
        // (0,0) (0,1) (0,2) (1,1) (1,2) (2,2)
        debug_assert!(e1 <= e2);
        e1 * 3 + e2 - e1 * (e1 + 1) / 2
    };

    let mut spec_v = vec![vec![Complex64::ZERO; m]; 3];
    let mut spec_i = vec![vec![Complex64::ZERO; m]; 3];
    let mut corr_buf = vec![Complex64::ZERO; m8];
    let mut corr = vec![0.0f64; m8];
    let mut lag8 = vec![0.0f64; dim * dim];
    let inv_m = 1.0 / m as f64;

    for (jt, &theta) in thetas.iter().enumerate() {
        for e in 0..3 {
            load_profile_spectrum(&image_sinos[e], jt, theta_count, &mut spec_i[e], &fwd);
            load_profile_spectrum(&vag_sinos[e], jt, theta_count, &mut spec_v[e], &fwd);
        }
        let (sin_t, cos_t) = theta.sin_cos();
        for (idx, slot) in lag8.iter_mut().enumerate() {
            let d1 = (idx / dim) as f64 - dlr as f64;
            let d2 = (idx % dim) as f64 - dlr as f64;
            let tau = scale_j * (d1 * cos_t + d2 * sin_t);
            *slot = tau / dt * up as f64;
        }
        for e1 in 0..3 {
            for e2 in 0..3 {
                if e1 <= e2 {
                    cross_correlation(
                        &spec_v[e1], &spec_v[e2], &mut corr_buf, &mut corr, &inv, inv_m,
                    );
                    accumulate_lags(&mut vv_tables[vv_slot(e1, e2)], &lag8, &corr);
                }
                cross_correlation(&spec_i[e1], &spec_v[e2], &mut corr_buf, &mut corr, &inv, inv_m);
                accumulate_lags(&mut iv_tables[e1 * 3 + e2], &lag8, &corr);
            }
        }
    }

    // Fill Ξ and B̃ by table lookup.
    let w = (2.0 * R * std::f64::consts::PI) / (t_count * theta_count) as f64;
    let parts: Vec<(usize, (i64, i64))> = indices
        .iter()
        .map(|idx| match idx {
            DictIndex::Square { l, eps, .. } => ((eps - 1) as usize, *l),
            _ => unreachable!("square index sets contain square indices"),
        })
        .collect();
    let at = |table: &[f64], dl: (i64, i64)| -> f64 {
        table[((dl.0 + dlr as i64) as usize) * dim + (dl.1 + dlr as i64) as usize]
    };
    let mut xi = DMatrix::zeros(n, n);
    let mut b_tilde = DMatrix::zeros(n, n);
    for k in 0..n {
        let (ek, lk) = parts[k];
        for k2 in k..n {
            let (e2, l2) = parts[k2];
            let dvec = (lk.0 - l2.0, lk.1 - l2.1);
            let entry = w * if ek <= e2 {
                at(&vv_tables[vv_slot(ek, e2)], dvec)
            } else {
                at(&vv_tables[vv_slot(e2, ek)], (-dvec.0, -dvec.1))
            };
            xi[(k, k2)] = entry;
            xi[(k2, k)] = entry;
        }
        for (mrow, &(em, lm)) in parts.iter().enumerate() {
            let dvec = (lk.0 - lm.0, lk.1 - lm.1);
            b_tilde[(mrow, k)] = w * at(&iv_tables[ek * 3 + em], dvec);
        }
    }
    let xi_frobenius = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
    let model = ReducedChi2Model::from_parts(b_tilde, xi, vec![lambda; n])?;
    Ok(RadonTranslationModel {
        model,
        xi_frobenius,
        index_set: indices,
    })
}

/// Extract sinogram column `jt` (profile over the offset variable), zero-pad,
/// and forward-FFT into `spec`.
fn load_profile_spectrum(
    sino: &SampledFunction,
    jt: usize,
    theta_count: usize,
    spec: &mut [Complex64],
    fwd: &std::sync::Arc<dyn rustfft::Fft<f64>>,
) {
    let vals = sino.values_real().expect("radon sinograms are real");
    let nt = vals.len() / theta_count;
    spec.fill(Complex64::ZERO);
    for i in 0..nt {
        spec[i] = Complex64::new(vals[i * theta_count + jt], 0.0);
    }
    fwd.process(spec);
}

/// `corr[λ·8] ≈ Σ_i a[i]·b[i+λ]` via `IFFT(conj(Â)·B̂)` with 8× lag
/// oversampling by spectral zero-insertion.
fn cross_correlation(
    spec_a: &[Complex64],
    spec_b: &[Complex64],
    buf: &mut [Complex64],
    out: &mut [f64],
    inv: &std::sync::Arc<dyn rustfft::Fft<f64>>,
    inv_m: f64,
) {
    let m = spec_a.len();
    let m8 = buf.len();
    let half = m / 2;
    buf.fill(Complex64::ZERO);
    for i in 0..half {
        buf[i] = spec_a[i].conj() * spec_b[i];
    }
    for i in 1..half {
        buf[m8 - i] = spec_a[m - i].conj() * spec_b[m - i];
    }
    let nyq = spec_a[half].conj() * spec_b[half] * 0.5;
    buf[half] = nyq;
    buf[m8 - half] = nyq;
    inv.process(buf);
    for (o, z) in out.iter_mut().zip(buf.iter()) {
        *o = z.re * inv_m;
    }
}

/// Add `corr` sampled at each (fractional, wrapped) lag into `table`.
fn accumulate_lags(table: &mut [f64], lag8: &[f64], corr: &[f64]) {
    let m8 = corr.len();
    for (slot, &lag) in table.iter_mut().zip(lag8) {
        let x = lag.rem_euclid(m8 as f64);
        let i0 = x as usize;
        let fr = x - i0 as f64;
        let i0 = i0.min(m8 - 1);
        let i1 = (i0 + 1) % m8;
        *slot += corr[i0] + fr * (corr[i1] - corr[i0]);
    }
}
