//! The two detection test families: the sup-type test over normalized image
//! correlations with its closed-form threshold, and the generalized-χ²
//! linear-span test with a Monte-Carlo null quantile on Gram eigenvalue
//! weights.

use crate::error::{Error, Result};
use crate::gram::GramMatrix;
use crate::rng::{compose_stream, standard_normal, stream_rng, StreamKind};
use crate::sampling::{inner_product_n, SampledFunction, ScalarField};
use rayon::prelude::*;

/// Decision record of a single test evaluation.
///
/// `reject` is true exactly when `statistic > threshold`. For the χ² test the
/// quantile provenance (`seed`, `mc_draws`) is carried along; for the sup
/// test, whose threshold is closed-form, both are `None`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TestOutcome {
    pub statistic: f64,
    pub threshold: f64,
    pub reject: bool,
    pub seed: Option<u64>,
    pub mc_draws: Option<u64>,
}

impl TestOutcome {
    fn decide(statistic: f64, threshold: f64, seed: Option<u64>, mc_draws: Option<u64>) -> Self {
        TestOutcome {
            statistic,
            threshold,
            reject: statistic > threshold,
            seed,
            mc_draws,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializing a plain record cannot fail")
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && 0.0 < alpha && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test level alpha must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "noise level sigma must be positive and finite, got {sigma}"
        )));
    }
    Ok(())
}

/// Closed-form level-`alpha` threshold for the sup test over `n` normalized
/// image correlations: `√(2 log(N/α))` for real noise and
/// `√(1 + 2√(log(N/α)) + 2 log(N/α))` for complex noise.
pub fn sup_threshold(n: usize, alpha: f64, field: ScalarField) -> Result<f64> {
    check_alpha(alpha)?;
    if n == 0 {
        return Err(Error::EmptyIndexSet(
            "sup-test threshold needs at least one image".into(),
        ));
    }
    let t = (n as f64 / alpha).ln();
    Ok(match field {
        ScalarField::Real => (2.0 * t).sqrt(),
        ScalarField::Complex => (1.0 + 2.0 * t.sqrt() + 2.0 * t).sqrt(),
    })
}

/// Sup statistic `max_k |⟨Y, A u_k⟩_n| / (σ ‖A u_k‖_n)`.
pub fn sup_statistic(y: &SampledFunction, images: &[SampledFunction], sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    if images.is_empty() {
        return Err(Error::EmptyIndexSet("sup statistic over no images".into()));
    }
    let mut best: f64 = 0.0;
    for (k, img) in images.iter().enumerate() {
        let norm = img.norm_n();
        if norm <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "image {k} has zero norm; its correlation is undefined"
            )));
        }
        best = best.max(inner_product_n(y, img)?.norm() / (sigma * norm));
    }
    Ok(best)
}

/// Configuration of the sup test. Images are normalized at construction so
/// repeated evaluations skip the norm divisions.
#[derive(Debug, Clone)]
pub struct SupTestSpec {
    normalized_images: Vec<SampledFunction>,
    alpha: f64,
    field: ScalarField,
    sigma: f64,
}

impl SupTestSpec {
    pub fn new(
        images: Vec<SampledFunction>,
        alpha: f64,
        field: ScalarField,
        sigma: f64,
    ) -> Result<Self> {
        check_alpha(alpha)?;
        check_sigma(sigma)?;
        if images.is_empty() {
            return Err(Error::EmptyIndexSet("sup test needs at least one image".into()));
        }
        let mut normalized_images = Vec::with_capacity(images.len());
        for (k, img) in images.into_iter().enumerate() {
            let norm = img.norm_n();
            if norm <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "image {k} has zero norm; sup test undefined"
                )));
            }
            normalized_images.push(img.scale(1.0 / norm));
        }
        Ok(SupTestSpec {
            normalized_images,
            alpha,
            field,
            sigma,
        })
    }

    pub fn n(&self) -> usize {
        self.normalized_images.len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn field(&self) -> ScalarField {
        self.field
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn threshold(&self) -> f64 {
        sup_threshold(self.n(), self.alpha, self.field)
            .expect("spec construction validated the threshold inputs")
    }

    /// The images after internal normalization (each has unit `‖·‖_n`).
    pub fn normalized_images(&self) -> &[SampledFunction] {
        &self.normalized_images
    }

    /// Statistic via the pre-normalized images; equals
    /// `sup_statistic(y, original images, sigma)`.
    pub fn statistic(&self, y: &SampledFunction) -> Result<f64> {
        let mut best: f64 = 0.0;
        for img in &self.normalized_images {
            best = best.max(inner_product_n(y, img)?.norm());
        }
        Ok(best / self.sigma)
    }
}

/// Evaluate the sup test: reject when the statistic exceeds the closed-form
/// threshold.
pub fn run_sup_test(spec: &SupTestSpec, y: &SampledFunction) -> Result<TestOutcome> {
    let statistic = spec.statistic(y)?;
    Ok(TestOutcome::decide(statistic, spec.threshold(), None, None))
}

/// χ² statistic `Σ_k |⟨Y, v_k⟩_n|²`.
pub fn chi2_statistic(y: &SampledFunction, vaguelettes: &[SampledFunction]) -> Result<f64> {
    let mut total = 0.0;
    for v in vaguelettes {
        total += inner_product_n(y, v)?.norm_sqr();
    }
    Ok(total)
}

/// Minimum number of Monte-Carlo draws accepted for the null quantile.
pub const MIN_QUANTILE_DRAWS: u64 = 10_000;

/// Default Monte-Carlo size for the null quantile.
pub const DEFAULT_QUANTILE_DRAWS: u64 = 100_000;

/// Monte-Carlo `(1−α)` null quantile of the χ² statistic from the eigenvalue
/// weights of a Gram matrix: the null law is `σ² Σ_k s_k Q_k` with `Q_k`
/// iid `χ²₁` (real noise) or `χ²₂` (complex noise).
///
/// Deterministic given `seed`, independent of thread count: draw `i` uses its
/// own derived stream. The noise scale factors out, so doubling `sigma`
/// multiplies the result exactly by 4 for the same seed.
pub fn chi2_null_quantile(
    xi: &GramMatrix,
    sigma: f64,
    alpha: f64,
    field: ScalarField,
    mc_draws: u64,
    seed: u64,
) -> Result<f64> {
    let (min_eig, max_eig) = xi.riesz_bounds();
    if min_eig <= 1e-10 * max_eig {
        return Err(Error::NotPositiveDefinite {
            name: xi.variant().name().to_string(),
            min_eig,
            max_eig,
        });
    }
    chi2_null_quantile_from_eigenvalues(xi.eigenvalues(), sigma, alpha, field, mc_draws, seed)
}

/// Same Monte-Carlo quantile from an explicit eigenvalue list (all weights
/// must be positive and finite).
pub fn chi2_null_quantile_from_eigenvalues(
    eigenvalues: &[f64],
    sigma: f64,
    alpha: f64,
    field: ScalarField,
    mc_draws: u64,
    seed: u64,
) -> Result<f64> {
    check_alpha(alpha)?;
    check_sigma(sigma)?;
    if eigenvalues.is_empty() {
        return Err(Error::EmptyIndexSet("quantile over no eigenvalues".into()));
    }
    if eigenvalues.iter().any(|e| !e.is_finite() || *e <= 0.0) {
        return Err(Error::InvalidArgument(
            "null-quantile eigenvalue weights must be positive and finite".into(),
        ));
    }
    if mc_draws < MIN_QUANTILE_DRAWS {
        return Err(Error::InvalidArgument(format!(
            "quantile Monte-Carlo needs at least {MIN_QUANTILE_DRAWS} draws, got {mc_draws}"
        )));
    }
    let mut draws: Vec<f64> = (0..mc_draws)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, compose_stream(StreamKind::Quantile, i));
            let mut total = 0.0;
            for &s in eigenvalues {
                let q = match field {
                    ScalarField::Real => {
                        let z = standard_normal(&mut rng);
                        z * z
                    }
                    ScalarField::Complex => {
                        let z1 = standard_normal(&mut rng);
                        let z2 = standard_normal(&mut rng);
                        z1 * z1 + z2 * z2
                    }
                };
                total += s * q;
            }
            total
        })
        .collect();
    draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = (((1.0 - alpha) * mc_draws as f64).ceil() as usize).clamp(1, draws.len());
    Ok(sigma * sigma * draws[rank - 1])
}

/// Configuration of the generalized-χ² test with its computed null quantile.
#[derive(Debug, Clone)]
pub struct Chi2TestSpec {
    vaguelettes: Vec<SampledFunction>,
    alpha: f64,
    field: ScalarField,
    sigma: f64,
    null_quantile: f64,
    mc_draws: u64,
    seed: u64,
}

impl Chi2TestSpec {
    /// Build the spec and compute the null quantile from the vaguelette Gram
    /// matrix.
    pub fn new(
        vaguelettes: Vec<SampledFunction>,
        alpha: f64,
        field: ScalarField,
        sigma: f64,
        mc_draws: u64,
        seed: u64,
    ) -> Result<Self> {
        let xi = crate::gram::gram_from_vectors(&vaguelettes, crate::gram::GramVariant::Xi, vec![])?;
        let null_quantile = chi2_null_quantile(&xi, sigma, alpha, field, mc_draws, seed)?;
        Self::from_parts(vaguelettes, alpha, field, sigma, null_quantile, mc_draws, seed)
    }

    /// Build the spec around an externally computed quantile (used when the
    /// Gram spectrum is assembled by a cheaper route).
    pub fn from_parts(
        vaguelettes: Vec<SampledFunction>,
        alpha: f64,
        field: ScalarField,
        sigma: f64,
        null_quantile: f64,
        mc_draws: u64,
        seed: u64,
    ) -> Result<Self> {
        check_alpha(alpha)?;
        check_sigma(sigma)?;
        if vaguelettes.is_empty() {
            return Err(Error::EmptyIndexSet("χ² test needs at least one vaguelette".into()));
        }
        if !(null_quantile.is_finite() && null_quantile > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "null quantile must be positive, got {null_quantile}"
            )));
        }
        Ok(Chi2TestSpec {
            vaguelettes,
            alpha,
            field,
            sigma,
            null_quantile,
            mc_draws,
            seed,
        })
    }

    pub fn n(&self) -> usize {
        self.vaguelettes.len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn field(&self) -> ScalarField {
        self.field
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn null_quantile(&self) -> f64 {
        self.null_quantile
    }

    pub fn vaguelettes(&self) -> &[SampledFunction] {
        &self.vaguelettes
    }
}

/// Evaluate the χ² test: reject when `Σ_k |⟨Y, v_k⟩_n|²` exceeds the
/// Monte-Carlo null quantile.
pub fn run_chi2_test(spec: &Chi2TestSpec, y: &SampledFunction) -> Result<TestOutcome> {
    let statistic = chi2_statistic(y, &spec.vaguelettes)?;
    Ok(TestOutcome::decide(
        statistic,
        spec.null_quantile,
        Some(spec.seed),
        Some(spec.mc_draws),
    ))
}
