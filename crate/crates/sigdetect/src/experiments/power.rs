//! Monte-Carlo power estimation: the per-anomaly mean type-II error of the
//! sup test, the sphere-averaged type-II error of the χ² test, and a seeded
//! bisection search for the signal size reaching a target power.

use crate::detect::{run_chi2_test, run_sup_test, Chi2TestSpec, SupTestSpec};
use crate::dict::DictionarySystem;
use crate::error::{Error, Result};
use crate::rng::{compose_stream, stream_rng, StreamKind};
use crate::sampling::{scaled_noise, SampledFunction, ScalarField};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// One Monte-Carlo power estimate.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PowerEstimate {
    /// Rejection rate under the alternative (or the level, at `δ = 0`).
    pub power: f64,
    /// Binomial standard error `√(p(1−p)/R)`.
    pub std_err: f64,
    pub replications: u64,
    /// Smallest per-anomaly rejection rate (populated by per-anomaly
    /// sampling when every anomaly receives at least one replication).
    pub worst_anomaly_power: Option<f64>,
}

impl PowerEstimate {
    /// The type-II error complement of `power`.
    pub fn beta(&self) -> f64 {
        1.0 - self.power
    }
}

/// An estimated power curve over a `δ` grid.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PowerCurve {
    pub deltas: Vec<f64>,
    pub power: Vec<f64>,
    pub std_err: Vec<f64>,
    pub replications: u64,
    pub config_hash: String,
}

const MAX_SPHERE_RESAMPLES: u32 = 64;

/// Draw real coefficients uniformly from the sphere `Σ_k (λ_k c_k)² = δ²`.
/// The weighted vector `d_k = λ_k c_k` is a Euclidean-normalized standard
/// Gaussian — the rotation-invariant law on the radius-δ sphere — and the
/// coefficients are recovered as `c_k = d_k / λ_k`. Exactly-zero draws are
/// resampled.
pub fn sample_sphere_coefficients_real<R: Rng>(
    rng: &mut R,
    lambdas: &[f64],
    delta: f64,
) -> Result<Vec<f64>> {
    if lambdas.is_empty() {
        return Err(Error::EmptyIndexSet("sphere sampler over no coefficients".into()));
    }
    if lambdas.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::InvalidArgument(
            "sphere sampling requires strictly positive weights".into(),
        ));
    }
    for _ in 0..MAX_SPHERE_RESAMPLES {
        let g: Vec<f64> = (0..lambdas.len())
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let norm: f64 = g.iter().map(|gi| gi * gi).sum::<f64>().sqrt();
        if norm > 0.0 {
            return Ok(g
                .into_iter()
                .zip(lambdas)
                .map(|(gi, li)| delta * gi / (norm * li))
                .collect());
        }
    }
    Err(Error::Numerical(
        "sphere sampler drew the zero vector repeatedly".into(),
    ))
}

/// Complex-coefficient variant of [`sample_sphere_coefficients_real`].
pub fn sample_sphere_coefficients_complex<R: Rng>(
    rng: &mut R,
    lambdas: &[f64],
    delta: f64,
) -> Result<Vec<Complex64>> {
    if lambdas.is_empty() {
        return Err(Error::EmptyIndexSet("sphere sampler over no coefficients".into()));
    }
    if lambdas.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::InvalidArgument(
            "sphere sampling requires strictly positive weights".into(),
        ));
    }
    for _ in 0..MAX_SPHERE_RESAMPLES {
        let g: Vec<Complex64> = (0..lambdas.len())
            .map(|_| {
                Complex64::new(
                    rng.sample::<f64, _>(StandardNormal),
                    rng.sample::<f64, _>(StandardNormal),
                )
            })
            .collect();
        let norm: f64 = g.iter().map(|gi| gi.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            return Ok(g
                .into_iter()
                .zip(lambdas)
                .map(|(gi, li)| gi * (delta / (norm * li)))
                .collect());
        }
    }
    Err(Error::Numerical(
        "sphere sampler drew the zero vector repeatedly".into(),
    ))
}

/// Real linear combination `Σ_k c_k x_k` of same-grid real functions.
pub fn synthesize_real(functions: &[SampledFunction], coeffs: &[f64]) -> Result<SampledFunction> {
    if functions.is_empty() || functions.len() != coeffs.len() {
        return Err(Error::InvalidArgument(format!(
            "synthesis needs one coefficient per function: {} vs {}",
            coeffs.len(),
            functions.len()
        )));
    }
    let grid = functions[0].grid().clone();
    let mut acc = vec![0.0f64; grid.n()];
    for (f, &c) in functions.iter().zip(coeffs) {
        if c == 0.0 {
            continue;
        }
        let vals = f.values_real().ok_or_else(|| {
            Error::InvalidArgument("real synthesis requires real functions".into())
        })?;
        if vals.len() != acc.len() {
            return Err(Error::GridMismatch("synthesis across different grids".into()));
        }
        for (a, v) in acc.iter_mut().zip(vals) {
            *a += c * v;
        }
    }
    SampledFunction::real(grid, acc)
}

fn synthesize_complex(
    functions: &[SampledFunction],
    coeffs: &[Complex64],
) -> Result<SampledFunction> {
    if functions.is_empty() || functions.len() != coeffs.len() {
        return Err(Error::InvalidArgument(format!(
            "synthesis needs one coefficient per function: {} vs {}",
            coeffs.len(),
            functions.len()
        )));
    }
    let grid = functions[0].grid().clone();
    let mut acc = vec![Complex64::ZERO; grid.n()];
    for (f, &c) in functions.iter().zip(coeffs) {
        if c == Complex64::ZERO {
            continue;
        }
        if f.values().len() != acc.len() {
            return Err(Error::GridMismatch("synthesis across different grids".into()));
        }
        for (i, a) in acc.iter_mut().enumerate() {
            *a += c * f.value_c(i);
        }
    }
    SampledFunction::complex(grid, acc)
}

/// Draw one alternative `f = Σ_k c_k u_k` with real coefficients uniform on
/// the quasi-singular-value-weighted sphere of radius `δ`.
pub fn sample_uniform_sphere_alternative(
    system: &DictionarySystem,
    delta: f64,
    seed: u64,
) -> Result<SampledFunction> {
    sample_uniform_sphere_alternative_with_field(system, delta, seed, ScalarField::Real)
}

/// Field-aware variant of [`sample_uniform_sphere_alternative`].
pub fn sample_uniform_sphere_alternative_with_field(
    system: &DictionarySystem,
    delta: f64,
    seed: u64,
    field: ScalarField,
) -> Result<SampledFunction> {
    let lambdas = system.quasi_singular().ok_or_else(|| {
        Error::MissingData("sphere alternatives need quasi-singular values".into())
    })?;
    let mut rng = stream_rng(seed, compose_stream(StreamKind::Alternative, 0));
    match field {
        ScalarField::Real => {
            let c = sample_sphere_coefficients_real(&mut rng, lambdas, delta)?;
            synthesize_real(system.elements(), &c)
        }
        ScalarField::Complex => {
            let c = sample_sphere_coefficients_complex(&mut rng, lambdas, delta)?;
            synthesize_complex(system.elements(), &c)
        }
    }
}

/// Run `replications` seeded Monte-Carlo replications of `body(rep)`, which
/// returns the rejection decision and (optionally) which anomaly the
/// replication targeted. Replications execute on the worker pool; stream
/// derivation from the replication index keeps results independent of
/// scheduling.
pub(crate) fn run_mc<B>(
    replications: u64,
    n_anomalies: Option<usize>,
    body: B,
) -> Result<PowerEstimate>
where
    B: Fn(u64) -> Result<(bool, Option<usize>)> + Sync + Send,
{
    if replications < 1 {
        return Err(Error::InvalidArgument("need at least one replication".into()));
    }
    let outcomes: Vec<(bool, Option<usize>)> = (0..replications)
        .into_par_iter()
        .map(body)
        .collect::<Result<Vec<_>>>()?;
    let rejects = outcomes.iter().filter(|(r, _)| *r).count() as f64;
    let reps = replications as f64;
    let power = rejects / reps;
    let std_err = (power * (1.0 - power) / reps).sqrt();
    let worst_anomaly_power = n_anomalies.and_then(|n| {
        let mut totals = vec![(0u64, 0u64); n];
        for (reject, k) in &outcomes {
            let k = (*k)?;
            totals[k].1 += 1;
            if *reject {
                totals[k].0 += 1;
            }
        }
        if totals.iter().any(|(_, t)| *t == 0) {
            return None;
        }
        totals
            .iter()
            .map(|(r, t)| *r as f64 / *t as f64)
            .min_by(|a, b| a.partial_cmp(b).unwrap())
    });
    Ok(PowerEstimate {
        power,
        std_err,
        replications,
        worst_anomaly_power,
    })
}

/// Mean type-II error of the sup test over the single-anomaly alternatives
/// `f = δ·u_k/‖Au_k‖_n`, cycling `k` through the dictionary. Returns the
/// power estimate (`1 −` the mean type-II error); `rep_salt` offsets the
/// replication streams so repeated calls under one seed stay independent.
pub fn beta_star_case1(
    spec: &SupTestSpec,
    delta: f64,
    replications: u64,
    seed: u64,
    rep_salt: u64,
) -> Result<PowerEstimate> {
    let images = spec.normalized_images();
    let n = images.len();
    let grid = images[0].grid().clone();
    run_mc(replications, Some(n), |rep| {
        let k = (rep % n as u64) as usize;
        let noise = scaled_noise(
            &grid,
            spec.sigma(),
            spec.field(),
            seed,
            compose_stream(StreamKind::Noise, rep_salt + rep),
        );
        let y = images[k].scale(delta).add(&noise)?;
        Ok((run_sup_test(spec, &y)?.reject, Some(k)))
    })
}

/// Sphere-averaged type-II error of the χ² test: each replication draws a
/// fresh alternative uniformly from the `δ`-sphere and fresh noise.
pub fn beta_star_case2(
    spec: &Chi2TestSpec,
    system: &DictionarySystem,
    delta: f64,
    replications: u64,
    seed: u64,
    rep_salt: u64,
) -> Result<PowerEstimate> {
    let lambdas = system
        .quasi_singular()
        .ok_or_else(|| Error::MissingData("sphere alternatives need quasi-singular values".into()))?
        .to_vec();
    let images = system.images();
    let grid = system.output_grid().clone();
    run_mc(replications, None, |rep| {
        let mut alt_rng = stream_rng(seed, compose_stream(StreamKind::Alternative, rep_salt + rep));
        let c = sample_sphere_coefficients_real(&mut alt_rng, &lambdas, delta)?;
        let signal = synthesize_real(images, &c)?;
        let noise = scaled_noise(
            &grid,
            spec.sigma(),
            spec.field(),
            seed,
            compose_stream(StreamKind::Noise, rep_salt + rep),
        );
        let y = signal.add(&noise)?;
        Ok((run_chi2_test(spec, &y)?.reject, None))
    })
}

/// Sup test against sphere alternatives (the cross combination).
pub fn sup_power_uniform_sphere(
    spec: &SupTestSpec,
    system: &DictionarySystem,
    delta: f64,
    replications: u64,
    seed: u64,
    rep_salt: u64,
) -> Result<PowerEstimate> {
    let lambdas = system
        .quasi_singular()
        .ok_or_else(|| Error::MissingData("sphere alternatives need quasi-singular values".into()))?
        .to_vec();
    let images = system.images();
    let grid = system.output_grid().clone();
    run_mc(replications, None, |rep| {
        let mut alt_rng = stream_rng(seed, compose_stream(StreamKind::Alternative, rep_salt + rep));
        let c = sample_sphere_coefficients_real(&mut alt_rng, &lambdas, delta)?;
        let signal = synthesize_real(images, &c)?;
        let noise = scaled_noise(
            &grid,
            spec.sigma(),
            spec.field(),
            seed,
            compose_stream(StreamKind::Noise, rep_salt + rep),
        );
        let y = signal.add(&noise)?;
        Ok((run_sup_test(spec, &y)?.reject, None))
    })
}

/// χ² test against the cycled single-anomaly alternatives (the cross
/// combination).
pub fn chi2_power_per_anomaly(
    spec: &Chi2TestSpec,
    system: &DictionarySystem,
    delta: f64,
    replications: u64,
    seed: u64,
    rep_salt: u64,
) -> Result<PowerEstimate> {
    let images = system.images();
    let n = images.len();
    let normalized: Vec<SampledFunction> = images
        .iter()
        .map(|img| {
            let norm = img.norm_n();
            if norm <= 0.0 {
                return Err(Error::InvalidArgument("zero-norm image".into()));
            }
            Ok(img.scale(1.0 / norm))
        })
        .collect::<Result<Vec<_>>>()?;
    let grid = system.output_grid().clone();
    run_mc(replications, Some(n), |rep| {
        let k = (rep % n as u64) as usize;
        let noise = scaled_noise(
            &grid,
            spec.sigma(),
            spec.field(),
            seed,
            compose_stream(StreamKind::Noise, rep_salt + rep),
        );
        let y = normalized[k].scale(delta).add(&noise)?;
        Ok((run_chi2_test(spec, &y)?.reject, Some(k)))
    })
}

/// Options for [`find_delta_at_power`].
#[derive(Debug, Clone, Copy)]
pub struct BisectionOptions {
    /// Test level (the power at `δ = 0`); the target must exceed it.
    pub alpha: f64,
    /// Upper end of the search bracket.
    pub delta_max: f64,
    /// Stop once the bracket width is below this fraction of its upper end.
    pub rel_tol: f64,
    /// Hard cap on power evaluations.
    pub max_evaluations: u32,
}

impl BisectionOptions {
    pub fn new(alpha: f64, delta_max: f64) -> Self {
        BisectionOptions {
            alpha,
            delta_max,
            rel_tol: 5e-3,
            max_evaluations: 24,
        }
    }
}

/// Result of the `δ`-at-target-power search.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DeltaAtPower {
    /// Bracket midpoint at termination.
    pub delta: f64,
    /// Standard error of `delta`, combining the Monte-Carlo error of the
    /// final power estimate (divided by the local power slope) with the
    /// residual bracket width.
    pub std_err: f64,
    /// Power measured at the final evaluation point.
    pub power: f64,
    pub power_std_err: f64,
    pub evaluations: u32,
}

/// Bisect for the signal size where estimated power crosses `target`.
///
/// `estimate(delta, evaluation_index)` must return a fresh Monte-Carlo power
/// estimate whose randomness is derived from the evaluation index, so the
/// search is deterministic for a fixed seed. The lower bracket starts at
/// `δ = 0`, where the power equals the level by construction.
pub fn find_delta_at_power<F>(
    mut estimate: F,
    target: f64,
    opts: &BisectionOptions,
) -> Result<DeltaAtPower>
where
    F: FnMut(f64, u64) -> Result<PowerEstimate>,
{
    if !(target.is_finite() && opts.alpha < target && target < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "target power must lie in (alpha, 1) = ({}, 1), got {target}",
            opts.alpha
        )));
    }
    if !(opts.delta_max.is_finite() && opts.delta_max > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "delta_max must be positive, got {}",
            opts.delta_max
        )));
    }
    let top = estimate(opts.delta_max, 0)?;
    if top.power < target {
        return Err(Error::BracketNotFound(format!(
            "power {:.4} at delta_max = {} is below the target {target}; raise delta_max",
            top.power, opts.delta_max
        )));
    }
    let mut lo = 0.0;
    let mut p_lo = opts.alpha;
    let mut hi = opts.delta_max;
    let mut p_hi = top.power;
    let mut last = top;
    let mut evaluations = 1u32;
    while evaluations < opts.max_evaluations && (hi - lo) > opts.rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        let est = estimate(mid, evaluations as u64)?;
        evaluations += 1;
        if est.power >= target {
            hi = mid;
            p_hi = est.power;
        } else {
            lo = mid;
            p_lo = est.power;
        }
        last = est;
    }
    let width = hi - lo;
    let delta = 0.5 * (lo + hi);
    let slope = if hi > lo { (p_hi - p_lo) / width } else { 0.0 };
    let mc_term = if slope > 1e-12 {
        last.std_err / slope
    } else {
        width
    };
    // Residual-width uncertainty: uniform over the bracket.
    let width_term = width / (2.0 * 3f64.sqrt());
    Ok(DeltaAtPower {
        delta,
        std_err: (mc_term * mc_term + width_term * width_term).sqrt(),
        power: last.power,
        power_std_err: last.std_err,
        evaluations,
    })
}
