//! Forward operators `A` for the three worked inverse problems —
//! cumulative integration, periodic convolution, and the Radon transform —
//! plus the noisy observation simulator `Y = A f + σ√(n/vol) ξ`.

pub mod convolution;
pub mod integration;
pub mod radon;

pub use convolution::{convolve_periodic, signed_mode, ConvolutionKernel, DecayParams, FourierTable};
pub use integration::integrate_forward;
pub use radon::radon_forward;

use crate::error::{Error, Result};
use crate::rng::{compose_stream, StreamKind};
use crate::sampling::{
    make_product_grid_2d, scaled_noise, Grid, NoiseMode, ObservationConfig, SampledFunction,
};
use std::sync::Arc;

/// Discriminant of the supported forward maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Integration,
    PeriodicConvolution,
    Radon,
}

/// A discretized forward operator with its input and output grids.
///
/// Operators are immutable and `apply` is pure, so they can be shared freely
/// across threads.
#[derive(Debug, Clone)]
pub struct ForwardOperator {
    kind: OperatorKind,
    input_grid: Arc<Grid>,
    output_grid: Arc<Grid>,
    kernel: Option<ConvolutionKernel>,
    t_grid: Option<Arc<Grid>>,
    theta_grid: Option<Arc<Grid>>,
}

impl ForwardOperator {
    /// Cumulative integration on a uniform 1-D grid (output on the same grid).
    pub fn integration(grid: Arc<Grid>) -> Result<Self> {
        if grid.axis1().is_none() {
            return Err(Error::InvalidArgument(
                "integration operator requires a 1-D grid".into(),
            ));
        }
        Ok(ForwardOperator {
            kind: OperatorKind::Integration,
            input_grid: grid.clone(),
            output_grid: grid,
            kernel: None,
            t_grid: None,
            theta_grid: None,
        })
    }

    /// Periodic convolution with `kernel` on a uniform grid over `[0, 1)`.
    pub fn periodic_convolution(grid: Arc<Grid>, kernel: ConvolutionKernel) -> Result<Self> {
        let ax = grid.axis1().ok_or_else(|| {
            Error::InvalidArgument("periodic convolution requires a 1-D grid".into())
        })?;
        if ax.a != 0.0 || ax.b != 1.0 {
            return Err(Error::InvalidArgument(format!(
                "periodic convolution is defined on [0, 1), got [{}, {})",
                ax.a, ax.b
            )));
        }
        // Fail fast on unresolvable kernels (sample-count mismatch, missing
        // representation).
        kernel.bin_multipliers(grid.n())?;
        Ok(ForwardOperator {
            kind: OperatorKind::PeriodicConvolution,
            input_grid: grid.clone(),
            output_grid: grid,
            kernel: Some(kernel),
            t_grid: None,
            theta_grid: None,
        })
    }

    /// Radon transform from a centered square image grid to the sinogram
    /// grid `t_grid × theta_grid`.
    pub fn radon(
        image_grid: Arc<Grid>,
        t_grid: Arc<Grid>,
        theta_grid: Arc<Grid>,
    ) -> Result<Self> {
        let geom = radon::radon_geometry(&image_grid)?;
        let t_ax = t_grid
            .axis1()
            .ok_or_else(|| Error::InvalidArgument("Radon offset grid must be 1-D".into()))?;
        for &t in &t_ax.points() {
            if t.abs() > geom.radius + 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "line offset t = {t} lies outside the disc of radius {}",
                    geom.radius
                )));
            }
        }
        let th_ax = theta_grid
            .axis1()
            .ok_or_else(|| Error::InvalidArgument("Radon angle grid must be 1-D".into()))?;
        let output_grid =
            make_product_grid_2d((t_ax.a, t_ax.b, t_ax.n), (th_ax.a, th_ax.b, th_ax.n))?;
        Ok(ForwardOperator {
            kind: OperatorKind::Radon,
            input_grid: image_grid,
            output_grid,
            kernel: None,
            t_grid: Some(t_grid),
            theta_grid: Some(theta_grid),
        })
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn input_grid(&self) -> &Arc<Grid> {
        &self.input_grid
    }

    pub fn output_grid(&self) -> &Arc<Grid> {
        &self.output_grid
    }

    pub fn kernel(&self) -> Option<&ConvolutionKernel> {
        self.kernel.as_ref()
    }

    /// Apply the forward map to `f` (must live on the input grid).
    pub fn apply(&self, f: &SampledFunction) -> Result<SampledFunction> {
        if **f.grid() != *self.input_grid {
            return Err(Error::GridMismatch(format!(
                "function on a grid of {} points fed to an operator expecting {}",
                f.grid().n(),
                self.input_grid.n()
            )));
        }
        match self.kind {
            OperatorKind::Integration => integrate_forward(f),
            OperatorKind::PeriodicConvolution => {
                convolve_periodic(self.kernel.as_ref().unwrap(), f)
            }
            OperatorKind::Radon => radon_forward(
                f,
                self.t_grid.as_ref().unwrap(),
                self.theta_grid.as_ref().unwrap(),
            ),
        }
    }
}

/// Apply `op` to `f` (free-function form of [`ForwardOperator::apply`]).
pub fn apply(op: &ForwardOperator, f: &SampledFunction) -> Result<SampledFunction> {
    op.apply(f)
}

/// Draw one observation `Y = A f + σ·√(n/vol(D))·ξ` on the operator's output
/// grid. Deterministic given `cfg.seed`; noiseless mode returns exactly `A f`.
pub fn simulate_observation(
    op: &ForwardOperator,
    f: &SampledFunction,
    cfg: &ObservationConfig,
) -> Result<SampledFunction> {
    simulate_observation_rep(op, f, cfg, 0)
}

/// Replication-indexed variant of [`simulate_observation`]: replication `rep`
/// uses an independent RNG stream derived from the root seed, so parallel
/// replications are reproducible regardless of scheduling.
pub fn simulate_observation_rep(
    op: &ForwardOperator,
    f: &SampledFunction,
    cfg: &ObservationConfig,
    rep: u64,
) -> Result<SampledFunction> {
    if !(cfg.sigma > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "noise level must be positive, got sigma = {}",
            cfg.sigma
        )));
    }
    let image = op.apply(f)?;
    match cfg.mode {
        NoiseMode::Noiseless => Ok(image),
        NoiseMode::Noisy => {
            let noise = scaled_noise(
                op.output_grid(),
                cfg.sigma,
                cfg.field,
                cfg.seed,
                compose_stream(StreamKind::Noise, rep),
            );
            image.add(&noise)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{standard_normal, stream_rng};
    use crate::sampling::{inner_product_n, make_uniform_grid, ScalarField};
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    fn random_fn(grid: &Arc<Grid>, seed: u64) -> SampledFunction {
        let mut rng = stream_rng(seed, 0);
        let v: Vec<f64> = (0..grid.n()).map(|_| standard_normal(&mut rng)).collect();
        SampledFunction::real(grid.clone(), v).unwrap()
    }

    #[test]
    fn dispatch_matches_direct_calls() {
        let g = make_uniform_grid(0.0, 1.0, 64).unwrap();
        let f = random_fn(&g, 1);

        let op = ForwardOperator::integration(g.clone()).unwrap();
        assert_eq!(apply(&op, &f).unwrap(), integrate_forward(&f).unwrap());

        let table = convolution::FourierTable::new(
            32,
            vec![Complex64::new(1.0, 0.0); 65],
        )
        .unwrap();
        let kernel = ConvolutionKernel::from_fourier(table);
        let op = ForwardOperator::periodic_convolution(g.clone(), kernel.clone()).unwrap();
        let out = apply(&op, &f).unwrap();
        let direct = convolve_periodic(&kernel, &f).unwrap();
        assert_eq!(out, direct);
        // Identity kernel: input unchanged (up to FFT round-trip rounding).
        for i in 0..64 {
            assert_relative_eq!(
                out.values_real().unwrap()[i],
                f.values_real().unwrap()[i],
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn linearity_of_integration_and_convolution() {
        let g = make_uniform_grid(0.0, 1.0, 128).unwrap();
        let f1 = random_fn(&g, 2);
        let f2 = random_fn(&g, 3);
        let combo = f1.scale(1.7).add(&f2.scale(-0.4)).unwrap();
        let kernel = ConvolutionKernel::from_decay(1.0, 1.0).unwrap();
        for op in [
            ForwardOperator::integration(g.clone()).unwrap(),
            ForwardOperator::periodic_convolution(g.clone(), kernel).unwrap(),
        ] {
            let lhs = op.apply(&combo).unwrap();
            let rhs = op
                .apply(&f1)
                .unwrap()
                .scale(1.7)
                .add(&op.apply(&f2).unwrap().scale(-0.4))
                .unwrap();
            let scale = rhs
                .values_real()
                .unwrap()
                .iter()
                .map(|x| x.abs())
                .fold(1e-30, f64::max);
            for i in 0..g.n() {
                let a = lhs.values_real().unwrap()[i];
                let b = rhs.values_real().unwrap()[i];
                assert!((a - b).abs() <= 1e-10 * scale, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn observation_rejects_wrong_grid() {
        let g = make_uniform_grid(0.0, 1.0, 16).unwrap();
        let other = make_uniform_grid(0.0, 1.0, 8).unwrap();
        let op = ForwardOperator::integration(g).unwrap();
        let f = SampledFunction::zeros(other);
        let cfg = ObservationConfig::new(1.0, 0, ScalarField::Real).unwrap();
        assert!(matches!(
            simulate_observation(&op, &f, &cfg),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn noiseless_mode_returns_exact_forward_image() {
        let g = make_uniform_grid(0.0, 1.0, 32).unwrap();
        let op = ForwardOperator::integration(g.clone()).unwrap();
        let f = random_fn(&g, 4);
        let cfg = ObservationConfig::new(0.5, 9, ScalarField::Real)
            .unwrap()
            .noiseless();
        let y = simulate_observation(&op, &f, &cfg).unwrap();
        assert_eq!(y, op.apply(&f).unwrap());
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let g = make_uniform_grid(0.0, 1.0, 32).unwrap();
        let op = ForwardOperator::integration(g.clone()).unwrap();
        let f = random_fn(&g, 5);
        let cfg = ObservationConfig::new(0.5, 11, ScalarField::Real).unwrap();
        let y1 = simulate_observation(&op, &f, &cfg).unwrap();
        let y2 = simulate_observation(&op, &f, &cfg).unwrap();
        assert_eq!(y1, y2);
        let cfg2 = ObservationConfig::new(0.5, 12, ScalarField::Real).unwrap();
        assert_ne!(y1, simulate_observation(&op, &f, &cfg2).unwrap());
    }

    #[test]
    fn fixed_seed_observation_is_linear_in_signal() {
        // Y(f1+f2) − Y(0) = (Y(f1) − Y(0)) + (Y(f2) − Y(0)): the shared noise
        // realization cancels, leaving only float rounding.
        let g = make_uniform_grid(0.0, 1.0, 64).unwrap();
        let op = ForwardOperator::integration(g.clone()).unwrap();
        let f1 = random_fn(&g, 6);
        let f2 = random_fn(&g, 7);
        let cfg = ObservationConfig::new(1.0, 13, ScalarField::Real).unwrap();
        let y0 = simulate_observation(&op, &SampledFunction::zeros(g.clone()), &cfg).unwrap();
        let y1 = simulate_observation(&op, &f1, &cfg).unwrap();
        let y2 = simulate_observation(&op, &f2, &cfg).unwrap();
        let y12 = simulate_observation(&op, &f1.add(&f2).unwrap(), &cfg).unwrap();
        let amp = cfg.sigma * (g.n() as f64 / g.volume()).sqrt();
        for i in 0..g.n() {
            let lhs = y12.values_real().unwrap()[i] - y0.values_real().unwrap()[i];
            let rhs = (y1.values_real().unwrap()[i] - y0.values_real().unwrap()[i])
                + (y2.values_real().unwrap()[i] - y0.values_real().unwrap()[i]);
            assert!(
                (lhs - rhs).abs() <= 64.0 * f64::EPSILON * amp,
                "index {i}: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn observation_pairing_mean_matches_forward_image() {
        // mean of ⟨Y, h⟩_n over replications → ⟨A f, h⟩_n within 4 se.
        let n = 64;
        let g = make_uniform_grid(0.0, 1.0, n).unwrap();
        let op = ForwardOperator::integration(g.clone()).unwrap();
        let f = random_fn(&g, 8);
        let h = random_fn(&g, 9);
        let sigma = 0.8;
        let cfg = ObservationConfig::new(sigma, 17, ScalarField::Real).unwrap();
        let target = inner_product_n(&op.apply(&f).unwrap(), &h).unwrap().re;
        let reps = 10_000u64;
        let mut sum = 0.0;
        for rep in 0..reps {
            let y = simulate_observation_rep(&op, &f, &cfg, rep).unwrap();
            sum += inner_product_n(&y, &h).unwrap().re;
        }
        let mean = sum / reps as f64;
        let se = sigma * h.norm_n() / (reps as f64).sqrt();
        assert!(
            (mean - target).abs() <= 4.0 * se,
            "mean {mean}, target {target}, se {se}"
        );
    }
}
