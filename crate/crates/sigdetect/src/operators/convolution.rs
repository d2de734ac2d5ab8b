//! Periodic convolution forward map `(Kf)(x) = ∫_0^1 h(u − x) f(u) du` on
//! the unit circle, computed in the Fourier domain.
//!
//! In Fourier series (with `ĥ_m = ∫_0^1 h(x) e^{-2πimx} dx`) the map acts
//! diagonally: `(Kf)^(m) = ĥ_{-m} · f̂(m)`. The discrete version multiplies
//! DFT bin `k` of `f` by `ĥ_{-m(k)}` where `m(k)` is the signed mode of bin
//! `k` (`m = k` for `k < n/2`, else `k − n`).

use crate::error::{Error, Result};
use crate::sampling::{FieldValues, SampledFunction};
use num_complex::Complex64;
use rustfft::FftPlanner;

/// Power-law Fourier decay model `h_m = C·|m|^{−a}` (with `h_0 = C`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayParams {
    /// Amplitude `C > 0`.
    pub c: f64,
    /// Decay exponent `a ≥ 0`.
    pub a: f64,
}

impl DecayParams {
    pub fn new(c: f64, a: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() || !(a >= 0.0) || !a.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "decay parameters need C > 0 and a >= 0, got C = {c}, a = {a}"
            )));
        }
        Ok(DecayParams { c, a })
    }

    /// The model coefficient `h_m = C·|m|^{−a}` (`h_0 = C`).
    pub fn coefficient(&self, m: i64) -> f64 {
        if m == 0 {
            self.c
        } else {
            self.c * (m.abs() as f64).powf(-self.a)
        }
    }
}

/// Symmetric table of Fourier coefficients `h_m`, `m ∈ {−max_mode, …, max_mode}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierTable {
    max_mode: i64,
    values: Vec<Complex64>,
}

impl FourierTable {
    pub fn new(max_mode: i64, values: Vec<Complex64>) -> Result<Self> {
        if max_mode < 0 || values.len() != (2 * max_mode + 1) as usize {
            return Err(Error::InvalidArgument(format!(
                "Fourier table needs 2·max_mode+1 values, got {} for max_mode {}",
                values.len(),
                max_mode
            )));
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("Fourier coefficients".into()));
        }
        Ok(FourierTable { max_mode, values })
    }

    /// Coefficient `h_m` (zero beyond the stored band).
    pub fn coefficient(&self, m: i64) -> Complex64 {
        if m.abs() > self.max_mode {
            Complex64::new(0.0, 0.0)
        } else {
            self.values[(m + self.max_mode) as usize]
        }
    }

    pub fn max_mode(&self) -> i64 {
        self.max_mode
    }
}

/// A 1-periodic convolution kernel known through point samples, Fourier
/// coefficients, a power-law decay model, or any combination. When several
/// representations are given they must describe the same kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionKernel {
    samples: Option<Vec<f64>>,
    fourier: Option<FourierTable>,
    decay: Option<DecayParams>,
}

/// Signed mode of DFT bin `k` on an `n`-point grid.
pub fn signed_mode(k: usize, n: usize) -> i64 {
    if k < n.div_ceil(2) {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

impl ConvolutionKernel {
    /// Kernel from samples `h(i/n)` on the same grid the operator acts on.
    pub fn from_samples(samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument("kernel needs at least one sample".into()));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("kernel samples".into()));
        }
        Ok(ConvolutionKernel {
            samples: Some(samples),
            fourier: None,
            decay: None,
        })
    }

    /// Kernel from a symmetric Fourier-coefficient table.
    pub fn from_fourier(table: FourierTable) -> Self {
        ConvolutionKernel {
            samples: None,
            fourier: Some(table),
            decay: None,
        }
    }

    /// Kernel from the power-law decay model `h_m = C·|m|^{−a}`.
    pub fn from_decay(c: f64, a: f64) -> Result<Self> {
        Ok(ConvolutionKernel {
            samples: None,
            fourier: None,
            decay: Some(DecayParams::new(c, a)?),
        })
    }

    /// Kernel with both samples and Fourier coefficients; the two must agree
    /// under the DFT to 1e−10 (relative to the largest coefficient).
    pub fn from_samples_and_fourier(samples: Vec<f64>, table: FourierTable) -> Result<Self> {
        let k = Self::from_samples(samples)?;
        let n = k.samples.as_ref().unwrap().len();
        let from_samples = dft_coefficients(k.samples.as_ref().unwrap());
        let scale = table
            .values
            .iter()
            .map(|z| z.norm())
            .fold(1e-300, f64::max);
        for (bin, &got) in from_samples.iter().enumerate() {
            let m = signed_mode(bin, n);
            if m.abs() > table.max_mode {
                continue;
            }
            let want = table.coefficient(m);
            if (got - want).norm() > 1e-10 * scale {
                return Err(Error::InvalidArgument(format!(
                    "kernel sample and Fourier representations disagree at mode {m}: \
                     DFT gives {got}, table gives {want}"
                )));
            }
        }
        Ok(ConvolutionKernel {
            samples: k.samples,
            fourier: Some(table),
            decay: None,
        })
    }

    /// Attach decay parameters to an existing kernel.
    pub fn with_decay(mut self, c: f64, a: f64) -> Result<Self> {
        self.decay = Some(DecayParams::new(c, a)?);
        Ok(self)
    }

    pub fn decay(&self) -> Option<DecayParams> {
        self.decay
    }

    pub fn samples(&self) -> Option<&[f64]> {
        self.samples.as_deref()
    }

    /// Per-bin forward multipliers `M_k = ĥ_{−m(k)}` for an `n`-point grid,
    /// so that `DFT(Kf)_k = M_k · DFT(f)_k`.
    ///
    /// Sampled kernels must have exactly `n` samples (the operator grid);
    /// their coefficients are the quadrature values `(1/n)·DFT(h)`. Kernels
    /// given in the Fourier domain use the stored coefficients directly.
    pub fn bin_multipliers(&self, n: usize) -> Result<Vec<Complex64>> {
        if let Some(h) = &self.samples {
            if h.len() != n {
                return Err(Error::GridMismatch(format!(
                    "kernel sampled on {} points cannot act on a grid of {} points",
                    h.len(),
                    n
                )));
            }
            let coeffs = dft_coefficients(h);
            // Real samples: ĥ_{−m(k)} = conj(ĥ_{m(k)}), and bin k carries ĥ_{m(k)}.
            return Ok(coeffs.iter().map(|z| z.conj()).collect());
        }
        if let Some(table) = &self.fourier {
            return Ok((0..n)
                .map(|k| table.coefficient(-signed_mode(k, n)))
                .collect());
        }
        if let Some(decay) = &self.decay {
            return Ok((0..n)
                .map(|k| Complex64::new(decay.coefficient(-signed_mode(k, n)), 0.0))
                .collect());
        }
        Err(Error::MissingData(
            "convolution kernel has no representation".into(),
        ))
    }

    /// True when the kernel is a real function (`h_{−m} = conj(h_m)`), so
    /// that real inputs map to real outputs.
    pub fn is_real_kernel(&self) -> bool {
        if self.samples.is_some() || self.decay.is_some() {
            return true;
        }
        if let Some(t) = &self.fourier {
            for m in 0..=t.max_mode {
                if (t.coefficient(-m) - t.coefficient(m).conj()).norm() > 1e-14 {
                    return false;
                }
            }
            return true;
        }
        false
    }
}

/// Quadrature Fourier coefficients of real samples: bin `k` holds
/// `(1/n)·Σ_j h_j e^{−2πi jk/n} ≈ ĥ_{m(k)}`.
pub fn dft_coefficients(samples: &[f64]) -> Vec<Complex64> {
    let n = samples.len();
    let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let inv_n = 1.0 / n as f64;
    buf.iter_mut().for_each(|z| *z *= inv_n);
    buf
}

/// Apply the periodic convolution `Kf(x) = ∫_0^1 h(u−x) f(u) du` on a uniform
/// grid over `[0, 1)`. Output lives on the input grid.
pub fn convolve_periodic(kernel: &ConvolutionKernel, f: &SampledFunction) -> Result<SampledFunction> {
    let grid = f.grid().clone();
    let ax = grid.axis1().ok_or_else(|| {
        Error::InvalidArgument("periodic convolution requires a uniform 1-D grid".into())
    })?;
    if ax.a != 0.0 || ax.b != 1.0 {
        return Err(Error::InvalidArgument(format!(
            "periodic convolution is defined on [0, 1), got [{}, {})",
            ax.a, ax.b
        )));
    }
    let n = grid.n();
    let mult = kernel.bin_multipliers(n)?;

    let mut buf: Vec<Complex64> = (0..n).map(|i| f.value_c(i)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for (z, m) in buf.iter_mut().zip(&mult) {
        *z *= m;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let inv_n = 1.0 / n as f64;
    buf.iter_mut().for_each(|z| *z *= inv_n);

    let values = if f.is_real() && kernel.is_real_kernel() {
        FieldValues::Real(buf.iter().map(|z| z.re).collect())
    } else {
        FieldValues::Complex(buf)
    };
    SampledFunction::from_values(grid, values)
}
