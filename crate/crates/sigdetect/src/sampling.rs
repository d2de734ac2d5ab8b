//! Grids, quadrature inner products, and the discretized observation model.
//!
//! A [`Grid`] is a finite sample set `S` of a domain `D` together with
//! `vol(D)`. Functions sampled on a grid pair via the volume-weighted
//! quadrature inner product
//!
//! ```text
//! ⟨x, y⟩_n = (vol(D)/n) · Σ_s x_s · conj(y_s),
//! ```
//!
//! which makes the discrete model exactly Gaussian: an observation
//! `Y = A f + σ √(n/vol(D)) ξ` with i.i.d. standard-normal `ξ` satisfies
//! `⟨Y, h⟩_n ~ N(⟨A f, h⟩_n, σ²‖h‖_n²)` for every fixed `h` (variance
//! `2σ²‖h‖_n²` in the complex convention).

use crate::error::{Error, Result};
use crate::rng::{complex_normal_var2, standard_normal, stream_rng};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Scalar field of an observation model; `epsilon` is the field factor that
/// scales complex-case bounds (`1` for real, `√2` for complex).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarField {
    Real,
    Complex,
}

impl ScalarField {
    /// Field factor `ε`: 1 for real scalars, √2 for complex scalars.
    pub fn epsilon(self) -> f64 {
        match self {
            ScalarField::Real => 1.0,
            ScalarField::Complex => std::f64::consts::SQRT_2,
        }
    }
}

/// One uniformly spaced, left-closed axis `[a, b)` with `n` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

impl Axis {
    fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(format!(
                "axis needs at least one point, got n = {n}"
            )));
        }
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "axis needs finite b > a, got [{a}, {b})"
            )));
        }
        Ok(Axis { a, b, n })
    }

    /// Spacing between consecutive points.
    pub fn spacing(&self) -> f64 {
        (self.b - self.a) / self.n as f64
    }

    /// The `i`-th point, `a + i·(b−a)/n`.
    pub fn point(&self, i: usize) -> f64 {
        self.a + (self.b - self.a) * (i as f64) / (self.n as f64)
    }

    /// All points as a vector.
    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }
}

/// Sample-set shapes supported by the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum GridShape {
    /// Left-endpoint uniform grid on an interval.
    Uniform1D(Axis),
    /// Product of two uniform axes; points ordered row-major with the first
    /// axis slowest (index = i_x · n_y + i_y).
    Product2D { x: Axis, y: Axis },
}

/// A finite sample set with its domain volume.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    shape: GridShape,
}

impl Grid {
    /// Number of sample points `n`.
    pub fn n(&self) -> usize {
        match &self.shape {
            GridShape::Uniform1D(ax) => ax.n,
            GridShape::Product2D { x, y } => x.n * y.n,
        }
    }

    /// Domain volume `vol(D)`.
    pub fn volume(&self) -> f64 {
        match &self.shape {
            GridShape::Uniform1D(ax) => ax.b - ax.a,
            GridShape::Product2D { x, y } => (x.b - x.a) * (y.b - y.a),
        }
    }

    /// Quadrature weight `vol(D)/n`.
    pub fn weight(&self) -> f64 {
        self.volume() / self.n() as f64
    }

    /// Grid dimensionality (1 or 2).
    pub fn dim(&self) -> usize {
        match &self.shape {
            GridShape::Uniform1D(_) => 1,
            GridShape::Product2D { .. } => 2,
        }
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    /// The 1-D axis, if this is a 1-D grid.
    pub fn axis1(&self) -> Option<&Axis> {
        match &self.shape {
            GridShape::Uniform1D(ax) => Some(ax),
            _ => None,
        }
    }

    /// The two axes, if this is a product grid.
    pub fn axes2(&self) -> Option<(&Axis, &Axis)> {
        match &self.shape {
            GridShape::Product2D { x, y } => Some((x, y)),
            _ => None,
        }
    }

    /// Coordinates of point `i` (length 1 or 2).
    pub fn point(&self, i: usize) -> Vec<f64> {
        match &self.shape {
            GridShape::Uniform1D(ax) => vec![ax.point(i)],
            GridShape::Product2D { x, y } => {
                let ix = i / y.n;
                let iy = i % y.n;
                vec![x.point(ix), y.point(iy)]
            }
        }
    }
}

/// Build a uniform left-endpoint grid on `[a, b)` with `n` points and volume
/// `b − a`.
pub fn make_uniform_grid(a: f64, b: f64, n: usize) -> Result<Arc<Grid>> {
    Ok(Arc::new(Grid {
        shape: GridShape::Uniform1D(Axis::new(a, b, n)?),
    }))
}

/// Build the product of two uniform axes (row-major point order, first axis
/// slowest) with volume `(b_x − a_x)(b_y − a_y)`.
pub fn make_product_grid_2d(
    x: (f64, f64, usize),
    y: (f64, f64, usize),
) -> Result<Arc<Grid>> {
    Ok(Arc::new(Grid {
        shape: GridShape::Product2D {
            x: Axis::new(x.0, x.1, x.2)?,
            y: Axis::new(y.0, y.1, y.2)?,
        },
    }))
}

/// Values of a sampled function: real or complex per the scalar field.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldValues {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl FieldValues {
    pub fn len(&self) -> usize {
        match self {
            FieldValues::Real(v) => v.len(),
            FieldValues::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn all_finite(&self) -> bool {
        match self {
            FieldValues::Real(v) => v.iter().all(|x| x.is_finite()),
            FieldValues::Complex(v) => v.iter().all(|z| z.re.is_finite() && z.im.is_finite()),
        }
    }
}

/// A function known through its samples on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    grid: Arc<Grid>,
    values: FieldValues,
}

impl SampledFunction {
    /// Wrap real samples; checks length and finiteness.
    pub fn real(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        Self::new(grid, FieldValues::Real(values))
    }

    /// Wrap complex samples; checks length and finiteness.
    pub fn complex(grid: Arc<Grid>, values: Vec<Complex64>) -> Result<Self> {
        Self::new(grid, FieldValues::Complex(values))
    }

    fn new(grid: Arc<Grid>, values: FieldValues) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::GridMismatch(format!(
                "{} values on a grid of {} points",
                values.len(),
                grid.n()
            )));
        }
        if !values.all_finite() {
            return Err(Error::NonFinite("sampled function values".into()));
        }
        Ok(SampledFunction { grid, values })
    }

    /// Wrap pre-built values (length/finiteness still checked).
    pub fn from_values(grid: Arc<Grid>, values: FieldValues) -> Result<Self> {
        Self::new(grid, values)
    }

    /// The zero function on `grid` (real).
    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.n();
        SampledFunction {
            grid,
            values: FieldValues::Real(vec![0.0; n]),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &FieldValues {
        &self.values
    }

    pub fn is_real(&self) -> bool {
        matches!(self.values, FieldValues::Real(_))
    }

    /// Real samples, if this function is real-valued.
    pub fn values_real(&self) -> Option<&[f64]> {
        match &self.values {
            FieldValues::Real(v) => Some(v),
            FieldValues::Complex(_) => None,
        }
    }

    /// Complex view of entry `i` regardless of representation.
    pub fn value_c(&self, i: usize) -> Complex64 {
        match &self.values {
            FieldValues::Real(v) => Complex64::new(v[i], 0.0),
            FieldValues::Complex(v) => v[i],
        }
    }

    /// `self + other` (promotes to complex when representations differ).
    pub fn add(&self, other: &SampledFunction) -> Result<SampledFunction> {
        check_same_grid(self, other)?;
        let values = match (&self.values, &other.values) {
            (FieldValues::Real(a), FieldValues::Real(b)) => {
                FieldValues::Real(a.iter().zip(b).map(|(x, y)| x + y).collect())
            }
            _ => FieldValues::Complex(
                (0..self.grid.n())
                    .map(|i| self.value_c(i) + other.value_c(i))
                    .collect(),
            ),
        };
        Ok(SampledFunction {
            grid: self.grid.clone(),
            values,
        })
    }

    /// `c · self` with a real scalar.
    pub fn scale(&self, c: f64) -> SampledFunction {
        let values = match &self.values {
            FieldValues::Real(v) => FieldValues::Real(v.iter().map(|x| c * x).collect()),
            FieldValues::Complex(v) => FieldValues::Complex(v.iter().map(|z| c * z).collect()),
        };
        SampledFunction {
            grid: self.grid.clone(),
            values,
        }
    }

    /// Quadrature norm `‖self‖_n = √⟨self, self⟩_n`.
    pub fn norm_n(&self) -> f64 {
        let w = self.grid.weight();
        let s: f64 = match &self.values {
            FieldValues::Real(v) => v.iter().map(|x| x * x).sum(),
            FieldValues::Complex(v) => v.iter().map(|z| z.norm_sqr()).sum(),
        };
        (w * s).sqrt()
    }
}

fn check_same_grid(x: &SampledFunction, y: &SampledFunction) -> Result<()> {
    if Arc::ptr_eq(&x.grid, &y.grid) || *x.grid == *y.grid {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!(
            "inner product between grids with {} and {} points",
            x.grid.n(),
            y.grid.n()
        )))
    }
}

/// The volume-weighted quadrature inner product
/// `⟨x, y⟩_n = (vol/n)·Σ_s x_s·conj(y_s)`, conjugate-linear in the second
/// argument. Real inputs return a value with zero imaginary part.
pub fn inner_product_n(x: &SampledFunction, y: &SampledFunction) -> Result<Complex64> {
    check_same_grid(x, y)?;
    let w = x.grid.weight();
    let acc = match (&x.values, &y.values) {
        (FieldValues::Real(a), FieldValues::Real(b)) => {
            let s: f64 = a.iter().zip(b).map(|(p, q)| p * q).sum();
            Complex64::new(s, 0.0)
        }
        _ => {
            let mut s = Complex64::new(0.0, 0.0);
            for i in 0..x.grid.n() {
                s += x.value_c(i) * y.value_c(i).conj();
            }
            s
        }
    };
    Ok(w * acc)
}

/// Quadrature norm of `x` (convenience wrapper over [`inner_product_n`]).
pub fn norm_n(x: &SampledFunction) -> f64 {
    x.norm_n()
}

/// Noise switch for [`ObservationConfig`]: `Noiseless` returns exactly the
/// forward image (the σ → 0 limit) while keeping σ itself positive for
/// threshold formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    Noisy,
    Noiseless,
}

/// Parameters of the observation model `Y = A f + σ √(n/vol) ξ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservationConfig {
    /// Noise level σ > 0.
    pub sigma: f64,
    /// Root seed; combined with a stream index per draw.
    pub seed: u64,
    /// Real or complex observation scalars.
    pub field: ScalarField,
    /// Noisy (default) or exact-forward-image mode.
    pub mode: NoiseMode,
}

impl ObservationConfig {
    pub fn new(sigma: f64, seed: u64, field: ScalarField) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "noise level must be positive and finite, got sigma = {sigma}"
            )));
        }
        Ok(ObservationConfig {
            sigma,
            seed,
            field,
            mode: NoiseMode::Noisy,
        })
    }

    pub fn noiseless(mut self) -> Self {
        self.mode = NoiseMode::Noiseless;
        self
    }
}

/// The scaled noise field `σ·√(n/vol(D))·ξ` on `grid`, drawn from the given
/// RNG stream. Real fields use i.i.d. standard normals; complex fields use
/// independent standard-normal real/imaginary parts (variance 2 per sample),
/// so that `⟨noise, h⟩_n` has variance `σ²‖h‖_n²` resp. `2σ²‖h‖_n²`.
pub fn scaled_noise(
    grid: &Arc<Grid>,
    sigma: f64,
    field: ScalarField,
    seed: u64,
    stream: u64,
) -> SampledFunction {
    let n = grid.n();
    let amp = sigma * ((n as f64) / grid.volume()).sqrt();
    let mut rng = stream_rng(seed, stream);
    let values = match field {
        ScalarField::Real => {
            let mut v = vec![0.0; n];
            for x in v.iter_mut() {
                *x = amp * standard_normal(&mut rng);
            }
            FieldValues::Real(v)
        }
        ScalarField::Complex => {
            let mut v = vec![Complex64::new(0.0, 0.0); n];
            for z in v.iter_mut() {
                *z = amp * complex_normal_var2(&mut rng);
            }
            FieldValues::Complex(v)
        }
    };
    SampledFunction {
        grid: grid.clone(),
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn uniform_grid_points_and_volume() {
        let g = make_uniform_grid(0.0, 1.0, 4).unwrap();
        let ax = g.axis1().unwrap();
        assert_eq!(ax.points(), vec![0.0, 0.25, 0.5, 0.75]);
        assert_eq!(g.volume(), 1.0);
        assert_eq!(g.n(), 4);
    }

    #[test]
    fn uniform_grid_matches_reference_sample_set() {
        // The 1-D study grid: left endpoints i/n on [0, 1).
        let n = 1 << 15;
        let g = make_uniform_grid(0.0, 1.0, n).unwrap();
        let ax = g.axis1().unwrap();
        assert_eq!(g.n(), n);
        assert_eq!(ax.point(0), 0.0);
        assert_relative_eq!(ax.point(n - 1), (n as f64 - 1.0) / n as f64, max_relative = 1e-15);
        assert_eq!(g.volume(), 1.0);
    }

    #[test]
    fn single_point_grid() {
        let g = make_uniform_grid(-0.5, 0.5, 1).unwrap();
        assert_eq!(g.axis1().unwrap().points(), vec![-0.5]);
        assert_eq!(g.volume(), 1.0);
    }

    #[test]
    fn grid_argument_errors() {
        assert!(make_uniform_grid(0.0, 1.0, 0).is_err());
        assert!(make_uniform_grid(1.0, 1.0, 4).is_err());
        assert!(make_uniform_grid(2.0, 1.0, 4).is_err());
    }

    #[test]
    fn product_grid_layout_row_major() {
        let g = make_product_grid_2d((0.0, 1.0, 2), (0.0, 10.0, 3)).unwrap();
        assert_eq!(g.n(), 6);
        assert_eq!(g.volume(), 10.0);
        // index = ix * ny + iy
        assert_eq!(g.point(0), vec![0.0, 0.0]);
        assert_eq!(g.point(1), vec![0.0, 10.0 / 3.0]);
        assert_eq!(g.point(3), vec![0.5, 0.0]);
    }

    #[test]
    fn inner_product_constant_unit_volume() {
        let g = make_uniform_grid(0.0, 1.0, 64).unwrap();
        let one = SampledFunction::real(g.clone(), vec![1.0; 64]).unwrap();
        let ip = inner_product_n(&one, &one).unwrap();
        assert_relative_eq!(ip.re, 1.0, max_relative = 1e-14);
        assert_eq!(ip.im, 0.0);
    }

    #[test]
    fn inner_product_orthogonal_vectors() {
        let g = make_uniform_grid(0.0, 1.0, 4).unwrap();
        let x = SampledFunction::real(g.clone(), vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let y = SampledFunction::real(g.clone(), vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(inner_product_n(&x, &y).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn inner_product_matches_direct_weighted_sum() {
        let g = make_uniform_grid(-1.0, 3.0, 8).unwrap();
        let mut rng = crate::rng::stream_rng(11, 0);
        let xv: Vec<f64> = (0..8).map(|_| crate::rng::standard_normal(&mut rng)).collect();
        let yv: Vec<f64> = (0..8).map(|_| crate::rng::standard_normal(&mut rng)).collect();
        let x = SampledFunction::real(g.clone(), xv.clone()).unwrap();
        let y = SampledFunction::real(g.clone(), yv.clone()).unwrap();
        let direct: f64 = (4.0 / 8.0) * xv.iter().zip(&yv).map(|(a, b)| a * b).sum::<f64>();
        let ip = inner_product_n(&x, &y).unwrap().re;
        assert_relative_eq!(ip, direct, max_relative = 1e-12);
    }

    #[test]
    fn inner_product_conjugate_symmetry_complex() {
        let g = make_uniform_grid(0.0, 1.0, 5).unwrap();
        let mut rng = crate::rng::stream_rng(4, 2);
        let xv: Vec<Complex64> = (0..5)
            .map(|_| crate::rng::complex_normal_var2(&mut rng))
            .collect();
        let yv: Vec<Complex64> = (0..5)
            .map(|_| crate::rng::complex_normal_var2(&mut rng))
            .collect();
        let x = SampledFunction::complex(g.clone(), xv).unwrap();
        let y = SampledFunction::complex(g.clone(), yv).unwrap();
        let a = inner_product_n(&x, &y).unwrap();
        let b = inner_product_n(&y, &x).unwrap();
        assert_relative_eq!(a.re, b.re, max_relative = 1e-12);
        assert_relative_eq!(a.im, -b.im, max_relative = 1e-12);
        // positivity on nonzero input
        assert!(inner_product_n(&x, &x).unwrap().re > 0.0);
    }

    #[test]
    fn inner_product_grid_mismatch_fails() {
        let g1 = make_uniform_grid(0.0, 1.0, 4).unwrap();
        let g2 = make_uniform_grid(0.0, 2.0, 4).unwrap();
        let x = SampledFunction::real(g1, vec![1.0; 4]).unwrap();
        let y = SampledFunction::real(g2, vec![1.0; 4]).unwrap();
        assert!(matches!(
            inner_product_n(&x, &y),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn sampled_function_rejects_non_finite_and_bad_length() {
        let g = make_uniform_grid(0.0, 1.0, 3).unwrap();
        assert!(SampledFunction::real(g.clone(), vec![1.0, f64::NAN, 0.0]).is_err());
        assert!(SampledFunction::real(g, vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn scaled_noise_pairing_variance_real_and_complex() {
        // Variance identity: Var ⟨noise, x⟩_n = σ²‖x‖_n² (real), 2σ²‖x‖_n² (complex).
        let n = 256;
        let g = make_uniform_grid(0.0, 2.0, n).unwrap();
        let mut rng = crate::rng::stream_rng(9, 7);
        let xv: Vec<f64> = (0..n).map(|_| crate::rng::standard_normal(&mut rng)).collect();
        let x = SampledFunction::real(g.clone(), xv).unwrap();
        let xc = SampledFunction::complex(
            g.clone(),
            x.values_real().unwrap().iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
        .unwrap();
        let sigma = 0.7;
        let reps = 10_000;
        let mut sum_sq_re = 0.0;
        let mut sum_sq_cx = 0.0;
        for r in 0..reps {
            let nr = scaled_noise(&g, sigma, ScalarField::Real, 5, r as u64);
            let nc = scaled_noise(&g, sigma, ScalarField::Complex, 6, r as u64);
            sum_sq_re += inner_product_n(&nr, &x).unwrap().re.powi(2);
            sum_sq_cx += inner_product_n(&nc, &xc).unwrap().norm_sqr();
        }
        let norm2 = x.norm_n().powi(2);
        let target_re = sigma * sigma * norm2;
        let target_cx = 2.0 * sigma * sigma * norm2;
        let est_re = sum_sq_re / reps as f64;
        let est_cx = sum_sq_cx / reps as f64;
        // Standard error of a chi-square-mean estimate: target·sqrt(2/reps).
        let se_re = target_re * (2.0 / reps as f64).sqrt();
        let se_cx = target_cx * (1.0 / reps as f64).sqrt() * 2.0_f64.sqrt();
        assert!((est_re - target_re).abs() < 5.0 * se_re, "{est_re} vs {target_re}");
        assert!((est_cx - target_cx).abs() < 5.0 * se_cx, "{est_cx} vs {target_cx}");
    }
}
