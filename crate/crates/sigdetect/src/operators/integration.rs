//! Cumulative-integration forward map `(Af)(x) = ∫_{-∞}^x f(t) dt` for
//! functions supported on the grid's domain.

use crate::error::{Error, Result};
use crate::sampling::{FieldValues, SampledFunction};
use num_complex::Complex64;

/// Integrate `f` cumulatively: `out_i = spacing · Σ_{j ≤ i} f_j`.
///
/// The inclusive left-Riemann running sum makes the operator exactly
/// lower-triangular (with diagonal = spacing) and consistent with the
/// `⟨·,·⟩_n` quadrature. Output lives on the input grid.
pub fn integrate_forward(f: &SampledFunction) -> Result<SampledFunction> {
    let grid = f.grid().clone();
    let ax = grid.axis1().ok_or_else(|| {
        Error::InvalidArgument("integration requires a uniform 1-D grid".into())
    })?;
    let h = ax.spacing();
    let values = match f.values() {
        FieldValues::Real(v) => {
            let mut acc = 0.0;
            let mut out = Vec::with_capacity(v.len());
            for &x in v {
                acc += h * x;
                out.push(acc);
            }
            FieldValues::Real(out)
        }
        FieldValues::Complex(v) => {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut out = Vec::with_capacity(v.len());
            for &z in v {
                acc += h * z;
                out.push(acc);
            }
            FieldValues::Complex(out)
        }
    };
    SampledFunction::from_values(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{make_product_grid_2d, make_uniform_grid};
    use approx::assert_relative_eq;

    #[test]
    fn constant_one_integrates_to_ramp() {
        let n = 256;
        let g = make_uniform_grid(0.0, 1.0, n).unwrap();
        let f = SampledFunction::real(g.clone(), vec![1.0; n]).unwrap();
        let out = integrate_forward(&f).unwrap();
        let v = out.values_real().unwrap();
        let h = 1.0 / n as f64;
        // Inclusive running sum: out_i = (i+1)·h = x_i + h.
        for i in 0..n {
            let x = g.axis1().unwrap().point(i);
            assert_relative_eq!(v[i], x + h, max_relative = 1e-12);
            assert!((v[i] - x).abs() <= h + 1e-15);
        }
    }

    #[test]
    fn zero_integrates_to_zero() {
        let g = make_uniform_grid(0.0, 1.0, 16).unwrap();
        let f = SampledFunction::zeros(g);
        let out = integrate_forward(&f).unwrap();
        assert!(out.values_real().unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn rejects_two_dimensional_grids() {
        let g = make_product_grid_2d((0.0, 1.0, 4), (0.0, 1.0, 4)).unwrap();
        let f = SampledFunction::zeros(g);
        assert!(integrate_forward(&f).is_err());
    }

    #[test]
    fn lower_triangular_exactly() {
        // Input supported at one index k → output is exactly 0 before k and
        // exactly spacing·f_k from k on.
        let n = 32;
        let g = make_uniform_grid(0.0, 2.0, n).unwrap();
        let h = g.axis1().unwrap().spacing();
        for k in [0usize, 7, 31] {
            let mut v = vec![0.0; n];
            v[k] = 3.5;
            let f = SampledFunction::real(g.clone(), v).unwrap();
            let out = integrate_forward(&f).unwrap();
            let ov = out.values_real().unwrap();
            for i in 0..n {
                if i < k {
                    assert_eq!(ov[i], 0.0);
                } else {
                    assert_eq!(ov[i], h * 3.5);
                }
            }
        }
    }

    #[test]
    fn support_shrinkage_left_zero_right_constant() {
        // Compactly supported f: zero left of support, constant ∫f right.
        let n = 64;
        let g = make_uniform_grid(0.0, 1.0, n).unwrap();
        let mut v = vec![0.0; n];
        for i in 20..30 {
            v[i] = (i as f64 - 24.5).sin() + 2.0;
        }
        let total: f64 = v.iter().sum::<f64>() / n as f64;
        let f = SampledFunction::real(g, v).unwrap();
        let out = integrate_forward(&f).unwrap();
        let ov = out.values_real().unwrap();
        for i in 0..20 {
            assert_eq!(ov[i], 0.0);
        }
        for i in 29..n {
            // Adding zeros leaves the running sum bit-identical.
            assert_eq!(ov[i], ov[29]);
        }
        assert_relative_eq!(ov[n - 1], total, max_relative = 1e-12);
    }
}
