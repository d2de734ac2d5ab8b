//! Discrete Radon transform: line integrals of a 2-D image over the disc
//! inscribed in its (centered, square) pixel grid.
//!
//! `(Rf)(t, θ)` integrates `f` along the chord `{t·n_θ + s·d_θ}` of the disc
//! of radius `R` = half the image side, where `n_θ = (cos θ, sin θ)` is the
//! line normal and `d_θ = (−sin θ, cos θ)` the direction. Each chord is
//! sampled at midpoints of `⌈2R/px⌉` equal sub-intervals scaled to the chord
//! length, with bilinear interpolation between image samples and zero outside
//! the sampled square.

use crate::error::{Error, Result};
use crate::sampling::{make_product_grid_2d, FieldValues, Grid, SampledFunction};
use num_complex::Complex64;
use std::sync::Arc;

/// Geometry extracted from a validated Radon image grid.
pub(crate) struct RadonGeometry {
    pub npix: usize,
    /// Disc radius = half the image side.
    pub radius: f64,
    /// Pixel width.
    pub px: f64,
    /// Left edge of the sample square (= −radius).
    pub x0: f64,
    /// Chord sample count `⌈2R/px⌉`.
    pub nsamp: usize,
}

pub(crate) fn radon_geometry(image_grid: &Grid) -> Result<RadonGeometry> {
    let (ax, ay) = image_grid.axes2().ok_or_else(|| {
        Error::InvalidArgument("Radon transform requires an image on a 2-D grid".into())
    })?;
    let tol = 1e-12;
    if ax.n != ay.n
        || (ax.a - ay.a).abs() > tol
        || (ax.b - ay.b).abs() > tol
        || (ax.a + ax.b).abs() > tol
    {
        return Err(Error::InvalidArgument(
            "Radon transform requires a centered square image grid \
             (equal axes over [−R, R))"
                .into(),
        ));
    }
    let radius = ax.b;
    let npix = ax.n;
    let px = (ax.b - ax.a) / npix as f64;
    let nsamp = (2.0 * radius / px).ceil() as usize;
    Ok(RadonGeometry {
        npix,
        radius,
        px,
        x0: ax.a,
        nsamp,
    })
}

fn check_t_grid(t_grid: &Grid, radius: f64) -> Result<Vec<f64>> {
    let ax = t_grid.axis1().ok_or_else(|| {
        Error::InvalidArgument("Radon offset grid must be one-dimensional".into())
    })?;
    let ts = ax.points();
    for &t in &ts {
        if t.abs() > radius + 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "line offset t = {t} lies outside the disc of radius {radius}"
            )));
        }
    }
    Ok(ts)
}

/// One plane of line integrals: `values` is the row-major image plane.
fn radon_plane(
    values: &[f64],
    geom: &RadonGeometry,
    ts: &[f64],
    thetas: &[f64],
) -> Vec<f64> {
    let npix = geom.npix;
    let inv_px = 1.0 / geom.px;
    let mut sino = vec![0.0; ts.len() * thetas.len()];
    for (jt, &theta) in thetas.iter().enumerate() {
        let (sin_t, cos_t) = theta.sin_cos();
        for (it, &t) in ts.iter().enumerate() {
            let smax2 = geom.radius * geom.radius - t * t;
            if smax2 <= 0.0 {
                continue;
            }
            let smax = smax2.sqrt();
            let ds = 2.0 * smax / geom.nsamp as f64;
            let base_x = t * cos_t;
            let base_y = t * sin_t;
            let mut acc = 0.0;
            for q in 0..geom.nsamp {
                let s = -smax + (q as f64 + 0.5) * ds;
                let gx = (base_x - s * sin_t - geom.x0) * inv_px;
                let gy = (base_y + s * cos_t - geom.x0) * inv_px;
                let i0 = gx.floor();
                let j0 = gy.floor();
                if i0 < 0.0 || j0 < 0.0 {
                    continue;
                }
                let (i0, j0) = (i0 as usize, j0 as usize);
                if i0 + 1 >= npix || j0 + 1 >= npix {
                    continue;
                }
                let fx = gx - i0 as f64;
                let fy = gy - j0 as f64;
                let base = i0 * npix + j0;
                let v00 = values[base];
                let v01 = values[base + 1];
                let v10 = values[base + npix];
                let v11 = values[base + npix + 1];
                acc += (1.0 - fx) * ((1.0 - fy) * v00 + fy * v01)
                    + fx * ((1.0 - fy) * v10 + fy * v11);
            }
            sino[it * thetas.len() + jt] = acc * ds;
        }
    }
    sino
}

/// Radon transform of `image` evaluated on `t_grid × theta_grid`.
///
/// The sinogram lives on the product grid with `t` as the slow (row) axis,
/// so its row-major layout matches a rows-=-t, columns-=-θ table.
pub fn radon_forward(
    image: &SampledFunction,
    t_grid: &Arc<Grid>,
    theta_grid: &Arc<Grid>,
) -> Result<SampledFunction> {
    let geom = radon_geometry(image.grid())?;
    let ts = check_t_grid(t_grid, geom.radius)?;
    let th_ax = theta_grid.axis1().ok_or_else(|| {
        Error::InvalidArgument("Radon angle grid must be one-dimensional".into())
    })?;
    let thetas = th_ax.points();
    let t_ax = t_grid.axis1().unwrap();
    let out_grid = make_product_grid_2d((t_ax.a, t_ax.b, t_ax.n), (th_ax.a, th_ax.b, th_ax.n))?;

    let values = match image.values() {
        FieldValues::Real(v) => FieldValues::Real(radon_plane(v, &geom, &ts, &thetas)),
        FieldValues::Complex(v) => {
            let re: Vec<f64> = v.iter().map(|z| z.re).collect();
            let im: Vec<f64> = v.iter().map(|z| z.im).collect();
            let sre = radon_plane(&re, &geom, &ts, &thetas);
            let sim = radon_plane(&im, &geom, &ts, &thetas);
            FieldValues::Complex(
                sre.into_iter()
                    .zip(sim)
                    .map(|(a, b)| Complex64::new(a, b))
                    .collect(),
            )
        }
    };
    SampledFunction::from_values(out_grid, values)
}
