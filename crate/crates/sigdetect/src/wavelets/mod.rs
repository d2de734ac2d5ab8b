//! Daubechies wavelet construction (cascade algorithm) and scaled wavelet
//! elements on grids: 1-D, periodized, and 2-D tensor elements.
//!
//! `daubechies_cascade` builds dyadic-resolution tables of the scaling
//! function φ and mother wavelet ψ from the family's quadrature-mirror
//! filter: φ values at the integers come from the eigenvector of the
//! refinement matrix, dyadic refinement doubles the resolution per level via
//! `φ(x) = √2·Σ_j h_j φ(2x − j)`, and `ψ(x) = √2·Σ_j g_j φ(2x − j)` with
//! `g_j = (−1)^j h_{L−j}`. Both functions are supported on `[0, L]` with
//! `L = taps − 1`.

mod filters;

use crate::error::{Error, Result};
use crate::sampling::{Grid, SampledFunction};
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

/// Wavelet family identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum WaveletFamily {
    /// Daubechies extremal-phase family with `taps` filter coefficients
    /// (`taps/2` vanishing moments); `taps = 2` is Haar.
    Daubechies { taps: usize },
}

impl WaveletFamily {
    /// Conventional name: `db1` … `db10` (db1 = Haar).
    pub fn name(&self) -> String {
        match self {
            WaveletFamily::Daubechies { taps } => format!("db{}", taps / 2),
        }
    }
}

/// Dyadic-resolution sample tables of a compactly supported wavelet pair.
#[derive(Debug, Clone)]
pub struct WaveletBasis1D {
    family: WaveletFamily,
    levels: u32,
    /// φ sampled at `k/2^levels`, `k = 0 ..= L·2^levels` (endpoints zero).
    phi: Vec<f64>,
    /// ψ on the same dyadic grid.
    psi: Vec<f64>,
    /// Support length `L = taps − 1`; both φ and ψ live on `[0, L]`.
    support_length: usize,
}

/// Build a Daubechies wavelet pair by the cascade algorithm at resolution
/// `2^levels` samples per unit length.
///
/// `taps` must be even and between 2 and 20; `levels ≥ 6`.
pub fn daubechies_cascade(taps: usize, levels: u32) -> Result<WaveletBasis1D> {
    if taps < 2 || taps > 20 || taps % 2 != 0 {
        return Err(Error::UnsupportedFamily(format!(
            "Daubechies taps must be even and within 2..=20, got {taps}"
        )));
    }
    if levels < 6 {
        return Err(Error::InvalidArgument(format!(
            "cascade needs levels >= 6, got {levels}"
        )));
    }
    let family = WaveletFamily::Daubechies { taps };
    let support_length = taps - 1;

    if taps == 2 {
        // Haar closed form: φ = 1 on [0,1), ψ = +1 on [0,½), −1 on [½,1).
        let m = 1usize << levels;
        let mut phi = vec![1.0; m + 1];
        phi[m] = 0.0;
        let mut psi = vec![0.0; m + 1];
        for (k, p) in psi.iter_mut().enumerate().take(m) {
            *p = if k < m / 2 { 1.0 } else { -1.0 };
        }
        return Ok(WaveletBasis1D {
            family,
            levels,
            phi,
            psi,
            support_length,
        });
    }

    let h = filters::DB_FILTERS[taps / 2 - 1];
    let l = support_length;

    // φ at the interior integers: the (eigenvalue-1) eigenvector of
    // M_{ik} = √2·h_{2i−k}, i,k ∈ {1, …, L−1}, normalized to Σφ(i) = 1.
    // Solved as the least-squares solution of (M − I)x = 0 stacked with the
    // normalization row.
    let dim = l - 1;
    let mut a = DMatrix::<f64>::zeros(dim + 1, dim);
    for i in 1..l {
        for k in 1..l {
            let idx = 2 * i as i64 - k as i64;
            let m_ik = if (0..taps as i64).contains(&idx) {
                std::f64::consts::SQRT_2 * h[idx as usize]
            } else {
                0.0
            };
            a[(i - 1, k - 1)] = m_ik - if i == k { 1.0 } else { 0.0 };
        }
    }
    for k in 0..dim {
        a[(dim, k)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(dim + 1);
    rhs[dim] = 1.0;
    let svd = a.svd(true, true);
    let phi_int = svd
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::Numerical(format!("refinement eigenvector solve failed: {e}")))?;

    // Level-0 table: φ at the integers 0..=L (endpoints zero).
    let mut phi: Vec<f64> = vec![0.0; l + 1];
    for i in 1..l {
        phi[i] = phi_int[i - 1];
    }

    // Dyadic refinement: values on the twice-finer grid from
    // φ(k/2^{m+1}) = √2·Σ_j h_j·φ(k/2^m − j).
    for m in 0..levels {
        let step = 1usize << m; // points per unit in the current table
        let cur_len = l * step; // current table covers [0, L] with cur_len+1 entries
        let mut next = vec![0.0; 2 * cur_len + 1];
        for (k, slot) in next.iter_mut().enumerate() {
            if k % 2 == 0 {
                *slot = phi[k / 2];
            } else {
                // position x = k/2^{m+1}; φ(2x − j) sits at index k − j·2^m.
                let mut acc = 0.0;
                for (j, &hj) in h.iter().enumerate() {
                    let idx = k as i64 - (j * step) as i64;
                    if idx >= 0 && idx <= cur_len as i64 {
                        acc += hj * phi[idx as usize];
                    }
                }
                *slot = std::f64::consts::SQRT_2 * acc;
            }
        }
        phi = next;
    }

    // ψ(k/2^lev) = √2·Σ_j g_j·φ(k/2^{lev−1} − j) with g_j = (−1)^j·h_{L−j};
    // index arithmetic on the final φ table (2x − j ↦ 2k − j·2^lev).
    let step = 1usize << levels;
    let table_len = l * step;
    let mut psi = vec![0.0; table_len + 1];
    for (k, slot) in psi.iter_mut().enumerate() {
        let mut acc = 0.0;
        for j in 0..taps {
            let g = if j % 2 == 0 { 1.0 } else { -1.0 } * h[l - j];
            let idx = 2 * k as i64 - (j * step) as i64;
            if idx >= 0 && idx <= table_len as i64 {
                acc += g * phi[idx as usize];
            }
        }
        *slot = std::f64::consts::SQRT_2 * acc;
    }

    Ok(WaveletBasis1D {
        family,
        levels,
        phi,
        psi,
        support_length,
    })
}

impl WaveletBasis1D {
    pub fn family(&self) -> WaveletFamily {
        self.family
    }

    pub fn taps(&self) -> usize {
        match self.family {
            WaveletFamily::Daubechies { taps } => taps,
        }
    }

    /// Support length `L` (both φ and ψ live on `[0, L]`).
    pub fn support_length(&self) -> usize {
        self.support_length
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    /// Spacing of the dyadic sample tables.
    pub fn table_spacing(&self) -> f64 {
        1.0 / (1u64 << self.levels) as f64
    }

    pub fn phi_table(&self) -> &[f64] {
        &self.phi
    }

    pub fn psi_table(&self) -> &[f64] {
        &self.psi
    }

    fn interp(table: &[f64], levels: u32, support: usize, x: f64) -> f64 {
        if x <= 0.0 || x >= support as f64 {
            return 0.0;
        }
        let g = x * (1u64 << levels) as f64;
        let i = g.floor() as usize;
        if i + 1 >= table.len() {
            return 0.0;
        }
        let frac = g - i as f64;
        table[i] * (1.0 - frac) + table[i + 1] * frac
    }

    /// φ(x) by linear interpolation (0 outside `[0, L]`).
    pub fn eval_phi(&self, x: f64) -> f64 {
        Self::interp(&self.phi, self.levels, self.support_length, x)
    }

    /// ψ(x) by linear interpolation (0 outside `[0, L]`).
    pub fn eval_psi(&self, x: f64) -> f64 {
        Self::interp(&self.psi, self.levels, self.support_length, x)
    }

    /// ψ′ table by centered finite differences on the dyadic grid
    /// (one-sided at the support endpoints).
    pub fn psi_prime_table(&self) -> Vec<f64> {
        finite_difference(&self.psi, self.table_spacing())
    }

    /// ψ^{(−1)} table: cumulative left-Riemann antiderivative
    /// `∫_0^{x_k} ψ ≈ spacing·Σ_{i<k} ψ_i` on the dyadic grid.
    pub fn psi_antiderivative_table(&self) -> Vec<f64> {
        let h = self.table_spacing();
        let mut out = Vec::with_capacity(self.psi.len());
        let mut acc = 0.0;
        for &v in &self.psi {
            out.push(acc);
            acc += h * v;
        }
        out
    }
}

/// Centered finite differences with one-sided ends.
pub(crate) fn finite_difference(table: &[f64], spacing: f64) -> Vec<f64> {
    let n = table.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    out[0] = (table[1] - table[0]) / spacing;
    out[n - 1] = (table[n - 1] - table[n - 2]) / spacing;
    for i in 1..n - 1 {
        out[i] = (table[i + 1] - table[i - 1]) / (2.0 * spacing);
    }
    out
}

fn resolvability_check(basis: &WaveletBasis1D, j: i32, spacing: f64) -> Result<()> {
    let width = basis.support_length as f64 * 2f64.powi(-j);
    if width / spacing < 4.0 {
        return Err(Error::UnderResolved(format!(
            "scale 2^-{j} leaves {:.2} samples across the support (need >= 4)",
            width / spacing
        )));
    }
    Ok(())
}

/// Samples of the scaled-translated wavelet `2^{j/2}·ψ(2^j x − l)` on `grid`
/// (zero outside its support). Errors when fewer than 4 grid samples fall
/// across the support.
pub fn wavelet_element(
    basis: &WaveletBasis1D,
    j: i32,
    l: i64,
    grid: &Arc<Grid>,
) -> Result<SampledFunction> {
    scaled_table_element(basis, TableKind::Psi, j, l, grid)
}

/// Which dyadic table a scaled element reads from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    Phi,
    Psi,
    /// ψ′ (centered finite differences).
    PsiPrime,
    /// ψ^{(−1)} (cumulative antiderivative). NOTE: not compactly normalized —
    /// zero left of the support and Σψ·spacing (≈ 0) to the right.
    PsiAntiderivative,
}

/// Samples of `2^{j/2}·T(2^j x − l)` for a chosen table `T` on a uniform 1-D
/// grid. Shared implementation behind [`wavelet_element`] and the vaguelette
/// constructions.
pub fn scaled_table_element(
    basis: &WaveletBasis1D,
    kind: TableKind,
    j: i32,
    l: i64,
    grid: &Arc<Grid>,
) -> Result<SampledFunction> {
    let ax = grid
        .axis1()
        .ok_or_else(|| Error::InvalidArgument("wavelet elements need a 1-D grid".into()))?;
    resolvability_check(basis, j, ax.spacing())?;
    let table = match kind {
        TableKind::Phi => basis.phi.clone(),
        TableKind::Psi => basis.psi.clone(),
        TableKind::PsiPrime => basis.psi_prime_table(),
        TableKind::PsiAntiderivative => basis.psi_antiderivative_table(),
    };
    let amp = 2f64.powi(j).sqrt();
    let scale = 2f64.powi(j);
    let values: Vec<f64> = (0..ax.n)
        .map(|i| {
            let x = ax.point(i);
            let arg = scale * x - l as f64;
            if matches!(kind, TableKind::PsiAntiderivative) && arg >= basis.support_length as f64 {
                // The antiderivative's right tail is the (≈ 0) total integral,
                // constant rather than zero; extend it instead of clipping.
                amp * table[table.len() - 1]
            } else {
                amp * WaveletBasis1D::interp(&table, basis.levels, basis.support_length, arg)
            }
        })
        .collect();
    SampledFunction::real(grid.clone(), values)
}

/// Samples of the 1-periodization `Σ_z 2^{j/2}·ψ(2^j (x+z) − l)` on a uniform
/// grid over `[0, 1)`; exact because the support is compact.
pub fn wavelet_element_periodized(
    basis: &WaveletBasis1D,
    j: i32,
    l: i64,
    grid: &Arc<Grid>,
) -> Result<SampledFunction> {
    let ax = grid
        .axis1()
        .ok_or_else(|| Error::InvalidArgument("wavelet elements need a 1-D grid".into()))?;
    if ax.a != 0.0 || ax.b != 1.0 {
        return Err(Error::InvalidArgument(
            "periodized wavelet elements live on [0, 1)".into(),
        ));
    }
    resolvability_check(basis, j, ax.spacing())?;
    let amp = 2f64.powi(j).sqrt();
    let scale = 2f64.powi(j);
    let supp = basis.support_length as f64;
    // x + z must satisfy 2^j(x+z) − l ∈ [0, L] for x ∈ [0, 1).
    let z_lo = ((l as f64) / scale - 1.0).floor() as i64;
    let z_hi = ((l as f64 + supp) / scale).ceil() as i64;
    let values: Vec<f64> = (0..ax.n)
        .map(|i| {
            let x = ax.point(i);
            let mut acc = 0.0;
            for z in z_lo..=z_hi {
                let arg = scale * (x + z as f64) - l as f64;
                acc += WaveletBasis1D::interp(&basis.psi, basis.levels, basis.support_length, arg);
            }
            amp * acc
        })
        .collect();
    SampledFunction::real(grid.clone(), values)
}

/// Samples of the 2-D tensor wavelet `2^j·η^ε(2^j x − l)` on a product grid,
/// where `η¹ = φ⊗ψ`, `η² = ψ⊗φ`, `η³ = ψ⊗ψ`.
pub fn wavelet_element_2d(
    basis: &WaveletBasis1D,
    j: i32,
    l: (i64, i64),
    eps: u8,
    grid: &Arc<Grid>,
) -> Result<SampledFunction> {
    let (ax, ay) = grid
        .axes2()
        .ok_or_else(|| Error::InvalidArgument("2-D wavelet elements need a product grid".into()))?;
    if !(1..=3).contains(&eps) {
        return Err(Error::InvalidArgument(format!(
            "tensor wavelet type must be 1, 2, or 3, got {eps}"
        )));
    }
    resolvability_check(basis, j, ax.spacing())?;
    resolvability_check(basis, j, ay.spacing())?;
    let scale = 2f64.powi(j);
    let amp = scale; // 2^{j/2} per factor
    let fx = |t: f64| match eps {
        1 => basis.eval_phi(t),
        _ => basis.eval_psi(t),
    };
    let fy = |t: f64| match eps {
        2 => basis.eval_phi(t),
        _ => basis.eval_psi(t),
    };
    // Separable evaluation: per-axis tables, then outer product.
    let xs: Vec<f64> = (0..ax.n).map(|i| fx(scale * ax.point(i) - l.0 as f64)).collect();
    let ys: Vec<f64> = (0..ay.n).map(|i| fy(scale * ay.point(i) - l.1 as f64)).collect();
    let mut values = vec![0.0; ax.n * ay.n];
    for (ix, &vx) in xs.iter().enumerate() {
        if vx == 0.0 {
            continue;
        }
        let row = &mut values[ix * ay.n..(ix + 1) * ay.n];
        for (iy, &vy) in ys.iter().enumerate() {
            row[iy] = amp * vx * vy;
        }
    }
    SampledFunction::real(grid.clone(), values)
}
