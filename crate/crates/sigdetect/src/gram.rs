//! Gram matrices of dictionary systems, their spectra and Frobenius
//! functionals, and the combinatorial coherence quantities `M_σ` (maximum
//! positive-correlation count) and the certified lower bound for `N*_σ`
//! (largest pairwise-nonpositively-correlated subset).

use crate::dict::{DictIndex, DictionarySystem};
use crate::error::{Error, Result};
use crate::sampling::{inner_product_n, SampledFunction};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use std::io::Write;

/// Which vector family a Gram matrix was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum GramVariant {
    /// `Ξ`: vaguelette pairings `⟨v_k, v_{k'}⟩_n`.
    Xi,
    /// `Ξ̃`: dual pairings `⟨ṽ_k, ṽ_{k'}⟩_n`.
    XiTilde,
    /// `Λ̃`: image pairings `⟨A u_k, A u_{k'}⟩_n`.
    LambdaTilde,
}

impl GramVariant {
    pub fn name(&self) -> &'static str {
        match self {
            GramVariant::Xi => "Xi",
            GramVariant::XiTilde => "XiTilde",
            GramVariant::LambdaTilde => "LambdaTilde",
        }
    }
}

/// Matrix storage: real systems stay real, complex systems keep phases.
#[derive(Debug, Clone)]
pub enum GramEntries {
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex64>),
}

/// A Hermitian Gram matrix with its cached spectrum.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    variant: GramVariant,
    entries: GramEntries,
    /// Eigenvalues, nonincreasing. Real because the matrix is Hermitian.
    eigenvalues: Vec<f64>,
    index_set: Vec<DictIndex>,
}

/// Gram matrix of the chosen vector family of a dictionary system.
pub fn gram(system: &DictionarySystem, variant: GramVariant) -> Result<GramMatrix> {
    let vectors: &[SampledFunction] = match variant {
        GramVariant::Xi => system
            .vaguelettes()
            .ok_or_else(|| Error::MissingData("system has no vaguelettes for Xi".into()))?,
        GramVariant::XiTilde => system
            .duals()
            .ok_or_else(|| Error::MissingData("system has no duals for XiTilde".into()))?,
        GramVariant::LambdaTilde => system.images(),
    };
    gram_from_vectors(vectors, variant, system.index_set().to_vec())
}

/// Gram matrix of an explicit vector list (flat indexing unless given).
pub fn gram_from_vectors(
    vectors: &[SampledFunction],
    variant: GramVariant,
    index_set: Vec<DictIndex>,
) -> Result<GramMatrix> {
    let n = vectors.len();
    if n == 0 {
        return Err(Error::MissingData("gram of an empty vector list".into()));
    }
    let index_set = if index_set.len() == n {
        index_set
    } else {
        (0..n).map(DictIndex::Flat).collect()
    };
    let all_real = vectors.iter().all(|v| v.is_real());
    let entries = if all_real {
        let mut m = DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            for k2 in k..n {
                let ip = inner_product_n(&vectors[k], &vectors[k2])?.re;
                if !ip.is_finite() {
                    return Err(Error::NonFinite(format!("gram entry ({k}, {k2})")));
                }
                m[(k, k2)] = ip;
                m[(k2, k)] = ip;
            }
        }
        GramEntries::Real(m)
    } else {
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for k in 0..n {
            for k2 in k..n {
                let ip = inner_product_n(&vectors[k], &vectors[k2])?;
                if !ip.re.is_finite() || !ip.im.is_finite() {
                    return Err(Error::NonFinite(format!("gram entry ({k}, {k2})")));
                }
                m[(k, k2)] = ip;
                m[(k2, k)] = ip.conj();
            }
        }
        GramEntries::Complex(m)
    };
    let mut eigenvalues = match &entries {
        GramEntries::Real(m) => SymmetricEigen::new(m.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect::<Vec<f64>>(),
        GramEntries::Complex(m) => SymmetricEigen::new(m.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect::<Vec<f64>>(),
    };
    eigenvalues.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(GramMatrix {
        variant,
        entries,
        eigenvalues,
        index_set,
    })
}

impl GramMatrix {
    pub fn n(&self) -> usize {
        self.index_set.len()
    }

    pub fn variant(&self) -> GramVariant {
        self.variant
    }

    pub fn index_set(&self) -> &[DictIndex] {
        &self.index_set
    }

    pub fn entries(&self) -> &GramEntries {
        &self.entries
    }

    /// Entry `(k, k2)` viewed as a complex number.
    pub fn entry_c(&self, k: usize, k2: usize) -> Complex64 {
        match &self.entries {
            GramEntries::Real(m) => Complex64::new(m[(k, k2)], 0.0),
            GramEntries::Complex(m) => m[(k, k2)],
        }
    }

    /// Diagonal entry `‖x_k‖_n²` (real by Hermitian symmetry).
    pub fn diagonal(&self, k: usize) -> f64 {
        self.entry_c(k, k).re
    }

    /// Real matrix of entries, available only for real systems.
    pub fn real_matrix(&self) -> Option<&DMatrix<f64>> {
        match &self.entries {
            GramEntries::Real(m) => Some(m),
            GramEntries::Complex(_) => None,
        }
    }

    /// Eigenvalues, nonincreasing.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Frobenius norm `√(Σ |entries|²)`; equals `√(Σ eigenvalues²)`.
    pub fn frobenius(&self) -> f64 {
        match &self.entries {
            GramEntries::Real(m) => m.iter().map(|x| x * x).sum::<f64>().sqrt(),
            GramEntries::Complex(m) => m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(),
        }
    }

    /// Frobenius norm of the inverse, `√(Σ eigenvalues^{−2})`, via the cached
    /// spectrum. Errors when the matrix is not numerically positive definite
    /// (min eigenvalue ≤ 1e−10 · max eigenvalue).
    pub fn frobenius_inverse(&self) -> Result<f64> {
        let max_eig = *self.eigenvalues.first().unwrap();
        let min_eig = *self.eigenvalues.last().unwrap();
        if min_eig <= 1e-10 * max_eig {
            return Err(Error::NotPositiveDefinite {
                name: self.variant.name().to_string(),
                min_eig,
                max_eig,
            });
        }
        Ok(self
            .eigenvalues
            .iter()
            .map(|&e| e.powi(-2))
            .sum::<f64>()
            .sqrt())
    }

    /// Finite-section Riesz constants: (min eigenvalue, max eigenvalue).
    pub fn riesz_bounds(&self) -> (f64, f64) {
        (
            *self.eigenvalues.last().unwrap(),
            *self.eigenvalues.first().unwrap(),
        )
    }

    /// Largest deviation from Hermitian symmetry (0 by construction).
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.n();
        let mut worst: f64 = 0.0;
        for k in 0..n {
            for k2 in 0..n {
                worst = worst.max((self.entry_c(k, k2) - self.entry_c(k2, k).conj()).norm());
            }
        }
        worst
    }

    /// Number of "nonzero" entries in the densest row, with relative
    /// tolerance 1e−10 on normalized correlations.
    pub fn max_row_support(&self) -> usize {
        let n = self.n();
        let mut worst = 0usize;
        for k in 0..n {
            let count = (0..n)
                .filter(|&k2| {
                    let denom = (self.diagonal(k) * self.diagonal(k2)).sqrt();
                    denom > 0.0 && self.entry_c(k, k2).norm() > 1e-10 * denom
                })
                .count();
            worst = worst.max(count);
        }
        worst
    }

    /// Write the entries as CSV (complex entries as `re+imi`).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let n = self.n();
        for k in 0..n {
            let row: Vec<String> = (0..n)
                .map(|k2| {
                    let z = self.entry_c(k, k2);
                    if z.im == 0.0 {
                        z.re.to_string()
                    } else {
                        format!("{}{}{}i", z.re, if z.im >= 0.0 { "+" } else { "" }, z.im)
                    }
                })
                .collect();
            w.write_record(&row)
                .map_err(|e| Error::InvalidArgument(format!("csv write failed: {e}")))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Spectrum as a JSON array (nonincreasing).
    pub fn spectrum_json(&self) -> String {
        serde_json::to_string(&self.eigenvalues).expect("serializing a float list cannot fail")
    }
}

/// Coherence diagnostics of an image system.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CoherenceReport {
    /// `M_σ`: the largest, over `k`, count of `k'` whose image correlates
    /// positively with image `k` (self included).
    pub m_sigma: usize,
    /// Size of the greedy pairwise-nonpositive subset — a certified lower
    /// bound for `N*_σ`.
    pub n_star_lower: usize,
    /// Largest signed normalized off-diagonal correlation.
    pub max_offdiag_corr: f64,
    /// Smallest diagonal entry `‖A u_k‖_n²`.
    pub min_selfcorr: f64,
}

/// Normalized correlation tolerance: pairings whose normalized magnitude is
/// below this are treated as exact zeros (they are zeros of the continuum
/// model that land at ~1e−29 relative under floating-point cumulative sums).
/// Both the positive-correlation count `M_σ` and the greedy subset use this
/// same predicate, which is what makes the `N*_σ ≥ N_σ / M_σ` certificate
/// valid.
const CORR_ZERO_TOL: f64 = 1e-10;

/// Normalized correlation `G_{kk'} / √(G_kk G_{k'k'})` (0 for zero vectors).
fn normalized_corr(g: &DMatrix<f64>, k: usize, k2: usize) -> f64 {
    let denom = (g[(k, k)] * g[(k2, k2)]).sqrt();
    if denom > 0.0 {
        g[(k, k2)] / denom
    } else {
        0.0
    }
}

fn positively_correlated(g: &DMatrix<f64>, k: usize, k2: usize) -> bool {
    normalized_corr(g, k, k2) > CORR_ZERO_TOL
}

fn correlation_matrix(images: &[SampledFunction]) -> Result<DMatrix<f64>> {
    let n = images.len();
    if n == 0 {
        return Err(Error::MissingData("coherence of an empty system".into()));
    }
    let mut g = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        for k2 in k..n {
            let ip = inner_product_n(&images[k], &images[k2])?.re;
            g[(k, k2)] = ip;
            g[(k2, k)] = ip;
        }
    }
    Ok(g)
}

/// Coherence quantities of an image family: `M_σ` by direct count of
/// positive correlations (per row, self included), the greedy `N*_σ` lower
/// bound, and normalized-correlation extremes.
pub fn coherence(images: &[SampledFunction]) -> Result<CoherenceReport> {
    let g = correlation_matrix(images)?;
    let n = images.len();
    let mut m_sigma = 0usize;
    let mut max_off = f64::NEG_INFINITY;
    let mut min_diag = f64::INFINITY;
    for k in 0..n {
        min_diag = min_diag.min(g[(k, k)]);
        let count = (0..n).filter(|&k2| positively_correlated(&g, k, k2)).count();
        for k2 in 0..n {
            if k2 != k {
                max_off = max_off.max(normalized_corr(&g, k, k2));
            }
        }
        m_sigma = m_sigma.max(count);
    }
    let (subset, n_star_lower) = greedy_negative_corr_subset(images)?;
    debug_assert!(!subset.is_empty());
    Ok(CoherenceReport {
        m_sigma,
        n_star_lower,
        max_offdiag_corr: if n > 1 { max_off } else { 0.0 },
        min_selfcorr: min_diag,
    })
}

/// Greedy construction of a subset whose images are pairwise nonpositively
/// correlated: repeatedly keep the first remaining index and drop everything
/// positively correlated with it (same zero-tolerance predicate as `M_σ`).
/// Each round discards at most `M_σ` indices, so the subset size certifies
/// `N*_σ ≥ N_σ / M_σ`.
pub fn greedy_negative_corr_subset(images: &[SampledFunction]) -> Result<(Vec<usize>, usize)> {
    let g = correlation_matrix(images)?;
    let mut remaining: Vec<usize> = (0..images.len()).collect();
    let mut subset = Vec::new();
    while let Some(&k) = remaining.first() {
        subset.push(k);
        remaining.retain(|&k2| k2 != k && !positively_correlated(&g, k, k2));
    }
    let size = subset.len();
    Ok((subset, size))
}

/// Exact maximum pairwise-nonpositive subset size by branch-and-bound over
/// all subsets; intended for `N ≤ 20` (test oracle for the greedy bound).
pub fn max_negative_corr_subset_exact(images: &[SampledFunction]) -> Result<usize> {
    let n = images.len();
    if n > 20 {
        return Err(Error::InvalidArgument(format!(
            "exact subset search is limited to 20 vectors, got {n}"
        )));
    }
    let g = correlation_matrix(images)?;
    // compatible[k] = bitmask of k2 ≠ k that are not positively correlated.
    let mut compatible = vec![0u32; n];
    for k in 0..n {
        for k2 in 0..n {
            if k2 != k && !positively_correlated(&g, k, k2) {
                compatible[k] |= 1 << k2;
            }
        }
    }
    fn search(candidates: u32, size: usize, best: &mut usize, compatible: &[u32]) {
        if size + (candidates.count_ones() as usize) <= *best {
            return;
        }
        if candidates == 0 {
            *best = (*best).max(size);
            return;
        }
        let mut c = candidates;
        while c != 0 {
            let k = c.trailing_zeros() as usize;
            c &= c - 1;
            search(c & compatible[k], size + 1, best, compatible);
        }
        *best = (*best).max(size);
    }
    let mut best = 0usize;
    let all = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    search(all, 0, &mut best, &compatible);
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dict::{build_index_set_interval, vaguelettes_integration};
    use crate::rng::{standard_normal, stream_rng};
    use crate::sampling::{make_uniform_grid, Grid};
    use crate::wavelets::daubechies_cascade;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn unit_vectors(n: usize, count: usize) -> Vec<SampledFunction> {
        // √n·e_k are orthonormal under ⟨·,·⟩_n on a unit-volume grid.
        let g = make_uniform_grid(0.0, 1.0, n).unwrap();
        (0..count)
            .map(|k| {
                let mut v = vec![0.0; n];
                v[k] = (n as f64).sqrt();
                SampledFunction::real(g.clone(), v).unwrap()
            })
            .collect()
    }

    fn random_vectors(grid: &Arc<Grid>, count: usize, seed: u64) -> Vec<SampledFunction> {
        let mut rng = stream_rng(seed, 0);
        (0..count)
            .map(|_| {
                let v: Vec<f64> = (0..grid.n()).map(|_| standard_normal(&mut rng)).collect();
                SampledFunction::real(grid.clone(), v).unwrap()
            })
            .collect()
    }

    #[test]
    fn orthonormal_system_gives_identity() {
        let vs = unit_vectors(16, 5);
        let g = gram_from_vectors(&vs, GramVariant::Xi, vec![]).unwrap();
        for k in 0..5 {
            for k2 in 0..5 {
                let want = if k == k2 { 1.0 } else { 0.0 };
                assert_relative_eq!(g.entry_c(k, k2).re, want, epsilon = 1e-14);
            }
        }
        assert_relative_eq!(g.frobenius(), 5f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(g.frobenius_inverse().unwrap(), 5f64.sqrt(), max_relative = 1e-10);
        let (lo, hi) = g.riesz_bounds();
        assert_relative_eq!(lo, 1.0, max_relative = 1e-10);
        assert_relative_eq!(hi, 1.0, max_relative = 1e-10);
    }

    #[test]
    fn single_vector_gram() {
        let g = make_uniform_grid(0.0, 1.0, 8).unwrap();
        let v = SampledFunction::real(g, vec![2.0; 8]).unwrap();
        let m = gram_from_vectors(std::slice::from_ref(&v), GramVariant::LambdaTilde, vec![])
            .unwrap();
        assert_eq!(m.n(), 1);
        assert_relative_eq!(m.entry_c(0, 0).re, 4.0, max_relative = 1e-14);
    }

    #[test]
    fn entries_match_double_loop_oracle() {
        let grid = make_uniform_grid(0.0, 2.0, 32).unwrap();
        let vs = random_vectors(&grid, 6, 11);
        let g = gram_from_vectors(&vs, GramVariant::Xi, vec![]).unwrap();
        let w = grid.weight();
        for k in 0..6 {
            for k2 in 0..6 {
                let direct: f64 = (0..32)
                    .map(|i| vs[k].values_real().unwrap()[i] * vs[k2].values_real().unwrap()[i])
                    .sum::<f64>()
                    * w;
                assert_relative_eq!(g.entry_c(k, k2).re, direct, max_relative = 1e-12);
            }
        }
        assert_eq!(g.hermitian_defect(), 0.0);
    }

    #[test]
    fn frobenius_matches_spectral_identity() {
        let grid = make_uniform_grid(0.0, 1.0, 64).unwrap();
        let vs = random_vectors(&grid, 8, 13);
        let g = gram_from_vectors(&vs, GramVariant::XiTilde, vec![]).unwrap();
        let by_entries = g.frobenius();
        let by_eigs: f64 = g.eigenvalues().iter().map(|e| e * e).sum::<f64>().sqrt();
        assert_relative_eq!(by_entries, by_eigs, max_relative = 1e-10);
    }

    #[test]
    fn frobenius_inverse_oracles() {
        // diag(2,…,2): scaled orthonormal vectors.
        let vs: Vec<SampledFunction> = unit_vectors(16, 4)
            .into_iter()
            .map(|v| v.scale(2f64.sqrt()))
            .collect();
        let g = gram_from_vectors(&vs, GramVariant::Xi, vec![]).unwrap();
        assert_relative_eq!(g.frobenius_inverse().unwrap(), 2.0 / 2.0, max_relative = 1e-10);

        // Random SPD: explicit inverse oracle.
        let grid = make_uniform_grid(0.0, 1.0, 64).unwrap();
        let vs = random_vectors(&grid, 8, 17);
        let g = gram_from_vectors(&vs, GramVariant::Xi, vec![]).unwrap();
        let inv = g
            .real_matrix()
            .unwrap()
            .clone()
            .try_inverse()
            .expect("generic random Gram is invertible");
        let oracle = inv.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert_relative_eq!(g.frobenius_inverse().unwrap(), oracle, max_relative = 1e-8);

        // Cauchy–Schwarz on spectra: ‖G‖_F · ‖G⁻¹‖_F ≥ N.
        assert!(g.frobenius() * g.frobenius_inverse().unwrap() >= 8.0 * (1.0 - 1e-12));
    }

    #[test]
    fn rank_deficient_matrix_is_rejected() {
        let grid = make_uniform_grid(0.0, 1.0, 32).unwrap();
        let mut vs = random_vectors(&grid, 3, 19);
        vs.push(vs[0].clone());
        let g = gram_from_vectors(&vs, GramVariant::XiTilde, vec![]).unwrap();
        match g.frobenius_inverse() {
            Err(Error::NotPositiveDefinite { name, .. }) => assert_eq!(name, "XiTilde"),
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }

    #[test]
    fn riesz_bounds_match_rayleigh_search() {
        let grid = make_uniform_grid(0.0, 1.0, 48).unwrap();
        let vs = random_vectors(&grid, 6, 23);
        let g = gram_from_vectors(&vs, GramVariant::Xi, vec![]).unwrap();
        let (lo, hi) = g.riesz_bounds();
        let m = g.real_matrix().unwrap();
        let mut rng = stream_rng(29, 0);
        let mut best_hi = f64::NEG_INFINITY;
        let mut best_lo = f64::INFINITY;
        for _ in 0..20_000 {
            let a = nalgebra::DVector::from_iterator(6, (0..6).map(|_| standard_normal(&mut rng)));
            let q = (a.transpose() * m * &a)[(0, 0)] / a.norm_squared();
            best_hi = best_hi.max(q);
            best_lo = best_lo.min(q);
        }
        // Random Rayleigh quotients approach the extremes from inside.
        assert!(best_hi <= hi + 1e-8 && best_hi >= 0.80 * hi);
        assert!(best_lo >= lo - 1e-8 && best_lo <= best_hi);
    }

    #[test]
    fn greedy_subset_trivial_cases() {
        // Pairwise orthogonal → the full set survives.
        let vs = unit_vectors(16, 6);
        let (subset, size) = greedy_negative_corr_subset(&vs).unwrap();
        assert_eq!(size, 6);
        assert_eq!(subset, vec![0, 1, 2, 3, 4, 5]);

        // Identical images → singleton.
        let grid = make_uniform_grid(0.0, 1.0, 16).unwrap();
        let v = random_vectors(&grid, 1, 31).pop().unwrap();
        let copies = vec![v.clone(), v.clone(), v.clone(), v];
        let (subset, size) = greedy_negative_corr_subset(&copies).unwrap();
        assert_eq!(size, 1);
        assert_eq!(subset, vec![0]);
    }

    #[test]
    fn greedy_subset_is_valid_and_below_exact_maximum() {
        let grid = make_uniform_grid(0.0, 1.0, 12).unwrap();
        for seed in [37, 41, 43] {
            let vs = random_vectors(&grid, 10, seed);
            let (subset, size) = greedy_negative_corr_subset(&vs).unwrap();
            // Pairwise sign condition holds exactly (and the generic random
            // correlations are far from the zero tolerance, so this is the
            // strict ≤ 0 check).
            for (i, &a) in subset.iter().enumerate() {
                for &b in subset.iter().skip(i + 1) {
                    let ip = inner_product_n(&vs[a], &vs[b]).unwrap().re;
                    let na = vs[a].norm_n();
                    let nb = vs[b].norm_n();
                    assert!(
                        ip / (na * nb) <= CORR_ZERO_TOL,
                        "pair ({a}, {b}) correlates: {ip}"
                    );
                }
            }
            let exact = max_negative_corr_subset_exact(&vs).unwrap();
            assert!(size <= exact, "greedy {size} exceeds exact {exact}");
            assert!(size >= 1);
        }
    }

    #[test]
    fn coherence_trivial_cases() {
        let vs = unit_vectors(16, 6);
        let rep = coherence(&vs).unwrap();
        assert_eq!(rep.m_sigma, 1);
        assert_eq!(rep.n_star_lower, 6);
        assert!(rep.max_offdiag_corr.abs() <= 1e-12);
        assert_relative_eq!(rep.min_selfcorr, 1.0, max_relative = 1e-12);

        let grid = make_uniform_grid(0.0, 1.0, 16).unwrap();
        let v = random_vectors(&grid, 1, 47).pop().unwrap();
        let copies = vec![v.clone(), v.clone(), v];
        let rep = coherence(&copies).unwrap();
        assert_eq!(rep.m_sigma, 3);
        assert_eq!(rep.n_star_lower, 1);
        assert_relative_eq!(rep.max_offdiag_corr, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn integration_images_have_support_bounded_coherence() {
        // Positive-correlation counts for the cumulative-integration images
        // stay below the wavelet support length.
        let db6 = daubechies_cascade(12, 12).unwrap();
        let grid = make_uniform_grid(0.0, 1.0, 1 << 15).unwrap();
        let set = build_index_set_interval(&db6, 6).unwrap();
        let sys = vaguelettes_integration(&db6, &set, &grid).unwrap();
        let rep = coherence(sys.images()).unwrap();
        assert!(
            rep.m_sigma <= db6.support_length(),
            "M_sigma = {} exceeds L = {}",
            rep.m_sigma,
            db6.support_length()
        );
        assert!(rep.m_sigma >= 1);
        assert!(rep.n_star_lower >= sys.n() / rep.m_sigma);
        assert!(rep.min_selfcorr > 0.0);
    }

    #[test]
    fn integration_xi_frobenius_scales_like_sqrt_n() {
        let db6 = daubechies_cascade(12, 12).unwrap();
        let grid = make_uniform_grid(0.0, 1.0, 1 << 15).unwrap();
        let set = build_index_set_interval(&db6, 6).unwrap();
        let sys = vaguelettes_integration(&db6, &set, &grid).unwrap();
        let xi = gram(&sys, GramVariant::Xi).unwrap();
        let nf = xi.n() as f64;
        let ratio = xi.frobenius() / nf.sqrt();
        let (lo, hi) = xi.riesz_bounds();
        let support = xi.max_row_support() as f64;
        assert!(
            ratio >= lo * 0.9 && ratio <= hi * 1.1 * support.sqrt(),
            "ratio {ratio} outside [{}, {}]",
            lo * 0.9,
            hi * 1.1 * support.sqrt()
        );
        // Diagonal lower bound for the Frobenius norm.
        let diag_bound: f64 = (0..xi.n())
            .map(|k| xi.diagonal(k).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(xi.frobenius() >= diag_bound * (1.0 - 1e-12));
    }

    #[test]
    fn complex_system_gram_is_hermitian() {
        let grid = make_uniform_grid(0.0, 1.0, 24).unwrap();
        let mut rng = stream_rng(53, 1);
        let vs: Vec<SampledFunction> = (0..4)
            .map(|_| {
                let v: Vec<num_complex::Complex64> = (0..24)
                    .map(|_| crate::rng::complex_normal_var2(&mut rng))
                    .collect();
                SampledFunction::complex(grid.clone(), v).unwrap()
            })
            .collect();
        let g = gram_from_vectors(&vs, GramVariant::Xi, vec![]).unwrap();
        assert_eq!(g.hermitian_defect(), 0.0);
        assert!(g.eigenvalues().iter().all(|e| e.is_finite()));
        let by_eigs: f64 = g.eigenvalues().iter().map(|e| e * e).sum::<f64>().sqrt();
        assert_relative_eq!(g.frobenius(), by_eigs, max_relative = 1e-10);
    }
}
