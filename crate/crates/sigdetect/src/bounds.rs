//! Closed-form detection boundaries and separation rates: the direct-regime
//! boundary (asymptotic and non-asymptotic forms built on the sup-test
//! threshold) and the indirect-regime upper/lower bounds driven by Frobenius
//! norms of the vaguelette Gram matrices.

use crate::error::{Error, Result};
use crate::detect::sup_threshold;
use crate::sampling::ScalarField;
use std::io::Write;

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "noise level sigma must be positive and finite, got {sigma}"
        )));
    }
    Ok(())
}

/// Quantile of the standard Gaussian distribution via the Wichura PPND16
/// rational approximation (absolute error well below 1e−8, asserted against
/// a high-precision oracle table in the tests).
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p.is_finite() && 0.0 < p && p < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "Gaussian quantile needs p in (0, 1), got {p}"
        )));
    }
    const A: [f64; 8] = [
        3.387_132_872_796_366_608e0,
        1.331_416_678_917_843_774_5e2,
        1.971_590_950_306_551_442_7e3,
        1.373_169_376_550_946_112_5e4,
        4.592_195_393_154_987_145_7e4,
        6.726_577_092_700_870_085_3e4,
        3.343_057_558_358_812_810_5e4,
        2.509_080_928_730_122_672_7e3,
    ];
    const B: [f64; 8] = [
        1.0,
        4.231_333_070_160_091_125_2e1,
        6.871_870_074_920_579_083e2,
        5.394_196_021_424_751_107_7e3,
        2.121_379_430_158_659_586_7e4,
        3.930_789_580_009_271_061e4,
        2.872_908_573_572_194_267_4e4,
        5.226_495_278_852_854_561e3,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_577_34e0,
        4.630_337_846_156_545_295_9e0,
        5.769_497_221_460_691_405_5e0,
        3.647_848_324_763_204_605_04e0,
        1.270_458_252_452_368_382_58e0,
        2.417_807_251_774_506_117_7e-1,
        2.272_384_498_926_918_458_33e-2,
        7.745_450_142_783_414_076_4e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_758_821_87e0,
        1.676_384_830_183_803_849_4e0,
        6.897_673_349_851_000_045_5e-1,
        1.481_039_764_274_800_745_9e-1,
        1.519_866_656_361_645_719_66e-2,
        5.475_938_084_995_344_946e-4,
        1.050_750_071_644_416_843_24e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103_777_2e0,
        5.463_784_911_164_114_369_9e0,
        1.784_826_539_917_291_335_8e0,
        2.965_605_718_285_048_912_3e-1,
        2.653_218_952_657_612_309_3e-2,
        1.242_660_947_388_078_438_6e-3,
        2.711_555_568_743_487_578_15e-5,
        2.010_334_399_292_288_132_65e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        5.998_322_065_558_879_376_9e-1,
        1.369_298_809_227_358_053_1e-1,
        1.487_536_129_085_061_485_25e-2,
        7.868_691_311_456_132_591e-4,
        1.846_318_317_510_054_681_8e-5,
        1.421_511_758_316_445_888_7e-7,
        2.044_263_103_389_939_785_64e-15,
    ];
    fn horner(coeffs: &[f64; 8], r: f64) -> f64 {
        coeffs.iter().rev().fold(0.0, |acc, &c| acc * r + c)
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return Ok(q * horner(&A, r) / horner(&B, r));
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-r.ln()).sqrt();
    let z = if r <= 5.0 {
        r -= 1.6;
        horner(&C, r) / horner(&D, r)
    } else {
        r -= 5.0;
        horner(&E, r) / horner(&F, r)
    };
    Ok(if q < 0.0 { -z } else { z })
}

/// Leading-order detection boundary in the direct regime: `√(2σ² log N)`.
pub fn boundary_case1_asymptotic(sigma: f64, n: f64) -> Result<f64> {
    check_sigma(sigma)?;
    if !(n.is_finite() && n >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "dictionary size must be at least 1, got {n}"
        )));
    }
    Ok(sigma * (2.0 * n.ln()).sqrt())
}

/// Non-asymptotic direct-regime boundary `σ · (c_{α} + z_{1−α})`: signal
/// energies at or above it drive the sup test's worst type-II error to `α`.
pub fn boundary_case1_nonasymptotic(
    sigma: f64,
    n: usize,
    alpha: f64,
    field: ScalarField,
) -> Result<f64> {
    check_sigma(sigma)?;
    let c = sup_threshold(n, alpha, field)?;
    let z = normal_quantile(1.0 - alpha)?;
    Ok(sigma * (c + z))
}

/// The indirect-regime constant
/// `d_α(δ) = √(log 1/(δ−α)) + (log 1/(α(δ−α)) + √(2 log 1/(δ−α)) + √(2 log 1/α))^{1/2}`,
/// defined for total error targets `δ ∈ (α, 1)`.
pub fn d_alpha_delta(alpha: f64, delta: f64) -> Result<f64> {
    if !(alpha.is_finite() && delta.is_finite() && 0.0 < alpha && alpha < delta && delta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < alpha < delta < 1, got alpha = {alpha}, delta = {delta}"
        )));
    }
    let gap_log = -(delta - alpha).ln();
    let alpha_log = -alpha.ln();
    let inner = (gap_log + alpha_log) + (2.0 * gap_log).sqrt() + (2.0 * alpha_log).sqrt();
    Ok(gap_log.sqrt() + inner.sqrt())
}

/// Indirect-regime upper bound: total error of the χ² test is at most `δ`
/// once the signal energy reaches `ε · d_α(δ) · σ · √‖Ξ‖_F` (field factor
/// `ε = 1` real, `√2` complex).
pub fn upper_bound_case2(
    sigma: f64,
    frob_xi: f64,
    alpha: f64,
    delta: f64,
    field: ScalarField,
) -> Result<f64> {
    check_sigma(sigma)?;
    if !(frob_xi.is_finite() && frob_xi > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "Frobenius norm must be positive, got {frob_xi}"
        )));
    }
    let d = d_alpha_delta(alpha, delta)?;
    Ok(field.epsilon() * (sigma * (d * frob_xi.sqrt())))
}

/// The indirect-regime lower-bound constant `c(δ) = (log(1+(2−2δ)²))^{1/4}`
/// for total error targets `δ ∈ (0, 1]` (`c(1) = 0`: no separation is needed
/// to "achieve" total error 1).
pub fn c_delta(delta: f64) -> Result<f64> {
    if !(delta.is_finite() && 0.0 < delta && delta <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "total error target must lie in (0, 1], got {delta}"
        )));
    }
    let t = 2.0 - 2.0 * delta;
    Ok((t * t).ln_1p().powf(0.25))
}

/// Indirect-regime lower bound: below `c(δ) · σ · √‖Ξ̃^{−1}‖_F` every test
/// has total error at least `δ`.
pub fn lower_bound_case2(sigma: f64, frob_xitilde_inv: f64, delta: f64) -> Result<f64> {
    check_sigma(sigma)?;
    if !(frob_xitilde_inv.is_finite() && frob_xitilde_inv > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "Frobenius norm must be positive, got {frob_xitilde_inv}"
        )));
    }
    let c = c_delta(delta)?;
    Ok(sigma * (c * frob_xitilde_inv.sqrt()))
}

/// Indirect-regime separation rate `σ · N^{1/4}` (the order of both bounds
/// when the Gram spectra are bounded above and below).
pub fn separation_rate_case2(sigma: f64, n: f64) -> Result<f64> {
    check_sigma(sigma)?;
    if !(n.is_finite() && n >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "dictionary size must be at least 1, got {n}"
        )));
    }
    Ok(sigma * n.powf(0.25))
}

/// Write a CSV table of every closed-form bound over the grid of `(N, α, δ)`
/// triples (rows with `δ ≤ α`, where the indirect constants are undefined,
/// are skipped). Columns: `n, alpha, delta, boundary_asymptotic,
/// boundary_nonasymptotic_real, boundary_nonasymptotic_complex,
/// d_alpha_delta, c_delta, separation_rate`.
pub fn write_bound_table_csv<W: Write>(
    out: W,
    sigma: f64,
    ns: &[usize],
    alphas: &[f64],
    deltas: &[f64],
) -> Result<()> {
    check_sigma(sigma)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "n",
        "alpha",
        "delta",
        "boundary_asymptotic",
        "boundary_nonasymptotic_real",
        "boundary_nonasymptotic_complex",
        "d_alpha_delta",
        "c_delta",
        "separation_rate",
    ])
    .map_err(|e| Error::InvalidArgument(format!("csv write failed: {e}")))?;
    for &n in ns {
        for &alpha in alphas {
            for &delta in deltas {
                if delta <= alpha {
                    continue;
                }
                let record = [
                    n.to_string(),
                    alpha.to_string(),
                    delta.to_string(),
                    boundary_case1_asymptotic(sigma, n as f64)?.to_string(),
                    boundary_case1_nonasymptotic(sigma, n, alpha, ScalarField::Real)?.to_string(),
                    boundary_case1_nonasymptotic(sigma, n, alpha, ScalarField::Complex)?
                        .to_string(),
                    d_alpha_delta(alpha, delta)?.to_string(),
                    c_delta(delta)?.to_string(),
                    separation_rate_case2(sigma, n as f64)?.to_string(),
                ];
                w.write_record(&record)
                    .map_err(|e| Error::InvalidArgument(format!("csv write failed: {e}")))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::SQRT_2;

    /// High-precision Gaussian quantile oracle table.
    const QUANTILE_ORACLE: [(f64, f64); 11] = [
        (0.95, 1.644_853_626_951_472_714_9),
        (0.975, 1.959_963_984_540_054_235_5),
        (0.99, 2.326_347_874_040_841_100_9),
        (0.999, 3.090_232_306_167_813_541_5),
        (0.8, 0.841_621_233_572_914_205_18),
        (0.6, 0.253_347_103_135_799_798_8),
        (0.5, 0.0),
        (0.25, -0.674_489_750_196_081_743_2),
        (1e-3, -3.090_232_306_167_813_541_5),
        (1e-6, -4.753_424_308_822_898_948_2),
        (0.999_999_9, 5.199_337_582_192_816_931_6),
    ];

    #[test]
    fn normal_quantile_matches_oracle_table() {
        for (p, z) in QUANTILE_ORACLE {
            let got = normal_quantile(p).unwrap();
            assert!(
                (got - z).abs() < 1e-8,
                "quantile({p}) = {got}, oracle {z}"
            );
        }
    }

    #[test]
    fn normal_quantile_symmetry_and_monotonicity() {
        let grid: Vec<f64> = (1..100).map(|i| i as f64 / 100.0).collect();
        let mut previous = f64::NEG_INFINITY;
        for &p in &grid {
            let z = normal_quantile(p).unwrap();
            let z_mirror = normal_quantile(1.0 - p).unwrap();
            assert!((z + z_mirror).abs() < 1e-12, "asymmetry at p = {p}");
            assert!(z > previous, "not increasing at p = {p}");
            previous = z;
        }
        for p in [0.0, 1.0, -0.5, 2.0, f64::NAN] {
            assert!(normal_quantile(p).is_err());
        }
    }

    #[test]
    fn asymptotic_boundary_values() {
        assert_eq!(boundary_case1_asymptotic(1.0, 1.0).unwrap(), 0.0);
        assert_relative_eq!(
            boundary_case1_asymptotic(1.0, std::f64::consts::E).unwrap(),
            SQRT_2,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            boundary_case1_asymptotic(1.0, 54.0).unwrap(),
            2.824_529_711_850_903_643_7,
            max_relative = 1e-14
        );
        assert!(boundary_case1_asymptotic(0.0, 4.0).is_err());
        assert!(boundary_case1_asymptotic(1.0, 0.5).is_err());
    }

    #[test]
    fn nonasymptotic_boundary_values() {
        // At alpha = 0.5 the Gaussian quantile vanishes and the bound is
        // σ times the sup threshold.
        let sigma = 1.3;
        let direct = boundary_case1_nonasymptotic(sigma, 16, 0.5, ScalarField::Real).unwrap();
        let threshold = sup_threshold(16, 0.5, ScalarField::Real).unwrap();
        assert_relative_eq!(direct, sigma * threshold, max_relative = 1e-12);

        assert_relative_eq!(
            boundary_case1_nonasymptotic(1.0, 64, 0.05, ScalarField::Real).unwrap(),
            5.427_608_008_857_245_578_7,
            max_relative = 1e-9
        );

        // Doubling σ doubles the bound exactly.
        let one = boundary_case1_nonasymptotic(1.0, 64, 0.05, ScalarField::Complex).unwrap();
        let two = boundary_case1_nonasymptotic(2.0, 64, 0.05, ScalarField::Complex).unwrap();
        assert_eq!(two, 2.0 * one);
    }

    #[test]
    fn d_constant_values_and_monotonicity() {
        assert_relative_eq!(
            d_alpha_delta(0.05, 0.10).unwrap(),
            5.030_357_472_910_144_545_8,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            d_alpha_delta(0.01, 0.05).unwrap(),
            5.454_200_821_964_525_692_2,
            max_relative = 1e-13
        );
        // Blow-up as delta approaches alpha from above.
        let alpha = 0.05;
        assert!(
            d_alpha_delta(alpha, alpha + 1e-6).unwrap() > d_alpha_delta(alpha, alpha + 1e-3).unwrap()
        );
        // Decreasing in delta over a grid.
        let mut previous = f64::INFINITY;
        for i in 1..18 {
            let delta = alpha + 0.05 * i as f64;
            let d = d_alpha_delta(alpha, delta).unwrap();
            assert!(d < previous, "d not decreasing at delta = {delta}");
            previous = d;
        }
        assert!(d_alpha_delta(0.1, 0.1).is_err());
        assert!(d_alpha_delta(0.2, 0.1).is_err());
        assert!(d_alpha_delta(0.05, 1.0).is_err());
    }

    #[test]
    fn upper_bound_compositions() {
        // Complex and real differ by exactly √2.
        let real = upper_bound_case2(1.7, 3.0, 0.05, 0.10, ScalarField::Real).unwrap();
        let complex = upper_bound_case2(1.7, 3.0, 0.05, 0.10, ScalarField::Complex).unwrap();
        assert_eq!(complex, SQRT_2 * real);

        // Identity Gram (‖Ξ‖_F = √N): the bound is d·N^{1/4} at σ = 1.
        for n in [4.0f64, 16.0, 256.0, 2028.0] {
            let bound = upper_bound_case2(1.0, n.sqrt(), 0.05, 0.10, ScalarField::Real).unwrap();
            assert_relative_eq!(
                bound,
                5.030_357_472_910_144_545_8 * n.powf(0.25),
                max_relative = 1e-12
            );
        }
        assert!(upper_bound_case2(1.0, 0.0, 0.05, 0.10, ScalarField::Real).is_err());

        // Small Frobenius norm drives the bound to zero.
        let tiny = upper_bound_case2(1.0, 1e-300, 0.05, 0.10, ScalarField::Real).unwrap();
        assert!(tiny < 1e-140);
    }

    #[test]
    fn lower_bound_constant_and_compositions() {
        assert_eq!(c_delta(1.0).unwrap(), 0.0);
        assert_relative_eq!(
            c_delta(0.5).unwrap(),
            0.912_444_305_784_028_528_04,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            c_delta(0.25).unwrap(),
            1.041_949_511_488_257_280_3,
            max_relative = 1e-13
        );
        let mut previous = f64::INFINITY;
        for i in 1..20 {
            let delta = i as f64 / 20.0;
            let c = c_delta(delta).unwrap();
            assert!(c < previous, "c not decreasing at delta = {delta}");
            previous = c;
        }
        assert!(c_delta(0.0).is_err());
        assert!(c_delta(1.2).is_err());

        // Identity dual Gram at N = 16: ‖I^{−1}‖_F = 4.
        assert_relative_eq!(
            lower_bound_case2(1.0, 4.0, 0.5).unwrap(),
            1.824_888_611_568_057_056_1,
            max_relative = 1e-13
        );
        assert_eq!(lower_bound_case2(2.5, 4.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn separation_rate_and_upper_bound_share_the_same_order() {
        assert_eq!(separation_rate_case2(3.0, 1.0).unwrap(), 3.0);
        assert_relative_eq!(separation_rate_case2(1.5, 16.0).unwrap(), 3.0, max_relative = 1e-14);
        // With an identity Gram the upper bound is a constant multiple of the
        // rate, the constant being ε·d_α(δ).
        let d = d_alpha_delta(0.05, 0.10).unwrap();
        for n in [1.0f64, 4.0, 64.0, 1024.0] {
            let upper = upper_bound_case2(0.7, n.sqrt(), 0.05, 0.10, ScalarField::Real).unwrap();
            let rate = separation_rate_case2(0.7, n).unwrap();
            assert_relative_eq!(upper / rate, d, max_relative = 1e-12);
        }
    }

    #[test]
    fn lower_bounds_stay_below_upper_bounds() {
        // The paper regime: level 0.05 and total error 0.10 on the upper
        // side, total error 0.95 on the lower side. For comparable Frobenius
        // norms the lower bound must sit strictly below the upper bound.
        for n in [4.0f64, 16.0, 54.0, 2028.0] {
            for sigma in [0.1, 1.0, 10.0] {
                let lower = lower_bound_case2(sigma, n.sqrt(), 0.95).unwrap();
                let upper =
                    upper_bound_case2(sigma, n.sqrt(), 0.05, 0.10, ScalarField::Real).unwrap();
                assert!(
                    lower < upper,
                    "lower {lower} ≥ upper {upper} at N = {n}, sigma = {sigma}"
                );
            }
        }
    }

    #[test]
    fn all_bounds_scale_linearly_in_sigma() {
        // Power-of-two scalings are exact in floating point.
        for scale in [0.5f64, 2.0, 8.0] {
            assert_eq!(
                boundary_case1_asymptotic(scale, 54.0).unwrap(),
                scale * boundary_case1_asymptotic(1.0, 54.0).unwrap()
            );
            assert_eq!(
                boundary_case1_nonasymptotic(scale, 64, 0.05, ScalarField::Real).unwrap(),
                scale * boundary_case1_nonasymptotic(1.0, 64, 0.05, ScalarField::Real).unwrap()
            );
            assert_eq!(
                upper_bound_case2(scale, 3.0, 0.05, 0.10, ScalarField::Complex).unwrap(),
                scale * upper_bound_case2(1.0, 3.0, 0.05, 0.10, ScalarField::Complex).unwrap()
            );
            assert_eq!(
                lower_bound_case2(scale, 4.0, 0.5).unwrap(),
                scale * lower_bound_case2(1.0, 4.0, 0.5).unwrap()
            );
            assert_eq!(
                separation_rate_case2(scale, 16.0).unwrap(),
                scale * separation_rate_case2(1.0, 16.0).unwrap()
            );
        }
        // Arbitrary positive scalings hold to rounding error.
        let c = 1.37;
        assert_relative_eq!(
            upper_bound_case2(c, 3.0, 0.05, 0.10, ScalarField::Real).unwrap(),
            c * upper_bound_case2(1.0, 3.0, 0.05, 0.10, ScalarField::Real).unwrap(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn nonasymptotic_dominates_asymptotic_in_the_conservative_regime() {
        // For alpha ≤ 1/e and N ≥ 3 the non-asymptotic boundary lies at or
        // above σ√(2 log N) for both fields.
        let inv_e = (-1.0f64).exp();
        for n in [3usize, 8, 54, 64, 1024] {
            for alpha in [1e-4, 0.01, 0.05, 0.1, 0.25, inv_e] {
                for field in [ScalarField::Real, ScalarField::Complex] {
                    let na = boundary_case1_nonasymptotic(1.0, n, alpha, field).unwrap();
                    let asym = boundary_case1_asymptotic(1.0, n as f64).unwrap();
                    assert!(
                        na >= asym,
                        "nonasymptotic {na} < asymptotic {asym} at N = {n}, alpha = {alpha}, {field:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn bound_table_csv_round_trips() {
        let mut buffer = Vec::new();
        write_bound_table_csv(
            &mut buffer,
            1.0,
            &[16, 64],
            &[0.05, 0.2],
            &[0.10, 0.5, 0.01],
        )
        .unwrap();
        let mut reader = csv::Reader::from_reader(buffer.as_slice());
        let headers = reader.headers().unwrap().clone();
        assert_eq!(&headers[0], "n");
        assert_eq!(&headers[6], "d_alpha_delta");
        let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
        // delta = 0.01 is dropped everywhere; delta = 0.10 is dropped for
        // alpha = 0.2: 2 N values × 3 surviving (alpha, delta) pairs.
        assert_eq!(rows.len(), 6);
        let first = &rows[0];
        assert_eq!(&first[0], "16");
        let d: f64 = first[6].parse().unwrap();
        assert_relative_eq!(d, 5.030_357_472_910_144_545_8, max_relative = 1e-12);
    }
}
