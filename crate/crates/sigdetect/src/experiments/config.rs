//! Experiment configuration: a TOML file with `[experiment]`, `[operator]`,
//! and `[dictionary]` sections. Unknown keys are hard errors; every value is
//! validated before an experiment starts, and a SHA-256 digest of the
//! validated configuration travels with every output for provenance.

use crate::detect::{DEFAULT_QUANTILE_DRAWS, MIN_QUANTILE_DRAWS};
use crate::error::{Error, Result};
use crate::operators::OperatorKind;
use crate::sampling::ScalarField;
use sha2::{Digest, Sha256};

/// Which test family a study runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestKind {
    Sup,
    Chi2,
}

/// How alternatives are drawn at a given signal size `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlternativeSampler {
    /// Cycle through the single-anomaly alternatives `f = δ·u_k/‖Au_k‖_n`.
    PerAnomalyMean,
    /// Uniform draws from the sphere `Σ_k |λ_k c_k|² = δ²` in coefficient
    /// space, synthesized as `f = Σ_k c_k u_k`.
    UniformSphere,
}

fn default_field() -> ScalarField {
    ScalarField::Real
}

fn default_quantile_draws() -> u64 {
    DEFAULT_QUANTILE_DRAWS
}

/// `[experiment]` section: test, noise level, level, δ grid, and seeding.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub test: TestKind,
    pub sigma: f64,
    pub alpha: f64,
    pub delta_grid: Vec<f64>,
    pub replications: u64,
    pub alternative: AlternativeSampler,
    pub seed: u64,
    #[serde(default = "default_field")]
    pub field: ScalarField,
    /// Monte-Carlo size for the χ² null quantile (χ² test only).
    #[serde(default = "default_quantile_draws")]
    pub quantile_draws: u64,
}

/// `[operator]` section: the forward operator kind plus its grid and kernel
/// parameters. Fields irrelevant to the chosen kind must be absent.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSection {
    pub kind: OperatorKind,
    /// 1-D sample count (integration and periodic convolution).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Convolution kernel coefficient model `h_m = C·|m|^{−a}`: the constant.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay_c: Option<f64>,
    /// Convolution kernel decay exponent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay_a: Option<f64>,
    /// Image side length in pixels (Radon).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub npix: Option<usize>,
    /// Sinogram offset-sample count (Radon).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_count: Option<usize>,
    /// Sinogram angle count over [0, π) (Radon).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_count: Option<usize>,
}

/// `[dictionary]` section: wavelet family and scale.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DictionarySection {
    /// Daubechies family name: `db1` (Haar) through `db10`.
    pub family: String,
    pub j: i32,
}

/// A fully validated experiment description.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub operator: OperatorSection,
    pub dictionary: DictionarySection,
}

impl ExperimentConfig {
    /// Parse and validate a TOML document. Parse errors keep the line/column
    /// anchor that the TOML parser reports.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read, parse, and validate a TOML config file.
    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.experiment;
        if !(e.sigma.is_finite() && e.sigma > 0.0) {
            return Err(Error::Config(format!(
                "experiment.sigma must be positive and finite, got {}",
                e.sigma
            )));
        }
        if !(e.alpha.is_finite() && 0.0 < e.alpha && e.alpha < 1.0) {
            return Err(Error::Config(format!(
                "experiment.alpha must lie in (0, 1), got {}",
                e.alpha
            )));
        }
        if e.delta_grid.is_empty() {
            return Err(Error::Config("experiment.delta_grid must not be empty".into()));
        }
        if let Some(bad) = e.delta_grid.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
            return Err(Error::Config(format!(
                "experiment.delta_grid entries must be nonnegative and finite, got {bad}"
            )));
        }
        if e.replications < 1 {
            return Err(Error::Config("experiment.replications must be at least 1".into()));
        }
        if e.test == TestKind::Chi2 && e.quantile_draws < MIN_QUANTILE_DRAWS {
            return Err(Error::Config(format!(
                "experiment.quantile_draws must be at least {MIN_QUANTILE_DRAWS}, got {}",
                e.quantile_draws
            )));
        }

        let o = &self.operator;
        let forbid = |name: &str, present: bool| -> Result<()> {
            if present {
                Err(Error::Config(format!(
                    "operator.{name} does not apply to operator kind {:?}",
                    o.kind
                )))
            } else {
                Ok(())
            }
        };
        match o.kind {
            OperatorKind::Integration => {
                let n = o.n.ok_or_else(|| {
                    Error::Config("operator.n is required for integration".into())
                })?;
                if n < 2 {
                    return Err(Error::Config(format!("operator.n must be at least 2, got {n}")));
                }
                forbid("decay_c", o.decay_c.is_some())?;
                forbid("decay_a", o.decay_a.is_some())?;
                forbid("npix", o.npix.is_some())?;
                forbid("t_count", o.t_count.is_some())?;
                forbid("theta_count", o.theta_count.is_some())?;
            }
            OperatorKind::PeriodicConvolution => {
                let n = o.n.ok_or_else(|| {
                    Error::Config("operator.n is required for periodic_convolution".into())
                })?;
                if n < 2 {
                    return Err(Error::Config(format!("operator.n must be at least 2, got {n}")));
                }
                let c = o.decay_c.ok_or_else(|| {
                    Error::Config("operator.decay_c is required for periodic_convolution".into())
                })?;
                if !(c.is_finite() && c > 0.0) {
                    return Err(Error::Config(format!(
                        "operator.decay_c must be positive, got {c}"
                    )));
                }
                let a = o.decay_a.ok_or_else(|| {
                    Error::Config("operator.decay_a is required for periodic_convolution".into())
                })?;
                if !(a.is_finite() && a >= 0.0) {
                    return Err(Error::Config(format!(
                        "operator.decay_a must be nonnegative, got {a}"
                    )));
                }
                forbid("npix", o.npix.is_some())?;
                forbid("t_count", o.t_count.is_some())?;
                forbid("theta_count", o.theta_count.is_some())?;
            }
            OperatorKind::Radon => {
                let npix = o.npix.ok_or_else(|| {
                    Error::Config("operator.npix is required for radon".into())
                })?;
                if npix < 16 {
                    return Err(Error::Config(format!(
                        "operator.npix must be at least 16, got {npix}"
                    )));
                }
                let t = o.t_count.ok_or_else(|| {
                    Error::Config("operator.t_count is required for radon".into())
                })?;
                if t < 2 {
                    return Err(Error::Config(format!(
                        "operator.t_count must be at least 2, got {t}"
                    )));
                }
                let th = o.theta_count.ok_or_else(|| {
                    Error::Config("operator.theta_count is required for radon".into())
                })?;
                if th < 1 {
                    return Err(Error::Config(format!(
                        "operator.theta_count must be at least 1, got {th}"
                    )));
                }
                forbid("n", o.n.is_some())?;
                forbid("decay_c", o.decay_c.is_some())?;
                forbid("decay_a", o.decay_a.is_some())?;
            }
        }

        parse_family(&self.dictionary.family)?;
        let j = self.dictionary.j;
        let j_min = if o.kind == OperatorKind::Radon { 1 } else { 0 };
        if j < j_min {
            return Err(Error::Config(format!(
                "dictionary.j must be at least {j_min} for {:?}, got {j}",
                o.kind
            )));
        }
        Ok(())
    }

    /// Shrink grids for a quick, lower-fidelity run: the Radon sinogram drops
    /// to 256 offsets × 90 angles. Other operators are unaffected.
    pub fn apply_fast_mode(&mut self) {
        if self.operator.kind == OperatorKind::Radon {
            self.operator.t_count = Some(256);
            self.operator.theta_count = Some(90);
        }
    }

    /// SHA-256 digest (hex) of the canonical JSON form of this config.
    pub fn config_hash(&self) -> String {
        let canonical =
            serde_json::to_vec(self).expect("serializing a validated config cannot fail");
        let digest = Sha256::digest(&canonical);
        let mut hex = String::with_capacity(64);
        for byte in digest {
            hex.push_str(&format!("{byte:02x}"));
        }
        hex
    }
}

/// Parse a Daubechies family name (`db1`..`db10`) into its tap count.
pub fn parse_family(name: &str) -> Result<usize> {
    let rest = name.strip_prefix("db").ok_or_else(|| {
        Error::Config(format!(
            "dictionary.family must be one of db1..db10, got {name:?}"
        ))
    })?;
    let order: usize = rest.parse().map_err(|_| {
        Error::Config(format!(
            "dictionary.family must be one of db1..db10, got {name:?}"
        ))
    })?;
    if !(1..=10).contains(&order) {
        return Err(Error::Config(format!(
            "dictionary.family order must lie in 1..=10, got {order}"
        )));
    }
    Ok(2 * order)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"
[experiment]
test = "sup"
sigma = 1.0
alpha = 0.05
delta_grid = [0.0, 2.0, 4.0]
replications = 100
alternative = "per_anomaly_mean"
seed = 7

[operator]
kind = "integration"
n = 1024

[dictionary]
family = "db6"
j = 4
"#;

    #[test]
    fn parses_and_validates_a_good_config() {
        let cfg = ExperimentConfig::from_toml_str(GOOD).unwrap();
        assert_eq!(cfg.experiment.test, TestKind::Sup);
        assert_eq!(cfg.experiment.field, ScalarField::Real);
        assert_eq!(cfg.experiment.quantile_draws, DEFAULT_QUANTILE_DRAWS);
        assert_eq!(cfg.operator.n, Some(1024));
        assert_eq!(parse_family(&cfg.dictionary.family).unwrap(), 12);
    }

    #[test]
    fn unknown_keys_are_hard_errors_with_line_anchors() {
        let text = GOOD.replace("n = 1024", "n = 1024\nresolution = 9");
        let err = ExperimentConfig::from_toml_str(&text).unwrap_err();
        match &err {
            Error::Config(msg) => {
                assert!(msg.contains("resolution"), "message: {msg}");
                assert!(msg.contains("line"), "no line anchor in: {msg}");
            }
            other => panic!("expected Config error, got {other:?}"),
        }
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn syntax_errors_keep_line_anchors() {
        let err = ExperimentConfig::from_toml_str("[experiment\ntest = \"sup\"").unwrap_err();
        match &err {
            Error::Config(msg) => assert!(msg.contains("line 1"), "message: {msg}"),
            other => panic!("expected Config error, got {other:?}"),
        }
    }

    #[test]
    fn field_validation_catches_bad_values() {
        for (needle, replacement, expect) in [
            ("sigma = 1.0", "sigma = 0.0", "sigma"),
            ("alpha = 0.05", "alpha = 1.5", "alpha"),
            ("replications = 100", "replications = 0", "replications"),
            ("delta_grid = [0.0, 2.0, 4.0]", "delta_grid = []", "delta_grid"),
            ("delta_grid = [0.0, 2.0, 4.0]", "delta_grid = [-1.0]", "delta_grid"),
            ("family = \"db6\"", "family = \"sym4\"", "family"),
            ("j = 4", "j = -1", "dictionary.j"),
        ] {
            let text = GOOD.replace(needle, replacement);
            let err = ExperimentConfig::from_toml_str(&text).unwrap_err();
            match &err {
                Error::Config(msg) => assert!(
                    msg.contains(expect),
                    "expected {expect:?} in message {msg:?} for replacement {replacement:?}"
                ),
                other => panic!("expected Config error, got {other:?}"),
            }
        }
    }

    #[test]
    fn operator_sections_require_their_own_fields() {
        // Missing kernel model for convolution.
        let text = GOOD.replace("kind = \"integration\"", "kind = \"periodic_convolution\"");
        let err = ExperimentConfig::from_toml_str(&text).unwrap_err();
        assert!(matches!(&err, Error::Config(m) if m.contains("decay_c")));

        // Radon field on an integration operator.
        let text = GOOD.replace("n = 1024", "n = 1024\nnpix = 64");
        let err = ExperimentConfig::from_toml_str(&text).unwrap_err();
        assert!(matches!(&err, Error::Config(m) if m.contains("npix")));

        // A valid radon section passes.
        let text = GOOD.replace(
            "kind = \"integration\"\nn = 1024",
            "kind = \"radon\"\nnpix = 64\nt_count = 128\ntheta_count = 45",
        );
        ExperimentConfig::from_toml_str(&text).unwrap();
    }

    #[test]
    fn quantile_draws_floor_applies_to_chi2_only() {
        let sup = GOOD.replace("seed = 7", "seed = 7\nquantile_draws = 10");
        ExperimentConfig::from_toml_str(&sup).unwrap();
        let chi2 = sup.replace("test = \"sup\"", "test = \"chi2\"");
        assert!(ExperimentConfig::from_toml_str(&chi2).is_err());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ExperimentConfig::from_toml_str(GOOD).unwrap();
        let b = ExperimentConfig::from_toml_str(GOOD).unwrap();
        assert_eq!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash().len(), 64);
        let c =
            ExperimentConfig::from_toml_str(&GOOD.replace("seed = 7", "seed = 8")).unwrap();
        assert_ne!(a.config_hash(), c.config_hash());
    }

    #[test]
    fn fast_mode_shrinks_radon_grids_only() {
        let mut cfg = ExperimentConfig::from_toml_str(GOOD).unwrap();
        let before = cfg.clone();
        cfg.apply_fast_mode();
        assert_eq!(cfg, before);

        let text = GOOD.replace(
            "kind = \"integration\"\nn = 1024",
            "kind = \"radon\"\nnpix = 64\nt_count = 1024\ntheta_count = 360",
        );
        let mut cfg = ExperimentConfig::from_toml_str(&text).unwrap();
        cfg.apply_fast_mode();
        assert_eq!(cfg.operator.t_count, Some(256));
        assert_eq!(cfg.operator.theta_count, Some(90));
    }
}
