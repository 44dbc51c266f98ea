//! Declarative experiment configuration (TOML) and its validation.

use serde::{Deserialize, Serialize};

use crate::chan_est::{Estimator, Init, RawMlOptions};
use crate::error::{Error, Result};
use crate::optim::BacktrackingOptions;
use crate::stable_noise::{NoiseKind, StableNoiseSpec};
use crate::system_model::{CoherenceBlock, PilotKind};

/// Blocks per SDR point at full scale.
pub const PAPER_SCALE_BLOCKS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    SerVsSdr,
    DetectorRobustness,
    UplinkRate,
    DownlinkRate,
    MismatchedRate,
    BerUplink,
    BerDownlink,
    DispersionMismatch,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::SerVsSdr,
        ExperimentKind::DetectorRobustness,
        ExperimentKind::UplinkRate,
        ExperimentKind::DownlinkRate,
        ExperimentKind::MismatchedRate,
        ExperimentKind::BerUplink,
        ExperimentKind::BerDownlink,
        ExperimentKind::DispersionMismatch,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::SerVsSdr => "ser_vs_sdr",
            ExperimentKind::DetectorRobustness => "detector_robustness",
            ExperimentKind::UplinkRate => "uplink_rate",
            ExperimentKind::DownlinkRate => "downlink_rate",
            ExperimentKind::MismatchedRate => "mismatched_rate",
            ExperimentKind::BerUplink => "ber_uplink",
            ExperimentKind::BerDownlink => "ber_downlink",
            ExperimentKind::DispersionMismatch => "dispersion_mismatch",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::Config {
                field: "experiment".into(),
                reason: format!(
                    "unknown experiment `{name}`; expected one of {}",
                    Self::ALL.map(|k| k.name()).join(", ")
                ),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    DespreadMl,
    RawMl,
}

/// Noise law of every additive term; always isotropic complex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub alpha: f64,
    pub gamma: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            gamma: 1.0,
        }
    }
}

/// Every knob of one experiment run. Missing keys take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub m: usize,
    pub k: usize,
    pub tau: usize,
    pub t: usize,
    pub sdr_grid_db: Vec<f64>,
    pub noise: NoiseConfig,
    pub pilot_kind: PilotKind,
    pub estimator: EstimatorKind,
    pub init: Init,
    /// Coherence blocks per SDR point (packets for the BER experiments).
    pub n_blocks: usize,
    pub seed: u64,
    /// Dispersion assumed by every likelihood; the true noise keeps `noise.gamma`.
    pub gamma_likelihood_override: Option<f64>,
    /// Received SDRs of the users that are not swept, cycled if `k - 1` is larger.
    pub fixed_powers_db: Vec<f64>,
    /// Data symbols per coherence block; `t - tau` when absent.
    pub symbols_per_block: Option<usize>,
    /// Monte-Carlo trials per SDR point for rate experiments; `n_blocks * 200` when absent.
    pub n_trials: Option<usize>,
    /// Likelihood dispersions compared by `dispersion_mismatch`.
    pub gamma_overrides: Vec<f64>,
    /// Noise exponents compared by `mismatched_rate`.
    pub alphas: Vec<f64>,
    /// Rate at which `mismatched_rate` reports the bound-to-rate gap.
    pub target_rate_bpcu: f64,
    /// BER defining the decoding threshold.
    pub target_ber: f64,
    /// Coherence blocks used to calibrate the channel-error dispersion.
    pub calibration_blocks: usize,
    pub bp_iterations: usize,
    pub raw_ml: RawMlOptions,
    /// Line search of the relaxed detector and the uplink demapper.
    pub detector: BacktrackingOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentKind::SerVsSdr,
            m: 100,
            k: 8,
            tau: 15,
            t: 339,
            sdr_grid_db: vec![-5.0, 0.0, 5.0, 10.0, 15.0],
            noise: NoiseConfig::default(),
            pilot_kind: PilotKind::Dft,
            estimator: EstimatorKind::RawMl,
            init: Init::Zero,
            n_blocks: 100,
            seed: 1,
            gamma_likelihood_override: None,
            fixed_powers_db: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0],
            symbols_per_block: None,
            n_trials: None,
            gamma_overrides: vec![0.5, 1.0, 3.0, 10.0],
            alphas: vec![1.8, 1.6, 1.4, 1.2],
            target_rate_bpcu: 1.5,
            target_ber: 1e-3,
            calibration_blocks: 50,
            bp_iterations: 50,
            raw_ml: RawMlOptions::default(),
            detector: BacktrackingOptions::default(),
        }
    }
}

fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        reason: reason.into(),
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| {
            let field = e
                .span()
                .and_then(|span| text.get(span))
                .map(|s| s.trim().to_string())
                .unwrap_or_else(|| "<file>".into());
            invalid(&field, e.message().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sdr_grid_db.is_empty() {
            return Err(invalid("sdr_grid_db", "grid must not be empty"));
        }
        if let Some(v) = self.sdr_grid_db.iter().find(|v| !v.is_finite()) {
            return Err(invalid("sdr_grid_db", format!("non-finite entry {v}")));
        }
        if self.n_blocks == 0 {
            return Err(invalid("n_blocks", "must be at least 1"));
        }
        if self.m == 0 {
            return Err(invalid("m", "must be at least 1"));
        }
        if self.k == 0 {
            return Err(invalid("k", "must be at least 1"));
        }
        if self.tau == 0 || self.tau >= self.t {
            return Err(invalid("tau", format!("need 0 < tau < t, got tau = {}, t = {}", self.tau, self.t)));
        }
        if self.k > self.tau {
            return Err(invalid("k", format!("{} users need at least as many pilot samples (tau = {})", self.k, self.tau)));
        }
        if self.noise_spec().is_err() {
            return Err(invalid(
                "noise",
                format!("need 0 < alpha <= 2 and gamma > 0, got alpha = {}, gamma = {}", self.noise.alpha, self.noise.gamma),
            ));
        }
        if let Some(g) = self.gamma_likelihood_override {
            if !(g > 0.0 && g.is_finite()) {
                return Err(invalid("gamma_likelihood_override", format!("must be positive, got {g}")));
            }
        }
        if self.k > 1 && self.fixed_powers_db.is_empty() {
            return Err(invalid("fixed_powers_db", "needed when k > 1"));
        }
        if let Some(s) = self.symbols_per_block {
            if s == 0 || s > self.t - self.tau {
                return Err(invalid("symbols_per_block", format!("must be in 1..={}", self.t - self.tau)));
            }
        }
        if self.n_trials == Some(0) {
            return Err(invalid("n_trials", "must be at least 1"));
        }
        if self.gamma_overrides.iter().any(|g| !(*g > 0.0)) {
            return Err(invalid("gamma_overrides", "entries must be positive"));
        }
        if self.alphas.iter().any(|a| !(*a > 1.0 && *a < 2.0)) {
            return Err(invalid("alphas", "entries must lie in (1, 2)"));
        }
        if !(self.target_ber > 0.0 && self.target_ber < 0.5) {
            return Err(invalid("target_ber", "must lie in (0, 0.5)"));
        }
        if !(self.target_rate_bpcu > 0.0) {
            return Err(invalid("target_rate_bpcu", "must be positive"));
        }
        if matches!(
            self.experiment,
            ExperimentKind::BerUplink | ExperimentKind::BerDownlink | ExperimentKind::DispersionMismatch
        ) && self.t - self.tau < 324
        {
            return Err(invalid("t", "BER experiments need t - tau >= 324 data symbols per block"));
        }
        if self.experiment == ExperimentKind::MismatchedRate && self.alphas.is_empty() {
            return Err(invalid("alphas", "must not be empty"));
        }
        if self.experiment == ExperimentKind::DispersionMismatch && self.gamma_overrides.is_empty() {
            return Err(invalid("gamma_overrides", "must not be empty"));
        }
        Ok(())
    }

    pub fn noise_spec(&self) -> Result<StableNoiseSpec> {
        StableNoiseSpec::new(self.noise.alpha, self.noise.gamma, NoiseKind::IsotropicComplex)
    }

    /// Dispersion used inside likelihoods.
    pub fn metric_gamma(&self) -> f64 {
        self.gamma_likelihood_override.unwrap_or(self.noise.gamma)
    }

    pub fn coherence(&self) -> Result<CoherenceBlock> {
        CoherenceBlock::new(self.t, self.tau)
    }

    pub fn symbols_per_block(&self) -> usize {
        self.symbols_per_block.unwrap_or(self.t - self.tau)
    }

    pub fn rate_trials(&self) -> usize {
        self.n_trials.unwrap_or(self.n_blocks * 200)
    }

    pub fn estimator_with(&self, kind: EstimatorKind, init: Init) -> Estimator {
        match kind {
            EstimatorKind::DespreadMl => Estimator::DespreadMl,
            EstimatorKind::RawMl => Estimator::RawMl {
                init,
                options: self.raw_ml,
            },
        }
    }

    /// The estimator selected by `estimator` and `init`.
    pub fn chosen_estimator(&self) -> Estimator {
        self.estimator_with(self.estimator, self.init)
    }

    /// Short hex digest of the canonical JSON form.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Command-line overrides, one per config key.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigOverrides {
    pub experiment: Option<String>,
    pub m: Option<usize>,
    pub k: Option<usize>,
    pub tau: Option<usize>,
    pub t: Option<usize>,
    pub sdr_grid_db: Option<Vec<f64>>,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub pilot_kind: Option<PilotKind>,
    pub estimator: Option<EstimatorKind>,
    pub init: Option<Init>,
    pub n_blocks: Option<usize>,
    pub seed: Option<u64>,
    pub gamma_likelihood_override: Option<f64>,
    pub n_trials: Option<usize>,
    /// Sets `n_blocks` to 500 unless `n_blocks` is given too.
    pub paper_scale: bool,
}

impl ConfigOverrides {
    pub fn apply(&self, mut config: ExperimentConfig) -> Result<ExperimentConfig> {
        if let Some(name) = &self.experiment {
            config.experiment = ExperimentKind::parse(name)?;
        }
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    config.$field = v.clone();
                }
            )*};
        }
        set!(m, k, tau, t, sdr_grid_db, pilot_kind, estimator, init, n_blocks, seed);
        if self.paper_scale && self.n_blocks.is_none() {
            config.n_blocks = PAPER_SCALE_BLOCKS;
        }
        if let Some(a) = self.alpha {
            config.noise.alpha = a;
        }
        if let Some(g) = self.gamma {
            config.noise.gamma = g;
        }
        if self.gamma_likelihood_override.is_some() {
            config.gamma_likelihood_override = self.gamma_likelihood_override;
        }
        if self.n_trials.is_some() {
            config.n_trials = self.n_trials;
        }
        config.validate()?;
        Ok(config)
    }
}
