use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{Center, GridSpec, Layout};
use crate::optim::{Feedback, GaConfig};
use crate::physics::{DetectionModel, DiffuserSpec, EmccdSpec, TwinPhotonModel, DEFAULT_SIGMA_RATIO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Fig3,
    Fig4,
    AppendixA,
    AppendixB,
    CenterScan,
    Custom,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Fig3 => "fig3",
            Experiment::Fig4 => "fig4",
            Experiment::AppendixA => "appendix-a",
            Experiment::AppendixB => "appendix-b",
            Experiment::CenterScan => "center-scan",
            Experiment::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsConfig {
    pub grid: usize,
    pub pitch: f64,
    pub layout: Layout,
    pub beam_radius: f64,
    /// sigma_+ / sigma_-.
    pub sigma_ratio: f64,
    /// Beam center in pixels; the grid midpoint when absent.
    pub beam_center: Option<[f64; 2]>,
    pub diffuser: DiffuserConfig,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        PhysicsConfig {
            grid: 96,
            pitch: 1.0,
            layout: Layout::Square,
            beam_radius: 40.0,
            sigma_ratio: DEFAULT_SIGMA_RATIO,
            beam_center: None,
            diffuser: DiffuserConfig::default(),
        }
    }
}

impl PhysicsConfig {
    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::with_layout(self.grid, self.pitch, self.layout)
    }

    pub fn model(&self) -> Result<TwinPhotonModel> {
        let m = TwinPhotonModel::standard(self.grid_spec()?, self.beam_radius, self.sigma_ratio)?;
        match self.beam_center {
            Some([cx, cy]) => m.with_beam_center(Center::new(cx, cy)),
            None => Ok(m),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiffuserConfig {
    pub seed: u64,
    pub corr_len: f64,
    pub phase_std: f64,
}

impl Default for DiffuserConfig {
    fn default() -> Self {
        DiffuserConfig {
            seed: 7,
            corr_len: 32.0,
            phase_std: 2.5,
        }
    }
}

impl DiffuserConfig {
    pub fn spec(&self) -> Result<DiffuserSpec> {
        DiffuserSpec::new(self.seed, self.corr_len, self.phase_std)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionConfig {
    pub kappa: f64,
    pub t_int: f64,
    pub t_final: f64,
    pub x1: [f64; 2],
    pub x2: [f64; 2],
}

impl Default for DetectionConfig {
    fn default() -> Self {
        DetectionConfig {
            kappa: 200.0,
            t_int: 1.0,
            t_final: 50.0,
            x1: [0.0, 0.0],
            x2: [0.0, 0.0],
        }
    }
}

impl DetectionConfig {
    pub fn model(&self) -> Result<DetectionModel> {
        DetectionModel::new(
            Center::new(self.x1[0], self.x1[1]),
            Center::new(self.x2[0], self.x2[1]),
            self.kappa,
            self.t_int,
            self.t_final,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedConfig {
    pub master: u64,
    pub runs: usize,
}

impl Default for SeedConfig {
    fn default() -> Self {
        SeedConfig { master: 2024, runs: 5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmccdConfig {
    pub frames: usize,
    pub peak_halfwidth: usize,
    pub map_radius: usize,
    pub detector_pixels: usize,
}

impl Default for EmccdConfig {
    fn default() -> Self {
        EmccdConfig {
            frames: 100_000,
            peak_halfwidth: 1,
            map_radius: 16,
            detector_pixels: 64,
        }
    }
}

impl EmccdConfig {
    pub fn spec(&self, model: &TwinPhotonModel) -> Result<EmccdSpec> {
        let e = EmccdSpec {
            detector_pixels: self.detector_pixels,
            map_radius: self.map_radius,
            pairs_per_frame_mean: 0.1 * (self.detector_pixels * self.detector_pixels) as f64 / 2.0,
            ..EmccdSpec::for_model(model, self.frames)
        };
        e.validate()?;
        Ok(e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig4Config {
    pub t_ints: Vec<f64>,
}

impl Default for Fig4Config {
    fn default() -> Self {
        Fig4Config {
            t_ints: vec![0.2, 0.5, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppendixAConfig {
    /// Optimization-center shifts along x, in pixels.
    pub shifts: Vec<f64>,
}

impl Default for AppendixAConfig {
    fn default() -> Self {
        AppendixAConfig {
            shifts: vec![5.0, 10.0, 20.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppendixBConfig {
    pub grid: usize,
    pub layout: Layout,
    pub beam_radius: f64,
    /// Co-displacement of both detectors as a fraction of the detector-plane
    /// beam diameter.
    pub displacement: f64,
    /// Half-width, in samples, of the coincidence profiles written out.
    pub profile_radius: usize,
}

impl Default for AppendixBConfig {
    fn default() -> Self {
        AppendixBConfig {
            grid: 256,
            layout: Layout::Line,
            beam_radius: 80.0,
            displacement: 0.25,
            profile_radius: 24,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CenterScanConfig {
    pub grid: usize,
    pub beam_radius: f64,
    pub true_center: [f64; 2],
    pub amplitude: f64,
    pub repeats: usize,
    pub feedback: Feedback,
    /// Scan through the diffuser too (experimental).
    pub with_diffuser: bool,
    /// Number of schedule stages to run (at most four).
    pub stages: usize,
}

impl Default for CenterScanConfig {
    fn default() -> Self {
        CenterScanConfig {
            grid: 1024,
            beam_radius: 40.0,
            true_center: [468.0, 493.0],
            amplitude: 6.0,
            repeats: 20,
            feedback: Feedback::Poisson,
            with_diffuser: false,
            stages: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CustomConfig {
    /// Any of "ga" and "sga".
    pub modes: Vec<String>,
    /// Offset of the sGA center from the beam center, in pixels.
    pub sga_offset: [f64; 2],
    pub rate_model: crate::optim::RateModel,
    pub feedback: Feedback,
    pub emccd_maps: bool,
}

impl Default for CustomConfig {
    fn default() -> Self {
        CustomConfig {
            modes: vec!["ga".into(), "sga".into()],
            sga_offset: [0.0, 0.0],
            rate_model: crate::optim::RateModel::Delta,
            feedback: Feedback::Poisson,
            emccd_maps: false,
        }
    }
}

/// Everything an experiment run depends on. Parsed from TOML; unknown keys
/// are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub output_dir: PathBuf,
    pub physics: PhysicsConfig,
    pub detection: DetectionConfig,
    pub optimizer: GaConfig,
    pub seeds: SeedConfig,
    pub emccd: EmccdConfig,
    pub fig4: Fig4Config,
    pub appendix_a: AppendixAConfig,
    pub appendix_b: AppendixBConfig,
    pub center_scan: CenterScanConfig,
    pub custom: CustomConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig::preset(Experiment::Fig3)
    }
}

impl ExperimentConfig {
    /// Defaults for one experiment.
    pub fn preset(experiment: Experiment) -> Self {
        ExperimentConfig {
            experiment,
            output_dir: PathBuf::from(format!("out/{}", experiment.name())),
            physics: PhysicsConfig::default(),
            detection: DetectionConfig::default(),
            optimizer: GaConfig::default(),
            seeds: SeedConfig::default(),
            emccd: EmccdConfig::default(),
            fig4: Fig4Config::default(),
            appendix_a: AppendixAConfig::default(),
            appendix_b: AppendixBConfig::default(),
            center_scan: CenterScanConfig::default(),
            custom: CustomConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        // Either section may set the run count; the other follows.
        let default_runs = SeedConfig::default().runs;
        if cfg.optimizer.runs == default_runs {
            cfg.optimizer.runs = cfg.seeds.runs;
        } else if cfg.seeds.runs == default_runs {
            cfg.seeds.runs = cfg.optimizer.runs;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Set the run count everywhere it appears.
    pub fn with_runs(mut self, runs: usize) -> Self {
        self.seeds.runs = runs;
        self.optimizer.runs = runs;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.runs == 0 {
            return Err(Error::config("seeds.runs must be at least 1"));
        }
        if self.optimizer.runs != self.seeds.runs {
            return Err(Error::config(format!(
                "optimizer.runs ({}) disagrees with seeds.runs ({})",
                self.optimizer.runs, self.seeds.runs
            )));
        }
        self.optimizer.validate()?;
        self.detection.model()?;
        self.physics.diffuser.spec()?;
        match self.experiment {
            Experiment::AppendixB => {
                self.appendix_b_physics().model()?;
            }
            Experiment::CenterScan => {
                let c = &self.center_scan;
                if c.stages == 0 || c.stages > 4 {
                    return Err(Error::config("center_scan.stages must be between 1 and 4"));
                }
                if c.repeats == 0 {
                    return Err(Error::config("center_scan.repeats must be at least 1"));
                }
                self.center_physics().model()?;
            }
            _ => {
                let model = self.physics.model()?;
                self.emccd.spec(&model)?;
            }
        }
        if self.fig4.t_ints.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::config("fig4.t_ints must be positive"));
        }
        for m in &self.custom.modes {
            if m != "ga" && m != "sga" {
                return Err(Error::config(format!("unknown optimizer mode {m:?}")));
            }
        }
        Ok(())
    }

    pub fn appendix_b_physics(&self) -> PhysicsConfig {
        PhysicsConfig {
            grid: self.appendix_b.grid,
            layout: self.appendix_b.layout,
            beam_radius: self.appendix_b.beam_radius,
            beam_center: None,
            ..self.physics.clone()
        }
    }

    pub fn center_physics(&self) -> PhysicsConfig {
        let [cx, cy] = self.center_scan.true_center;
        PhysicsConfig {
            grid: self.center_scan.grid,
            layout: Layout::Square,
            beam_radius: self.center_scan.beam_radius,
            beam_center: Some([cx, cy]),
            ..self.physics.clone()
        }
    }

    /// Hex SHA-256 of the canonical JSON form. Independent of key order and
    /// formatting in the source file.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex(&Sha256::digest(json))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid() {
        for e in [
            Experiment::Fig3,
            Experiment::Fig4,
            Experiment::AppendixA,
            Experiment::AppendixB,
            Experiment::CenterScan,
            Experiment::Custom,
        ] {
            ExperimentConfig::preset(e).validate().unwrap();
        }
    }

    #[test]
    fn round_trip_keeps_digest() {
        let cfg = ExperimentConfig::preset(Experiment::Fig4);
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.digest(), cfg.digest());
    }

    #[test]
    fn digest_ignores_key_order() {
        let a = "experiment = \"fig3\"\n[seeds]\nmaster = 9\nruns = 2\n[detection]\nkappa = 80.0\nt_int = 0.5\n";
        let b = "[detection]\nt_int = 0.5\nkappa = 80.0\n[seeds]\nruns = 2\nmaster = 9\n";
        let (a, b) = (ExperimentConfig::from_toml(a).unwrap(), ExperimentConfig::from_toml(b).unwrap());
        assert_eq!(a.digest(), b.digest());
        assert_ne!(a.digest(), ExperimentConfig::default().digest());
    }

    #[test]
    fn unknown_keys_are_errors() {
        let err = ExperimentConfig::from_toml("[detection]\nkapa = 3.0\n").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(ExperimentConfig::from_toml("bogus = 1\n").is_err());
    }

    #[test]
    fn invalid_values_are_errors() {
        assert!(ExperimentConfig::from_toml("[optimizer]\nelites = 20\n").is_err());
        assert!(ExperimentConfig::from_toml("[physics]\ngrid = 9\n").is_err());
        assert!(ExperimentConfig::from_toml("[seeds]\nruns = 0\n").is_err());
        assert!(ExperimentConfig::from_toml("[seeds]\nruns = 2\n[optimizer]\nruns = 3\n").is_err());
        let c = ExperimentConfig::from_toml("[optimizer]\nruns = 3\n").unwrap();
        assert_eq!((c.seeds.runs, c.optimizer.runs), (3, 3));
    }
}
