//! Experiment recipe read from TOML. Every key is optional; flags override
//! the file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{SsimParams, Window};
use crate::phantom::PhantomParams;
use crate::plan::{default_truncation_grid, PhysicalDoseParams, Strategy};
use crate::projector::crowther_angles;
use crate::recon::{Blend, Filter};
use crate::register::{AccumulativeConfig, BudgetStudyConfig};

pub const OUT_ENV: &str = "TOMOSTITCH_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum StrategyChoice {
    Soa,
    Lta,
    #[default]
    Both,
}

impl StrategyChoice {
    pub fn strategies(self) -> Vec<Strategy> {
        match self {
            StrategyChoice::Soa => vec![Strategy::Soa],
            StrategyChoice::Lta => vec![Strategy::Lta],
            StrategyChoice::Both => vec![Strategy::Soa, Strategy::Lta],
        }
    }
}

impl std::str::FromStr for StrategyChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "soa" => Ok(StrategyChoice::Soa),
            "lta" => Ok(StrategyChoice::Lta),
            "both" => Ok(StrategyChoice::Both),
            other => Err(format!(
                "unknown strategy '{other}' (expected soa, lta or both)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomSection {
    pub diameter: usize,
    pub background_lac: Option<f64>,
    pub pore_radius_range: Option<(f64, f64)>,
    pub pore_lac_range: Option<(f64, f64)>,
    pub target_pore_fraction: Option<f64>,
}

impl Default for PhantomSection {
    fn default() -> Self {
        PhantomSection {
            diameter: 512,
            background_lac: None,
            pore_radius_range: None,
            pore_lac_range: None,
            target_pore_fraction: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    pub strategy: StrategyChoice,
    /// Field of view for the coverage maps.
    pub fov: usize,
    #[serde(alias = "gamma_ps")]
    pub gamma_soa: f64,
    #[serde(alias = "gamma_os")]
    pub gamma_lta: f64,
    /// Angles per 180°; Crowther count of the object when absent.
    pub n_angles: Option<usize>,
}

impl Default for ScanSection {
    fn default() -> Self {
        ScanSection {
            strategy: StrategyChoice::Both,
            fov: 128,
            gamma_soa: 0.85,
            gamma_lta: 0.85,
            n_angles: None,
        }
    }
}

/// Reconstruction noise: a fixed `n_ph` per scan, or a total budget split
/// evenly over each plan's scans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub enabled: bool,
    pub n_ph: f64,
    pub budget: Option<f64>,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection {
            enabled: false,
            n_ph: 1e5,
            budget: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub truncation_grid: Vec<f64>,
    pub physical: Option<PhysicalDoseParams>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            truncation_grid: default_truncation_grid(),
            physical: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconstructSection {
    pub truncations: Vec<f64>,
    /// Phantom seeds; the top-level seed when empty.
    pub seeds: Vec<u64>,
    pub interior_fraction: f64,
    pub filter: Filter,
    pub blend: Blend,
    /// SSIM window side; global statistics when absent.
    pub ssim_window: Option<usize>,
}

impl Default for ReconstructSection {
    fn default() -> Self {
        ReconstructSection {
            truncations: vec![0.2, 0.4, 0.6],
            seeds: Vec::new(),
            interior_fraction: 0.5,
            filter: Filter::RamLak,
            blend: Blend::Feather,
            ssim_window: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegisterSection {
    pub budgets: Option<Vec<f64>>,
    pub trials: Option<usize>,
    pub jitter: Option<i64>,
    pub downsample_factors: Option<Vec<usize>>,
    pub downsample_budget: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbSection {
    pub sigma: f64,
    pub refine_center: bool,
    pub bands: Option<usize>,
    pub band_width: Option<usize>,
    pub stride: Option<usize>,
}

impl Default for PerturbSection {
    fn default() -> Self {
        PerturbSection {
            sigma: 4.0,
            refine_center: true,
            bands: None,
            band_width: None,
            stride: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub phantom: PhantomSection,
    pub scan: ScanSection,
    pub noise: NoiseSection,
    pub sweep: SweepSection,
    pub reconstruct: ReconstructSection,
    pub register: RegisterSection,
    pub perturb: PerturbSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 1,
            out: None,
            threads: None,
            phantom: PhantomSection::default(),
            scan: ScanSection::default(),
            noise: NoiseSection::default(),
            sweep: SweepSection::default(),
            reconstruct: ReconstructSection::default(),
            register: RegisterSection::default(),
            perturb: PerturbSection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn diameter(&self) -> usize {
        self.phantom.diameter
    }

    pub fn n_angles(&self) -> usize {
        self.scan
            .n_angles
            .unwrap_or_else(|| crowther_angles(self.diameter()))
    }

    pub fn phantom_params(&self, seed: u64) -> PhantomParams {
        let mut p = PhantomParams::scaled(self.diameter(), seed);
        let s = &self.phantom;
        if let Some(v) = s.background_lac {
            p.background_lac = v;
        }
        if let Some(v) = s.pore_radius_range {
            p.pore_radius_range = v;
        }
        if let Some(v) = s.pore_lac_range {
            p.pore_lac_range = v;
        }
        if let Some(v) = s.target_pore_fraction {
            p.target_pore_fraction = v;
        }
        p
    }

    pub fn gamma(&self, strategy: Strategy) -> f64 {
        match strategy {
            Strategy::Soa => self.scan.gamma_soa,
            Strategy::Lta => self.scan.gamma_lta,
        }
    }

    pub fn reconstruct_seeds(&self) -> Vec<u64> {
        if self.reconstruct.seeds.is_empty() {
            vec![self.seed]
        } else {
            self.reconstruct.seeds.clone()
        }
    }

    pub fn ssim_params(&self, dynamic_range: f64) -> SsimParams {
        let mut p = SsimParams::new(dynamic_range);
        if let Some(w) = self.reconstruct.ssim_window {
            p.window = Window::Square(w);
        }
        p
    }

    pub fn budget_study(&self) -> BudgetStudyConfig {
        let r = &self.register;
        let mut c = BudgetStudyConfig::scaled(self.diameter(), self.seed);
        c.n_angles = self.n_angles();
        c.gamma = self.scan.gamma_lta;
        if let Some(v) = &r.budgets {
            c.budgets = v.clone();
        }
        if let Some(v) = r.trials {
            c.trials = v;
        }
        if let Some(v) = r.jitter {
            c.jitter = v;
        }
        if let Some(v) = &r.downsample_factors {
            c.downsample_factors = v.clone();
        }
        if let Some(v) = r.downsample_budget {
            c.downsample_budget = v;
        }
        c
    }

    pub fn accumulative(&self) -> AccumulativeConfig {
        let p = &self.perturb;
        let mut c = AccumulativeConfig::scaled(self.diameter(), self.seed);
        c.n_angles = self.n_angles();
        c.gamma = self.scan.gamma_lta;
        c.sigma = p.sigma;
        c.refine_center = p.refine_center;
        if let Some(v) = p.bands {
            c.bands = v;
            c.anchor = v / 2;
        }
        if let Some(v) = p.band_width {
            c.band_width = v;
        }
        if let Some(v) = p.stride {
            c.stride = v;
        }
        c
    }

    /// Output directory: config value, then `TOMOSTITCH_OUT`, then `out`.
    pub fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    /// Checks every stage's preconditions up front.
    pub fn validate(&self) -> Result<()> {
        self.phantom_params(self.seed).validate()?;
        let l = self.diameter();
        if self.n_angles() < 2 {
            return Err(Error::param("need at least two projection angles"));
        }
        for (name, g) in [
            ("gamma_soa", self.scan.gamma_soa),
            ("gamma_lta", self.scan.gamma_lta),
        ] {
            if !(g > 0.0 && g <= 1.0) {
                return Err(Error::param(format!("{name} = {g} outside (0, 1]")));
            }
        }
        if self.scan.fov < 2 || self.scan.fov > 2 * l {
            return Err(Error::param(format!(
                "field of view {} outside [2, 2L]",
                self.scan.fov
            )));
        }
        let ratios = self
            .sweep
            .truncation_grid
            .iter()
            .chain(&self.reconstruct.truncations);
        if let Some(t) = ratios.clone().find(|t| !(**t > 0.0 && **t <= 1.0)) {
            return Err(Error::param(format!("truncation ratio {t} outside (0, 1]")));
        }
        if self.sweep.truncation_grid.is_empty() {
            return Err(Error::param("truncation grid is empty"));
        }
        if self.noise.enabled {
            let n = self.noise.budget.unwrap_or(self.noise.n_ph);
            if !(n > 0.0 && n.is_finite()) {
                return Err(Error::param("noise photon count must be positive"));
            }
        }
        let f = self.reconstruct.interior_fraction;
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::param(format!(
                "interior fraction {f} outside (0, 1)"
            )));
        }
        self.ssim_params(1.0).validate()?;
        if self.threads == Some(0) {
            return Err(Error::param("threads must be at least 1"));
        }
        self.budget_study().validate()?;
        self.accumulative().validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_desk_scale() {
        let c = ExperimentConfig::default();
        assert_eq!(c.diameter(), 512);
        assert_eq!(c.n_angles(), 805);
        assert_eq!(c.scan.fov, 128);
        assert_eq!(c.scan.gamma_soa, 0.85);
        c.validate().unwrap();
    }

    #[test]
    fn partial_file_overrides_defaults() {
        let text = r#"
            seed = 9
            [phantom]
            diameter = 128
            [scan]
            strategy = "soa"
            gamma_ps = 0.9
            [register]
            budgets = [10.0, 20.0]
            [perturb]
            sigma = 2.5
            refine_center = false
        "#;
        let c = ExperimentConfig::parse(text, Path::new("x.toml")).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.scan.strategy, StrategyChoice::Soa);
        assert_eq!(c.gamma(Strategy::Soa), 0.9);
        assert_eq!(c.budget_study().budgets, vec![10.0, 20.0]);
        assert_eq!(c.budget_study().diameter, 128);
        let a = c.accumulative();
        assert_eq!((a.sigma, a.refine_center), (2.5, false));
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        let err = ExperimentConfig::parse("sede = 1", Path::new("c.toml")).unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
        let mut c = ExperimentConfig::default();
        c.sweep.truncation_grid = vec![0.0];
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.scan.gamma_lta = 1.5;
        assert!(c.validate().is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let c = ExperimentConfig::default();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(
            ExperimentConfig::parse(&text, Path::new("r.toml")).unwrap(),
            c
        );
    }
}
