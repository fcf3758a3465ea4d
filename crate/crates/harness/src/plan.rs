//! Experiment plans: what to simulate, how to analyse it and how to calibrate.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sslrc_core::detect::DEFAULT_SEPARATION_DEG;
use sslrc_core::riskctl::{Criterion, QuantilePool};
use sslrc_core::scene::{sabine_absorption, MicArrayGeometry, Room, Vec3};
use sslrc_core::srp::{DoaGrid, SrpConfig};
use sslrc_core::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Per-source region thresholds by conformal risk control, known count.
    KnownCrc,
    /// Pareto-Testing over region thresholds, known count.
    KnownPt,
    /// Pareto-Testing over region and detection thresholds.
    UnknownPt,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::KnownCrc => "known-crc",
            Mode::KnownPt => "known-pt",
            Mode::UnknownPt => "unknown-pt",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoomPlan {
    #[serde(default)]
    pub label: Option<String>,
    pub dims: Vec3,
    #[serde(default = "default_order")]
    pub order: u32,
    #[serde(default)]
    pub absorption: Option<f64>,
    #[serde(default)]
    pub t60_ms: Option<f64>,
}

fn default_order() -> u32 {
    1
}

impl RoomPlan {
    pub fn room(&self) -> Result<Room> {
        let absorption = match (self.absorption, self.t60_ms) {
            (Some(a), _) => a,
            (None, Some(t)) => sabine_absorption(self.dims, t / 1000.0)?,
            (None, None) => 0.6,
        };
        let room = Room { dims: self.dims, order: self.order, absorption };
        room.validate()?;
        Ok(room)
    }

    pub fn t60_label(&self) -> String {
        match (&self.label, self.t60_ms) {
            (Some(l), _) => l.clone(),
            (None, Some(t)) => format!("{t}ms"),
            (None, None) => "default".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, untagged)]
pub enum ArrayPlan {
    Icosahedron { icosahedron_radius_m: f64 },
    Positions { positions: Vec<Vec3> },
}

impl ArrayPlan {
    pub fn geometry(&self) -> Result<MicArrayGeometry> {
        match self {
            ArrayPlan::Icosahedron { icosahedron_radius_m } if *icosahedron_radius_m > 0.0 => {
                Ok(MicArrayGeometry::icosahedron(*icosahedron_radius_m))
            }
            ArrayPlan::Icosahedron { .. } => Err(Error::InvalidScene("array radius must be positive".into())),
            ArrayPlan::Positions { positions } => MicArrayGeometry::new(positions.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetPlan {
    pub rooms: Vec<RoomPlan>,
    /// Pool all rooms into one calibration population instead of one
    /// experiment per room.
    pub mix_rooms: bool,
    pub k_values: Vec<usize>,
    pub samples_per_k: usize,
    pub k_max: usize,
    pub duration_s: f64,
    pub sample_rate: u32,
    pub snr_db: Option<f64>,
    pub min_separation_deg: f64,
    pub source_range_m: f64,
    pub elevation_range_deg: [f64; 2],
    pub array: ArrayPlan,
    /// Defaults to the room centre.
    pub array_center: Option<Vec3>,
    pub speed_of_sound: f64,
}

impl Default for DatasetPlan {
    fn default() -> Self {
        DatasetPlan {
            rooms: vec![RoomPlan { label: None, dims: [6.0, 6.0, 2.5], order: 1, absorption: None, t60_ms: Some(300.0) }],
            mix_rooms: false,
            k_values: vec![1, 2, 3],
            samples_per_k: 30,
            k_max: 3,
            duration_s: 2.0,
            sample_rate: 16000,
            snr_db: Some(15.0),
            min_separation_deg: 15.0,
            source_range_m: 1.5,
            elevation_range_deg: [40.0, 140.0],
            array: ArrayPlan::Icosahedron { icosahedron_radius_m: 0.06 },
            array_center: None,
            speed_of_sound: 343.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisPlan {
    pub window: usize,
    pub hop: usize,
    pub band_hz: [f64; 2],
    pub grid_step_deg: f64,
    pub separation_deg: f64,
    /// Values per dimension of the Pareto-Testing configuration grid.
    pub config_points: usize,
    /// Values of the CRC threshold grid.
    pub crc_grid_points: usize,
}

impl Default for AnalysisPlan {
    fn default() -> Self {
        AnalysisPlan {
            window: 1024,
            hop: 512,
            band_hz: [100.0, 4000.0],
            grid_step_deg: 5.0,
            separation_deg: DEFAULT_SEPARATION_DEG,
            config_points: 15,
            crc_grid_points: 100,
        }
    }
}

impl AnalysisPlan {
    pub fn grid(&self) -> Result<DoaGrid> {
        DoaGrid::with_step(self.grid_step_deg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShiftMode {
    #[default]
    Off,
    AllValues,
    PeaksOnly,
}

impl ShiftMode {
    pub fn pool(self) -> Option<QuantilePool> {
        match self {
            ShiftMode::Off => None,
            ShiftMode::AllValues => Some(QuantilePool::AllValues),
            ShiftMode::PeaksOnly => Some(QuantilePool::PeaksOnly),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub n_cal: usize,
    pub n_test: usize,
    /// Share of the calibration split used for ordering in Pareto-Testing.
    #[serde(default = "default_opt_ratio")]
    pub opt_ratio: f64,
    pub alpha_mc: f64,
    #[serde(default = "default_alpha")]
    pub alpha_md: f64,
    #[serde(default = "default_alpha")]
    pub delta: f64,
    #[serde(default = "default_criterion")]
    pub criterion: Criterion,
    #[serde(default)]
    pub shift: ShiftMode,
    #[serde(default)]
    pub dataset: DatasetPlan,
    #[serde(default)]
    pub analysis: AnalysisPlan,
}

fn default_trials() -> usize {
    100
}
fn default_opt_ratio() -> f64 {
    0.5
}
fn default_alpha() -> f64 {
    0.1
}
fn default_criterion() -> Criterion {
    Criterion::MinPa
}

impl ExperimentPlan {
    pub fn parse(text: &str) -> Result<Self> {
        let plan: ExperimentPlan = toml::from_str(text).map_err(|e| Error::Parse(format!("plan: {e}")))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn read(path: &Path) -> Result<Self> {
        ExperimentPlan::parse(&std::fs::read_to_string(path)?)
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.seed = s;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Contract(m));
        let d = &self.dataset;
        let unit = |v: f64| v > 0.0 && v < 1.0;
        if !unit(self.alpha_mc) && self.mode == Mode::KnownCrc {
            return bad(format!("alpha_mc {} outside (0, 1)", self.alpha_mc));
        }
        if !(self.alpha_mc > 0.0) || !unit(self.alpha_md) || !unit(self.delta) {
            return bad("alpha_md and delta must lie in (0, 1), alpha_mc must be positive".into());
        }
        if !(self.opt_ratio > 0.0 && self.opt_ratio < 1.0) {
            return bad(format!("opt_ratio {} outside (0, 1)", self.opt_ratio));
        }
        if self.trials == 0 || self.n_cal < 2 || self.n_test == 0 {
            return bad("need at least one trial, two calibration and one test sample".into());
        }
        if d.rooms.is_empty() || d.k_values.is_empty() || d.samples_per_k == 0 {
            return bad("dataset needs rooms, source counts and samples".into());
        }
        if d.k_max == 0 || d.k_values.iter().any(|&k| k == 0 || k > d.k_max) {
            return bad(format!("source counts must lie in 1..={}", d.k_max));
        }
        if self.mode != Mode::UnknownPt && d.k_values.len() != 1 {
            return bad("known-count modes need a single source count".into());
        }
        if self.mode != Mode::KnownCrc {
            let upper = match self.mode {
                Mode::KnownPt => d.k_values[0],
                _ => d.k_max,
            } as f64;
            if self.alpha_mc >= upper || self.alpha_md >= upper {
                return bad(format!("risk levels must be below the loss bound {upper}"));
            }
        }
        let per_group = d.k_values.len() * d.samples_per_k * if d.mix_rooms { d.rooms.len() } else { 1 };
        if per_group < self.n_cal + self.n_test {
            return bad(format!("{} samples per experiment, splits need {}", per_group, self.n_cal + self.n_test));
        }
        if self.analysis.config_points < 2 || self.analysis.crc_grid_points < 2 {
            return bad("threshold grids need at least two points".into());
        }
        for r in &d.rooms {
            r.room()?;
        }
        d.array.geometry()?;
        self.analysis.grid()?;
        Ok(())
    }

    pub fn srp_config(&self) -> SrpConfig {
        SrpConfig { band_hz: self.analysis.band_hz, speed_of_sound: self.dataset.speed_of_sound }
    }
}
