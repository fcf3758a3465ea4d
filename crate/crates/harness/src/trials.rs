//! Repeated calibration/test splits and the per-trial risk bookkeeping.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sslrc_core::riskctl::{
    crc_select_thresholds, linspace, pareto_testing, pareto_testing_known, select_operating_point, CrcResult, Criterion,
    QuantilePool, SampleCurves, SampleField, ShiftStats, TestingOutcome,
};
use sslrc_core::riskctl::ConfigGrid;
use sslrc_core::rng::{derive_seed, rng_for};
use sslrc_core::srp::DoaGrid;
use sslrc_core::{Error, Result};

use crate::dataset::Dataset;
use crate::plan::{ExperimentPlan, Mode};

const STREAM_TRIAL: u64 = 0x7a1;
const STREAM_GROUP: u64 = 0x6a0;
const STREAM_CALIBRATE: u64 = 0xca1;

/// Per-sample quantities reused by every trial.
pub struct Prepared {
    pub grid: DoaGrid,
    /// Fields of the per-map normalized samples.
    pub fields: Vec<SampleField>,
    /// Fields of the raw samples and their pooled values, in shift mode.
    raw: Option<RawPool>,
    /// Curves of `fields` on the configuration axis, for Pareto-Testing
    /// without shift.
    curves: Option<Vec<SampleCurves>>,
}

struct RawPool {
    pool: QuantilePool,
    fields: Vec<SampleField>,
    values: Vec<Vec<f64>>,
}

impl Prepared {
    pub fn new(plan: &ExperimentPlan, data: &Dataset) -> Result<Self> {
        let grid = plan.analysis.grid()?;
        let fields = data
            .samples
            .par_iter()
            .map(|s| SampleField::new(&s.calibration()?, &grid))
            .collect::<Result<Vec<_>>>()?;
        let raw = match plan.shift.pool() {
            None => None,
            Some(pool) => {
                let raws = data.samples.iter().map(|s| s.calibration_raw()).collect::<Result<Vec<_>>>()?;
                let fields = raws.par_iter().map(|s| SampleField::new(s, &grid)).collect::<Result<Vec<_>>>()?;
                let values = raws
                    .iter()
                    .map(|s| match pool {
                        QuantilePool::AllValues => s.maps.iter().flat_map(|m| m.values().iter().copied()).collect(),
                        QuantilePool::PeaksOnly => s.peaks.clone(),
                    })
                    .collect();
                Some(RawPool { pool, fields, values })
            }
        };
        let curves = (plan.mode != Mode::KnownCrc && raw.is_none()).then(|| {
            let axis = linspace(0.0, 1.0, plan.analysis.config_points);
            fields.par_iter().map(|f| SampleCurves::new(f, &axis)).collect()
        });
        Ok(Prepared { grid, fields, raw, curves })
    }

    /// Fields of `indices` on the calibration scale, with the pooled shift
    /// statistics when shift normalization is on.
    pub fn fields_for(&self, indices: &[usize]) -> Result<(Vec<SampleField>, Option<ShiftStats>)> {
        match &self.raw {
            None => Ok((indices.iter().map(|&i| self.fields[i].clone()).collect(), None)),
            Some(raw) => {
                let values: Vec<f64> = indices.iter().flat_map(|&i| raw.values[i].iter().copied()).collect();
                let stats = ShiftStats::from_values(values).map_err(|e| match e {
                    Error::Contract(m) => Error::Contract(format!("{:?} pool: {m}", raw.pool)),
                    other => other,
                })?;
                Ok((indices.iter().map(|&i| raw.fields[i].affine(stats.q50, stats.scale())).collect(), Some(stats)))
            }
        }
    }

    fn curves_for(&self, indices: &[usize], axis: &[f64]) -> Result<(Vec<SampleCurves>, Option<ShiftStats>)> {
        if let Some(c) = &self.curves {
            return Ok((indices.iter().map(|&i| c[i].clone()).collect(), None));
        }
        let (fields, stats) = self.fields_for(indices)?;
        Ok((fields.iter().map(|f| SampleCurves::new(f, axis)).collect(), stats))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum Calibration {
    /// One CRC result per source.
    Crc { per_source: Vec<CrcResult> },
    ParetoTesting {
        outcome: TestingOutcome,
        /// Chosen configuration; `None` when nothing was validated.
        selected: Option<usize>,
    },
}

/// Calibrated thresholds ready to apply to fresh samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub n_samples: usize,
    pub lambdas: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Nothing could be certified; the thresholds are the trivial fallback.
    pub fallback: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<ShiftStats>,
    pub calibration: Calibration,
}

fn config_grid(plan: &ExperimentPlan) -> Result<ConfigGrid> {
    let n = plan.analysis.config_points;
    match plan.mode {
        Mode::KnownPt => ConfigGrid::known(n, plan.dataset.k_values[0]),
        _ => ConfigGrid::unknown(n, plan.dataset.k_max),
    }
}

/// Run the mode's calibration on the samples at `indices`.
pub fn calibrate(plan: &ExperimentPlan, prep: &Prepared, indices: &[usize], seed: u64) -> Result<CalibrationResult> {
    if indices.len() < 2 {
        return Err(Error::Contract("calibration needs at least two samples".into()));
    }
    match plan.mode {
        Mode::KnownCrc => {
            let k = plan.dataset.k_values[0];
            let (fields, shift) = prep.fields_for(indices)?;
            let grid = linspace(0.0, 1.0, plan.analysis.crc_grid_points);
            let per_source = (0..k)
                .map(|s| {
                    // no matched detection for this source: never covered
                    let cover: Vec<f64> =
                        fields.iter().map(|f| f.cover_thresholds().get(s).copied().unwrap_or(f64::NEG_INFINITY)).collect();
                    crc_select_thresholds(&cover, &grid, plan.alpha_mc)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(CalibrationResult {
                n_samples: indices.len(),
                lambdas: per_source.iter().map(|r| r.lambda).collect(),
                beta: None,
                fallback: per_source.iter().any(|r| r.fallback),
                shift,
                calibration: Calibration::Crc { per_source },
            })
        }
        Mode::KnownPt | Mode::UnknownPt => {
            let cgrid = config_grid(plan)?;
            let (curves, shift) = prep.curves_for(indices, cgrid.axis())?;
            let outcome = if plan.mode == Mode::KnownPt {
                pareto_testing_known(&curves, &cgrid, plan.alpha_mc, plan.delta, plan.opt_ratio, seed)?
            } else {
                pareto_testing(&curves, &cgrid, plan.alpha_mc, plan.alpha_md, plan.delta, plan.opt_ratio, seed)?
            };
            let criterion = if plan.mode == Mode::KnownPt { Criterion::MinPa } else { plan.criterion };
            let selected = match select_operating_point(&outcome, criterion) {
                Ok(c) => Some(c),
                Err(Error::NoValidConfiguration) => None,
                Err(e) => return Err(e),
            };
            // all-zero thresholds: full-grid regions and every detection kept
            let cfg = cgrid.config(selected.unwrap_or(0));
            Ok(CalibrationResult {
                n_samples: indices.len(),
                lambdas: cfg.lambdas,
                beta: cfg.beta,
                fallback: selected.is_none(),
                shift,
                calibration: Calibration::ParetoTesting { outcome, selected },
            })
        }
    }
}

/// Empirical test risks of calibrated thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestRisks {
    pub mc: f64,
    pub md: f64,
    pub fa: f64,
    pub pa: f64,
}

/// Apply thresholds to the samples at `indices`. Known-count CRC reports
/// the per-source miscoverage rate, the Pareto-Testing modes the summed
/// miscoverage count they constrain.
pub fn evaluate(plan: &ExperimentPlan, prep: &Prepared, cal: &CalibrationResult, indices: &[usize]) -> Result<(TestRisks, Option<ShiftStats>)> {
    if indices.is_empty() {
        return Err(Error::Contract("empty test split".into()));
    }
    let (fields, shift) = prep.fields_for(indices)?;
    let g = prep.grid.len() as f64;
    let n = indices.len() as f64;
    let mut risks = TestRisks { mc: 0.0, md: 0.0, fa: 0.0, pa: 0.0 };
    for f in &fields {
        let (mc, md, fa, pa) = sample_losses(plan.mode, f, &cal.lambdas, cal.beta, g);
        risks.mc += mc;
        risks.md += md;
        risks.fa += fa;
        risks.pa += pa;
    }
    risks.mc /= n;
    risks.md /= n;
    risks.fa /= n;
    risks.pa /= n;
    Ok((risks, shift))
}

fn sample_losses(mode: Mode, f: &SampleField, lambdas: &[f64], beta: Option<f64>, g: f64) -> (f64, f64, f64, f64) {
    let cover = f.cover_thresholds();
    let missed = |k: usize| cover.get(k).is_none_or(|&c| lambdas[k] > c);
    let area = |k: usize| if k < f.n_detections() { f.region_size(k, lambdas[k]) as f64 / g } else { 0.0 };
    match mode {
        Mode::KnownCrc | Mode::KnownPt => {
            let k = lambdas.len();
            let mc = (0..k).filter(|&i| missed(i)).count() as f64;
            let pa = (0..k).map(area).sum::<f64>() / k as f64;
            let mc = if mode == Mode::KnownCrc { mc / k as f64 } else { mc };
            (mc, 0.0, 0.0, pa)
        }
        Mode::UnknownPt => {
            let beta = beta.expect("unknown-count thresholds carry a detection threshold");
            let khat = f.peaks().iter().take_while(|&&v| v >= beta).count();
            let k = f.k_true();
            let mc = (0..khat.min(k)).filter(|&i| missed(i)).count() as f64;
            let pa = if khat == 0 { 0.0 } else { (0..khat).map(area).sum::<f64>() / khat as f64 };
            (mc, k.saturating_sub(khat) as f64, khat.saturating_sub(k) as f64, pa)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrialStatus {
    Valid,
    /// Pareto-Testing rejected nothing; the trivial configuration was used.
    NoValidConfiguration,
    /// CRC found no admissible threshold for some source.
    CrcFallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub group: String,
    pub trial: usize,
    pub seed: u64,
    pub status: TrialStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_index: Option<usize>,
    pub lambdas: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub risks: TestRisks,
    pub calibration: Vec<usize>,
    pub test: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_shift: Option<ShiftStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: String,
    pub n_samples: usize,
    pub n_trials: usize,
    pub n_no_valid: usize,
    pub p_mc: f64,
    pub p_md: f64,
    pub mean_mc: f64,
    pub mean_md: f64,
    pub mean_fa: f64,
    pub mean_pa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub mode: Mode,
    pub alpha_mc: f64,
    pub alpha_md: f64,
    pub delta: f64,
    pub trials: Vec<TrialRecord>,
    pub groups: Vec<GroupSummary>,
}

/// Seeded shuffle of a group into disjoint calibration and test parts.
pub fn trial_split(indices: &[usize], n_cal: usize, n_test: usize, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if indices.len() < n_cal + n_test {
        return Err(Error::Contract(format!("{} samples cannot fill splits of {n_cal} and {n_test}", indices.len())));
    }
    let mut idx = indices.to_vec();
    idx.shuffle(&mut rng_for(seed, STREAM_TRIAL, 0));
    Ok((idx[..n_cal].to_vec(), idx[n_cal..n_cal + n_test].to_vec()))
}

pub fn trial_seed(master: u64, group: usize, trial: usize) -> u64 {
    derive_seed(derive_seed(master, STREAM_GROUP, group as u64), STREAM_TRIAL, trial as u64)
}

/// Seed used by a standalone calibration of group `group`.
pub fn calibration_seed(master: u64, group: usize) -> u64 {
    derive_seed(master, STREAM_CALIBRATE, group as u64)
}

fn run_trial(plan: &ExperimentPlan, prep: &Prepared, label: &str, indices: &[usize], group: usize, trial: usize) -> Result<TrialRecord> {
    let seed = trial_seed(plan.seed, group, trial);
    let (cal_idx, test_idx) = trial_split(indices, plan.n_cal, plan.n_test, seed)?;
    let cal = calibrate(plan, prep, &cal_idx, seed)?;
    let (risks, test_shift) = evaluate(plan, prep, &cal, &test_idx)?;
    let (status, config_index) = match &cal.calibration {
        Calibration::Crc { .. } if cal.fallback => (TrialStatus::CrcFallback, None),
        Calibration::Crc { .. } => (TrialStatus::Valid, None),
        Calibration::ParetoTesting { selected: None, .. } => (TrialStatus::NoValidConfiguration, Some(0)),
        Calibration::ParetoTesting { selected: Some(c), .. } => (TrialStatus::Valid, Some(*c)),
    };
    Ok(TrialRecord {
        group: label.to_string(),
        trial,
        seed,
        status,
        config_index,
        lambdas: cal.lambdas,
        beta: cal.beta,
        risks,
        calibration: cal_idx,
        test: test_idx,
        test_shift,
    })
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

pub fn summarize(label: &str, n_samples: usize, trials: &[&TrialRecord], alpha_mc: f64, alpha_md: f64) -> GroupSummary {
    let n = trials.len() as f64;
    GroupSummary {
        group: label.to_string(),
        n_samples,
        n_trials: trials.len(),
        n_no_valid: trials.iter().filter(|t| t.status == TrialStatus::NoValidConfiguration).count(),
        p_mc: trials.iter().filter(|t| t.risks.mc > alpha_mc).count() as f64 / n,
        p_md: trials.iter().filter(|t| t.risks.md > alpha_md).count() as f64 / n,
        mean_mc: mean(trials.iter().map(|t| t.risks.mc)),
        mean_md: mean(trials.iter().map(|t| t.risks.md)),
        mean_fa: mean(trials.iter().map(|t| t.risks.fa)),
        mean_pa: mean(trials.iter().map(|t| t.risks.pa)),
    }
}

/// All trials of every experiment group, run concurrently.
pub fn run_trials(plan: &ExperimentPlan, data: &Dataset) -> Result<TrialReport> {
    plan.validate()?;
    let prep = Prepared::new(plan, data)?;
    run_trials_prepared(plan, data, &prep)
}

pub fn run_trials_prepared(plan: &ExperimentPlan, data: &Dataset, prep: &Prepared) -> Result<TrialReport> {
    let groups = data.groups(plan.dataset.mix_rooms);
    let jobs: Vec<(usize, usize)> = (0..groups.len()).flat_map(|g| (0..plan.trials).map(move |t| (g, t))).collect();
    let trials: Vec<TrialRecord> = jobs
        .par_iter()
        .map(|&(g, t)| run_trial(plan, prep, &groups[g].0, &groups[g].1, g, t))
        .collect::<Result<_>>()?;
    let summaries = groups
        .iter()
        .map(|(label, idx)| {
            let mine: Vec<&TrialRecord> = trials.iter().filter(|t| &t.group == label).collect();
            summarize(label, idx.len(), &mine, plan.alpha_mc, plan.alpha_md)
        })
        .collect();
    Ok(TrialReport { mode: plan.mode, alpha_mc: plan.alpha_mc, alpha_md: plan.alpha_md, delta: plan.delta, trials, groups: summaries })
}
