//! CSV and JSON report files.

use std::io::Write;

use serde::Serialize;
use sslrc_core::regions::{grow_region, RegionExport};
use sslrc_core::doa::DoaDegrees;
use sslrc_core::{Error, Result};

use crate::dataset::Dataset;
use crate::trials::TrialReport;

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn nonempty(report: &TrialReport) -> Result<()> {
    if report.trials.is_empty() || report.groups.is_empty() {
        return Err(Error::Contract("report has no trials".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub mode: String,
    pub t60_label: String,
    pub alpha_mc: f64,
    pub alpha_md: f64,
    pub delta: f64,
    pub p_mc: f64,
    pub p_md: f64,
    pub mean_mc: f64,
    pub mean_md: f64,
    pub mean_fa: f64,
    pub mean_pa_pct: f64,
}

pub fn summary_rows(report: &TrialReport) -> Vec<SummaryRow> {
    report
        .groups
        .iter()
        .map(|g| SummaryRow {
            mode: report.mode.as_str().to_string(),
            t60_label: g.group.clone(),
            alpha_mc: report.alpha_mc,
            alpha_md: report.alpha_md,
            delta: report.delta,
            p_mc: g.p_mc,
            p_md: g.p_md,
            mean_mc: g.mean_mc,
            mean_md: g.mean_md,
            mean_fa: g.mean_fa,
            mean_pa_pct: 100.0 * g.mean_pa,
        })
        .collect()
}

pub fn write_summary_csv<W: Write>(report: &TrialReport, out: W) -> Result<()> {
    nonempty(report)?;
    let mut w = csv::Writer::from_writer(out);
    for row in summary_rows(report) {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trials_csv<W: Write>(report: &TrialReport, out: W) -> Result<()> {
    nonempty(report)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["group", "trial", "seed", "status", "config_index", "lambdas", "beta", "mc", "md", "fa", "pa"])
        .map_err(csv_err)?;
    for t in &report.trials {
        let status = serde_json::to_value(t.status).expect("plain enum");
        let lambdas: Vec<String> = t.lambdas.iter().map(|l| l.to_string()).collect();
        w.write_record([
            t.group.clone(),
            t.trial.to_string(),
            t.seed.to_string(),
            status.as_str().unwrap_or_default().to_string(),
            t.config_index.map(|c| c.to_string()).unwrap_or_default(),
            lambdas.join(";"),
            t.beta.map(|b| b.to_string()).unwrap_or_default(),
            t.risks.mc.to_string(),
            t.risks.md.to_string(),
            t.risks.fa.to_string(),
            t.risks.pa.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct SampleRegions {
    group: String,
    sample: usize,
    truths: Vec<DoaDegrees>,
    regions: Vec<RegionExport>,
}

/// Regions of the first trial of each group on its test samples, for
/// plotting. The thresholds are applied on the scale they were calibrated on.
pub fn write_regions<W: Write>(report: &TrialReport, data: &Dataset, grid: &sslrc_core::srp::DoaGrid, out: W) -> Result<()> {
    nonempty(report)?;
    let mut dumps = Vec::new();
    for g in &report.groups {
        let Some(t) = report.trials.iter().find(|t| t.group == g.group) else { continue };
        for &i in &t.test {
            let s = data
                .samples
                .get(i)
                .ok_or_else(|| Error::Contract(format!("sample {i} is not in the dataset")))?;
            let (maps, peaks) = match &t.test_shift {
                None => (s.trace.maps.clone(), s.trace.normalized_peaks()),
                Some(st) => (
                    s.trace.raw_maps.iter().map(|m| st.apply_map(m)).collect(),
                    s.trace.detections.iter().map(|d| st.apply(d.raw_peak)).collect(),
                ),
            };
            let kept = match t.beta {
                Some(b) => peaks.iter().take_while(|&&v| v >= b).count(),
                None => t.lambdas.len(),
            };
            let regions = (0..kept.min(maps.len()))
                .map(|k| grow_region(&maps[k], grid, s.trace.detections[k].grid_index, t.lambdas[k]).export(grid))
                .collect();
            dumps.push(SampleRegions {
                group: g.group.clone(),
                sample: s.index,
                truths: s.truths.iter().map(|&d| d.into()).collect(),
                regions,
            });
        }
    }
    serde_json::to_writer(out, &dumps).map_err(|e| Error::Io(e.into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::Mode;
    use crate::trials::{summarize, TestRisks, TrialRecord, TrialStatus};

    fn record(trial: usize, mc: f64, md: f64) -> TrialRecord {
        TrialRecord {
            group: "300ms".into(),
            trial,
            seed: trial as u64,
            status: TrialStatus::Valid,
            config_index: Some(7),
            lambdas: vec![0.5, 0.25],
            beta: Some(0.75),
            risks: TestRisks { mc, md, fa: 0.5, pa: 0.125 },
            calibration: vec![0, 1],
            test: vec![2],
            test_shift: None,
        }
    }

    fn report(trials: Vec<TrialRecord>) -> TrialReport {
        let refs: Vec<&TrialRecord> = trials.iter().collect();
        let groups = if trials.is_empty() { vec![] } else { vec![summarize("300ms", 10, &refs, 0.2, 0.1)] };
        TrialReport { mode: Mode::UnknownPt, alpha_mc: 0.2, alpha_md: 0.1, delta: 0.1, trials, groups }
    }

    #[test]
    fn summary_schema_and_values() {
        let r = report(vec![record(0, 0.1, 0.0), record(1, 0.3, 0.2), record(2, 0.2, 0.1)]);
        let mut buf = Vec::new();
        write_summary_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "mode,t60_label,alpha_mc,alpha_md,delta,p_mc,p_md,mean_mc,mean_md,mean_fa,mean_pa_pct");
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[0], "unknown-pt");
        assert_eq!(row[1], "300ms");
        assert_eq!(row[5].parse::<f64>().unwrap(), 1.0 / 3.0);
        assert_eq!(row[6].parse::<f64>().unwrap(), 1.0 / 3.0);
        assert!((row[7].parse::<f64>().unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(row[10], "12.5");
        assert!(lines.next().is_none());
    }

    #[test]
    fn trials_csv_is_stable() {
        let r = report(vec![record(0, 0.1, 0.0), record(1, 0.3, 0.2)]);
        let (mut a, mut b) = (Vec::new(), Vec::new());
        write_trials_csv(&r, &mut a).unwrap();
        write_trials_csv(&r, &mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "300ms,0,0,valid,7,0.5;0.25,0.75,0.1,0,0.5,0.125");
    }

    #[test]
    fn empty_report_is_an_error() {
        let r = report(vec![]);
        let mut buf = Vec::new();
        assert!(write_summary_csv(&r, &mut buf).is_err());
        assert!(write_trials_csv(&r, &mut buf).is_err());
        assert!(buf.is_empty());
    }
}
