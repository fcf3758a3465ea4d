//! Pareto-Testing: order Pareto-optimal configurations by p-values on one
//! split, then validate them by fixed-sequence testing on the other.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::riskctl::{fixed_sequence, pareto_front, wsr_pvalue, ConfigGrid, SampleCurves};
use crate::rng::rng_for;

const STREAM_SPLIT: u64 = 0x5b11;

/// Per-sample losses over a finite configuration set.
pub trait LossModel: Sync {
    fn n_samples(&self) -> usize;
    fn n_configs(&self) -> usize;
    fn loss_names(&self) -> Vec<&'static str>;
    /// `out[l][s]`: loss `l` of `samples[s]` at `config`.
    fn losses(&self, config: usize, samples: &[usize]) -> Vec<Vec<f64>>;
}

/// Sample curves over a product grid. In unknown-count mode the losses are
/// `[mc, md, fa, pa]`; with a known count, `[mc, pa]`.
pub struct CurveLossModel<'a> {
    pub curves: &'a [SampleCurves],
    pub grid: &'a ConfigGrid,
}

impl LossModel for CurveLossModel<'_> {
    fn n_samples(&self) -> usize {
        self.curves.len()
    }
    fn n_configs(&self) -> usize {
        self.grid.len()
    }
    fn loss_names(&self) -> Vec<&'static str> {
        if self.grid.with_beta() {
            vec!["mc", "md", "fa", "pa"]
        } else {
            vec!["mc", "pa"]
        }
    }
    fn losses(&self, config: usize, samples: &[usize]) -> Vec<Vec<f64>> {
        let d = self.grid.digits(config);
        if self.grid.with_beta() {
            let mut out = vec![Vec::with_capacity(samples.len()); 4];
            for &s in samples {
                let l = self.curves[s].losses_unknown(&d);
                out[0].push(l.mc);
                out[1].push(l.md);
                out[2].push(l.fa);
                out[3].push(l.pa);
            }
            out
        } else {
            let mut out = vec![Vec::with_capacity(samples.len()); 2];
            for &s in samples {
                let l = self.curves[s].losses_known(&d);
                out[0].push(l.mc);
                out[1].push(l.pa);
            }
            out
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskConstraint {
    pub loss: usize,
    pub alpha: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestingParams {
    pub constraints: Vec<RiskConstraint>,
    /// Unconstrained objectives, in tie-break order.
    pub free: Vec<usize>,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestingStatus {
    Valid,
    NoValidConfiguration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestingOutcome {
    pub status: TestingStatus,
    pub loss_names: Vec<String>,
    pub n_opt: usize,
    pub n_tst: usize,
    /// Size of the Pareto front on the optimisation split.
    pub front_size: usize,
    /// Front configurations sorted by ascending `p_opt`.
    pub sorted: Vec<usize>,
    pub p_opt: Vec<f64>,
    pub p_tst: Vec<f64>,
    /// First position with `p_tst > δ`; rejections are `sorted[..j]`.
    pub j: usize,
    pub rejected: Vec<usize>,
    /// Validated configurations not dominated on the free objectives.
    pub pareto_set: Vec<usize>,
    /// Empirical test-split risks of each `pareto_set` entry, all losses.
    pub pareto_tst_risks: Vec<Vec<f64>>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn pvalue(series: &[Vec<f64>], params: &TestingParams) -> Result<f64> {
    let mut p = 0.0f64;
    for c in &params.constraints {
        p = p.max(wsr_pvalue(&series[c.loss], c.alpha, params.delta, c.lower, c.upper)?);
    }
    Ok(p)
}

pub fn run_pareto_testing<M: LossModel>(model: &M, opt: &[usize], tst: &[usize], params: &TestingParams) -> Result<TestingOutcome> {
    if opt.is_empty() || tst.is_empty() {
        return Err(Error::Contract("both calibration splits must be non-empty".into()));
    }
    if model.n_configs() == 0 {
        return Err(Error::Contract("empty configuration set".into()));
    }
    let names = model.loss_names();
    if params.constraints.iter().map(|c| c.loss).chain(params.free.iter().copied()).any(|l| l >= names.len()) {
        return Err(Error::Contract("loss index out of range".into()));
    }

    let opt_risks: Vec<Vec<f64>> =
        (0..model.n_configs()).into_par_iter().map(|c| model.losses(c, opt).iter().map(|s| mean(s)).collect()).collect();
    let front = pareto_front(&opt_risks);

    let p_front: Vec<f64> = front.par_iter().map(|&c| pvalue(&model.losses(c, opt), params)).collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..front.len()).collect();
    order.sort_by(|&a, &b| {
        let (ca, cb) = (front[a], front[b]);
        p_front[a]
            .total_cmp(&p_front[b])
            .then_with(|| {
                params
                    .free
                    .iter()
                    .map(|&l| opt_risks[ca][l].total_cmp(&opt_risks[cb][l]))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .then(ca.cmp(&cb))
    });
    let sorted: Vec<usize> = order.iter().map(|&i| front[i]).collect();
    let p_opt: Vec<f64> = order.iter().map(|&i| p_front[i]).collect();

    let tst_series: Vec<Vec<Vec<f64>>> = sorted.par_iter().map(|&c| model.losses(c, tst)).collect();
    let p_tst: Vec<f64> = tst_series.iter().map(|s| pvalue(s, params)).collect::<Result<_>>()?;
    let j = fixed_sequence(&p_tst, params.delta);
    let rejected = sorted[..j].to_vec();

    let tst_risks: Vec<Vec<f64>> = tst_series[..j].iter().map(|s| s.iter().map(|x| mean(x)).collect()).collect();
    let free_points: Vec<Vec<f64>> = tst_risks.iter().map(|r| params.free.iter().map(|&l| r[l]).collect()).collect();
    let mut keep = pareto_front(&free_points);
    keep.sort_by_key(|&i| rejected[i]);
    let pareto_set = keep.iter().map(|&i| rejected[i]).collect();
    let pareto_tst_risks = keep.iter().map(|&i| tst_risks[i].clone()).collect();

    Ok(TestingOutcome {
        status: if j == 0 { TestingStatus::NoValidConfiguration } else { TestingStatus::Valid },
        loss_names: names.iter().map(|s| s.to_string()).collect(),
        n_opt: opt.len(),
        n_tst: tst.len(),
        front_size: front.len(),
        sorted,
        p_opt,
        p_tst,
        j,
        rejected,
        pareto_set,
        pareto_tst_risks,
    })
}

/// Seeded random partition; the first part gets `round(ratio · n)` samples.
pub fn split_indices(n: usize, ratio: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let n_opt = (ratio * n as f64).round() as usize;
    if !(ratio > 0.0 && ratio < 1.0) || n_opt == 0 || n_opt >= n {
        return Err(Error::Contract(format!("cannot split {n} samples with ratio {ratio}")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng_for(seed, STREAM_SPLIT, 0));
    let mut opt = idx[..n_opt].to_vec();
    let mut tst = idx[n_opt..].to_vec();
    opt.sort_unstable();
    tst.sort_unstable();
    Ok((opt, tst))
}

/// Unknown source count: MC and MD constrained (bounded by `K_max`), FA and PA free.
pub fn pareto_testing(
    curves: &[SampleCurves],
    grid: &ConfigGrid,
    alpha_mc: f64,
    alpha_md: f64,
    delta: f64,
    split_ratio: f64,
    seed: u64,
) -> Result<TestingOutcome> {
    if !grid.with_beta() {
        return Err(Error::Contract("unknown-count testing needs a detection threshold dimension".into()));
    }
    let b = grid.n_lambda() as f64;
    let params = TestingParams {
        constraints: vec![
            RiskConstraint { loss: 0, alpha: alpha_mc, lower: 0.0, upper: b },
            RiskConstraint { loss: 1, alpha: alpha_md, lower: 0.0, upper: b },
        ],
        free: vec![2, 3],
        delta,
    };
    let (opt, tst) = split_indices(curves.len(), split_ratio, seed)?;
    run_pareto_testing(&CurveLossModel { curves, grid }, &opt, &tst, &params)
}

/// Known source count `K` (the grid's threshold count): summed MC bounded
/// by `K` is constrained, PA is free.
pub fn pareto_testing_known(curves: &[SampleCurves], grid: &ConfigGrid, alpha_mc: f64, delta: f64, split_ratio: f64, seed: u64) -> Result<TestingOutcome> {
    if grid.with_beta() {
        return Err(Error::Contract("known-count testing takes region thresholds only".into()));
    }
    let params = TestingParams {
        constraints: vec![RiskConstraint { loss: 0, alpha: alpha_mc, lower: 0.0, upper: grid.n_lambda() as f64 }],
        free: vec![1],
        delta,
    };
    let (opt, tst) = split_indices(curves.len(), split_ratio, seed)?;
    run_pareto_testing(&CurveLossModel { curves, grid }, &opt, &tst, &params)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Criterion {
    MinFa,
    MinPa,
    Weighted { fa: f64, pa: f64 },
}

/// Configuration of `Λ*` minimising the criterion on test-split risks; ties
/// go to the smallest configuration index (lexicographically smallest).
pub fn select_operating_point(outcome: &TestingOutcome, criterion: Criterion) -> Result<usize> {
    if outcome.status == TestingStatus::NoValidConfiguration || outcome.pareto_set.is_empty() {
        return Err(Error::NoValidConfiguration);
    }
    let col = |name: &str| outcome.loss_names.iter().position(|n| n == name);
    let (w_fa, w_pa) = match criterion {
        Criterion::MinFa => (1.0, 0.0),
        Criterion::MinPa => (0.0, 1.0),
        Criterion::Weighted { fa, pa } => (fa, pa),
    };
    let (fa, pa) = (col("fa"), col("pa"));
    if (w_fa != 0.0 && fa.is_none()) || (w_pa != 0.0 && pa.is_none()) {
        return Err(Error::Contract(format!("criterion {criterion:?} needs a loss this outcome does not have")));
    }
    let score = |r: &[f64]| fa.map_or(0.0, |i| w_fa * r[i]) + pa.map_or(0.0, |i| w_pa * r[i]);
    let mut best: Option<(f64, usize)> = None;
    for (c, r) in outcome.pareto_set.iter().zip(&outcome.pareto_tst_risks) {
        let s = score(r);
        if best.is_none_or(|(b, bc)| s < b || (s == b && *c < bc)) {
            best = Some((s, *c));
        }
    }
    Ok(best.expect("non-empty set").1)
}
