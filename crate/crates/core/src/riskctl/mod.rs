//! Risk control: losses, CRC threshold selection, p-values, FWER
//! procedures, Pareto fronts and Pareto-Testing.

mod config;
mod crc;
mod fwer;
mod losses;
mod pareto;
mod pvalue;
mod sample;
mod shift;
mod table;
mod testing;

pub use config::{linspace, ConfigGrid, ConfigVector};
pub use crc::{crc_select, crc_select_thresholds, CrcResult};
pub use fwer::{bonferroni, fixed_sequence};
pub use losses::{loss_fa, loss_mc_known, loss_mc_unknown, loss_md, loss_pa, Losses};
pub use pareto::{dominates, pareto_front};
pub use pvalue::{aggregate_pvalue, binomial_pvalue, wsr_pvalue};
pub use sample::{CalibrationSample, SampleCurves, SampleField};
pub use shift::{quantile, shift_normalize, QuantilePool, ShiftStats};
pub use table::{LossKind, LossRow, LossTable};
pub use testing::{
    pareto_testing, pareto_testing_known, run_pareto_testing, select_operating_point, split_indices, Criterion, CurveLossModel,
    LossModel, RiskConstraint, TestingOutcome, TestingParams, TestingStatus,
};
