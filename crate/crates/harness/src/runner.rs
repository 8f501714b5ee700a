use std::collections::BTreeMap;
use std::time::Instant;

use loctime_core::chain::{ChainSpec, MarkovShift};
use loctime_core::check_aperiodicity;
use rayon::prelude::*;

use crate::checks::{run_check, Context, APERIODICITY_SCAN};
use crate::config::{CheckName, ExperimentConfig};
use crate::report::{CheckRecord, Environment, Status, VerificationReport};
use crate::{Format, HarnessError};

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub format: Format,
    /// Worker threads; `None` uses rayon's default.
    pub threads: Option<usize>,
}

pub fn load_chain(config: &ExperimentConfig) -> Result<MarkovShift<f64>, HarnessError> {
    Ok(ChainSpec::load(&config.chain_file)?.build()?)
}

/// Selected checks plus the spectral check when σ² is needed, mapped to
/// the selected checks that pulled them in.
pub fn plan(config: &ExperimentConfig) -> BTreeMap<CheckName, Vec<CheckName>> {
    let mut plan: BTreeMap<CheckName, Vec<CheckName>> = config.checks.iter().map(|&c| (c, Vec::new())).collect();
    if !plan.contains_key(&CheckName::Spectral) {
        let needing: Vec<CheckName> = plan.keys().copied().filter(|c| c.needs_sigma2()).collect();
        if !needing.is_empty() {
            plan.insert(CheckName::Spectral, needing);
        }
    }
    plan
}

/// Validate `config`, run its checks in dependency order and write
/// `report.json` to the output directory.
pub fn run_experiment(config: &ExperimentConfig, opts: RunOptions) -> Result<VerificationReport, HarnessError> {
    let start = Instant::now();
    config.validate()?;
    let shift = load_chain(config)?;
    let plan = plan(config);

    let distributional: Vec<CheckName> = plan.keys().copied().filter(|c| c.is_distributional()).collect();
    if !distributional.is_empty() {
        let scan = check_aperiodicity(&shift, APERIODICITY_SCAN)
            .map_err(|e| HarnessError::Check { check: CheckName::Aperiodicity, message: e.to_string() })?;
        if !scan.is_aperiodic {
            return Err(HarnessError::AperiodicityRequired {
                checks: distributional,
                rho: 1.0 - scan.min_gap,
                offending_t: scan.offending_t,
            });
        }
    }

    std::fs::create_dir_all(&config.output_dir)
        .map_err(|e| HarnessError::Io(format!("{}: {e}", config.output_dir.display())))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads.unwrap_or(0))
        .build()
        .map_err(|e| HarnessError::Io(e.to_string()))?;

    let record = |name: CheckName, ctx: &Context| -> Result<(CheckName, CheckRecord), HarnessError> {
        let mut outcome = run_check(name, ctx)?;
        // JSON has no NaN; a fit on two points has no standard error.
        outcome.metrics.retain(|_, v| v.is_finite());
        let record = CheckRecord {
            name,
            status: if outcome.passed { Status::Pass } else { Status::Fail },
            metrics: outcome.metrics,
            artifacts: outcome.artifacts,
            required_by: plan[&name].clone(),
        };
        Ok((name, record))
    };

    // Spectral first; everything after it only reads σ² and the chain.
    let mut ctx = Context { shift: &shift, config, out: &config.output_dir, format: opts.format, sigma2: None };
    let mut records: BTreeMap<CheckName, CheckRecord> = BTreeMap::new();
    if plan.contains_key(&CheckName::Spectral) {
        let (name, r) = pool.install(|| record(CheckName::Spectral, &ctx))?;
        ctx.sigma2 = r.metrics.get("sigma2").copied();
        records.insert(name, r);
    }
    let rest: Vec<CheckName> = plan.keys().copied().filter(|&c| c != CheckName::Spectral).collect();
    let done: Vec<_> = pool.install(|| rest.par_iter().map(|&c| record(c, &ctx)).collect());
    for r in done {
        let (name, r) = r?;
        records.insert(name, r);
    }

    let report = VerificationReport {
        checks: CheckName::ALL.iter().map(|&c| records.remove(&c).unwrap_or_else(|| CheckRecord::skipped(c))).collect(),
        environment: Environment {
            seed: config.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time: start.elapsed().as_secs_f64(),
            threads: pool.current_num_threads(),
        },
    };
    report.write_json(config.output_dir.join("report.json"))?;
    Ok(report)
}
