//! Replications spread over a rayon pool. Seeds depend only on
//! `(base_seed, n, rep)` and results are collected in replication order, so
//! the output matches [`run_mse_study`](quadfun_core::harness::run_mse_study)
//! bit for bit.

use quadfun_core::harness::{
    prepare_study, replicate, summarize, summarize_point, ExperimentConfig, ExperimentResult,
};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Worker cap from `QUADFUN_THREADS`; unset, unparsable or 0 means automatic.
pub fn threads_from_env() -> Option<usize> {
    std::env::var("QUADFUN_THREADS")
        .ok()?
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
}

pub fn run_mse_study_parallel(
    config: &ExperimentConfig,
    threads: Option<usize>,
) -> Result<ExperimentResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Usage(format!("thread pool: {e}")))?;
    let points = prepare_study(config)?;
    let rows = pool.install(|| {
        points
            .iter()
            .map(|point| {
                let estimates = (0..config.replications as u64)
                    .into_par_iter()
                    .map(|rep| replicate(config, point, rep))
                    .collect::<quadfun_core::Result<Vec<f64>>>()?;
                Ok(summarize_point(point, &estimates))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(summarize(rows))
}
