//! Monte Carlo MSE studies, rate fitting and worst-case sweeps.
//!
//! Replication `r` at sample size `n` draws its `P` sample from the seed
//! `base_seed ^ mix64(n ^ mix64(r))` and its `Q` sample from
//! `mix64(seed ^ STREAM_Q)`, so rows never depend on which other `n` or
//! replications are run, or in what order.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::densities::{
    alternating_signs, exact_product, make_worst_case, orthant_strength, random_signs, sample,
    validate_worst_case, ReferenceDensity, Regime, Truncation,
};
use crate::error::{Error, Result};
use crate::estimators::{
    distance_sq, inner_product_from_samples, norm_sq, select_zeta_closed_form, select_zeta_lecam,
    EstimateKind,
};
use crate::frequency::FrequencySet;
use crate::sum::{compensated_sum, Compensated};
use crate::theory::tv_bound;
use crate::weights::WeightFamily;

/// Stream tag separating the `Q` sample from the `P` sample.
pub const STREAM_Q: u64 = 0x51_5f_73_61_6d_70_6c_65;

/// SplitMix64 output function applied to `x + golden gamma`.
pub fn mix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn replication_seed(base_seed: u64, n: u64, rep: u64) -> u64 {
    base_seed ^ mix64(n ^ mix64(rep))
}

/// How the truncation radius is chosen at each `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ZetaRule {
    ClosedForm,
    Lecam,
    Fixed(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub p: ReferenceDensity,
    pub q: ReferenceDensity,
    pub a: WeightFamily,
    /// Smoothness class; only the truncation rules read it.
    pub b: WeightFamily,
    pub n_grid: Vec<u64>,
    pub replications: usize,
    pub zeta_rule: ZetaRule,
    pub base_seed: u64,
    pub kind: EstimateKind,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Config("replications must be >= 1".to_string()));
        }
        if self.n_grid.is_empty() {
            return Err(Error::Config("empty sample-size grid".to_string()));
        }
        if self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(
                "sample-size grid must be strictly increasing".to_string(),
            ));
        }
        let min_n = match self.kind {
            EstimateKind::InnerProduct => 1,
            _ => 2,
        };
        if self.n_grid[0] < min_n {
            return Err(Error::SampleSize {
                needed: min_n as usize,
                got: self.n_grid[0] as usize,
            });
        }
        if self.p.dimension() != self.q.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.p.dimension(),
                got: self.q.dimension(),
            });
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.p.dimension()
    }

    /// Exact value of the estimand, untruncated.
    pub fn truth(&self) -> Result<f64> {
        let prod = |x: &ReferenceDensity, y: &ReferenceDensity| {
            exact_product(x, y, &self.a, Truncation::Unbounded)
        };
        let v = match self.kind {
            EstimateKind::InnerProduct => prod(&self.p, &self.q)?,
            EstimateKind::NormSq => prod(&self.p, &self.p)?,
            EstimateKind::DistanceSq => {
                prod(&self.p, &self.p)? + prod(&self.q, &self.q)? - 2.0 * prod(&self.p, &self.q)?
            }
        };
        if !v.is_finite() {
            return Err(Error::Inconsistent(format!("estimand is {v}")));
        }
        Ok(v)
    }

    pub fn zeta_for(&self, n: u64) -> Result<u64> {
        match self.zeta_rule {
            ZetaRule::Fixed(z) => Ok(z),
            ZetaRule::ClosedForm => {
                select_zeta_closed_form(self.a.kind(), self.b.kind(), self.dimension(), n)
            }
            ZetaRule::Lecam => Ok(select_zeta_lecam(&self.b, n, self.dimension())?.zeta),
        }
    }
}

/// Everything a replication at one `n` needs.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyPoint {
    pub n: u64,
    pub zeta: u64,
    pub set: FrequencySet,
    pub truth: f64,
}

/// Resolves the truncation set and truth for every `n` in the grid.
pub fn prepare_study(config: &ExperimentConfig) -> Result<Vec<StudyPoint>> {
    config.validate()?;
    let truth = config.truth()?;
    config
        .n_grid
        .iter()
        .map(|&n| {
            let zeta = config.zeta_for(n)?;
            let set = config.a.truncation_set(zeta, config.dimension())?;
            Ok(StudyPoint {
                n,
                zeta,
                set,
                truth,
            })
        })
        .collect()
}

/// The estimate from replication `rep` at `point`.
pub fn replicate(config: &ExperimentConfig, point: &StudyPoint, rep: u64) -> Result<f64> {
    let seed = replication_seed(config.base_seed, point.n, rep);
    let n = point.n as usize;
    let x = sample(&config.p, n, seed)?;
    let draw_y = || sample(&config.q, n, mix64(seed ^ STREAM_Q));
    let report = match config.kind {
        EstimateKind::InnerProduct => {
            inner_product_from_samples(&x, &draw_y()?, &config.a, &point.set)?
        }
        EstimateKind::NormSq => norm_sq(&x, &config.a, &point.set)?,
        EstimateKind::DistanceSq => distance_sq(&x, &draw_y()?, &config.a, &point.set)?,
    };
    Ok(report.value)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExperimentRow {
    pub n: u64,
    pub zeta: u64,
    pub truth: f64,
    pub mean_estimate: f64,
    pub mse: f64,
    /// Replication SD of the squared error over `sqrt(reps)`; 0 with one
    /// replication.
    pub mse_stderr: f64,
    /// Standard error of `mean_estimate`.
    pub estimate_stderr: f64,
    pub single_rep: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RateFit {
    pub slope: f64,
    pub slope_stderr: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExperimentResult {
    pub rows: Vec<ExperimentRow>,
    /// `None` with fewer than two rows or a zero MSE.
    pub fit: Option<RateFit>,
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / m;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean)));
    (mean, (ss / (m - 1.0)).sqrt() / m.sqrt())
}

/// Row for one `n` from its estimates in replication order.
pub fn summarize_point(point: &StudyPoint, estimates: &[f64]) -> ExperimentRow {
    let sq: Vec<f64> = estimates
        .iter()
        .map(|e| (e - point.truth) * (e - point.truth))
        .collect();
    let (mean_estimate, estimate_stderr) = mean_and_stderr(estimates);
    let (mse, mse_stderr) = mean_and_stderr(&sq);
    ExperimentRow {
        n: point.n,
        zeta: point.zeta,
        truth: point.truth,
        mean_estimate,
        mse,
        mse_stderr,
        estimate_stderr,
        single_rep: estimates.len() == 1,
    }
}

pub fn summarize(rows: Vec<ExperimentRow>) -> ExperimentResult {
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.mse)).collect();
    let fit = if pts.len() >= 2 {
        fit_rate(&pts).ok()
    } else {
        None
    };
    ExperimentResult { rows, fit }
}

/// Serial study. Replications run in index order.
pub fn run_mse_study(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let points = prepare_study(config)?;
    let mut rows = Vec::with_capacity(points.len());
    for point in &points {
        let estimates = (0..config.replications as u64)
            .map(|r| replicate(config, point, r))
            .collect::<Result<Vec<_>>>()?;
        rows.push(summarize_point(point, &estimates));
    }
    Ok(summarize(rows))
}

/// Least-squares fit of `ln mse` on `ln n`.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 2 {
        return Err(Error::Fit(format!(
            "need at least 2 points, got {}",
            points.len()
        )));
    }
    if let Some(&(n, v)) = points
        .iter()
        .find(|&&(n, v)| v.is_nan() || v <= 0.0 || n.is_nan() || n <= 0.0)
    {
        return Err(Error::Fit(format!("nonpositive point ({n}, {v})")));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let m = xs.len() as f64;
    let mx = compensated_sum(xs.iter().copied()) / m;
    let my = compensated_sum(ys.iter().copied()) / m;
    let sxx = compensated_sum(xs.iter().map(|x| (x - mx) * (x - mx)));
    if sxx == 0.0 {
        return Err(Error::Fit("all sample sizes are equal".to_string()));
    }
    let sxy = compensated_sum(xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)));
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_stderr = if points.len() == 2 {
        0.0
    } else {
        let mut ssr = Compensated::default();
        for (x, y) in xs.iter().zip(&ys) {
            let r = y - (intercept + slope * x);
            ssr.add(r * r);
        }
        (ssr.value() / (m - 2.0) / sxx).sqrt()
    };
    Ok(RateFit {
        slope,
        slope_stderr,
        intercept,
    })
}

/// Number of random sign patterns tried per `zeta` in a sweep.
pub const RANDOM_SIGN_DRAWS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepRow {
    pub zeta: u64,
    pub regime: Regime,
    /// Alternating signs and every random draw give valid densities.
    pub valid: bool,
    pub valid_alternating: bool,
    pub valid_random: usize,
    pub c: f64,
    /// `c sqrt(2) zeta^D`.
    pub analytic_level: f64,
    /// `A/B` (smooth) or `A/zeta^{2D}` (unsmooth), over `{1..zeta}^D`.
    pub gap: f64,
    pub tv_bound: f64,
    /// All four claims hold for the alternating member; `None` when invalid.
    pub claims_hold: Option<bool>,
    /// First construction error, if any.
    pub error: Option<alloc::string::String>,
}

/// Tries the worst-case family at each `zeta` with alternating signs and
/// [`RANDOM_SIGN_DRAWS`] seeded random sign patterns.
pub fn run_worst_case_sweep(
    b: &WeightFamily,
    a: &WeightFamily,
    dimension: usize,
    zeta_grid: &[u64],
    n: u64,
    regime: Regime,
    tau_seed: u64,
) -> Result<Vec<SweepRow>> {
    if zeta_grid.is_empty() {
        return Err(Error::Config("empty truncation grid".to_string()));
    }
    let mut rows = Vec::with_capacity(zeta_grid.len());
    for &zeta in zeta_grid {
        rows.push(sweep_row(b, a, dimension, zeta, n, regime, tau_seed));
    }
    Ok(rows)
}

fn sweep_row(
    b: &WeightFamily,
    a: &WeightFamily,
    d: usize,
    zeta: u64,
    n: u64,
    regime: Regime,
    tau_seed: u64,
) -> SweepRow {
    let mut row = SweepRow {
        zeta,
        regime,
        valid: false,
        valid_alternating: false,
        valid_random: 0,
        c: f64::NAN,
        analytic_level: f64::NAN,
        gap: f64::NAN,
        tv_bound: f64::NAN,
        claims_hold: None,
        error: None,
    };
    let theory = || -> Result<(f64, f64, f64)> {
        let a_sum = orthant_strength(a, zeta, d)?;
        let b_sum = orthant_strength(b, zeta, d)?;
        let (c, gap) = match regime {
            Regime::Smooth => (1.0 / b_sum.sqrt(), a_sum / b_sum),
            Regime::Unsmooth => (
                (zeta as f64).powi(-(d as i32)),
                a_sum / (zeta as f64).powi(2 * d as i32),
            ),
        };
        Ok((c, gap, tv_bound(n, c, zeta, d)?))
    };
    match theory() {
        Ok((c, gap, tv)) => {
            row.c = c;
            row.analytic_level = c * core::f64::consts::SQRT_2 * (zeta as f64).powi(d as i32);
            row.gap = gap;
            row.tv_bound = tv;
        }
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    }
    match make_worst_case(zeta, &alternating_signs(zeta, d), b, d, regime) {
        Ok(wc) => {
            row.valid_alternating = true;
            row.claims_hold = Some(
                validate_worst_case(&wc.density, a, b, zeta, regime, n)
                    .map(|r| r.passed())
                    .unwrap_or(false),
            );
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    for k in 0..RANDOM_SIGN_DRAWS as u64 {
        let tau = random_signs(zeta, d, mix64(tau_seed ^ mix64(zeta ^ mix64(k))));
        match make_worst_case(zeta, &tau, b, d, regime) {
            Ok(_) => row.valid_random += 1,
            Err(e) => {
                if row.error.is_none() {
                    row.error = Some(e.to_string());
                }
            }
        }
    }
    row.valid = row.valid_alternating && row.valid_random == RANDOM_SIGN_DRAWS;
    row
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::make_trig_density;
    use crate::frequency::{Frequency, SupportRule};
    use alloc::vec;
    use approx::assert_relative_eq;
    use core::f64::consts::SQRT_2;

    fn cosine_config(n_grid: Vec<u64>, reps: usize) -> ExperimentConfig {
        let p = make_trig_density(1, vec![(Frequency::new(vec![1]), 1.0 / SQRT_2)]).unwrap();
        ExperimentConfig {
            p: p.clone(),
            q: p,
            a: WeightFamily::constant().with_rule(SupportRule::ExcludeOrigin),
            b: WeightFamily::sobolev(1.0).unwrap(),
            n_grid,
            replications: reps,
            zeta_rule: ZetaRule::Fixed(1),
            base_seed: 42,
            kind: EstimateKind::InnerProduct,
        }
    }

    #[test]
    fn seeds_are_stable_and_distinct() {
        assert_eq!(replication_seed(5, 100, 3), replication_seed(5, 100, 3));
        assert_ne!(replication_seed(5, 100, 3), replication_seed(5, 100, 4));
        assert_ne!(replication_seed(5, 100, 3), replication_seed(5, 101, 3));
        assert_ne!(mix64(0), 0);
    }

    #[test]
    fn single_replication() {
        let r = run_mse_study(&cosine_config(vec![100], 1)).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert!(r.rows[0].single_rep);
        assert_eq!(r.rows[0].mse_stderr, 0.0);
        assert!(r.fit.is_none());
    }

    #[test]
    fn deterministic_and_extensible() {
        let c = cosine_config(vec![50, 200], 20);
        let r1 = run_mse_study(&c).unwrap();
        assert_eq!(r1, run_mse_study(&c).unwrap());
        // adding an n leaves existing rows alone
        let r2 = run_mse_study(&cosine_config(vec![50, 100, 200], 20)).unwrap();
        assert_eq!(r1.rows[0], r2.rows[0]);
        assert_eq!(r1.rows[1], r2.rows[2]);
    }

    #[test]
    fn config_errors() {
        assert!(matches!(
            run_mse_study(&cosine_config(vec![100], 0)),
            Err(Error::Config(_))
        ));
        assert!(run_mse_study(&cosine_config(vec![100, 100], 2)).is_err());
        let mut c = cosine_config(vec![1, 2], 2);
        c.kind = EstimateKind::NormSq;
        assert!(matches!(run_mse_study(&c), Err(Error::SampleSize { .. })));
    }

    #[test]
    fn truths() {
        let mut c = cosine_config(vec![10], 1);
        assert_relative_eq!(c.truth().unwrap(), 0.5);
        c.kind = EstimateKind::DistanceSq;
        assert!(c.truth().unwrap().abs() < 1e-15);
        c.q = ReferenceDensity::uniform(1).unwrap();
        assert_relative_eq!(c.truth().unwrap(), 0.5);
    }

    #[test]
    fn fit_examples() {
        let pts: Vec<(f64, f64)> = [10.0, 100.0, 1000.0, 1e4]
            .iter()
            .map(|&n| (n, 10.0 / n))
            .collect();
        let f = fit_rate(&pts).unwrap();
        assert_relative_eq!(f.slope, -1.0, max_relative = 1e-12);
        assert!(f.slope_stderr < 1e-12);
        let f = fit_rate(&[(10.0, 1.0), (100.0, 0.01)]).unwrap();
        assert_relative_eq!(f.slope, -2.0, max_relative = 1e-12);
        assert_eq!(f.slope_stderr, 0.0);
        assert!(fit_rate(&[(10.0, 1.0)]).is_err());
        assert!(fit_rate(&[(10.0, 1.0), (100.0, 0.0)]).is_err());
    }

    #[test]
    fn fit_synthetic_noise() {
        let eps = [0.05, -0.05, 0.03, -0.02, 0.04, -0.05, 0.01, 0.05];
        let pts: Vec<(f64, f64)> = eps
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let n = 100.0 * 2f64.powi(i as i32);
                (n, n.powf(-0.571) * (1.0 + e))
            })
            .collect();
        let f = fit_rate(&pts).unwrap();
        assert!((-0.70..=-0.45).contains(&f.slope), "{}", f.slope);
    }

    #[test]
    fn sweep_examples() {
        let s1 = WeightFamily::sobolev(1.0).unwrap();
        let one = WeightFamily::constant();
        let rows = run_worst_case_sweep(
            &s1,
            &one,
            1,
            &(1..=8).collect::<Vec<_>>(),
            1000,
            Regime::Smooth,
            9,
        )
        .unwrap();
        for r in &rows {
            assert_eq!(r.valid, r.zeta >= 5, "zeta {}", r.zeta);
            if r.valid {
                assert_eq!(r.claims_hold, Some(true));
            }
        }
        let rows =
            run_worst_case_sweep(&one, &one, 1, &[1, 2, 3], 1000, Regime::Smooth, 9).unwrap();
        assert!(rows.iter().all(|r| !r.valid));
        let rows = run_worst_case_sweep(&s1, &one, 1, &[1, 2], 1000, Regime::Unsmooth, 9).unwrap();
        assert!(rows.iter().all(|r| !r.valid));
        assert_relative_eq!(rows[1].analytic_level, SQRT_2, max_relative = 1e-15);
    }
}
