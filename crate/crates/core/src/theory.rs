//! Error bounds, minimax rate exponents and the lower-bound quantities.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::densities::Regime;
use crate::error::{Error, Result};
use crate::estimators::select_zeta_lecam;
use crate::frequency::{check_dimension, FrequencySet, DEFAULT_MAX_DIMENSION};
use crate::weights::{
    inverse_fourth_sum, is_consistent_pair, strength_sum, tail_sup_ratio, variance_functional,
    WeightFamily, WeightKind,
};

/// Constant in the smooth-branch test `B_zeta >= kappa zeta^{2D}`.
pub const DEFAULT_KAPPA: f64 = 2.0;

/// `||P||_b ||Q||_b sup_{z notin Z_zeta} b_z^2 / a_z^2`. Infinite for an
/// inconsistent pair, whatever the norms.
pub fn bias_bound(
    norm_b_p: f64,
    norm_b_q: f64,
    a: &WeightFamily,
    b: &WeightFamily,
    zeta: u64,
    dimension: usize,
) -> Result<f64> {
    check_norms(&[norm_b_p, norm_b_q])?;
    let tail = tail_sup_ratio(a, b, zeta, dimension)?;
    if tail.inconsistent {
        return Ok(f64::INFINITY);
    }
    if norm_b_p == 0.0 || norm_b_q == 0.0 {
        return Ok(0.0);
    }
    Ok(norm_b_p * norm_b_q * tail.value)
}

fn check_norms(norms: &[f64]) -> Result<()> {
    match norms.iter().find(|v| v.is_nan() || **v < 0.0) {
        Some(&value) => Err(Error::Domain { value }),
        None => Ok(()),
    }
}

/// Norms entering the variance and MSE bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Norms {
    /// `||P||_2`, the full `L^2` norm of the density.
    pub l2_p: f64,
    pub l2_q: f64,
    pub b_p: f64,
    pub b_q: f64,
    pub a_p: f64,
    pub a_q: f64,
}

impl Norms {
    /// Every norm equal to `v`.
    pub fn uniform(v: f64) -> Self {
        Norms {
            l2_p: v,
            l2_q: v,
            b_p: v,
            b_q: v,
            a_p: v,
            a_q: v,
        }
    }

    /// `Q` replaced by `P`.
    pub fn collapsed(&self) -> Self {
        Norms {
            l2_q: self.l2_p,
            b_q: self.b_p,
            a_q: self.a_p,
            ..*self
        }
    }

    fn check(&self) -> Result<()> {
        check_norms(&[self.l2_p, self.l2_q, self.b_p, self.b_q, self.a_p, self.a_q])
    }
}

/// Whether the MSE bound is for a product of two distributions or, with `Q`
/// collapsed onto `P`, for a squared norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BoundMode {
    #[default]
    Product,
    Norm,
}

/// The three variance terms, kept apart for reporting.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VarianceTerms {
    pub quadratic: f64,
    pub cross: f64,
    pub linear: f64,
}

impl VarianceTerms {
    pub fn total(&self) -> f64 {
        self.quadratic + self.cross + self.linear
    }
}

pub fn variance_terms(
    norms: &Norms,
    a: &WeightFamily,
    b: &WeightFamily,
    set: &FrequencySet,
    n: u64,
) -> Result<VarianceTerms> {
    norms.check()?;
    if n == 0 {
        return Err(Error::SampleSize { needed: 1, got: 0 });
    }
    let n = n as f64;
    let linear = 2.0 * norms.a_p.powi(2) * norms.a_q.powi(2) / n;
    if set.is_empty() {
        return Ok(VarianceTerms {
            quadratic: 0.0,
            cross: 0.0,
            linear,
        });
    }
    let quadratic = 2.0 * norms.l2_p * norms.l2_q / (n * n) * inverse_fourth_sum(a, set)?;
    let mixed = norms.b_q.powi(2) * norms.b_p + norms.b_p.powi(2) * norms.b_q;
    let cross = if mixed == 0.0 {
        0.0
    } else {
        mixed / n * variance_functional(a, b, set)?
    };
    Ok(VarianceTerms {
        quadratic,
        cross,
        linear,
    })
}

/// Variance bound for `S_hat_Z` from `n` samples of each distribution.
pub fn variance_bound(
    norms: &Norms,
    a: &WeightFamily,
    b: &WeightFamily,
    set: &FrequencySet,
    n: u64,
) -> Result<f64> {
    Ok(variance_terms(norms, a, b, set, n)?.total())
}

/// Squared bias plus variance. The bias term uses the tail outside the ball
/// of radius `zeta`.
pub fn mse_bound(
    norms: &Norms,
    a: &WeightFamily,
    b: &WeightFamily,
    set: &FrequencySet,
    zeta: u64,
    n: u64,
    mode: BoundMode,
) -> Result<f64> {
    let norms = match mode {
        BoundMode::Product => *norms,
        BoundMode::Norm => norms.collapsed(),
    };
    let bias = bias_bound(norms.b_p, norms.b_q, a, b, zeta, set.dimension())?;
    if bias.is_infinite() {
        return Ok(f64::INFINITY);
    }
    Ok(bias * bias + variance_bound(&norms, a, b, set, n)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RateRegime {
    Parametric,
    Nonparametric,
    Inconsistent,
    UpperBoundOnly,
}

impl RateRegime {
    pub fn name(self) -> &'static str {
        match self {
            RateRegime::Parametric => "parametric",
            RateRegime::Nonparametric => "nonparametric",
            RateRegime::Inconsistent => "inconsistent",
            RateRegime::UpperBoundOnly => "upper_bound_only",
        }
    }
}

/// What the rate exponent is a power of.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RateScale {
    N,
    LogN,
}

/// Minimax MSE rate `scale^exponent`, up to logarithmic factors.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RatePrediction {
    /// `+inf` when the estimand may be infinite.
    pub exponent: f64,
    pub regime: RateRegime,
    pub scale: RateScale,
    pub log_factor_note: String,
}

impl RatePrediction {
    fn n_power(exponent: f64) -> Self {
        let exponent = exponent.max(-1.0);
        let regime = if exponent == -1.0 {
            RateRegime::Parametric
        } else {
            RateRegime::Nonparametric
        };
        RatePrediction {
            exponent,
            regime,
            scale: RateScale::N,
            log_factor_note: "up to log n factors".to_string(),
        }
    }

    fn inconsistent() -> Self {
        RatePrediction {
            exponent: f64::INFINITY,
            regime: RateRegime::Inconsistent,
            scale: RateScale::N,
            log_factor_note: "estimand may be infinite".to_string(),
        }
    }

    fn log_power(exponent: f64) -> Self {
        RatePrediction {
            exponent,
            regime: RateRegime::UpperBoundOnly,
            scale: RateScale::LogN,
            log_factor_note: "upper bound only, up to log log n factors".to_string(),
        }
    }

    pub fn is_inconsistent(&self) -> bool {
        self.regime == RateRegime::Inconsistent
    }
}

/// Row/column of the rate table. A zero parameter flattens any radial net to
/// the constant one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Cell {
    Flat,
    Log,
    Sobolev,
    Exponential,
    Gaussian,
}

fn cell(kind: &WeightKind) -> Result<Option<(Cell, f64)>> {
    let (c, p) = match *kind {
        WeightKind::Constant => (Cell::Flat, 0.0),
        WeightKind::Logarithmic(s) => (Cell::Log, s),
        WeightKind::Sobolev(s) => (Cell::Sobolev, s),
        WeightKind::Exponential(s) => (Cell::Exponential, s),
        WeightKind::Gaussian(s) => (Cell::Gaussian, s),
        WeightKind::Sinc(_) => return Ok(None),
        WeightKind::Custom(_) => {
            return Err(Error::Config(
                "no rate for custom weight tables".to_string(),
            ))
        }
    };
    Ok(Some(if p == 0.0 { (Cell::Flat, 0.0) } else { (c, p) }))
}

/// Minimax rate for estimating `<P, Q>_a` over `{||P||_b, ||Q||_b <= 1}`.
///
/// Rows are `a`, columns `b`. A constant net is Sobolev of order 0, except that
/// against a logarithmic `b` the log/log cell with `s = 0` applies. Sinc on
/// either side gives the parametric rate.
pub fn minimax_rate(a: &WeightKind, b: &WeightKind, dimension: usize) -> Result<RatePrediction> {
    check_dimension(dimension, DEFAULT_MAX_DIMENSION)?;
    let (ra, rb) = match (cell(a)?, cell(b)?) {
        (Some(ra), Some(rb)) => (ra, rb),
        _ => return Ok(RatePrediction::n_power(-1.0)),
    };
    if !is_consistent_pair(a, b) {
        return Ok(RatePrediction::inconsistent());
    }
    let ((ca, s), (cb, t)) = (ra, rb);
    let d = dimension as f64;
    Ok(match (ca, cb) {
        (Cell::Flat, Cell::Flat) => RatePrediction::n_power(0.0),
        (Cell::Flat | Cell::Log, Cell::Log) => RatePrediction::log_power(4.0 * (s - t)),
        (Cell::Flat | Cell::Sobolev, Cell::Sobolev) => {
            RatePrediction::n_power(8.0 * (s - t) / (4.0 * t + d))
        }
        (Cell::Log, Cell::Sobolev) => RatePrediction::n_power(-8.0 * t / (4.0 * t + d)),
        (Cell::Flat, Cell::Exponential | Cell::Gaussian) => RatePrediction::n_power(-1.0),
        (x, y) if x == y => RatePrediction::n_power(2.0 * (s - t) / t),
        (x, y) if x < y => RatePrediction::n_power(-1.0),
        _ => RatePrediction::inconsistent(),
    })
}

/// Lower bound on the minimax MSE and the quantities behind it.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LowerBound {
    pub value: f64,
    pub branch: Regime,
    /// Le Cam truncation.
    pub zeta: u64,
    /// `A` at the truncation the branch used.
    pub a_sum: f64,
    /// `B_zeta` at the Le Cam truncation.
    pub b_sum: f64,
    pub monotone: bool,
}

pub fn lower_bound_rate(
    a: &WeightFamily,
    b: &WeightFamily,
    n: u64,
    dimension: usize,
) -> Result<LowerBound> {
    lower_bound_rate_with(a, b, n, dimension, DEFAULT_KAPPA)
}

/// With `zeta` from the Le Cam rule, the smooth branch
/// `B_zeta >= kappa zeta^{2D}` gives `max{(A/B)^2, 1/n}`; otherwise
/// `max{A_{ceil(n^{2/(3D)})}^2 / n^{8/3}, 1/n}`. `A` and `B` are summed over
/// each net's own support.
pub fn lower_bound_rate_with(
    a: &WeightFamily,
    b: &WeightFamily,
    n: u64,
    dimension: usize,
    kappa: f64,
) -> Result<LowerBound> {
    if n < 2 {
        return Err(Error::SampleSize {
            needed: 2,
            got: n as usize,
        });
    }
    let sol = select_zeta_lecam(b, n, dimension)?;
    let d = dimension as f64;
    let nf = n as f64;
    let b_sum = sol.strength;
    let smooth = b_sum >= kappa * (sol.zeta as f64).powf(2.0 * d);
    let (value, a_sum, branch) = if smooth {
        let a_sum = strength_sum(a, sol.zeta, dimension)?;
        ((a_sum / b_sum).powi(2).max(1.0 / nf), a_sum, Regime::Smooth)
    } else {
        let zeta_u = nf.powf(2.0 / (3.0 * d)).ceil() as u64;
        let a_sum = strength_sum(a, zeta_u, dimension)?;
        (
            (a_sum * a_sum / nf.powf(8.0 / 3.0)).max(1.0 / nf),
            a_sum,
            Regime::Unsmooth,
        )
    };
    Ok(LowerBound {
        value,
        branch,
        zeta: sol.zeta,
        a_sum,
        b_sum,
        monotone: sol.monotone,
    })
}

/// `exp(n c^2 zeta^{D/2}) - 1`, or `+inf` once the exponent overflows.
pub fn tv_bound(n: u64, c: f64, zeta: u64, dimension: usize) -> Result<f64> {
    if c.is_nan() || c < 0.0 {
        return Err(Error::Domain { value: c });
    }
    let x = n as f64 * c * c * (zeta as f64).powf(dimension as f64 / 2.0);
    let v = if x.is_finite() {
        x.exp_m1()
    } else {
        f64::INFINITY
    };
    Ok(if v.is_finite() { v } else { f64::INFINITY })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RatesMatchRow {
    pub zeta: u64,
    /// `(a_zeta^{-4} / b_zeta^{-4}) / (A_zeta / B_zeta)^2`.
    pub ratio_lower: f64,
    /// `b_zeta^4 B_zeta^2 / (a_zeta^4 sum a^{-4} zeta^D)`.
    pub ratio_upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RatesMatchReport {
    pub rows: Vec<RatesMatchRow>,
    pub band: (f64, f64),
    pub matched: bool,
}

pub fn rates_match_check(
    a: &WeightFamily,
    b: &WeightFamily,
    dimension: usize,
    grid: &[u64],
) -> Result<RatesMatchReport> {
    rates_match_check_with(a, b, dimension, grid, (1e-2, 1e2))
}

/// Evaluates both sides of the upper/lower matching condition on a grid of
/// truncations, with `a_zeta`, `b_zeta` taken at the smallest-norm boundary
/// point of each net's rule.
pub fn rates_match_check_with(
    a: &WeightFamily,
    b: &WeightFamily,
    dimension: usize,
    grid: &[u64],
    band: (f64, f64),
) -> Result<RatesMatchReport> {
    if grid.is_empty() {
        return Err(Error::Config("empty truncation grid".to_string()));
    }
    let d = dimension as f64;
    let mut rows = Vec::with_capacity(grid.len());
    for &zeta in grid {
        if zeta == 0 {
            return Err(Error::Config(
                "truncation grid must be positive".to_string(),
            ));
        }
        let la = a.log_weight(a.boundary_point(zeta, dimension).coords())?;
        let lb = b.log_weight(b.boundary_point(zeta, dimension).coords())?;
        let big_a = strength_sum(a, zeta, dimension)?;
        let big_b = strength_sum(b, zeta, dimension)?;
        let fourth = inverse_fourth_sum(a, &a.truncation_set(zeta, dimension)?)?;
        let ratio_lower = (4.0 * (lb - la) + 2.0 * (big_b.ln() - big_a.ln())).exp();
        let ratio_upper =
            (4.0 * (lb - la) + 2.0 * big_b.ln() - fourth.ln() - d * (zeta as f64).ln()).exp();
        rows.push(RatesMatchRow {
            zeta,
            ratio_lower,
            ratio_upper,
        });
    }
    let inside = |r: f64| r >= band.0 && r <= band.1;
    let matched = rows
        .iter()
        .all(|r| inside(r.ratio_lower) && inside(r.ratio_upper));
    Ok(RatesMatchReport {
        rows,
        band,
        matched,
    })
}

/// Human-readable cell text such as `n^-0.571429` or `INF`.
pub fn format_rate(rate: &RatePrediction) -> String {
    if rate.is_inconsistent() {
        return "INF".to_string();
    }
    match rate.scale {
        RateScale::N => format!("n^{:.6}", rate.exponent),
        RateScale::LogN => format!("(log n)^{:.6}", rate.exponent),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frequency::{Frequency, SupportRule};
    use alloc::vec;
    use approx::assert_relative_eq;

    fn constant16() -> FrequencySet {
        let members = (1..=16).map(|k| Frequency::new(vec![k])).collect();
        FrequencySet::from_members(1, members, SupportRule::All).unwrap()
    }

    #[test]
    fn bias_examples() {
        let s1 = WeightFamily::sobolev(1.0).unwrap();
        let s2 = WeightFamily::sobolev(2.0).unwrap();
        assert_eq!(bias_bound(1.0, 1.0, &s1, &s1, 7, 1).unwrap(), 1.0);
        assert_relative_eq!(
            bias_bound(1.0, 1.0, &s1, &s2, 10, 1).unwrap(),
            1.0 / 121.0,
            max_relative = 1e-12
        );
        assert_eq!(bias_bound(0.0, 3.0, &s1, &s2, 10, 1).unwrap(), 0.0);
        let e = WeightFamily::exponential(1.0)
            .unwrap()
            .with_rule(SupportRule::ExcludeOrigin);
        assert_eq!(bias_bound(0.0, 0.0, &e, &s1, 3, 1).unwrap(), f64::INFINITY);
        assert!(bias_bound(-1.0, 1.0, &s1, &s1, 3, 1).is_err());
    }

    #[test]
    fn variance_examples() {
        let c = WeightFamily::constant();
        let z = constant16();
        assert_relative_eq!(
            variance_bound(&Norms::uniform(1.0), &c, &c, &z, 10).unwrap(),
            1.32,
            max_relative = 1e-14
        );
        let v = variance_bound(&Norms::uniform(1.0), &c, &c, &z, 1_000_000).unwrap();
        assert_relative_eq!(v, 32e-12 + 8e-6 + 2e-6, max_relative = 1e-12);
        assert_eq!(
            variance_bound(&Norms::uniform(0.0), &c, &c, &z, 10).unwrap(),
            0.0
        );
        let empty = FrequencySet::empty(1, SupportRule::All);
        assert_eq!(
            variance_bound(&Norms::uniform(1.0), &c, &c, &empty, 10).unwrap(),
            0.2
        );
    }

    #[test]
    fn mse_examples() {
        let c = WeightFamily::constant();
        let z = constant16();
        let m = mse_bound(&Norms::uniform(1.0), &c, &c, &z, 16, 10, BoundMode::Product).unwrap();
        assert_relative_eq!(m, 2.32, max_relative = 1e-14);
        let norms = Norms {
            l2_p: 1.5,
            b_p: 0.0,
            a_p: 0.0,
            ..Norms::uniform(7.0)
        };
        let m = mse_bound(&norms, &c, &c, &z, 16, 10, BoundMode::Norm).unwrap();
        assert_relative_eq!(m, 2.0 * 1.5 * 1.5 / 100.0 * 16.0, max_relative = 1e-14);
        let s1 = WeightFamily::sobolev(1.0).unwrap();
        let e = WeightFamily::exponential(1.0)
            .unwrap()
            .with_rule(SupportRule::ExcludeOrigin);
        let set = e.truncation_set(2, 1).unwrap();
        let m = mse_bound(
            &Norms::uniform(1.0),
            &e,
            &s1,
            &set,
            2,
            10,
            BoundMode::Product,
        )
        .unwrap();
        assert_eq!(m, f64::INFINITY);
    }

    #[test]
    fn bounds_are_monotone() {
        let a = WeightFamily::sobolev(0.5).unwrap();
        let b = WeightFamily::sobolev(1.5).unwrap();
        let set = a.truncation_set(5, 1).unwrap();
        let base = Norms {
            l2_p: 1.2,
            l2_q: 1.1,
            b_p: 0.8,
            b_q: 0.9,
            a_p: 0.5,
            a_q: 0.4,
        };
        let mut prev = f64::INFINITY;
        for n in [2u64, 5, 10, 100, 1000] {
            let v = mse_bound(&base, &a, &b, &set, 5, n, BoundMode::Product).unwrap();
            assert!(v <= prev);
            prev = v;
        }
        let bumped = Norms { b_q: 1.3, ..base };
        assert!(
            mse_bound(&bumped, &a, &b, &set, 5, 10, BoundMode::Product).unwrap()
                >= mse_bound(&base, &a, &b, &set, 5, 10, BoundMode::Product).unwrap()
        );
    }

    #[test]
    fn rate_examples() {
        let r = minimax_rate(&WeightKind::Sobolev(1.0), &WeightKind::Sobolev(1.5), 1).unwrap();
        assert_relative_eq!(r.exponent, -4.0 / 7.0, max_relative = 1e-15);
        assert_eq!(r.regime, RateRegime::Nonparametric);
        let r = minimax_rate(&WeightKind::Gaussian(1.0), &WeightKind::Gaussian(4.0), 1).unwrap();
        assert_eq!((r.exponent, r.regime), (-1.0, RateRegime::Parametric));
        let r = minimax_rate(&WeightKind::Exponential(1.0), &WeightKind::Sobolev(2.0), 1).unwrap();
        assert!(r.is_inconsistent());
        assert_eq!(format_rate(&r), "INF");
        let r = minimax_rate(
            &WeightKind::Logarithmic(2.0),
            &WeightKind::Logarithmic(3.0),
            1,
        )
        .unwrap();
        assert_eq!(
            (r.exponent, r.regime, r.scale),
            (-4.0, RateRegime::UpperBoundOnly, RateScale::LogN)
        );
        let r = minimax_rate(&WeightKind::Sinc(3), &WeightKind::Sobolev(1.0), 2).unwrap();
        assert_eq!(r.regime, RateRegime::Parametric);
        // zero smoothness on the strong side
        assert!(
            minimax_rate(&WeightKind::Gaussian(1.0), &WeightKind::Gaussian(0.0), 1)
                .unwrap()
                .is_inconsistent()
        );
        assert_eq!(
            minimax_rate(&WeightKind::Gaussian(0.0), &WeightKind::Gaussian(0.0), 1)
                .unwrap()
                .exponent,
            0.0
        );
        assert_eq!(
            minimax_rate(&WeightKind::Sobolev(2.0), &WeightKind::Sobolev(1.0), 1)
                .unwrap()
                .exponent,
            f64::INFINITY
        );
        assert_eq!(
            minimax_rate(&WeightKind::Constant, &WeightKind::Sobolev(1.0), 1)
                .unwrap()
                .exponent,
            -1.0
        );
    }

    #[test]
    fn rate_exponent_monotone_in_parameters() {
        let grid = [0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0];
        let kinds: [fn(f64) -> WeightKind; 4] = [
            WeightKind::Logarithmic,
            WeightKind::Sobolev,
            WeightKind::Exponential,
            WeightKind::Gaussian,
        ];
        for ka in kinds {
            for kb in kinds {
                for d in [1usize, 2] {
                    for &s in &grid {
                        for &t in &grid {
                            let r = minimax_rate(&ka(s), &kb(t), d).unwrap();
                            if r.is_inconsistent() {
                                continue;
                            }
                            assert!(r.exponent <= 0.0);
                            for &s2 in grid.iter().filter(|&&v| v > s) {
                                let r2 = minimax_rate(&ka(s2), &kb(t), d).unwrap();
                                assert!(r2.is_inconsistent() || r2.exponent >= r.exponent);
                            }
                            for &t2 in grid.iter().filter(|&&v| v > t) {
                                let r2 = minimax_rate(&ka(s), &kb(t2), d).unwrap();
                                assert!(!r2.is_inconsistent() && r2.exponent <= r.exponent);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn lower_bound_branches() {
        let s1 = WeightFamily::sobolev(1.0).unwrap();
        let lb = lower_bound_rate(&s1, &s1, 1000, 1).unwrap();
        assert_eq!(lb.value, 1.0);
        assert_eq!(lb.branch, Regime::Smooth);
        let c = WeightFamily::constant();
        let lb = lower_bound_rate(&c, &c, 1000, 1).unwrap();
        assert_eq!(lb.branch, Regime::Unsmooth);
        assert!(lower_bound_rate(&s1, &s1, 1, 1).is_err());
    }

    #[test]
    fn lower_bound_slope() {
        let a = WeightFamily::sobolev(1.0).unwrap();
        let b = WeightFamily::sobolev(1.5).unwrap();
        let ns: [f64; 5] = [1e3, 1e4, 1e5, 1e6, 1e7];
        let pts: Vec<(f64, f64)> = ns
            .iter()
            .map(|&n| {
                let lb = lower_bound_rate(&a, &b, n as u64, 1).unwrap();
                assert_eq!(lb.branch, Regime::Smooth);
                (n.ln(), lb.value.ln())
            })
            .collect();
        let m = pts.len() as f64;
        let (mx, my) = (
            pts.iter().map(|p| p.0).sum::<f64>() / m,
            pts.iter().map(|p| p.1).sum::<f64>() / m,
        );
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let slope = sxy / sxx;
        assert!((slope + 4.0 / 7.0).abs() <= 0.05, "slope {slope}");
    }

    #[test]
    fn tv_examples() {
        assert_eq!(tv_bound(10, 0.0, 3, 1).unwrap(), 0.0);
        assert_relative_eq!(
            tv_bound(1, 1.0, 1, 2).unwrap(),
            1.718281828459045,
            max_relative = 1e-15
        );
        let c = 1.5f64.ln().sqrt();
        assert_relative_eq!(tv_bound(1, c, 1, 1).unwrap(), 0.5, max_relative = 1e-14);
        assert_eq!(tv_bound(1_000_000, 1.0, 10, 2).unwrap(), f64::INFINITY);
        assert!(tv_bound(1, -1.0, 1, 1).is_err());
    }

    #[test]
    fn rates_match_examples() {
        let s1 = WeightFamily::sobolev(1.0).unwrap();
        let s2 = WeightFamily::sobolev(2.0).unwrap();
        let grid: Vec<u64> = (4..=64).collect();
        let r = rates_match_check(&s1, &s1, 1, &grid).unwrap();
        assert!(r
            .rows
            .iter()
            .all(|row| (row.ratio_lower - 1.0).abs() < 1e-12));
        let r = rates_match_check(&s1, &s2, 1, &grid).unwrap();
        assert!(r.matched);
        let last = r.rows.last().unwrap();
        assert!((last.ratio_lower - 0.36).abs() < 0.05 && (last.ratio_upper - 0.4).abs() < 0.05);
        let c = WeightFamily::constant();
        let r = rates_match_check(&c, &c, 1, &grid).unwrap();
        assert!(r.matched);
        assert_relative_eq!(r.rows[0].ratio_upper, 9.0 / 4.0, max_relative = 1e-12);
        assert!(rates_match_check(&c, &c, 1, &[]).is_err());
    }
}
