//! Truncated bilinear estimators and truncation-parameter selection.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::frequency::{check_dimension, FrequencySet, DEFAULT_MAX_DIMENSION};
use crate::spectral::{empirical_cf, SampleSet, SpectralProfile};
use crate::weights::{is_consistent_pair, strength_sum, DecayClass, WeightFamily, WeightKind};

/// Which functional an [`EstimateReport`] carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum EstimateKind {
    InnerProduct,
    NormSq,
    DistanceSq,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EstimateReport {
    pub value: f64,
    /// Imaginary part of the complex sum; a numerical health check for
    /// negation-closed sets.
    pub imaginary_residual: f64,
    /// Radius `zeta` of the frequency set used.
    pub truncation: u64,
    pub term_count: usize,
    pub kind: EstimateKind,
}

fn weighted_products(
    cf_p: &SpectralProfile,
    cf_q: &SpectralProfile,
    a: &WeightFamily,
    set: &FrequencySet,
) -> Result<Complex64> {
    let mut re = crate::sum::Compensated::default();
    let mut im = crate::sum::Compensated::default();
    for z in set {
        let inv = a.inverse_square(z.coords())?;
        let p = cf_p
            .get(z)
            .ok_or_else(|| Error::Coverage(z.coords().to_vec()))?;
        let q = cf_q
            .get(z)
            .ok_or_else(|| Error::Coverage(z.coords().to_vec()))?;
        let term = p * q.conj() * inv;
        re.add(term.re);
        im.add(term.im);
    }
    Ok(Complex64::new(re.value(), im.value()))
}

fn report(sum: Complex64, set: &FrequencySet, kind: EstimateKind) -> EstimateReport {
    EstimateReport {
        value: sum.re,
        imaginary_residual: sum.im,
        truncation: set.radius(),
        term_count: set.len(),
        kind,
    }
}

/// `S_hat_Z = sum_{z in Z} cf_P(z) conj(cf_Q(z)) / a_z^2`.
pub fn inner_product(
    cf_p: &SpectralProfile,
    cf_q: &SpectralProfile,
    a: &WeightFamily,
    set: &FrequencySet,
) -> Result<EstimateReport> {
    Ok(report(
        weighted_products(cf_p, cf_q, a, set)?,
        set,
        EstimateKind::InnerProduct,
    ))
}

/// [`inner_product`] straight from two independent samples.
pub fn inner_product_from_samples(
    x: &SampleSet,
    y: &SampleSet,
    a: &WeightFamily,
    set: &FrequencySet,
) -> Result<EstimateReport> {
    let cf_p = empirical_cf(x, set)?;
    let cf_q = empirical_cf(y, set)?;
    inner_product(&cf_p, &cf_q, a, set)
}

/// `N_hat_Z`: the first `floor(n/2)` samples against the remainder.
pub fn norm_sq(
    samples: &SampleSet,
    a: &WeightFamily,
    set: &FrequencySet,
) -> Result<EstimateReport> {
    if samples.len() < 2 {
        return Err(Error::SampleSize {
            needed: 2,
            got: samples.len(),
        });
    }
    let (first, second) = samples.split_halves();
    let cf_1 = empirical_cf(&first, set)?;
    let cf_2 = empirical_cf(&second, set)?;
    Ok(report(
        weighted_products(&cf_1, &cf_2, a, set)?,
        set,
        EstimateKind::NormSq,
    ))
}

/// `rho_hat_Z = N_hat_Z(X) + M_hat_Z(Y) - 2 S_hat_Z(X, Y)`, with the cross
/// term on the full samples.
pub fn distance_sq(
    x: &SampleSet,
    y: &SampleSet,
    a: &WeightFamily,
    set: &FrequencySet,
) -> Result<EstimateReport> {
    let n_x = norm_sq(x, a, set)?;
    let n_y = norm_sq(y, a, set)?;
    let s = inner_product_from_samples(x, y, a, set)?;
    Ok(EstimateReport {
        value: combine_distance(n_x.value, n_y.value, s.value),
        imaginary_residual: combine_distance(
            n_x.imaginary_residual,
            n_y.imaginary_residual,
            s.imaginary_residual,
        ),
        truncation: set.radius(),
        term_count: set.len(),
        kind: EstimateKind::DistanceSq,
    })
}

#[inline]
pub fn combine_distance(norm_x: f64, norm_y: f64, cross: f64) -> f64 {
    norm_x + norm_y - 2.0 * cross
}

/// `zeta` from the closed-form balance rules of each diagonal weight pair.
///
/// Constant nets count as Sobolev of order 0. Mixed-class pairs have no closed
/// form here; use [`select_zeta_lecam`] for those.
pub fn select_zeta_closed_form(
    a: &WeightKind,
    b: &WeightKind,
    dimension: usize,
    n: u64,
) -> Result<u64> {
    check_dimension(dimension, DEFAULT_MAX_DIMENSION)?;
    if let WeightKind::Sinc(band) = a {
        return Ok(*band);
    }
    if n < 2 {
        return Err(Error::SampleSize {
            needed: 2,
            got: n as usize,
        });
    }
    if !is_consistent_pair(a, b) {
        return Err(Error::Inconsistent(format!("{b} is weaker than {a}")));
    }
    let class = |k: &WeightKind| match k {
        WeightKind::Constant => Some(DecayClass::Polynomial),
        WeightKind::Sobolev(_) => Some(DecayClass::Polynomial),
        WeightKind::Gaussian(_) => Some(DecayClass::Gaussian),
        WeightKind::Exponential(_) => Some(DecayClass::Exponential),
        WeightKind::Logarithmic(_) => Some(DecayClass::Logarithmic),
        _ => None,
    };
    let (ca, cb) = (class(a), class(b));
    if ca.is_none() || ca != cb {
        return Err(Error::Inconsistent(format!(
            "no closed-form truncation rule for the pair {a} / {b}"
        )));
    }
    let t = b.parameter();
    let d = dimension as f64;
    let ln_n = (n as f64).ln();
    let zeta = match cb.unwrap() {
        DecayClass::Polynomial => (n as f64).powf(2.0 / (4.0 * t + d)).ceil(),
        DecayClass::Gaussian | DecayClass::Exponential if t == 0.0 => {
            return Err(Error::Inconsistent(
                "closed-form rule needs t > 0".to_string(),
            ));
        }
        DecayClass::Gaussian => (ln_n / (2.0 * t)).sqrt().ceil(),
        DecayClass::Exponential => (ln_n / (2.0 * t)).ceil(),
        DecayClass::Logarithmic => log_balance_zeta(t, d, ln_n) as f64,
        DecayClass::Flat => unreachable!(),
    };
    Ok((zeta as u64).max(1))
}

/// Smallest `zeta >= 2` with `zeta^{89D/20} (ln zeta)^{4t+D} >= n`, searched in
/// log space by doubling then bisection.
fn log_balance_zeta(t: f64, d: f64, ln_n: f64) -> u64 {
    let lhs = |z: u64| {
        let lz = (z as f64).ln();
        89.0 * d / 20.0 * lz + (4.0 * t + d) * lz.ln()
    };
    let mut hi = 2u64;
    while lhs(hi) < ln_n {
        hi *= 2;
    }
    let mut lo = hi / 2;
    if lo < 2 {
        return hi;
    }
    // invariant: lhs(lo) < ln_n <= lhs(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if lhs(mid) >= ln_n {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Limits for [`select_zeta_lecam`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LecamOptions {
    pub zeta_max: u64,
    /// Largest number of lattice points a single `B_zeta` evaluation may visit.
    pub max_lattice_points: u128,
}

impl Default for LecamOptions {
    fn default() -> Self {
        LecamOptions {
            zeta_max: 1_000_000,
            max_lattice_points: 1 << 32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LecamSolution {
    pub zeta: u64,
    /// `B_zeta` at the solution.
    pub strength: f64,
    /// `B_zeta^2 / zeta^D` was nondecreasing along the search path. When it
    /// was not, the answer comes from a linear scan.
    pub monotone: bool,
}

/// Smallest `zeta >= 1` with `B_zeta^2 >= zeta^D n^2`.
pub fn select_zeta_lecam(b: &WeightFamily, n: u64, dimension: usize) -> Result<LecamSolution> {
    select_zeta_lecam_with(b, n, dimension, LecamOptions::default())
}

pub fn select_zeta_lecam_with(
    b: &WeightFamily,
    n: u64,
    dimension: usize,
    opts: LecamOptions,
) -> Result<LecamSolution> {
    check_dimension(dimension, DEFAULT_MAX_DIMENSION)?;
    if n == 0 {
        return Err(Error::SampleSize { needed: 1, got: 0 });
    }
    let d = dimension as i32;
    let log_n2 = 2.0 * (n as f64).ln();
    let overflow = Error::Overflow {
        limit: opts.zeta_max,
    };
    let strength = |zeta: u64| -> Result<f64> {
        if b.rule().ball_count(zeta, dimension) > opts.max_lattice_points {
            return Err(Error::Overflow { limit: zeta });
        }
        strength_sum(b, zeta, dimension)
    };
    // log(B^2 / zeta^D), for the monotonicity check and for overflow
    let log_ratio = |bz: f64, zeta: u64| 2.0 * bz.ln() - d as f64 * (zeta as f64).ln();
    let solves = |bz: f64, zeta: u64| {
        let (lhs, rhs) = (bz * bz, (zeta as f64).powi(d) * (n as f64) * (n as f64));
        if lhs.is_finite() && rhs.is_finite() {
            lhs >= rhs
        } else {
            bz > 0.0 && log_ratio(bz, zeta) >= log_n2
        }
    };

    let mut path: Vec<(u64, f64)> = Vec::new();
    let eval = |zeta: u64, path: &mut Vec<(u64, f64)>| -> Result<f64> {
        let bz = strength(zeta)?;
        path.push((
            zeta,
            if bz > 0.0 {
                log_ratio(bz, zeta)
            } else {
                f64::NEG_INFINITY
            },
        ));
        Ok(bz)
    };

    let mut hi = 1u64;
    let mut b_hi = eval(hi, &mut path)?;
    let mut lo = 0u64;
    while !solves(b_hi, hi) {
        if hi >= opts.zeta_max {
            return Err(overflow);
        }
        lo = hi;
        hi = (hi * 2).min(opts.zeta_max);
        b_hi = eval(hi, &mut path)?;
    }
    // invariant: zeta = lo fails (or lo = 0), zeta = hi succeeds
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let b_mid = eval(mid, &mut path)?;
        if solves(b_mid, mid) {
            hi = mid;
            b_hi = b_mid;
        } else {
            lo = mid;
        }
    }
    path.sort_by_key(|&(z, _)| z);
    let monotone = path.windows(2).all(|w| w[1].1 >= w[0].1);
    if monotone {
        return Ok(LecamSolution {
            zeta: hi,
            strength: b_hi,
            monotone: true,
        });
    }
    // fall back to a linear scan, accumulating shells
    let mut zeta = 1;
    loop {
        let bz = strength(zeta)?;
        if solves(bz, zeta) {
            return Ok(LecamSolution {
                zeta,
                strength: bz,
                monotone: false,
            });
        }
        if zeta >= opts.zeta_max {
            return Err(overflow);
        }
        zeta += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frequency::{Frequency, SupportRule};
    use alloc::vec;
    use approx::assert_relative_eq;

    fn pm1() -> FrequencySet {
        FrequencySet::from_members(
            1,
            vec![Frequency::new(vec![-1]), Frequency::new(vec![1])],
            SupportRule::All,
        )
        .unwrap()
    }

    fn samples(xs: &[f64]) -> SampleSet {
        SampleSet::new(1, xs.to_vec(), "t").unwrap()
    }

    #[test]
    fn inner_product_examples() {
        let c = WeightFamily::constant();
        let empty = FrequencySet::empty(1, SupportRule::All);
        let r = inner_product_from_samples(&samples(&[0.1]), &samples(&[0.4]), &c, &empty).unwrap();
        assert_eq!((r.value, r.term_count), (0.0, 0));

        let r =
            inner_product_from_samples(&samples(&[0.0, 0.5]), &samples(&[0.3, 0.9]), &c, &pm1())
                .unwrap();
        assert!(r.value.abs() < 1e-15);

        // frozen from an independent complex-arithmetic script: (1 + sqrt 3) / 4
        let r = inner_product_from_samples(
            &samples(&[0.0, 0.25]),
            &samples(&[0.0, 1.0 / 3.0]),
            &c,
            &pm1(),
        )
        .unwrap();
        assert_relative_eq!(r.value, 0.6830127018922194, max_relative = 1e-14);
        assert!(r.imaginary_residual.abs() < 1e-15);
        assert_eq!(r.kind, EstimateKind::InnerProduct);
        assert_eq!((r.truncation, r.term_count), (1, 2));
    }

    #[test]
    fn coverage_and_support_errors() {
        let c = WeightFamily::constant();
        let x = samples(&[0.1, 0.2]);
        let small =
            FrequencySet::from_members(1, vec![Frequency::new(vec![1])], SupportRule::All).unwrap();
        let cf_small = empirical_cf(&x, &small).unwrap();
        let cf_full = empirical_cf(&x, &pm1()).unwrap();
        assert!(matches!(
            inner_product(&cf_small, &cf_full, &c, &pm1()),
            Err(Error::Coverage(_))
        ));
        let sob = WeightFamily::sobolev(1.0).unwrap();
        let with_origin = FrequencySet::lattice_ball(1, 1, SupportRule::All).unwrap();
        assert!(matches!(
            norm_sq(&x, &sob, &with_origin),
            Err(Error::Support { .. })
        ));
    }

    #[test]
    fn norm_examples() {
        let c = WeightFamily::constant();
        let r = norm_sq(&samples(&[0.0; 6]), &c, &pm1()).unwrap();
        assert_eq!(r.value, 2.0);
        assert_eq!(r.kind, EstimateKind::NormSq);
        let r = norm_sq(
            &samples(&[0.3, 0.6]),
            &c,
            &FrequencySet::empty(1, SupportRule::All),
        )
        .unwrap();
        assert_eq!(r.value, 0.0);
        assert!(matches!(
            norm_sq(&samples(&[0.3]), &c, &pm1()),
            Err(Error::SampleSize { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn distance_examples() {
        let c = WeightFamily::constant();
        let x = samples(&[0.4; 4]);
        let r = distance_sq(&x, &x, &c, &pm1()).unwrap();
        assert!(r.value.abs() < 1e-14);
        let y = samples(&[0.1, 0.7, 0.3]);
        let r = distance_sq(&x, &y, &c, &FrequencySet::empty(1, SupportRule::All)).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn distance_is_the_algebraic_combination() {
        let a = WeightFamily::sobolev(0.5).unwrap();
        let set = a.truncation_set(4, 1).unwrap();
        let x = samples(&[0.11, 0.52, 0.93, 0.27, 0.64]);
        let y = samples(&[0.05, 0.38, 0.71, 0.99]);
        let r = distance_sq(&x, &y, &a, &set).unwrap();
        let n = norm_sq(&x, &a, &set).unwrap().value;
        let m = norm_sq(&y, &a, &set).unwrap().value;
        let s = inner_product_from_samples(&x, &y, &a, &set).unwrap().value;
        assert_eq!(r.value.to_bits(), (n + m - 2.0 * s).to_bits());
    }

    #[test]
    fn permutation_behaviour() {
        let a = WeightFamily::constant();
        let set = FrequencySet::lattice_ball(3, 1, SupportRule::All).unwrap();
        let x = samples(&[0.1, 0.4, 0.35, 0.8]);
        let x_perm = samples(&[0.8, 0.35, 0.1, 0.4]);
        let y = samples(&[0.2, 0.9]);
        let s1 = inner_product_from_samples(&x, &y, &a, &set).unwrap().value;
        let s2 = inner_product_from_samples(&x_perm, &y, &a, &set)
            .unwrap()
            .value;
        assert_relative_eq!(s1, s2, max_relative = 1e-12);
        // swapping within each half keeps the split estimate
        let within = samples(&[0.4, 0.1, 0.8, 0.35]);
        assert_relative_eq!(
            norm_sq(&x, &a, &set).unwrap().value,
            norm_sq(&within, &a, &set).unwrap().value,
            max_relative = 1e-12
        );
        // moving samples across halves changes it
        let across = samples(&[0.1, 0.35, 0.4, 0.8]);
        let diff = norm_sq(&x, &a, &set).unwrap().value - norm_sq(&across, &a, &set).unwrap().value;
        assert!(diff.abs() > 1e-3);
    }

    #[test]
    fn closed_form_examples() {
        let sob = |t| WeightKind::Sobolev(t);
        assert_eq!(
            select_zeta_closed_form(&sob(1.0), &sob(1.0), 1, 1000).unwrap(),
            16
        );
        assert_eq!(
            select_zeta_closed_form(&WeightKind::Constant, &sob(1.0), 1, 1000).unwrap(),
            16
        );
        // floor(e^4) = 54 gives sqrt(ln 54) = 1.997; 55 already crosses 2
        let g = WeightKind::Gaussian(0.5);
        assert_eq!(select_zeta_closed_form(&g, &g, 1, 54).unwrap(), 2);
        assert_eq!(select_zeta_closed_form(&g, &g, 1, 55).unwrap(), 3);
        let e = WeightKind::Exponential(1.0);
        assert_eq!(select_zeta_closed_form(&e, &e, 2, 1000).unwrap(), 4);
        assert_eq!(
            select_zeta_closed_form(&WeightKind::Sinc(3), &sob(2.0), 1, 10).unwrap(),
            3
        );
        assert_eq!(
            select_zeta_closed_form(&WeightKind::Sinc(3), &sob(2.0), 1, 1_000_000).unwrap(),
            3
        );
        assert!(matches!(
            select_zeta_closed_form(&WeightKind::Exponential(1.0), &sob(2.0), 1, 1000),
            Err(Error::Inconsistent(_))
        ));
        assert!(matches!(
            select_zeta_closed_form(&sob(1.0), &sob(1.0), 1, 1),
            Err(Error::SampleSize { .. })
        ));
        assert_eq!(
            select_zeta_closed_form(&sob(0.0), &sob(0.0), 1, 2).unwrap(),
            4
        );
    }

    #[test]
    fn logarithmic_balance() {
        let l = WeightKind::Logarithmic(1.0);
        for n in [10u64, 1000, 1_000_000] {
            let z = select_zeta_closed_form(&l, &l, 1, n).unwrap();
            let f = |z: u64| (z as f64).powf(89.0 / 20.0) * (z as f64).ln().powf(5.0);
            assert!(f(z) >= n as f64);
            assert!(z == 2 || f(z - 1) < n as f64);
        }
    }

    #[test]
    fn lecam_examples() {
        let b = WeightFamily::sobolev(1.0).unwrap();
        let sol = select_zeta_lecam(&b, 1000, 1).unwrap();
        assert_eq!(sol.zeta, 19);
        assert_eq!(sol.strength, 4940.0);
        assert!(sol.monotone);
        let sol = select_zeta_lecam(&WeightFamily::constant(), 1, 1).unwrap();
        assert_eq!(sol.zeta, 1);
    }

    #[test]
    fn lecam_matches_exhaustive_scan() {
        for t in [0.5, 1.0, 2.0] {
            let b = WeightFamily::sobolev(t).unwrap();
            for n in [2u64, 10, 137, 1000, 25_000] {
                let got = select_zeta_lecam(&b, n, 1).unwrap().zeta;
                let want = (1..)
                    .find(|&z: &u64| {
                        let bz: f64 = (1..=z).map(|k| 2.0 * (k as f64).powf(2.0 * t)).sum();
                        bz * bz >= z as f64 * (n as f64) * (n as f64)
                    })
                    .unwrap();
                assert_eq!(got, want, "t={t} n={n}");
            }
        }
    }

    #[test]
    fn lecam_overflow() {
        let sinc = WeightFamily::sinc(2).unwrap();
        let opts = LecamOptions {
            zeta_max: 4096,
            ..LecamOptions::default()
        };
        assert_eq!(
            select_zeta_lecam_with(&sinc, 100, 1, opts),
            Err(Error::Overflow { limit: 4096 })
        );
        let opts = LecamOptions {
            zeta_max: 1 << 20,
            max_lattice_points: 10_000,
        };
        assert!(matches!(
            select_zeta_lecam_with(&WeightFamily::constant(), 100_000, 2, opts),
            Err(Error::Overflow { .. })
        ));
    }

    #[test]
    fn lecam_ratio_against_closed_form() {
        let b = WeightFamily::sobolev(1.0).unwrap();
        for n in [1_000u64, 10_000, 100_000] {
            let z = select_zeta_lecam(&b, n, 1).unwrap().zeta as f64;
            let ratio = z / (n as f64).powf(0.4);
            assert!((0.7..=2.0).contains(&ratio), "n={n} ratio={ratio}");
        }
    }
}
