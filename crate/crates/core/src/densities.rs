//! Finite trigonometric densities on the torus with exactly known spectra.
//!
//! A density is `1 + sum_w alpha_w sqrt(2) cos(2 pi <w, x>)` over canonical
//! frequencies `w` (first nonzero coordinate positive). Its characteristic
//! function is `alpha_w / sqrt(2)` at `+-w`, 1 at the origin and 0 elsewhere.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{SQRT_2, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::frequency::{
    check_dimension, for_each_in_ball, Frequency, FrequencySet, SupportRule, DEFAULT_MAX_DIMENSION,
};
use crate::spectral::{Provenance, SampleSet, SpectralProfile};
use crate::sum::Compensated;
use crate::theory::{tv_bound, Norms};
use crate::weights::WeightFamily;

/// Grid points per axis per unit of the highest frequency.
pub const GRID_FACTOR: u64 = 64;
/// Values above `-NONNEGATIVITY_TOL` count as nonnegative.
pub const NONNEGATIVITY_TOL: f64 = 1e-12;
const MAX_GRID_WORK: u128 = 1 << 31;

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceDensity {
    dimension: usize,
    terms: BTreeMap<Frequency, f64>,
}

fn canonical(z: &Frequency) -> Option<Frequency> {
    match z.coords().iter().find(|&&k| k != 0) {
        None => None,
        Some(&k) if k > 0 => Some(z.clone()),
        Some(_) => Some(z.neg()),
    }
}

impl ReferenceDensity {
    pub fn uniform(dimension: usize) -> Result<Self> {
        check_dimension(dimension, DEFAULT_MAX_DIMENSION)?;
        Ok(ReferenceDensity {
            dimension,
            terms: BTreeMap::new(),
        })
    }

    /// Builds the density without the nonnegativity check. `z` and `-z` name
    /// the same cosine; giving both is an error, as is the origin.
    pub fn new_unchecked(dimension: usize, amplitudes: Vec<(Frequency, f64)>) -> Result<Self> {
        check_dimension(dimension, DEFAULT_MAX_DIMENSION)?;
        let mut terms = BTreeMap::new();
        for (z, alpha) in amplitudes {
            if z.dimension() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    got: z.dimension(),
                });
            }
            if !alpha.is_finite() {
                return Err(Error::Config(format!("amplitude at {z} is not finite")));
            }
            let key = canonical(&z)
                .ok_or_else(|| Error::Config("the constant term is fixed at 1".to_string()))?;
            if terms.insert(key, alpha).is_some() {
                return Err(Error::Config(format!(
                    "frequency {z} given twice (up to sign)"
                )));
            }
        }
        Ok(ReferenceDensity { dimension, terms })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// `(w, alpha_w)` in canonical form, lexicographic order.
    pub fn amplitudes(&self) -> impl Iterator<Item = (&Frequency, f64)> {
        self.terms.iter().map(|(z, a)| (z, *a))
    }

    pub fn amplitude(&self, z: &Frequency) -> f64 {
        canonical(z)
            .and_then(|k| self.terms.get(&k).copied())
            .unwrap_or(0.0)
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Largest `||w||_inf` among the terms; 0 for the uniform density.
    pub fn max_frequency(&self) -> u64 {
        self.terms.keys().map(Frequency::linf).max().unwrap_or(0)
    }

    /// `1 + sqrt(2) sum |alpha|`, an upper bound on the density.
    pub fn envelope(&self) -> f64 {
        1.0 + SQRT_2 * self.terms.values().map(|a| a.abs()).sum::<f64>()
    }

    /// Characteristic-function coefficient `phi(z)`; real for these densities.
    pub fn coefficient(&self, z: &Frequency) -> f64 {
        if z.is_zero() {
            1.0
        } else {
            self.amplitude(z) / SQRT_2
        }
    }

    fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let mut acc = Compensated::default();
        acc.add(1.0);
        for (w, alpha) in &self.terms {
            let t: f64 = w
                .coords()
                .iter()
                .zip(x)
                .map(|(&k, &xd)| k as f64 * xd)
                .sum();
            acc.add(alpha * SQRT_2 * (TAU * (t - t.floor())).cos());
        }
        acc.value()
    }

    /// Minimum over the grid `{j / m}^D` with `m = 64 max(1, max_frequency)`,
    /// and where it is attained.
    pub fn grid_minimum(&self) -> Result<(Vec<f64>, f64)> {
        let mut best = (vec![0.0; self.dimension], f64::INFINITY);
        self.for_each_grid_value(|x, v| {
            if v < best.1 {
                best = (x.to_vec(), v);
            }
        })?;
        Ok(best)
    }

    /// Rectangle-rule integral over the validation grid.
    pub fn grid_integral(&self) -> Result<f64> {
        let mut acc = Compensated::default();
        let mut count = 0u64;
        self.for_each_grid_value(|_, v| {
            acc.add(v);
            count += 1;
        })?;
        Ok(acc.value() / count as f64)
    }

    fn for_each_grid_value<F: FnMut(&[f64], f64)>(&self, mut f: F) -> Result<()> {
        let m = GRID_FACTOR * self.max_frequency().max(1);
        let points = (m as u128).pow(self.dimension as u32);
        if points * (self.terms.len() as u128 + 1) > MAX_GRID_WORK {
            return Err(Error::Config(format!(
                "validation grid of {points} points is too large"
            )));
        }
        // cos(2 pi <w, j> / m) only depends on <w, j> mod m
        let cos_table: Vec<f64> = (0..m).map(|r| (TAU * r as f64 / m as f64).cos()).collect();
        let terms: Vec<(&[i64], f64)> = self
            .terms
            .iter()
            .map(|(w, a)| (w.coords(), a * SQRT_2))
            .collect();
        let mi = m as i64;
        let mut j = vec![0i64; self.dimension];
        let mut x = vec![0.0; self.dimension];
        loop {
            let mut acc = Compensated::default();
            acc.add(1.0);
            for (w, amp) in &terms {
                let dot: i64 = w
                    .iter()
                    .zip(&j)
                    .map(|(&k, &jd)| (k % mi) * jd)
                    .sum::<i64>()
                    .rem_euclid(mi);
                acc.add(amp * cos_table[dot as usize]);
            }
            for (xd, &jd) in x.iter_mut().zip(&j) {
                *xd = jd as f64 / m as f64;
            }
            f(&x, acc.value());
            let mut d = self.dimension;
            loop {
                if d == 0 {
                    return Ok(());
                }
                d -= 1;
                j[d] += 1;
                if j[d] < mi {
                    break;
                }
                j[d] = 0;
            }
        }
    }

    /// Exact coefficients on `set`.
    pub fn exact_cf(&self, set: &FrequencySet) -> Result<SpectralProfile> {
        if set.dimension() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: set.dimension(),
            });
        }
        let coefficients = set
            .iter()
            .map(|z| (z.clone(), Complex64::new(self.coefficient(z), 0.0)))
            .collect();
        Ok(SpectralProfile::new(coefficients, Provenance::Exact))
    }
}

fn check_nonnegative(density: &ReferenceDensity) -> Result<()> {
    // the triangle inequality settles most fixtures without a grid
    if density.envelope() - 1.0 <= 1.0 {
        return Ok(());
    }
    let (point, minimum) = density.grid_minimum()?;
    if minimum < -NONNEGATIVITY_TOL {
        return Err(Error::Nonnegativity { point, minimum });
    }
    Ok(())
}

/// `1 + sum alpha_z sqrt(2) cos(2 pi <z, x>)`, checked for nonnegativity.
pub fn make_trig_density(
    dimension: usize,
    amplitudes: Vec<(Frequency, f64)>,
) -> Result<ReferenceDensity> {
    let density = ReferenceDensity::new_unchecked(dimension, amplitudes)?;
    check_nonnegative(&density)?;
    Ok(density)
}

/// Which amplitude the worst-case construction uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Regime {
    /// `c = B^{-1/2}`.
    Smooth,
    /// `c = zeta^{-D}`.
    Unsmooth,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Smooth => "smooth",
            Regime::Unsmooth => "unsmooth",
        }
    }
}

/// A member `g_{zeta, tau}` of the lower-bound family.
#[derive(Debug, Clone, PartialEq)]
pub struct WorstCase {
    pub density: ReferenceDensity,
    pub zeta: u64,
    pub regime: Regime,
    /// Common amplitude `c`.
    pub c: f64,
    /// `sum b_w^{-2}` over `{1..zeta}^D`.
    pub strength: f64,
}

impl WorstCase {
    /// `c sqrt(2) zeta^D`, at most 1 exactly when every sign pattern gives a
    /// nonnegative density.
    pub fn analytic_level(&self) -> f64 {
        self.c * SQRT_2 * (self.zeta as f64).powi(self.density.dimension as i32)
    }
}

fn orthant(zeta: u64, dimension: usize) -> Vec<Frequency> {
    let mut out = Vec::new();
    for_each_in_ball(zeta, dimension, SupportRule::PositiveOrthant, |z| {
        out.push(Frequency::from(z))
    });
    out
}

/// Positive-orthant strength `sum_{w in {1..zeta}^D} f_w^{-2}`, with absent
/// terms counted as 0.
pub fn orthant_strength(family: &WeightFamily, zeta: u64, dimension: usize) -> Result<f64> {
    let family = family.with_rule(SupportRule::PositiveOrthant);
    let mut acc = Compensated::default();
    for w in orthant(zeta, dimension) {
        acc.add(family.inverse_square_or_absent(w.coords())?);
    }
    Ok(acc.value())
}

/// Alternating signs `+1, -1, +1, ...` over `{1..zeta}^D` in lexicographic order.
pub fn alternating_signs(zeta: u64, dimension: usize) -> Vec<i8> {
    let count = (zeta as usize).pow(dimension as u32);
    (0..count)
        .map(|i| if i % 2 == 0 { 1 } else { -1 })
        .collect()
}

/// Uniform random signs from a seeded stream.
pub fn random_signs(zeta: u64, dimension: usize, seed: u64) -> Vec<i8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = (zeta as usize).pow(dimension as u32);
    (0..count)
        .map(|_| if rng.random::<bool>() { 1 } else { -1 })
        .collect()
}

/// `g = 1 + c sum_w tau_w sqrt(2) cos(2 pi <w, x>)` over `w in {1..zeta}^D`,
/// without the nonnegativity check.
pub fn make_worst_case_unchecked(
    zeta: u64,
    tau: &[i8],
    b: &WeightFamily,
    dimension: usize,
    regime: Regime,
) -> Result<WorstCase> {
    check_dimension(dimension, DEFAULT_MAX_DIMENSION)?;
    if zeta == 0 {
        return Err(Error::Config(
            "worst-case family needs zeta >= 1".to_string(),
        ));
    }
    let ws = orthant(zeta, dimension);
    if tau.len() != ws.len() {
        return Err(Error::Config(format!(
            "expected {} signs, got {}",
            ws.len(),
            tau.len()
        )));
    }
    if let Some(bad) = tau.iter().find(|&&t| t != 1 && t != -1) {
        return Err(Error::Config(format!("sign {bad} is not +-1")));
    }
    let bw = b.with_rule(SupportRule::PositiveOrthant);
    let mut acc = Compensated::default();
    for w in &ws {
        acc.add(bw.inverse_square(w.coords())?);
    }
    let strength = acc.value();
    let c = match regime {
        Regime::Smooth => 1.0 / strength.sqrt(),
        Regime::Unsmooth => (zeta as f64).powi(-(dimension as i32)),
    };
    let amplitudes = ws
        .into_iter()
        .zip(tau)
        .map(|(w, &t)| (w, c * t as f64))
        .collect();
    let density = ReferenceDensity::new_unchecked(dimension, amplitudes)?;
    Ok(WorstCase {
        density,
        zeta,
        regime,
        c,
        strength,
    })
}

/// [`make_worst_case_unchecked`] plus validation: the family-level condition
/// `c sqrt(2) zeta^D <= 1` and the minimum over a grid of `64 zeta` points per
/// axis must both hold.
pub fn make_worst_case(
    zeta: u64,
    tau: &[i8],
    b: &WeightFamily,
    dimension: usize,
    regime: Regime,
) -> Result<WorstCase> {
    let wc = make_worst_case_unchecked(zeta, tau, b, dimension, regime)?;
    let (point, minimum) = wc.density.grid_minimum()?;
    if minimum < -NONNEGATIVITY_TOL {
        return Err(Error::Nonnegativity { point, minimum });
    }
    let level = wc.analytic_level();
    if level > 1.0 {
        // the all-minus sign pattern dips below zero at the origin
        return Err(Error::Nonnegativity {
            point: vec![0.0; dimension],
            minimum: 1.0 - level,
        });
    }
    Ok(wc)
}

/// Restriction of the sum in [`exact_product`].
#[derive(Debug, Clone, Copy)]
pub enum Truncation<'a> {
    Unbounded,
    Set(&'a FrequencySet),
}

/// `sum_z phi_P(z) conj(phi_Q(z)) / a_z^2` over the frequencies where both
/// densities are nonzero, restricted by `trunc`. Terms outside `a`'s rule, the
/// sinc band or at the Sobolev origin are absent.
pub fn exact_product(
    p: &ReferenceDensity,
    q: &ReferenceDensity,
    a: &WeightFamily,
    trunc: Truncation<'_>,
) -> Result<f64> {
    if p.dimension != q.dimension {
        return Err(Error::DimensionMismatch {
            expected: p.dimension,
            got: q.dimension,
        });
    }
    let keep = |z: &Frequency| match trunc {
        Truncation::Unbounded => true,
        Truncation::Set(set) => set.contains(z),
    };
    let mut acc = Compensated::default();
    let origin = Frequency::zero(p.dimension);
    if keep(&origin) {
        acc.add(a.inverse_square_or_absent(origin.coords())?);
    }
    for (w, alpha) in &p.terms {
        let Some(beta) = q.terms.get(w) else { continue };
        for z in [w.clone(), w.neg()] {
            if keep(&z) {
                acc.add(alpha * beta / 2.0 * a.inverse_square_or_absent(z.coords())?);
            }
        }
    }
    Ok(acc.value())
}

/// Pointwise density value.
pub fn density_eval(p: &ReferenceDensity, x: &[f64]) -> Result<f64> {
    if x.len() != p.dimension {
        return Err(Error::DimensionMismatch {
            expected: p.dimension,
            got: x.len(),
        });
    }
    if let Some(&value) = x.iter().find(|v| !(0.0..1.0).contains(*v)) {
        return Err(Error::Domain { value });
    }
    Ok(p.eval_unchecked(x))
}

/// `n` draws by rejection from the uniform proposal with envelope
/// `M = 1 + sqrt(2) sum |alpha|`.
///
/// The stream is ChaCha8 seeded with `seed_from_u64(seed)`. Each proposal
/// takes `D` uniforms for the point, then one more for the accept test; the
/// uniform density skips the accept test, so its output is the proposal stream.
pub fn sample(p: &ReferenceDensity, n: usize, seed: u64) -> Result<SampleSet> {
    if n == 0 {
        return Err(Error::SampleSize { needed: 1, got: 0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = p.dimension;
    let envelope = p.envelope();
    let mut points = Vec::with_capacity(n * d);
    let mut x = vec![0.0; d];
    while points.len() < n * d {
        for xd in x.iter_mut() {
            *xd = rng.random::<f64>();
        }
        if p.terms.is_empty() || rng.random::<f64>() * envelope <= p.eval_unchecked(&x) {
            points.extend_from_slice(&x);
        }
    }
    SampleSet::new(d, points, String::from("sample"))
}

/// `||P||_2`, `||P||_b`, `||P||_a` and the same for `Q`, from exact spectra.
pub fn exact_norms(
    p: &ReferenceDensity,
    q: &ReferenceDensity,
    a: &WeightFamily,
    b: &WeightFamily,
) -> Result<Norms> {
    let l2 = WeightFamily::constant();
    let norm = |d: &ReferenceDensity, w: &WeightFamily| {
        exact_product(d, d, w, Truncation::Unbounded).map(|v| v.sqrt())
    };
    Ok(Norms {
        l2_p: norm(p, &l2)?,
        l2_q: norm(q, &l2)?,
        b_p: norm(p, b)?,
        b_q: norm(q, b)?,
        a_p: norm(p, a)?,
        a_q: norm(q, a)?,
    })
}

/// Outcome of checking the four properties the lower-bound argument needs.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WorstCaseReport {
    /// `||g - 1||_b^2`: the perturbation's `b` norm.
    pub perturbation_b_sq: f64,
    /// `||g||_a^2 - ||1||_a^2`.
    pub gap: f64,
    pub expected_gap: f64,
    pub grid_integral: f64,
    pub grid_minimum: f64,
    pub grid_argmin: Vec<f64>,
    pub c: f64,
    pub tv_bound: f64,
    /// Unit `b` ball, gap, unit mass, nonnegativity.
    pub claims: [bool; 4],
    /// The density has no perturbation at all.
    pub degenerate: bool,
    pub failures: Vec<String>,
}

impl WorstCaseReport {
    pub fn passed(&self) -> bool {
        self.claims.iter().all(|&c| c)
    }
}

/// Checks `g` against the family built from `b` at `zeta`: unit (smooth) or
/// at most unit (unsmooth) perturbation `b` norm, the `a`-norm gap
/// `A/B` or `A/zeta^{2D}` to 1e-12, unit mass, and grid nonnegativity. The
/// TV bound is evaluated at sample size `n` with the regime's `c`.
pub fn validate_worst_case(
    g: &ReferenceDensity,
    a: &WeightFamily,
    b: &WeightFamily,
    zeta: u64,
    regime: Regime,
    n: u64,
) -> Result<WorstCaseReport> {
    let d = g.dimension;
    let uniform = ReferenceDensity::uniform(d)?;
    let b_sum = orthant_strength(b, zeta, d)?;
    let a_sum = orthant_strength(a, zeta, d)?;
    let c = match regime {
        Regime::Smooth => 1.0 / b_sum.sqrt(),
        Regime::Unsmooth => (zeta as f64).powi(-(d as i32)),
    };
    let expected_gap = match regime {
        Regime::Smooth => a_sum / b_sum,
        Regime::Unsmooth => a_sum / (zeta as f64).powi(2 * d as i32),
    };
    let perturbation_b_sq = exact_product(g, g, b, Truncation::Unbounded)?
        - exact_product(&uniform, &uniform, b, Truncation::Unbounded)?;
    let gap = exact_product(g, g, a, Truncation::Unbounded)?
        - exact_product(&uniform, &uniform, a, Truncation::Unbounded)?;
    let grid_integral = g.grid_integral()?;
    let (grid_argmin, grid_minimum) = g.grid_minimum()?;

    let mut failures = Vec::new();
    // (1/sqrt B)^2 B is 1 up to a couple of roundings
    let unit_tol = 1e-14;
    let unit = match regime {
        Regime::Smooth => (perturbation_b_sq - 1.0).abs() <= unit_tol,
        Regime::Unsmooth => perturbation_b_sq <= 1.0 + unit_tol,
    };
    if !unit {
        failures.push(format!(
            "perturbation b-norm squared is {perturbation_b_sq}"
        ));
    }
    let gap_ok = (gap - expected_gap).abs() <= 1e-12 * expected_gap.abs().max(1.0);
    if !gap_ok {
        failures.push(format!("a-norm gap {gap} differs from {expected_gap}"));
    }
    let mass = g.amplitudes().all(|(w, _)| !w.is_zero()) && (grid_integral - 1.0).abs() <= 1e-10;
    if !mass {
        failures.push(format!("mass is {grid_integral}"));
    }
    let nonneg = grid_minimum >= -NONNEGATIVITY_TOL;
    if !nonneg {
        failures.push(format!("grid minimum {grid_minimum}"));
    }
    Ok(WorstCaseReport {
        perturbation_b_sq,
        gap,
        expected_gap,
        grid_integral,
        grid_minimum,
        grid_argmin,
        c,
        tv_bound: tv_bound(n, c, zeta, d)?,
        claims: [unit, gap_ok, mass, nonneg],
        degenerate: g.term_count() == 0,
        failures,
    })
}
