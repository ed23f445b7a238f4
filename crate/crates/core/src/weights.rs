//! Weight nets `{a_z}` and the scalar functionals built from them.
//!
//! Every built-in family is a decreasing function of one lattice norm and is
//! invariant under sign flips and coordinate permutations. Internally weights
//! are handled through `ln a_z` so that Gaussian and exponential nets at large
//! radii neither overflow nor underflow.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::frequency::{
    self, check_dimension, for_each_in_ball, Frequency, FrequencySet, SupportRule,
};
use crate::sum::{compensated_sum, Compensated};

/// Explicit `frequency -> weight` table for a custom net.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    dimension: usize,
    entries: BTreeMap<Frequency, f64>,
}

impl WeightTable {
    /// Validates positivity, finiteness, uniqueness and negation symmetry.
    pub fn new(dimension: usize, entries: Vec<(Frequency, f64)>) -> Result<Self> {
        check_dimension(dimension, frequency::DEFAULT_MAX_DIMENSION)?;
        let mut map = BTreeMap::new();
        for (z, w) in entries {
            if z.dimension() != dimension {
                return Err(Error::WeightTable(format!(
                    "frequency {z} has dimension {}, expected {dimension}",
                    z.dimension()
                )));
            }
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::WeightTable(format!(
                    "weight {w} at {z} is not a positive finite number"
                )));
            }
            if map.insert(z.clone(), w).is_some() {
                return Err(Error::WeightTable(format!("duplicate frequency {z}")));
            }
        }
        for (z, w) in &map {
            match map.get(&z.neg()) {
                Some(v) if v == w => {}
                Some(v) => {
                    return Err(Error::WeightTable(format!(
                        "weight at {z} is {w} but at {} is {v}",
                        z.neg()
                    )));
                }
                None => {
                    return Err(Error::WeightTable(format!(
                        "table has {z} but not {}",
                        z.neg()
                    )))
                }
            }
        }
        Ok(WeightTable {
            dimension,
            entries: map,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn get(&self, z: &[i64]) -> Option<f64> {
        // BTreeMap<Frequency, _> cannot be probed with a slice directly
        self.entries.get(&Frequency::from(z)).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Frequency, f64)> {
        self.entries.iter().map(|(z, w)| (z, *w))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Parametric shape of a weight net.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightKind {
    /// `a_z = 1`.
    Constant,
    /// `a_z = ||z||_2^{-s}`; the origin is outside the support when `s > 0`.
    Sobolev(f64),
    /// `a_z = exp(-s ||z||_2^2)`.
    Gaussian(f64),
    /// `a_z = exp(-s ||z||_1)`.
    Exponential(f64),
    /// `a_z = (ln ||z||_2)^{-s}`, defined for `||z||_2 >= 2` only.
    Logarithmic(f64),
    /// `a_z = 1` for `||z||_inf <= band`, absent outside.
    Sinc(u64),
    Custom(WeightTable),
}

/// Decay class of a net, ordered from weakest to strongest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DecayClass {
    Flat,
    Logarithmic,
    Polynomial,
    Exponential,
    Gaussian,
}

impl WeightKind {
    pub fn name(&self) -> &'static str {
        match self {
            WeightKind::Constant => "constant",
            WeightKind::Sobolev(_) => "sobolev",
            WeightKind::Gaussian(_) => "gaussian",
            WeightKind::Exponential(_) => "exponential",
            WeightKind::Logarithmic(_) => "logarithmic",
            WeightKind::Sinc(_) => "sinc",
            WeightKind::Custom(_) => "custom",
        }
    }

    /// Smoothness parameter (`s` or the sinc band); 0 for constant and custom.
    pub fn parameter(&self) -> f64 {
        match *self {
            WeightKind::Sobolev(s)
            | WeightKind::Gaussian(s)
            | WeightKind::Exponential(s)
            | WeightKind::Logarithmic(s) => s,
            WeightKind::Sinc(band) => band as f64,
            WeightKind::Constant | WeightKind::Custom(_) => 0.0,
        }
    }

    /// Decay class and rate parameter for the radial kinds. `None` for the
    /// finitely supported kinds (sinc, custom).
    pub fn decay(&self) -> Option<(DecayClass, f64)> {
        let (class, s) = match *self {
            WeightKind::Constant => return Some((DecayClass::Flat, 0.0)),
            WeightKind::Sobolev(s) => (DecayClass::Polynomial, s),
            WeightKind::Gaussian(s) => (DecayClass::Gaussian, s),
            WeightKind::Exponential(s) => (DecayClass::Exponential, s),
            WeightKind::Logarithmic(s) => (DecayClass::Logarithmic, s),
            WeightKind::Sinc(_) | WeightKind::Custom(_) => return None,
        };
        if s == 0.0 {
            Some((DecayClass::Flat, 0.0))
        } else {
            Some((class, s))
        }
    }

    /// Support rule used when none is given explicitly.
    pub fn default_rule(&self) -> SupportRule {
        match *self {
            WeightKind::Sobolev(s) if s > 0.0 => SupportRule::ExcludeOrigin,
            WeightKind::Logarithmic(_) => SupportRule::ExcludeOrigin,
            _ => SupportRule::All,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            WeightKind::Sobolev(s)
            | WeightKind::Gaussian(s)
            | WeightKind::Exponential(s)
            | WeightKind::Logarithmic(s) => {
                if !s.is_finite() || *s < 0.0 {
                    return Err(Error::Config(format!(
                        "{} parameter must be finite and >= 0, got {s}",
                        self.name()
                    )));
                }
            }
            WeightKind::Sinc(0) => return Err(Error::Config("sinc band must be >= 1".to_string())),
            _ => {}
        }
        Ok(())
    }

    fn admits(&self, z: &[i64]) -> bool {
        match self {
            WeightKind::Constant | WeightKind::Gaussian(_) | WeightKind::Exponential(_) => true,
            WeightKind::Sobolev(s) => *s == 0.0 || !frequency::is_zero(z),
            WeightKind::Logarithmic(_) => frequency::l2_sq(z) >= 4.0,
            WeightKind::Sinc(band) => frequency::linf(z) <= *band,
            WeightKind::Custom(t) => t.get(z).is_some(),
        }
    }

    /// `ln a_z`, assuming `z` is admitted.
    fn log_weight_unchecked(&self, z: &[i64]) -> f64 {
        match self {
            WeightKind::Constant | WeightKind::Sinc(_) => 0.0,
            WeightKind::Sobolev(s) => {
                if *s == 0.0 {
                    0.0
                } else {
                    -s * frequency::l2(z).ln()
                }
            }
            WeightKind::Gaussian(s) => -s * frequency::l2_sq(z),
            WeightKind::Exponential(s) => -s * frequency::l1(z),
            WeightKind::Logarithmic(s) => {
                if *s == 0.0 {
                    0.0
                } else {
                    -s * frequency::l2(z).ln().ln()
                }
            }
            WeightKind::Custom(t) => t.get(z).map(|w| w.ln()).unwrap_or(f64::NAN),
        }
    }

    /// `a_z^{-2}`, assuming `z` is admitted. Evaluated directly rather than
    /// through the log weight so that integer-valued sums stay exact.
    fn inverse_square_unchecked(&self, z: &[i64]) -> f64 {
        match self {
            WeightKind::Constant | WeightKind::Sinc(_) => 1.0,
            WeightKind::Sobolev(s) => {
                if *s == 0.0 {
                    1.0
                } else {
                    frequency::l2_sq(z).powf(*s)
                }
            }
            WeightKind::Gaussian(s) => (2.0 * s * frequency::l2_sq(z)).exp(),
            WeightKind::Exponential(s) => (2.0 * s * frequency::l1(z)).exp(),
            WeightKind::Logarithmic(s) => frequency::l2(z).ln().powf(2.0 * s),
            WeightKind::Custom(t) => t.get(z).map(|w| 1.0 / (w * w)).unwrap_or(f64::NAN),
        }
    }

    /// Whether the kind drops `z` under the `0/0 = 0` convention (the weight is
    /// formally infinite there) rather than leaving it undefined.
    fn vanishes_outside(&self, z: &[i64]) -> bool {
        match self {
            WeightKind::Sinc(band) => frequency::linf(z) > *band,
            WeightKind::Sobolev(s) => *s > 0.0 && frequency::is_zero(z),
            _ => false,
        }
    }
}

impl fmt::Display for WeightKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightKind::Constant => f.write_str("constant"),
            WeightKind::Sinc(band) => write!(f, "sinc:{band}"),
            WeightKind::Custom(t) => write!(f, "custom[{} entries]", t.len()),
            other => write!(f, "{}:{}", other.name(), other.parameter()),
        }
    }
}

/// A weight net: a kind together with the lattice points it is indexed over.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFamily {
    kind: WeightKind,
    rule: SupportRule,
}

impl WeightFamily {
    pub fn new(kind: WeightKind, rule: SupportRule) -> Result<Self> {
        kind.validate()?;
        Ok(WeightFamily { kind, rule })
    }

    /// Uses the kind's default support rule.
    pub fn with_default_rule(kind: WeightKind) -> Result<Self> {
        let rule = kind.default_rule();
        Self::new(kind, rule)
    }

    pub fn constant() -> Self {
        WeightFamily {
            kind: WeightKind::Constant,
            rule: SupportRule::All,
        }
    }

    pub fn sobolev(s: f64) -> Result<Self> {
        Self::with_default_rule(WeightKind::Sobolev(s))
    }

    pub fn gaussian(s: f64) -> Result<Self> {
        Self::with_default_rule(WeightKind::Gaussian(s))
    }

    pub fn exponential(s: f64) -> Result<Self> {
        Self::with_default_rule(WeightKind::Exponential(s))
    }

    pub fn logarithmic(s: f64) -> Result<Self> {
        Self::with_default_rule(WeightKind::Logarithmic(s))
    }

    pub fn sinc(band: u64) -> Result<Self> {
        Self::with_default_rule(WeightKind::Sinc(band))
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    pub fn rule(&self) -> SupportRule {
        self.rule
    }

    pub fn with_rule(&self, rule: SupportRule) -> Self {
        WeightFamily {
            kind: self.kind.clone(),
            rule,
        }
    }

    /// Support predicate: the rule admits `z` and the weight is defined there.
    pub fn contains(&self, z: &[i64]) -> bool {
        self.rule.admits(z) && self.kind.admits(z)
    }

    fn support_error(&self, z: &[i64]) -> Error {
        Error::Support {
            frequency: z.to_vec(),
            family: self.to_string(),
        }
    }

    pub fn weight_at(&self, z: &Frequency) -> Result<f64> {
        Ok(self.log_weight(z.coords())?.exp())
    }

    /// `ln a_z` for `z` in the support.
    pub fn log_weight(&self, z: &[i64]) -> Result<f64> {
        if !self.contains(z) {
            return Err(self.support_error(z));
        }
        Ok(self.kind.log_weight_unchecked(z))
    }

    /// `a_z^{-2}` for `z` in the support.
    pub fn inverse_square(&self, z: &[i64]) -> Result<f64> {
        if !self.contains(z) {
            return Err(self.support_error(z));
        }
        Ok(self.kind.inverse_square_unchecked(z))
    }

    /// `a_z^{-2}` with absent terms mapped to 0: points excluded by the rule,
    /// the sinc exterior and the Sobolev origin. Points where the weight is
    /// undefined (small logarithmic norms, frequencies missing from a custom
    /// table) are errors.
    pub fn inverse_square_or_absent(&self, z: &[i64]) -> Result<f64> {
        if !self.rule.admits(z) || self.kind.vanishes_outside(z) {
            return Ok(0.0);
        }
        self.inverse_square(z)
    }

    /// `Z_zeta` for this net: the `l_inf` ball of radius `zeta` under the
    /// family's rule, intersected with the support.
    pub fn truncation_set(&self, zeta: u64, dimension: usize) -> Result<FrequencySet> {
        Ok(FrequencySet::lattice_ball(zeta, dimension, self.rule)?
            .filtered(|z| self.kind.admits(z.coords())))
    }

    /// Smallest-norm lattice point on the shell `||z||_inf = radius` admitted
    /// by the rule: `(radius, m, ..., m)` with `m` the smallest coordinate
    /// magnitude the rule allows.
    pub fn boundary_point(&self, radius: u64, dimension: usize) -> Frequency {
        let m = match self.rule {
            SupportRule::PositiveOrthant | SupportRule::NonzeroCoords => 1,
            _ => 0,
        };
        let mut coords = alloc::vec![m; dimension];
        coords[0] = radius as i64;
        Frequency::new(coords)
    }
}

impl fmt::Display for WeightFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.kind, self.rule)
    }
}

/// `sum_{z in Z_zeta} a_z^{-2}` over the family's support, in lexicographic
/// order with compensated summation.
pub fn strength_sum(family: &WeightFamily, zeta: u64, dimension: usize) -> Result<f64> {
    check_dimension(dimension, frequency::DEFAULT_MAX_DIMENSION)?;
    let mut acc = Compensated::default();
    for_each_in_ball(zeta, dimension, family.rule, |z| {
        if family.kind.admits(z) {
            acc.add(family.kind.inverse_square_unchecked(z));
        }
    });
    Ok(acc.value())
}

/// `(A_zeta, B_zeta)`. Both nets must share a support rule.
pub fn strength_sums(
    a: &WeightFamily,
    b: &WeightFamily,
    zeta: u64,
    dimension: usize,
) -> Result<(f64, f64)> {
    if a.rule != b.rule {
        return Err(Error::Config(format!(
            "support rules differ: {} vs {}",
            a.rule, b.rule
        )));
    }
    Ok((
        strength_sum(a, zeta, dimension)?,
        strength_sum(b, zeta, dimension)?,
    ))
}

/// `sum_{z in Z} a_z^{-4}`.
pub fn inverse_fourth_sum(a: &WeightFamily, set: &FrequencySet) -> Result<f64> {
    let terms = set
        .iter()
        .map(|z| a.inverse_square(z.coords()).map(|v| v * v))
        .collect::<Result<Vec<_>>>()?;
    Ok(compensated_sum(terms))
}

/// Supremum of `b_z^2 / a_z^2` over frequencies outside `Z_zeta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailRatio {
    pub value: f64,
    /// `b` decays no faster than `a`; the supremum is infinite.
    pub inconsistent: bool,
}

impl TailRatio {
    fn infinite() -> Self {
        TailRatio {
            value: f64::INFINITY,
            inconsistent: true,
        }
    }
}

/// Whether `b` is at least as strong as `a`, so that `b_z / a_z` stays bounded
/// and `H_b` sits inside `H_a`. Finitely supported nets are always consistent.
pub fn is_consistent_pair(a: &WeightKind, b: &WeightKind) -> bool {
    match (a.decay(), b.decay()) {
        (Some((ca, s)), Some((cb, t))) => match (ca, cb) {
            (_, DecayClass::Flat) => ca == DecayClass::Flat,
            (DecayClass::Flat, _) => true,
            _ if ca == cb => t >= s,
            _ => cb > ca,
        },
        _ => true,
    }
}

const MAX_SCAN_SHELLS: u64 = 1 << 20;

/// `sup_{z notin Z_zeta} b_z^2 / a_z^2`, taken over frequencies in both
/// supports.
///
/// Same-class pairs (and pairs with a flat `a`) have a ratio that decreases in
/// a single norm, so the supremum sits at the smallest-norm point of the shell
/// `||z||_inf = zeta + 1`. Mixed-class pairs are scanned shell by shell over
/// sorted nonnegative representatives until a radial envelope falls below the
/// running maximum. Finitely supported nets are enumerated.
pub fn tail_sup_ratio(
    a: &WeightFamily,
    b: &WeightFamily,
    zeta: u64,
    dimension: usize,
) -> Result<TailRatio> {
    check_dimension(dimension, frequency::DEFAULT_MAX_DIMENSION)?;
    if !is_consistent_pair(&a.kind, &b.kind) {
        return Ok(TailRatio::infinite());
    }
    let log_ratio =
        |z: &[i64]| 2.0 * (b.kind.log_weight_unchecked(z) - a.kind.log_weight_unchecked(z));
    let in_both = |z: &[i64]| a.contains(z) && b.contains(z);

    // finitely supported nets: enumerate the support outside the ball
    let finite: Option<Vec<Vec<i64>>> = match (&a.kind, &b.kind) {
        (WeightKind::Custom(t), _) | (_, WeightKind::Custom(t)) => {
            Some(t.iter().map(|(z, _)| z.coords().to_vec()).collect())
        }
        (WeightKind::Sinc(band), _) | (_, WeightKind::Sinc(band)) => {
            let mut pts = Vec::new();
            for_each_in_ball(*band, dimension, SupportRule::All, |z| pts.push(z.to_vec()));
            Some(pts)
        }
        _ => None,
    };
    if let Some(points) = finite {
        let best = points
            .iter()
            .filter(|z| frequency::linf(z) > zeta && in_both(z))
            .map(|z| log_ratio(z))
            .fold(f64::NEG_INFINITY, f64::max);
        let value = if best == f64::NEG_INFINITY {
            0.0
        } else {
            best.exp()
        };
        return Ok(TailRatio {
            value,
            inconsistent: false,
        });
    }

    let (ca, _) = a.kind.decay().expect("radial kind");
    let (cb, _) = b.kind.decay().expect("radial kind");
    let min_coord: i64 = match a.rule {
        SupportRule::PositiveOrthant | SupportRule::NonzeroCoords => 1,
        _ => 0,
    };
    let needs_log_support = matches!(a.kind, WeightKind::Logarithmic(_))
        || matches!(b.kind, WeightKind::Logarithmic(_));

    let shell_best = |k: u64| -> f64 {
        let mut best = f64::NEG_INFINITY;
        for_each_sorted_shell(k, dimension, min_coord, |z| {
            if in_both(z) {
                best = best.max(log_ratio(z));
            }
        });
        best
    };
    if ca == cb || ca == DecayClass::Flat || cb == DecayClass::Flat {
        let mut z = b.boundary_point(zeta + 1, dimension).coords().to_vec();
        for c in z.iter_mut().skip(1) {
            *c = min_coord;
        }
        if (!needs_log_support || frequency::l2_sq(&z) >= 4.0) && in_both(&z) {
            return Ok(TailRatio {
                value: log_ratio(&z).exp(),
                inconsistent: false,
            });
        }
        // near the origin the boundary point can miss the support: take the
        // first shell that meets it, plus one more since norms overlap
        let mut k = zeta + 1;
        let mut best = f64::NEG_INFINITY;
        while best == f64::NEG_INFINITY && k < zeta + 1 + MAX_SCAN_SHELLS {
            best = shell_best(k);
            k += 1;
        }
        best = best.max(shell_best(k));
        let value = if best == f64::NEG_INFINITY {
            0.0
        } else {
            best.exp()
        };
        return Ok(TailRatio {
            value,
            inconsistent: false,
        });
    }

    // radial envelope: largest b on the shell over smallest a on the shell
    let envelope = |k: u64| -> f64 {
        let mut near = alloc::vec![min_coord; dimension];
        near[0] = k as i64;
        let far = alloc::vec![k as i64; dimension];
        2.0 * (b.kind.log_weight_unchecked(&near) - a.kind.log_weight_unchecked(&far))
    };
    let mut best = f64::NEG_INFINITY;
    let mut k = zeta + 1;
    let mut prev_env = envelope(k);
    while k < zeta + 1 + MAX_SCAN_SHELLS {
        best = best.max(shell_best(k));
        let env = envelope(k + 1);
        if best.is_finite() && env <= best && env <= prev_env {
            break;
        }
        prev_env = env;
        k += 1;
    }
    let value = if best == f64::NEG_INFINITY {
        0.0
    } else {
        best.exp()
    };
    Ok(TailRatio {
        value,
        inconsistent: false,
    })
}

/// Visits sorted representatives `k = c_1 >= c_2 >= ... >= c_D >= min_coord` of
/// the shell `||z||_inf = k`.
fn for_each_sorted_shell<F: FnMut(&[i64])>(k: u64, dimension: usize, min_coord: i64, mut f: F) {
    let k = k as i64;
    if k < min_coord {
        return;
    }
    let mut z = alloc::vec![min_coord; dimension];
    z[0] = k;
    if dimension == 1 {
        f(&z);
        return;
    }
    // z[1..] is a nonincreasing sequence in [min_coord, k]
    for c in z.iter_mut().skip(1) {
        *c = k;
    }
    loop {
        f(&z);
        // step to the next nonincreasing tuple in decreasing lexicographic order
        let mut d = dimension - 1;
        loop {
            if d == 0 {
                return;
            }
            if z[d] > min_coord {
                z[d] -= 1;
                let v = z[d];
                for c in z.iter_mut().skip(d + 1) {
                    *c = v;
                }
                break;
            }
            d -= 1;
        }
    }
}

/// The three-factor product `R_{a,b,Z}` from the variance bound:
/// `(sum b^4/a^8)^{1/4} (sum (b/a^2)^8)^{1/8} (sum b^8)^{1/8}`.
pub fn variance_functional(a: &WeightFamily, b: &WeightFamily, set: &FrequencySet) -> Result<f64> {
    if set.is_empty() {
        return Ok(0.0);
    }
    let mut first = Compensated::default();
    let mut second = Compensated::default();
    let mut third = Compensated::default();
    for z in set {
        let la = a.log_weight(z.coords())?;
        let lb = b.log_weight(z.coords())?;
        first.add((4.0 * lb - 8.0 * la).exp());
        second.add((8.0 * (lb - 2.0 * la)).exp());
        third.add((8.0 * lb).exp());
    }
    Ok(first.value().powf(0.25) * second.value().powf(0.125) * third.value().powf(0.125))
}
