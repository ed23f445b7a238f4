//! Integer frequency lattice `Z^D` and the truncated index sets `Z_zeta`.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Largest lattice dimension accepted unless a caller asks for more.
pub const DEFAULT_MAX_DIMENSION: usize = 8;

/// A point of the integer lattice `Z^D`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Frequency(Vec<i64>);

impl Frequency {
    pub fn new(coords: Vec<i64>) -> Self {
        Frequency(coords)
    }

    pub fn zero(dimension: usize) -> Self {
        Frequency(alloc::vec![0; dimension])
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        is_zero(&self.0)
    }

    pub fn neg(&self) -> Self {
        Frequency(self.0.iter().map(|c| -c).collect())
    }

    pub fn l1(&self) -> f64 {
        l1(&self.0)
    }

    pub fn l2(&self) -> f64 {
        l2(&self.0)
    }

    pub fn linf(&self) -> u64 {
        linf(&self.0)
    }
}

impl From<Vec<i64>> for Frequency {
    fn from(coords: Vec<i64>) -> Self {
        Frequency(coords)
    }
}

impl From<&[i64]> for Frequency {
    fn from(coords: &[i64]) -> Self {
        Frequency(coords.to_vec())
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

pub(crate) fn is_zero(z: &[i64]) -> bool {
    z.iter().all(|&c| c == 0)
}

pub(crate) fn l1(z: &[i64]) -> f64 {
    z.iter().map(|&c| c.unsigned_abs() as f64).sum()
}

pub(crate) fn l2_sq(z: &[i64]) -> f64 {
    z.iter().map(|&c| (c as f64) * (c as f64)).sum()
}

pub(crate) fn l2(z: &[i64]) -> f64 {
    l2_sq(z).sqrt()
}

pub(crate) fn linf(z: &[i64]) -> u64 {
    z.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0)
}

/// Which lattice points a weight net is indexed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SupportRule {
    /// Every frequency, including the origin.
    #[default]
    All,
    /// Every frequency except the origin (Sobolev-type seminorms).
    ExcludeOrigin,
    /// Frequencies with all coordinates strictly positive, `N^D`.
    PositiveOrthant,
    /// Frequencies with no zero coordinate.
    NonzeroCoords,
}

impl SupportRule {
    pub fn admits(self, z: &[i64]) -> bool {
        match self {
            SupportRule::All => true,
            SupportRule::ExcludeOrigin => !is_zero(z),
            SupportRule::PositiveOrthant => z.iter().all(|&c| c > 0),
            SupportRule::NonzeroCoords => z.iter().all(|&c| c != 0),
        }
    }

    /// Whether `z` admitted implies `-z` admitted.
    pub fn is_negation_symmetric(self) -> bool {
        !matches!(self, SupportRule::PositiveOrthant)
    }

    pub fn name(self) -> &'static str {
        match self {
            SupportRule::All => "all",
            SupportRule::ExcludeOrigin => "exclude_origin",
            SupportRule::PositiveOrthant => "positive_orthant",
            SupportRule::NonzeroCoords => "nonzero_coords",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "all" => Some(SupportRule::All),
            "exclude_origin" => Some(SupportRule::ExcludeOrigin),
            "positive_orthant" => Some(SupportRule::PositiveOrthant),
            "nonzero_coords" => Some(SupportRule::NonzeroCoords),
            _ => None,
        }
    }

    /// Number of admitted points in the `l_inf` ball of radius `zeta`.
    pub fn ball_count(self, zeta: u64, dimension: usize) -> u128 {
        let side = 2 * zeta as u128 + 1;
        let d = dimension as u32;
        match self {
            SupportRule::All => side.pow(d),
            SupportRule::ExcludeOrigin => side.pow(d) - 1,
            SupportRule::PositiveOrthant => (zeta as u128).pow(d),
            SupportRule::NonzeroCoords => (2 * zeta as u128).pow(d),
        }
    }
}

impl fmt::Display for SupportRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub(crate) fn check_dimension(dimension: usize, max: usize) -> Result<()> {
    if dimension == 0 || dimension > max {
        return Err(Error::Dimension { dimension, max });
    }
    Ok(())
}

/// Calls `f` on every `z` with `||z||_inf <= zeta` admitted by `rule`, in
/// lexicographic order, without allocating per point.
pub(crate) fn for_each_in_ball<F: FnMut(&[i64])>(
    zeta: u64,
    dimension: usize,
    rule: SupportRule,
    mut f: F,
) {
    let (lo, hi) = match rule {
        SupportRule::PositiveOrthant => {
            if zeta == 0 {
                return;
            }
            (1i64, zeta as i64)
        }
        _ => (-(zeta as i64), zeta as i64),
    };
    let mut z = alloc::vec![lo; dimension];
    loop {
        if rule.admits(&z) {
            f(&z);
        }
        // odometer, last coordinate fastest
        let mut d = dimension;
        loop {
            if d == 0 {
                return;
            }
            d -= 1;
            if z[d] < hi {
                z[d] += 1;
                for c in z.iter_mut().skip(d + 1) {
                    *c = lo;
                }
                break;
            }
        }
    }
}

/// A finite set of lattice frequencies, kept in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySet {
    dimension: usize,
    radius: u64,
    members: Vec<Frequency>,
    rule: SupportRule,
}

impl FrequencySet {
    /// All `z` in `Z^D` with `||z||_inf <= zeta` that pass `rule`.
    pub fn lattice_ball(zeta: u64, dimension: usize, rule: SupportRule) -> Result<Self> {
        Self::lattice_ball_with_limit(zeta, dimension, rule, DEFAULT_MAX_DIMENSION)
    }

    pub fn lattice_ball_with_limit(
        zeta: u64,
        dimension: usize,
        rule: SupportRule,
        max_dimension: usize,
    ) -> Result<Self> {
        check_dimension(dimension, max_dimension)?;
        let mut members = Vec::new();
        for_each_in_ball(zeta, dimension, rule, |z| members.push(Frequency::from(z)));
        Ok(FrequencySet {
            dimension,
            radius: zeta,
            members,
            rule,
        })
    }

    /// An explicit set. Members are sorted; duplicates and dimension
    /// mismatches are rejected. The radius is the largest `l_inf` norm.
    pub fn from_members(
        dimension: usize,
        members: Vec<Frequency>,
        rule: SupportRule,
    ) -> Result<Self> {
        check_dimension(dimension, DEFAULT_MAX_DIMENSION)?;
        let mut seen = BTreeSet::new();
        for z in &members {
            if z.dimension() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    got: z.dimension(),
                });
            }
            if !rule.admits(z.coords()) {
                return Err(Error::Config(format!(
                    "frequency {z} violates support rule {rule}"
                )));
            }
            if !seen.insert(z.clone()) {
                return Err(Error::Config(format!("duplicate frequency {z}")));
            }
        }
        let members: Vec<Frequency> = seen.into_iter().collect();
        let radius = members.iter().map(Frequency::linf).max().unwrap_or(0);
        Ok(FrequencySet {
            dimension,
            radius,
            members,
            rule,
        })
    }

    pub fn empty(dimension: usize, rule: SupportRule) -> Self {
        FrequencySet {
            dimension,
            radius: 0,
            members: Vec::new(),
            rule,
        }
    }

    /// Keeps only the members accepted by `keep`.
    pub fn filtered<F: FnMut(&Frequency) -> bool>(mut self, mut keep: F) -> Self {
        self.members.retain(|z| keep(z));
        self
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn radius(&self) -> u64 {
        self.radius
    }

    pub fn rule(&self) -> SupportRule {
        self.rule
    }

    pub fn members(&self) -> &[Frequency] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, z: &Frequency) -> bool {
        self.members.binary_search(z).is_ok()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Frequency> {
        self.members.iter()
    }

    pub fn is_negation_closed(&self) -> bool {
        self.members.iter().all(|z| self.contains(&z.neg()))
    }
}

impl<'a> IntoIterator for &'a FrequencySet {
    type Item = &'a Frequency;
    type IntoIter = core::slice::Iter<'a, Frequency>;

    fn into_iter(self) -> Self::IntoIter {
        self.members.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn coords(set: &FrequencySet) -> Vec<Vec<i64>> {
        set.iter().map(|z| z.coords().to_vec()).collect()
    }

    #[test]
    fn ball_examples() {
        assert_eq!(
            FrequencySet::lattice_ball(1, 2, SupportRule::All)
                .unwrap()
                .len(),
            9
        );
        let s = FrequencySet::lattice_ball(2, 1, SupportRule::ExcludeOrigin).unwrap();
        assert_eq!(coords(&s), vec![vec![-2], vec![-1], vec![1], vec![2]]);
        let s = FrequencySet::lattice_ball(3, 2, SupportRule::PositiveOrthant).unwrap();
        assert_eq!(s.len(), 9);
        assert!(s
            .iter()
            .all(|z| z.coords().iter().all(|&c| (1..=3).contains(&c))));
    }

    #[test]
    fn counts_match_formula_exhaustively() {
        for d in 1..=3 {
            for zeta in 0..=10u64 {
                for rule in [
                    SupportRule::All,
                    SupportRule::ExcludeOrigin,
                    SupportRule::PositiveOrthant,
                    SupportRule::NonzeroCoords,
                ] {
                    let s = FrequencySet::lattice_ball(zeta, d, rule).unwrap();
                    assert_eq!(
                        s.len() as u128,
                        rule.ball_count(zeta, d),
                        "{rule} zeta={zeta} d={d}"
                    );
                }
            }
        }
    }

    #[test]
    fn ball_is_sorted_negation_closed_and_nested() {
        for d in 1..=3 {
            for zeta in 0..6u64 {
                let s = FrequencySet::lattice_ball(zeta, d, SupportRule::All).unwrap();
                assert!(s.members().windows(2).all(|w| w[0] < w[1]));
                assert!(s.is_negation_closed());
                let bigger = FrequencySet::lattice_ball(zeta + 1, d, SupportRule::All).unwrap();
                assert!(s.iter().all(|z| bigger.contains(z)));
                assert!(s.iter().all(|z| z.linf() <= zeta));
            }
        }
        let s = FrequencySet::lattice_ball(2, 2, SupportRule::PositiveOrthant).unwrap();
        assert!(!s.is_negation_closed());
    }

    #[test]
    fn dimension_limits() {
        assert_eq!(
            FrequencySet::lattice_ball(1, 0, SupportRule::All),
            Err(Error::Dimension {
                dimension: 0,
                max: 8
            })
        );
        assert!(FrequencySet::lattice_ball(1, 9, SupportRule::All).is_err());
        assert!(FrequencySet::lattice_ball_with_limit(0, 9, SupportRule::All, 10).is_ok());
    }

    #[test]
    fn explicit_sets() {
        let set = FrequencySet::from_members(
            1,
            vec![
                Frequency::new(vec![2]),
                Frequency::new(vec![-1]),
                Frequency::new(vec![1]),
            ],
            SupportRule::ExcludeOrigin,
        )
        .unwrap();
        assert_eq!(coords(&set), vec![vec![-1], vec![1], vec![2]]);
        assert_eq!(set.radius(), 2);
        assert!(!set.is_negation_closed());
        let dup = FrequencySet::from_members(1, vec![Frequency::new(vec![1]); 2], SupportRule::All);
        assert!(matches!(dup, Err(Error::Config(_))));
        let origin =
            FrequencySet::from_members(1, vec![Frequency::zero(1)], SupportRule::ExcludeOrigin);
        assert!(origin.is_err());
    }

    #[test]
    fn norms() {
        let z = Frequency::new(vec![3, -4]);
        assert_eq!(z.l1(), 7.0);
        assert_eq!(z.l2(), 5.0);
        assert_eq!(z.linf(), 4);
        assert_eq!(Frequency::zero(3).l2(), 0.0);
        assert_eq!(z.to_string(), "(3,-4)");
    }
}
