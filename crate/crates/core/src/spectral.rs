//! Fourier basis on the torus and empirical characteristic functions.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::frequency::{Frequency, FrequencySet};

fn check_point(x: &[f64]) -> Result<()> {
    for &v in x {
        if !(0.0..1.0).contains(&v) {
            return Err(Error::Domain { value: v });
        }
    }
    Ok(())
}

/// `exp(2 pi i t)`, reducing `t` mod 1 first so large phases stay accurate.
fn unit_phase(t: f64) -> Complex64 {
    let r = t - t.floor();
    let (s, c) = (TAU * r).sin_cos();
    Complex64::new(c, s)
}

/// `psi_z(x) = exp(2 pi i <z, x>)` for `x` in `[0, 1)^D`.
pub fn basis_eval(z: &Frequency, x: &[f64]) -> Result<Complex64> {
    if z.dimension() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: z.dimension(),
            got: x.len(),
        });
    }
    check_point(x)?;
    let mut out = Complex64::new(1.0, 0.0);
    for (&k, &xd) in z.coords().iter().zip(x) {
        out *= unit_phase(k as f64 * xd);
    }
    Ok(out)
}

/// I.i.d. sample points in `[0, 1)^D`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    dimension: usize,
    points: Vec<f64>,
    label: String,
}

impl SampleSet {
    /// `points` is row-major with `dimension` coordinates per sample.
    pub fn new(dimension: usize, points: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Dimension {
                dimension,
                max: crate::frequency::DEFAULT_MAX_DIMENSION,
            });
        }
        if points.len() % dimension != 0 {
            return Err(Error::Config(alloc::format!(
                "{} coordinates do not split into points of dimension {dimension}",
                points.len()
            )));
        }
        check_point(&points)?;
        Ok(SampleSet {
            dimension,
            points,
            label: label.into(),
        })
    }

    pub fn from_rows(
        dimension: usize,
        rows: &[Vec<f64>],
        label: impl Into<String>,
    ) -> Result<Self> {
        let mut points = Vec::with_capacity(rows.len() * dimension);
        for row in rows {
            if row.len() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    got: row.len(),
                });
            }
            points.extend_from_slice(row);
        }
        Self::new(dimension, points, label)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dimension
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn points(&self) -> core::slice::ChunksExact<'_, f64> {
        self.points.chunks_exact(self.dimension)
    }

    /// Samples `[start, end)` as a new set, in the same order.
    pub fn slice(&self, start: usize, end: usize) -> SampleSet {
        SampleSet {
            dimension: self.dimension,
            points: self.points[start * self.dimension..end * self.dimension].to_vec(),
            label: self.label.clone(),
        }
    }

    /// First `floor(n/2)` samples and the remainder.
    pub fn split_halves(&self) -> (SampleSet, SampleSet) {
        let n = self.len();
        (self.slice(0, n / 2), self.slice(n / 2, n))
    }
}

/// Where a profile's coefficients came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Empirical { n: usize },
    Exact,
}

/// Map from frequency to characteristic-function coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralProfile {
    coefficients: BTreeMap<Frequency, Complex64>,
    provenance: Provenance,
}

impl SpectralProfile {
    pub fn new(coefficients: BTreeMap<Frequency, Complex64>, provenance: Provenance) -> Self {
        SpectralProfile {
            coefficients,
            provenance,
        }
    }

    pub fn get(&self, z: &Frequency) -> Option<Complex64> {
        self.coefficients.get(z).copied()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Frequency, Complex64)> {
        self.coefficients.iter().map(|(z, c)| (z, *c))
    }
}

/// `phi_hat(z) = (1/n) sum_i conj(psi_z(X_i))` for every `z` in `set`.
///
/// Per-axis phase tables `exp(-2 pi i k x_d)` are evaluated directly for
/// `k = 0..=radius`; negative `k` reuse the conjugate, so the profile is
/// exactly Hermitian on negation-closed sets.
pub fn empirical_cf(samples: &SampleSet, set: &FrequencySet) -> Result<SpectralProfile> {
    if samples.is_empty() {
        return Err(Error::Estimation(String::from(
            "empirical characteristic function of an empty sample",
        )));
    }
    if samples.dimension() != set.dimension() {
        return Err(Error::DimensionMismatch {
            expected: set.dimension(),
            got: samples.dimension(),
        });
    }
    let d = samples.dimension();
    let radius = set.radius() as usize;
    let width = radius + 1;
    let mut sums = alloc::vec![Complex64::new(0.0, 0.0); set.len()];
    let mut table = alloc::vec![Complex64::new(0.0, 0.0); d * width];
    for x in samples.points() {
        for (axis, &xd) in x.iter().enumerate() {
            for k in 0..width {
                table[axis * width + k] = unit_phase(-(k as f64) * xd);
            }
        }
        for (acc, z) in sums.iter_mut().zip(set.iter()) {
            let mut term = Complex64::new(1.0, 0.0);
            for (axis, &k) in z.coords().iter().enumerate() {
                let e = table[axis * width + k.unsigned_abs() as usize];
                term *= if k < 0 { e.conj() } else { e };
            }
            *acc += term;
        }
    }
    let n = samples.len();
    let scale = 1.0 / n as f64;
    let coefficients = set
        .iter()
        .cloned()
        .zip(sums.into_iter().map(|s| s * scale))
        .collect();
    Ok(SpectralProfile {
        coefficients,
        provenance: Provenance::Empirical { n },
    })
}
