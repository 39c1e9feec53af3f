//! Paired scans, ground-truth fusion, normalization, augmentation and the
//! on-disk dataset formats.

mod io;

pub use io::{read_scan_csv, write_scan_csv, DATASET_MAGIC, DATASET_VERSION};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::{Error, Result};

/// Laser scan `x` and obstacle-distance scan `y`, both in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanPair {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl ScanPair {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() || x.is_empty() {
            return Err(Error::shape("ScanPair::new", x.len(), y.len()));
        }
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Entries in `[0, s]` and `y_i ≤ x_i`.
    pub fn validate(&self, max_range: f64) -> Result<()> {
        if self.x.len() != self.y.len() {
            return Err(Error::shape("ScanPair", self.x.len(), self.y.len()));
        }
        for (i, (&x, &y)) in self.x.iter().zip(&self.y).enumerate() {
            if !(0.0..=max_range).contains(&x) || !(0.0..=max_range).contains(&y) {
                return Err(Error::Domain(format!(
                    "reading {i} ({x}, {y}) outside [0, {max_range}]"
                )));
            }
            if y > x {
                return Err(Error::Domain(format!(
                    "reading {i}: obstacle distance {y} exceeds laser distance {x}"
                )));
            }
        }
        Ok(())
    }

    /// Both scans with their index order reversed.
    pub fn flipped(&self) -> ScanPair {
        ScanPair {
            x: self.x.iter().rev().copied().collect(),
            y: self.y.iter().rev().copied().collect(),
        }
    }
}

/// Conservative ground truth `y_i = min(x_i, y^c_i)` from the laser scan and
/// the depth-derived scan.
pub fn fuse(x: &[f64], y_c: &[f64]) -> Result<Vec<f64>> {
    if x.len() != y_c.len() {
        return Err(Error::shape("fuse", x.len(), y_c.len()));
    }
    if let Some(v) = x.iter().chain(y_c).find(|v| !(**v >= 0.0)) {
        return Err(Error::Domain(format!("fuse: invalid distance {v}")));
    }
    Ok(x.iter().zip(y_c).map(|(&a, &b)| a.min(b)).collect())
}

/// Clamps to `[0, s]` and divides by `s`.
pub fn normalize(x: &[f64], max_range: f64) -> Vec<f64> {
    x.iter()
        .map(|v| v.clamp(0.0, max_range) / max_range)
        .collect()
}

pub fn denormalize(x: &[f64], max_range: f64) -> Vec<f64> {
    x.iter().map(|v| v * max_range).collect()
}

/// Adds independent `N(0, σ_n)` noise to every reading and clamps the
/// result to `[0, s]`. Returns a fresh vector; `x` is never modified.
pub fn augment_noise<R: Rng + ?Sized>(
    x: &[f64],
    sigma: f64,
    max_range: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "noise sigma must be finite and non-negative, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(x.to_vec());
    }
    let normal = Normal::new(0.0, sigma)
        .map_err(|e| Error::InvalidConfig(format!("noise sigma {sigma}: {e}")))?;
    Ok(x.iter()
        .map(|&v| (v + normal.sample(rng)).clamp(0.0, max_range))
        .collect())
}

/// With probability ½ reverses both scans of the pair jointly.
pub fn augment_flip<R: Rng + ?Sized>(pair: &ScanPair, rng: &mut R) -> ScanPair {
    if rng.random_bool(0.5) {
        pair.flipped()
    } else {
        pair.clone()
    }
}

/// A set of scan pairs sharing one scan length and maximum range.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub n_points: usize,
    pub max_range: f64,
    /// Free-form note recording how the pairs were produced.
    pub provenance: String,
    pub pairs: Vec<ScanPair>,
}

impl Dataset {
    pub fn new(n_points: usize, max_range: f64, provenance: impl Into<String>) -> Self {
        Self {
            n_points,
            max_range,
            provenance: provenance.into(),
            pairs: Vec::new(),
        }
    }

    pub fn from_pairs(
        pairs: Vec<ScanPair>,
        max_range: f64,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        let n_points = pairs.first().map_or(0, ScanPair::len);
        let ds = Self {
            n_points,
            max_range,
            provenance: provenance.into(),
            pairs,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        for (i, p) in self.pairs.iter().enumerate() {
            if p.len() != self.n_points {
                return Err(Error::shape(
                    "Dataset",
                    self.n_points,
                    format!("pair {i} of length {}", p.len()),
                ));
            }
            p.validate(self.max_range)
                .map_err(|e| Error::Domain(format!("pair {i}: {e}")))?;
        }
        Ok(())
    }

    /// Fails unless the scans have exactly `n_points` readings and share the
    /// model's maximum range.
    pub fn check_compatible(&self, n_points: usize, max_range: f64) -> Result<()> {
        if self.n_points != n_points {
            return Err(Error::shape(
                "dataset vs model",
                format!("scans of {n_points} points"),
                format!("scans of {} points", self.n_points),
            ));
        }
        if self.max_range != max_range {
            return Err(Error::InvalidConfig(format!(
                "dataset max range {} m differs from model max range {max_range} m",
                self.max_range
            )));
        }
        Ok(())
    }
}
