//! Correlation maps shared by the solvers, the estimators and the front end.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linear::apply_floor;
use crate::stats::{half_width_at_half_depth, interp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationKind {
    Cross,
    #[serde(rename = "self")]
    SelfPair,
}

/// Normalised g²(τ) on a uniform τ grid centred on zero.
///
/// The half-width convention is half width at half depth: the lag where
/// g² = (1 + g²(0))/2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMap {
    pub kind: CorrelationKind,
    /// Bin centres (μs), symmetric about 0, odd count.
    pub tau: Vec<f64>,
    pub g2: Vec<f64>,
    pub bin_width: f64,
    /// Statistical 1σ error per bin when estimated from counts.
    pub error: Option<Vec<f64>>,
    pub normalization: String,
}

pub const HALF_WIDTH_CONVENTION: &str = "half-width at half depth";

impl CorrelationMap {
    /// Uniform lag grid covering [−max_lag, max_lag] with a bin centred on 0.
    pub fn lag_grid(bin_width: f64, max_lag: f64) -> Vec<f64> {
        let half = (max_lag / bin_width).round() as i64;
        (-half..=half).map(|k| k as f64 * bin_width).collect()
    }

    pub fn from_samples(kind: CorrelationKind, tau: Vec<f64>, g2: Vec<f64>, normalization: &str) -> Result<Self> {
        if tau.len() != g2.len() || tau.len() < 3 {
            return Err(Error::InvalidInput("correlation map needs ≥ 3 matching samples".into()));
        }
        let bin_width = tau[1] - tau[0];
        Ok(CorrelationMap {
            kind,
            tau,
            g2,
            bin_width,
            error: None,
            normalization: normalization.into(),
        })
    }

    fn zero_index(&self) -> usize {
        self.tau
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    pub fn at_zero(&self) -> f64 {
        self.g2[self.zero_index()]
    }

    /// Mean of g² over bins with |τ| ≤ `radius`.
    pub fn mean_near_zero(&self, radius: f64) -> f64 {
        let sel: Vec<f64> = self
            .tau
            .iter()
            .zip(&self.g2)
            .filter(|(t, g)| t.abs() <= radius + 1e-12 && g.is_finite())
            .map(|(_, g)| *g)
            .collect();
        if sel.is_empty() {
            self.at_zero()
        } else {
            sel.iter().sum::<f64>() / sel.len() as f64
        }
    }

    pub fn value_at(&self, tau: f64) -> f64 {
        interp(&self.tau, &self.g2, tau)
    }

    /// Half width at half depth, averaged over the two sides.
    pub fn half_width(&self) -> Option<f64> {
        let z = self.zero_index();
        let g0 = self.g2[z];
        let right = half_width_at_half_depth(&self.tau, &self.g2, g0, z);
        let neg_tau: Vec<f64> = self.tau[..=z].iter().rev().map(|t| -t).collect();
        let neg_g: Vec<f64> = self.g2[..=z].iter().rev().copied().collect();
        let left = half_width_at_half_depth(&neg_tau, &neg_g, g0, 0);
        match (left, right) {
            (Some(l), Some(r)) => Some(0.5 * (l + r)),
            (Some(v), None) | (None, Some(v)) => Some(v),
            (None, None) => None,
        }
    }

    pub fn floored(&self, s: f64) -> Vec<f64> {
        self.g2.iter().map(|&g| apply_floor(g, s)).collect()
    }

    /// Mean of |τ| > `lag` bins; the long-lag plateau.
    pub fn plateau(&self, lag: f64) -> f64 {
        let sel: Vec<f64> = self
            .tau
            .iter()
            .zip(&self.g2)
            .filter(|(t, g)| t.abs() >= lag && g.is_finite())
            .map(|(_, g)| *g)
            .collect();
        sel.iter().sum::<f64>() / sel.len().max(1) as f64
    }
}

/// Two-time map g(t₁, t₂) on a regular grid, row-major in t₁.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeMap {
    pub t1: Vec<f64>,
    pub t2: Vec<f64>,
    /// `values[i * t2.len() + j]` is the value at (t1[i], t2[j]); NaN is masked.
    pub values: Vec<f64>,
}

impl TimeMap {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.t2.len() + j]
    }

    /// Bilinear interpolation; NaN outside or on masked cells.
    pub fn sample(&self, a: f64, b: f64) -> f64 {
        let locate = |axis: &[f64], v: f64| -> Option<(usize, f64)> {
            if axis.len() < 2 || v < axis[0] || v > axis[axis.len() - 1] {
                return None;
            }
            let h = axis[1] - axis[0];
            let k = (((v - axis[0]) / h).floor() as usize).min(axis.len() - 2);
            Some((k, (v - axis[k]) / h))
        };
        let (Some((i, fx)), Some((j, fy))) = (locate(&self.t1, a), locate(&self.t2, b)) else {
            return f64::NAN;
        };
        let v00 = self.get(i, j);
        let v10 = self.get(i + 1, j);
        let v01 = self.get(i, j + 1);
        let v11 = self.get(i + 1, j + 1);
        (1.0 - fx) * (1.0 - fy) * v00 + fx * (1.0 - fy) * v10 + (1.0 - fx) * fy * v01 + fx * fy * v11
    }

    pub fn max_finite(&self) -> f64 {
        self.values.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max)
    }
}
