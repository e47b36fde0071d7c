// SPDX-License-Identifier: MIT OR Apache-2.0

//! Post-change parameter boxes and the finite grids the GLR maximizes over.

use serde::Serialize;

use crate::error::{Error, Result};

/// Axis-aligned parameter box `(lo_1, hi_1) x ... x (lo_d, hi_d)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamBox {
    pub bounds: Vec<(f64, f64)>,
}

impl ParamBox {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::argument("parameter box needs at least one dimension"));
        }
        for &(lo, hi) in &bounds {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::argument(format!(
                    "invalid parameter interval ({lo}, {hi})"
                )));
            }
        }
        Ok(Self { bounds })
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    /// Product of interval lengths.
    pub fn volume(&self) -> f64 {
        self.bounds.iter().map(|(lo, hi)| hi - lo).product()
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim()
            && theta
                .iter()
                .zip(&self.bounds)
                .all(|(&t, &(lo, hi))| t >= lo && t <= hi)
    }

    pub fn clamp(&self, theta: &mut [f64]) {
        for (t, &(lo, hi)) in theta.iter_mut().zip(&self.bounds) {
            *t = t.clamp(lo, hi);
        }
    }
}

/// Finite set of parameter points, stored in lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamGrid {
    dim: usize,
    points: Vec<Vec<f64>>,
}

impl ParamGrid {
    /// Tensor grid of cell midpoints: `counts[i]` equal cells along axis `i`.
    ///
    /// Midpoints keep every point strictly inside an open box.
    pub fn uniform(param_box: &ParamBox, counts: &[usize]) -> Result<Self> {
        if counts.len() != param_box.dim() || counts.iter().any(|&c| c == 0) {
            return Err(Error::argument(format!(
                "grid counts {counts:?} do not match a {}-dimensional box",
                param_box.dim()
            )));
        }
        let axes: Vec<Vec<f64>> = param_box
            .bounds
            .iter()
            .zip(counts)
            .map(|(&(lo, hi), &c)| {
                let step = (hi - lo) / c as f64;
                (0..c).map(|i| lo + (i as f64 + 0.5) * step).collect()
            })
            .collect();
        let mut points = vec![Vec::with_capacity(axes.len())];
        for axis in &axes {
            points = points
                .into_iter()
                .flat_map(|prefix| {
                    axis.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect();
        }
        Ok(Self {
            dim: param_box.dim(),
            points,
        })
    }

    pub fn from_points(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::argument("parameter grid must be nonempty"))?;
        if dim == 0 || points.iter().any(|p| p.len() != dim) {
            return Err(Error::argument("grid points must share a positive dimension"));
        }
        let mut points = points;
        points.sort_by(|a, b| {
            a.iter()
                .zip(b)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        Ok(Self { dim, points })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Smallest box containing every grid point, per axis.
    pub fn hull(&self) -> Vec<(f64, f64)> {
        (0..self.dim)
            .map(|i| {
                self.points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                    (lo.min(p[i]), hi.max(p[i]))
                })
            })
            .collect()
    }
}
