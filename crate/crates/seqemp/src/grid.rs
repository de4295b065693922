//! Evaluation grids: a sorted time axis and a tensor-product lattice over
//! the unit cube.

use crate::error::{Error, Result};
use crate::generators::StationarySample;

/// Tensor-product lattice over `[0, 1]^d`, one sorted axis per dimension.
/// Flat indices are row-major with the first axis slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct ULattice {
    axes: Vec<Vec<f64>>,
}

impl ULattice {
    pub fn new(axes: Vec<Vec<f64>>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::parameter("u_points", "at least one dimension required"));
        }
        for axis in &axes {
            validate_axis(axis, "u_points")?;
        }
        Ok(ULattice { axes })
    }

    /// Equispaced axis with `points_per_dim` values (including 0 and 1) in
    /// each of `dim` dimensions.
    pub fn regular(dim: usize, points_per_dim: usize) -> Result<Self> {
        if points_per_dim < 2 {
            return Err(Error::parameter("points_per_dim", "need at least the endpoints"));
        }
        let axis: Vec<f64> = (0..points_per_dim)
            .map(|i| i as f64 / (points_per_dim - 1) as f64)
            .collect();
        ULattice::new(vec![axis; dim])
    }

    /// Axes formed by the distinct sample coordinate values plus the
    /// endpoints 0 and 1. Grid maxima of indicator-based fields over this
    /// lattice are exact suprema in `u` at fixed time.
    pub fn from_sample(sample: &StationarySample) -> Self {
        let d = sample.dim();
        let mut axes = Vec::with_capacity(d);
        for j in 0..d {
            let mut axis: Vec<f64> = (0..sample.n).map(|i| sample.row(i)[j]).collect();
            axis.push(0.0);
            axis.push(1.0);
            axis.sort_by(|a, b| a.partial_cmp(b).expect("NaN sample value"));
            axis.dedup();
            axes.push(axis);
        }
        ULattice { axes }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    /// Number of lattice points.
    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Decode a flat index into the lattice point coordinates.
    pub fn point(&self, mut flat: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for j in (0..self.dim()).rev() {
            let len = self.axes[j].len();
            out[j] = self.axes[j][flat % len];
            flat /= len;
        }
        out
    }

    /// Flat index of the smallest lattice point dominating `row`
    /// coordinatewise: the row contributes to exactly the lattice points
    /// with per-dimension index at or above this cell.
    pub fn cell_of(&self, row: &[f64]) -> usize {
        let mut flat = 0;
        for (axis, &x) in self.axes.iter().zip(row) {
            let idx = axis.partition_point(|&g| g < x);
            debug_assert!(idx < axis.len(), "sample coordinate above 1");
            flat = flat * axis.len() + idx;
        }
        flat
    }

    /// In-place multidimensional prefix sum: after the call,
    /// `values[p] = sum of the original values over all cells <= p`
    /// coordinatewise. Turns a cell histogram into dominance counts.
    pub fn prefix_sum_in_place(&self, values: &mut [f64]) {
        debug_assert_eq!(values.len(), self.len());
        let mut stride = 1;
        for j in (0..self.dim()).rev() {
            let len = self.axes[j].len();
            for flat in 0..values.len() {
                if (flat / stride) % len > 0 {
                    values[flat] += values[flat - stride];
                }
            }
            stride *= len;
        }
    }

    /// Iterate flat indices together with decoded points.
    pub fn points(&self) -> impl Iterator<Item = (usize, Vec<f64>)> + '_ {
        (0..self.len()).map(move |flat| (flat, self.point(flat)))
    }
}

/// Time axis plus spatial lattice: the domain on which sequential process
/// fields are evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationGrid {
    s_points: Vec<f64>,
    lattice: ULattice,
}

impl EvaluationGrid {
    pub fn new(s_points: Vec<f64>, lattice: ULattice) -> Result<Self> {
        validate_axis(&s_points, "s_points")?;
        Ok(EvaluationGrid { s_points, lattice })
    }

    /// Default grid for a sample: `s in {k/n}` and sample-adaptive axes.
    pub fn from_sample(sample: &StationarySample) -> Self {
        let n = sample.n;
        let s_points = (0..=n).map(|k| k as f64 / n as f64).collect();
        EvaluationGrid {
            s_points,
            lattice: ULattice::from_sample(sample),
        }
    }

    /// Regular grid: `s_steps + 1` time points and equispaced axes.
    pub fn regular(s_steps: usize, dim: usize, u_points_per_dim: usize) -> Result<Self> {
        if s_steps == 0 {
            return Err(Error::parameter("s_steps", "must be at least 1"));
        }
        let s_points = (0..=s_steps).map(|k| k as f64 / s_steps as f64).collect();
        Ok(EvaluationGrid {
            s_points,
            lattice: ULattice::regular(dim, u_points_per_dim)?,
        })
    }

    pub fn s_points(&self) -> &[f64] {
        &self.s_points
    }

    pub fn lattice(&self) -> &ULattice {
        &self.lattice
    }

    /// Index of `s = 1` (the last point).
    pub fn s_one_index(&self) -> usize {
        self.s_points.len() - 1
    }
}

/// Prefix length `floor(s * n)`, with snapping so that axis values stored
/// as `k / n` in floating point map back to exactly `k`.
pub fn prefix_len(s: f64, n: usize) -> usize {
    let t = s * n as f64;
    let rounded = t.round();
    let k = if (t - rounded).abs() < 1e-9 { rounded } else { t.floor() };
    (k as usize).min(n)
}

fn validate_axis(axis: &[f64], name: &'static str) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::parameter(name, "empty axis"));
    }
    if axis.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::parameter(name, "must be strictly increasing"));
    }
    if axis[0] != 0.0 || *axis.last().unwrap() != 1.0 {
        return Err(Error::parameter(name, "must include the endpoints 0 and 1"));
    }
    Ok(())
}
