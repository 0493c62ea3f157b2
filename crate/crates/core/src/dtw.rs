//! Multi-dimensional dynamic time warping.
//!
//! Local cost is the Euclidean distance between the two frame vectors. Steps
//! are `(1,0)`, `(0,1)` and `(1,1)` with unit weights, the path is anchored at
//! both ends, and no band constraint is applied. Among cost-optimal paths the
//! shortest is taken; with [`DtwNormalization::PathLength`] the accumulated
//! cost is divided by that path's length.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par::{self, Execution};

#[derive(Debug, Error, PartialEq)]
pub enum DtwError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("empty series")]
    EmptySeries,
    #[error("template selection needs at least 2 training series, got {0}")]
    InsufficientTraining(usize),
    #[error("non-finite value in series")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DtwNormalization {
    #[default]
    PathLength,
    None,
}

/// A series of `dim`-dimensional vectors stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorSeries {
    dim: usize,
    values: Vec<f64>,
}

impl VectorSeries {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self, DtwError> {
        if dim == 0 || values.is_empty() {
            return Err(DtwError::EmptySeries);
        }
        if !values.len().is_multiple_of(dim) {
            return Err(DtwError::DimensionMismatch(dim, values.len() % dim));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(DtwError::NonFinite);
        }
        Ok(Self { dim, values })
    }

    pub fn from_rows<const D: usize>(rows: &[[f64; D]]) -> Result<Self, DtwError> {
        Self::new(D, rows.iter().flatten().copied().collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn slice(&self, start: usize, end_inclusive: usize) -> VectorSeries {
        VectorSeries {
            dim: self.dim,
            values: self.values[start * self.dim..(end_inclusive + 1) * self.dim].to_vec(),
        }
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Accumulated cost and length of the best path into a cell.
#[derive(Clone, Copy)]
struct Cell {
    cost: f64,
    len: u32,
}

impl Cell {
    fn better(self, other: Cell) -> Cell {
        if other.cost < self.cost || (other.cost == self.cost && other.len < self.len) {
            other
        } else {
            self
        }
    }
}

/// Optimal accumulated cost and the length of the path achieving it.
pub fn dtw_cost_and_length(x: &VectorSeries, y: &VectorSeries) -> Result<(f64, usize), DtwError> {
    if x.dim != y.dim {
        return Err(DtwError::DimensionMismatch(x.dim, y.dim));
    }
    if x.is_empty() || y.is_empty() {
        return Err(DtwError::EmptySeries);
    }
    let (n, m) = (x.len(), y.len());
    let inf = Cell {
        cost: f64::INFINITY,
        len: u32::MAX,
    };
    let mut prev = vec![inf; m];
    let mut curr = vec![inf; m];
    for i in 0..n {
        let xi = x.row(i);
        for j in 0..m {
            let local = euclidean(xi, y.row(j));
            let best = if i == 0 && j == 0 {
                Cell { cost: 0.0, len: 0 }
            } else {
                let mut b = inf;
                if i > 0 {
                    b = b.better(prev[j]);
                }
                if j > 0 {
                    b = b.better(curr[j - 1]);
                }
                if i > 0 && j > 0 {
                    b = b.better(prev[j - 1]);
                }
                b
            };
            curr[j] = Cell {
                cost: best.cost + local,
                len: best.len + 1,
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    let end = prev[m - 1];
    Ok((end.cost, end.len as usize))
}

pub fn mddtw_distance_with(
    x: &VectorSeries,
    y: &VectorSeries,
    normalization: DtwNormalization,
) -> Result<f64, DtwError> {
    let (cost, len) = dtw_cost_and_length(x, y)?;
    Ok(match normalization {
        DtwNormalization::PathLength => cost / len as f64,
        DtwNormalization::None => cost,
    })
}

/// Path-length-normalized MDDTW distance.
pub fn mddtw_distance(x: &VectorSeries, y: &VectorSeries) -> Result<f64, DtwError> {
    mddtw_distance_with(x, y, DtwNormalization::PathLength)
}

/// Symmetric all-pairs distance matrix, row-major `n x n`. Each cell is
/// computed independently, so the result does not depend on `exec`.
pub fn distance_matrix(
    series: &[VectorSeries],
    normalization: DtwNormalization,
    exec: Execution,
) -> Result<Vec<f64>, DtwError> {
    let n = series.len();
    if let Some(first) = series.first() {
        if let Some(bad) = series.iter().find(|s| s.dim != first.dim) {
            return Err(DtwError::DimensionMismatch(first.dim, bad.dim));
        }
    }
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let upper = par::try_map(exec, &pairs, |&(i, j)| {
        mddtw_distance_with(&series[i], &series[j], normalization)
    })?;
    let mut out = vec![0.0; n * n];
    for (&(i, j), d) in pairs.iter().zip(upper) {
        out[i * n + j] = d;
        out[j * n + i] = d;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtwTemplate {
    pub series: VectorSeries,
    /// Index of the template within the training list.
    pub index: usize,
    /// Distance from every training series to the template.
    pub training_distances: Vec<f64>,
    pub normalization: DtwNormalization,
}

pub fn select_template(training: &[VectorSeries]) -> Result<DtwTemplate, DtwError> {
    select_template_with(training, DtwNormalization::PathLength, Execution::default())
}

/// Picks the training series with the smallest summed distance to all
/// others; ties go to the lowest index.
pub fn select_template_with(
    training: &[VectorSeries],
    normalization: DtwNormalization,
    exec: Execution,
) -> Result<DtwTemplate, DtwError> {
    let n = training.len();
    if n < 2 {
        return Err(DtwError::InsufficientTraining(n));
    }
    let matrix = distance_matrix(training, normalization, exec)?;
    let mut best = 0;
    let mut best_sum = f64::INFINITY;
    for i in 0..n {
        let sum: f64 = matrix[i * n..(i + 1) * n].iter().sum();
        if sum < best_sum {
            best = i;
            best_sum = sum;
        }
    }
    Ok(DtwTemplate {
        series: training[best].clone(),
        index: best,
        training_distances: (0..n).map(|i| matrix[i * n + best]).collect(),
        normalization,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lift(v: &[f64]) -> VectorSeries {
        VectorSeries::from_rows(&v.iter().map(|&a| [a, 0.0, 0.0]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn single_pair() {
        let x = VectorSeries::from_rows(&[[0.0, 0.0, 0.0]]).unwrap();
        let y = VectorSeries::from_rows(&[[3.0, 4.0, 0.0]]).unwrap();
        assert_eq!(mddtw_distance(&x, &y).unwrap(), 5.0);
    }

    #[test]
    fn zero_cost_warp() {
        let (cost, len) = dtw_cost_and_length(&lift(&[0.0, 1.0]), &lift(&[0.0, 1.0, 1.0])).unwrap();
        assert_eq!(cost, 0.0);
        assert_eq!(len, 3);
    }

    #[test]
    fn self_distance_is_zero() {
        let x = lift(&[0.3, -1.0, 2.5, 2.5, 0.0]);
        assert_eq!(mddtw_distance(&x, &x).unwrap(), 0.0);
    }

    #[test]
    fn errors() {
        let a = VectorSeries::new(2, vec![0.0, 0.0]).unwrap();
        let b = lift(&[0.0]);
        assert_eq!(mddtw_distance(&a, &b), Err(DtwError::DimensionMismatch(2, 3)));
        assert_eq!(VectorSeries::new(3, vec![]), Err(DtwError::EmptySeries));
        assert_eq!(select_template(&[b]), Err(DtwError::InsufficientTraining(1)));
    }

    #[test]
    fn template_of_identical_series() {
        let s = lift(&[1.0, 2.0, 3.0]);
        let t = select_template(&[s.clone(), s.clone(), s]).unwrap();
        assert_eq!(t.index, 0);
        assert_eq!(t.training_distances, vec![0.0; 3]);
    }

    #[test]
    fn template_of_two_is_first() {
        let t = select_template(&[lift(&[0.0, 1.0]), lift(&[5.0, 2.0, 1.0])]).unwrap();
        assert_eq!(t.index, 0);
    }

    #[test]
    fn template_is_the_middle_level() {
        // Constant series: distance is |a - b| for any alignment, so the row
        // sums are 1.5, 1.5 and 1.0.
        let t = select_template(&[lift(&[0.0; 4]), lift(&[1.0; 4]), lift(&[0.5; 4])]).unwrap();
        assert_eq!(t.index, 2);
        assert_eq!(t.training_distances, vec![0.5, 0.5, 0.0]);
    }

    #[test]
    fn unnormalized_cost() {
        let x = lift(&[0.0, 0.0]);
        let y = lift(&[1.0, 1.0]);
        assert_eq!(mddtw_distance_with(&x, &y, DtwNormalization::None).unwrap(), 2.0);
        assert_eq!(mddtw_distance(&x, &y).unwrap(), 1.0);
    }
}
