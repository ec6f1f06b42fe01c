//! Workloads shared by the criterion benches.

use std::collections::BTreeSet;

use ndarray::Array2;
use tdr_core::synthetic::{low_rank_tensor, planted_cluster, three_blobs};
use tdr_core::Tensor3;

/// Roughly the size of an air-quality tensor: 53 weeks, 55 stations, 5 gases.
pub fn air_quality_sized() -> Tensor3 {
    low_rank_tensor([53, 55, 5], 1)
}

pub fn tensor(dims: [usize; 3]) -> Tensor3 {
    low_rank_tensor(dims, 2)
}

pub fn blobs(rows: usize) -> Array2<f64> {
    three_blobs(rows / 3, 10, 20.0, 3).0
}

pub fn planted(rows: usize, cols: usize) -> (Array2<f64>, BTreeSet<usize>) {
    planted_cluster(rows, cols, rows / 7, 0, 10.0, 4)
}
