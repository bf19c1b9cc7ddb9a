use super::DesignMatrix;
use crate::exec::partition;
use crate::{Error, Result};

/// One contiguous row block with its own copy of X and y.
#[derive(Debug, Clone, PartialEq)]
pub struct Shard {
    x: Vec<f64>,
    y: Vec<f64>,
    row_offset: usize,
}

impl Shard {
    pub fn x(&self) -> &[f64] {
        &self.x
    }
    pub fn y(&self) -> &[f64] {
        &self.y
    }
    pub fn row_offset(&self) -> usize {
        self.row_offset
    }
    pub fn n_rows(&self) -> usize {
        self.y.len()
    }
}

/// Rows split into per-shard private allocations. Page placement is left
/// to the allocator: each shard is filled by a single copy so first-touch
/// systems keep it near whichever thread builds it.
#[derive(Debug, Clone, PartialEq)]
pub struct ShardedMatrix {
    n_rows: usize,
    n_cols: usize,
    shards: Vec<Shard>,
}

impl ShardedMatrix {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }
    pub fn n_shards(&self) -> usize {
        self.shards.len()
    }
    pub fn shards(&self) -> &[Shard] {
        &self.shards
    }
}

/// Copies `data` into `n_shards` near-equal contiguous row blocks, larger
/// blocks first.
pub fn make_sharded(data: &DesignMatrix, n_shards: usize) -> Result<ShardedMatrix> {
    let n = data.n_rows();
    if n_shards == 0 || n_shards > n {
        return Err(Error::InvalidArgument(format!(
            "n_shards must be in 1..={n}, got {n_shards}"
        )));
    }
    let k = data.n_cols();
    let shards = partition(n, n_shards)
        .into_iter()
        .map(|r| Shard {
            x: data.x()[r.start * k..r.end * k].to_vec(),
            y: data.y()[r.clone()].to_vec(),
            row_offset: r.start,
        })
        .collect();
    Ok(ShardedMatrix {
        n_rows: n,
        n_cols: k,
        shards,
    })
}
