use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Realness {
    Real,
    Complex,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    /// `δ I_n`.
    RepeatedScalar(usize),
    /// Unstructured `rows × cols` block (`rows` = dim d, `cols` = dim v).
    Full { rows: usize, cols: usize },
}

/// One diagonal block of `Δ`.
///
/// Real blocks are bounded with the complex upper bound, which is
/// conservative but valid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub kind: BlockKind,
    pub realness: Realness,
}

impl Block {
    pub fn real_scalar(n: usize) -> Self {
        Self { kind: BlockKind::RepeatedScalar(n), realness: Realness::Real }
    }

    pub fn complex_scalar(n: usize) -> Self {
        Self { kind: BlockKind::RepeatedScalar(n), realness: Realness::Complex }
    }

    pub fn full(rows: usize, cols: usize) -> Self {
        Self { kind: BlockKind::Full { rows, cols }, realness: Realness::Complex }
    }

    /// Number of `d` channels (outputs of the block, inputs of `M`).
    pub fn d_dim(&self) -> usize {
        match self.kind {
            BlockKind::RepeatedScalar(n) => n,
            BlockKind::Full { rows, .. } => rows,
        }
    }

    /// Number of `v` channels (inputs of the block, outputs of `M`).
    pub fn v_dim(&self) -> usize {
        match self.kind {
            BlockKind::RepeatedScalar(n) => n,
            BlockKind::Full { cols, .. } => cols,
        }
    }
}

/// Block-diagonal uncertainty structure `Δ = diag(Δ₁, …, Δ_s)`.
///
/// `M` attached to this structure maps `d` to `v`, so it has
/// `n_v()` rows and `n_d()` columns.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaStructure {
    blocks: Vec<Block>,
}

impl DeltaStructure {
    pub fn new(blocks: Vec<Block>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidArgument("uncertainty structure needs at least one block".into()));
        }
        if blocks.iter().any(|b| b.d_dim() == 0 || b.v_dim() == 0) {
            return Err(Error::InvalidArgument("zero-sized uncertainty block".into()));
        }
        Ok(Self { blocks })
    }

    /// `n` real scalar blocks of size one.
    pub fn real_scalars(n: usize) -> Result<Self> {
        Self::new(vec![Block::real_scalar(1); n])
    }

    /// Appends the full complex performance block mapping `z` (dim `n_z`)
    /// back to `w` (dim `n_w`).
    pub fn with_performance(&self, n_w: usize, n_z: usize) -> Result<Self> {
        let mut blocks = self.blocks.clone();
        blocks.push(Block::full(n_w, n_z));
        Self::new(blocks)
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn n_v(&self) -> usize {
        self.blocks.iter().map(Block::v_dim).sum()
    }

    pub fn n_d(&self) -> usize {
        self.blocks.iter().map(Block::d_dim).sum()
    }

    /// Block index of every row of `M` (v side).
    pub(crate) fn row_owner(&self) -> Vec<usize> {
        self.blocks.iter().enumerate().flat_map(|(k, b)| std::iter::repeat_n(k, b.v_dim())).collect()
    }

    /// Block index of every column of `M` (d side).
    pub(crate) fn col_owner(&self) -> Vec<usize> {
        self.blocks.iter().enumerate().flat_map(|(k, b)| std::iter::repeat_n(k, b.d_dim())).collect()
    }
}
