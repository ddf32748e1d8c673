use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::matrix::{matmul, DenseMatrix};
use crate::error::Result;
use crate::groups::Group;

/// The `k`×`k` matrix rank `rank` contributes. Entries lie in `[0, 2/k)`,
/// which keeps long products from overflowing or vanishing.
pub fn rank_matrix(seed: u64, rank: usize, k: usize) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rank as u64);
    DenseMatrix::random(k, k, 0.0, 2.0 / k as f64, &mut rng)
}

/// `M₀·M₁·…·M_{p−1}` computed serially.
pub fn serial_product(seed: u64, p: usize, k: usize) -> DenseMatrix {
    (1..p).fold(rank_matrix(seed, 0, k), |acc, r| {
        acc.multiply(&rank_matrix(seed, r, k)).expect("square factors")
    })
}

/// Products of the ranks' matrices on rank 0 via the tree reduction and
/// via the linear baseline, in that order.
pub fn matrix_reduce(world: &Group, mine: DenseMatrix) -> Result<(Option<DenseMatrix>, Option<DenseMatrix>)> {
    let op = matmul();
    let tree = world.reduce(mine.clone(), &op, 0)?;
    let linear = world.reduce_linear(mine, &op)?;
    Ok((tree, linear))
}
