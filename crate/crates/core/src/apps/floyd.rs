use super::{DenseMatrix, WeightedGraph};
use crate::dpd::{DistGrid, GridShape};
use crate::error::{Error, Result};
use crate::groups::{ops, Group};

/// Relaxes every entry of `block` through the current pivot: `row[j]` is
/// the pivot row restricted to the block's columns and `col[i]` the pivot
/// column restricted to its rows.
pub fn update(block: &mut DenseMatrix, row: &[f64], col: &[f64]) {
    for (i, &c) in col.iter().enumerate().take(block.rows()) {
        for (j, &r) in row.iter().enumerate().take(block.cols()) {
            let via = c + r;
            if via < block[(i, j)] {
                block[(i, j)] = via;
            }
        }
    }
}

/// Blocked all-pairs shortest paths on a `q`×`q` grid of ranks. Returns
/// the distance matrix on rank 0 of `world`.
pub fn floyd_warshall_parallel(world: &Group, g: &WeightedGraph, q: usize) -> Result<Option<DenseMatrix>> {
    floyd_warshall_traced(world, g, q, |_, _, _| {})
}

/// [`floyd_warshall_parallel`] calling `observe(k, coords, block)` on each
/// cell after level `k`.
pub fn floyd_warshall_traced(
    world: &Group,
    g: &WeightedGraph,
    q: usize,
    mut observe: impl FnMut(usize, &[usize], &DenseMatrix),
) -> Result<Option<DenseMatrix>> {
    let n = g.n();
    if q == 0 || !n.is_multiple_of(q) {
        return Err(Error::DimensionMismatch(format!(
            "{n} nodes cannot be split into {q}x{q} blocks"
        )));
    }
    let bs = n / q;
    let w = g.weights();
    let mut grid = DistGrid::new(world, GridShape::square(q)?, |c| w.block(c[0], c[1], bs))?;
    for k in 0..n {
        let (kb, kk) = (k / bs, k % bs);
        // Row k over my block's columns, from the block above or below me.
        let ik = grid.col_seq()?.map(|b| b.row(kk).to_vec()).apply(kb)?;
        // Column k over my block's rows, from the block left or right of me.
        let kj = grid.row_seq()?.map(|b| b.col(kk)).apply(kb)?;
        grid = grid.into_map(|c, mut block| {
            let (row, col) = (ik.as_deref().expect("cells get the row"), kj.as_deref().expect("cells get the column"));
            update(&mut block, row, col);
            observe(k, c, &block);
            block
        });
    }
    let mine = match (grid.coords(), grid.local()) {
        (Some(c), Some(b)) => vec![(c[0], c[1], b.clone())],
        _ => Vec::new(),
    };
    Ok(world.reduce(mine, &ops::append(), 0)?.map(|blocks| {
        let mut d = DenseMatrix::zeros(n, n);
        for (bi, bj, b) in &blocks {
            d.set_block(*bi, *bj, b);
        }
        d
    }))
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::apps::graph::{floyd_serial, floyd_serial_levels};
    use crate::runtime::simulate;

    #[test]
    fn update_is_a_pure_kernel() {
        let mut b = DenseMatrix::from_rows(&[vec![0.0, 9.0], vec![f64::INFINITY, 0.0]]).unwrap();
        update(&mut b, &[1.0, 2.0], &[0.5, 3.0]);
        assert_eq!(b.data(), &[0.0, 2.5, 4.0, 0.0]);
    }

    #[test]
    fn small_examples() {
        let g = WeightedGraph::parse("1\n0").unwrap();
        let out = simulate(1, 0, |w| floyd_warshall_parallel(w, &g, 1).unwrap()).unwrap();
        assert_eq!(out[0].as_ref().unwrap().data(), &[0.0]);

        let g = WeightedGraph::parse("3\n0 1 10\ninf 0 2\ninf inf 0").unwrap();
        let out = simulate(1, 0, |w| floyd_warshall_parallel(w, &g, 1).unwrap()).unwrap();
        assert_eq!(out[0].as_ref().unwrap()[(0, 2)], 3.0);

        let out = simulate(9, 0, |w| floyd_warshall_parallel(w, &g, 3).unwrap()).unwrap();
        assert!(out[0].as_ref().unwrap().bits_eq(&floyd_serial(&g)));
    }

    #[test]
    fn bad_block_counts() {
        let g = WeightedGraph::parse("3\n0 1 1\n1 0 1\n1 1 0").unwrap();
        let out = simulate(4, 0, |w| floyd_warshall_parallel(w, &g, 2).is_err()).unwrap();
        assert!(out.iter().all(|&e| e));
        let g = WeightedGraph::random(4, 0.5, &mut ChaCha8Rng::seed_from_u64(0));
        let out = simulate(3, 0, |w| floyd_warshall_parallel(w, &g, 2).is_err()).unwrap();
        assert!(out.iter().all(|&e| e));
    }

    #[test]
    fn spare_ranks_idle() {
        let g = WeightedGraph::random(8, 0.3, &mut ChaCha8Rng::seed_from_u64(4));
        let out = simulate(6, 2, |w| floyd_warshall_parallel(w, &g, 2).unwrap()).unwrap();
        assert!(out[0].as_ref().unwrap().bits_eq(&floyd_serial(&g)));
        assert!(out[1..].iter().all(Option::is_none));
    }

    #[test]
    fn every_level_matches_the_serial_level() {
        for (n, q) in [(8, 2), (12, 3), (16, 4)] {
            let g = WeightedGraph::random(n, 0.3, &mut ChaCha8Rng::seed_from_u64(n as u64));
            let mut levels = Vec::new();
            floyd_serial_levels(&g, |_, d| levels.push(d.clone()));
            let bs = n / q;
            let out = simulate(q * q, 5, |w| {
                let mut ok = true;
                floyd_warshall_traced(w, &g, q, |k, c, b| ok &= b.bits_eq(&levels[k].block(c[0], c[1], bs))).unwrap();
                ok
            })
            .unwrap();
            assert!(out.iter().all(|&ok| ok), "n={n} q={q}");
        }
    }
}
