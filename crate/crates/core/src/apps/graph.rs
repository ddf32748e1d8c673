use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::DenseMatrix;
use crate::error::{Error, Result};

/// Dense weighted digraph. Missing edges weigh `+∞`; the diagonal is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    w: DenseMatrix,
}

impl WeightedGraph {
    pub fn new(w: DenseMatrix) -> Result<Self> {
        if w.rows() != w.cols() {
            return Err(Error::DimensionMismatch(format!(
                "weight matrix is {}x{}",
                w.rows(),
                w.cols()
            )));
        }
        if let Some(i) = (0..w.rows()).find(|&i| w[(i, i)] != 0.0) {
            return Err(Error::Parse(format!("nonzero diagonal entry at node {i}")));
        }
        Ok(Self { w })
    }

    /// Random graph: each off-diagonal edge present with probability
    /// `density`, weight uniform in `[1, 10]`.
    pub fn random(n: usize, density: f64, rng: &mut impl Rng) -> Self {
        let mut w = DenseMatrix::filled(n, n, f64::INFINITY);
        for i in 0..n {
            for j in 0..n {
                w[(i, j)] = if i == j {
                    0.0
                } else if rng.random_bool(density) {
                    rng.random_range(1.0..=10.0)
                } else {
                    f64::INFINITY
                };
            }
        }
        Self { w }
    }

    /// [`WeightedGraph::random`] from a ChaCha8 stream seeded with `seed`.
    pub fn seeded(n: usize, density: f64, seed: u64) -> Self {
        Self::random(n, density, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    /// First token `n`, then `n·n` weights in row order; `inf` marks a
    /// missing edge.
    pub fn parse(text: &str) -> Result<Self> {
        let mut tokens = text.split_whitespace();
        let n: usize = tokens
            .next()
            .ok_or_else(|| Error::Parse("empty graph file".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("node count: {e}")))?;
        let mut data = Vec::with_capacity(n * n);
        for (idx, tok) in tokens.by_ref().take(n * n).enumerate() {
            let v = match tok {
                "inf" | "+inf" | "Infinity" => f64::INFINITY,
                t => t
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("weight ({}, {}) `{t}`: {e}", idx / n, idx % n)))?,
            };
            data.push(v);
        }
        if data.len() != n * n {
            return Err(Error::Parse(format!("expected {} weights, found {}", n * n, data.len())));
        }
        if let Some(extra) = tokens.next() {
            return Err(Error::Parse(format!("unexpected trailing token `{extra}`")));
        }
        Self::new(DenseMatrix::new(n, n, data)?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.n());
        for i in 0..self.n() {
            let row: Vec<String> = self
                .w
                .row(i)
                .iter()
                .map(|&v| if v.is_infinite() { "inf".to_owned() } else { format!("{v:?}") })
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(std::fs::write(path, self.to_text())?)
    }

    pub fn n(&self) -> usize {
        self.w.rows()
    }

    pub fn weights(&self) -> &DenseMatrix {
        &self.w
    }
}

/// Serial all-pairs shortest paths.
pub fn floyd_serial(g: &WeightedGraph) -> DenseMatrix {
    floyd_serial_levels(g, |_, _| {})
}

/// [`floyd_serial`] calling `observe(k, d)` after each level `k`.
pub fn floyd_serial_levels(g: &WeightedGraph, mut observe: impl FnMut(usize, &DenseMatrix)) -> DenseMatrix {
    let n = g.n();
    let mut d = g.w.clone();
    for k in 0..n {
        for i in 0..n {
            let dik = d[(i, k)];
            for j in 0..n {
                let via = dik + d[(k, j)];
                if via < d[(i, j)] {
                    d[(i, j)] = via;
                }
            }
        }
        observe(k, &d);
    }
    d
}
