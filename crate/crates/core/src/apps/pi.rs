use crate::dpd::DistSeq;
use crate::error::Result;
use crate::groups::Group;

fn sample(x: i64, n: usize) -> f64 {
    let f = |x: f64| 4.0 / (1.0 + x * x);
    let ff = |x: i64| (x as f64 - 0.5) / n as f64;
    f(ff(x))
}

/// Midpoint rule for ∫₀¹ 4/(1+x²) dx with `n` samples.
pub fn pi_serial(n: usize) -> f64 {
    (1..=n as i64).map(|x| sample(x, n)).sum::<f64>() / n as f64
}

/// One sample per rank; needs `n ≤ p`. The result lands on rank 0.
pub fn pi_parallel(world: &Group, n: usize) -> Result<Option<f64>> {
    DistSeq::ranged(world, 1, n as i64)?.map(|&x| sample(x, n)).avg()
}

/// Any `n`: rank `r` sums a contiguous block of samples and the partial
/// sums are reduced over the ranks that got one.
pub fn pi_blocked(world: &Group, n: usize) -> Result<Option<f64>> {
    let p = world.size().min(n.max(1));
    let partial = DistSeq::tabulate(world, p, |r| {
        let (lo, hi) = (r * n / p, (r + 1) * n / p);
        (lo as i64 + 1..=hi as i64).map(|x| sample(x, n)).sum::<f64>()
    })?;
    Ok(partial.sum()?.map(|s| s / n as f64))
}
