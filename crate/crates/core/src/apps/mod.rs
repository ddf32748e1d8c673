//! Sample SPMD programs: midpoint-rule pi, seed agreement, ordered matrix
//! reduction and blocked Floyd-Warshall, each with a serial oracle.

pub mod floyd;
pub mod graph;
pub mod matreduce;
pub mod matrix;
pub mod pi;
pub mod programs;
pub mod seed;

pub use floyd::{floyd_warshall_parallel, floyd_warshall_traced, update};
pub use graph::{floyd_serial, floyd_serial_levels, WeightedGraph};
pub use matreduce::{matrix_reduce, rank_matrix, serial_product};
pub use matrix::{matmul, DenseMatrix};
pub use pi::{pi_blocked, pi_parallel, pi_serial};
pub use programs::{run_floyd, run_matreduce, run_pi, run_seed, Report, Verdict};
pub use seed::{now_nanos, seed_agreement};
