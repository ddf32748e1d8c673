//! Distributed data structures: values, sequences and grids whose elements
//! live on different ranks.
//!
//! A rank that holds no element sees `None` locally and does nothing in
//! local operations. Every operation leaves its input untouched and returns
//! a new structure.

mod grid;
mod lazy;
mod numeric;
mod seq;
mod val;

pub use grid::{DistGrid, GridShape};
pub use lazy::Lazy;
pub use numeric::Numeric;
pub use seq::DistSeq;
pub use val::DistVal;

/// Property check that passes vacuously on ranks without a value.
pub trait ShouldEqual<U: ?Sized> {
    fn should_equal(&self, expected: &U) -> bool;
}

impl<T: PartialEq<U>, U: ?Sized> ShouldEqual<U> for Option<T> {
    fn should_equal(&self, expected: &U) -> bool {
        self.as_ref().is_none_or(|v| v == expected)
    }
}

#[cfg(test)]
mod tests;
