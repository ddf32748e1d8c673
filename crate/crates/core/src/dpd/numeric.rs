use crate::groups::{BinaryOp, Wire};

/// Element types that support the numeric reductions.
pub trait Numeric: Wire + Clone + PartialOrd + Send + Sync + 'static {
    fn plus(self, other: Self) -> Self;
    fn times(self, other: Self) -> Self;
    fn negate(self) -> Self;
    fn to_f64(&self) -> f64;

    fn sum_op() -> BinaryOp<Self> {
        BinaryOp::commutative("sum", Self::plus)
    }

    fn product_op() -> BinaryOp<Self> {
        BinaryOp::commutative("product", Self::times)
    }

    fn min_op() -> BinaryOp<Self> {
        BinaryOp::commutative("min", |a: Self, b: Self| if b < a { b } else { a })
    }

    fn max_op() -> BinaryOp<Self> {
        BinaryOp::commutative("max", |a: Self, b: Self| if b > a { b } else { a })
    }
}

macro_rules! numeric_signed {
    ($($t:ty),*) => {$(
        impl Numeric for $t {
            fn plus(self, other: Self) -> Self { self + other }
            fn times(self, other: Self) -> Self { self * other }
            fn negate(self) -> Self { -self }
            fn to_f64(&self) -> f64 { *self as f64 }
        }
    )*};
}

macro_rules! numeric_unsigned {
    ($($t:ty),*) => {$(
        impl Numeric for $t {
            fn plus(self, other: Self) -> Self { self + other }
            fn times(self, other: Self) -> Self { self * other }
            fn negate(self) -> Self { self.wrapping_neg() }
            fn to_f64(&self) -> f64 { *self as f64 }
        }
    )*};
}

numeric_signed!(i32, i64, f32, f64);
numeric_unsigned!(u32, u64, usize);
