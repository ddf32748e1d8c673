use std::fmt;

/// Algebraic class an operator is declared to have. Neither property is
/// checked at runtime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algebra {
    Associative,
    /// Associative and commutative.
    Commutative,
}

/// A pure binary operator together with its declared algebra.
pub struct BinaryOp<T> {
    name: String,
    algebra: Algebra,
    func: Box<dyn Fn(T, T) -> T + Send + Sync>,
}

impl<T> BinaryOp<T> {
    pub fn associative(name: impl Into<String>, func: impl Fn(T, T) -> T + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            algebra: Algebra::Associative,
            func: Box::new(func),
        }
    }

    pub fn commutative(name: impl Into<String>, func: impl Fn(T, T) -> T + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            algebra: Algebra::Commutative,
            func: Box::new(func),
        }
    }

    pub fn apply(&self, left: T, right: T) -> T {
        (self.func)(left, right)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn algebra(&self) -> Algebra {
        self.algebra
    }

    pub fn is_commutative(&self) -> bool {
        self.algebra == Algebra::Commutative
    }
}

impl<T> fmt::Debug for BinaryOp<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BinaryOp")
            .field("name", &self.name)
            .field("algebra", &self.algebra)
            .finish()
    }
}

/// String concatenation: associative, not commutative.
pub fn concat() -> BinaryOp<String> {
    BinaryOp::associative("concat", |mut a: String, b: String| {
        a.push_str(&b);
        a
    })
}

/// List concatenation.
pub fn append<T: 'static>() -> BinaryOp<Vec<T>> {
    BinaryOp::associative("append", |mut a: Vec<T>, mut b: Vec<T>| {
        a.append(&mut b);
        a
    })
}

pub fn sum<T: std::ops::Add<Output = T> + 'static>() -> BinaryOp<T> {
    BinaryOp::commutative("sum", |a, b| a + b)
}

pub fn min<T: PartialOrd + 'static>() -> BinaryOp<T> {
    BinaryOp::commutative("min", |a, b| if b < a { b } else { a })
}

pub fn max<T: PartialOrd + 'static>() -> BinaryOp<T> {
    BinaryOp::commutative("max", |a, b| if b > a { b } else { a })
}
