use std::cell::LazyCell;
use std::fmt;

/// A deferred element: the computation runs on first [`Lazy::force`] on the
/// rank that holds it, at most once.
pub struct Lazy<T> {
    cell: LazyCell<T, Box<dyn FnOnce() -> T>>,
}

impl<T> Lazy<T> {
    pub fn new(f: impl FnOnce() -> T + 'static) -> Self {
        Self {
            cell: LazyCell::new(Box::new(f)),
        }
    }

    pub fn force(&self) -> &T {
        &self.cell
    }

    pub fn is_forced(&self) -> bool {
        LazyCell::get(&self.cell).is_some()
    }
}

impl<T: fmt::Debug> fmt::Debug for Lazy<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match LazyCell::get(&self.cell) {
            Some(v) => f.debug_tuple("Lazy").field(v).finish(),
            None => f.write_str("Lazy(<pending>)"),
        }
    }
}
