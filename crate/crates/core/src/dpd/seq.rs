use std::fmt;
use std::rc::Rc;

use super::Numeric;
use crate::error::{Error, Result};
use crate::groups::{ops, BinaryOp, Group, Wire};

/// A sequence of `len` elements, element `i` held by the member at local
/// index `mapping[i]` of `group`.
///
/// Operators only need to be associative: reductions combine elements in
/// index order.
pub struct DistSeq<T> {
    group: Group,
    /// Owners of the elements in index order.
    owners: Group,
    mapping: Rc<[usize]>,
    local: Option<T>,
}

impl<T: Clone> Clone for DistSeq<T> {
    fn clone(&self) -> Self {
        self.with_local(self.local.clone())
    }
}

impl<T: fmt::Debug> fmt::Debug for DistSeq<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DistSeq")
            .field("len", &self.len())
            .field("index", &self.local_index())
            .field("local", &self.local)
            .finish()
    }
}

impl DistSeq<i64> {
    /// The integers `lo..=hi`, index `i` on local index `i`.
    pub fn ranged(group: &Group, lo: i64, hi: i64) -> Result<Self> {
        let n = if hi < lo { 0 } else { (hi - lo) as usize + 1 };
        Self::tabulate(group, n, |i| lo + i as i64)
    }
}

impl<T> DistSeq<T> {
    /// Sequence of length `n` over the first `n` members. `f` runs only on
    /// the owner of each index.
    pub fn tabulate(group: &Group, n: usize, f: impl FnOnce(usize) -> T) -> Result<Self> {
        if n > group.size() {
            return Err(Error::InsufficientProcessingElements {
                needed: n,
                available: group.size(),
            });
        }
        let mapping: Rc<[usize]> = (0..n).collect();
        let owners = if n == group.size() {
            group.clone()
        } else {
            group.select(&mapping)?
        };
        Ok(Self::assemble(group.clone(), owners, mapping, f))
    }

    /// Every rank passes the full list; each owner keeps its own element.
    pub fn from_vec(group: &Group, values: Vec<T>) -> Result<Self> {
        let n = values.len();
        Self::tabulate(group, n, |i| values.into_iter().nth(i).expect("index below length"))
    }

    /// Sequence whose element `i` lives on local index `mapping[i]`.
    pub fn with_mapping(group: &Group, mapping: &[usize], f: impl FnOnce(usize) -> T) -> Result<Self> {
        let mut used = vec![false; group.size()];
        for &m in mapping {
            if m >= group.size() {
                return Err(Error::InvalidMapping(format!(
                    "local index {m} outside group of size {}",
                    group.size()
                )));
            }
            if std::mem::replace(&mut used[m], true) {
                return Err(Error::InvalidMapping(format!("local index {m} used twice")));
            }
        }
        let owners = group.select(mapping)?;
        Ok(Self::assemble(group.clone(), owners, mapping.into(), f))
    }

    /// The members of `group` in order, one element each. `local` is
    /// this rank's element.
    pub(crate) fn over_members(group: Group, len: usize, local: Option<T>) -> Self {
        let mapping: Rc<[usize]> = (0..len).collect();
        Self {
            owners: group.clone(),
            group,
            mapping,
            local,
        }
    }

    fn assemble(group: Group, owners: Group, mapping: Rc<[usize]>, f: impl FnOnce(usize) -> T) -> Self {
        let local = owners.local_index().map(f);
        Self {
            group,
            owners,
            mapping,
            local,
        }
    }

    fn with_local<U>(&self, local: Option<U>) -> DistSeq<U> {
        DistSeq {
            group: self.group.clone(),
            owners: self.owners.clone(),
            mapping: Rc::clone(&self.mapping),
            local,
        }
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    /// Local index in the group of the member holding element `i`.
    pub fn owner_of(&self, i: usize) -> Result<usize> {
        self.mapping.get(i).copied().ok_or(Error::IndexOutOfRange {
            index: i,
            len: self.len(),
        })
    }

    /// Index of the element this rank holds.
    pub fn local_index(&self) -> Option<usize> {
        self.local.as_ref().and(self.owners.local_index())
    }

    pub fn local(&self) -> Option<&T> {
        self.local.as_ref()
    }

    pub fn into_local(self) -> Option<T> {
        self.local
    }

    /// Applies `f` to the local element, if any. No communication.
    pub fn map<U>(&self, f: impl FnOnce(&T) -> U) -> DistSeq<U> {
        self.with_local(self.local.as_ref().map(f))
    }

    /// Like [`DistSeq::map`] with the element's index.
    pub fn map_indexed<U>(&self, f: impl FnOnce(usize, &T) -> U) -> DistSeq<U> {
        let local = match (self.owners.local_index(), &self.local) {
            (Some(i), Some(v)) => Some(f(i, v)),
            _ => None,
        };
        self.with_local(local)
    }

    fn require_nonempty(&self) -> Result<()> {
        if self.is_empty() {
            Err(Error::EmptySequence)
        } else {
            Ok(())
        }
    }
}

impl<T: Wire + Clone> DistSeq<T> {
    /// Element `i`, broadcast from its owner to every member of the group.
    pub fn apply(&self, i: usize) -> Result<Option<T>> {
        let owner = self.owner_of(i)?;
        if !self.group.is_member() {
            return Ok(None);
        }
        let held = if self.group.local_index() == Some(owner) {
            self.local.clone()
        } else {
            None
        };
        self.group.broadcast(held, owner)
    }

    /// `x₀ op x₁ op … op x_{n−1}` on the owner of index 0.
    pub fn reduce(&self, op: &BinaryOp<T>) -> Result<Option<T>> {
        self.require_nonempty()?;
        match &self.local {
            Some(v) => self.owners.reduce(v.clone(), op, 0),
            None => Ok(None),
        }
    }

    /// The reduction on every member of the group.
    pub fn all_reduce(&self, op: &BinaryOp<T>) -> Result<Option<T>> {
        self.require_nonempty()?;
        if !self.group.is_member() {
            return Ok(None);
        }
        if self.owners.members() == self.group.members() {
            let v = self.local.clone().expect("every member owns an element");
            return self.owners.all_reduce(v, op).map(Some);
        }
        let reduced = self.reduce(op)?;
        self.group.broadcast(reduced, self.mapping[0])
    }

    /// Inclusive prefix: element `i` becomes `x₀ op … op x_i`.
    pub fn scan(&self, op: &BinaryOp<T>) -> Result<Self> {
        self.require_nonempty()?;
        let local = match &self.local {
            Some(v) => Some(self.owners.scan(v.clone(), op)?),
            None => None,
        };
        Ok(self.with_local(local))
    }

    /// Element `i` becomes old element `(i − d) mod n`.
    pub fn shift(&self, d: i64) -> Result<Self> {
        let local = match &self.local {
            Some(v) => Some(self.owners.circular_shift(v.clone(), d)?),
            None => None,
        };
        Ok(self.with_local(local))
    }

    /// All elements in index order on the owner of index 0.
    pub fn gather(&self) -> Result<Option<Vec<T>>>
    where
        T: 'static,
    {
        if self.is_empty() {
            return Ok(self.group.local_index().filter(|&r| r == 0).map(|_| Vec::new()));
        }
        match &self.local {
            Some(v) => self.owners.reduce(vec![v.clone()], &ops::append(), 0),
            None => Ok(None),
        }
    }
}

impl<T: Numeric> DistSeq<T> {
    pub fn sum(&self) -> Result<Option<T>> {
        self.reduce(&T::sum_op())
    }

    pub fn product(&self) -> Result<Option<T>> {
        self.reduce(&T::product_op())
    }

    pub fn min(&self) -> Result<Option<T>> {
        self.reduce(&T::min_op())
    }

    pub fn max(&self) -> Result<Option<T>> {
        self.reduce(&T::max_op())
    }

    /// Sum divided by the length, as a real.
    pub fn avg(&self) -> Result<Option<f64>> {
        let n = self.len() as f64;
        Ok(self.sum()?.map(|s| s.to_f64() / n))
    }

    pub fn all_sum(&self) -> Result<Option<T>> {
        self.all_reduce(&T::sum_op())
    }

    pub fn all_product(&self) -> Result<Option<T>> {
        self.all_reduce(&T::product_op())
    }

    pub fn all_min(&self) -> Result<Option<T>> {
        self.all_reduce(&T::min_op())
    }

    pub fn all_max(&self) -> Result<Option<T>> {
        self.all_reduce(&T::max_op())
    }

    pub fn all_avg(&self) -> Result<Option<f64>> {
        let n = self.len() as f64;
        Ok(self.all_sum()?.map(|s| s.to_f64() / n))
    }
}
