use std::fmt;

use super::Numeric;
use crate::error::{Error, Result};
use crate::groups::{BinaryOp, Group, Wire};

/// One value per member of a group. Reductions across the members carry no
/// meaningful order, so they accept only commutative operators.
pub struct DistVal<T> {
    group: Group,
    local: Option<T>,
}

impl<T: Clone> Clone for DistVal<T> {
    fn clone(&self) -> Self {
        Self {
            group: self.group.clone(),
            local: self.local.clone(),
        }
    }
}

impl<T: fmt::Debug> fmt::Debug for DistVal<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DistVal").field("local", &self.local).finish()
    }
}

impl<T> DistVal<T> {
    /// `f` runs on members only.
    pub fn new(group: &Group, f: impl FnOnce() -> T) -> Self {
        Self {
            group: group.clone(),
            local: group.is_member().then(f),
        }
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn local(&self) -> Option<&T> {
        self.local.as_ref()
    }

    pub fn into_local(self) -> Option<T> {
        self.local
    }

    pub fn map<U>(&self, f: impl FnOnce(&T) -> U) -> DistVal<U> {
        DistVal {
            group: self.group.clone(),
            local: self.local.as_ref().map(f),
        }
    }
}

fn require_commutative<T>(op: &BinaryOp<T>) -> Result<()> {
    if op.is_commutative() {
        Ok(())
    } else {
        Err(Error::NonCommutative(op.name().to_owned()))
    }
}

impl<T: Wire + Clone> DistVal<T> {
    /// Combination of all members' values on local index 0.
    pub fn reduce(&self, op: &BinaryOp<T>) -> Result<Option<T>> {
        require_commutative(op)?;
        match &self.local {
            Some(v) => self.group.reduce(v.clone(), op, 0),
            None => Ok(None),
        }
    }

    /// Combination of all members' values on every member.
    pub fn all_reduce(&self, op: &BinaryOp<T>) -> Result<Option<T>> {
        require_commutative(op)?;
        match &self.local {
            Some(v) => self.group.all_reduce(v.clone(), op).map(Some),
            None => Ok(None),
        }
    }
}

impl<T: Numeric> DistVal<T> {
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

    pub fn avg(&self) -> Result<Option<f64>> {
        let n = self.group.size() as f64;
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
        let n = self.group.size() as f64;
        Ok(self.all_sum()?.map(|s| s.to_f64() / n))
    }
}
