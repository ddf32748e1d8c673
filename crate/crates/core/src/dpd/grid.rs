use std::fmt;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use super::DistSeq;
use crate::error::{Error, Result};
use crate::groups::Group;

/// Mixed-radix mapping between linear ranks and grid coordinates.
///
/// `axis_order` lists the axes from most to least significant digit; the
/// identity order is row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridShape {
    dims: Vec<usize>,
    axis_order: Vec<usize>,
}

impl GridShape {
    pub fn new(dims: &[usize]) -> Result<Self> {
        Self::with_axis_order(dims, &(0..dims.len()).collect::<Vec<_>>())
    }

    pub fn with_axis_order(dims: &[usize], axis_order: &[usize]) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidGrid("no dimensions".into()));
        }
        if let Some(axis) = dims.iter().position(|&d| d == 0) {
            return Err(Error::InvalidGrid(format!("axis {axis} has extent 0")));
        }
        let mut sorted = axis_order.to_vec();
        sorted.sort_unstable();
        if !sorted.iter().copied().eq(0..dims.len()) {
            return Err(Error::InvalidGrid(format!(
                "axis order {axis_order:?} is not a permutation of 0..{}",
                dims.len()
            )));
        }
        Ok(Self {
            dims: dims.to_vec(),
            axis_order: axis_order.to_vec(),
        })
    }

    /// Square two-dimensional grid.
    pub fn square(side: usize) -> Result<Self> {
        Self::new(&[side, side])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn axis_order(&self) -> &[usize] {
        &self.axis_order
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn size(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn rank_of(&self, coords: &[usize]) -> Result<usize> {
        if coords.len() != self.ndim() {
            return Err(Error::DimensionMismatch(format!(
                "{} coordinates for a {}-dimensional grid",
                coords.len(),
                self.ndim()
            )));
        }
        let mut rank = 0;
        for &axis in &self.axis_order {
            let (coord, extent) = (coords[axis], self.dims[axis]);
            if coord >= extent {
                return Err(Error::CoordinateOutOfRange { axis, coord, extent });
            }
            rank = rank * extent + coord;
        }
        Ok(rank)
    }

    pub fn coords_of(&self, rank: usize) -> Result<Vec<usize>> {
        if rank >= self.size() {
            return Err(Error::IndexOutOfRange {
                index: rank,
                len: self.size(),
            });
        }
        let mut coords = vec![0; self.ndim()];
        let mut rest = rank;
        for &axis in self.axis_order.iter().rev() {
            coords[axis] = rest % self.dims[axis];
            rest /= self.dims[axis];
        }
        Ok(coords)
    }
}

/// Row and column subgroups of a two-dimensional grid, as seen by one rank.
struct Lines {
    row: Group,
    col: Group,
}

/// One cell per member over the first `shape.size()` members of a group.
pub struct DistGrid<T> {
    group: Group,
    shape: Rc<GridShape>,
    lines: Option<Rc<Lines>>,
    local: Option<(Vec<usize>, T)>,
}

impl<T: fmt::Debug> fmt::Debug for DistGrid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DistGrid")
            .field("shape", &self.shape)
            .field("local", &self.local)
            .finish()
    }
}

impl<T: Clone> Clone for DistGrid<T> {
    fn clone(&self) -> Self {
        self.with_local(self.local.clone())
    }
}

impl<T> DistGrid<T> {
    /// Builds the grid; `f` runs on each cell's owner with its coordinates.
    /// For two-dimensional shapes every rank of the execution must call
    /// this at the same point, since it creates the row and column groups.
    pub fn new(group: &Group, shape: GridShape, f: impl FnOnce(&[usize]) -> T) -> Result<Self> {
        let cells = shape.size();
        if cells > group.size() {
            return Err(Error::InsufficientProcessingElements {
                needed: cells,
                available: group.size(),
            });
        }
        let coords = match group.local_index() {
            Some(r) if r < cells => Some(shape.coords_of(r)?),
            _ => None,
        };
        let lines = if shape.ndim() == 2 {
            let line = |fixed: usize, along: usize| -> Result<Vec<usize>> {
                let Some(c) = &coords else {
                    return Ok(Vec::new());
                };
                (0..shape.dims()[along])
                    .map(|x| {
                        let mut at = c.clone();
                        at[along] = x;
                        debug_assert_eq!(at[fixed], c[fixed]);
                        group.global_rank(shape.rank_of(&at)?)
                    })
                    .collect()
            };
            let row = group.subgroup(&line(0, 1)?)?;
            let col = group.subgroup(&line(1, 0)?)?;
            Some(Rc::new(Lines { row, col }))
        } else {
            None
        };
        let local = coords.map(|c| {
            let v = f(&c);
            (c, v)
        });
        Ok(Self {
            group: group.clone(),
            shape: Rc::new(shape),
            lines,
            local,
        })
    }

    fn with_local<U>(&self, local: Option<(Vec<usize>, U)>) -> DistGrid<U> {
        DistGrid {
            group: self.group.clone(),
            shape: Rc::clone(&self.shape),
            lines: self.lines.clone(),
            local,
        }
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn coords(&self) -> Option<&[usize]> {
        self.local.as_ref().map(|(c, _)| c.as_slice())
    }

    pub fn local(&self) -> Option<&T> {
        self.local.as_ref().map(|(_, v)| v)
    }

    pub fn into_local(self) -> Option<T> {
        self.local.map(|(_, v)| v)
    }

    /// Transforms the local cell. No communication.
    pub fn map<U>(&self, f: impl FnOnce(&[usize], &T) -> U) -> DistGrid<U> {
        self.with_local(self.local.as_ref().map(|(c, v)| (c.clone(), f(c, v))))
    }

    /// [`DistGrid::map`] that hands over the local cell by value.
    pub fn into_map<U>(self, f: impl FnOnce(&[usize], T) -> U) -> DistGrid<U> {
        let DistGrid {
            group,
            shape,
            lines,
            local,
        } = self;
        DistGrid {
            group,
            shape,
            lines,
            local: local.map(|(c, v)| {
                let u = f(&c, v);
                (c, u)
            }),
        }
    }

    fn lines(&self) -> Result<&Lines> {
        self.lines.as_deref().ok_or_else(|| {
            Error::DimensionMismatch(format!(
                "row and column views need a 2-dimensional grid, not {}",
                self.shape.ndim()
            ))
        })
    }

    /// The calling cell's row as a sequence indexed by column.
    pub fn row_seq(&self) -> Result<DistSeq<&T>> {
        let lines = self.lines()?;
        Ok(DistSeq::over_members(lines.row.clone(), self.shape.dims()[1], self.local()))
    }

    /// The calling cell's column as a sequence indexed by row.
    pub fn col_seq(&self) -> Result<DistSeq<&T>> {
        let lines = self.lines()?;
        Ok(DistSeq::over_members(lines.col.clone(), self.shape.dims()[0], self.local()))
    }
}
