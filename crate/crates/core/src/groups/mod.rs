//! Group communication over ordered subsets of ranks.
//!
//! Every algorithm here needs only associativity of the combining operator:
//! partial results are always combined as `left op right` with `left`
//! covering lower local indices, so the result equals the serial left fold
//! over members in list order.
//!
//! Each collective instance draws a fresh tag from its group's sequence
//! counter, so collectives issued back to back on one group never see each
//! other's messages.

pub mod codec;
pub mod ops;

use std::cell::{Cell, RefCell};
use std::collections::HashSet;
use std::fmt;
use std::rc::Rc;

pub use codec::Wire;
pub use ops::{Algebra, BinaryOp};

use crate::costmodel::{ceil_log2, words_for, CostLedger, OpRecord, Pattern};
use crate::error::{DecodeError, Error, Result};
use crate::transport::{Endpoint, Rank, Tag};

const GROUP_ID_BITS: u32 = 11;
const SEQ_BITS: u32 = 20;

/// A rank's communication context: its endpoint, the subgroup counter and
/// the cost ledger.
pub struct Comm {
    endpoint: Endpoint,
    next_group: Cell<u32>,
    ledger: RefCell<CostLedger>,
}

impl Comm {
    pub fn new(endpoint: Endpoint) -> Rc<Self> {
        Rc::new(Self {
            endpoint,
            next_group: Cell::new(1),
            ledger: RefCell::new(CostLedger::default()),
        })
    }

    pub fn rank(&self) -> Rank {
        self.endpoint.rank()
    }

    pub fn world_size(&self) -> usize {
        self.endpoint.world_size()
    }

    pub fn endpoint(&self) -> &Endpoint {
        &self.endpoint
    }

    pub fn ledger(&self) -> CostLedger {
        self.ledger.borrow().clone()
    }

    pub fn take_ledger(&self) -> CostLedger {
        self.ledger.take()
    }
}

impl fmt::Debug for Comm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Comm").field("endpoint", &self.endpoint).finish_non_exhaustive()
    }
}

/// An ordered subgroup of global ranks as seen from one rank.
///
/// Ranks outside the group hold an inert view: every collective on it
/// returns immediately without communicating.
#[derive(Clone)]
pub struct Group {
    comm: Rc<Comm>,
    members: Rc<[Rank]>,
    local: Option<usize>,
    id: u32,
    seq: Rc<Cell<u32>>,
}

impl fmt::Debug for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Group")
            .field("id", &self.id)
            .field("members", &self.members)
            .field("local", &self.local)
            .finish()
    }
}

impl Group {
    /// The group of all ranks in rank order.
    pub fn world(comm: &Rc<Comm>) -> Self {
        let members: Rc<[Rank]> = (0..comm.world_size()).collect();
        Self {
            comm: Rc::clone(comm),
            local: Some(comm.rank()),
            members,
            id: 0,
            seq: Rc::new(Cell::new(0)),
        }
    }

    /// Creates a group from global ranks. Every rank of the execution must
    /// call this at the same point of the program; members must pass the
    /// same list.
    pub fn subgroup(&self, members: &[Rank]) -> Result<Self> {
        let world = self.comm.world_size();
        let mut seen = HashSet::with_capacity(members.len());
        for &r in members {
            if r >= world {
                return Err(Error::RankOutOfRange {
                    rank: r,
                    world_size: world,
                });
            }
            if !seen.insert(r) {
                return Err(Error::DuplicateRank(r));
            }
        }
        let id = self.comm.next_group.get();
        self.comm.next_group.set(id.wrapping_add(1));
        let me = self.comm.rank();
        Ok(Self {
            comm: Rc::clone(&self.comm),
            local: members.iter().position(|&r| r == me),
            members: members.into(),
            id,
            seq: Rc::new(Cell::new(0)),
        })
    }

    /// Subgroup given by local indices of this group.
    pub fn select(&self, local_indices: &[usize]) -> Result<Self> {
        let ranks = local_indices
            .iter()
            .map(|&i| self.global_rank(i))
            .collect::<Result<Vec<_>>>()?;
        self.subgroup(&ranks)
    }

    pub fn comm(&self) -> &Rc<Comm> {
        &self.comm
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn members(&self) -> &[Rank] {
        &self.members
    }

    /// The caller's position in the member list, if it is a member.
    pub fn local_index(&self) -> Option<usize> {
        self.local
    }

    pub fn is_member(&self) -> bool {
        self.local.is_some()
    }

    pub fn global_rank(&self, local: usize) -> Result<Rank> {
        self.members
            .get(local)
            .copied()
            .ok_or(Error::LocalIndexOutOfRange {
                index: local,
                size: self.size(),
            })
    }

    fn begin(&self, pattern: Pattern) -> Collective<'_> {
        let seq = self.seq.get();
        self.seq.set(seq.wrapping_add(1));
        let tag = ((self.id & ((1 << GROUP_ID_BITS) - 1)) << SEQ_BITS) | (seq & ((1 << SEQ_BITS) - 1));
        Collective {
            group: self,
            tag,
            key: (self.id, seq),
            pattern,
            send_clock: 0,
            recv_clock: 0,
            messages: 0,
            words: 0,
        }
    }

    fn check_root(&self, root: usize) -> Result<()> {
        if root < self.size() {
            Ok(())
        } else {
            Err(Error::LocalIndexOutOfRange {
                index: root,
                size: self.size(),
            })
        }
    }

    /// All-to-one reduction. The member at `root` gets
    /// `v₀ op v₁ op … op v_{q−1}`; everyone else gets `None`.
    pub fn reduce<T: Wire>(&self, value: T, op: &BinaryOp<T>, root: usize) -> Result<Option<T>> {
        self.reduce_traced(value, op, root, |_, _| {})
    }

    /// [`Group::reduce`] calling `observe(round, acc)` on each member still
    /// holding a partial result after every round of the tree.
    pub fn reduce_traced<T: Wire>(
        &self,
        value: T,
        op: &BinaryOp<T>,
        root: usize,
        mut observe: impl FnMut(usize, &T),
    ) -> Result<Option<T>> {
        self.check_root(root)?;
        let Some(r) = self.local else {
            return Ok(None);
        };
        let mut ctx = self.begin(Pattern::Reduce);
        let mut result = ctx.reduce_to_first(r, value, op, &mut observe)?;
        if root != 0 {
            // One extra hop keeps member order intact for any root.
            if r == 0 {
                ctx.send(root, result.as_ref().expect("local 0 holds the reduction"))?;
                result = None;
            } else if r == root {
                result = Some(ctx.recv(0)?);
            }
        }
        ctx.finish();
        Ok(result)
    }

    /// One-to-all broadcast from local index `root`. Non-root members pass
    /// `None`; all members return the root's value.
    pub fn broadcast<T: Wire>(&self, value: Option<T>, root: usize) -> Result<Option<T>> {
        self.check_root(root)?;
        let Some(r) = self.local else {
            return Ok(value);
        };
        if r == root && value.is_none() {
            return Err(Error::BroadcastWithoutPayload);
        }
        let mut ctx = self.begin(Pattern::Broadcast);
        let held = if r == root { value } else { None };
        let out = ctx.broadcast_from(r, root, held)?;
        ctx.finish();
        Ok(Some(out))
    }

    /// Reduction whose result every member receives.
    pub fn all_reduce<T: Wire>(&self, value: T, op: &BinaryOp<T>) -> Result<T> {
        let Some(r) = self.local else {
            return Ok(value);
        };
        let mut ctx = self.begin(Pattern::AllReduce);
        let reduced = ctx.reduce_to_first(r, value, op, &mut |_, _| {})?;
        let out = ctx.broadcast_from(r, 0, reduced)?;
        ctx.finish();
        Ok(out)
    }

    /// Inclusive prefix: member `i` gets `v₀ op … op v_i`.
    pub fn scan<T: Wire + Clone>(&self, value: T, op: &BinaryOp<T>) -> Result<T> {
        let Some(r) = self.local else {
            return Ok(value);
        };
        let q = self.size();
        let mut ctx = self.begin(Pattern::Scan);
        let mut prefix = value.clone();
        // Combination of the values in r's current subcube.
        let mut total = value;
        for i in 0..ceil_log2(q) {
            let partner = r ^ (1 << i);
            if partner >= q {
                continue;
            }
            ctx.send(partner, &total)?;
            let other: T = ctx.recv(partner)?;
            if partner < r {
                prefix = op.apply(other.clone(), prefix);
                total = op.apply(other, total);
            } else {
                total = op.apply(total, other);
            }
        }
        ctx.finish();
        Ok(prefix)
    }

    /// Member `i` returns the value of member `(i − d) mod q`.
    pub fn circular_shift<T: Wire>(&self, value: T, d: i64) -> Result<T> {
        let Some(r) = self.local else {
            return Ok(value);
        };
        let q = self.size();
        let mut ctx = self.begin(Pattern::Shift);
        if q == 1 {
            ctx.finish();
            return Ok(value);
        }
        let shift = d.rem_euclid(q as i64) as usize;
        ctx.send((r + shift) % q, &value)?;
        let out = ctx.recv((r + q - shift) % q)?;
        ctx.finish();
        Ok(out)
    }

    /// Reduction to local index 0 in which the root receives every other
    /// member's value in turn. Same result as [`Group::reduce`] at `q − 1`
    /// rounds instead of `⌈log₂ q⌉`; kept as the baseline for cost
    /// comparisons.
    pub fn reduce_linear<T: Wire>(&self, value: T, op: &BinaryOp<T>) -> Result<Option<T>> {
        let Some(r) = self.local else {
            return Ok(None);
        };
        let mut ctx = self.begin(Pattern::LinearReduce);
        let out = if r == 0 {
            let mut acc = value;
            for src in 1..self.size() {
                let next = ctx.recv(src)?;
                acc = op.apply(acc, next);
            }
            Some(acc)
        } else {
            ctx.send(0, &value)?;
            None
        };
        ctx.finish();
        Ok(out)
    }
}

/// State of one collective instance on one rank.
struct Collective<'g> {
    group: &'g Group,
    tag: Tag,
    key: (u32, u32),
    pattern: Pattern,
    send_clock: u64,
    recv_clock: u64,
    messages: u64,
    words: u64,
}

impl Collective<'_> {
    fn send<T: Wire>(&mut self, to: usize, value: &T) -> Result<()> {
        let step = self.send_clock.max(self.recv_clock) + 1;
        self.send_clock = step;
        let mut payload = Vec::with_capacity(4 + 8);
        payload.extend_from_slice(&(step as u32).to_le_bytes());
        value.encode(&mut payload);
        self.messages += 1;
        self.words += words_for(payload.len() - 4);
        let dst = self.group.members[to];
        self.group.comm.endpoint.send(dst, self.tag, payload)?;
        Ok(())
    }

    fn recv<T: Wire>(&mut self, from: usize) -> Result<T> {
        let src = self.group.members[from];
        let payload = self.group.comm.endpoint.receive(src, self.tag)?;
        if payload.len() < 4 {
            return Err(DecodeError::Truncated {
                needed: 4 - payload.len(),
                available: payload.len(),
            }
            .into());
        }
        let stamp = u32::from_le_bytes(payload[..4].try_into().expect("four bytes")) as u64;
        self.recv_clock = (self.recv_clock + 1).max(stamp);
        Ok(T::from_bytes(&payload[4..])?)
    }

    /// Binomial-tree reduction towards local index 0. At stride `m`, a rank
    /// at a multiple of `2m` absorbs the partial result of `r + m` if that
    /// member exists; a rank at an odd multiple of `m` hands its partial
    /// result down and drops out.
    fn reduce_to_first<T: Wire>(
        &mut self,
        r: usize,
        value: T,
        op: &BinaryOp<T>,
        observe: &mut dyn FnMut(usize, &T),
    ) -> Result<Option<T>> {
        let q = self.group.size();
        let mut acc = value;
        for i in 0..ceil_log2(q) {
            let m = 1usize << i;
            if r.is_multiple_of(2 * m) {
                if r + m < q {
                    let upper = self.recv(r + m)?;
                    acc = op.apply(acc, upper);
                }
            } else {
                self.send(r - m, &acc)?;
                return Ok(None);
            }
            observe(i as usize + 1, &acc);
        }
        Ok(Some(acc))
    }

    /// Binomial-tree broadcast, the reverse of [`Self::reduce_to_first`],
    /// on ranks relabelled so that `root` is virtual rank 0.
    fn broadcast_from<T: Wire>(&mut self, r: usize, root: usize, mut held: Option<T>) -> Result<T> {
        let q = self.group.size();
        let v = (r + q - root) % q;
        let real = |virt: usize| (virt + root) % q;
        for i in (0..ceil_log2(q)).rev() {
            let m = 1usize << i;
            if v.is_multiple_of(2 * m) {
                if v + m < q {
                    let value = held.as_ref().expect("sender holds the broadcast value");
                    self.send(real(v + m), value)?;
                }
            } else if v % (2 * m) == m {
                held = Some(self.recv(real(v - m))?);
            }
        }
        Ok(held.expect("every member ends holding the value"))
    }

    fn finish(self) {
        self.group.comm.ledger.borrow_mut().record(OpRecord {
            pattern: self.pattern,
            key: self.key,
            group_size: self.group.size(),
            messages: self.messages,
            words: self.words,
            rounds: self.send_clock.max(self.recv_clock),
        });
    }
}
