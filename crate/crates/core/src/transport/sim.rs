//! Deterministic in-process backend.
//!
//! Every logical processing element runs on its own OS thread, but only one
//! of them executes at a time: a rank holds the baton until it sends,
//! receives or finishes, at which point a seeded RNG picks the next runnable
//! rank. Delivery is instantaneous. With a fixed seed the interleaving, and
//! therefore everything observable, is reproducible.
//!
//! When no rank is runnable but some are blocked in `receive`, the run is
//! quiescent and can never make progress; every blocked receive fails with
//! [`TransportError::Starved`] and the launcher returns a [`DeadlockReport`].

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::sync::{Arc, Condvar, Mutex, MutexGuard, PoisonError};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Backend, Endpoint, Frame, Rank, Tag, TransportError};

/// Launch parameters for a simulated run.
#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Seed of the scheduling RNG.
    pub seed: u64,
    /// Stack size of each rank's thread.
    pub stack_size: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            stack_size: 512 * 1024,
        }
    }
}

impl SimConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockedRank {
    pub rank: Rank,
    pub src: Rank,
    pub tag: Tag,
}

/// Ranks stuck in `receive` when the simulation went quiescent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeadlockReport {
    pub blocked: Vec<BlockedRank>,
}

impl DeadlockReport {
    pub fn blocked_ranks(&self) -> Vec<Rank> {
        self.blocked.iter().map(|b| b.rank).collect()
    }
}

impl fmt::Display for DeadlockReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "deadlock: ")?;
        for (i, b) in self.blocked.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "rank {} waits on (src {}, tag {})", b.rank, b.src, b.tag)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum SimError {
    #[error("{0}")]
    Deadlock(DeadlockReport),
    #[error("rank {rank} panicked: {message}")]
    Panicked { rank: Rank, message: String },
    #[error("a simulated world needs at least one rank")]
    EmptyWorld,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Ready,
    Blocked { src: Rank, tag: Tag },
    Done,
}

struct State {
    inbox: Vec<HashMap<(Rank, Tag), VecDeque<Vec<u8>>>>,
    status: Vec<Status>,
    ready: Vec<Rank>,
    // Position of each rank in `ready`, or usize::MAX.
    ready_pos: Vec<usize>,
    running: Option<Rank>,
    rng: ChaCha8Rng,
    deadlock: Option<DeadlockReport>,
}

impl State {
    fn make_ready(&mut self, rank: Rank) {
        self.status[rank] = Status::Ready;
        if self.ready_pos[rank] == usize::MAX {
            self.ready_pos[rank] = self.ready.len();
            self.ready.push(rank);
        }
    }

    fn unready(&mut self, rank: Rank) {
        let pos = std::mem::replace(&mut self.ready_pos[rank], usize::MAX);
        if pos != usize::MAX {
            self.ready.swap_remove(pos);
            if let Some(&moved) = self.ready.get(pos) {
                self.ready_pos[moved] = pos;
            }
        }
    }
}

struct Kernel {
    state: Mutex<State>,
    wake: Vec<Condvar>,
}

impl Kernel {
    fn new(p: usize, seed: u64) -> Self {
        Self {
            state: Mutex::new(State {
                inbox: (0..p).map(|_| HashMap::new()).collect(),
                status: vec![Status::Ready; p],
                ready: (0..p).collect(),
                ready_pos: (0..p).collect(),
                running: None,
                rng: ChaCha8Rng::seed_from_u64(seed),
                deadlock: None,
            }),
            wake: (0..p).map(|_| Condvar::new()).collect(),
        }
    }

    fn lock(&self) -> MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(PoisonError::into_inner)
    }

    /// Hands the baton to a random runnable rank, or detects quiescence.
    fn dispatch(&self, st: &mut State) {
        if st.deadlock.is_some() {
            return;
        }
        if st.ready.is_empty() {
            st.running = None;
            let blocked: Vec<_> = st
                .status
                .iter()
                .enumerate()
                .filter_map(|(rank, s)| match *s {
                    Status::Blocked { src, tag } => Some(BlockedRank { rank, src, tag }),
                    _ => None,
                })
                .collect();
            if !blocked.is_empty() {
                st.deadlock = Some(DeadlockReport { blocked });
                for cv in &self.wake {
                    cv.notify_all();
                }
            }
            return;
        }
        let next = st.ready[st.rng.random_range(0..st.ready.len())];
        st.running = Some(next);
        self.wake[next].notify_one();
    }

    fn wait_turn<'a>(&'a self, me: Rank, mut st: MutexGuard<'a, State>) -> MutexGuard<'a, State> {
        while st.running != Some(me) && st.deadlock.is_none() {
            st = self.wake[me].wait(st).unwrap_or_else(PoisonError::into_inner);
        }
        st
    }

    fn yield_now<'a>(&'a self, me: Rank, mut st: MutexGuard<'a, State>) -> MutexGuard<'a, State> {
        self.dispatch(&mut st);
        self.wait_turn(me, st)
    }

    fn send(&self, frame: Frame) {
        let me = frame.src;
        let mut st = self.lock();
        if let Status::Blocked { src, tag } = st.status[frame.dst] {
            if src == me && tag == frame.tag {
                st.make_ready(frame.dst);
            }
        }
        st.inbox[frame.dst]
            .entry((me, frame.tag))
            .or_default()
            .push_back(frame.payload);
        drop(self.yield_now(me, st));
    }

    fn receive(&self, me: Rank, src: Rank, tag: Tag) -> Result<Vec<u8>, TransportError> {
        let mut st = self.yield_now(me, self.lock());
        loop {
            if let Some(queue) = st.inbox[me].get_mut(&(src, tag)) {
                if let Some(payload) = queue.pop_front() {
                    return Ok(payload);
                }
            }
            if st.deadlock.is_some() {
                return Err(TransportError::Starved { src, tag });
            }
            st.unready(me);
            st.status[me] = Status::Blocked { src, tag };
            self.dispatch(&mut st);
            st = self.wait_turn(me, st);
        }
    }

    fn finish(&self, me: Rank) {
        let mut st = self.lock();
        st.unready(me);
        st.status[me] = Status::Done;
        if st.running == Some(me) {
            self.dispatch(&mut st);
        }
    }

    fn deadlock(&self) -> Option<DeadlockReport> {
        self.lock().deadlock.clone()
    }
}

struct SimBackend {
    kernel: Arc<Kernel>,
    rank: Rank,
}

impl Backend for SimBackend {
    fn send(&self, frame: Frame) -> Result<(), TransportError> {
        debug_assert_eq!(frame.src, self.rank);
        self.kernel.send(frame);
        Ok(())
    }

    fn receive(&self, src: Rank, tag: Tag) -> Result<Vec<u8>, TransportError> {
        self.kernel.receive(self.rank, src, tag)
    }
}

// Marks the rank finished even when its program unwinds.
struct FinishGuard<'a> {
    kernel: &'a Kernel,
    rank: Rank,
}

impl Drop for FinishGuard<'_> {
    fn drop(&mut self) {
        self.kernel.finish(self.rank);
    }
}

/// Runs `program` once per rank on `p` simulated processing elements.
pub fn launch_simulated<R, F>(p: usize, seed: u64, program: F) -> Result<Vec<R>, SimError>
where
    F: Fn(Endpoint) -> R + Sync,
    R: Send,
{
    launch_simulated_with(&SimConfig::with_seed(seed), p, program)
}

pub fn launch_simulated_with<R, F>(config: &SimConfig, p: usize, program: F) -> Result<Vec<R>, SimError>
where
    F: Fn(Endpoint) -> R + Sync,
    R: Send,
{
    if p == 0 {
        return Err(SimError::EmptyWorld);
    }
    let kernel = Arc::new(Kernel::new(p, config.seed));
    {
        let mut st = kernel.lock();
        kernel.dispatch(&mut st);
    }
    let program = &program;
    let outcomes: Vec<std::thread::Result<R>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..p)
            .map(|rank| {
                let kernel = Arc::clone(&kernel);
                std::thread::Builder::new()
                    .name(format!("sim-rank-{rank}"))
                    .stack_size(config.stack_size)
                    .spawn_scoped(scope, move || {
                        let _guard = FinishGuard {
                            kernel: &kernel,
                            rank,
                        };
                        drop(kernel.wait_turn(rank, kernel.lock()));
                        let endpoint = Endpoint::new(
                            rank,
                            p,
                            Box::new(SimBackend {
                                kernel: Arc::clone(&kernel),
                                rank,
                            }),
                        );
                        program(endpoint)
                    })
                    .expect("failed to spawn simulated rank")
            })
            .collect();
        handles.into_iter().map(|h| h.join()).collect()
    });

    let mut results = Vec::with_capacity(p);
    let mut panicked = None;
    for (rank, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(r) => results.push(r),
            Err(payload) => {
                if panicked.is_none() {
                    panicked = Some(SimError::Panicked {
                        rank,
                        message: panic_message(payload.as_ref()),
                    });
                }
            }
        }
    }
    if let Some(err) = panicked {
        return Err(err);
    }
    if let Some(report) = kernel.deadlock() {
        return Err(SimError::Deadlock(report));
    }
    Ok(results)
}

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_owned()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "non-string panic payload".to_owned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_rank_returns_its_rank() {
        assert_eq!(launch_simulated(1, 0, |ep| ep.rank()).unwrap(), vec![0]);
    }

    #[test]
    fn self_send_of_empty_payload() {
        let out = launch_simulated(1, 3, |ep| {
            ep.send(0, 7, vec![]).unwrap();
            ep.receive(0, 7).unwrap()
        })
        .unwrap();
        assert_eq!(out, vec![Vec::<u8>::new()]);
    }

    #[test]
    fn circular_wait_is_reported() {
        let err = launch_simulated(2, 0, |ep| {
            let peer = 1 - ep.rank();
            ep.receive(peer, 0).map(|_| ())
        })
        .unwrap_err();
        match err {
            SimError::Deadlock(report) => {
                assert_eq!(report.blocked_ranks(), vec![0, 1]);
                assert_eq!(report.blocked[0].src, 1);
                assert_eq!(report.blocked[1].src, 0);
            }
            other => panic!("expected deadlock, got {other:?}"),
        }
    }

    #[test]
    fn receive_from_finished_rank_starves() {
        let err = launch_simulated(2, 5, |ep| {
            if ep.rank() == 0 {
                ep.receive(1, 9).map(|_| ())
            } else {
                Ok(())
            }
        })
        .unwrap_err();
        let SimError::Deadlock(report) = err else {
            panic!("expected deadlock")
        };
        assert_eq!(
            report.blocked,
            vec![BlockedRank {
                rank: 0,
                src: 1,
                tag: 9
            }]
        );
    }

    #[test]
    fn receives_are_selective_by_source_and_tag() {
        for seed in 0..50 {
            let out = launch_simulated(3, seed, |ep| match ep.rank() {
                0 => {
                    let b = ep.receive(2, 1).unwrap();
                    let a = ep.receive(1, 1).unwrap();
                    let c = ep.receive(1, 2).unwrap();
                    vec![a, b, c]
                }
                1 => {
                    ep.send(0, 2, b"one-two".to_vec()).unwrap();
                    ep.send(0, 1, b"one-one".to_vec()).unwrap();
                    vec![]
                }
                _ => {
                    ep.send(0, 1, b"two-one".to_vec()).unwrap();
                    vec![]
                }
            })
            .unwrap();
            assert_eq!(
                out[0],
                vec![b"one-one".to_vec(), b"two-one".to_vec(), b"one-two".to_vec()]
            );
        }
    }

    #[test]
    fn fifo_per_channel_under_many_schedules() {
        for seed in 0..100 {
            let out = launch_simulated(4, seed, |ep| {
                if ep.rank() == 3 {
                    ep.send(0, 5, b"A".to_vec()).unwrap();
                    ep.send(0, 5, b"B".to_vec()).unwrap();
                }
                if ep.rank() == 0 {
                    let first = ep.receive(3, 5).unwrap();
                    let second = ep.receive(3, 5).unwrap();
                    Some((first, second))
                } else {
                    None
                }
            })
            .unwrap();
            assert_eq!(out[0], Some((b"A".to_vec(), b"B".to_vec())));
        }
    }

    #[test]
    fn unknown_destination_is_rejected() {
        let out = launch_simulated(2, 0, |ep| ep.send(5, 0, vec![1]).is_err()).unwrap();
        assert_eq!(out, vec![true, true]);
    }

    #[test]
    fn panics_are_reported_with_rank() {
        let err = launch_simulated(3, 0, |ep| {
            if ep.rank() == 2 {
                panic!("boom");
            }
        })
        .unwrap_err();
        match err {
            SimError::Panicked { rank, message } => {
                assert_eq!(rank, 2);
                assert_eq!(message, "boom");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn same_seed_same_interleaving() {
        let trace = |seed| {
            let log = Mutex::new(Vec::new());
            launch_simulated(6, seed, |ep| {
                for step in 0..3 {
                    log.lock().unwrap().push((ep.rank(), step));
                    let dst = (ep.rank() + 1) % 6;
                    ep.send(dst, step, vec![]).unwrap();
                    ep.receive((ep.rank() + 5) % 6, step).unwrap();
                }
            })
            .unwrap();
            log.into_inner().unwrap()
        };
        assert_eq!(trace(11), trace(11));
        assert_ne!(trace(11), trace(12));
    }

    #[test]
    fn thousands_of_ranks_are_practical() {
        let p = 4096;
        let out = launch_simulated(p, 1, |ep| {
            let next = (ep.rank() + 1) % p;
            let prev = (ep.rank() + p - 1) % p;
            ep.send(next, 0, (ep.rank() as u32).to_le_bytes().to_vec()).unwrap();
            let got = ep.receive(prev, 0).unwrap();
            u32::from_le_bytes(got.try_into().unwrap()) as usize
        })
        .unwrap();
        assert!(out.iter().enumerate().all(|(r, &v)| v == (r + p - 1) % p));
    }
}
