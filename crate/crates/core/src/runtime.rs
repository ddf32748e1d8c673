//! SPMD harness: wires an endpoint, the world group and a ledger for each
//! rank and runs one program on all of them.

use std::net::{Ipv4Addr, TcpListener};
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::costmodel::{ledger_of, CostLedger, CostParams};
use crate::error::{Error, Result};
use crate::groups::{Comm, Group};
use crate::transport::{self, sim::SimConfig, Endpoint, Rank, TcpOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Sim,
    Tcp,
}

impl FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sim" => Ok(Self::Sim),
            "tcp" => Ok(Self::Tcp),
            other => Err(Error::Config(format!("unknown backend `{other}`"))),
        }
    }
}

impl std::fmt::Display for BackendKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Sim => "sim",
            Self::Tcp => "tcp",
        })
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub backend: BackendKind,
    /// World size. For TCP it must match the hosts file.
    pub np: usize,
    pub rank: Option<Rank>,
    pub hosts_path: Option<PathBuf>,
    pub seed: u64,
    pub cost: CostParams,
}

impl RunConfig {
    pub fn sim(np: usize, seed: u64) -> Self {
        Self {
            backend: BackendKind::Sim,
            np,
            rank: None,
            hosts_path: None,
            seed,
            cost: CostParams::default(),
        }
    }

    pub fn tcp(np: usize, rank: Rank, hosts_path: impl Into<PathBuf>) -> Self {
        Self {
            backend: BackendKind::Tcp,
            np,
            rank: Some(rank),
            hosts_path: Some(hosts_path.into()),
            seed: 0,
            cost: CostParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.np == 0 {
            return Err(Error::Config("np must be at least 1".into()));
        }
        match self.backend {
            BackendKind::Sim if self.rank.is_some() || self.hosts_path.is_some() => Err(Error::Config(
                "the sim backend takes no --rank or --hosts".into(),
            )),
            BackendKind::Tcp if self.rank.is_none() || self.hosts_path.is_none() => {
                Err(Error::Config("the tcp backend needs --rank and --hosts".into()))
            }
            BackendKind::Tcp if self.rank.is_some_and(|r| r >= self.np) => Err(Error::Config(format!(
                "rank {} outside world of size {}",
                self.rank.unwrap(),
                self.np
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RankOutput<R> {
    pub rank: Rank,
    pub result: R,
    pub ledger: CostLedger,
}

/// Results of a run: every rank's under the simulator, only the local one
/// under TCP.
#[derive(Debug, Clone)]
pub struct RunOutput<R> {
    pub backend: BackendKind,
    pub world_size: usize,
    pub ranks: Vec<RankOutput<R>>,
}

impl<R> RunOutput<R> {
    pub fn ledger(&self) -> CostLedger {
        ledger_of(self.ranks.iter().map(|r| &r.ledger))
    }

    pub fn result_of(&self, rank: Rank) -> Option<&R> {
        self.ranks.iter().find(|r| r.rank == rank).map(|r| &r.result)
    }

    pub fn into_results(self) -> Vec<R> {
        self.ranks.into_iter().map(|r| r.result).collect()
    }
}

/// Runs `program` on an already connected endpoint.
pub fn run_on_endpoint<R>(endpoint: Endpoint, program: impl FnOnce(&Group) -> R) -> RankOutput<R> {
    let rank = endpoint.rank();
    let comm = Comm::new(endpoint);
    let world = Group::world(&comm);
    let result = program(&world);
    drop(world);
    RankOutput {
        rank,
        result,
        ledger: comm.take_ledger(),
    }
}

pub fn run<R, F>(config: &RunConfig, program: F) -> Result<RunOutput<R>>
where
    F: Fn(&Group) -> R + Sync,
    R: Send,
{
    config.validate()?;
    match config.backend {
        BackendKind::Sim => {
            let ranks = transport::sim::launch_simulated_with(&SimConfig::with_seed(config.seed), config.np, |ep| {
                run_on_endpoint(ep, &program)
            })?;
            Ok(RunOutput {
                backend: BackendKind::Sim,
                world_size: config.np,
                ranks,
            })
        }
        BackendKind::Tcp => {
            let hosts = transport::read_hosts(config.hosts_path.as_ref().expect("validated"))?;
            if hosts.len() != config.np {
                return Err(Error::Config(format!(
                    "hosts file lists {} ranks but np is {}",
                    hosts.len(),
                    config.np
                )));
            }
            let endpoint = transport::connect_tcp(config.rank.expect("validated"), &hosts)?;
            Ok(RunOutput {
                backend: BackendKind::Tcp,
                world_size: config.np,
                ranks: vec![run_on_endpoint(endpoint, program)],
            })
        }
    }
}

/// Runs `program` on `np` ranks in this process, one thread each, talking
/// over TCP on the loopback interface.
pub fn run_loopback_tcp<R, F>(np: usize, program: F) -> Result<RunOutput<R>>
where
    F: Fn(&Group) -> R + Sync,
    R: Send,
{
    if np == 0 {
        return Err(Error::Config("np must be at least 1".into()));
    }
    let listeners = (0..np)
        .map(|_| TcpListener::bind((Ipv4Addr::LOCALHOST, 0)))
        .collect::<std::io::Result<Vec<_>>>()?;
    let hosts = listeners
        .iter()
        .map(TcpListener::local_addr)
        .collect::<std::io::Result<Vec<_>>>()?;
    let options = TcpOptions::default();
    let ranks = std::thread::scope(|s| {
        let handles: Vec<_> = listeners
            .into_iter()
            .enumerate()
            .map(|(rank, listener)| {
                let (hosts, options, program) = (&hosts, &options, &program);
                s.spawn(move || -> Result<RankOutput<R>> {
                    let endpoint = transport::connect_tcp_with_listener(rank, listener, hosts, options)?;
                    Ok(run_on_endpoint(endpoint, program))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|e| std::panic::resume_unwind(e)))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(RunOutput {
        backend: BackendKind::Tcp,
        world_size: np,
        ranks,
    })
}

/// Runs `program` on `np` simulated ranks and returns their results in rank
/// order.
pub fn simulate<R, F>(np: usize, seed: u64, program: F) -> Result<Vec<R>>
where
    F: Fn(&Group) -> R + Sync,
    R: Send,
{
    Ok(run(&RunConfig::sim(np, seed), program)?.into_results())
}
