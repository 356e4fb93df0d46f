//! Running the N-server protocol, in process or over TCP, and recording
//! what every server saw.

pub mod protocol;
mod remote;
pub mod worker;

use std::fmt::Write as _;
use std::thread;
use std::time::SystemTime;

use rand::Rng;
use thiserror::Error;

use crate::grid::DenseMatrix;
use crate::scheme::{decode, encode, server_multiply, SchemeError, SchemePlan, Share};

pub use remote::{run_remote, RemoteError, RemoteOptions, WorkerEndpoint, DEFAULT_TIMEOUT};
pub use worker::{serve, Worker, WorkerHandle};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error("server {server} ({endpoint}): {source}")]
    Worker {
        server: u64,
        endpoint: String,
        #[source]
        source: RemoteError,
    },
    #[error("plan needs {expected} endpoints, got {actual}")]
    EndpointCount { expected: usize, actual: usize },
    #[error("invalid endpoint {0:?}: expected host:port with port in 1..=65535")]
    InvalidEndpoint(String),
    #[error("server index {index} out of range 1..={n}")]
    IndexOutOfRange { index: u64, n: u64 },
}

/// Everything one server observed during a job.
#[derive(Debug, Clone)]
pub struct ServerRecord {
    pub server: u64,
    pub share_a: DenseMatrix,
    pub share_b: DenseMatrix,
    pub product: DenseMatrix,
    pub sent_at: SystemTime,
    pub received_at: SystemTime,
}

impl ServerRecord {
    fn same_view(&self, other: &Self) -> bool {
        self.server == other.server
            && self.share_a == other.share_a
            && self.share_b == other.share_b
            && self.product == other.product
    }
}

/// One record per server, ordered by server index.
#[derive(Debug, Clone, Default)]
pub struct LeakageLog {
    pub records: Vec<ServerRecord>,
}

impl LeakageLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Equality ignoring timestamps.
    pub fn same_views(&self, other: &Self) -> bool {
        self.records.len() == other.records.len()
            && self
                .records
                .iter()
                .zip(&other.records)
                .all(|(a, b)| a.same_view(b))
    }
}

/// The shares a coalition jointly holds, in server-index order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollusionView {
    pub entries: Vec<(u64, DenseMatrix, DenseMatrix)>,
}

impl CollusionView {
    /// Text form: for each server a `server <i>` line, then `share_a` and
    /// `share_b` in matrix-file layout.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (server, a, b) in &self.entries {
            let _ = writeln!(out, "server {server}");
            for (name, m) in [("share_a", a), ("share_b", b)] {
                let _ = writeln!(out, "{name} {} {}", m.rows(), m.cols());
                out.push_str(&m.to_string());
            }
        }
        out
    }
}

/// Extracts what the servers in `servers` jointly observed.
pub fn collusion_view(log: &LeakageLog, servers: &[u64]) -> Result<CollusionView, HarnessError> {
    let n = log.len() as u64;
    let mut wanted = servers.to_vec();
    wanted.sort_unstable();
    wanted.dedup();
    let mut entries = Vec::with_capacity(wanted.len());
    for index in wanted {
        let record = log
            .records
            .iter()
            .find(|r| r.server == index)
            .ok_or(HarnessError::IndexOutOfRange { index, n })?;
        entries.push((index, record.share_a.clone(), record.share_b.clone()));
    }
    Ok(CollusionView { entries })
}

/// Simulates the N servers in process with up to `workers` threads.
pub fn run_local<R: Rng + ?Sized>(
    a: &DenseMatrix,
    b: &DenseMatrix,
    plan: &SchemePlan,
    rng: &mut R,
    workers: usize,
) -> Result<(DenseMatrix, LeakageLog), HarnessError> {
    let shares = encode(a, b, plan, rng)?;
    let workers = workers.clamp(1, shares.len().max(1));
    let chunk = shares.len().div_ceil(workers);

    let results: Vec<Result<ServerRecord, SchemeError>> = thread::scope(|scope| {
        let handles: Vec<_> = shares
            .shares
            .chunks(chunk)
            .map(|group| scope.spawn(move || group.iter().map(local_server).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("server thread panicked"))
            .collect()
    });
    let records = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    finish(records, plan)
}

fn local_server(share: &Share) -> Result<ServerRecord, SchemeError> {
    let sent_at = SystemTime::now();
    let product = server_multiply(&share.a, &share.b)?;
    Ok(ServerRecord {
        server: share.server,
        share_a: share.a.clone(),
        share_b: share.b.clone(),
        product,
        sent_at,
        received_at: SystemTime::now(),
    })
}

fn finish(
    mut records: Vec<ServerRecord>,
    plan: &SchemePlan,
) -> Result<(DenseMatrix, LeakageLog), HarnessError> {
    records.sort_by_key(|r| r.server);
    let products: Vec<DenseMatrix> = records.iter().map(|r| r.product.clone()).collect();
    let result = decode(&products, plan)?;
    Ok((result, LeakageLog { records }))
}
