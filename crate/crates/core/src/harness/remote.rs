use std::collections::HashSet;
use std::fmt;
use std::io::{self, BufReader};
use std::net::{TcpStream, ToSocketAddrs};
use std::str::FromStr;
use std::thread;
use std::time::{Duration, SystemTime};

use log::warn;
use rand::Rng;
use thiserror::Error;

use super::protocol::{decode_payload, read_frame, write_message, FrameError, Message, WireMatrix};
use super::{finish, HarnessError, LeakageLog, ServerRecord};
use crate::grid::DenseMatrix;
use crate::scheme::{encode, SchemePlan, Share};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Error)]
pub enum RemoteError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("could not resolve address")]
    Resolve,
    #[error("framing: {0}")]
    Frame(#[from] FrameError),
    #[error("worker closed the connection without replying")]
    NoReply,
    #[error("worker replied with error code {0}")]
    WorkerError(u32),
    #[error("bad reply: {0}")]
    BadReply(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WorkerEndpoint {
    pub host: String,
    pub port: u16,
}

impl WorkerEndpoint {
    pub fn new(host: impl Into<String>, port: u16) -> Result<Self, HarnessError> {
        let host = host.into();
        if port == 0 || host.is_empty() {
            return Err(HarnessError::InvalidEndpoint(format!("{host}:{port}")));
        }
        Ok(Self { host, port })
    }
}

impl FromStr for WorkerEndpoint {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let invalid = || HarnessError::InvalidEndpoint(s.to_string());
        let (host, port) = s.trim().rsplit_once(':').ok_or_else(invalid)?;
        let port: u16 = port.parse().map_err(|_| invalid())?;
        let host = host.trim_start_matches('[').trim_end_matches(']');
        Self::new(host, port).map_err(|_| invalid())
    }
}

impl fmt::Display for WorkerEndpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.host.contains(':') {
            write!(f, "[{}]:{}", self.host, self.port)
        } else {
            write!(f, "{}:{}", self.host, self.port)
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RemoteOptions {
    /// Applies to connect, send and receive separately.
    pub timeout: Duration,
}

impl Default for RemoteOptions {
    fn default() -> Self {
        Self {
            timeout: DEFAULT_TIMEOUT,
        }
    }
}

fn to_wire(m: &DenseMatrix) -> WireMatrix {
    WireMatrix::new(m.rows() as u32, m.cols() as u32, m.entries().to_vec())
}

fn call(
    endpoint: &WorkerEndpoint,
    plan: &SchemePlan,
    share: &Share,
    timeout: Duration,
) -> Result<DenseMatrix, RemoteError> {
    let addr = (endpoint.host.as_str(), endpoint.port)
        .to_socket_addrs()?
        .next()
        .ok_or(RemoteError::Resolve)?;
    let stream = TcpStream::connect_timeout(&addr, timeout)?;
    stream.set_read_timeout(Some(timeout))?;
    stream.set_write_timeout(Some(timeout))?;
    stream.set_nodelay(true)?;
    let field = plan.field();
    let request = Message::Compute {
        modulus: field.modulus(),
        share_a: to_wire(&share.a),
        share_b: to_wire(&share.b),
    };
    write_message(&mut &stream, &request)?;
    let payload = read_frame(&mut BufReader::new(&stream))?.ok_or(RemoteError::NoReply)?;
    let reply = decode_payload(&payload)
        .map_err(|code| RemoteError::BadReply(format!("undecodable reply ({code})")))?;
    match reply {
        Message::Result(m) => {
            let expected = (share.a.rows(), share.b.cols());
            if (m.rows as usize, m.cols as usize) != expected {
                return Err(RemoteError::BadReply(format!(
                    "result is {}x{}, expected {}x{}",
                    m.rows, m.cols, expected.0, expected.1
                )));
            }
            if m.data.iter().any(|&v| v >= field.modulus()) {
                return Err(RemoteError::BadReply("result entry not below q".into()));
            }
            DenseMatrix::new(field, expected.0, expected.1, m.data)
                .map_err(|e| RemoteError::BadReply(e.to_string()))
        }
        Message::Error(code) => Err(RemoteError::WorkerError(code)),
        Message::Compute { .. } => Err(RemoteError::BadReply("unexpected COMPUTE".into())),
    }
}

/// Sends share `i` to `endpoints[i - 1]`, gathers every product and decodes.
///
/// All `N` responses are required; the first failing server aborts the job.
/// Repeating an endpoint is accepted, but one host then sees several shares,
/// which weakens the collusion assumption.
pub fn run_remote<R: Rng + ?Sized>(
    a: &DenseMatrix,
    b: &DenseMatrix,
    plan: &SchemePlan,
    rng: &mut R,
    endpoints: &[WorkerEndpoint],
    options: RemoteOptions,
) -> Result<(DenseMatrix, LeakageLog), HarnessError> {
    if endpoints.len() as u64 != plan.n() {
        return Err(HarnessError::EndpointCount {
            expected: plan.n() as usize,
            actual: endpoints.len(),
        });
    }
    let distinct: HashSet<&WorkerEndpoint> = endpoints.iter().collect();
    if distinct.len() < endpoints.len() {
        warn!(
            "{} endpoints but only {} distinct hosts; a repeated host sees several shares",
            endpoints.len(),
            distinct.len()
        );
    }
    let shares = encode(a, b, plan, rng)?;

    let outcomes: Vec<Result<ServerRecord, HarnessError>> = thread::scope(|scope| {
        let handles: Vec<_> = shares
            .shares
            .iter()
            .zip(endpoints)
            .map(|(share, endpoint)| {
                scope.spawn(move || {
                    let sent_at = SystemTime::now();
                    let product =
                        call(endpoint, plan, share, options.timeout).map_err(|source| {
                            HarnessError::Worker {
                                server: share.server,
                                endpoint: endpoint.to_string(),
                                source,
                            }
                        })?;
                    Ok(ServerRecord {
                        server: share.server,
                        share_a: share.a.clone(),
                        share_b: share.b.clone(),
                        product,
                        sent_at,
                        received_at: SystemTime::now(),
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("coordinator thread panicked"))
            .collect()
    });
    let records = outcomes.into_iter().collect::<Result<Vec<_>, _>>()?;
    finish(records, plan)
}
