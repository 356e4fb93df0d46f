//! Stateless TCP worker: one COMPUTE frame in, one RESULT or ERROR frame out.

use std::io::{self, BufReader, BufWriter};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};

use log::{debug, warn};

use super::protocol::{
    decode_payload, read_frame, write_message, ErrorCode, FrameError, Message, WireMatrix,
};

/// Multiplies the two shares of a COMPUTE request modulo `q`.
pub fn compute(modulus: u64, a: &WireMatrix, b: &WireMatrix) -> WireMatrix {
    let (rows, inner, cols) = (a.rows as usize, a.cols as usize, b.cols as usize);
    let q = modulus as u128;
    let mut out = vec![0u64; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            let mut acc = 0u128;
            for k in 0..inner {
                acc = (acc + a.data[r * inner + k] as u128 * b.data[k * cols + c] as u128) % q;
            }
            out[r * cols + c] = acc as u64;
        }
    }
    WireMatrix::new(a.rows, b.cols, out)
}

/// Answers one payload.
pub fn respond(payload: &[u8]) -> Message {
    match decode_payload(payload) {
        Ok(Message::Compute {
            modulus,
            share_a,
            share_b,
        }) => Message::Result(compute(modulus, &share_a, &share_b)),
        // only COMPUTE is a request
        Ok(_) => Message::Error(ErrorCode::Malformed as u32),
        Err(code) => Message::Error(code as u32),
    }
}

fn handle_connection(stream: TcpStream) -> io::Result<()> {
    let peer = stream.peer_addr().ok();
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut writer = BufWriter::new(stream);
    loop {
        match read_frame(&mut reader) {
            Ok(Some(payload)) => write_message(&mut writer, &respond(&payload))?,
            Ok(None) => return Ok(()),
            Err(FrameError::TooLarge(len)) => {
                // cannot resynchronise after an oversized prefix
                debug!("{peer:?}: oversized frame ({len} bytes), closing");
                write_message(&mut writer, &Message::Error(ErrorCode::Malformed as u32))?;
                return Ok(());
            }
            Err(FrameError::Truncated) => return Ok(()),
            Err(FrameError::Io(e)) => return Err(e),
        }
    }
}

/// A bound worker socket.
pub struct Worker {
    listener: TcpListener,
    shutdown: Arc<AtomicBool>,
}

impl Worker {
    pub fn bind<A: ToSocketAddrs>(addr: A) -> io::Result<Self> {
        Ok(Self {
            listener: TcpListener::bind(addr)?,
            shutdown: Arc::new(AtomicBool::new(false)),
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Accepts connections until shut down, one thread per connection.
    pub fn serve(self) -> io::Result<()> {
        for stream in self.listener.incoming() {
            if self.shutdown.load(Ordering::SeqCst) {
                break;
            }
            match stream {
                Ok(stream) => {
                    thread::spawn(move || {
                        if let Err(e) = handle_connection(stream) {
                            debug!("connection ended with error: {e}");
                        }
                    });
                }
                Err(e) => warn!("accept failed: {e}"),
            }
        }
        Ok(())
    }

    /// Runs [`Worker::serve`] on a background thread.
    pub fn spawn(self) -> io::Result<WorkerHandle> {
        let addr = self.local_addr()?;
        let shutdown = Arc::clone(&self.shutdown);
        let thread = thread::spawn(move || self.serve());
        Ok(WorkerHandle {
            addr,
            shutdown,
            thread: Some(thread),
        })
    }
}

/// Owner of a background worker; dropping it stops the accept loop.
pub struct WorkerHandle {
    addr: SocketAddr,
    shutdown: Arc<AtomicBool>,
    thread: Option<JoinHandle<io::Result<()>>>,
}

impl WorkerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        if let Some(thread) = self.thread.take() {
            self.shutdown.store(true, Ordering::SeqCst);
            // wake the blocking accept
            let _ = TcpStream::connect(self.addr);
            let _ = thread.join();
        }
    }
}

impl Drop for WorkerHandle {
    fn drop(&mut self) {
        self.stop();
    }
}

/// Binds `port` on all interfaces and serves forever.
pub fn serve(port: u16) -> io::Result<()> {
    Worker::bind(("0.0.0.0", port))?.serve()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::protocol::{encode_frame, encode_payload};
    use std::io::Write;

    fn compute_msg(q: u64, a: Vec<u64>, rows: u32, inner: u32, b: Vec<u64>, cols: u32) -> Message {
        Message::Compute {
            modulus: q,
            share_a: WireMatrix::new(rows, inner, a),
            share_b: WireMatrix::new(inner, cols, b),
        }
    }

    #[test]
    fn scalar_product() {
        let payload = encode_payload(&compute_msg(53, vec![3], 1, 1, vec![4], 1));
        assert_eq!(
            respond(&payload),
            Message::Result(WireMatrix::new(1, 1, vec![12]))
        );
    }

    #[test]
    fn truncated_and_mismatched() {
        let payload = encode_payload(&compute_msg(53, vec![3, 1], 1, 2, vec![4, 5], 1));
        assert_eq!(respond(&payload[..payload.len() - 5]), Message::Error(2));
        // client wrote a 2x1 share_b against a declared inner dimension of 3
        let mut mismatched = payload[..6].to_vec();
        mismatched.extend_from_slice(&53u64.to_le_bytes());
        for v in [1u32, 3, 1] {
            mismatched.extend_from_slice(&v.to_le_bytes());
        }
        for v in [3u64, 1, 4, 4, 5] {
            mismatched.extend_from_slice(&v.to_le_bytes());
        }
        assert_eq!(respond(&mismatched), Message::Error(3));
        let result = encode_payload(&Message::Result(WireMatrix::new(1, 1, vec![0])));
        assert_eq!(respond(&result), Message::Error(2));
    }

    #[test]
    fn connection_survives_bad_frames() {
        let handle = Worker::bind("127.0.0.1:0").unwrap().spawn().unwrap();
        let mut stream = TcpStream::connect(handle.addr()).unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut bad = encode_frame(&Message::Error(0));
        bad[4] = b'Z';
        stream.write_all(&bad).unwrap();
        let reply = read_frame(&mut reader).unwrap().unwrap();
        assert_eq!(decode_payload(&reply), Ok(Message::Error(1)));
        stream
            .write_all(&encode_frame(&compute_msg(53, vec![3], 1, 1, vec![4], 1)))
            .unwrap();
        let reply = read_frame(&mut reader).unwrap().unwrap();
        assert_eq!(
            decode_payload(&reply),
            Ok(Message::Result(WireMatrix::new(1, 1, vec![12])))
        );
        handle.shutdown();
    }
}
