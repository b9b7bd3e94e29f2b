//! Point-to-point delivery of encoded round records between region agents.

use std::io::{BufReader, BufWriter};
use std::net::{Ipv4Addr, TcpListener, TcpStream};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::thread;
use std::time::Duration;

use super::wire::{read_frame, write_frame};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransportKind {
    #[default]
    InProc,
    Socket,
}

impl TransportKind {
    pub fn name(self) -> &'static str {
        match self {
            TransportKind::InProc => "inproc",
            TransportKind::Socket => "socket",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "inproc" => Some(TransportKind::InProc),
            "socket" => Some(TransportKind::Socket),
            _ => None,
        }
    }
}

#[derive(Debug)]
pub enum RecvError {
    Timeout,
    Closed,
}

/// One agent's view of the network.
pub trait Endpoint: Send {
    fn send(&mut self, to: usize, record: &str) -> std::io::Result<()>;
    fn recv_timeout(&mut self, timeout: Duration) -> Result<String, RecvError>;
}

fn recv(rx: &Receiver<String>, timeout: Duration) -> Result<String, RecvError> {
    rx.recv_timeout(timeout).map_err(|e| match e {
        RecvTimeoutError::Timeout => RecvError::Timeout,
        RecvTimeoutError::Disconnected => RecvError::Closed,
    })
}

pub struct InProcEndpoint {
    peers: Vec<Sender<String>>,
    inbox: Receiver<String>,
}

impl Endpoint for InProcEndpoint {
    fn send(&mut self, to: usize, record: &str) -> std::io::Result<()> {
        self.peers[to]
            .send(record.to_string())
            .map_err(|_| std::io::Error::new(std::io::ErrorKind::BrokenPipe, "peer gone"))
    }

    fn recv_timeout(&mut self, timeout: Duration) -> Result<String, RecvError> {
        recv(&self.inbox, timeout)
    }
}

pub fn in_proc(n: usize) -> Vec<InProcEndpoint> {
    let (txs, rxs): (Vec<_>, Vec<_>) = (0..n).map(|_| mpsc::channel()).unzip();
    rxs.into_iter()
        .map(|inbox| InProcEndpoint {
            peers: txs.clone(),
            inbox,
        })
        .collect()
}

/// TCP on loopback, one connection per ordered region pair. A reader
/// thread per incoming connection forwards frames to the agent's inbox.
pub struct SocketEndpoint {
    out: Vec<Option<BufWriter<TcpStream>>>,
    inbox: Receiver<String>,
}

impl Endpoint for SocketEndpoint {
    fn send(&mut self, to: usize, record: &str) -> std::io::Result<()> {
        let w = self.out[to]
            .as_mut()
            .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::NotConnected, "no connection"))?;
        write_frame(w, record)
    }

    fn recv_timeout(&mut self, timeout: Duration) -> Result<String, RecvError> {
        recv(&self.inbox, timeout)
    }
}

pub fn sockets(n: usize) -> std::io::Result<Vec<SocketEndpoint>> {
    let listeners = (0..n)
        .map(|_| TcpListener::bind((Ipv4Addr::LOCALHOST, 0)))
        .collect::<std::io::Result<Vec<_>>>()?;
    let addrs = listeners
        .iter()
        .map(|l| l.local_addr())
        .collect::<std::io::Result<Vec<_>>>()?;
    let mut outs: Vec<Vec<Option<BufWriter<TcpStream>>>> = Vec::with_capacity(n);
    for from in 0..n {
        let mut row = Vec::with_capacity(n);
        for (to, addr) in addrs.iter().enumerate() {
            if to == from {
                row.push(None);
            } else {
                let s = TcpStream::connect(addr)?;
                s.set_nodelay(true)?;
                row.push(Some(BufWriter::new(s)));
            }
        }
        outs.push(row);
    }
    let mut endpoints = Vec::with_capacity(n);
    for (listener, out) in listeners.into_iter().zip(outs) {
        let (tx, inbox) = mpsc::channel();
        for _ in 1..n {
            let (stream, _) = listener.accept()?;
            let tx = tx.clone();
            thread::spawn(move || {
                let mut r = BufReader::new(stream);
                while let Ok(Some(rec)) = read_frame(&mut r) {
                    if tx.send(rec).is_err() {
                        break;
                    }
                }
            });
        }
        endpoints.push(SocketEndpoint { out, inbox });
    }
    Ok(endpoints)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exchange(mut eps: Vec<impl Endpoint>) {
        let n = eps.len();
        for (i, ep) in eps.iter_mut().enumerate() {
            for j in (0..n).filter(|&j| j != i) {
                ep.send(j, &format!("{i}->{j}\nline\n")).unwrap();
            }
        }
        for (j, ep) in eps.iter_mut().enumerate() {
            let mut got: Vec<String> = (1..n)
                .map(|_| ep.recv_timeout(Duration::from_secs(5)).unwrap())
                .collect();
            got.sort();
            let want: Vec<String> = (0..n)
                .filter(|&i| i != j)
                .map(|i| format!("{i}->{j}\nline\n"))
                .collect();
            assert_eq!(got, want);
            assert!(matches!(
                ep.recv_timeout(Duration::from_millis(10)),
                Err(RecvError::Timeout)
            ));
        }
    }

    #[test]
    fn in_proc_delivers() {
        exchange(in_proc(3));
    }

    #[test]
    fn sockets_deliver() {
        exchange(sockets(3).unwrap());
    }
}
