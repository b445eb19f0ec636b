//! Point-to-point byte transport between the master and its workers.
//!
//! Only an in-process implementation ships. Every frame crosses the transport
//! as encoded bytes, so the ledger measures what a network would carry.

use std::sync::mpsc::{channel, Receiver, Sender};

use crate::error::{Error, Result};

use super::codec::Message;

/// Who is on the other end of a link.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Peer {
    Master,
    Worker(u32),
}

pub trait Transport: Send {
    fn send(&self, to: Peer, frame: Vec<u8>) -> Result<()>;

    /// Blocks until a frame arrives; returns its sender.
    fn recv(&self) -> Result<(Peer, Vec<u8>)>;

    fn send_message(&self, to: Peer, msg: &Message) -> Result<usize> {
        let frame = msg.encode();
        let len = frame.len();
        self.send(to, frame)?;
        Ok(len)
    }

    fn recv_message(&self) -> Result<(Peer, Message, usize)> {
        let (from, frame) = self.recv()?;
        let len = frame.len();
        Ok((from, Message::decode(&frame)?, len))
    }
}

/// One end of the in-process star network.
pub struct ChannelEndpoint {
    me: Peer,
    inbox: Receiver<(Peer, Vec<u8>)>,
    /// Index 0 is the master, `r + 1` is worker `r`. Workers only hold the
    /// master's sender.
    outboxes: Vec<Option<Sender<(Peer, Vec<u8>)>>>,
}

impl ChannelEndpoint {
    pub fn peer(&self) -> Peer {
        self.me
    }
}

impl Transport for ChannelEndpoint {
    fn send(&self, to: Peer, frame: Vec<u8>) -> Result<()> {
        let slot = match to {
            Peer::Master => 0,
            Peer::Worker(r) => r as usize + 1,
        };
        let tx = self
            .outboxes
            .get(slot)
            .and_then(Option::as_ref)
            .ok_or_else(|| Error::Protocol(format!("{:?} cannot reach {:?}", self.me, to)))?;
        tx.send((self.me, frame))
            .map_err(|_| Error::Protocol(format!("{to:?} hung up")))
    }

    fn recv(&self) -> Result<(Peer, Vec<u8>)> {
        self.inbox
            .recv()
            .map_err(|_| Error::Protocol(format!("all peers of {:?} hung up", self.me)))
    }
}

/// A master endpoint plus one endpoint per worker. Workers can only talk to
/// the master.
pub fn in_process_network(workers: usize) -> (ChannelEndpoint, Vec<ChannelEndpoint>) {
    let (master_tx, master_rx) = channel();
    let mut master_out = vec![None];
    let mut worker_ends = Vec::with_capacity(workers);
    for r in 0..workers {
        let (tx, rx) = channel();
        master_out.push(Some(tx));
        worker_ends.push(ChannelEndpoint {
            me: Peer::Worker(r as u32),
            inbox: rx,
            outboxes: vec![Some(master_tx.clone())],
        });
    }
    let master = ChannelEndpoint {
        me: Peer::Master,
        inbox: master_rx,
        outboxes: master_out,
    };
    (master, worker_ends)
}
