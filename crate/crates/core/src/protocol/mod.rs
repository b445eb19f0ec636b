//! Master/worker message passing: the wire codec, the transport abstraction
//! and per-round communication accounting.

mod codec;
mod ledger;
mod transport;

pub use codec::{label_width, CodecError, Message};
pub use ledger::{RoundLedger, RoundRecord};
pub use transport::{in_process_network, ChannelEndpoint, Peer, Transport};
