#![no_main]

use dpl_core::protocol::Message;
use libfuzzer_sys::fuzz_target;

// Accepted frames are canonical: re-encoding gives back the input.
fuzz_target!(|data: &[u8]| {
    if let Ok(msg) = Message::decode(data) {
        assert_eq!(msg.encode(), data);
    }
});
