#![no_main]

use dpl_core::io::{parse_labels, write_labels};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(file) = parse_labels(data) else { return };
    let ids = file.sorted_ids();
    let labels = file.align(&ids).unwrap();
    let mut text = Vec::new();
    write_labels(&mut text, &labels, Some(&ids)).unwrap();
    let again = parse_labels(text.as_slice()).unwrap();
    assert_eq!(again.align(&ids).unwrap(), labels);
});
