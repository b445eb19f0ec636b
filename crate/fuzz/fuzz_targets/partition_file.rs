#![no_main]

use dpl_core::io::{parse_partition, write_partition, PartitionFile};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(file) = parse_partition(data) else { return };
    let Ok(map) = file.to_index_map(None) else { return };
    let rebuilt = PartitionFile::from_map(&map, file.seed, None);
    let mut text = Vec::new();
    write_partition(&mut text, &rebuilt).unwrap();
    let again = parse_partition(text.as_slice()).unwrap();
    assert_eq!(again.to_index_map(None).unwrap(), map);
});
