#![no_main]

use dpl_core::io::{parse_edge_list, write_edge_list};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(loaded) = parse_edge_list(data) else { return };
    loaded.graph.check_invariants().unwrap();
    assert_eq!(loaded.original_ids.len(), loaded.graph.num_nodes());
    assert!(loaded.original_ids.windows(2).all(|w| w[0] < w[1]));

    let mut text = Vec::new();
    write_edge_list(&mut text, &loaded.graph, Some(&loaded.original_ids)).unwrap();
    let again = parse_edge_list(text.as_slice()).unwrap();
    assert_eq!(again.graph, loaded.graph);
    assert_eq!(again.original_ids, loaded.original_ids);
});
