#![no_main]

use libfuzzer_sys::fuzz_target;
use nls_core::checkpoint::{decode, encode};

fuzz_target!(|data: &[u8]| {
    if let Ok((grid, values)) = decode(data) {
        assert_eq!(values.len(), grid.len());
        // accepted files re-encode to themselves apart from the reserved bytes
        let again = encode(&grid, &values);
        assert_eq!(again[..24], data[..24]);
        assert_eq!(again[32..], data[32..]);
    }
});
