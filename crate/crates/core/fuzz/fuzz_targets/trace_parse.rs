#![no_main]

use libfuzzer_sys::fuzz_target;
use tng_core::trace::{read_trace, write_trace};

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = read_trace(data) {
        let mut out = Vec::new();
        write_trace(&mut out, &rows).expect("writing to memory");
        assert_eq!(read_trace(out.as_slice()).expect("written trace parses"), rows);
    }
});
