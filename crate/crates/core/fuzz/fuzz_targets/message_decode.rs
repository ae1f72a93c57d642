#![no_main]

use libfuzzer_sys::fuzz_target;
use tng_core::codecs::wire::{decode_message, encode_message};

fuzz_target!(|data: &[u8]| {
    if let Ok(msg) = decode_message(data) {
        // Re-encoding an accepted frame must be stable and decodable.
        let bytes = encode_message(&msg);
        let again = decode_message(&bytes).expect("re-encoded frame decodes");
        assert_eq!(encode_message(&again), bytes);
        assert_eq!(msg.dim(), again.dim());
    }
});
