#![no_main]

use libfuzzer_sys::fuzz_target;
use tng_core::problems::dataset_io::{decode_dataset, encode_dataset};

fuzz_target!(|data: &[u8]| {
    if let Ok(ds) = decode_dataset(data) {
        // The format has exactly one encoding per dataset.
        assert_eq!(encode_dataset(&ds), data);
        assert_eq!(ds.features.len(), ds.n * ds.d);
        assert_eq!(ds.labels.len(), ds.n);
    }
});
