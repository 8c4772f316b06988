#![no_main]

use libfuzzer_sys::fuzz_target;

use gramkit::datamodel::{benchmark_to_string, parse_benchmark};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // The loader must never panic; on success the document must survive a
    // save/reload round trip unchanged.
    if let Ok(instances) = parse_benchmark(text) {
        let reparsed = parse_benchmark(&benchmark_to_string(&instances))
            .expect("serialized benchmark reparses");
        assert_eq!(instances, reparsed);
    }
});
