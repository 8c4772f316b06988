#![no_main]

use libfuzzer_sys::fuzz_target;

use gramkit::grounding::TimestampToken;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // Accepted surfaces are exactly the canonical renderings.
    if let Ok(token) = TimestampToken::parse(text) {
        assert_eq!(token.surface(), text);
        let again = TimestampToken::new(token.timestamp_s());
        assert_eq!(again.surface(), text);
    }
});
