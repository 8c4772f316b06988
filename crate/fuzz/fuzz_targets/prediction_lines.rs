#![no_main]

use libfuzzer_sys::fuzz_target;

use gramkit::datamodel::{parse_predictions, predictions_to_string};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(predictions) = parse_predictions(text) {
        let reparsed = parse_predictions(&predictions_to_string(&predictions))
            .expect("serialized predictions reparse");
        assert_eq!(predictions, reparsed);
    }
});
