#![no_main]

use libfuzzer_sys::fuzz_target;

use gramkit::toyvlm::ModelConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = ModelConfig::from_json_str(text) {
        let reparsed = ModelConfig::from_json_str(&cfg.to_json_string())
            .expect("serialized config reparses");
        assert_eq!(cfg, reparsed);
    }
});
