#![no_main]
use libfuzzer_sys::fuzz_target;
use manet_sim::config::{parse_config_text, ScenarioConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(pairs) = parse_config_text(text) {
        let mut c = ScenarioConfig::default();
        for (k, v) in &pairs {
            if c.set(k, v).is_err() {
                return;
            }
        }
        if c.validate().is_ok() {
            // derived settings must not panic on any valid config
            let _ = (c.radio(), c.dsdv(), c.aodv(), c.horizon_time());
        }
    }
    let _ = ScenarioConfig::from_sources(Some(text), &[]);
});
