#![no_main]
use libfuzzer_sys::fuzz_target;
use manet_sim::config::parse_overrides;
use manet_sim::runner::{parse_pauses, parse_protocols, parse_seeds};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let _ = parse_seeds(s);
    let _ = parse_pauses(s);
    let _ = parse_protocols(s);
    let words: Vec<String> = s.split_whitespace().map(str::to_string).collect();
    let _ = parse_overrides(&words);
});
