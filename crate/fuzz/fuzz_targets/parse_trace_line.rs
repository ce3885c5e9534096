#![no_main]
use libfuzzer_sys::fuzz_target;
use manet_sim::trace::parse_line;

fuzz_target!(|data: &[u8]| {
    let Ok(line) = std::str::from_utf8(data) else { return };
    if let Ok(rec) = parse_line(line) {
        let printed = rec.to_string();
        assert_eq!(parse_line(&printed).as_ref(), Ok(&rec));
    }
});
