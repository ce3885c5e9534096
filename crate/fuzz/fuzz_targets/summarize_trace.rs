#![no_main]
use libfuzzer_sys::fuzz_target;
use manet_sim::engine::SimTime;
use manet_sim::trace::summarize;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = summarize(data) {
        let r = s.report(SimTime::from_secs(200));
        assert!(r.received <= r.sent);
    }
});
