#![no_main]

use fpk_core::config::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = RunConfig::parse(text) else { return };
    let json = cfg.to_json();
    let back = RunConfig::parse(&json).expect("resolved config reparses");
    assert_eq!(back.to_json(), json);
    let _ = cfg.problem();
});
