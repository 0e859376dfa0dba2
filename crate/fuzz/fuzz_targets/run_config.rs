#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;
use tempsplit::config::KvConfig;
use tempsplit::run::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(kv) = KvConfig::parse(text) else { return };
    let _ = RunConfig::from_kv(&kv, Path::new("/nonexistent"));
});
