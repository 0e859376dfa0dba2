#![no_main]

use libfuzzer_sys::fuzz_target;
use tempsplit::config::KvConfig;
use tempsplit::synthgen::GeneratorConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(kv) = KvConfig::parse(text) else { return };
    let _ = GeneratorConfig::from_kv(&kv);
});
