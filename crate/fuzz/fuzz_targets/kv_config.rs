#![no_main]

use libfuzzer_sys::fuzz_target;
use tempsplit::config::KvConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(kv) = KvConfig::parse(text) {
        let text: String = kv.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
        let again = KvConfig::parse(&text).unwrap();
        assert_eq!(again, kv);
    }
});
