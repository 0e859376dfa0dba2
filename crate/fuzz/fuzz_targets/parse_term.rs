#![no_main]

use std::collections::BTreeMap;

use libfuzzer_sys::fuzz_target;
use tempsplit::terms::{parse_term, Calendar};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let mini: BTreeMap<String, u16> = [("S1".to_string(), 2)].into_iter().collect();
    for per_year in [1, 2, 4] {
        let cal = Calendar::new(per_year).unwrap();
        if let Ok(t) = parse_term(text, cal, &mini) {
            // Anything accepted must print back to something the plain parser accepts.
            assert_eq!(cal.parse(&t.to_string()).unwrap(), t);
        }
    }
});
