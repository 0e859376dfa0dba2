#![no_main]

use libfuzzer_sys::fuzz_target;
use tempsplit::evaluation::{accuracy_csv, read_accuracy_csv};
use tempsplit::terms::Calendar;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(parsed) = read_accuracy_csv(text, Calendar::default()) {
        let again = read_accuracy_csv(&accuracy_csv(&parsed.table), Calendar::default()).unwrap();
        assert_eq!(again.table, parsed.table);
    }
});
