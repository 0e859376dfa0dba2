#![no_main]

use libfuzzer_sys::fuzz_target;
use tempsplit::records::{ingest, AttributeDictionary, IngestConfig};
use tempsplit::terms::{Calendar, TermRange};

// Input is `students.csv`, a NUL byte, then `courses.csv`.
fuzz_target!(|data: &[u8]| {
    let split = data.iter().position(|&b| b == 0).unwrap_or(data.len());
    let (students, courses) = (&data[..split], data.get(split + 1..).unwrap_or(&[]));
    let cal = Calendar::default();
    let range = TermRange::new(cal.parse("2000.1").unwrap(), cal.parse("2030.2").unwrap()).unwrap();
    let _ = ingest(students, courses, &IngestConfig::new(cal, range), AttributeDictionary::default());
});
