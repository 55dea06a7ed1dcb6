#![no_main]

use libfuzzer_sys::fuzz_target;
use normlab::repsys::{format_override_table, parse_override_table};

fuzz_target!(|input: (u8, &str)| {
    let (b, text) = input;
    let base = 2 + u32::from(b) % 255;
    if let Ok(table) = parse_override_table(text, base) {
        let again = parse_override_table(&format_override_table(&table, base), base)
            .expect("formatted table reparses");
        assert_eq!(again, table);
    }
});
