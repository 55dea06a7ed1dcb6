#![no_main]

use libfuzzer_sys::fuzz_target;
use normlab::numstream::cache::{parse_cache, render_cache};

fuzz_target!(|text: &str| {
    if let Ok(c) = parse_cache(text) {
        let again = parse_cache(&render_cache(&c)).expect("rendered cache reparses");
        assert_eq!(again, c);
    }
});
