#![no_main]

use libfuzzer_sys::fuzz_target;
use normlab::transducer::{parse_transducer, serialize_transducer};

fuzz_target!(|text: &str| {
    if let Ok(d) = parse_transducer(text) {
        let again = parse_transducer(&serialize_transducer(&d)).expect("serialized form reparses");
        assert_eq!(again, d);
        let _ = d.c_d(&[0, 1, 0]);
    }
});
