#![no_main]

use libfuzzer_sys::fuzz_target;
use normlab::martingale::parse_martingale;

fuzz_target!(|text: &str| {
    if let Ok(m) = parse_martingale(text) {
        let again = parse_martingale(&m.to_string()).expect("printed form reparses");
        assert_eq!(again, m);
        let _ = m.fairness_check();
    }
});
