#![no_main]

use libfuzzer_sys::fuzz_target;
use normlab::numstream::RealSpec;

fuzz_target!(|text: &str| {
    if let Ok(spec) = text.parse::<RealSpec>() {
        let again: RealSpec = spec.to_string().parse().expect("canonical form reparses");
        assert_eq!(again, spec);
    }
});
