#![no_main]

use std::collections::HashMap;

use libfuzzer_sys::fuzz_target;
use normlab::repsys::{parse_repsys_with, Resources};
use normlab::transducer::Transducer;
use normlab::{Error, Result};
use num_rational::BigRational;

/// Resolves every name to a fixed machine or table; never touches the disk.
struct Fixed;

impl Resources for Fixed {
    fn transducer(&self, _: &str) -> Result<Transducer> {
        Transducer::identity(2)
    }

    fn table(&self, name: &str, _: u32) -> Result<HashMap<Vec<u8>, BigRational>> {
        if name.is_empty() {
            return Err(Error::InvalidArgument("empty name".into()));
        }
        Ok(HashMap::new())
    }
}

fuzz_target!(|input: (u8, &str)| {
    let (b, text) = input;
    let base = 2 + u32::from(b) % 9;
    if let Ok(f) = parse_repsys_with(text, base, &Fixed) {
        let _ = f.eval(&[0, 1]);
    }
});
