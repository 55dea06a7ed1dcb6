#![no_main]

use libfuzzer_sys::fuzz_target;
use normlab::dimension::{Codec, RepsysCodec};
use normlab::repsys::RepSystem;

const BASES: [u32; 5] = [2, 3, 7, 10, 256];

fuzz_target!(|input: (u8, Vec<u8>)| {
    let (b, program) = input;
    let base = BASES[usize::from(b) % BASES.len()];
    let codec = RepsysCodec::new(RepSystem::identity(base).unwrap());
    if let Ok(word) = codec.decode(&program, base) {
        if !word.is_empty() && word.len() <= 1 << 16 {
            let p = codec.encode(&word, base).expect("decoded words encode");
            assert_eq!(codec.decode(&p, base).expect("fresh programs decode"), word);
        }
    }
});
