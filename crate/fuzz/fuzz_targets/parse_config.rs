#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;
use normlab_cli::config::parse_config;

fuzz_target!(|text: &str| {
    let _ = parse_config(text, Path::new("/nonexistent"));
});
