#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    qcdiff_core::fuzz_checks::dataset(data);
});
