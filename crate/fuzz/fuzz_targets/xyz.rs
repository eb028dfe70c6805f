#![no_main]

use boicp::io::parse_xyz;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = parse_xyz(data);
});
