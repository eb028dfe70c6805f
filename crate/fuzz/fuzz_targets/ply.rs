#![no_main]

use boicp::io::{parse_ply, write_ply, Encoding};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // Anything that parses must survive a binary write/read cycle unchanged.
    if let Ok(cloud) = parse_ply(data) {
        let mut buf = Vec::new();
        write_ply(&mut buf, &cloud, Encoding::Binary).unwrap();
        assert_eq!(parse_ply(&buf).unwrap(), cloud);
    }
});
