#![no_main]

use boicp::io::{parse_pcd, write_pcd, Encoding};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(cloud) = parse_pcd(data) {
        let mut buf = Vec::new();
        write_pcd(&mut buf, &cloud, Encoding::Binary).unwrap();
        assert_eq!(parse_pcd(&buf).unwrap(), cloud);
    }
});
