#![no_main]

use boicp::io::parse_kitti_bin;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(cloud) = parse_kitti_bin(data) {
        assert_eq!(cloud.len() * 16, data.len());
    }
});
