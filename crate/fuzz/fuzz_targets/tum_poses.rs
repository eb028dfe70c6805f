#![no_main]

use boicp::io::parse_tum_poses;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(poses) = parse_tum_poses(data) {
        for (_, p) in &poses {
            let (ortho, det) = p.orthonormality_defect();
            assert!(ortho < 1e-9 && det < 1e-9);
        }
    }
});
