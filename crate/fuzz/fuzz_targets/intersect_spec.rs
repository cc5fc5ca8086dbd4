#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(r) = arzela_cli::intersect_from_str(s) {
        assert_eq!(r.total_length, r.intersection.total_length());
    }
});
