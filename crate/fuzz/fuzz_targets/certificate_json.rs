#![no_main]

use libfuzzer_sys::fuzz_target;

use arzela_core::tree::verify_against_sequence;
use arzela_core::{Family, FunctionSequence, WitnessCertificate};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cert) = WitnessCertificate::from_json_str(s) {
        // Bound the work a hostile certificate can request.
        if cert.levels > 64 || cert.max_index > 256 {
            return;
        }
        let seq = FunctionSequence::family(Family::FixedPlateau);
        let report = verify_against_sequence(&cert, &seq);
        assert_eq!(report.passed, report.failure.is_none());
    }
});
