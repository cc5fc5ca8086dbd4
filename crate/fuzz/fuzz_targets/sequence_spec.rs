#![no_main]

use libfuzzer_sys::fuzz_target;

use arzela_core::FunctionSequence;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(seq) = FunctionSequence::from_json_str(s) {
        let _ = seq.spec_hash();
        let _ = seq.term(1);
    }
});
