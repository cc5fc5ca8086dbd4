#![no_main]

use libfuzzer_sys::fuzz_target;

use arzela_core::StepFunction;

fuzz_target!(|data: &[u8]| {
    if let Ok(f) = serde_json::from_slice::<StepFunction>(data) {
        let (lo, hi) = f.domain();
        f.eval(lo).unwrap();
        f.eval(hi).unwrap();
        let _ = f.integral();
        let text = serde_json::to_string(&f).unwrap();
        assert_eq!(serde_json::from_str::<StepFunction>(&text).unwrap(), f);
    }
});
