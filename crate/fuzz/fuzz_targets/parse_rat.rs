#![no_main]

use libfuzzer_sys::fuzz_target;

use arzela_core::Rat;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(x) = s.parse::<Rat>() {
        let back: Rat = x.to_string().parse().expect("display output parses");
        assert_eq!(back, x);
    }
});
