#![no_main]

use libfuzzer_sys::fuzz_target;

use arzela_core::IntervalSet;

fuzz_target!(|data: &[u8]| {
    if let Ok(set) = serde_json::from_slice::<IntervalSet>(data) {
        assert!(set.intervals().windows(2).all(|w| w[0].hi() <= w[1].lo()));
        let text = serde_json::to_string(&set).unwrap();
        assert_eq!(serde_json::from_str::<IntervalSet>(&text).unwrap(), set);
        assert_eq!(set.intersect(&set), set);
    }
});
