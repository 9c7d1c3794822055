#![no_main]
use hyperideal::angle::Angle;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let s = std::str::from_utf8(data).unwrap_or("");
    if let Ok(a) = Angle::parse(s) {
        let _ = a.value();
    }
});
