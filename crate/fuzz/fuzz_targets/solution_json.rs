#![no_main]
use hyperideal::io::parse_pattern;
use hyperideal::reconstruct::{render_svg, RenderOptions};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(p) = parse_pattern(text) {
        let svg = render_svg(&p, &RenderOptions::default());
        assert!(svg.starts_with("<svg"));
    }
});
