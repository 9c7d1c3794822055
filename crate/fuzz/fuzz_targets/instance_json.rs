#![no_main]
use hyperideal::io::InstanceFile;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(file) = InstanceFile::parse(text) else { return };
    if let Ok(cx) = file.complex() {
        // A complex that builds must report consistent counts.
        assert_eq!(cx.num_half_edges() % 2, 0);
        if let Some(angles) = &file.angles {
            let _ = angles.to_data(&cx);
        }
    }
});
