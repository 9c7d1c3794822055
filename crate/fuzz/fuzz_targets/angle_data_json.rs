#![no_main]
use hyperideal::complex::CellComplex;
use hyperideal::io::AngleFile;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(file) = AngleFile::parse(text) else { return };
    let torus = CellComplex::torus_grid(2, 2);
    if let Ok(d) = file.to_data(&torus) {
        assert_eq!(d.theta.len(), torus.num_edges());
        assert_eq!(d.kappa.len(), torus.num_vertices());
    }
});
