#![no_main]

use fpk_core::output::{read_table, DensityTable, DENSITY_HEADER, MASS_HEADER};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = read_table(data, &MASS_HEADER);
    if let Ok(t) = DensityTable::read(data, &DENSITY_HEADER) {
        assert_eq!(t.times.len(), t.values.len());
        assert!(t.values.iter().all(|v| v.len() == t.x.len()));
        if let Ok(flow) = t.to_flow(4, 0.0) {
            assert_eq!(flow.grid.n, t.x.len());
        }
    }
});
