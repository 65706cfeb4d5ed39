#![no_main]

use libfuzzer_sys::fuzz_target;
use mixdyn_cli::csv_io::{read_distribution, read_series, read_sweep, write_series, write_sweep};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(table) = read_series(text) {
        let mut buf = Vec::new();
        write_series(&mut buf, &[], &table.rows).unwrap();
        let back = read_series(std::str::from_utf8(&buf).unwrap()).expect("written series parses");
        assert_eq!(back.rows.len(), table.rows.len());
    }
    if let Ok(table) = read_sweep(text) {
        let mut buf = Vec::new();
        write_sweep(&mut buf, &[], &table.rows).unwrap();
        let back = read_sweep(std::str::from_utf8(&buf).unwrap()).expect("written sweep parses");
        assert_eq!(back.rows.len(), table.rows.len());
    }
    let _ = read_distribution(text);
});
