#![allow(dead_code)]

use std::path::Path;

use qaxb::C64;

/// (theta, x, value) rows of a frozen reference table.
pub fn table(name: &str) -> Vec<(f64, f64, C64)> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name);
    let mut rd = csv::Reader::from_path(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    rd.records()
        .map(|r| {
            let r = r.expect("csv row");
            let f = |i: usize| r[i].parse::<f64>().expect("number");
            (f(0), f(1), C64::new(f(2), f(3)))
        })
        .collect()
}

pub fn k_of(theta: f64) -> i64 {
    ((theta / 2.0 - 3.0) / 2.0).round() as i64
}
