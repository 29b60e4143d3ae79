use std::path::PathBuf;

use rsc_tools::table::{format_float, Cell, ResultTable};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn sample() -> ResultTable {
    let mut t = ResultTable::new(["n", "x", "label", "maybe"]);
    t.push(vec![Cell::Int(1), 0.1.into(), "red".into(), Cell::Missing]).unwrap();
    t.push(vec![Cell::Int(2), 1e-7.into(), "blue".into(), 2.5.into()]).unwrap();
    t.push(vec![Cell::Int(3), (-3.0).into(), "a,b".into(), 1e20.into()]).unwrap();
    t.set_meta("seed", 7);
    t.set_meta("config_hash", "abc");
    t
}

#[test]
fn csv_dialect_is_bit_exact() {
    let expected = std::fs::read(fixture("dialect.csv")).unwrap();
    assert_eq!(sample().to_csv().unwrap().as_bytes(), expected.as_slice());
}

#[test]
fn csv_reads_back() {
    let t = ResultTable::read_csv(&fixture("dialect.csv")).unwrap();
    let s = sample();
    assert_eq!(t.columns, s.columns);
    assert_eq!(t.metadata, s.metadata);
    assert_eq!(t.rows.len(), 3);
    for (a, b) in t.rows.iter().zip(&s.rows) {
        for (x, y) in a.iter().zip(b) {
            match (x.as_f64(), y.as_f64()) {
                (Some(p), Some(q)) => assert_eq!(p, q),
                _ => assert_eq!(x, y),
            }
        }
    }
}

#[test]
fn floats_round_trip_exactly() {
    let mut x = 0.123_456_789_012_345_67f64;
    for _ in 0..2000 {
        for v in [x, -x, 1.0 / x, x * 1e-9, x * 1e17] {
            let s = format_float(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
            assert!(!s.contains(',') && !s.contains(' '));
        }
        x = (x * 7.3 + 0.31).fract() + 1e-3;
    }
}

#[test]
fn tables_stay_rectangular() {
    let mut t = ResultTable::new(["a", "b"]);
    assert!(t.push(vec![Cell::Int(1)]).is_err());
    assert!(t.push(vec![Cell::Int(1), Cell::Int(2), Cell::Int(3)]).is_err());
    assert!(t.rows.is_empty());
}
