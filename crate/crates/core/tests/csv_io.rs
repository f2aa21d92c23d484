use std::path::Path;

use proptest::prelude::*;
use tvss::io::{load_series, read_series, write_series, write_series_to};
use tvss::synth::{generate_seasonal_series, SyntheticSpec};
use tvss::{Error, TimeSeriesData};

proptest! {
    #[test]
    fn series_round_trip_is_lossless(values in prop::collection::vec(
        prop_oneof![3 => any::<f64>().prop_filter("finite", |v| v.is_finite()).prop_map(Some), 1 => Just(None)],
        1..60,
    )) {
        prop_assume!(values.iter().any(Option::is_some));
        let s = TimeSeriesData::new(values.clone(), 12, "p").unwrap();
        let mut buf = Vec::new();
        write_series_to(&s, &mut buf).unwrap();
        let back = read_series(buf.as_slice(), Path::new("p.csv"), 12).unwrap();
        prop_assert_eq!(back.values(), &values[..]);
    }
}

#[test]
fn full_length_file_and_missing_row() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("station.csv");
    let mut text = String::from("t,value\n");
    for t in 1..=288 {
        if t == 100 {
            text.push_str("100,NA\n");
        } else {
            text.push_str(&format!("{t},{}\n", 20.0 + (t as f64 / 12.0).sin()));
        }
    }
    std::fs::write(&p, text).unwrap();
    let s = load_series(&p, 12).unwrap();
    assert_eq!(s.len(), 288);
    assert_eq!(s.missing_indices(), vec![100]);
    assert_eq!(s.label, "station");
}

#[test]
fn gap_error_names_line_four() {
    let err = read_series(
        "t,value\n1,1.0\n2,2.0\n4,4.0\n".as_bytes(),
        Path::new("g.csv"),
        12,
    )
    .unwrap_err();
    assert!(matches!(err, Error::Parse { line: 4, .. }));
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn empty_file_and_missing_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("empty.csv");
    std::fs::write(&p, "").unwrap();
    assert!(load_series(&p, 12)
        .unwrap_err()
        .to_string()
        .contains("empty"));
    assert_eq!(
        load_series(&dir.path().join("nope.csv"), 12)
            .unwrap_err()
            .exit_code(),
        2
    );
}

#[test]
fn synthetic_csv_is_byte_identical_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SyntheticSpec {
        missing_fraction: 0.05,
        ..Default::default()
    };
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    write_series(&generate_seasonal_series(&spec, 7).unwrap().data, &a).unwrap();
    write_series(&generate_seasonal_series(&spec, 7).unwrap().data, &b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let other = generate_seasonal_series(&spec, 8).unwrap().data;
    assert_ne!(load_series(&a, 12).unwrap().values(), other.values());
}
