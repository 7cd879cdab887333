use qbfs_web::{maximal_and_cz, morrey_constants, rubio_de_francia};
use serde_json::Value;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn maximal_and_cz_cubes() {
    let v = parse(&maximal_and_cz(&[4.0, 0.0, 0.0, 0.0], 1.5).unwrap());
    let m: Vec<f64> = v["maximal"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(m, vec![4.0, 2.0, 1.0, 1.0]);
    let cubes = v["cubes"].as_array().unwrap();
    assert_eq!(cubes.len(), 1);
    assert_eq!((cubes[0]["start"].as_u64(), cubes[0]["end"].as_u64()), (Some(0), Some(2)));
    assert!(maximal_and_cz(&[1.0, 2.0, 3.0], 1.0).is_err());
}

#[test]
fn morrey_rows_per_depth() {
    let v = parse(&morrey_constants(1.5, 3.0, 0.0, 3).unwrap());
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r["value"].as_f64().unwrap() >= 1.0 - 1e-9));
    assert!(morrey_constants(1.5, 3.0, 0.0, 0).is_err());
}

#[test]
fn rubio_de_francia_bounds() {
    let v = parse(&rubio_de_francia(&[1.0, 0.0, 0.5, 0.25, 0.0, 0.0, 2.0, 0.1], 2.0, 1e-12).unwrap());
    assert!(v["norm_ratio"].as_f64().unwrap() <= 2.0 + 1e-9);
    assert!(v["a1_constant"].as_f64().unwrap() <= v["a1_target"].as_f64().unwrap() * (1.0 + 1e-6));
    assert!(v["tail"].as_f64().unwrap() <= 1e-12);
}
