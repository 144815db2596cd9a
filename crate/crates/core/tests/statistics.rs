mod common;

use serde_json::Value;

use florimeter_core::dynamics::{betainc, compare_groups};

fn values(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn welch_matches_reference_table() {
    let table: Value = serde_json::from_str(common::WELCH_ORACLE).unwrap();
    let fixtures = table["welch"].as_array().unwrap();
    assert_eq!(fixtures.len(), 20);
    for (k, f) in fixtures.iter().enumerate() {
        let r = compare_groups(&values(&f["a"]), &values(&f["b"])).unwrap();
        for (name, got, want) in [
            ("t", r.t, f["t"].as_f64().unwrap()),
            ("df", r.df, f["df"].as_f64().unwrap()),
            ("p", r.p, f["p"].as_f64().unwrap()),
        ] {
            assert!((got - want).abs() <= 1e-6, "fixture {k} {name}: {got} vs {want}");
        }
    }
}

#[test]
fn betainc_matches_reference_table() {
    let table: Value = serde_json::from_str(common::WELCH_ORACLE).unwrap();
    for f in table["betainc"].as_array().unwrap() {
        let [x, a, b, want] = ["x", "a", "b", "value"].map(|k| f[k].as_f64().unwrap());
        let got = betainc(x, a, b);
        assert!((got - want).abs() <= 1e-10, "I_{x}({a}, {b}) = {got}, want {want}");
    }
}

#[test]
fn identical_groups_give_p_one() {
    let a = [3.0, 4.5, 6.0, 2.5, 9.0];
    let r = compare_groups(&a, &a).unwrap();
    assert_eq!(r.t, 0.0);
    assert_eq!(r.p, 1.0);
}
