use qsurg_core::codes::{hamming_743, steane};
use qsurg_core::manifest::*;

#[test]
fn css_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let code = Code::Css(steane().with_distance(3));
    let path = write(dir.path(), "steane", &code).unwrap();
    let back = load(path.to_str().unwrap()).unwrap();
    assert_eq!(back, code);
}

#[test]
fn classical_round_trip_with_soundness() {
    let dir = tempfile::tempdir().unwrap();
    let mut h = hamming_743();
    h.soundness = Some(num_rational::Ratio::new(7, 6));
    let code = Code::Classical(h);
    let path = write(dir.path(), "ham", &code).unwrap();
    assert_eq!(load(path.to_str().unwrap()).unwrap(), code);
}

#[test]
fn logicals_completed_when_absent() {
    let dir = tempfile::tempdir().unwrap();
    let s = steane();
    std::fs::write(dir.path().join("hx.txt"), s.h_x.to_text()).unwrap();
    std::fs::write(dir.path().join("hz.txt"), s.h_z.to_text()).unwrap();
    let text = "type=css\nn=7\nk=1  # one logical\nh_x=hx.txt\nh_z=hz.txt\n";
    let code = parse_manifest(text, dir.path()).unwrap();
    assert_eq!(code.k(), 1);
    assert!(qsurg_core::codes::validate_css(code.as_css().unwrap()).is_empty());
    assert!(parse_manifest("type=css\nn=8\nh_x=hx.txt\nh_z=hz.txt\n", dir.path()).is_err());
    assert!(parse_manifest("type=css\nh_x=hx.txt\nh_z=hz.txt\nj_x=hx.txt\n", dir.path()).is_err());
}

#[test]
fn malformed_manifests() {
    let dir = tempfile::tempdir().unwrap();
    assert!(parse_manifest("type=css\n", dir.path()).is_err());
    assert!(parse_manifest("type=quantum\n", dir.path()).is_err());
    assert!(parse_manifest("just words\n", dir.path()).is_err());
    assert!(parse_manifest("type=classical\ntype=css\n", dir.path()).is_err());
    assert!(parse_manifest("type=classical\nh=missing.txt\n", dir.path()).is_err());
}

#[test]
fn builtins() {
    assert_eq!(builtin("repetition:5").unwrap().n(), 5);
    assert_eq!(builtin("surface:3").unwrap().n(), 13);
    assert_eq!(load("builtin:hamming743").unwrap().k(), 4);
    assert!(builtin("surface").is_err());
    assert!(builtin("toric:3").is_err());
}
