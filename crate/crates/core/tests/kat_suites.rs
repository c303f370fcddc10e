use pqe2::kat::{run_suite, Suite};

#[test]
fn mlkem_vectors() {
    let out = run_suite(Suite::MlKem).unwrap();
    assert_eq!(out.failed, Vec::<String>::new());
    assert_eq!(out.passed, 75 + 75 + 30);
}

#[test]
fn aead_vectors() {
    let out = run_suite(Suite::Aead).unwrap();
    assert_eq!(out.failed, Vec::<String>::new());
    assert_eq!(out.passed, 375);
}

#[test]
fn prf_vectors() {
    let out = run_suite(Suite::Prf).unwrap();
    assert_eq!(out.failed, Vec::<String>::new());
    assert_eq!(out.passed, 7 + 5);
}
