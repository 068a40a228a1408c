use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mu-deriv"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn verify_writes_equal_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cert.json");
    let (code, _, err) = run(&[
        "verify", "--d", "11", "--p", "3", "--k", "1", "--twist", "canonical", "--beta-bound", "200",
        "--precision", "30", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let cert: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    for key in ["character", "hypotheses", "rhs", "ledger", "witness", "grid", "verdict"] {
        assert!(cert.get(key).is_some(), "missing {key}");
    }
    assert_eq!(cert["verdict"], "equal");
    assert_eq!(cert["hypotheses"]["p_split"], true);
    assert_eq!(cert["hypotheses"]["p_ndvd_h"], true);
    assert_eq!(cert["grid"]["bound"], 200);
}

#[test]
fn inert_prime_has_its_own_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cert.json");
    let (code, _, err) = run(&["verify", "--d", "11", "--p", "7", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 11, "{err}");
    let cert: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(cert["verdict"], "refused");
    assert_eq!(cert["hypotheses"]["p_split"], false);
}

#[test]
fn distinct_codes_for_distinct_gates() {
    assert_eq!(run(&["verify", "--d", "11", "--p", "9"]).0, 10);
    assert_eq!(run(&["verify", "--d", "11", "--p", "11"]).0, 17);
    // class number 3
    assert_eq!(run(&["verify", "--d", "23", "--p", "3"]).0, 15);
    // genus twist by -3: the local sign formula says -1, the functional equation says +1
    let (code, _, err) = run(&["verify", "--d", "11", "--p", "5", "--twist", "genus:-3"]);
    assert_eq!(code, 16, "{err}");
    let (code, _, err) = run(&["verify", "--d", "11", "--p", "5", "--twist", "genus:-3", "--no-probe"]);
    assert_eq!(code, 18, "{err}");
}

#[test]
fn malformed_input_is_a_usage_error() {
    assert_eq!(run(&["verify", "--d", "eleven", "--p", "5"]).0, 2);
    assert_eq!(run(&["verify", "--p", "5"]).0, 2);
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, "{\"d\": 11, \"bogus\": 1}").unwrap();
    assert_eq!(run(&["verify", "--config", cfg.to_str().unwrap()]).0, 2);
}

#[test]
fn certificates_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<_> = (0..2).map(|i| dir.path().join(format!("c{i}.json"))).collect();
    for p in &paths {
        let (code, _, err) =
            run(&["verify", "--d", "19", "--p", "5", "--beta-bound", "150", "--out", p.to_str().unwrap()]);
        assert_eq!(code, 0, "{err}");
    }
    assert_eq!(fs::read(&paths[0]).unwrap(), fs::read(&paths[1]).unwrap());
}

#[test]
fn config_and_char_files() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("char.json");
    fs::write(&spec, r#"{"d": 19, "k": 1, "conductor": [[19, 1]], "twist": "conj"}"#).unwrap();
    let (code, out, err) = run(&["rhs", "--char", spec.to_str().unwrap(), "--p", "7"]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["rhs"], "0");
    assert_eq!(v["places"][0]["mu_p"], "0");
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"d": 11, "p": 5, "beta_bound": 100}"#).unwrap();
    let (code, out, err) = run(&["witness", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["witness"]["valuation"], "0");
    assert_eq!(v["derivative"]["p"], 5);
}

#[test]
fn local_table_columns() {
    let (code, out, err) = run(&["local", "--d", "11", "--p", "5", "--place", "11", "--beta", "1,2"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("mu_p=0"));
    assert!(out.contains("place,kind,v_p(value),vanished,v_p(derivative)"));
    // split place: W = lambda^*(xi)
    let (_, out, _) = run(&["local", "--d", "11", "--p", "5", "--place", "3", "--beta", "3"]);
    let head = out.lines().next().unwrap();
    let field = |k: &str| head.split(' ').find_map(|w| w.strip_prefix(k)).unwrap().to_string();
    assert_eq!(field("root_number="), field("lambda_star_xi="));
    // inert unramified place: parity sign is +1 with cond_exp 0
    let (_, out, _) = run(&["local", "--d", "11", "--p", "5", "--place", "7", "--beta", "7"]);
    assert!(out.lines().next().unwrap().contains("root_number=1"));
}

#[test]
fn qexp_and_ideals_csv() {
    let (code, out, _) = run(&["qexp", "--d", "11", "--bound", "30"]);
    assert_eq!(code, 0);
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows[0], "n,a_n,re,im");
    assert!(rows[1].starts_with("1,1,"));
    // 2 and 7 are inert
    assert!(rows[2].starts_with("2,0,"));
    assert!(rows[7].starts_with("7,0,"));
    let (code, out, _) = run(&["ideals", "--d", "7", "--bound", "10"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().next().unwrap(), "norm,a,b,c,class_index");
}
