use std::io::Write;
use std::process::Command;

fn run(args: &[&str]) -> (i32, String, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_diagalg")).args(args).output().unwrap();
    (o.status.code().unwrap_or(-1), String::from_utf8_lossy(&o.stdout).into(), String::from_utf8_lossy(&o.stderr).into())
}

fn temp_file(name: &str, body: &str) -> String {
    let path = std::env::temp_dir().join(format!("diagalg-{}-{name}", std::process::id()));
    std::fs::File::create(&path).unwrap().write_all(body.as_bytes()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn enumerate_m3_length_five() {
    let (code, out, _) = run(&["enumerate", "--automaton", "mp", "--p", "3", "--length", "5"]);
    assert_eq!(code, 0);
    let words: Vec<&str> = out.lines().collect();
    assert_eq!(words, ["RLRLR", "RLRRB", "RLRRA", "RRBBB", "RRABB", "RRBAB", "RRAAB", "RRBBA", "RRABA", "RRBAA", "RRAAA"]);
}

#[test]
fn machine_output_is_stable() {
    let args = ["enumerate", "--automaton", "np", "--p", "3", "--length", "6", "--format", "machine"];
    let (_, a, _) = run(&args);
    let (_, b, _) = run(&args);
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(a.trim()).unwrap();
    assert_eq!(v["count"], v["words"].as_array().unwrap().len());
}

#[test]
fn bijection_both_ways() {
    let (code, out, _) = run(&["bijection", "--direction", "m2n", "--p", "3", "--word", "RRA"]);
    assert_eq!((code, out.trim()), (0, ".<>"));
    let (code, out, _) = run(&["bijection", "--direction", "n2m", "--p", "3", "--word", ".<>"]);
    assert_eq!((code, out.trim()), (0, "RRA"));
    let (code, out, _) = run(&["bijection", "--direction", "m2n", "--word", "RLR"]);
    assert_eq!((code, out.trim()), (0, "<>."));
}

#[test]
fn malformed_input_exits_2() {
    assert_eq!(run(&["bijection", "--direction", "m2n", "--word", "LR"]).0, 2);
    assert_eq!(run(&["enumerate", "--automaton", "mp", "--length", "3"]).0, 2);
    assert_eq!(run(&["homdim", "--n", "2", "--m", "2", "--field", "6"]).0, 2);
    assert_eq!(run(&["verify", "--suite", "nonsense"]).0, 2);
    assert_eq!(run(&["tables", "--n", "4"]).0, 2);
    assert_eq!(run(&["eval", "--input", "/nonexistent/file.json"]).0, 2);
    let bad = temp_file("bad.json", "{\"field\": \"3\", \"boundary\": \"++\", \"slices\": [[\"teleport\"]]}");
    assert_eq!(run(&["eval", "--input", &bad]).0, 2);
    assert_eq!(run(&["frobnicate"]).0, 2);
}

#[test]
fn homdim_and_fusion() {
    let (code, out, _) = run(&["homdim", "--n", "4", "--m", "3"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("dim Hom(V4,V3) = 3"));
    assert!(out.contains("T2:\n  0 0 0 1\n  0 0 0 0\n  0 0 0 0"));
    let (_, out, _) = run(&["fusion", "--i", "5", "--field", "5"]);
    assert_eq!(out.trim(), "V x V5 = V5 + V5");
    let (_, out, _) = run(&["fusion", "--i", "3", "--field", "0", "--format", "machine"]);
    assert!(out.contains("\"parts\":[4,2]"));
}

#[test]
fn eval_and_normalize_a_file() {
    let f = temp_file("cap.json", "{\"field\": \"0\", \"boundary\": \"+++\", \"slices\": [[\"dot\", \"bracket\"]]}");
    let (code, out, _) = run(&["eval", "--input", &f]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "0 0 0 0 0 1 -1 0");
    let (code, out, _) = run(&["normalize", "--input", &f]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "1\t.<>");
    // a crossed pair of caps resolves into two basis words
    let g = temp_file("swap.json", "{\"field\": \"3\", \"p\": 3, \"boundary\": \"++++\", \"slices\": [[\"id+\", \"swap\", \"id+\"], [\"bracket\", \"bracket\"]]}");
    let (code, out, _) = run(&["normalize", "--input", &g, "--trace"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.lines().any(|l| l.contains("\tE5\t")), "{out}");
    let words: Vec<&str> = out.lines().filter(|l| !l.starts_with('#') && !l.contains("\tE")).collect();
    assert_eq!(words.len(), 2, "{out}");
}

#[test]
fn step_limit_from_environment() {
    let g = temp_file("swap2.json", "{\"field\": \"3\", \"p\": 3, \"boundary\": \"++++\", \"slices\": [[\"id+\", \"swap\", \"id+\"], [\"bracket\", \"bracket\"]]}");
    let o = Command::new(env!("CARGO_BIN_EXE_diagalg")).args(["normalize", "--input", &g]).env("SKEIN_STEP_LIMIT", "0").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn tables_print_signed_integers() {
    let (code, out, _) = run(&["tables", "--n", "3"]);
    assert_eq!(code, 0);
    let row: Vec<&str> = out.lines().find(|l| l.starts_with("101")).unwrap().split_whitespace().collect();
    assert_eq!(row, ["101", "0", "1", "0", "-1"]);
    let (_, out, _) = run(&["tables", "--n", "2", "--field", "3"]);
    assert!(out.lines().any(|l| l.split_whitespace().collect::<Vec<_>>() == ["10", "0", "2"]));
}

#[test]
fn basis_certificates() {
    let (code, out, _) = run(&["basis", "--family", "x", "--n", "5", "--field", "3", "--with-certificate"]);
    assert_eq!(code, 0);
    assert!(out.contains("upper triangular: true"));
    assert!(out.contains("diagonal mismatches: 0"));
    // over Q the diagonal alternates with the number of L's
    let (code, out, _) = run(&["basis", "--family", "x", "--n", "3", "--field", "0", "--with-certificate"]);
    assert_eq!(code, 1);
    assert!(out.contains("upper triangular: true"));
    let (code, out, _) = run(&["basis", "--family", "y", "--n", "4", "--field", "2"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 8);
}

#[test]
fn verify_suites() {
    assert_eq!(run(&["verify", "--suite", "all", "--field", "3", "--p", "3", "--max-n", "7"]).0, 0);
    assert_eq!(run(&["verify", "--suite", "relations", "--field", "2"]).0, 0);
    assert_eq!(run(&["verify", "--suite", "tables"]).0, 0);
    assert_eq!(run(&["verify", "--suite", "bijections", "--field", "5", "--max-n", "9"]).0, 0);
    assert_eq!(run(&["verify", "--suite", "jelly", "--field", "2^2", "--max-n", "6"]).0, 0);
    assert_eq!(run(&["verify", "--suite", "relations", "--field", "3", "--p", "5"]).0, 2);
    // the char-0 pairing diagonal is not uniformly -1
    let (code, out, _) = run(&["verify", "--suite", "bases", "--field", "0", "--max-n", "3"]);
    assert_eq!(code, 1);
    assert!(out.lines().filter(|l| l.starts_with("FAIL")).all(|l| l.contains("diagonal")), "{out}");
}

#[test]
fn gate_help_lists_gates() {
    let (code, out, _) = run(&["--gate-help"]);
    assert_eq!(code, 0);
    for g in ["bracket", "invbracket", "dot", "swap", "cup", "cap"] {
        assert!(out.contains(g), "{g}");
    }
}
