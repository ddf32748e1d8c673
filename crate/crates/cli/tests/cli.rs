use std::process::Command;

fn dpdlib(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_dpdlib"))
        .args(args)
        .output()
        .expect("binary runs");
    let text = String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap_or(-1), text)
}

fn record(text: &str) -> &str {
    text.lines().last().unwrap_or_default()
}

#[test]
fn pi_prints_a_matching_record() {
    let (code, text) = dpdlib(&["pi", "--n", "16", "--np", "16", "--seed", "3"]);
    assert_eq!(code, 0, "{text}");
    assert!(text.contains("ORACLE MATCH"));
    let r = record(&text);
    for field in ["\"program\":\"pi\"", "\"n\":16", "\"p\":16", "\"backend\":\"sim\"", "\"rounds\":4"] {
        assert!(r.contains(field), "{field} missing from {r}");
    }
}

#[test]
fn matreduce_reports_both_reductions() {
    let (code, text) = dpdlib(&["--np", "8", "matreduce", "--k", "2", "--json"]);
    assert_eq!(code, 0, "{text}");
    assert_eq!(text.lines().count(), 1);
    assert!(text.contains("\"tree_rounds\":3") && text.contains("\"linear_rounds\":7"), "{text}");
    assert!(text.contains("ratio_tree_linear"));
}

#[test]
fn seed_with_timestamps() {
    let (code, text) = dpdlib(&["seed", "--np", "3", "--timestamps", "5,3,9", "--json"]);
    assert_eq!(code, 0, "{text}");
    assert!(text.contains("\"result\":3"));
}

#[test]
fn floyd_on_a_generated_graph() {
    let dir = std::env::temp_dir().join(format!("dpdlib-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("g.txt");
    let p = path.to_str().unwrap();
    let (code, text) = dpdlib(&["gen-graph", "--n", "32", "--output", p, "--seed", "5"]);
    assert_eq!(code, 0, "{text}");
    let (code, text) = dpdlib(&["floyd", "--input", p, "--q", "4", "--np", "16"]);
    assert_eq!(code, 0, "{text}");
    assert!(text.contains("ORACLE MATCH"));
    let (code, text) = dpdlib(&["floyd", "--input", p, "--q", "3", "--np", "9"]);
    assert_eq!(code, 1, "{text}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn invalid_configurations_fail() {
    assert_eq!(dpdlib(&["pi", "--n", "4", "--rank", "1"]).0, 1);
    assert_eq!(dpdlib(&["pi", "--n", "4", "--backend", "tcp"]).0, 1);
    assert_eq!(dpdlib(&["pi", "--n", "4", "--ts=-1"]).0, 1);
    assert_ne!(dpdlib(&["pi"]).0, 0);
}
