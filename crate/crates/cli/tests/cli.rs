use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    p.to_string_lossy().into_owned()
}

fn supcfg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_supcfg")).args(args).output().expect("run supcfg")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const LEARNED_PCFG: &str = "start N3\nN1 -> a [1]\nN2 -> b [1]\nN3 -> N1 N2 [0.5]\nN3 -> N1 N4 [0.5]\nN4 -> N3 N2 [1]\n";

#[test]
fn eval_prints_exact_values() {
    let cases = [
        (["--grammar", "anbn.g"], "(a b)", "1/2\n"),
        (["--cmta", "a3.mta"], "(a ((a b) b))", "1/4\n"),
        (["--cmta", "a1.mta"], "(a ((a b) ((a b) b)))", "1/8\n"),
    ];
    for ([flag, file], tree, want) in cases {
        let o = supcfg(&["eval", flag, &fixture(file), "--tree", tree]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert_eq!(stdout(&o), want);
    }
}

#[test]
fn eval_rejects_unknown_terminal() {
    let o = supcfg(&["eval", "--grammar", &fixture("anbn.g"), "--tree", "(a z)"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("z"));
}

#[test]
fn learn_emits_the_expected_pcfg() {
    let o = supcfg(&["learn", "--grammar", &fixture("anbn.g"), "--emit", "pcfg"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), LEARNED_PCFG);
    let transcript = stderr(&o);
    assert!(transcript.contains("seq 2\n"));
    assert!(transcript.contains("cex (a ((a b) ((a b) b))) 0\n"));
    assert!(transcript.contains("dim 4\n"));
}

#[test]
fn learn_writes_output_and_transcript_files() {
    let dir = std::env::temp_dir().join(format!("supcfg-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("single.mta");
    let o = supcfg(&["learn", "--grammar", &fixture("single.g"), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let automaton = std::fs::read_to_string(&out).unwrap();
    assert!(automaton.contains("dim 1\n"));
    let transcript = std::fs::read_to_string(dir.join("single.mta.transcript")).unwrap();
    assert!(transcript.contains("seq 1\n"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn learn_emit_all_sections_parse() {
    let o = supcfg(&["learn", "--grammar", &fixture("anbn.g"), "--emit", "all"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let cmta = text.find("# cmta\n").unwrap();
    let wcfg = text.find("# wcfg\n").unwrap();
    let pcfg = text.find("# pcfg\n").unwrap();
    assert!(cmta < wcfg && wcfg < pcfg);
    supcfg::parse_mta(&text[cmta..wcfg]).unwrap();
    supcfg::parse_grammar(&text[wcfg..pcfg]).unwrap();
    assert_eq!(&text[pcfg + "# pcfg\n".len()..], LEARNED_PCFG);
}

#[test]
fn learn_rejects_ambiguous_target() {
    let o = supcfg(&["learn", "--grammar", &fixture("ambiguous.g")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("not invertible"), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
}

#[test]
fn convert_examples() {
    let o = supcfg(&["convert", "--cmta", &fixture("a3.mta"), "--to", "wcfg"]);
    assert_eq!(stdout(&o), std::fs::read_to_string(fixture("learned.g")).unwrap());
    let o = supcfg(&["convert", "--wcfg", &fixture("learned.g"), "--to", "pcfg"]);
    assert_eq!(stdout(&o), LEARNED_PCFG);
}

#[test]
fn convert_there_and_back_preserves_values() {
    let dir = std::env::temp_dir().join(format!("supcfg-convert-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mta = dir.join("anbn.mta");
    let back = dir.join("anbn.g");
    let o = supcfg(&["convert", "--grammar", &fixture("anbn.g"), "--to", "cmta", "--out", mta.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = supcfg(&["convert", "--cmta", mta.to_str().unwrap(), "--to", "wcfg", "--out", back.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    for tree in ["a", "(a b)", "(b a)", "(a ((a b) b))", "(a ((a b) ((a b) b)))"] {
        let want = supcfg(&["eval", "--grammar", &fixture("anbn.g"), "--tree", tree]);
        let got = supcfg(&["eval", "--grammar", back.to_str().unwrap(), "--tree", tree]);
        assert_eq!(stdout(&got), stdout(&want), "{tree}");
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn check_verdicts_and_exit_codes() {
    let o = supcfg(&["check", "--grammar", &fixture("anbn.g")]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "invertible: yes; probabilistic: yes\n");

    let o = supcfg(&["check", "--cmta", &fixture("a3.mta")]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "colinear: yes; nonnegative: yes\n");

    let o = supcfg(&["check", "--grammar", &fixture("dup.g")]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.starts_with("invertible: no;"), "{text}");
    assert!(text.contains("share a right-hand side"), "{text}");
}

#[test]
fn enumerate_prints_tsv_in_canonical_order() {
    let o = supcfg(&["enumerate", "--grammar", &fixture("anbn.g"), "--max-nodes", "3"]);
    assert_eq!(stdout(&o), "a\t0\nb\t0\n(a a)\t0\n(a b)\t1/2\n(b a)\t0\n(b b)\t0\n");
    let o = supcfg(&["enumerate", "--cmta", &fixture("leafcount.mta"), "--max-nodes", "3"]);
    assert_eq!(stdout(&o), "a\t1\n(a a)\t2\n");
}

#[test]
fn usage_errors_exit_64() {
    for args in [
        &["enumerate", "--grammar", "x.g", "--max-nodes", "0"][..],
        &["eval", "--tree", "(a b)"],
        &["eval", "--grammar", "x.g", "--cmta", "y.mta", "--tree", "a"],
        &["learn", "--grammar", "x.g", "--seq-bound", "0"],
        &["frobnicate"],
        &["check", "--grammar", "x.g", "--unknown"],
    ] {
        assert_eq!(supcfg(args).status.code(), Some(64), "{args:?}");
    }
}

#[test]
fn missing_file_is_a_validation_error() {
    let o = supcfg(&["check", "--grammar", "/nonexistent/x.g"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("reading /nonexistent/x.g"));
}

#[test]
fn divergent_partition_exits_3() {
    let dir = std::env::temp_dir().join(format!("supcfg-limit-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let g = dir.join("heavy.g");
    std::fs::write(&g, "start S\nS -> S S [2]\nS -> a [1]\n").unwrap();
    let o = supcfg(&["convert", "--grammar", g.to_str().unwrap(), "--to", "pcfg", "--max-iter", "50"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn output_is_deterministic() {
    let args = ["learn", "--grammar", &fixture("anbn.g"), "--emit", "all"];
    let a = supcfg(&args);
    let b = supcfg(&args);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stderr, b.stderr);
}
