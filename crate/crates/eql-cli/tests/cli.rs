//! End-to-end checks of the command line and the interactive session.

use std::process::Command;

use eql_cli::{OutputMode, Session, StepOutcome};
use eql_core::kgt;
use eql_core::store::Store;

fn fixture_path(name: &str) -> String {
    format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn fixture_store(name: &str) -> Store {
    let mut store = Store::new();
    let text = std::fs::read_to_string(fixture_path(name)).unwrap();
    let report = kgt::load_graph_str(&mut store, &text);
    assert!(report.errors.is_empty(), "{:?}", report.errors);
    store
}

fn eql() -> Command {
    Command::new(env!("CARGO_BIN_EXE_eql"))
}

fn options() -> eql_cli::SessionOptions {
    eql_cli::SessionOptions { page_size: 50, fuzzy: true, ascii_lambda: false }
}

fn step_output(session: &mut Session, line: &str) -> String {
    match session.step(line) {
        StepOutcome::Output(text) => text,
        StepOutcome::Quit => panic!("unexpected quit on {line:?}"),
    }
}

#[test]
fn query_subcommand_prints_the_winner_with_entity_id() {
    let out = eql()
        .args(["--kg", &fixture_path("awards.kgt")])
        .args(["query", "?: award : Nobel Prize in Literature (Date : 2016)"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("Bob Dylan ehm001002"), "{stdout}");
}

#[test]
fn query_syntax_errors_exit_nonzero_with_position() {
    let out = eql()
        .args(["--kg", &fixture_path("awards.kgt")])
        .args(["query", "a : : b"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("1:"), "position missing: {stderr}");
}

#[test]
fn query_reads_from_a_file_with_dash_f() {
    let dir = tempfile::tempdir().unwrap();
    let qfile = dir.path().join("q.eql");
    std::fs::write(&qfile, "?x: award : Nobel Prize in Literature (Date :?y)\n  \\order by ?y desc\n").unwrap();
    let out = eql()
        .args(["--kg", &fixture_path("laureates.kgt")])
        .args(["query", "-f", qfile.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().next().unwrap().contains("Peter Handke"), "{stdout}");
}

#[test]
fn kg_path_environment_variable_is_the_default_graph() {
    let out = eql()
        .env("EQL_KG_PATH", fixture_path("awards.kgt"))
        .args(["query", "George Bernard Shaw : city of birth : ?"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("Dublin ep1900101"));
}

#[test]
fn card_exports_text_and_flattened_csv() {
    let text = eql()
        .args(["--kg", &fixture_path("awards.kgt")])
        .args(["card", "George Bernard Shaw"])
        .output()
        .unwrap();
    assert!(text.status.success());
    let rendered = String::from_utf8_lossy(&text.stdout);
    assert!(rendered.starts_with("George Bernard Shaw ehm001001"), "{rendered}");
    assert!(rendered.contains("award : Nobel Prize in Literature (Date : 1925, prize : 118165 SEK)"));

    let csv = eql()
        .args(["--kg", &fixture_path("awards.kgt")])
        .args(["card", "George Bernard Shaw", "--csv"])
        .output()
        .unwrap();
    let rendered = String::from_utf8_lossy(&csv.stdout);
    let mut lines = rendered.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("s,p,o,"), "{header}");
    assert!(header.contains("Date") && header.contains("prize"), "{header}");
    // one row per fact: two awards, the Chinese name, the birth place,
    // and the two alias facts
    assert_eq!(lines.count(), 6);
    assert!(rendered.contains("118165 SEK"));
}

#[test]
fn load_subcommand_reports_counts_and_line_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.kgt");
    std::fs::write(&path, "@entity e1 A\n@entity p1 likes\nA : likes : A\nA : :\n").unwrap();
    let out = eql().arg("load").arg(&path).output().unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("1 statements"), "{stdout}");
    assert!(stdout.contains("line 4"), "{stdout}");
}

#[test]
fn lambda_subcommand_renders_unicode_and_ascii() {
    let unicode = eql()
        .args(["--kg", &fixture_path("lambda.kgt")])
        .args(["lambda", "(? : children): BirthPlace: New York"])
        .output()
        .unwrap();
    assert_eq!(
        String::from_utf8_lossy(&unicode.stdout).trim(),
        "λx.∃y.Children(x, y) ∧ BirthPlace(y, NewYork)"
    );
    let ascii = eql()
        .args(["--kg", &fixture_path("lambda.kgt"), "--ascii-lambda"])
        .args(["lambda", "(? : children): BirthPlace: New York"])
        .output()
        .unwrap();
    assert_eq!(
        String::from_utf8_lossy(&ascii.stdout).trim(),
        "lambda x.exists y.Children(x, y) & BirthPlace(y, NewYork)"
    );
    let unsupported = eql()
        .args(["--kg", &fixture_path("laureates.kgt")])
        .args(["lambda", "?x: award : Nobel Prize in Literature (Date :?y)\n\\group by ?x.nationality"])
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&unsupported.stdout).contains("unsupported(\\group by)"));
}

#[test]
fn suggestion_queue_flows_through_journal_and_graph_file() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("graph.kgt");
    std::fs::write(
        &graph,
        "@entity ehm001024 Ernest Hemingway\n@entity p800 major works\n@entity p577 first published\n@entity p212 ISBN\n",
    )
    .unwrap();
    let journal = dir.path().join("suggestions.journal");
    let graph_arg = graph.to_str().unwrap();
    let journal_arg = journal.to_str().unwrap();

    // submit through the query surface
    let out = eql()
        .args(["--kg", graph_arg, "--journal", journal_arg])
        .args([
            "query",
            "\\suggest add Ernest Hemingway : major works : a movable feast (first published : 1964, ISBN: 0-684-82499-X) \\ref1: Wikipedia www.wikipedia.com",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("'\\suggest add' request accepted"));

    let list = eql()
        .args(["--kg", graph_arg, "--journal", journal_arg])
        .args(["suggest-queue", "list", "--state", "pending"])
        .output()
        .unwrap();
    let listing = String::from_utf8_lossy(&list.stdout);
    assert!(listing.contains("#1 [pending]"), "{listing}");

    let approve = eql()
        .args(["--kg", graph_arg, "--journal", journal_arg])
        .args(["suggest-queue", "approve", "1", "--note", "checked"])
        .output()
        .unwrap();
    assert!(approve.status.success(), "{}", String::from_utf8_lossy(&approve.stderr));

    // the statement is now in the saved graph
    let saved = std::fs::read_to_string(&graph).unwrap();
    assert!(saved.contains("Ernest Hemingway : major works : a movable feast"), "{saved}");
    let check = eql()
        .args(["--kg", graph_arg, "--journal", journal_arg])
        .args(["query", "Ernest Hemingway : major works : ?"])
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&check.stdout).contains("a movable feast"));

    // a second approve of the same id is already terminal
    let again = eql()
        .args(["--kg", graph_arg, "--journal", journal_arg])
        .args(["suggest-queue", "approve", "1"])
        .output()
        .unwrap();
    assert!(!again.status.success());
}

#[test]
fn page_size_flag_caps_the_first_page() {
    let out = eql()
        .args(["--kg", &fixture_path("laureates.kgt"), "--page-size", "5"])
        .args(["query", "?x: award : Nobel Prize in Literature (Date :?y)"])
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("x = ")).count(), 5);
    assert!(stdout.contains("(8 more rows)"), "{stdout}");
}

#[test]
fn repl_fuzzy_confirmation_runs_the_corrected_query() {
    let mut session = Session::new(fixture_store("awards.kgt"), options(), OutputMode::Table);
    let prompt = step_output(&mut session, "G.E. Shaw: birthplace:?");
    assert!(prompt.starts_with("do not found \"G.E. Shaw\""), "{prompt}");
    assert!(prompt.contains("G.B. Shaw (George Bernard Shaw)"), "{prompt}");
    assert!(prompt.contains("place of birth"), "{prompt}");
    assert!(prompt.trim_end().ends_with("(y/n)"), "{prompt}");
    let answer = step_output(&mut session, "y");
    assert!(answer.contains("Dublin ep1900101"), "{answer}");

    // 'n' clears the pending correction
    let prompt = step_output(&mut session, "G.E. Shaw: birthplace:?");
    assert!(prompt.ends_with("(y/n)\n"));
    assert_eq!(step_output(&mut session, "n"), "");
}

#[test]
fn repl_pagination_over_120_rows() {
    let mut store = Store::new();
    let mut text = String::from("@entity p1 linked to\n@entity e0 hub\n");
    for i in 1..=120 {
        text.push_str(&format!("@entity e{i} node {i:03}\n"));
        text.push_str(&format!("hub : linked to : node {i:03}\n"));
    }
    assert!(kgt::load_graph_str(&mut store, &text).errors.is_empty());
    let mut session = Session::new(store, options(), OutputMode::Table);
    let first = step_output(&mut session, "hub : linked to : ?x");
    assert_eq!(first.lines().filter(|l| l.starts_with("x = ")).count(), 50);
    assert!(first.contains("(70 more rows)"), "{first}");
    let second = step_output(&mut session, "more");
    assert_eq!(second.lines().filter(|l| l.starts_with("x = ")).count(), 50);
    let third = step_output(&mut session, "more");
    assert_eq!(third.lines().filter(|l| l.starts_with("x = ")).count(), 20);
    assert!(!third.contains("more rows"), "{third}");
    assert_eq!(step_output(&mut session, "more"), "no more rows\n");
}

#[test]
fn repl_duplicate_name_report_uses_the_numbered_layout() {
    let mut session = Session::new(fixture_store("laureates.kgt"), options(), OutputMode::Table);
    let out = step_output(&mut session, "?x: occupation :writer \\and ? x: place of birth : Dublin");
    assert!(out.contains("George Bernard Shaw ehm001001"), "{out}");
    assert!(out.contains("James Joyce ehm001088"), "{out}");
    let report_start = out.find("EQL duplicate name report:").expect("report present");
    let report = &out[report_start..];
    assert!(report.contains("1. Dublin_Ireland default"), "{report}");
    assert!(report.contains("2. Dublin_California"), "{report}");
    assert!(report.contains("calculated by the default value \"Dublin = Dublin_Ireland\""));
}

#[test]
fn repl_mode_switch_changes_rendering() {
    let mut session = Session::new(fixture_store("awards.kgt"), options(), OutputMode::Table);
    assert_eq!(step_output(&mut session, ":mode csv"), "mode: csv\n");
    let csv = step_output(&mut session, "?x : instance of : Academy Award");
    assert!(csv.starts_with("x\n"), "{csv}");
    assert!(csv.contains("Oscar for Best Adapted Screenplay"));
    assert_eq!(step_output(&mut session, ":mode jsonl"), "mode: jsonl\n");
    let jsonl = step_output(&mut session, "?x : instance of : Academy Award");
    for line in jsonl.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v.get("x").is_some(), "{line}");
    }
}

#[test]
fn repl_survives_every_error_and_quits_only_on_command() {
    let mut session = Session::new(fixture_store("awards.kgt"), options(), OutputMode::Table);
    for line in [
        "a : : b",
        "\\filter",
        "?x.y.z",
        "nonsense words only",
        "\\suggest change a : b : c",
        ":mode bogus",
        "G.E. Shaw: birthplace:?",
        "maybe",
        "(((((",
        "\\and \\or \\not",
    ] {
        match session.step(line) {
            StepOutcome::Output(_) => {}
            StepOutcome::Quit => panic!("{line:?} terminated the session"),
        }
    }
    // fuzzed lines only ever produce output
    let mut state: u64 = 0x243F6A8885A308D3;
    for _ in 0..500 {
        let len = (state % 40) as usize;
        let line: String = (0..len)
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let pool = b" ?:\\()%_,'<>=!.ABCxyz019\xE8\xB5\xB5";
                pool[(state >> 33) as usize % pool.len()] as char
            })
            .collect();
        if line.trim() == ":quit" || line.trim() == ":q" {
            continue;
        }
        match session.step(&line) {
            StepOutcome::Output(_) => {}
            StepOutcome::Quit => panic!("fuzz line {line:?} terminated the session"),
        }
    }
    // still functional afterwards
    let out = step_output(&mut session, "?: award : Nobel Prize in Literature (Date : 1925)");
    assert!(out.contains("George Bernard Shaw"), "{out}");
    assert!(matches!(session.step(":quit"), StepOutcome::Quit));
}

#[test]
fn one_shot_and_repl_render_identically() {
    let query = "?x: award : Nobel Prize in Literature (Date :?y)\n  \\order by ?y desc";
    for mode in [OutputMode::Table, OutputMode::Csv, OutputMode::JsonLines] {
        let mut repl = Session::new(fixture_store("laureates.kgt"), options(), mode);
        let from_repl = step_output(&mut repl, query);
        let mut one_shot = Session::new(fixture_store("laureates.kgt"), options(), mode);
        let from_query = one_shot.eval_and_render(query).unwrap();
        assert_eq!(from_repl, from_query);
    }
}

#[test]
fn simplified_queries_work_in_the_repl() {
    let mut store = Store::new();
    kgt::load_graph_str(
        &mut store,
        "@entity e1 China\n@entity e2 Beijing\n@entity p1 Capital\nChina : Capital : Beijing\n",
    );
    let mut session = Session::new(store, options(), OutputMode::Table);
    let out = step_output(&mut session, "? Capital Beijing");
    assert!(out.contains("China e1"), "{out}");
    let out = step_output(&mut session, "China Capital ?");
    assert!(out.contains("Beijing e2"), "{out}");
}
