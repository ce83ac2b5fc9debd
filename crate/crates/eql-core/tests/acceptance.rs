//! Acceptance suite: one test per release criterion, each printing a
//! PASS line when it holds. Run with `cargo test --test acceptance --
//! --nocapture` to see the lines.

mod common;

use std::collections::BTreeSet;
use std::time::Instant;

use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::TestRunner;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::gen::query_strategy;
use common::oracle::{check_oracle_instance, oracle_template_match};
use common::{anon_key, column_values, entity_names, fixture, run};

use eql_core::eval::Binding;
use eql_core::kgt::{load_graph_str, resolve_draft, save_graph};
use eql_core::lambda::{render, to_lambda_with, LambdaOutcome};
use eql_core::parser::{parse_query, parse_suggestion, pretty_print};
use eql_core::revision::{self, RevisionQueue, Verdict};
use eql_core::rewrite::{materialize, RuleId};
use eql_core::store::Store;
use eql_core::text::match_template;
use eql_core::value::{Date, Quantity, Value};

fn qty(s: &str) -> Value {
    Value::Quantity(Quantity::parse(s).unwrap())
}

#[test]
fn criterion_1_golden_answers() {
    let clock = Instant::now();
    let st = fixture("awards.kgt");

    // who won the 1925 Nobel Prize in Literature
    let rs = run(&st, "?: award : Nobel Prize in Literature (Date : 1925)");
    let key = anon_key(&rs);
    assert_eq!(entity_names(&st, &rs, &key), ["George Bernard Shaw"]);

    // the property linking George Bernard Shaw and Dublin
    let rs = run(&st, "George Bernard Shaw : ? : Dublin");
    let key = anon_key(&rs);
    assert_eq!(entity_names(&st, &rs, &key), ["place of birth"]);

    // birth place through the "city of birth" alias, resolving
    // to the Irish Dublin
    let rs = run(&st, "George Bernard Shaw : city of birth : ?");
    let key = anon_key(&rs);
    let birthplace_answer = column_values(&rs, &key);
    let Value::Entity(dublin) = &birthplace_answer[0] else { panic!("expected entity") };
    assert_eq!(st.display_name(dublin), "Dublin");
    assert_eq!(dublin.as_str(), "ep1900101");

    // the prize amount qualifier
    let rs = run(&st, "George Bernard Shaw : award : Nobel Prize in Literature (prize : ?)");
    let key = anon_key(&rs);
    assert_eq!(column_values(&rs, &key), [qty("118165 SEK")]);

    // the whole qualifier block of the screenplay award
    let rs = run(&st, "George Bernard Shaw : Award : Academy Award for Best Screenplay (?)");
    let key = anon_key(&rs);
    let Some(Binding::Qualifiers(quals)) = rs.rows[0].get(&key) else {
        panic!("expected qualifier block");
    };
    let got: Vec<(String, Value)> = quals
        .iter()
        .map(|(q, v)| (st.display_name(q).to_string(), v.clone()))
        .collect();
    assert_eq!(
        got,
        [
            ("Winning work".to_string(), Value::text("Flower Girl")),
            ("Date".to_string(), Value::Date(Date::Year(1939))),
            ("Related items".to_string(), Value::text("The 11th Academy Awards")),
        ]
    );

    // both-prize winners, then their count
    let rs = run(
        &st,
        "(?x: award) : instance of: Nobel Prize \\and (?x: award) : instance of: Academy Award",
    );
    assert_eq!(entity_names(&st, &rs, "x"), ["George Bernard Shaw", "Bob Dylan"]);
    let rs = run(
        &st,
        "(?x:award):instance of: Nobel Prize \\and (?x:award):instance of: Academy Awards, ? y = count (?x)",
    );
    assert!(rs.rows.iter().all(|r| r.get("y") == Some(&Binding::Value(qty("2")))));

    // exact decimal average and maximum of the Nobel prizes
    let rs = run(
        &st,
        "(? x: award): instance of : Nobel Prize\n\\and\n(? x: award): instance of : Academy Awards,\n\
         ? x: award:?y (prize :?z1)\n\\and\n?y: instance of : Nobel Prize,\n\
         ? z2 = avg (?z1) ,\n? z3 = max (?z1)",
    );
    for row in &rs.rows {
        assert_eq!(row.get("z2"), Some(&Binding::Value(qty("4059082.5 SEK"))));
        assert_eq!(row.get("z3"), Some(&Binding::Value(qty("8000000 SEK"))));
    }
    assert_eq!(rs.rows.len(), 2);

    // the alias query answers exactly like the canonical form
    let rs = run(&st, "G.B.Shaw:birth place:?");
    let key = anon_key(&rs);
    assert_eq!(column_values(&rs, &key), birthplace_answer);

    let elapsed = clock.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "golden answers took {elapsed:?}");
    println!("acceptance criterion 1: PASS — golden answers exact in {elapsed:?}");
}

#[test]
fn criterion_2_derived_property_expansion_and_materialization() {
    let st = fixture("family.kgt");
    let expanded = run(&st, "George Bernard Shaw : maternal grandfather : ?");
    let key = anon_key(&expanded);
    assert_eq!(entity_names(&st, &expanded, &key), ["Walter Gurly"]);
    let expanded_rows: BTreeSet<Option<Value>> = expanded
        .rows
        .iter()
        .map(|r| r.get(&key).and_then(|b| b.as_value().cloned()))
        .collect();

    let mut materialized_store = fixture("family.kgt");
    assert_eq!(materialize(&mut materialized_store, RuleId(1)).unwrap(), 1);
    let after = run(&materialized_store, "George Bernard Shaw : maternal grandfather : ?");
    let after_key = anon_key(&after);
    assert_eq!(entity_names(&materialized_store, &after, &after_key), ["Walter Gurly"]);
    let after_rows: BTreeSet<Option<Value>> = after
        .rows
        .iter()
        .map(|r| r.get(&after_key).and_then(|b| b.as_value().cloned()))
        .collect();
    assert_eq!(expanded_rows, after_rows);
    println!("acceptance criterion 2: PASS — Walter Gurly via expansion and after materialization");
}

#[test]
fn criterion_3_oracle_equivalence_500_instances() {
    let clock = Instant::now();
    for seed in 0..500u64 {
        if let Err(msg) = check_oracle_instance(seed, 20, 200) {
            panic!("oracle mismatch: {msg}");
        }
    }
    let elapsed = clock.elapsed();
    assert!(elapsed.as_secs() < 60, "oracle suite took {elapsed:?}");
    println!(
        "acceptance criterion 3: PASS — 500/500 instances match the brute-force enumerator in {elapsed:?}"
    );
}

#[test]
fn criterion_4_template_matcher_oracle_10000_pairs() {
    const ALPHABET: [&str; 10] = ["a", "b", "W", "i", "l", "%", "_", "\\%", "\\_", " "];
    const CAND: [char; 9] = ['a', 'b', 'W', 'i', 'l', '%', '_', ' ', '赵'];
    let mut rng = StdRng::seed_from_u64(41);
    for case in 0..10_000 {
        let t_len = rng.gen_range(0..10);
        let template: String =
            (0..t_len).map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())]).collect();
        let c_len = rng.gen_range(0..12);
        let candidate: String = (0..c_len).map(|_| CAND[rng.gen_range(0..CAND.len())]).collect();
        assert_eq!(
            match_template(&template, &candidate),
            oracle_template_match(&template, &candidate),
            "case {case}: template {template:?} candidate {candidate:?}"
        );
    }
    // the worked literals
    assert!(match_template("%William%", "William Faulkner"));
    assert!(match_template("William G_lding", "William Golding"));
    assert!(match_template("%99%\\%qualified%", "99% qualified boyfriend"));
    println!("acceptance criterion 4: PASS — 10000/10000 pairs agree with the automaton oracle");
}

#[test]
fn criterion_5_parser_round_trip_and_fuzz() {
    let mut runner = TestRunner::deterministic();
    let strategy = query_strategy();
    for case in 0..1000 {
        let ast = strategy
            .new_tree(&mut runner)
            .expect("generate AST")
            .current();
        let printed = pretty_print(&ast);
        let reparsed = parse_query(&printed)
            .unwrap_or_else(|e| panic!("case {case}: {e}\n{printed}"));
        assert_eq!(reparsed, ast, "case {case} printed:\n{printed}");
    }
    let mut rng = StdRng::seed_from_u64(97);
    for _ in 0..10_000 {
        let len = rng.gen_range(0..100);
        let bytes: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
        let text = String::from_utf8_lossy(&bytes);
        // must return a diagnostic, never panic
        let _ = parse_query(&text);
    }
    println!("acceptance criterion 5: PASS — 1000 ASTs round-trip, 10000 fuzz inputs diagnosed");
}

#[test]
fn criterion_6_ordering_grouping_filtering_properties() {
    let st = fixture("laureates.kgt");
    let base = "?x: award : Nobel Prize in Literature (Date :?y)";

    // descending year order is the exact reverse of ascending
    let asc = run(&st, &format!("{base}\n\\order by ?y asc"));
    let desc = run(&st, &format!("{base}\n\\order by ?y desc"));
    let asc_rows: Vec<_> = asc.rows.iter().map(|r| r.bindings_key().clone()).collect();
    let mut desc_rows: Vec<_> = desc.rows.iter().map(|r| r.bindings_key().clone()).collect();
    desc_rows.reverse();
    assert_eq!(asc_rows, desc_rows);
    assert_eq!(entity_names(&st, &desc, "x").first().map(String::as_str), Some("Peter Handke"));

    // every \filter output is a subset of its input
    let unfiltered = run(&st, base);
    let filtered = run(&st, &format!("{base}\n\\filter ?y> 1940"));
    assert!(filtered.rows.len() <= unfiltered.rows.len());
    for row in &filtered.rows {
        assert!(unfiltered.rows.iter().any(|r| r.bindings_key() == row.bindings_key()));
    }
    let twice = run(
        &st,
        &format!("{base}\n\\filter ?y> 1940\n\\filter ?x.nationality = United States"),
    );
    assert!(twice.rows.len() <= filtered.rows.len());
    for row in &twice.rows {
        assert!(filtered.rows.iter().any(|r| r.bindings_key() == row.bindings_key()));
    }

    // the group partition is exhaustive and disjoint
    let grouped = run(&st, &format!("{base}\n\\group by ?x.nationality\n\\order by ?y asc"));
    let groups = grouped.groups.as_ref().expect("grouped");
    let mut seen: Vec<usize> = groups.iter().flat_map(|g| g.row_indices.clone()).collect();
    seen.sort();
    let expected: Vec<usize> = (0..grouped.rows.len()).collect();
    assert_eq!(seen, expected, "every row in exactly one group");
    println!("acceptance criterion 6: PASS — order reversal, filter subsets, exhaustive disjoint groups");
}

#[test]
fn criterion_7_revision_protocol_script_and_replay() {
    let base_graph = "\
@entity ehm001024 Ernest Hemingway
@entity p800 major works
@entity p577 first published
@entity p212 ISBN
@entity p123 publisher
";
    let mut st = Store::new();
    assert!(load_graph_str(&mut st, base_graph).errors.is_empty());
    let mut queue = RevisionQueue::new();

    // suggest and approve the addition
    let add = parse_suggestion(
        "\\suggest add Ernest Hemingway : major works : a movable feast \
         (first published : 1964, ISBN: 0-684-82499-X) \
         \\ref1: Wikipedia www.wikipedia.com , \
         \\ref2: Ernest Hemingway Research Anthology ISBN 978-7-5447-3164-5",
    )
    .unwrap();
    let (add_id, ack) = queue.submit(&st, add, 100);
    assert_eq!(ack, "'\\suggest add' request accepted");
    queue.review(&mut st, add_id, Verdict::Approve, "verified against both sources").unwrap();
    assert_eq!(st.statement_count(), 1);

    // change it to carry the publisher qualifier
    let change = parse_suggestion(
        "\\suggest change Ernest Hemingway : major works : a movable feast \
         (first published : 1964, ISBN: 0-684-82499-X) \
         \\changeTo Ernest Hemingway : major works : a movable feast \
         (first published : 1964, ISBN: 0-684-82499-X, publisher: Simon & Schuster) \
         \\ref1: Wikipedia www.wikipedia.com",
    )
    .unwrap();
    let (change_id, _) = queue.submit(&st, change, 200);
    queue.review(&mut st, change_id, Verdict::Approve, "publisher confirmed").unwrap();
    assert_eq!(st.statement_count(), 1);
    let stmt = st.statements().next().unwrap();
    let publisher = stmt
        .qualifiers
        .iter()
        .find(|(q, _)| st.display_name(q) == "publisher")
        .map(|(_, v)| v.clone());
    assert_eq!(publisher, Some(Value::text("Simon & Schuster")));

    // the delete request is rejected, store unchanged
    let delete =
        parse_suggestion("\\suggest delete Ernest Hemingway : major works : a movable feast")
            .unwrap();
    let (delete_id, ack) = queue.submit(&st, delete, 300);
    assert_eq!(ack, "'\\suggest delete' request accepted");
    let size_before = st.statement_count();
    let outcome = queue.review(&mut st, delete_id, Verdict::Reject, "still useful to others").unwrap();
    assert_eq!(outcome, revision::ReviewOutcome::Rejected);
    assert_eq!(st.statement_count(), size_before);

    // the Hemingway statement is present exactly as changed
    let draft = eql_core::parser::parse_statement_draft(
        "Ernest Hemingway : major works : a movable feast \
         (first published : 1964, ISBN: 0-684-82499-X, publisher: Simon & Schuster)",
    )
    .unwrap();
    let (s, p, o, quals) = resolve_draft(&st, &draft).unwrap();
    let found = st
        .statements()
        .any(|stmt| stmt.s == s && stmt.p == p && stmt.o == o && {
            let mut a = stmt.qualifiers.clone();
            let mut b = quals.clone();
            a.sort();
            b.sort();
            a == b
        });
    assert!(found, "changed statement present");

    // journal replay onto a fresh snapshot reproduces the store exactly
    let journal: String = queue.events().iter().map(revision::journal_lines).collect();
    let events = revision::parse_journal(&journal).unwrap();
    let mut snapshot = Store::new();
    assert!(load_graph_str(&mut snapshot, base_graph).errors.is_empty());
    revision::replay(&mut snapshot, &events).unwrap();
    assert_eq!(save_graph(&snapshot), save_graph(&st));
    println!("acceptance criterion 7: PASS — revision script ends as stated and the journal replays");
}

#[test]
fn criterion_8_lambda_bridge_renders_exactly() {
    let st = fixture("lambda.kgt");

    let existential = parse_query("(? : children): BirthPlace: New York").unwrap();
    let LambdaOutcome::Term(t) = to_lambda_with(&existential, &st) else {
        panic!("the existential query should convert");
    };
    assert_eq!(render(&t, false), "λx.∃y.Children(x, y) ∧ BirthPlace(y, NewYork)");

    let argmax_query = parse_query(
        "? x: instance of : U.S. states,\n? x: area :?y,\n? z = max(?y),\nANS ?z",
    )
    .unwrap();
    let LambdaOutcome::Term(t) = to_lambda_with(&argmax_query, &st) else {
        panic!("the argmax query should convert");
    };
    assert_eq!(render(&t, false), "argmax(λx.InstanceOf(x, USState), λx.λy.Area(x, y))");

    // generated terms stay well-formed under the internal checker
    for q in [&existential, &argmax_query] {
        let LambdaOutcome::Term(t) = to_lambda_with(q, &st) else { panic!() };
        let text = render(&t, false);
        eql_core::lambda::parse_lambda(&text).expect("well-formed closed term");
    }
    println!("acceptance criterion 8: PASS — both lambda renderings match character-for-character");
}
