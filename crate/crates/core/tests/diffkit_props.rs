use std::collections::BTreeSet;

use proptest::prelude::*;

use adapr_core::diffkit::{
    consistency, consistency_reported, encode_code_diff, line_diff, parse_code_diff, split_lines, DiffOp,
};

/// Longest common subsequence length by trying every subset of `a`, longest
/// first. Only usable for short inputs.
fn brute_force_lcs(a: &[&str], b: &[&str]) -> usize {
    let n = a.len();
    assert!(n <= 12);
    let mut best = 0;
    for mask in 0u32..(1 << n) {
        let size = mask.count_ones() as usize;
        if size <= best {
            continue;
        }
        let picked: Vec<&str> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| a[i]).collect();
        let mut it = b.iter();
        if picked.iter().all(|p| it.any(|x| x == p)) {
            best = size;
        }
    }
    best
}

const VOCAB: &[&str] = &[
    "x = 1",
    "y = x + 1",
    "for i in range(n):",
    "    s += i",
    "    if s > 3:",
    "        break",
    "print(s)",
    "return s",
    "",
    "n = int(input())",
    "s = 0",
    "x = 1",
];

/// Programs start with a non-blank line so the text is never empty.
fn program(max: usize) -> impl Strategy<Value = Vec<String>> {
    (
        prop::sample::select(&VOCAB[..8]),
        prop::collection::vec(prop::sample::select(VOCAB).prop_map(str::to_string), 0..max),
    )
        .prop_map(|(first, rest)| std::iter::once(first.to_string()).chain(rest).collect())
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

#[derive(Debug, Clone)]
enum Edit {
    Delete(usize),
    Insert(usize, String),
    Modify(usize, String),
}

fn edits() -> impl Strategy<Value = Vec<Edit>> {
    let line = prop::sample::select(VOCAB).prop_map(str::to_string);
    let edit = prop_oneof![
        any::<usize>().prop_map(Edit::Delete),
        (any::<usize>(), line.clone()).prop_map(|(i, l)| Edit::Insert(i, l)),
        (any::<usize>(), line).prop_map(|(i, l)| Edit::Modify(i, format!("{l}  # changed"))),
    ];
    prop::collection::vec(edit, 0..5)
}

fn apply(lines: &[String], edits: &[Edit]) -> Vec<String> {
    let mut out = lines.to_vec();
    for e in edits {
        match e {
            Edit::Delete(i) if !out.is_empty() => {
                let i = i % out.len();
                out.remove(i);
            }
            Edit::Insert(i, l) => {
                let i = i % (out.len() + 1);
                out.insert(i, l.clone());
            }
            Edit::Modify(i, l) if !out.is_empty() => {
                let i = i % out.len();
                out[i] = l.clone();
            }
            _ => {}
        }
    }
    out
}

proptest! {
    #![proptest_config(config(1000))]

    #[test]
    fn code_diff_round_trips(code in program(15), e in edits()) {
        let buggy = code.join("\n");
        let fixed = apply(&code, &e).join("\n");
        let diff = line_diff(&buggy, &fixed);
        let ann = encode_code_diff(&buggy, &diff).unwrap();
        let parsed = parse_code_diff(&ann.render(), &buggy).unwrap();
        prop_assert!(parsed.valid);
        prop_assert_eq!(&parsed.annotation, &ann);
        // Marked lines are exactly the deleted source lines.
        let mut deleted = BTreeSet::new();
        let mut src = 0;
        for op in &diff.ops {
            match op {
                DiffOp::Keep(_) => src += 1,
                DiffOp::Delete(_) => { deleted.insert(src); src += 1; }
                DiffOp::Insert(_) => {}
            }
        }
        prop_assert_eq!(ann.buggy_set(), deleted);
    }

    #[test]
    fn fenced_reply_parses_like_bare(code in program(10), e in edits()) {
        let buggy = code.join("\n");
        let ann = encode_code_diff(&buggy, &line_diff(&buggy, &apply(&code, &e).join("\n"))).unwrap();
        let reply = format!("Here is the proposal:\n```\n{}\n```\nDone.", ann.render());
        prop_assert_eq!(parse_code_diff(&reply, &buggy).unwrap().annotation, ann);
    }
}

proptest! {
    #![proptest_config(config(500))]

    #[test]
    fn consistency_identity(a in program(12), b in program(12)) {
        let buggy = a.join("\n");
        let fixed = b.join("\n");
        let diff = line_diff(&buggy, &fixed);
        let k = split_lines(&buggy).len();
        let fixed_len = split_lines(&fixed).len();
        let lcs = brute_force_lcs(&split_lines(&buggy), &split_lines(&fixed));
        prop_assert_eq!(k + diff.added - diff.deleted, fixed_len);
        prop_assert_eq!(k - diff.deleted, lcs);
        prop_assert_eq!(diff.kept(), lcs);
        let expected = lcs as f64 / fixed_len as f64;
        prop_assert_eq!(consistency(&buggy, &fixed), expected);
    }

    #[test]
    fn diff_replays_to_target(a in program(12), b in program(12)) {
        let buggy = a.join("\n");
        let fixed = b.join("\n");
        let diff = line_diff(&buggy, &fixed);
        prop_assert_eq!(diff.apply(), split_lines(&fixed));
        prop_assert_eq!(diff.source_len(), split_lines(&buggy).len());
    }

    #[test]
    fn consistency_bounded(a in program(12), b in program(12)) {
        let c = consistency(&a.join("\n"), &b.join("\n"));
        prop_assert!((0.0..=1.0).contains(&c));
    }
}

fn numbered(n: usize, tag: &str) -> String {
    (0..n).map(|i| format!("{tag}{i} = {i}")).collect::<Vec<_>>().join("\n")
}

#[test]
fn eight_line_pair_with_one_modified_line() {
    let buggy = numbered(8, "v");
    let fixed = buggy.replace("v3 = 3", "v3 = 33");
    let diff = line_diff(&buggy, &fixed);
    assert_eq!((diff.deleted, diff.added, diff.kept()), (1, 1, 7));
    assert_eq!(brute_force_lcs(&split_lines(&buggy), &split_lines(&fixed)), 7);
}

#[test]
fn one_line_fix_on_ten_lines() {
    let buggy = numbered(10, "v");
    let fixed = buggy.replace("v9 = 9", "v9 = 10");
    assert_eq!(consistency(&buggy, &fixed), 0.9);
    assert_eq!(consistency_reported(&buggy, &fixed), 0.9);
}

#[test]
fn full_rewrite_scores_zero() {
    let buggy = numbered(10, "a");
    let fixed = numbered(12, "b");
    let diff = line_diff(&buggy, &fixed);
    assert_eq!((diff.deleted, diff.added), (10, 12));
    assert_eq!(consistency(&buggy, &fixed), 0.0);
}

#[test]
fn verbatim_copy_reports_zero() {
    let buggy = numbered(6, "a");
    assert_eq!(consistency(&buggy, &buggy), 1.0);
    assert_eq!(consistency_reported(&buggy, &buggy), 0.0);
}

#[test]
fn annotation_with_extra_blank_line_is_tolerated() {
    let buggy = "a = 1\nb = 2\nprint(a + b)";
    let reply = " a = 1\n\n-b = 2\n print(a + b)";
    let parsed = parse_code_diff(reply, buggy).unwrap();
    assert!(parsed.valid);
    assert_eq!(parsed.annotation.buggy_set(), BTreeSet::from([1]));
}

#[test]
fn oracle_self_check() {
    assert_eq!(brute_force_lcs(&["a", "b", "c", "d"], &["b", "d", "a"]), 2);
    assert_eq!(brute_force_lcs(&[], &["x"]), 0);
}
