//! Fixtures shared by the integration tests: small Python problems with known
//! fixes, a 20-instance synthetic dataset and a 50-submission archive.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use adapr_core::corpus::{
    split_and_cap, write_dataset, Archive, Problem, RepairInstance, SplitConfig, Submission,
    SubmissionVerdict, Suites, TestCase,
};
use adapr_core::diffkit::{encode_code_diff, line_diff};
use adapr_core::exec::{Limits, PythonBackend};
use adapr_core::judge::Judge;

/// A problem with a correct program and a buggy one, parameterised by `p`
/// so several distinct problems come out of one family.
pub struct Family {
    pub statement: fn(u32) -> String,
    pub fixed: fn(u32) -> String,
    pub buggy: fn(u32) -> String,
    /// (input, expected output); the buggy program fails at least one.
    pub tests: fn(u32) -> Vec<(String, String)>,
    /// Index of a test the buggy program fails.
    pub failing: usize,
}

fn sum_fixed(p: u32) -> String {
    format!("n = int(input())\ntotal = 0\nfor v in range(1, n + 1):\n    total += v * {p}\nprint(total)\n")
}

fn max_fixed(p: u32) -> String {
    format!("nums = list(map(int, input().split()))\nbest = nums[0]\nfor x in nums:\n    if x > best:\n        best = x\nprint(best + {p})\n")
}

fn count_fixed(p: u32) -> String {
    format!("s = input()\ncount = 0\nfor ch in s:\n    if ch == \"a\":\n        count += 1\nprint(count * {p})\n")
}

fn reverse_fixed(p: u32) -> String {
    format!("words = input().split()\nout = []\nfor i in range(len(words) - 1, -1, -1):\n    out.append(words[i])\nprint(\" \".join(out) + \"!\" * {p})\n")
}

fn absdiff_fixed(p: u32) -> String {
    format!("a, b = map(int, input().split())\nd = a - b\nif d < 0:\n    d = -d\nprint(d + {p})\n")
}

pub fn families() -> Vec<Family> {
    vec![
        Family {
            statement: |p| format!("Read n and print the sum of v * {p} for v from 1 to n."),
            fixed: sum_fixed,
            buggy: |p| sum_fixed(p).replace("range(1, n + 1)", "range(1, n)"),
            tests: |p| {
                vec![
                    ("0\n".into(), "0\n".into()),
                    ("3\n".into(), format!("{}\n", 6 * p)),
                    ("5\n".into(), format!("{}\n", 15 * p)),
                ]
            },
            failing: 1,
        },
        Family {
            statement: |p| format!("Read a list of integers and print its maximum plus {p}."),
            fixed: max_fixed,
            buggy: |p| max_fixed(p).replace("best = nums[0]", "best = 0"),
            tests: |p| {
                let p = p as i64;
                vec![
                    ("1 5 3\n".into(), format!("{}\n", 5 + p)),
                    ("-4 -2 -9\n".into(), format!("{}\n", -2 + p)),
                    ("-1\n".into(), format!("{}\n", -1 + p)),
                ]
            },
            failing: 1,
        },
        Family {
            statement: |p| format!("Read a string and print {p} times the number of letters a in it."),
            fixed: count_fixed,
            buggy: |p| count_fixed(p).replace("ch == \"a\"", "ch == \"A\""),
            tests: |p| {
                vec![
                    ("bbb\n".into(), "0\n".into()),
                    ("banana\n".into(), format!("{}\n", 3 * p)),
                    ("aa\n".into(), format!("{}\n", 2 * p)),
                ]
            },
            failing: 1,
        },
        Family {
            statement: |p| format!("Read words and print them in reverse order followed by {p} exclamation marks."),
            fixed: reverse_fixed,
            buggy: |p| reverse_fixed(p).replace("len(words) - 1, -1, -1", "len(words) - 1, 0, -1"),
            tests: |p| {
                let bang = "!".repeat(p as usize);
                vec![
                    ("a b c\n".into(), format!("c b a{bang}\n")),
                    ("x\n".into(), format!("x{bang}\n")),
                    ("one two\n".into(), format!("two one{bang}\n")),
                ]
            },
            failing: 0,
        },
        Family {
            statement: |p| format!("Read a and b and print |a - b| + {p}."),
            fixed: absdiff_fixed,
            buggy: |p| {
                absdiff_fixed(p)
                    .replace("if d < 0:", "if d > 0:")
                    .replace("    d = -d", "    d = d * -1")
            },
            tests: |p| {
                vec![
                    ("5 5\n".into(), format!("{p}\n")),
                    ("7 2\n".into(), format!("{}\n", 5 + p)),
                    ("2 7\n".into(), format!("{}\n", 5 + p)),
                ]
            },
            failing: 1,
        },
    ]
}

fn suite(tests: &[(String, String)]) -> Vec<TestCase> {
    tests
        .iter()
        .enumerate()
        .map(|(i, (input, out))| TestCase::new(format!("t{i}"), input.clone(), out.clone()))
        .collect()
}

/// Twenty instances, one per problem: five families times four parameters.
pub fn synthetic_instances() -> (Vec<RepairInstance>, Suites) {
    let mut instances = Vec::new();
    let mut suites = Suites::new();
    for (f, family) in families().iter().enumerate() {
        for p in 1..=4u32 {
            let problem_id = format!("p{f}{p}");
            let buggy = (family.buggy)(p);
            let fixed = (family.fixed)(p);
            let tests = suite(&(family.tests)(p));
            let diff_label = encode_code_diff(&buggy, &line_diff(&buggy, &fixed)).unwrap();
            instances.push(RepairInstance {
                id: format!("{problem_id}:u1:s1:s2"),
                problem_id: problem_id.clone(),
                user_id: "u1".into(),
                problem_statement: (family.statement)(p),
                buggy_code: buggy,
                failed_test: tests[family.failing].clone(),
                diff_label,
                fixed_code: fixed,
                split: None,
            });
            suites.insert(problem_id, tests);
        }
    }
    (instances, suites)
}

/// Writes the synthetic corpus as a dataset directory.
pub fn write_synthetic_dataset(dir: &Path) -> Vec<RepairInstance> {
    let (instances, suites) = synthetic_instances();
    let dataset = split_and_cap(instances, 0, &SplitConfig::default()).unwrap();
    let problems: BTreeMap<String, Problem> = suites
        .into_iter()
        .map(|(pid, tests)| {
            (
                pid,
                Problem {
                    statement: String::new(),
                    tests,
                },
            )
        })
        .collect();
    write_dataset(dir, &dataset, &problems).unwrap();
    dataset.instances
}

pub fn python_judge() -> Judge {
    Judge::new(Arc::new(PythonBackend::default()), Limits::default(), 4)
}

/// Archive builder that hands out sequential ids and timestamps.
pub struct ArchiveBuilder {
    pub archive: Archive,
    next: u64,
}

impl ArchiveBuilder {
    pub fn new() -> Self {
        Self {
            archive: Archive::default(),
            next: 1,
        }
    }

    pub fn problem(&mut self, pid: &str, family: &Family, p: u32) {
        self.archive.problems.insert(
            pid.to_string(),
            Problem {
                statement: (family.statement)(p),
                tests: suite(&(family.tests)(p)),
            },
        );
    }

    /// Adds a submission and returns its id.
    pub fn submit(&mut self, user: &str, pid: &str, verdict: SubmissionVerdict, source: String) -> String {
        let id = format!("s{:03}", self.next);
        self.archive.submissions.push(Submission {
            id: id.clone(),
            user_id: user.to_string(),
            problem_id: pid.to_string(),
            timestamp: 1000 + self.next,
            source,
            verdict,
        });
        self.next += 1;
        id
    }
}

/// The 50-submission archive and the instance ids a correct builder emits,
/// enumerated by hand from how each (user, problem) group was constructed.
pub fn fifty_submission_archive() -> (Archive, Vec<String>) {
    use SubmissionVerdict::{Accepted as A, Rejected as R};
    let fams = families();
    let mut b = ArchiveBuilder::new();
    let mut expected = Vec::new();
    let problems = [("p1", 0usize, 1u32), ("p2", 1, 1), ("p3", 2, 2), ("p4", 3, 1), ("p5", 4, 3), ("p6", 0, 7)];
    for (pid, f, p) in problems {
        b.problem(pid, &fams[f], p);
    }
    let fam = |pid: &str| {
        let (_, f, p) = problems.iter().find(|(q, _, _)| *q == pid).unwrap();
        (&fams[*f], *p)
    };
    let buggy = |pid: &str| {
        let (fm, p) = fam(pid);
        (fm.buggy)(p)
    };
    let fixed = |pid: &str| {
        let (fm, p) = fam(pid);
        (fm.fixed)(p)
    };
    // Same program with one more statement edited: still similar, but less so.
    let buggier = |pid: &str| {
        let code = buggy(pid);
        let mut lines: Vec<String> = code.lines().map(str::to_string).collect();
        lines[1] = lines[1].replace(" = ", " = 0 + ");
        format!("tmp = 0\n{}\n", lines.join("\n"))
    };
    // Correct, but with extra inert statements.
    let padded = |pid: &str| format!("unused_one = 1\nunused_two = unused_one + 1\n{}", fixed(pid));
    // Correct rewrite sharing almost nothing with the buggy code.
    let rewrite = |pid: &str| match pid {
        "p1" => "import sys\nk = int(sys.stdin.read())\nprint(k * (k + 1) // 2)\n".to_string(),
        "p4" => "print(' '.join(reversed(input().split())) + '!')\n".to_string(),
        other => panic!("no rewrite for {other}"),
    };
    // Rejected, yet passes every test: only a comment differs from the fix.
    let commented = |pid: &str| format!("# first attempt\n{}", fixed(pid));

    let pair = |b: &mut ArchiveBuilder, user: &str, pid: &str| {
        let r = b.submit(user, pid, R, buggy(pid));
        let a = b.submit(user, pid, A, fixed(pid));
        format!("{pid}:{user}:{r}:{a}")
    };

    // p1: 11 submissions.
    expected.push(pair(&mut b, "u01", "p1"));
    b.submit("u02", "p1", A, fixed("p1"));
    b.submit("u02", "p1", R, buggy("p1"));
    b.submit("u03", "p1", R, buggy("p1"));
    b.submit("u03", "p1", A, rewrite("p1"));
    b.submit("u04", "p1", R, buggier("p1"));
    let r = b.submit("u04", "p1", R, buggy("p1"));
    let a = b.submit("u04", "p1", A, fixed("p1"));
    expected.push(format!("p1:u04:{r}:{a}"));
    b.submit("u05", "p1", R, commented("p1"));
    b.submit("u05", "p1", A, fixed("p1"));

    // p2: 11 submissions.
    expected.push(pair(&mut b, "u01", "p2"));
    let r = b.submit("u06", "p2", R, buggy("p2"));
    b.submit("u06", "p2", A, padded("p2"));
    let a = b.submit("u06", "p2", A, fixed("p2"));
    expected.push(format!("p2:u06:{r}:{a}"));
    b.submit("u07", "p2", R, buggy("p2"));
    b.submit("u08", "p2", A, fixed("p2"));
    let r = b.submit("u09", "p2", R, buggy("p2"));
    let a = b.submit("u09", "p2", A, fixed("p2"));
    b.submit("u09", "p2", R, buggy("p2"));
    b.submit("u09", "p2", A, fixed("p2"));
    expected.push(format!("p2:u09:{r}:{a}"));

    // p3: 9 submissions.
    expected.push(pair(&mut b, "u01", "p3"));
    expected.push(pair(&mut b, "u02", "p3"));
    b.submit("u03", "p3", A, fixed("p3"));
    b.submit("u03", "p3", R, buggy("p3"));
    b.submit("u10", "p3", R, buggier("p3"));
    let r = b.submit("u10", "p3", R, buggy("p3"));
    let a = b.submit("u10", "p3", A, fixed("p3"));
    expected.push(format!("p3:u10:{r}:{a}"));

    // p4: 7 submissions.
    expected.push(pair(&mut b, "u04", "p4"));
    let r = b.submit("u05", "p4", R, buggy("p4"));
    b.submit("u05", "p4", A, padded("p4"));
    let a = b.submit("u05", "p4", A, fixed("p4"));
    expected.push(format!("p4:u05:{r}:{a}"));
    b.submit("u11", "p4", R, buggy("p4"));
    b.submit("u11", "p4", A, rewrite("p4"));

    // p5: 6 submissions.
    expected.push(pair(&mut b, "u01", "p5"));
    expected.push(pair(&mut b, "u12", "p5"));
    b.submit("u13", "p5", R, commented("p5"));
    b.submit("u13", "p5", A, fixed("p5"));

    // p6: 6 submissions.
    expected.push(pair(&mut b, "u02", "p6"));
    let r = b.submit("u15", "p6", R, buggy("p6"));
    let a = b.submit("u15", "p6", A, fixed("p6"));
    b.submit("u15", "p6", R, buggy("p6"));
    b.submit("u15", "p6", A, fixed("p6"));
    expected.push(format!("p6:u15:{r}:{a}"));

    assert_eq!(b.archive.submissions.len(), 50);
    expected.sort();
    (b.archive, expected)
}
