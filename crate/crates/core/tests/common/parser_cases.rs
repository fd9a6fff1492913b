//! Malformed-input tables shared by the ingest tests and the acceptance run.
#![allow(dead_code)]

/// `(input, declared dim)`; each must fail while streaming.
pub const MALFORMED_LIBSVM: &[(&str, Option<usize>)] = &[
    ("1 0:1.0\n", None),
    ("1 -3:1\n", None),
    ("1 a:1\n", None),
    ("1 3:abc\n", None),
    ("1 3\n", None),
    ("1 3:1 2:1\n", None),
    ("1 3:1 3:2\n", None),
    ("1 3:nan\n", None),
    ("1 3:inf\n", None),
    ("1 5:1\n", Some(4)),
    ("1 :1\n", None),
    ("1 3:\n", None),
    ("1 1.5:2\n", None),
    ("1 2:1:3\n", None),
    ("1 99999999999999999999999:1\n", None),
    ("1 2:1e999\n", None),
    ("1 2:0x10\n", None),
    ("1 qid\n", None),
    ("1 1:1\n1 2:1 1:1 # comment\n", None),
    ("1 2:1,3:1\n", None),
    ("0 1:1\n0 2:1\n0 4:-inf\n", None),
    ("1 1:1 2:1 2:1\n", Some(10)),
];

/// Each must fail at open or while streaming.
pub const MALFORMED_DOCWORD: &[&str] = &[
    "",
    "2\n3\n",
    "x\n3\n1\n",
    "2\n-3\n1\n",
    "2\n3\n1.5\n",
    "2 3 1\n",
    "2\n3\n1\n1 4 1\n",
    "2\n3\n1\n1 0 1\n",
    "2\n3\n1\n0 1 1\n",
    "2\n3\n1\n3 1 1\n",
    "2\n3\n2\n2 1 1\n1 1 1\n",
    "2\n3\n1\n1 2\n",
    "2\n3\n1\n1 2 3 4\n",
    "2\n3\n1\na 1 1\n",
    "2\n3\n1\n1 b 1\n",
    "2\n3\n1\n1 1 c\n",
    "2\n3\n1\n1 1 nan\n",
    "2\n3\n1\n1 1 inf\n",
    "2\n3\n1\n1 1 -1\n",
    "2\n3\n1\n-1 2 1\n",
    "1\n3\n2\n1 2 1\n1 1.5 1\n",
    "2\n3\n2\n1 1 1\ngarbage\n",
];
