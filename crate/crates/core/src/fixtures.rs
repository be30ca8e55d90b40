//! The bundled theory files.

use crate::error::ParseError;
use crate::parse::{parse_theory_file, TheoryFile};

pub const LK: &str = include_str!("../theories/lk.thy");
pub const LK_COUNTEREXAMPLE: &str = include_str!("../theories/lk_counterexample.thy");
pub const SEMILATTICE: &str = include_str!("../theories/semilattice.thy");
pub const CONVEX_KANTOROVICH: &str = include_str!("../theories/convex_kantorovich.thy");
pub const CONVEX_KANTOROVICH_RULE: &str = include_str!("../theories/convex_kantorovich_rule.thy");
pub const DISCRETE: &str = include_str!("../theories/discrete.thy");
pub const EMPTY: &str = include_str!("../theories/empty.thy");
pub const BAD_TRIANGLE: &str = include_str!("../theories/bad_triangle.thy");

/// `(file name, contents)` for every bundled theory.
pub const ALL: &[(&str, &str)] = &[
    ("lk.thy", LK),
    ("lk_counterexample.thy", LK_COUNTEREXAMPLE),
    ("semilattice.thy", SEMILATTICE),
    ("convex_kantorovich.thy", CONVEX_KANTOROVICH),
    ("convex_kantorovich_rule.thy", CONVEX_KANTOROVICH_RULE),
    ("discrete.thy", DISCRETE),
    ("empty.thy", EMPTY),
    ("bad_triangle.thy", BAD_TRIANGLE),
];

/// Looks a bundled theory up by file name (with or without `.thy`).
pub fn source(name: &str) -> Option<&'static str> {
    let name = name.strip_suffix(".thy").unwrap_or(name);
    ALL.iter()
        .find(|(n, _)| n.strip_suffix(".thy") == Some(name))
        .map(|(_, s)| *s)
}

/// Parses a bundled theory. Panics on unknown names; the bundled files
/// are known to parse.
pub fn load(name: &str) -> TheoryFile {
    try_load(name).unwrap_or_else(|e| panic!("bundled theory {name}: {e}"))
}

pub fn try_load(name: &str) -> Result<TheoryFile, ParseError> {
    let text =
        source(name).ok_or_else(|| ParseError::new(0, format!("no bundled theory `{name}`")))?;
    parse_theory_file(text)
}
