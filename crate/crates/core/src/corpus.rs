//! The bundled example programs.

use alloc::string::{String, ToString};

use crate::syntax::{link_program, parse_program, LinkError, Program};
use crate::term::ParseError;

#[derive(Clone, Copy, Debug)]
pub struct Entry {
    pub name: &'static str,
    /// File name, as referenced from `oracles` blocks.
    pub file: &'static str,
    pub summary: &'static str,
    pub source: &'static str,
}

pub const ENTRIES: &[Entry] = &[
    Entry {
        name: "toggle",
        file: "toggle.esm",
        summary: "flip an unset register to d1(eps), then to d0(eps)",
        source: include_str!("../corpus/toggle.esm"),
    },
    Entry {
        name: "bin_succ",
        file: "bin_succ.esm",
        summary: "binary successor",
        source: include_str!("../corpus/bin_succ.esm"),
    },
    Entry {
        name: "bin_add",
        file: "bin_add.esm",
        summary: "binary addition",
        source: include_str!("../corpus/bin_add.esm"),
    },
    Entry {
        name: "bin_mul",
        file: "bin_mul.esm",
        summary: "binary multiplication (oracle add)",
        source: include_str!("../corpus/bin_mul.esm"),
    },
    Entry {
        name: "str_reverse",
        file: "str_reverse.esm",
        summary: "reverse a string over {a, b}",
        source: include_str!("../corpus/str_reverse.esm"),
    },
    Entry {
        name: "merge_demo",
        file: "merge_demo.esm",
        summary: "merge f(c,c) and g(c,c) over a shared c",
        source: include_str!("../corpus/merge_demo.esm"),
    },
];

/// Looks up a bundled program by name (`bin_add`) or file name (`bin_add.esm`).
pub fn find(name: &str) -> Option<&'static Entry> {
    ENTRIES.iter().find(|e| e.name == name || e.file == name)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CorpusError {
    #[error("no bundled program named `{0}`")]
    Unknown(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Link(#[from] LinkError),
}

/// Parses and links a bundled program, resolving oracle paths against the
/// bundle.
pub fn load(name: &str) -> Result<Program, CorpusError> {
    let entry = find(name).ok_or_else(|| CorpusError::Unknown(name.to_string()))?;
    let p = parse_program(entry.source)?;
    Ok(link_program(p, &mut bundled_source)?)
}

/// Source text of a bundled program, for use as a link loader.
pub fn bundled_source(path: &str) -> Result<String, String> {
    let file = path.rsplit(['/', '\\']).next().unwrap_or(path);
    find(file)
        .map(|e| e.source.to_string())
        .ok_or_else(|| alloc::format!("no bundled program `{file}`"))
}
