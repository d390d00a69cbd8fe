//! Reading programs from disk, with the bundled corpus as a fallback.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use esm_core::corpus;
use esm_core::syntax::{link_program, LinkError};
use esm_core::term::ParseError;
use esm_core::{parse_program, validate_program, Program};

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read `{}`: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}:{source}", path.display())]
    Parse { path: PathBuf, source: ParseError },
    #[error("{}: {source}", path.display())]
    Link { path: PathBuf, source: LinkError },
    #[error("{}: {}", path.display(), messages.join("\n"))]
    Invalid {
        path: PathBuf,
        messages: Vec<String>,
    },
}

/// Source text of `path`. A path that does not exist but names a bundled
/// example (`toggle.esm`, or just `toggle`) resolves to that example.
pub fn read_source(path: &Path) -> Result<String, LoadError> {
    match fs::read_to_string(path) {
        Ok(s) => Ok(s),
        Err(e) if e.kind() == io::ErrorKind::NotFound => bundled(path).ok_or(LoadError::Io {
            path: path.to_path_buf(),
            source: e,
        }),
        Err(e) => Err(LoadError::Io {
            path: path.to_path_buf(),
            source: e,
        }),
    }
}

fn bundled(path: &Path) -> Option<String> {
    let name = path.file_name()?.to_str()?;
    corpus::find(name).map(|e| e.source.to_string())
}

/// Parses, links and validates the program at `path`. Oracle paths are
/// resolved against the program's directory, then against the corpus.
pub fn load_program(path: &Path) -> Result<Program, LoadError> {
    let text = read_source(path)?;
    let parsed = parse_program(&text).map_err(|source| LoadError::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let p = link_program(parsed, &mut |rel| {
        read_source(&dir.join(rel)).map_err(|e| e.to_string())
    })
    .map_err(|source| LoadError::Link {
        path: path.to_path_buf(),
        source,
    })?;
    let diags = validate_program(&p);
    if !diags.is_empty() {
        return Err(LoadError::Invalid {
            path: path.to_path_buf(),
            messages: diags.iter().map(|d| d.to_string()).collect(),
        });
    }
    Ok(p)
}
