use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::{parse_program, Program};
use crate::fx::{self, FxHashMap};
use crate::term::ParseError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LinkError {
    #[error("cannot load oracle body `{path}`: {msg}")]
    Load { path: String, msg: String },
    #[error("in oracle body `{path}`: {source}")]
    Parse { path: String, source: ParseError },
    #[error("oracle cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
}

/// Loads and parses every oracle body reachable from `p`. `load` maps a
/// path as written in an `oracles` block to source text. Each path is
/// parsed once and shared; recursive oracle chains are rejected.
pub fn link_program(
    mut p: Program,
    load: &mut dyn FnMut(&str) -> Result<String, String>,
) -> Result<Program, LinkError> {
    let mut done: FxHashMap<String, Arc<Program>> = fx::map();
    let mut stack = Vec::new();
    link_into(&mut p, load, &mut done, &mut stack)?;
    Ok(p)
}

fn link_into(
    p: &mut Program,
    load: &mut dyn FnMut(&str) -> Result<String, String>,
    done: &mut FxHashMap<String, Arc<Program>>,
    stack: &mut Vec<String>,
) -> Result<(), LinkError> {
    for o in &mut p.oracles {
        if o.body.is_some() {
            continue;
        }
        if stack.contains(&o.path) {
            let mut cycle = stack.clone();
            cycle.push(o.path.clone());
            return Err(LinkError::Cycle(cycle));
        }
        if let Some(body) = done.get(&o.path) {
            o.body = Some(body.clone());
            continue;
        }
        let text = load(&o.path).map_err(|msg| LinkError::Load {
            path: o.path.clone(),
            msg,
        })?;
        let mut body = parse_program(&text).map_err(|source| LinkError::Parse {
            path: o.path.clone(),
            source,
        })?;
        stack.push(o.path.clone());
        link_into(&mut body, load, done, stack)?;
        stack.pop();
        let body = Arc::new(body);
        done.insert(o.path.clone(), body.clone());
        o.body = Some(body);
    }
    Ok(())
}
