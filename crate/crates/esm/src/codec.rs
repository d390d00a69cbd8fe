//! Input encodings: how sizes map to terms and how inputs are written.

use esm_core::numeral::{NumeralCodec, NumeralError};
use esm_core::term::TermPool;
use esm_core::{parse_term, Program, SymbolId, Term, Vocabulary};
use rand::Rng;

/// How to build inputs of a given compact size for a program.
#[derive(Clone, Debug)]
pub enum Codec {
    /// Binary numerals over `eps`, `d0`, `d1`.
    Nat(NumeralCodec),
    /// Chains of unary constructors ending in a nullary one.
    Chain { end: SymbolId, links: Vec<SymbolId> },
    /// Arbitrary constructor terms.
    Generic,
}

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("`{0}` is not of the form NAME=TERM")]
    Malformed(String),
    #[error("`{0}` is not an input of this program")]
    UnknownInput(String),
    #[error("input `{0}` given twice")]
    Repeated(String),
    #[error("missing input `{0}`")]
    Missing(String),
    #[error("input `{name}`: {msg}")]
    Term { name: String, msg: String },
    #[error("input `{name}`: {source}")]
    Numeral { name: String, source: NumeralError },
}

impl Codec {
    /// Numerals when the vocabulary has them, else chains when there are
    /// unary constructors, else generic terms.
    pub fn detect(v: &Vocabulary) -> Codec {
        if let Ok(n) = NumeralCodec::new(v) {
            return Codec::Nat(n);
        }
        let arity = |k| {
            v.constructors()
                .filter(move |(_, s)| s.arity == k)
                .map(|(i, _)| i)
        };
        let links: Vec<SymbolId> = arity(1).collect();
        match arity(0).next() {
            Some(end) if !links.is_empty() => Codec::Chain { end, links },
            _ => Codec::Generic,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Codec::Nat(_) => "nat",
            Codec::Chain { .. } => "chain",
            Codec::Generic => "generic",
        }
    }

    /// A random input of compact size `n` (at least 1). Numerals have `n`
    /// binary digits; chains have `n - 1` links; generic terms get `n - 1`
    /// fresh inner nodes, which may collapse by sharing.
    pub fn sample(&self, v: &Vocabulary, n: usize, rng: &mut impl Rng) -> Term {
        let n = n.max(1);
        match self {
            Codec::Nat(c) => {
                let digits: Vec<bool> = (1..n).map(|_| rng.random_bool(0.5)).collect();
                c.encode_digits(&digits)
            }
            Codec::Chain { end, links } => {
                let mut t = Term::leaf(*end);
                for _ in 1..n {
                    t = Term::new(links[rng.random_range(0..links.len())], vec![t]);
                }
                t
            }
            Codec::Generic => generic(v, n, rng),
        }
    }
}

fn generic(v: &Vocabulary, n: usize, rng: &mut impl Rng) -> Term {
    let leaves: Vec<SymbolId> = v
        .constructors()
        .filter(|(_, s)| s.arity == 0)
        .map(|(i, _)| i)
        .collect();
    let inner: Vec<SymbolId> = v
        .constructors()
        .filter(|(_, s)| s.arity > 0)
        .map(|(i, _)| i)
        .collect();
    let mut pool = TermPool::new();
    let mut made = vec![pool.make(leaves[rng.random_range(0..leaves.len())], Vec::new())];
    if inner.is_empty() {
        return made.pop().unwrap();
    }
    for _ in 1..n {
        let head = inner[rng.random_range(0..inner.len())];
        let last = made.last().unwrap().clone();
        let args = (0..v.arity(head))
            .map(|k| {
                if k == 0 {
                    last.clone()
                } else {
                    made[rng.random_range(0..made.len())].clone()
                }
            })
            .collect();
        made.push(pool.make(head, args));
    }
    made.pop().unwrap()
}

/// Builds the input vector of `p` from `NAME=TERM` strings. With `nat`,
/// each value is a positive decimal integer written as a numeral.
pub fn parse_inputs(p: &Program, given: &[String], nat: bool) -> Result<Vec<Term>, InputError> {
    let v = &p.vocab;
    let mut slots: Vec<Option<Term>> = vec![None; p.inputs.len()];
    for g in given {
        let (name, text) = g
            .split_once('=')
            .ok_or_else(|| InputError::Malformed(g.clone()))?;
        let name = name.trim();
        let k = p
            .inputs
            .iter()
            .position(|&s| v.name(s) == name)
            .ok_or_else(|| InputError::UnknownInput(name.to_string()))?;
        if slots[k].is_some() {
            return Err(InputError::Repeated(name.to_string()));
        }
        let term = if nat {
            let n: u128 = text.trim().parse().map_err(|e| InputError::Term {
                name: name.to_string(),
                msg: format!("`{}` is not a positive integer: {e}", text.trim()),
            })?;
            let codec = NumeralCodec::new(v).map_err(|source| InputError::Numeral {
                name: name.to_string(),
                source,
            })?;
            codec.encode(n).map_err(|source| InputError::Numeral {
                name: name.to_string(),
                source,
            })?
        } else {
            parse_term(text, v).map_err(|e| InputError::Term {
                name: name.to_string(),
                msg: e.to_string(),
            })?
        };
        slots[k] = Some(term);
    }
    slots
        .into_iter()
        .zip(&p.inputs)
        .map(|(t, &s)| t.ok_or_else(|| InputError::Missing(v.name(s).to_string())))
        .collect()
}

/// Random inputs of size `n` each, for every input of `p`.
pub fn sample_inputs(p: &Program, n: usize, rng: &mut impl Rng) -> Vec<Term> {
    let codec = Codec::detect(&p.vocab);
    p.inputs
        .iter()
        .map(|_| codec.sample(&p.vocab, n, rng))
        .collect()
}
