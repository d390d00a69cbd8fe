#![allow(dead_code)]

use esm_core::term::TermPool;
use esm_core::{Term, Vocabulary};
use rand::Rng;

/// Constructors c/0, e/0, s/1, f/2, g/2, h/3.
pub fn vocab() -> Vocabulary {
    Vocabulary::builder()
        .constructor("c", 0)
        .constructor("e", 0)
        .constructor("s", 1)
        .constructor("f", 2)
        .constructor("g", 2)
        .constructor("h", 3)
        .build()
        .unwrap()
}

/// A maximally shared random term with `budget` inner applications, so its
/// compact size is at most `budget + 2`. Children lean towards recent nodes
/// to make the term deep.
pub fn random_shared(
    v: &Vocabulary,
    budget: usize,
    rng: &mut impl Rng,
    pool: &mut TermPool,
) -> Term {
    let syms: Vec<_> = v.constructors().map(|(i, s)| (i, s.arity)).collect();
    let mut made: Vec<Term> = syms
        .iter()
        .filter(|s| s.1 == 0)
        .map(|s| pool.make(s.0, Vec::new()))
        .collect();
    let inner: Vec<_> = syms.iter().filter(|s| s.1 > 0).copied().collect();
    for _ in 0..budget {
        let (h, k) = inner[rng.random_range(0..inner.len())];
        let args = (0..k)
            .map(|_| {
                if rng.random_bool(0.8) {
                    made[made.len() - 1 - rng.random_range(0..made.len().min(8))].clone()
                } else {
                    made[rng.random_range(0..made.len())].clone()
                }
            })
            .collect();
        made.push(pool.make(h, args));
    }
    made.pop().unwrap()
}
