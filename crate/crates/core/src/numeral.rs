//! Binary numerals over `eps/0`, `d0/1`, `d1/1`.
//!
//! A positive integer is read as its binary expansion with the leading `1`
//! left implicit: `eps` is 1, and each constructor layer contributes the
//! next digit, outermost first. So `d0(d1(eps))` spells `1` `0` `1` = 5.

use alloc::vec::Vec;

use crate::term::{SymbolId, Term, Vocabulary};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NumeralError {
    #[error("positive integers only; 0 has no numeral")]
    Zero,
    #[error("vocabulary lacks `{0}`")]
    MissingSymbol(&'static str),
    #[error("term contains a symbol outside eps/d0/d1")]
    Foreign,
    #[error("numeral too large for 128 bits")]
    Overflow,
}

/// Symbol ids of the numeral constructors in a particular vocabulary.
#[derive(Clone, Copy, Debug)]
pub struct NumeralCodec {
    pub eps: SymbolId,
    pub d0: SymbolId,
    pub d1: SymbolId,
}

impl NumeralCodec {
    pub fn new(vocab: &Vocabulary) -> Result<Self, NumeralError> {
        let find = |name: &'static str, arity: usize| {
            vocab
                .lookup(name)
                .filter(|&id| vocab.is_constructor(id) && vocab.arity(id) == arity)
                .ok_or(NumeralError::MissingSymbol(name))
        };
        Ok(NumeralCodec {
            eps: find("eps", 0)?,
            d0: find("d0", 1)?,
            d1: find("d1", 1)?,
        })
    }

    pub fn encode(&self, n: u128) -> Result<Term, NumeralError> {
        if n == 0 {
            return Err(NumeralError::Zero);
        }
        let width = 128 - n.leading_zeros() as usize;
        let digits: Vec<bool> = (0..width - 1).rev().map(|i| n >> i & 1 == 1).collect();
        Ok(self.encode_digits(&digits))
    }

    /// Builds the numeral whose digits after the implicit leading 1 are
    /// `digits`, most significant first.
    pub fn encode_digits(&self, digits: &[bool]) -> Term {
        let mut t = Term::leaf(self.eps);
        for &bit in digits.iter().rev() {
            t = Term::new(if bit { self.d1 } else { self.d0 }, alloc::vec![t]);
        }
        t
    }

    /// Digits after the implicit leading 1, most significant first.
    pub fn decode_digits(&self, t: &Term) -> Result<Vec<bool>, NumeralError> {
        let mut digits = Vec::new();
        let mut cur = t;
        loop {
            let h = cur.head();
            if h == self.eps && cur.args().is_empty() {
                return Ok(digits);
            } else if (h == self.d0 || h == self.d1) && cur.args().len() == 1 {
                digits.push(h == self.d1);
                cur = &cur.args()[0];
            } else {
                return Err(NumeralError::Foreign);
            }
        }
    }

    pub fn decode(&self, t: &Term) -> Result<u128, NumeralError> {
        let digits = self.decode_digits(t)?;
        if digits.len() >= 128 {
            return Err(NumeralError::Overflow);
        }
        Ok(digits
            .iter()
            .fold(1u128, |acc, &bit| acc << 1 | u128::from(bit)))
    }
}

pub fn encode_nat_binary(n: u128, vocab: &Vocabulary) -> Result<Term, NumeralError> {
    NumeralCodec::new(vocab)?.encode(n)
}

pub fn decode_nat_binary(t: &Term, vocab: &Vocabulary) -> Result<u128, NumeralError> {
    NumeralCodec::new(vocab)?.decode(t)
}
