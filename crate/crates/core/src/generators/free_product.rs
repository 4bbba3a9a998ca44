//! Free products of cyclic groups and their normal forms.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_FACTORS: usize = 4;

const LETTERS: [char; 8] = ['a', 'b', 'c', 'd', 'f', 'h', 'j', 'k'];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Factor {
    /// A copy of ℤ.
    Infinite,
    /// ℤ/m with m ≥ 2.
    Finite(u32),
}

/// A free product of cyclic groups with one generator per factor.
///
/// Generators are named `a`, `b`, `c`, `d` in factor order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FreeProductSpec {
    factors: Vec<Factor>,
}

impl FreeProductSpec {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        if factors.len() > MAX_FACTORS {
            return Err(Error::Usage(format!(
                "at most {MAX_FACTORS} factors are supported, got {}",
                factors.len()
            )));
        }
        Self::unchecked(factors)
    }

    /// Skips the factor cap; used for internal fixtures such as regular trees.
    pub(crate) fn unchecked(factors: Vec<Factor>) -> Result<Self> {
        if factors.len() > LETTERS.len() {
            return Err(Error::Usage(format!("too many factors: {}", factors.len())));
        }
        if factors
            .iter()
            .any(|f| matches!(f, Factor::Finite(m) if *m < 2))
        {
            return Err(Error::Usage("finite factors need order at least 2".into()));
        }
        let infinite = factors.contains(&Factor::Infinite);
        if factors.len() < 2 && !infinite {
            return Err(Error::Usage(
                "need two factors, or a single infinite one".into(),
            ));
        }
        Ok(FreeProductSpec { factors })
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn letter(&self, factor: usize) -> char {
        LETTERS[factor]
    }

    fn factor_of_letter(&self, c: char) -> Option<usize> {
        LETTERS[..self.factors.len()].iter().position(|&l| l == c)
    }

    /// Canonical exponent: residues in `1..m` for ℤ/m, or `None` for the identity.
    fn reduce(&self, factor: usize, exp: i64) -> Option<i64> {
        let e = match self.factors[factor] {
            Factor::Infinite => exp,
            Factor::Finite(m) => exp.rem_euclid(m as i64),
        };
        (e != 0).then_some(e)
    }

    pub fn identity(&self) -> NormalForm {
        NormalForm::default()
    }

    pub fn generator_power(&self, factor: usize, exp: i64) -> NormalForm {
        NormalForm {
            syllables: self
                .reduce(factor, exp)
                .map(|e| (factor, e))
                .into_iter()
                .collect(),
        }
    }

    /// Appends the syllable `(factor, exp)` to `w`, merging with its tail.
    fn push(&self, w: &mut Vec<(usize, i64)>, factor: usize, exp: i64) {
        match w.last_mut() {
            Some(last) if last.0 == factor => match self.reduce(factor, last.1 + exp) {
                Some(e) => last.1 = e,
                None => {
                    w.pop();
                }
            },
            _ => {
                if let Some(e) = self.reduce(factor, exp) {
                    w.push((factor, e));
                }
            }
        }
    }

    pub fn multiply(&self, x: &NormalForm, y: &NormalForm) -> NormalForm {
        let mut out = x.syllables.clone();
        for &(f, e) in &y.syllables {
            self.push(&mut out, f, e);
        }
        NormalForm { syllables: out }
    }

    pub fn inverse(&self, x: &NormalForm) -> NormalForm {
        let mut out = Vec::with_capacity(x.syllables.len());
        for &(f, e) in x.syllables.iter().rev() {
            self.push(&mut out, f, -e);
        }
        NormalForm { syllables: out }
    }

    /// Coned-off length of one syllable: one step when the exponent is a
    /// generator or its inverse, two (through the cone vertex) otherwise.
    pub fn syllable_cost(&self, factor: usize, exp: i64) -> u32 {
        let unit = match self.factors[factor] {
            Factor::Infinite => exp.abs() == 1,
            Factor::Finite(m) => {
                let r = exp.rem_euclid(m as i64);
                r == 1 || r == m as i64 - 1
            }
        };
        if unit {
            1
        } else {
            2
        }
    }

    /// Distance from the identity in the coned-off Cayley graph.
    pub fn coned_length(&self, w: &NormalForm) -> u32 {
        w.syllables
            .iter()
            .map(|&(f, e)| self.syllable_cost(f, e))
            .sum()
    }

    /// Word length over the canonical generators (no cones).
    pub fn word_length(&self, w: &NormalForm) -> u32 {
        w.syllables
            .iter()
            .map(|&(f, e)| match self.factors[f] {
                Factor::Infinite => e.unsigned_abs() as u32,
                Factor::Finite(m) => (e as u32).min(m - e as u32),
            })
            .sum()
    }

    pub fn parse_word(&self, text: &str) -> Result<NormalForm> {
        let text: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        if text.is_empty() || text == "e" || text == "1" {
            return Ok(self.identity());
        }
        let mut out = Vec::new();
        let mut chars = text.chars().peekable();
        while let Some(c) = chars.next() {
            let factor = self.factor_of_letter(c).ok_or_else(|| {
                Error::Parse(format!("unknown generator '{c}' in word \"{text}\""))
            })?;
            let mut exp = 1i64;
            if chars.peek() == Some(&'^') {
                chars.next();
                let mut digits = String::new();
                if chars.peek() == Some(&'-') {
                    digits.push('-');
                    chars.next();
                }
                while let Some(d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                    digits.push(*d);
                    chars.next();
                }
                exp = digits
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad exponent in word \"{text}\"")))?;
            }
            self.push(&mut out, factor, exp);
        }
        Ok(NormalForm { syllables: out })
    }

    pub fn format_word(&self, w: &NormalForm) -> String {
        if w.syllables.is_empty() {
            return "e".into();
        }
        w.syllables
            .iter()
            .map(|&(f, e)| {
                if e == 1 {
                    self.letter(f).to_string()
                } else {
                    format!("{}^{}", self.letter(f), e)
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl FromStr for FreeProductSpec {
    type Err = Error;

    /// Accepts `Z*Z`, `Z2*Z3`, `Z*Z3*Z3`, ...
    fn from_str(s: &str) -> Result<Self> {
        let factors = s
            .split('*')
            .map(|part| {
                let part = part.trim();
                match part.strip_prefix('Z') {
                    Some("") => Ok(Factor::Infinite),
                    Some(m) => m
                        .parse::<u32>()
                        .map(Factor::Finite)
                        .map_err(|_| Error::Parse(format!("bad factor \"{part}\""))),
                    None => Err(Error::Parse(format!("bad factor \"{part}\""))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        FreeProductSpec::new(factors)
    }
}

impl fmt::Display for FreeProductSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|fac| match fac {
                Factor::Infinite => "Z".to_string(),
                Factor::Finite(m) => format!("Z{m}"),
            })
            .collect();
        f.write_str(&parts.join("*"))
    }
}

/// Reduced word: alternating syllables `(factor, exponent)`, no two adjacent
/// from the same factor, finite exponents in `1..m`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NormalForm {
    pub syllables: Vec<(usize, i64)>,
}

impl NormalForm {
    pub fn is_identity(&self) -> bool {
        self.syllables.is_empty()
    }

    pub fn last_factor(&self) -> Option<usize> {
        self.syllables.last().map(|s| s.0)
    }

    /// The word with a trailing syllable from `factor` removed: the canonical
    /// representative of the coset `w·H_factor`.
    pub fn coset_rep(&self, factor: usize) -> NormalForm {
        let mut syllables = self.syllables.clone();
        if syllables.last().is_some_and(|s| s.0 == factor) {
            syllables.pop();
        }
        NormalForm { syllables }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_specs() {
        let s: FreeProductSpec = "Z*Z3*Z3".parse().unwrap();
        assert_eq!(
            s.factors(),
            &[Factor::Infinite, Factor::Finite(3), Factor::Finite(3)]
        );
        assert_eq!(s.to_string(), "Z*Z3*Z3");
        assert!("Z2".parse::<FreeProductSpec>().is_err());
        assert!("Z".parse::<FreeProductSpec>().is_ok());
        assert!("Z1*Z2".parse::<FreeProductSpec>().is_err());
        assert!("Z*Z*Z*Z*Z".parse::<FreeProductSpec>().is_err());
        assert!("Q*Z".parse::<FreeProductSpec>().is_err());
    }

    #[test]
    fn words() {
        let s: FreeProductSpec = "Z*Z3".parse().unwrap();
        let w = s.parse_word("a^2b^-1").unwrap();
        assert_eq!(w.syllables, vec![(0, 2), (1, 2)]);
        assert_eq!(s.format_word(&w), "a^2 b^2");
        assert_eq!(s.coned_length(&w), 3);
        assert_eq!(s.word_length(&w), 3);
        assert!(s.multiply(&w, &s.inverse(&w)).is_identity());
        assert!(s.parse_word("b b b").unwrap().is_identity());
        assert!(s.parse_word("x").is_err());
        assert_eq!(s.format_word(&s.parse_word("e").unwrap()), "e");
    }

    #[test]
    fn cosets() {
        let s: FreeProductSpec = "Z*Z".parse().unwrap();
        let w = s.parse_word("b a^3").unwrap();
        assert_eq!(s.format_word(&w.coset_rep(0)), "b");
        assert_eq!(s.format_word(&w.coset_rep(1)), "b a^3");
    }
}
