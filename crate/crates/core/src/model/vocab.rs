use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type TokenId = usize;

/// Ordered character set followed by the reserved SOS, EOS and PAD ids.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    chars: Vec<char>,
}

pub const DEFAULT_CHARS: &str = "abcdefghijkl";

impl Default for Vocabulary {
    fn default() -> Self {
        Self::new(DEFAULT_CHARS.chars().collect()).expect("default vocabulary")
    }
}

impl Vocabulary {
    pub fn new(chars: Vec<char>) -> Result<Self> {
        if chars.is_empty() {
            return Err(Error::InvalidArgument("empty vocabulary".into()));
        }
        let mut sorted = chars.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != chars.len() {
            return Err(Error::InvalidArgument("duplicate vocabulary characters".into()));
        }
        Ok(Self { chars })
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn n_chars(&self) -> usize {
        self.chars.len()
    }

    /// Total ids including the three specials.
    pub fn size(&self) -> usize {
        self.chars.len() + 3
    }

    pub fn sos(&self) -> TokenId {
        self.chars.len()
    }

    pub fn eos(&self) -> TokenId {
        self.chars.len() + 1
    }

    pub fn pad(&self) -> TokenId {
        self.chars.len() + 2
    }

    pub fn is_content(&self, id: TokenId) -> bool {
        id < self.chars.len()
    }

    pub fn id_of(&self, c: char) -> Result<TokenId> {
        self.chars
            .iter()
            .position(|&x| x == c)
            .ok_or(Error::UnknownCharacter(c))
    }

    pub fn encode(&self, text: &str) -> Result<TokenSequence> {
        text.chars()
            .map(|c| self.id_of(c))
            .collect::<Result<Vec<_>>>()
            .map(TokenSequence)
    }

    /// Content tokens only; specials are dropped.
    pub fn decode(&self, tokens: &TokenSequence) -> String {
        tokens
            .0
            .iter()
            .filter(|&&t| self.is_content(t))
            .map(|&t| self.chars[t])
            .collect()
    }
}

/// Content token ids of a transcript, without SOS and EOS.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TokenSequence(pub Vec<TokenId>);

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[TokenId] {
        &self.0
    }

    pub fn validate(&self, vocab: &Vocabulary) -> Result<()> {
        match self.0.iter().find(|&&t| !vocab.is_content(t)) {
            Some(&id) => Err(Error::TokenOutOfRange {
                id,
                size: vocab.n_chars(),
            }),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specials_are_distinct_and_dense() {
        let v = Vocabulary::default();
        assert_eq!(v.size(), 15);
        let s = [v.sos(), v.eos(), v.pad()];
        assert_eq!(s, [12, 13, 14]);
        assert!(Vocabulary::new(vec!['a', 'a']).is_err());
    }

    #[test]
    fn encode_decode() {
        let v = Vocabulary::default();
        let t = v.encode("cab").unwrap();
        assert_eq!(t.0, vec![2, 0, 1]);
        assert_eq!(v.decode(&t), "cab");
        assert!(matches!(v.encode("z"), Err(Error::UnknownCharacter('z'))));
        assert!(TokenSequence(vec![13]).validate(&v).is_err());
    }
}
