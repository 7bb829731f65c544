//! Finite alphabets and letter encoding.
//!
//! Letters are single ASCII bytes. Internally every letter is addressed by its
//! ordinal (`0..len`), and all tables in the crate are indexed by ordinal.

use std::fmt;

use crate::error::{Error, Result};

/// The 20 standard amino acids, in the column order of the NCBI BLOSUM files.
pub const PROTEIN_LETTERS: &str = "ARNDCQEGHILKMFPSTWYV";

/// Marker for a byte that has no ordinal in the alphabet.
pub const INVALID: u8 = u8::MAX;

#[derive(Clone, PartialEq, Eq)]
pub struct Alphabet {
    letters: Vec<u8>,
    ordinal: [u8; 256],
}

impl Alphabet {
    /// Builds an alphabet from two or more distinct printable ASCII letters.
    ///
    /// `,` and `;` are reserved by the partition grammar and rejected.
    pub fn new(letters: &str) -> Result<Self> {
        let bytes = letters.as_bytes();
        if bytes.len() < 2 {
            return Err(Error::Alphabet("an alphabet needs at least two letters".into()));
        }
        if bytes.len() >= INVALID as usize {
            return Err(Error::Alphabet(format!(
                "{} letters; at most {} are supported",
                bytes.len(),
                INVALID as usize - 1
            )));
        }
        let mut ordinal = [INVALID; 256];
        for (i, &b) in bytes.iter().enumerate() {
            if !b.is_ascii_graphic() || b == b',' || b == b';' {
                return Err(Error::Alphabet(format!("unusable letter {:?}", b as char)));
            }
            if ordinal[b as usize] != INVALID {
                return Err(Error::Alphabet(format!("letter {:?} repeated", b as char)));
            }
            ordinal[b as usize] = i as u8;
        }
        for (i, &b) in bytes.iter().enumerate() {
            let other = if b.is_ascii_lowercase() {
                b.to_ascii_uppercase()
            } else {
                b.to_ascii_lowercase()
            };
            if !bytes.contains(&other) {
                ordinal[other as usize] = i as u8;
            }
        }
        Ok(Self {
            letters: bytes.to_vec(),
            ordinal,
        })
    }

    pub fn protein() -> Self {
        Self::new(PROTEIN_LETTERS).expect("standard alphabet is valid")
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[u8] {
        &self.letters
    }

    pub fn as_str(&self) -> &str {
        std::str::from_utf8(&self.letters).expect("letters are ASCII")
    }

    /// Ordinal of `letter`, or `None` when the byte is not a member.
    #[inline]
    pub fn code(&self, letter: u8) -> Option<u8> {
        match self.ordinal[letter as usize] {
            INVALID => None,
            c => Some(c),
        }
    }

    /// Ordinal of `letter` or [`INVALID`].
    #[inline]
    pub fn code_or_invalid(&self, letter: u8) -> u8 {
        self.ordinal[letter as usize]
    }

    #[inline]
    pub fn letter(&self, code: u8) -> u8 {
        self.letters[code as usize]
    }

    pub fn contains(&self, letter: u8) -> bool {
        self.code(letter).is_some()
    }

    /// Encodes a whole string, failing on the first foreign letter.
    pub fn encode(&self, text: &[u8]) -> Result<Vec<u8>> {
        text.iter()
            .map(|&b| self.code(b).ok_or(Error::UnknownLetter { letter: b as char }))
            .collect()
    }

    pub fn decode(&self, codes: &[u8]) -> String {
        codes
            .iter()
            .map(|&c| if c == INVALID { 'X' } else { self.letter(c) as char })
            .collect()
    }
}

impl fmt::Debug for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Alphabet").field(&self.as_str()).finish()
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
