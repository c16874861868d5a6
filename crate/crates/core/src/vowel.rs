use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// The eight vowel categories of the corpus: /i y e ø ɛ a o u/.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Vowel {
    I,
    Y,
    E,
    Oe,
    Eh,
    A,
    O,
    U,
}

impl Vowel {
    pub const ALL: [Vowel; 8] = [
        Vowel::I,
        Vowel::Y,
        Vowel::E,
        Vowel::Oe,
        Vowel::Eh,
        Vowel::A,
        Vowel::O,
        Vowel::U,
    ];

    /// IPA symbol, used as the label in every output file.
    pub fn symbol(self) -> &'static str {
        match self {
            Vowel::I => "i",
            Vowel::Y => "y",
            Vowel::E => "e",
            Vowel::Oe => "ø",
            Vowel::Eh => "ɛ",
            Vowel::A => "a",
            Vowel::O => "o",
            Vowel::U => "u",
        }
    }

    /// ASCII code, safe for file names.
    pub fn code(self) -> &'static str {
        match self {
            Vowel::I => "i",
            Vowel::Y => "y",
            Vowel::E => "e",
            Vowel::Oe => "oe",
            Vowel::Eh => "eh",
            Vowel::A => "a",
            Vowel::O => "o",
            Vowel::U => "u",
        }
    }
}

impl fmt::Display for Vowel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Vowel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "i" => Ok(Vowel::I),
            "y" => Ok(Vowel::Y),
            "e" => Ok(Vowel::E),
            "ø" | "oe" | "2" => Ok(Vowel::Oe),
            // IPA open-mid e, the Greek epsilon look-alike and ASCII spellings
            "ɛ" | "ε" | "eh" | "E" => Ok(Vowel::Eh),
            "a" => Ok(Vowel::A),
            "o" => Ok(Vowel::O),
            "u" => Ok(Vowel::U),
            other => Err(Error::UnknownVowel(other.to_string())),
        }
    }
}

impl Serialize for Vowel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.symbol())
    }
}

impl<'de> Deserialize<'de> for Vowel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbols_and_codes_parse_back() {
        for v in Vowel::ALL {
            assert_eq!(v.symbol().parse::<Vowel>().unwrap(), v);
            assert_eq!(v.code().parse::<Vowel>().unwrap(), v);
        }
        assert_eq!("ε".parse::<Vowel>().unwrap(), Vowel::Eh);
        assert!("x".parse::<Vowel>().is_err());
    }
}
