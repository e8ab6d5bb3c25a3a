use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Whether a demographic category is the reference (unmarked) or not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Markedness {
    Marked,
    Unmarked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Race {
    Asian,
    Black,
    Latino,
    MiddleEastern,
    White,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Gender {
    Man,
    Woman,
    Nonbinary,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown {kind} label {label:?}")]
pub struct LabelError {
    pub kind: &'static str,
    pub label: String,
}

impl Race {
    pub const ALL: [Race; 5] = [
        Race::Asian,
        Race::Black,
        Race::Latino,
        Race::MiddleEastern,
        Race::White,
    ];

    pub fn markedness(self) -> Markedness {
        match self {
            Race::White => Markedness::Unmarked,
            _ => Markedness::Marked,
        }
    }

    /// Stable identifier used in corpus files.
    pub fn label(self) -> &'static str {
        match self {
            Race::Asian => "Asian",
            Race::Black => "Black",
            Race::Latino => "Latino",
            Race::MiddleEastern => "MiddleEastern",
            Race::White => "White",
        }
    }

    /// Human-readable adjective used in prompts and report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            Race::MiddleEastern => "Middle-Eastern",
            other => other.label(),
        }
    }
}

impl Gender {
    pub const ALL: [Gender; 3] = [Gender::Man, Gender::Woman, Gender::Nonbinary];

    pub fn markedness(self) -> Markedness {
        match self {
            Gender::Man => Markedness::Unmarked,
            _ => Markedness::Marked,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Gender::Man => "Man",
            Gender::Woman => "Woman",
            Gender::Nonbinary => "Nonbinary",
        }
    }

    pub fn plural_noun(self) -> &'static str {
        match self {
            Gender::Man => "men",
            Gender::Woman => "women",
            Gender::Nonbinary => "nonbinary people",
        }
    }

    pub fn pronouns(self) -> Pronouns {
        match self {
            Gender::Man => Pronouns {
                subject: "he",
                object: "him",
                possessive: "his",
            },
            Gender::Woman => Pronouns {
                subject: "she",
                object: "her",
                possessive: "her",
            },
            Gender::Nonbinary => Pronouns {
                subject: "they",
                object: "them",
                possessive: "their",
            },
        }
    }
}

impl fmt::Display for Race {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Race {
    type Err = LabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "asian" => Ok(Race::Asian),
            "black" => Ok(Race::Black),
            "latino" => Ok(Race::Latino),
            "middleeastern" | "me" => Ok(Race::MiddleEastern),
            "white" => Ok(Race::White),
            _ => Err(LabelError {
                kind: "race",
                label: s.to_string(),
            }),
        }
    }
}

impl FromStr for Gender {
    type Err = LabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "man" | "m" => Ok(Gender::Man),
            "woman" | "w" => Ok(Gender::Woman),
            "nonbinary" | "non-binary" | "n" | "nb" => Ok(Gender::Nonbinary),
            _ => Err(LabelError {
                kind: "gender",
                label: s.to_string(),
            }),
        }
    }
}

/// Subject, object and possessive pronoun forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pronouns {
    pub subject: &'static str,
    pub object: &'static str,
    pub possessive: &'static str,
}

/// A demographic persona: one cell of the race × gender matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupSpec {
    pub race: Race,
    pub gender: Gender,
}

impl GroupSpec {
    pub const fn new(race: Race, gender: Gender) -> Self {
        GroupSpec { race, gender }
    }

    /// All 15 personas in (race, gender) order.
    pub fn all() -> Vec<GroupSpec> {
        Race::ALL
            .iter()
            .flat_map(|&race| {
                Gender::ALL
                    .iter()
                    .map(move |&gender| GroupSpec { race, gender })
            })
            .collect()
    }

    pub fn race_markedness(&self) -> Markedness {
        self.race.markedness()
    }

    pub fn gender_markedness(&self) -> Markedness {
        self.gender.markedness()
    }

    pub fn pronouns(&self) -> Pronouns {
        self.gender.pronouns()
    }

    /// Phrase substituted into the prompt, e.g. "Asian women".
    pub fn phrase(&self) -> String {
        format!("{} {}", self.race.display_name(), self.gender.plural_noun())
    }

    /// Short file-name safe slug, e.g. "asian_woman".
    pub fn slug(&self) -> String {
        format!(
            "{}_{}",
            self.race.label().to_ascii_lowercase(),
            self.gender.label().to_ascii_lowercase()
        )
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.race.display_name(), self.gender.label())
    }
}

impl FromStr for GroupSpec {
    type Err = LabelError;

    /// Parses "Race/Gender", "Race:Gender" or "race_gender".
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (race, gender) = s
            .rsplit_once(['/', ':', '_', ' '])
            .ok_or_else(|| LabelError {
                kind: "group",
                label: s.to_string(),
            })?;
        Ok(GroupSpec {
            race: race.parse()?,
            gender: gender.parse()?,
        })
    }
}

/// Serialized as its slug.
impl Serialize for GroupSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.slug())
    }
}

impl<'de> Deserialize<'de> for GroupSpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
