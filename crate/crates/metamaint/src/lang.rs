//! The seven source languages targeted by the corpus scan.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SourceLang {
    #[serde(rename = "C")]
    C,
    #[serde(rename = "C++")]
    Cpp,
    #[serde(rename = "Java")]
    Java,
    #[serde(rename = "JavaScript")]
    JavaScript,
    #[serde(rename = "Python")]
    Python,
    #[serde(rename = "PHP")]
    Php,
    #[serde(rename = "Ruby")]
    Ruby,
}

impl SourceLang {
    pub const ALL: [SourceLang; 7] = [
        SourceLang::C,
        SourceLang::Cpp,
        SourceLang::Java,
        SourceLang::JavaScript,
        SourceLang::Python,
        SourceLang::Php,
        SourceLang::Ruby,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SourceLang::C => "C",
            SourceLang::Cpp => "C++",
            SourceLang::Java => "Java",
            SourceLang::JavaScript => "JavaScript",
            SourceLang::Python => "Python",
            SourceLang::Php => "PHP",
            SourceLang::Ruby => "Ruby",
        }
    }
}

impl fmt::Display for SourceLang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SourceLang {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "c" => Ok(SourceLang::C),
            "c++" | "cpp" | "cxx" => Ok(SourceLang::Cpp),
            "java" => Ok(SourceLang::Java),
            "javascript" | "js" => Ok(SourceLang::JavaScript),
            "python" | "py" => Ok(SourceLang::Python),
            "php" => Ok(SourceLang::Php),
            "ruby" | "rb" => Ok(SourceLang::Ruby),
            other => Err(format!("unknown language: {other}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_accepts_common_spellings() {
        assert_eq!("C++".parse::<SourceLang>().unwrap(), SourceLang::Cpp);
        assert_eq!("js".parse::<SourceLang>().unwrap(), SourceLang::JavaScript);
        assert_eq!("Ruby".parse::<SourceLang>().unwrap(), SourceLang::Ruby);
        assert!("cobol".parse::<SourceLang>().is_err());
    }

    #[test]
    fn serde_uses_display_names() {
        let json = serde_json::to_string(&SourceLang::Cpp).unwrap();
        assert_eq!(json, "\"C++\"");
        let back: SourceLang = serde_json::from_str(&json).unwrap();
        assert_eq!(back, SourceLang::Cpp);
    }
}
