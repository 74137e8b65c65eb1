//! Harmonization of per-database quality flags.

use super::types::{FlagClass, SourceDb};

/// Maps a database-specific flag onto the unified classes. Flags a database
/// does not define fall into `Questionable`.
pub fn harmonize_flag(source_db: SourceDb, raw_flag: &str) -> FlagClass {
    use FlagClass::*;
    let flag = raw_flag.trim().to_ascii_uppercase();
    let class = match source_db {
        SourceDb::Wod => match flag.as_str() {
            "0" => Some(Good),
            "1" => Some(Questionable),
            "2" | "3" | "4" | "5" | "6" | "7" | "8" | "9" => Some(Bad),
            _ => None,
        },
        SourceDb::Cchdo => match flag.as_str() {
            "2" => Some(Good),
            "0" | "1" | "5" | "8" => Some(Unknown),
            "3" | "6" | "7" => Some(Questionable),
            "4" => Some(Bad),
            "9" => Some(NotSampled),
            _ => None,
        },
        SourceDb::Argo => match flag.as_str() {
            "1" => Some(Good),
            "2" | "3" => Some(Questionable),
            "4" => Some(Bad),
            "0" | "5" => Some(NotSampled),
            _ => None,
        },
        SourceDb::Glodap => match flag.as_str() {
            "2" => Some(Good),
            "0" => Some(Questionable),
            "9" => Some(NotSampled),
            _ => None,
        },
        SourceDb::Idp => match flag.as_str() {
            "1" => Some(Good),
            "0" | "5" => Some(Unknown),
            "2" | "3" | "6" | "7" | "8" | "A" | "B" | "Q" => Some(Questionable),
            "4" => Some(Bad),
            "9" => Some(NotSampled),
            _ => None,
        },
    };
    class.unwrap_or(Questionable)
}
