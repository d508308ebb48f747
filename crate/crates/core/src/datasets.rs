//! Embedded real-world count datasets (all with unit time gaps).

use crate::error::{Error, Result};
use crate::model::IncrementData;

/// Deaths from horse kicks per corps-year in the Prussian cavalry: counts of
/// 0, 1, 2, 3, 4 deaths (n = 200).
pub const HORSE_KICK_COUNTS: [usize; 5] = [109, 65, 22, 3, 1];

/// Plants per plot: counts of plots holding 0..=12 plants (n = 500).
pub const PLANT_COUNTS: [usize; 13] = [274, 71, 58, 36, 20, 12, 10, 7, 6, 3, 0, 2, 1];

pub const NAMES: [&str; 2] = ["horse_kick", "plant"];

pub fn horse_kick() -> IncrementData {
    IncrementData::from_counts(&HORSE_KICK_COUNTS, 1.0).expect("embedded data is valid")
}

pub fn plant() -> IncrementData {
    IncrementData::from_counts(&PLANT_COUNTS, 1.0).expect("embedded data is valid")
}

pub fn by_name(name: &str) -> Result<IncrementData> {
    match name {
        "horse_kick" | "horse-kick" => Ok(horse_kick()),
        "plant" => Ok(plant()),
        other => Err(Error::Input(format!(
            "unknown dataset `{other}` (available: {})",
            NAMES.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        assert_eq!(horse_kick().len(), 200);
        assert_eq!(plant().len(), 500);
        assert_eq!(plant().max_z(), 12);
        assert_eq!(horse_kick().zs().filter(|&z| z == 1).count(), 65);
        assert!(by_name("nope").is_err());
    }
}
