//! Figure recipes. Each id maps to exactly one campaign file under
//! `campaigns/`, embedded at build time.

use crate::campaign::{Campaign, CampaignError};

macro_rules! recipes {
    ($($id:literal),* $(,)?) => {
        /// `(figure id, campaign file contents)`.
        pub const FIGURES: &[(&str, &str)] = &[
            $(($id, include_str!(concat!("../../../campaigns/", $id, ".toml")))),*
        ];
    };
}

recipes![
    "complexity-ratio",
    "nme-downlink-snr",
    "nme-uplink-kappa",
    "nme-uplink-paths",
    "nme-uplink-snr",
    "nmse-kappa",
    "nmse-paths",
    "nmse-size",
    "positioning-kappa",
    "positioning-snr",
    "power-ratio-kappa",
    "power-ratio-size",
    "se-kappa",
    "se-snr",
    "separation-nmse",
];

pub fn figure_ids() -> impl Iterator<Item = &'static str> {
    FIGURES.iter().map(|(id, _)| *id)
}

pub fn figure_campaign(id: &str) -> Result<Campaign, CampaignError> {
    let (_, text) = FIGURES
        .iter()
        .find(|(f, _)| *f == id)
        .ok_or_else(|| CampaignError::Invalid(format!("unknown figure {id}; known: {}", figure_ids().collect::<Vec<_>>().join(", "))))?;
    Campaign::from_toml(text)
}
