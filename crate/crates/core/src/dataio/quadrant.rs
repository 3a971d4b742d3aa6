use super::DataError;

/// Valence/arousal quadrant. High means a rating strictly above 5.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Quadrant {
    Hvha = 0,
    Hvla = 1,
    Lvha = 2,
    Lvla = 3,
}

impl Quadrant {
    pub fn label(self) -> u32 {
        self as u32
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Quadrant::Hvha => "HVHA",
            Quadrant::Hvla => "HVLA",
            Quadrant::Lvha => "LVHA",
            Quadrant::Lvla => "LVLA",
        }
    }
}

/// Maps 1–9 valence and arousal ratings to a quadrant.
pub fn deap_quadrant(valence: f64, arousal: f64) -> Result<Quadrant, DataError> {
    for r in [valence, arousal] {
        if !(1.0..=9.0).contains(&r) {
            return Err(DataError::BadRating(r));
        }
    }
    Ok(match (valence > 5.0, arousal > 5.0) {
        (true, true) => Quadrant::Hvha,
        (true, false) => Quadrant::Hvla,
        (false, true) => Quadrant::Lvha,
        (false, false) => Quadrant::Lvla,
    })
}
