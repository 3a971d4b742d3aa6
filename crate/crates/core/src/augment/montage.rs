use std::collections::HashSet;

use super::AugmentError;

const SEED62: &str = include_str!("../../data/montage_seed62.csv");
const DEAP32: &str = include_str!("../../data/montage_deap32.csv");

/// Electrode names and unit-sphere positions (x right, y nasion, z vertex).
///
/// The bundled tables place each 10-10 label on an idealised grid: the row
/// letter fixes a sagittal angle in 18° steps from the vertex (Fp 72°, AF 54°,
/// F 36°, FC/FT 18°, C/T 0°, then negative towards O at −72° and CB at −90°),
/// and the electrode number a lateral angle of 18° per step (odd left, even
/// right). Positions are `(sin b, cos b sin a, cos b cos a)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Montage {
    names: Vec<String>,
    coords: Vec<[f64; 3]>,
}

impl Montage {
    pub fn new(names: Vec<String>, coords: Vec<[f64; 3]>) -> Result<Self, AugmentError> {
        if names.len() != coords.len() || names.is_empty() {
            return Err(AugmentError::Montage(format!("{} names for {} positions", names.len(), coords.len())));
        }
        let mut seen = HashSet::new();
        for (n, c) in names.iter().zip(&coords) {
            if !seen.insert(n.to_ascii_uppercase()) {
                return Err(AugmentError::Montage(format!("electrode {n} appears twice")));
            }
            let norm = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
            if (norm - 1.0).abs() > 1e-6 {
                return Err(AugmentError::Montage(format!("electrode {n} has radius {norm}")));
            }
        }
        Ok(Self { names, coords })
    }

    /// Reads `name,x,y,z` rows with a header line.
    pub fn from_csv(reader: impl std::io::Read) -> Result<Self, AugmentError> {
        let mut r = csv::Reader::from_reader(reader);
        let mut names = Vec::new();
        let mut coords = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            if rec.len() != 4 {
                return Err(AugmentError::Montage(format!("row {} has {} fields", names.len() + 1, rec.len())));
            }
            let mut c = [0.0; 3];
            for (k, v) in c.iter_mut().enumerate() {
                *v = rec[k + 1]
                    .trim()
                    .parse()
                    .map_err(|_| AugmentError::Montage(format!("bad coordinate `{}` for {}", &rec[k + 1], &rec[0])))?;
            }
            names.push(rec[0].trim().to_string());
            coords.push(c);
        }
        Self::new(names, coords)
    }

    /// 62-electrode SEED layout.
    pub fn seed62() -> Self {
        Self::from_csv(SEED62.as_bytes()).expect("bundled montage")
    }

    /// 32-electrode DEAP layout.
    pub fn deap32() -> Self {
        Self::from_csv(DEAP32.as_bytes()).expect("bundled montage")
    }

    /// Bundled montage with `channels` electrodes.
    pub fn for_channels(channels: usize) -> Result<Self, AugmentError> {
        match channels {
            62 => Ok(Self::seed62()),
            32 => Ok(Self::deap32()),
            other => Err(AugmentError::Montage(format!("no bundled montage has {other} electrodes"))),
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn coords(&self) -> &[[f64; 3]] {
        &self.coords
    }
}
