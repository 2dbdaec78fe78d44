//! Image-context detection: per-class area features fed to a small MLP.

mod dataset;
mod mapping;
pub mod mlp;
mod model;

use std::fmt;
use std::str::FromStr;

use crate::classes::NUM_OBJECT_CLASSES;
use crate::error::{Error, Result};
use crate::raster::LabelMap;

pub use dataset::{ContextDataset, DatasetSplit};
pub use mapping::ContextMapping;
pub use model::{classify, evaluate, train, train_with_progress, ContextModel, EpochStats, Evaluation, TrainParams, TrainingMeta};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Context {
    Pet,
    OtherAnimals,
    Vehicle,
    Indoor,
    Others,
}

impl Context {
    pub const COUNT: usize = 5;
    pub const ALL: [Context; 5] = [
        Context::Pet,
        Context::OtherAnimals,
        Context::Vehicle,
        Context::Indoor,
        Context::Others,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Context> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Context::Pet => "pet",
            Context::OtherAnimals => "other_animals",
            Context::Vehicle => "vehicle",
            Context::Indoor => "indoor",
            Context::Others => "others",
        }
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Context {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| !matches!(c, '_' | '-' | ' '))
            .flat_map(char::to_lowercase)
            .collect();
        match key.as_str() {
            "pet" => Ok(Context::Pet),
            "otheranimals" => Ok(Context::OtherAnimals),
            "vehicle" => Ok(Context::Vehicle),
            "indoor" => Ok(Context::Indoor),
            "others" => Ok(Context::Others),
            _ => Err(Error::InvalidParameter(format!("unknown context {s:?}"))),
        }
    }
}

/// Fraction of non-VOID pixels covered by each object class, in class order
/// (aeroplane first). Background is left implicit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaFeatures(pub [f64; NUM_OBJECT_CLASSES]);

impl AreaFeatures {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Area of object class `class` (1..=20).
    pub fn area(&self, class: u8) -> f64 {
        self.0[class as usize - 1]
    }
}

pub fn extract_area_features(labels: &LabelMap) -> Result<AreaFeatures> {
    let (counts, void) = labels.histogram();
    let valid = labels.labels().len() - void;
    if valid == 0 {
        return Err(Error::EmptyLabelMap);
    }
    let mut areas = [0.0; NUM_OBJECT_CLASSES];
    for (a, &c) in areas.iter_mut().zip(&counts[1..]) {
        *a = c as f64 / valid as f64;
    }
    Ok(AreaFeatures(areas))
}
