//! VOC class vocabulary. Index 0 is background; 1..=20 follow the
//! alphabetical VOC ordering.

use crate::raster::NUM_CLASSES;

pub const CLASS_NAMES: [&str; NUM_CLASSES] = [
    "background",
    "aeroplane",
    "bicycle",
    "bird",
    "boat",
    "bottle",
    "bus",
    "car",
    "cat",
    "chair",
    "cow",
    "diningtable",
    "dog",
    "horse",
    "motorbike",
    "person",
    "pottedplant",
    "sheep",
    "sofa",
    "train",
    "tvmonitor",
];

/// Number of object classes (background excluded).
pub const NUM_OBJECT_CLASSES: usize = NUM_CLASSES - 1;

pub const BACKGROUND: u8 = 0;
pub const CAR: u8 = 7;
pub const CAT: u8 = 8;
pub const DOG: u8 = 12;
pub const PERSON: u8 = 15;

pub fn class_index(name: &str) -> Option<u8> {
    CLASS_NAMES
        .iter()
        .position(|&n| n == name)
        .map(|i| i as u8)
}

pub fn class_name(index: u8) -> Option<&'static str> {
    CLASS_NAMES.get(index as usize).copied()
}
