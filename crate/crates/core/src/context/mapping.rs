use std::fmt::Write as _;
use std::path::Path;

use super::Context;
use crate::classes::{class_index, CLASS_NAMES, NUM_OBJECT_CLASSES};
use crate::error::{Error, Result};
use crate::kv::parse_pairs;

/// Assignment of each of the 20 object classes to one context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextMapping {
    contexts: [Context; NUM_OBJECT_CLASSES],
}

impl Default for ContextMapping {
    fn default() -> Self {
        use Context::*;
        let mut contexts = [Others; NUM_OBJECT_CLASSES];
        let groups: [(&[&str], Context); 5] = [
            (&["cat", "dog"], Pet),
            (&["bird", "cow", "horse", "sheep"], OtherAnimals),
            (
                &["aeroplane", "bicycle", "boat", "bus", "car", "motorbike", "train"],
                Vehicle,
            ),
            (
                &["bottle", "chair", "diningtable", "pottedplant", "sofa", "tvmonitor"],
                Indoor,
            ),
            (&["person"], Others),
        ];
        for (names, ctx) in groups {
            for name in names {
                let idx = class_index(name).expect("known class") as usize;
                contexts[idx - 1] = ctx;
            }
        }
        Self { contexts }
    }
}

impl ContextMapping {
    pub fn new(contexts: [Context; NUM_OBJECT_CLASSES]) -> Self {
        Self { contexts }
    }

    /// Context of object class `class` (1..=20).
    pub fn context_of(&self, class: u8) -> Context {
        assert!((1..=NUM_OBJECT_CLASSES as u8).contains(&class), "not an object class: {class}");
        self.contexts[class as usize - 1]
    }

    pub fn classes_of(&self, ctx: Context) -> impl Iterator<Item = u8> + '_ {
        (1..=NUM_OBJECT_CLASSES as u8).filter(move |&c| self.context_of(c) == ctx)
    }

    /// Parses `class_name = context_name` lines. All 20 classes must appear
    /// exactly once.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut slots: [Option<Context>; NUM_OBJECT_CLASSES] = [None; NUM_OBJECT_CLASSES];
        for pair in parse_pairs(text, origin)? {
            if pair.section.is_some() {
                return Err(Error::parse(origin, pair.line, "sections are not allowed in a mapping file"));
            }
            let class = match class_index(&pair.key) {
                Some(c) if c > 0 => c,
                _ => return Err(Error::parse(origin, pair.line, format!("unknown object class {:?}", pair.key))),
            };
            let ctx: Context = pair
                .value
                .parse()
                .map_err(|_| Error::parse(origin, pair.line, format!("unknown context {:?}", pair.value)))?;
            let slot = &mut slots[class as usize - 1];
            if slot.is_some() {
                return Err(Error::parse(origin, pair.line, format!("duplicate class {:?}", pair.key)));
            }
            *slot = Some(ctx);
        }
        let mut contexts = [Context::Others; NUM_OBJECT_CLASSES];
        for (i, slot) in slots.iter().enumerate() {
            contexts[i] = slot.ok_or_else(|| {
                Error::parse(origin, 0, format!("missing class {:?}", CLASS_NAMES[i + 1]))
            })?;
        }
        Ok(Self { contexts })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for class in 1..=NUM_OBJECT_CLASSES as u8 {
            let _ = writeln!(out, "{} = {}", CLASS_NAMES[class as usize], self.context_of(class));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::{CAR, DOG, PERSON};

    #[test]
    fn default_groups() {
        let m = ContextMapping::default();
        assert_eq!(m.context_of(DOG), Context::Pet);
        assert_eq!(m.context_of(CAR), Context::Vehicle);
        assert_eq!(m.context_of(PERSON), Context::Others);
        let sizes: Vec<usize> = Context::ALL.iter().map(|&c| m.classes_of(c).count()).collect();
        assert_eq!(sizes, vec![2, 4, 7, 6, 1]);
    }

    #[test]
    fn text_round_trip() {
        let m = ContextMapping::default();
        assert_eq!(ContextMapping::parse(&m.to_text(), Path::new("m")).unwrap(), m);
    }

    #[test]
    fn parse_errors() {
        let full = ContextMapping::default().to_text();
        let missing: String = full.lines().skip(1).map(|l| format!("{l}\n")).collect();
        assert!(ContextMapping::parse(&missing, Path::new("m")).is_err());
        let dup = format!("{full}dog = pet\n");
        assert!(ContextMapping::parse(&dup, Path::new("m")).is_err());
        let bad = full.replace("dog = pet", "dog = plants");
        assert!(ContextMapping::parse(&bad, Path::new("m")).is_err());
        let bg = format!("{full}background = others\n");
        assert!(ContextMapping::parse(&bg, Path::new("m")).is_err());
    }
}
