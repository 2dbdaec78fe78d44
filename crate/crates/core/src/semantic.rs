//! Semantic saliency: class labels mapped through a per-context importance
//! table.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::classes::{class_index, BACKGROUND, CLASS_NAMES, PERSON};
use crate::context::{classify, Context, ContextMapping, ContextModel};
use crate::error::{Error, Result};
use crate::kv::parse_sections;
use crate::raster::{LabelMap, SaliencyMap, NUM_CLASSES, VOID};

/// Importance weight per class index plus one for VOID pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyLut {
    name: String,
    weights: [f64; NUM_CLASSES],
    void_weight: f64,
}

impl SaliencyLut {
    pub fn new(name: impl Into<String>, weights: [f64; NUM_CLASSES], void_weight: f64) -> Result<Self> {
        let name = name.into();
        for (i, &w) in weights.iter().chain(std::iter::once(&void_weight)).enumerate() {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::InvalidParameter(format!(
                    "LUT {name}: weight {w} for entry {i} outside [0,1]"
                )));
            }
        }
        Ok(Self {
            name,
            weights,
            void_weight,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn weights(&self) -> &[f64; NUM_CLASSES] {
        &self.weights
    }

    pub fn void_weight(&self) -> f64 {
        self.void_weight
    }

    #[inline]
    pub fn lookup(&self, label: u8) -> f64 {
        if label == VOID {
            self.void_weight
        } else {
            self.weights[label as usize]
        }
    }

    /// Default table for `ctx`: the context's own classes 1.0, person 0.8,
    /// other objects 0.4, background 0.1, VOID 0.
    pub fn default_for(ctx: Context, mapping: &ContextMapping) -> Self {
        let mut weights = [0.4; NUM_CLASSES];
        weights[BACKGROUND as usize] = 0.1;
        weights[PERSON as usize] = 0.8;
        for class in mapping.classes_of(ctx) {
            weights[class as usize] = 1.0;
        }
        Self {
            name: ctx.name().to_string(),
            weights,
            void_weight: 0.0,
        }
    }
}

/// Section entries by key, with their line number and raw value.
type Entries = BTreeMap<String, (usize, String)>;

/// The five context tables plus an optional user table.
#[derive(Debug, Clone, PartialEq)]
pub struct LutBank {
    contexts: [SaliencyLut; Context::COUNT],
    user: Option<SaliencyLut>,
}

const USER_SECTION: &str = "user";

impl LutBank {
    pub fn new(contexts: [SaliencyLut; Context::COUNT], user: Option<SaliencyLut>) -> Self {
        Self { contexts, user }
    }

    pub fn default_with(mapping: &ContextMapping) -> Self {
        Self {
            contexts: Context::ALL.map(|c| SaliencyLut::default_for(c, mapping)),
            user: None,
        }
    }

    pub fn context_lut(&self, ctx: Context) -> &SaliencyLut {
        &self.contexts[ctx.index()]
    }

    pub fn user_lut(&self) -> Option<&SaliencyLut> {
        self.user.as_ref()
    }

    pub fn with_user(mut self, lut: SaliencyLut) -> Self {
        self.user = Some(lut);
        self
    }

    /// Parses `[context]` sections (plus optional `[user]`), each listing
    /// every class name and `void`. Nothing is defaulted.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let (sections, pairs) = parse_sections(text, origin)?;
        let mut tables: BTreeMap<String, (usize, Entries)> = BTreeMap::new();
        for s in &sections {
            let key = canonical_section(&s.name, origin, s.line)?;
            if tables.insert(key, (s.line, BTreeMap::new())).is_some() {
                return Err(Error::parse(origin, s.line, format!("duplicate section [{}]", s.name)));
            }
        }
        for p in pairs {
            let section = p
                .section
                .as_deref()
                .ok_or_else(|| Error::parse(origin, p.line, "entry outside any section"))?;
            let key = canonical_section(section, origin, p.line)?;
            let entries = &mut tables.get_mut(&key).expect("declared").1;
            if entries.insert(p.key.clone(), (p.line, p.value)).is_some() {
                return Err(Error::parse(origin, p.line, format!("duplicate key {:?}", p.key)));
            }
        }

        let mut build = |key: &str| -> Result<Option<SaliencyLut>> {
            let Some((line, entries)) = tables.remove(key) else {
                return Ok(None);
            };
            let mut weights = [f64::NAN; NUM_CLASSES];
            let mut void = None;
            for (name, (entry_line, value)) in &entries {
                let w: f64 = value
                    .parse()
                    .ok()
                    .filter(|w: &f64| (0.0..=1.0).contains(w))
                    .ok_or_else(|| Error::parse(origin, *entry_line, format!("weight {value:?} not in [0,1]")))?;
                if name == "void" {
                    void = Some(w);
                } else if let Some(c) = class_index(name) {
                    weights[c as usize] = w;
                } else {
                    return Err(Error::parse(origin, *entry_line, format!("unknown class {name:?}")));
                }
            }
            if let Some(missing) = weights.iter().position(|w| w.is_nan()) {
                return Err(Error::parse(
                    origin,
                    line,
                    format!("[{key}] is missing {:?}", CLASS_NAMES[missing]),
                ));
            }
            let void = void.ok_or_else(|| Error::parse(origin, line, format!("[{key}] is missing \"void\"")))?;
            SaliencyLut::new(key, weights, void).map(Some)
        };

        let mut contexts = Vec::with_capacity(Context::COUNT);
        for ctx in Context::ALL {
            contexts.push(build(ctx.name())?.ok_or_else(|| {
                Error::parse(origin, 0, format!("missing section [{}]", ctx.name()))
            })?);
        }
        let user = build(USER_SECTION)?;
        Ok(Self {
            contexts: contexts.try_into().expect("five contexts"),
            user,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let sections = self
            .contexts
            .iter()
            .zip(Context::ALL.iter().map(|c| c.name()))
            .chain(self.user.iter().map(|u| (u, USER_SECTION)));
        for (i, (lut, name)) in sections.enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "[{name}]");
            for (class, w) in CLASS_NAMES.iter().zip(lut.weights.iter()) {
                let _ = writeln!(out, "{class} = {w}");
            }
            let _ = writeln!(out, "void = {}", lut.void_weight);
        }
        out
    }
}

fn canonical_section(name: &str, origin: &Path, line: usize) -> Result<String> {
    if name.eq_ignore_ascii_case(USER_SECTION) {
        return Ok(USER_SECTION.to_string());
    }
    name.parse::<Context>()
        .map(|c| c.name().to_string())
        .map_err(|_| Error::parse(origin, line, format!("unknown section [{name}]")))
}

pub fn apply_lut(labels: &LabelMap, lut: &SaliencyLut) -> SaliencyMap {
    let (w, h) = labels.dims();
    let values = labels.labels().iter().map(|&l| lut.lookup(l)).collect();
    SaliencyMap::from_parts(w, h, values)
}

pub fn select_lut(bank: &LutBank, ctx: Context, user_override: bool) -> Result<&SaliencyLut> {
    if user_override {
        bank.user_lut().ok_or(Error::MissingUserLut)
    } else {
        Ok(bank.context_lut(ctx))
    }
}

/// Detects the image context and applies the matching (or user) table.
pub fn semantic_saliency(
    labels: &LabelMap,
    bank: &LutBank,
    model: &ContextModel,
    user_override: bool,
) -> Result<(SaliencyMap, Context)> {
    let ctx = classify(model, labels)?;
    let lut = select_lut(bank, ctx, user_override)?;
    Ok((apply_lut(labels, lut), ctx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::{CAR, DOG};

    fn bank() -> LutBank {
        LutBank::default_with(&ContextMapping::default())
    }

    #[test]
    fn default_tables() {
        let b = bank();
        let pet = b.context_lut(Context::Pet);
        assert_eq!(pet.lookup(DOG), 1.0);
        assert_eq!(pet.lookup(CAR), 0.4);
        assert_eq!(pet.lookup(PERSON), 0.8);
        assert_eq!(pet.lookup(0), 0.1);
        assert_eq!(pet.lookup(VOID), 0.0);
        // person is the Others context's own class
        assert_eq!(b.context_lut(Context::Others).lookup(PERSON), 1.0);
    }

    #[test]
    fn lut_weights_validated() {
        assert!(SaliencyLut::new("x", [0.5; NUM_CLASSES], 1.5).is_err());
        let mut w = [0.5; NUM_CLASSES];
        w[3] = -0.1;
        assert!(SaliencyLut::new("x", w, 0.0).is_err());
    }

    #[test]
    fn apply_lut_examples() {
        let mut w = [0.4; NUM_CLASSES];
        w[0] = 0.1;
        let lut = SaliencyLut::new("t", w, 0.0).unwrap();
        let m = apply_lut(&LabelMap::filled(4, 3, 0).unwrap(), &lut);
        assert!(m.values().iter().all(|&v| v == 0.1));

        let mut ind = [0.0; NUM_CLASSES];
        ind[DOG as usize] = 1.0;
        let lut = SaliencyLut::new("dog", ind, 0.0).unwrap();
        let labels = LabelMap::new(3, 1, vec![DOG, 0, VOID]).unwrap();
        assert_eq!(apply_lut(&labels, &lut).values(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn select_lut_precedence() {
        let b = bank();
        assert_eq!(select_lut(&b, Context::Vehicle, false).unwrap().name(), "vehicle");
        assert!(matches!(select_lut(&b, Context::Vehicle, true), Err(Error::MissingUserLut)));
        let user = SaliencyLut::new("user", [0.7; NUM_CLASSES], 0.0).unwrap();
        let b = b.with_user(user.clone());
        assert_eq!(select_lut(&b, Context::Vehicle, true).unwrap(), &user);
        assert_eq!(select_lut(&b, Context::Pet, true).unwrap(), &user);
    }

    #[test]
    fn bank_text_round_trip() {
        let b = bank().with_user(SaliencyLut::new("user", [0.25; NUM_CLASSES], 0.5).unwrap());
        let back = LutBank::parse(&b.to_text(), Path::new("bank")).unwrap();
        assert_eq!(back, b);
        let plain = bank();
        assert_eq!(LutBank::parse(&plain.to_text(), Path::new("bank")).unwrap().user_lut(), None);
    }

    #[test]
    fn bank_parse_errors() {
        let text = bank().to_text();
        let p = Path::new("bank");
        assert!(LutBank::parse(&text.replacen("dog = 1\n", "", 1), p).is_err());
        assert!(LutBank::parse(&text.replacen("void = 0\n", "", 1), p).is_err());
        assert!(LutBank::parse(&text.replacen("[indoor]", "[kitchen]", 1), p).is_err());
        assert!(LutBank::parse(&text.replacen("dog = 1", "dog = 2", 1), p).is_err());
        assert!(LutBank::parse(&text.replacen("dog = 1", "doge = 1", 1), p).is_err());
        assert!(LutBank::parse(&format!("cat = 1\n{text}"), p).is_err());
        let without_vehicle: String = text.split("\n\n").filter(|s| !s.starts_with("[vehicle]")).collect::<Vec<_>>().join("\n\n");
        assert!(LutBank::parse(&without_vehicle, p).is_err());
    }

    #[test]
    fn semantic_saliency_on_background() {
        let b = bank();
        let model = ContextModel::area_vote(&ContextMapping::default());
        let labels = LabelMap::filled(5, 5, 0).unwrap();
        let (m, ctx) = semantic_saliency(&labels, &b, &model, false).unwrap();
        assert_eq!(ctx, Context::Others);
        assert!(m.values().iter().all(|&v| v == 0.1));
        assert_eq!(semantic_saliency(&labels, &b, &model, false).unwrap(), (m, ctx));
    }
}
