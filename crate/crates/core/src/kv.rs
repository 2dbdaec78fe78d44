//! Line-oriented `key = value` text with optional `[section]` headers and
//! `#` comments. Shared by the config, LUT bank and mapping files.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Pair {
    pub section: Option<String>,
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    pub line: usize,
}

/// Returns pairs in file order. Empty sections are reported through
/// [`parse_sections`].
pub fn parse_pairs(text: &str, origin: &Path) -> Result<Vec<Pair>> {
    Ok(parse_sections(text, origin)?.1)
}

pub fn parse_sections(text: &str, origin: &Path) -> Result<(Vec<Section>, Vec<Pair>)> {
    let mut sections = Vec::new();
    let mut pairs = Vec::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| Error::parse(origin, line_no, "unterminated section header"))?
                .trim();
            if name.is_empty() {
                return Err(Error::parse(origin, line_no, "empty section name"));
            }
            sections.push(Section {
                name: name.to_string(),
                line: line_no,
            });
            current = Some(name.to_string());
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(origin, line_no, format!("expected `key = value`, got {line:?}")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::parse(origin, line_no, "empty key"));
        }
        pairs.push(Pair {
            section: current.clone(),
            key: key.to_string(),
            value: value.trim().to_string(),
            line: line_no,
        });
    }
    Ok((sections, pairs))
}
