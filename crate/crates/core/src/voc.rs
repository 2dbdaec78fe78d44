//! PASCAL VOC segmentation corpora: split lists, palette label PNGs and
//! context ground truth.
//!
//! Expected layout under the corpus root:
//!
//! ```text
//! JPEGImages/<id>.jpg
//! SegmentationClass/<id>.png
//! ImageSets/Segmentation/<split>.txt
//! ```

use std::fmt;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::context::{extract_area_features, Context, ContextDataset, ContextMapping, DatasetSplit};
use crate::error::{Error, Result};
use crate::raster::{LabelMap, NUM_CLASSES, VOID};

/// Per-context training image counts reported for the reference corpus.
pub const REFERENCE_TRAIN_CONTEXT_COUNTS: [usize; Context::COUNT] = [243, 284, 549, 236, 152];
/// Per-context test image counts reported for the reference corpus.
pub const REFERENCE_TEST_CONTEXT_COUNTS: [usize; Context::COUNT] = [240, 297, 537, 227, 148];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VocSplit {
    Train,
    Val,
    Trainval,
}

impl VocSplit {
    pub fn name(self) -> &'static str {
        match self {
            VocSplit::Train => "train",
            VocSplit::Val => "val",
            VocSplit::Trainval => "trainval",
        }
    }

    /// Image count of this split in the VOC2011 segmentation release.
    pub fn reference_size(self) -> usize {
        match self {
            VocSplit::Train => 1464,
            VocSplit::Val => 1449,
            VocSplit::Trainval => 2913,
        }
    }

    /// Role of the split for context training: val is held out.
    pub fn dataset_split(self) -> DatasetSplit {
        match self {
            VocSplit::Val => DatasetSplit::Test,
            VocSplit::Train | VocSplit::Trainval => DatasetSplit::Train,
        }
    }
}

impl fmt::Display for VocSplit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for VocSplit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(VocSplit::Train),
            "val" => Ok(VocSplit::Val),
            "trainval" => Ok(VocSplit::Trainval),
            _ => Err(Error::InvalidParameter(format!("unknown split {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocEntry {
    pub id: String,
    pub image: PathBuf,
    pub label: PathBuf,
}

#[derive(Debug, Clone)]
pub struct VocCorpus {
    root: PathBuf,
    split: VocSplit,
    entries: Vec<VocEntry>,
}

impl VocCorpus {
    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn split(&self) -> VocSplit {
        self.split
    }

    pub fn entries(&self) -> &[VocEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// A warning when the entry count differs from the reference release.
    pub fn size_warning(&self) -> Option<String> {
        let expected = self.split.reference_size();
        (self.len() != expected).then(|| {
            format!(
                "split {} has {} entries; the VOC2011 segmentation release has {}",
                self.split,
                self.len(),
                expected
            )
        })
    }
}

pub fn split_file(root: &Path, split: VocSplit) -> PathBuf {
    root.join("ImageSets").join("Segmentation").join(format!("{split}.txt"))
}

pub fn image_path(root: &Path, id: &str) -> PathBuf {
    root.join("JPEGImages").join(format!("{id}.jpg"))
}

pub fn label_path(root: &Path, id: &str) -> PathBuf {
    root.join("SegmentationClass").join(format!("{id}.png"))
}

/// Reads the split list and checks that every id has both files. Pixel
/// data is not touched.
pub fn load_corpus(root: &Path, split: VocSplit) -> Result<VocCorpus> {
    let list = split_file(root, split);
    if !list.is_file() {
        return Err(Error::MissingSplitFile(list));
    }
    let text = std::fs::read_to_string(&list).map_err(|e| Error::io(&list, e))?;
    let mut entries = Vec::new();
    for id in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let image = image_path(root, id);
        if !image.is_file() {
            return Err(Error::MissingImage {
                id: id.to_string(),
                path: image,
            });
        }
        let label = label_path(root, id);
        if !label.is_file() {
            return Err(Error::MissingLabel {
                id: id.to_string(),
                path: label,
            });
        }
        entries.push(VocEntry {
            id: id.to_string(),
            image,
            label,
        });
    }
    Ok(VocCorpus {
        root: root.to_path_buf(),
        split,
        entries,
    })
}

/// Decodes a palette PNG into class indices without expanding the palette.
pub fn decode_label_png(path: &Path) -> Result<LabelMap> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut decoder = png::Decoder::new(file);
    decoder.set_transformations(png::Transformations::IDENTITY);
    let decode_err = |source| Error::PngDecode {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = decoder.read_info().map_err(decode_err)?;
    let info = reader.info();
    if info.color_type != png::ColorType::Indexed || info.bit_depth != png::BitDepth::Eight {
        return Err(Error::NotPaletteIndexed(path.to_path_buf()));
    }
    let mut buf = vec![0; reader.output_buffer_size()];
    let frame = reader.next_frame(&mut buf).map_err(decode_err)?;
    let (w, h) = (frame.width as usize, frame.height as usize);
    let mut labels = Vec::with_capacity(w * h);
    for row in buf[..frame.buffer_size()].chunks(frame.line_size).take(h) {
        labels.extend_from_slice(&row[..w]);
    }
    if let Some(&bad) = labels.iter().find(|&&l| l != VOID && l as usize >= NUM_CLASSES) {
        return Err(Error::UnsupportedLabelIndex {
            path: path.to_path_buf(),
            index: bad,
        });
    }
    LabelMap::new(w, h, labels)
}

/// The standard VOC colormap (bit-interleaved index colors).
pub fn voc_palette() -> Vec<[u8; 3]> {
    (0..256u32)
        .map(|i| {
            let (mut r, mut g, mut b) = (0u8, 0u8, 0u8);
            let mut c = i;
            for shift in (0..8).rev() {
                r |= ((c & 1) as u8) << shift;
                g |= (((c >> 1) & 1) as u8) << shift;
                b |= (((c >> 2) & 1) as u8) << shift;
                c >>= 3;
            }
            [r, g, b]
        })
        .collect()
}

/// Writes a label map as an 8-bit palette PNG using the VOC colormap.
pub fn write_label_png(path: &Path, labels: &LabelMap) -> Result<()> {
    write_indexed_png(path, labels.width(), labels.height(), labels.labels())
}

/// Writes raw palette indices, including ones a `LabelMap` would reject.
pub fn write_indexed_png(path: &Path, width: usize, height: usize, indices: &[u8]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), width as u32, height as u32);
    enc.set_color(png::ColorType::Indexed);
    enc.set_depth(png::BitDepth::Eight);
    enc.set_palette(voc_palette().concat());
    let io_err = |e: png::EncodingError| Error::io(path, std::io::Error::other(e));
    let mut writer = enc.write_header().map_err(io_err)?;
    writer.write_image_data(indices).map_err(io_err)?;
    writer.finish().map_err(io_err)
}

/// Context of the largest object class; lowest class index wins ties and
/// object-free maps fall back to `Others`.
pub fn derive_context_label(labels: &LabelMap, mapping: &ContextMapping) -> Result<Context> {
    let (counts, void) = labels.histogram();
    if void == labels.labels().len() {
        return Err(Error::EmptyLabelMap);
    }
    let mut best: Option<(u8, usize)> = None;
    for (class, &n) in counts.iter().enumerate().skip(1) {
        if n > 0 && best.is_none_or(|(_, m)| n > m) {
            best = Some((class as u8, n));
        }
    }
    Ok(best.map_or(Context::Others, |(class, _)| mapping.context_of(class)))
}

/// One labelled feature vector per corpus entry, in corpus order. Each
/// label file is decoded exactly once.
pub fn build_context_dataset(corpus: &VocCorpus, mapping: &ContextMapping) -> Result<ContextDataset> {
    let samples = corpus
        .entries()
        .par_iter()
        .map(|entry| {
            let wrap = |e: Error| Error::Entry {
                id: entry.id.clone(),
                source: Box::new(e),
            };
            let labels = decode_label_png(&entry.label).map_err(wrap)?;
            let features = extract_area_features(&labels).map_err(wrap)?;
            let ctx = derive_context_label(&labels, mapping).map_err(wrap)?;
            Ok((features, ctx))
        })
        .collect::<Result<Vec<_>>>()?;
    ContextDataset::new(corpus.split().dataset_split(), samples)
}
