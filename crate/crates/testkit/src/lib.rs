//! Synthetic fixtures: VOC-layout corpora with generated scenes, plus the
//! small hand-built scenes the saliency tests use.

use std::fs;
use std::path::Path;

use ctxsal::classes::{NUM_OBJECT_CLASSES, PERSON};
use ctxsal::voc::{image_path, label_path, split_file, write_label_png, VocSplit};
use ctxsal::{LabelMap, RgbImage, VOID};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn scene_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ index)
}

/// A random VOC-like scene: gray textured background with one to three
/// rectangular objects outlined by a VOID ring. About one scene in ten
/// holds no object at all.
pub fn random_scene<R: Rng>(rng: &mut R) -> (RgbImage, LabelMap) {
    let w = rng.gen_range(40..=80);
    let h = rng.gen_range(30..=60);
    let mut img = RgbImage::filled(w, h, [0, 0, 0]).unwrap();
    for r in 0..h {
        for c in 0..w {
            let g = rng.gen_range(90..=150);
            img.set(r, c, [g, g, g]);
        }
    }
    let mut labels = LabelMap::filled(w, h, 0).unwrap();
    let objects = if rng.gen_bool(0.1) { 0 } else { rng.gen_range(1..=3) };
    for _ in 0..objects {
        let class = if rng.gen_bool(0.15) {
            PERSON
        } else {
            rng.gen_range(1..=NUM_OBJECT_CLASSES as u8)
        };
        let ow = rng.gen_range(w / 6..=w * 2 / 3);
        let oh = rng.gen_range(h / 6..=h * 2 / 3);
        let r0 = rng.gen_range(0..h - oh);
        let c0 = rng.gen_range(0..w - ow);
        let base = class_color(class);
        for r in r0..r0 + oh {
            for c in c0..c0 + ow {
                let edge = r == r0 || c == c0 || r + 1 == r0 + oh || c + 1 == c0 + ow;
                labels.set(r, c, if edge { VOID } else { class });
                let jitter = rng.gen_range(0..24u8);
                img.set(r, c, base.map(|v| v.saturating_add(jitter)));
            }
        }
    }
    (img, labels)
}

fn class_color(class: u8) -> [u8; 3] {
    let hue = class as f64 / NUM_OBJECT_CLASSES as f64;
    ctxsal::raster::hsv_to_rgb_pixel(hue, 0.8, 0.85)
}

pub fn write_jpeg(path: &Path, img: &RgbImage) {
    let raw: Vec<u8> = img.pixels().iter().flatten().copied().collect();
    image::save_buffer(path, &raw, img.width() as u32, img.height() as u32, image::ExtendedColorType::Rgb8).unwrap();
}

pub fn write_png_rgb(path: &Path, img: &RgbImage) {
    let raw: Vec<u8> = img.pixels().iter().flatten().copied().collect();
    image::save_buffer(path, &raw, img.width() as u32, img.height() as u32, image::ExtendedColorType::Rgb8).unwrap();
}

/// Creates the VOC directory skeleton under `root`.
pub fn make_layout(root: &Path) {
    for d in ["JPEGImages", "SegmentationClass", "ImageSets/Segmentation"] {
        fs::create_dir_all(root.join(d)).unwrap();
    }
}

pub fn write_entry(root: &Path, id: &str, img: &RgbImage, labels: &LabelMap) {
    write_jpeg(&image_path(root, id), img);
    write_label_png(&label_path(root, id), labels).unwrap();
}

pub fn write_split(root: &Path, split: VocSplit, ids: &[String]) {
    let mut text = ids.join("\n");
    if !text.is_empty() {
        text.push('\n');
    }
    fs::write(split_file(root, split), text).unwrap();
}

/// Generates a corpus with `train` + `val` random scenes and the three
/// split lists (trainval being their concatenation). Returns the ids in
/// trainval order.
pub fn write_synthetic_corpus(root: &Path, train: usize, val: usize, seed: u64) -> Vec<String> {
    make_layout(root);
    let ids: Vec<String> = (0..train + val).map(|i| format!("synth_{i:06}")).collect();
    for (i, id) in ids.iter().enumerate() {
        let (img, labels) = random_scene(&mut scene_rng(seed, i as u64));
        write_entry(root, id, &img, &labels);
    }
    write_split(root, VocSplit::Train, &ids[..train]);
    write_split(root, VocSplit::Val, &ids[train..]);
    write_split(root, VocSplit::Trainval, &ids);
    ids
}

/// `size x size` gray scene with a warm, labelled square of side `side`
/// whose top-left corner is at `(row, col)`.
pub fn square_scene(size: usize, side: usize, row: usize, col: usize, class: u8) -> (RgbImage, LabelMap) {
    let mut img = RgbImage::filled(size, size, [128, 128, 128]).unwrap();
    let mut labels = LabelMap::filled(size, size, 0).unwrap();
    for r in row..row + side {
        for c in col..col + side {
            img.set(r, c, [235, 30, 20]);
            labels.set(r, c, class);
        }
    }
    (img, labels)
}
