#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use masscad::{write_pgm, GrayImage, PgmVariant};
use masscad_testkit::SplitMix64;

pub fn run(args: &[&str]) -> i32 {
    masscad_cli::run(std::iter::once("masscad").chain(args.iter().copied()))
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 temp path")
}

/// A MIAS-style fixture: 64x64 images with one or two circular masses,
/// annotated with bottom-origin coordinates.
///
/// Benign masses are a smooth bright disc; malignant ones are noisy.
/// Returns `(image dir, annotation file, number of labeled masses)`.
pub fn mias_fixture(root: &Path, per_class: usize) -> (PathBuf, PathBuf, usize) {
    let images = root.join("images");
    fs::create_dir_all(&images).unwrap();
    let mut rng = SplitMix64::new(8);
    let mut lines = vec!["# id tissue class severity x y radius".to_string()];
    let mut labeled = 0;
    for i in 0..2 * per_class {
        let malignant = i % 2 == 1;
        let id = format!("mdb{:03}", i + 1);
        let (cx, cy, r) = (16 + rng.below(32), 16 + rng.below(32), 6 + rng.below(8));
        let mut px = vec![0u8; 64 * 64];
        for y in 0..64usize {
            for x in 0..64usize {
                let d2 = (x as i64 - cx as i64).pow(2) + (y as i64 - cy as i64).pow(2);
                let inside = d2 <= (r * r) as i64;
                px[y * 64 + x] = match (inside, malignant) {
                    (false, _) => 40 + rng.below(20) as u8,
                    (true, false) => 180 + rng.below(4) as u8,
                    (true, true) => 60 + rng.below(190) as u8,
                };
            }
        }
        let img = GrayImage::new(64, 64, px).unwrap();
        let variant = if i % 3 == 0 { PgmVariant::Ascii } else { PgmVariant::Binary };
        fs::write(images.join(format!("{id}.pgm")), write_pgm(&img, variant)).unwrap();
        let sev = if malignant { "M" } else { "B" };
        // annotation rows count up from the bottom of the image
        lines.push(format!("{id} G CIRC {sev} {cx} {} {r}", 63 - cy));
        labeled += 1;
    }
    // a second mass on the first image, a normal image, and a broken line
    lines.push("mdb001 F MISC M 10 10 3".into());
    labeled += 1;
    lines.push("mdb900 D NORM".into());
    lines.push("mdb901 G CIRC B 10 ten 5".into());
    let ann = root.join("Info.txt");
    fs::write(&ann, lines.join("\n") + "\n").unwrap();
    (images, ann, labeled)
}
