//! Labelled mask directories for classifier training.

use anyhow::{bail, Context, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::Path;
use thermal_hands::classifier::Sample;
use thermal_hands::imaging::{tight_pad_resize, BinaryMask, NORMALIZED_SIZE};

/// Reads `dir/<class>/*.png|pgm`, one subdirectory per class in name order.
/// Non-zero pixels are foreground. Images that are not already 100×100 are
/// cropped, padded and resized the way segmented hands are.
pub fn load(dir: &Path) -> Result<(Vec<Sample>, usize)> {
    let mut classes: Vec<_> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    classes.sort();
    if classes.len() < 2 {
        bail!("{} needs at least two class subdirectories", dir.display());
    }
    let mut samples = Vec::new();
    for (label, class_dir) in classes.iter().enumerate() {
        let mut files: Vec<_> = std::fs::read_dir(class_dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "pgm" | "pnm"))
            })
            .collect();
        files.sort();
        if files.is_empty() {
            bail!("class directory {} has no images", class_dir.display());
        }
        for file in files {
            let img = image::open(&file)
                .with_context(|| format!("reading {}", file.display()))?
                .into_luma8();
            let (w, h) = (img.width() as usize, img.height() as usize);
            let mask = BinaryMask::from_vec(w, h, img.into_raw().into_iter().map(|v| v > 0).collect())?;
            let mask = if mask.dimensions() == (NORMALIZED_SIZE, NORMALIZED_SIZE) {
                mask
            } else {
                tight_pad_resize(&mask).with_context(|| format!("normalizing {}", file.display()))?
            };
            samples.push((mask, label));
        }
    }
    Ok((samples, classes.len()))
}

/// Seeded per-class split; each class contributes `⌊n·holdout⌋` held-out
/// samples.
pub fn split(samples: Vec<Sample>, holdout: f64, seed: u64) -> (Vec<Sample>, Vec<Sample>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes = samples.iter().map(|(_, l)| l + 1).max().unwrap_or(0);
    let mut by_class: Vec<Vec<Sample>> = vec![Vec::new(); classes];
    for s in samples {
        by_class[s.1].push(s);
    }
    let (mut train, mut held) = (Vec::new(), Vec::new());
    for mut group in by_class {
        group.shuffle(&mut rng);
        let n_held = (group.len() as f64 * holdout).floor() as usize;
        held.extend(group.drain(..n_held));
        train.extend(group);
    }
    (train, held)
}
