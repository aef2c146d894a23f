//! Procedural image dataset used by the tests and examples.
//!
//! Four classes of banded textures: diagonal stripes, horizontal stripes,
//! a square-cell mosaic, and vertical stripes. Every band or cell gets an
//! independent tone from a fixed 16-value palette, and a small fraction of
//! pixels is replaced with uniform speckle noise. The class signal is purely
//! spatial (the direction along which tones stay constant), so it survives
//! any bijective remapping of pixel values; that property is what lets the
//! same generator measure both the plain-vs-deterministic accuracy gap and
//! the unlearnability of randomized views.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image_crypto::ImageTensor;
use crate::imageio;
use crate::rng::{derive_seed, SplitMix64};

/// Class names in lexicographic (ingest) order; `pattern_image` takes an
/// index into this array.
pub const PATTERN_CLASSES: [&str; 4] = ["diagonal", "horizontal", "mosaic", "vertical"];

/// The 16 tones bands are drawn from.
pub const PALETTE: [u8; 16] = [
    8, 24, 40, 56, 72, 88, 104, 120, 136, 152, 168, 184, 200, 216, 232, 248,
];

/// Fraction of pixels replaced by uniform noise.
const SPECKLE: f64 = 0.03;

/// One banded texture image for class `class_idx`.
pub fn pattern_image(class_idx: usize, size: usize, rng: &mut SplitMix64) -> ImageTensor {
    let band = 4 + rng.next_below(5) as usize; // band width / cell size 4..=8
    let phase = rng.next_below(2 * band as u64) as usize;
    let stride = (size + phase) / band + 2;
    let tone_count = match class_idx {
        0 => (2 * size + phase) / band + 2, // diagonal: bands of x + y
        1 | 3 => stride,                    // stripes: bands of y or of x
        2 => stride * stride,               // mosaic: independent square cells
        other => panic!("class index {other} out of range"),
    };
    let tones: Vec<u8> = (0..tone_count)
        .map(|_| PALETTE[rng.next_below(16) as usize])
        .collect();

    let mut pixels = Vec::with_capacity(size * size);
    for y in 0..size {
        for x in 0..size {
            let band_id = match class_idx {
                0 => (x + y + phase) / band,
                1 => (y + phase) / band,
                2 => ((y + phase) / band) * stride + (x + phase) / band,
                3 => (x + phase) / band,
                _ => unreachable!(),
            };
            pixels.push(tones[band_id]);
        }
    }
    for p in &mut pixels {
        if rng.next_f64() < SPECKLE {
            *p = rng.next_below(256) as u8;
        }
    }
    ImageTensor::new(size, size, 1, pixels).expect("generator emits consistent shapes")
}

/// Writes `<root>/<class>/img_<i>.png` for all four classes. Deterministic
/// for a fixed seed.
pub fn generate_dataset(root: &Path, per_class: usize, size: usize, seed: u64) -> Result<()> {
    for (class_idx, class) in PATTERN_CLASSES.iter().enumerate() {
        let dir = root.join(class);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let mut rng = SplitMix64::new(derive_seed(seed, class_idx as u64));
        for i in 0..per_class {
            let img = pattern_image(class_idx, size, &mut rng);
            imageio::save_image(&dir.join(format!("img_{i:04}.png")), &img)?;
        }
    }
    Ok(())
}
