//! Both image encryption modes side by side: the deterministic substitution
//! table (trainable output) and per-pixel randomized Paillier (opaque
//! output). Writes sample PNGs under `target/examples_out/`.
//!
//! ```bash
//! cargo run --release --example image_encryption
//! ```

use std::fs;
use std::path::PathBuf;

use ciphertrain::image_crypto::{
    build_substitution_table, cipher_image_to_view, decrypt_image_randomized,
    encrypt_image_deterministic, encrypt_image_randomized,
};
use ciphertrain::imageio::save_image;
use ciphertrain::paillier::keygen;
use ciphertrain::rng::SplitMix64;
use ciphertrain::synthetic::pattern_image;

fn main() -> ciphertrain::Result<()> {
    let out_dir = PathBuf::from("target/examples_out/image_encryption");
    fs::create_dir_all(&out_dir).map_err(|e| ciphertrain::Error::io(&out_dir, e))?;

    let (pk, sk) = keygen(16, &mut SplitMix64::new(7))?;
    println!("key fingerprint: {}", pk.fingerprint());

    // a sample texture image from the synthetic generator
    let img = pattern_image(1, 64, &mut SplitMix64::new(3));
    save_image(&out_dir.join("plain.png"), &img)?;

    // deterministic mode: a key-derived bijection on pixel values
    let table = build_substitution_table(&pk, 99)?;
    let encrypted = encrypt_image_deterministic(&img, &table);
    save_image(&out_dir.join("deterministic.png"), &encrypted)?;

    let recovered = encrypt_image_deterministic(&encrypted, &table.inverse());
    println!("deterministic round trip exact: {}", recovered == img);
    println!(
        "table sends 0 -> {}, 128 -> {}, 255 -> {}",
        table.apply(0),
        table.apply(128),
        table.apply(255)
    );

    // randomized mode: fresh randomizer per pixel, semantically secure,
    // and visually (and statistically) structureless
    let cipher_image = encrypt_image_randomized(&img, &pk, &mut SplitMix64::new(11))?;
    let view = cipher_image_to_view(&cipher_image);
    save_image(&out_dir.join("randomized_view.png"), &view)?;

    let decrypted = decrypt_image_randomized(&cipher_image, &sk, &pk)?;
    println!("randomized round trip exact:     {}", decrypted == img);

    println!("\nwrote plain.png, deterministic.png, randomized_view.png");
    println!("under {}", out_dir.display());
    println!("the deterministic file keeps the texture; the view file is noise");
    Ok(())
}
