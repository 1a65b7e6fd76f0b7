use serde::{Deserialize, Serialize};

use std::path::Path;

use super::{decode_image, encode_image, DatasetEntry, DatasetManifest};
use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::rng::{self, splitmix64, SplitMix64};

/// Closed ranges the augmentation parameters are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentSpec {
    pub rotation_degrees: [f64; 2],
    pub zoom_factor: [f64; 2],
    pub contrast_factor: [f64; 2],
}

impl Default for AugmentSpec {
    fn default() -> Self {
        Self {
            rotation_degrees: [-15.0, 15.0],
            zoom_factor: [0.9, 1.1],
            contrast_factor: [0.8, 1.2],
        }
    }
}

impl AugmentSpec {
    pub fn identity() -> Self {
        Self {
            rotation_degrees: [0.0, 0.0],
            zoom_factor: [1.0, 1.0],
            contrast_factor: [1.0, 1.0],
        }
    }

    pub fn fixed(rotation: f64, zoom: f64, contrast: f64) -> Self {
        Self {
            rotation_degrees: [rotation, rotation],
            zoom_factor: [zoom, zoom],
            contrast_factor: [contrast, contrast],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, [lo, hi]: [f64; 2], positive: bool| {
            if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                return Err(Error::Dataset(format!(
                    "{name} interval [{lo}, {hi}] is empty"
                )));
            }
            if positive && lo <= 0.0 {
                return Err(Error::Dataset(format!(
                    "{name} interval must be strictly positive"
                )));
            }
            Ok(())
        };
        check("rotation_degrees", self.rotation_degrees, false)?;
        check("zoom_factor", self.zoom_factor, true)?;
        check("contrast_factor", self.contrast_factor, true)
    }

    /// Draws one parameter triple in the fixed order rotation, zoom, contrast.
    pub fn draw(&self, seed: u64) -> AugmentParams {
        let mut rng = SplitMix64::new(rng::derive_seed(seed, rng::purpose::AUGMENT));
        let [r0, r1] = self.rotation_degrees;
        let [z0, z1] = self.zoom_factor;
        let [c0, c1] = self.contrast_factor;
        AugmentParams {
            rotation_degrees: rng.uniform(r0, r1),
            zoom: rng.uniform(z0, z1),
            contrast: rng.uniform(c0, c1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentParams {
    pub rotation_degrees: f64,
    pub zoom: f64,
    pub contrast: f64,
}

/// Random rotation about the center, center zoom, then contrast around 128.
/// Geometry uses bilinear sampling with edge replication; the output has the
/// input's dimensions and depends only on `(img, spec, seed)`.
pub fn augment_image(img: &ImageBuffer, spec: &AugmentSpec, seed: u64) -> ImageBuffer {
    apply(img, spec.draw(seed))
}

pub fn apply(img: &ImageBuffer, params: AugmentParams) -> ImageBuffer {
    let (w, h) = img.dims();
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;
    let theta = params.rotation_degrees.to_radians();
    let (sin, cos) = theta.sin_cos();
    let inv_zoom = 1.0 / params.zoom;

    let mut out = Vec::with_capacity(img.pixels().len());
    for y in 0..h {
        for x in 0..w {
            // Undo the zoom, then the rotation, to find the source point.
            let dx = (x as f64 - cx) * inv_zoom;
            let dy = (y as f64 - cy) * inv_zoom;
            let sx = cx + cos * dx - sin * dy;
            let sy = cy + sin * dx + cos * dy;
            let rgb = bilinear(img, sx, sy);
            for v in rgb {
                let adjusted = 128.0 + params.contrast * (v - 128.0);
                out.push(adjusted.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    ImageBuffer::new_with_min(w, h, out, 1).expect("same dimensions as input")
}

fn bilinear(img: &ImageBuffer, sx: f64, sy: f64) -> [f64; 3] {
    let (w, h) = img.dims();
    let max_x = (w - 1) as f64;
    let max_y = (h - 1) as f64;
    let sx = sx.clamp(0.0, max_x);
    let sy = sy.clamp(0.0, max_y);
    let x0 = sx.floor();
    let y0 = sy.floor();
    let fx = sx - x0;
    let fy = sy - y0;
    let x0 = x0 as u32;
    let y0 = y0 as u32;
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let p00 = img.pixel(x0, y0);
    let p10 = img.pixel(x1, y0);
    let p01 = img.pixel(x0, y1);
    let p11 = img.pixel(x1, y1);
    let mut out = [0.0; 3];
    for c in 0..3 {
        let top = p00[c] as f64 * (1.0 - fx) + p10[c] as f64 * fx;
        let bottom = p01[c] as f64 * (1.0 - fx) + p11[c] as f64 * fx;
        out[c] = top * (1.0 - fy) + bottom * fy;
    }
    out
}

/// Seed of augmented copy `copy` of manifest entry `entry`.
pub fn copy_seed(seed: u64, entry: usize, copy: usize) -> u64 {
    splitmix64(seed ^ rng::mix(rng::purpose::AUGMENT_COPY, &[entry as u64, copy as u64]))
}

/// Writes `copies` augmented versions of every entry under
/// `out_dir/images/<class_id>/<entry>_<copy>.png` and returns a manifest of
/// them rooted at `out_dir`.
pub fn augment_manifest(
    manifest: &DatasetManifest,
    spec: &AugmentSpec,
    seed: u64,
    copies: usize,
    out_dir: &Path,
) -> Result<DatasetManifest> {
    spec.validate()?;
    let mut entries = Vec::with_capacity(manifest.len() * copies);
    for (i, entry) in manifest.entries.iter().enumerate() {
        let src = manifest.path_of(entry);
        let bytes = std::fs::read(&src).map_err(|e| Error::io(&src, e))?;
        let img = decode_image(&bytes)?;
        for copy in 0..copies {
            let rel = format!("images/{}/{i}_{copy}.png", entry.class_id);
            let dst = out_dir.join(&rel);
            if let Some(parent) = dst.parent() {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            let out = augment_image(&img, spec, copy_seed(seed, i, copy));
            std::fs::write(&dst, encode_image(&out)).map_err(|e| Error::io(&dst, e))?;
            entries.push(DatasetEntry {
                relative_path: rel,
                class_id: entry.class_id,
            });
        }
    }
    DatasetManifest::from_entries(out_dir, entries, manifest.k())
}
