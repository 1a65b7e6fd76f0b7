use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CHANNELS: usize = 3;
pub const MIN_SIDE: u32 = 4;

/// Row-major 8-bit RGB pixels.
#[derive(Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for ImageBuffer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ImageBuffer")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl ImageBuffer {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        Self::new_with_min(width, height, pixels, MIN_SIDE)
    }

    /// Like [`Self::new`] but with a caller-chosen minimum side length. Used
    /// for tiny fixtures (e.g. a 2x2 rotation check) that fall below the
    /// engine's minimum.
    pub fn new_with_min(width: u32, height: u32, pixels: Vec<u8>, min_side: u32) -> Result<Self> {
        if width < min_side || height < min_side {
            return Err(Error::Image(format!(
                "{width}x{height} is below the minimum side of {min_side}"
            )));
        }
        let expected = width as usize * height as usize * CHANNELS;
        if pixels.len() != expected {
            return Err(Error::Image(format!(
                "pixel array has {} bytes, expected {expected} for {width}x{height} RGB",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self> {
        let pixels = rgb
            .iter()
            .copied()
            .cycle()
            .take(width as usize * height as usize * CHANNELS)
            .collect();
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    fn offset(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * CHANNELS
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let o = self.offset(x, y);
        [self.pixels[o], self.pixels[o + 1], self.pixels[o + 2]]
    }

    pub fn set_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let o = self.offset(x, y);
        self.pixels[o..o + 3].copy_from_slice(&rgb);
    }

    /// Hex SHA-256 of the raw pixel bytes (dimensions prefixed), used to
    /// compare images across runs without caring about PNG encoding.
    pub fn pixel_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(self.width.to_le_bytes());
        h.update(self.height.to_le_bytes());
        h.update(&self.pixels);
        hex::encode(h.finalize())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleSource {
    Real,
    Generated,
    Augmented,
}

/// An image plus where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSample {
    pub image: ImageBuffer,
    pub class_id: Option<usize>,
    pub source: SampleSource,
    pub seed: Option<u64>,
    pub attempt_index: Option<u32>,
    pub worker_id: String,
}

impl ImageSample {
    pub fn generated(
        image: ImageBuffer,
        class_id: usize,
        seed: u64,
        attempt_index: u32,
        worker_id: impl Into<String>,
    ) -> Self {
        Self {
            image,
            class_id: Some(class_id),
            source: SampleSource::Generated,
            seed: Some(seed),
            attempt_index: Some(attempt_index.max(1)),
            worker_id: worker_id.into(),
        }
    }
}
