use std::fmt;
use std::io::Cursor;
use std::path::Path;
use std::sync::Arc;

use image::{ImageFormat, RgbImage};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// SHA-256 over dimensions and raw RGB8 pixels, hex encoded.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ContentHash(String);

impl ContentHash {
    pub fn of_pixels(image: &RgbImage) -> Self {
        let mut h = Sha256::new();
        h.update(image.width().to_be_bytes());
        h.update(image.height().to_be_bytes());
        h.update(image.as_raw());
        ContentHash(hex::encode(h.finalize()))
    }

    /// Accepts a 64-character lowercase hex digest.
    pub fn parse(s: &str) -> Option<Self> {
        let ok = s.len() == 64 && s.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b));
        ok.then(|| ContentHash(s.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn short(&self) -> &str {
        &self.0[..16.min(self.0.len())]
    }
}

impl fmt::Display for ContentHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Shared, immutable RGB image with its content hash.
#[derive(Clone)]
pub struct ImageRef {
    pixels: Arc<RgbImage>,
    hash: ContentHash,
}

impl ImageRef {
    pub fn new(pixels: RgbImage) -> Self {
        let hash = ContentHash::of_pixels(&pixels);
        Self {
            pixels: Arc::new(pixels),
            hash,
        }
    }

    pub fn load(path: &Path) -> image::ImageResult<Self> {
        Ok(Self::new(image::open(path)?.to_rgb8()))
    }

    pub fn from_encoded(bytes: &[u8]) -> image::ImageResult<Self> {
        Ok(Self::new(image::load_from_memory(bytes)?.to_rgb8()))
    }

    pub fn save_png(&self, path: &Path) -> image::ImageResult<()> {
        self.pixels.save_with_format(path, ImageFormat::Png)
    }

    pub fn to_png_bytes(&self) -> image::ImageResult<Vec<u8>> {
        let mut buf = Cursor::new(Vec::new());
        self.pixels.write_to(&mut buf, ImageFormat::Png)?;
        Ok(buf.into_inner())
    }

    pub fn pixels(&self) -> &RgbImage {
        &self.pixels
    }

    pub fn width(&self) -> u32 {
        self.pixels.width()
    }

    pub fn height(&self) -> u32 {
        self.pixels.height()
    }

    pub fn content_hash(&self) -> &ContentHash {
        &self.hash
    }
}

impl fmt::Debug for ImageRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ImageRef")
            .field("width", &self.width())
            .field("height", &self.height())
            .field("hash", &self.hash.as_str())
            .finish()
    }
}

impl PartialEq for ImageRef {
    fn eq(&self, other: &Self) -> bool {
        self.hash == other.hash
    }
}
