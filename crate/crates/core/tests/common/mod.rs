#![allow(dead_code)]

use image::{Rgb, RgbImage};
use semcodec::backends::{FixtureTable, MockBackend};
use semcodec::ImageRef;

pub const BOAT: &str = "A large white boat with a curved wooden stern floats on calm blue water \
near a rocky shore. The boat has a red interior, two small oars, and a tall mast with a folded \
cream sail. Behind the boat, green pine trees cover huge grey cliffs under a pale morning sky \
with thin orange clouds. A small brown dog sits at the bow looking toward a distant lighthouse \
painted with black and yellow stripes. Medium ripples reflect golden sunlight across the water \
surface while three seagulls glide above the cliffs.";

pub const ARCH: &str = "An Indian traditional arch window with lattice shadow falls across a \
tiled floor where a man sits reading.";

/// Deterministic 1024x1024 test image; different seeds give different pixels.
pub fn fixture_image(seed: u8) -> ImageRef {
    let mut img = RgbImage::new(1024, 1024);
    for (x, y, p) in img.enumerate_pixels_mut() {
        *p = Rgb([(x / 4) as u8 ^ seed, (y / 4) as u8, ((x + y) / 8) as u8 ^ seed]);
    }
    ImageRef::new(img)
}

pub fn mock_with(entries: &[(&ImageRef, &str)]) -> MockBackend {
    let mut table = FixtureTable::new();
    for (img, text) in entries {
        table.insert(img.content_hash().clone(), *text);
    }
    MockBackend::new(table)
}
