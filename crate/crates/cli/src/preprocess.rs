//! Input normalization: largest centered square, resampled to the working size.

use image::imageops::{self, FilterType};
use image::RgbImage;

use semcodec::backends::MOCK_IMAGE_SIZE;
use semcodec::pipeline::CropRecord;
use semcodec::ImageRef;

/// Side length every encoded image is brought to.
pub const TARGET_SIDE: u32 = MOCK_IMAGE_SIZE;
const FILTER_NAME: &str = "lanczos3";

/// Crop geometry for a `width`×`height` source: `(x, y, side)`.
pub fn center_square(width: u32, height: u32) -> (u32, u32, u32) {
    let side = width.min(height);
    ((width - side) / 2, (height - side) / 2, side)
}

/// Images already at the target size pass through untouched, so their
/// content hash is preserved.
pub fn center_crop(image: &ImageRef, side_out: u32) -> (ImageRef, CropRecord) {
    let (w, h) = (image.width(), image.height());
    let (x, y, side) = center_square(w, h);
    let resampled = side != side_out;
    let record = CropRecord {
        source_width: w,
        source_height: h,
        crop_x: x,
        crop_y: y,
        crop_side: side,
        output_side: side_out,
        resampled,
        filter: if resampled { FILTER_NAME } else { "none" }.to_string(),
    };
    if w == side_out && h == side_out {
        return (image.clone(), record);
    }
    let square: RgbImage = imageops::crop_imm(image.pixels(), x, y, side, side).to_image();
    let out = if resampled {
        imageops::resize(&square, side_out, side_out, FilterType::Lanczos3)
    } else {
        square
    };
    (ImageRef::new(out), record)
}
