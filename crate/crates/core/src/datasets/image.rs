use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{DatasetSplit, Provenance, Table};
use crate::error::{Error, Result};
use crate::formats::RgbImage;
use crate::linalg::Matrix;

/// Normalized `(row, col)` coordinate of a pixel: the corners map to
/// `(0, 0)` and `(1, 1)`.
pub fn pixel_coordinates(height: usize, width: usize, row: usize, col: usize) -> [f64; 2] {
    [
        row as f64 / (height - 1) as f64,
        col as f64 / (width - 1) as f64,
    ]
}

fn pixel_table(image: &RgbImage, pixels: impl Iterator<Item = (usize, usize)>) -> Result<Table> {
    let mut coords = Vec::new();
    let mut colors = Vec::new();
    for (r, c) in pixels {
        coords.extend_from_slice(&pixel_coordinates(image.height, image.width, r, c));
        colors.extend(image.pixel(r, c).iter().map(|&v| v as f64 / 255.0));
    }
    let n = coords.len() / 2;
    Table::new(Matrix::new(n, 2, coords)?, Matrix::new(n, 3, colors)?)
}

/// Coordinate-to-color regression split.
///
/// Training pixels are those whose row and column are multiples of
/// `stride`; the test set is every pixel in row-major order. The
/// validation table repeats the training pixels, so per-epoch selection
/// uses training accuracy only.
pub fn build_image_split(image: &RgbImage, stride: usize) -> Result<DatasetSplit> {
    if image.width < 2 || image.height < 2 {
        return Err(Error::InvalidArgument(format!(
            "image must be at least 2x2, got {}x{}",
            image.width, image.height
        )));
    }
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be positive".into()));
    }
    let (h, w) = (image.height, image.width);
    let train = pixel_table(
        image,
        (0..h)
            .step_by(stride)
            .flat_map(|r| (0..w).step_by(stride).map(move |c| (r, c))),
    )?;
    let test = pixel_table(image, (0..h).flat_map(|r| (0..w).map(move |c| (r, c))))?;
    Ok(DatasetSplit {
        validation: train.clone(),
        train,
        test,
        provenance: Provenance {
            generator: format!("image({w}x{h}, stride {stride})"),
            seeds: Vec::new(),
            phases: Vec::new(),
        },
    })
}

/// Renders row-major RGB predictions in `[0, 1]` as an 8-bit raster,
/// clamping out-of-range values.
pub fn raster_from_predictions(height: usize, width: usize, preds: &Matrix) -> Result<RgbImage> {
    if preds.rows() != height * width || preds.cols() != 3 {
        return Err(Error::DimensionMismatch {
            context: "RGB predictions",
            expected: height * width * 3,
            found: preds.rows() * preds.cols(),
        });
    }
    let data = preds
        .as_slice()
        .iter()
        .map(|&v| libm::round(v.clamp(0.0, 1.0) * 255.0) as u8)
        .collect();
    RgbImage::new(width, height, data).ok_or(Error::InvalidArgument(String::from("raster size")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn gradient_image(w: usize, h: usize) -> RgbImage {
        let mut data = Vec::new();
        for r in 0..h {
            for c in 0..w {
                data.extend_from_slice(&[(r * 40) as u8, (c * 40) as u8, 7]);
            }
        }
        RgbImage::new(w, h, data).unwrap()
    }

    #[test]
    fn four_by_four_counts() {
        let split = build_image_split(&gradient_image(4, 4), 2).unwrap();
        assert_eq!(split.train.len(), 4);
        assert_eq!(split.test.len(), 16);
        let odd = build_image_split(&gradient_image(5, 3), 2).unwrap();
        assert_eq!(odd.train.len(), 3 * 2);
    }

    #[test]
    fn white_targets_and_corner_coordinates() {
        let white = RgbImage::new(2, 2, vec![255; 12]).unwrap();
        let split = build_image_split(&white, 2).unwrap();
        assert!(split.test.targets.as_slice().iter().all(|&v| v == 1.0));
        assert_eq!(split.test.inputs.row(0), &[0.0, 0.0]);
        assert_eq!(split.test.inputs.row(3), &[1.0, 1.0]);
    }

    #[test]
    fn training_pixels_are_test_pixels() {
        let split = build_image_split(&gradient_image(7, 6), 2).unwrap();
        for (x, y) in split.train.inputs.iter_rows().zip(split.train.targets.iter_rows()) {
            let found = split
                .test
                .inputs
                .iter_rows()
                .zip(split.test.targets.iter_rows())
                .any(|(tx, ty)| tx == x && ty == y);
            assert!(found);
        }
    }

    #[test]
    fn rejects_degenerate_images() {
        let line = RgbImage::new(1, 4, vec![0; 12]).unwrap();
        assert!(build_image_split(&line, 2).is_err());
    }

    #[test]
    fn raster_round_trip_and_clamp() {
        let img = gradient_image(3, 2);
        let split = build_image_split(&img, 2).unwrap();
        assert_eq!(raster_from_predictions(2, 3, &split.test.targets).unwrap(), img);
        let wild = Matrix::new(1, 3, vec![-0.5, 0.5, 2.0]).unwrap();
        let px = raster_from_predictions(1, 1, &wild).unwrap();
        assert_eq!(px.data, vec![0, 128, 255]);
    }
}
