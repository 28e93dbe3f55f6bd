//! Canvas export as 8-bit grayscale PNG (value = round(pixel · 255)).

use std::path::Path;

use image::{GrayImage, Luma};

use crate::error::{Error, Result};
use crate::render::Canvas;

pub fn save_canvas_png(canvas: &Canvas, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut img = GrayImage::new(canvas.width() as u32, canvas.height() as u32);
    for r in 0..canvas.height() {
        for c in 0..canvas.width() {
            let v = (canvas.get(r, c) * 255.0).round().clamp(0.0, 255.0) as u8;
            img.put_pixel(c as u32, r as u32, Luma([v]));
        }
    }
    img.save(path)
        .map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: std::io::Error::other(e),
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_expected_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let mut canvas = Canvas::blank(8);
        canvas.set(0, 0, 1.0);
        canvas.set(3, 5, 0.5);
        let path = dir.path().join("glyph.png");
        save_canvas_png(&canvas, &path).unwrap();
        let img = image::open(&path).unwrap().to_luma8();
        assert_eq!(img.width(), 8);
        assert_eq!(img.get_pixel(0, 0).0[0], 255);
        assert_eq!(img.get_pixel(5, 3).0[0], 128);
        assert_eq!(img.get_pixel(1, 1).0[0], 0);
    }
}
