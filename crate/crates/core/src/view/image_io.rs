//! PNG export/import of rendered views: 8-bit RGB with the coverage mask in
//! the alpha channel. Depth is not stored; imported views carry a unit
//! placeholder depth on covered pixels, which is all unprojection needs.

use crate::error::Result;
use crate::view::{pos_to_color, ColorCode, RenderedView};
use image::{Rgba, RgbaImage};
use nalgebra::Vector3;
use std::path::Path;

pub fn save_view_png(view: &RenderedView, path: &Path) -> Result<()> {
    let mut img = RgbaImage::new(view.width(), view.height());
    for y in 0..view.height() {
        for x in 0..view.width() {
            let pixel = if view.mask_at(x, y) {
                let ColorCode::Quantized(q) = pos_to_color(&view.color_at(x, y), true)? else {
                    unreachable!()
                };
                Rgba([q[0], q[1], q[2], 255])
            } else {
                Rgba([0, 0, 0, 0])
            };
            img.put_pixel(x, y, pixel);
        }
    }
    img.save(path)?;
    Ok(())
}

pub fn load_view_png(path: &Path) -> Result<RenderedView> {
    let img = image::open(path)?.into_rgba8();
    let (width, height) = img.dimensions();
    let n = (width * height) as usize;
    let mut color = vec![Vector3::zeros(); n];
    let mut depth = vec![f64::INFINITY; n];
    let mut mask = vec![false; n];
    for (x, y, pixel) in img.enumerate_pixels() {
        let idx = (y * width + x) as usize;
        if pixel[3] >= 128 {
            mask[idx] = true;
            depth[idx] = 1.0;
            color[idx] = Vector3::new(
                pixel[0] as f64 / 255.0,
                pixel[1] as f64 / 255.0,
                pixel[2] as f64 / 255.0,
            );
        }
    }
    RenderedView::from_planes(width, height, color, depth, mask)
}
