//! Minimal deterministic line-chart renderer for sweep reports. Keeps the
//! output stack free of system font dependencies: a small built-in 5x7
//! glyph set covers the digits and labels we emit.

use crate::error::Result;
use image::{Rgb, RgbImage};
use std::path::Path;

pub struct ChartSeries {
    pub label: String,
    /// (x, y) points; drawn in the given order.
    pub points: Vec<(f64, f64)>,
}

const MARGIN_L: u32 = 56;
const MARGIN_R: u32 = 16;
const MARGIN_T: u32 = 28;
const MARGIN_B: u32 = 44;
const WIDTH: u32 = 640;
const HEIGHT: u32 = 440;

const PALETTE: [[u8; 3]; 6] = [
    [214, 69, 65],
    [31, 119, 180],
    [44, 160, 44],
    [148, 103, 189],
    [255, 127, 14],
    [23, 190, 207],
];

/// Render series into a PNG line chart with tick labels and a legend.
pub fn render_line_chart(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[ChartSeries],
) -> Result<()> {
    let mut img = RgbImage::from_pixel(WIDTH, HEIGHT, Rgb([255, 255, 255]));
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
    let (x_lo, x_hi) = padded_range(all.iter().map(|p| p.0));
    let (y_lo, y_hi) = padded_range(all.iter().map(|p| p.1));

    let plot_w = (WIDTH - MARGIN_L - MARGIN_R) as f64;
    let plot_h = (HEIGHT - MARGIN_T - MARGIN_B) as f64;
    let to_px = |x: f64, y: f64| -> (i64, i64) {
        let fx = (x - x_lo) / (x_hi - x_lo);
        let fy = (y - y_lo) / (y_hi - y_lo);
        (
            (MARGIN_L as f64 + fx * plot_w).round() as i64,
            (MARGIN_T as f64 + (1.0 - fy) * plot_h).round() as i64,
        )
    };

    let axis = Rgb([40, 40, 40]);
    let grid = Rgb([225, 225, 225]);
    // grid + ticks
    for k in 0..=4 {
        let fx = k as f64 / 4.0;
        let x_val = x_lo + fx * (x_hi - x_lo);
        let y_val = y_lo + fx * (y_hi - y_lo);
        let (px, _) = to_px(x_val, y_lo);
        let (_, py) = to_px(x_lo, y_val);
        draw_line(&mut img, px, MARGIN_T as i64, px, (HEIGHT - MARGIN_B) as i64, grid);
        draw_line(&mut img, MARGIN_L as i64, py, (WIDTH - MARGIN_R) as i64, py, grid);
        draw_text(
            &mut img,
            px - 18,
            (HEIGHT - MARGIN_B + 6) as i64,
            &format_tick(x_val),
            axis,
        );
        draw_text(&mut img, 4, py - 3, &format_tick(y_val), axis);
    }
    // axes
    draw_line(
        &mut img,
        MARGIN_L as i64,
        MARGIN_T as i64,
        MARGIN_L as i64,
        (HEIGHT - MARGIN_B) as i64,
        axis,
    );
    draw_line(
        &mut img,
        MARGIN_L as i64,
        (HEIGHT - MARGIN_B) as i64,
        (WIDTH - MARGIN_R) as i64,
        (HEIGHT - MARGIN_B) as i64,
        axis,
    );
    draw_text(&mut img, MARGIN_L as i64, 8, title, axis);
    draw_text(
        &mut img,
        (WIDTH / 2 - 20) as i64,
        (HEIGHT - 14) as i64,
        x_label,
        axis,
    );
    draw_text(&mut img, 4, 8, y_label, axis);

    for (si, s) in series.iter().enumerate() {
        let color = Rgb(PALETTE[si % PALETTE.len()]);
        let px: Vec<(i64, i64)> = s.points.iter().map(|&(x, y)| to_px(x, y)).collect();
        for w in px.windows(2) {
            draw_line(&mut img, w[0].0, w[0].1, w[1].0, w[1].1, color);
        }
        for &(x, y) in &px {
            draw_marker(&mut img, x, y, color);
        }
        // legend
        let ly = MARGIN_T as i64 + 14 * si as i64;
        let lx = (WIDTH - MARGIN_R) as i64 - 150;
        for dx in 0..10 {
            put(&mut img, lx + dx, ly + 3, color);
            put(&mut img, lx + dx, ly + 4, color);
        }
        draw_text(&mut img, lx + 14, ly, &s.label, axis);
    }

    img.save(path)?;
    Ok(())
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    let pad = 0.06 * (hi - lo);
    (lo - pad, hi + pad)
}

fn format_tick(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.abs() >= 100.0 || v.abs() < 0.01 {
        format!("{v:.1e}")
    } else {
        format!("{v:.3}")
    }
}

fn put(img: &mut RgbImage, x: i64, y: i64, color: Rgb<u8>) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, color);
    }
}

fn draw_marker(img: &mut RgbImage, x: i64, y: i64, color: Rgb<u8>) {
    for dy in -1..=1 {
        for dx in -1..=1 {
            put(img, x + dx, y + dy, color);
        }
    }
}

fn draw_line(img: &mut RgbImage, x0: i64, y0: i64, x1: i64, y1: i64, color: Rgb<u8>) {
    // Bresenham
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    let (mut x, mut y) = (x0, y0);
    loop {
        put(img, x, y, color);
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

fn draw_text(img: &mut RgbImage, x: i64, y: i64, text: &str, color: Rgb<u8>) {
    let mut cx = x;
    for ch in text.chars() {
        if let Some(rows) = glyph(ch.to_ascii_lowercase()) {
            for (ry, row) in rows.iter().enumerate() {
                for (rx, cell) in row.chars().enumerate() {
                    if cell == 'x' {
                        put(img, cx + rx as i64, y + ry as i64, color);
                    }
                }
            }
        }
        cx += 6;
    }
}

/// 5x7 glyphs for the characters that appear in titles, labels, and tick
/// values. Unknown characters render as spaces.
#[rustfmt::skip]
fn glyph(c: char) -> Option<[&'static str; 7]> {
    let g: [&'static str; 7] = match c {
        '0' => [" xxx ", "x   x", "x  xx", "x x x", "xx  x", "x   x", " xxx "],
        '1' => ["  x  ", " xx  ", "  x  ", "  x  ", "  x  ", "  x  ", " xxx "],
        '2' => [" xxx ", "x   x", "    x", "   x ", "  x  ", " x   ", "xxxxx"],
        '3' => [" xxx ", "x   x", "    x", "  xx ", "    x", "x   x", " xxx "],
        '4' => ["   x ", "  xx ", " x x ", "x  x ", "xxxxx", "   x ", "   x "],
        '5' => ["xxxxx", "x    ", "xxxx ", "    x", "    x", "x   x", " xxx "],
        '6' => [" xxx ", "x    ", "x    ", "xxxx ", "x   x", "x   x", " xxx "],
        '7' => ["xxxxx", "    x", "   x ", "  x  ", "  x  ", "  x  ", "  x  "],
        '8' => [" xxx ", "x   x", "x   x", " xxx ", "x   x", "x   x", " xxx "],
        '9' => [" xxx ", "x   x", "x   x", " xxxx", "    x", "    x", " xxx "],
        '.' => ["     ", "     ", "     ", "     ", "     ", " xx  ", " xx  "],
        '-' => ["     ", "     ", "     ", "xxxxx", "     ", "     ", "     "],
        '+' => ["     ", "  x  ", "  x  ", "xxxxx", "  x  ", "  x  ", "     "],
        '=' => ["     ", "     ", "xxxxx", "     ", "xxxxx", "     ", "     "],
        '/' => ["    x", "    x", "   x ", "  x  ", " x   ", "x    ", "x    "],
        'a' => ["     ", "     ", " xxx ", "    x", " xxxx", "x   x", " xxxx"],
        'b' => ["x    ", "x    ", "xxxx ", "x   x", "x   x", "x   x", "xxxx "],
        'c' => ["     ", "     ", " xxx ", "x    ", "x    ", "x   x", " xxx "],
        'd' => ["    x", "    x", " xxxx", "x   x", "x   x", "x   x", " xxxx"],
        'e' => ["     ", "     ", " xxx ", "x   x", "xxxxx", "x    ", " xxx "],
        'g' => ["     ", "     ", " xxxx", "x   x", " xxxx", "    x", " xxx "],
        'h' => ["x    ", "x    ", "xxxx ", "x   x", "x   x", "x   x", "x   x"],
        'i' => ["  x  ", "     ", " xx  ", "  x  ", "  x  ", "  x  ", " xxx "],
        'k' => ["x    ", "x   x", "x  x ", "xxx  ", "x  x ", "x   x", "x   x"],
        'l' => [" xx  ", "  x  ", "  x  ", "  x  ", "  x  ", "  x  ", " xxx "],
        'm' => ["     ", "     ", "xx x ", "x x x", "x x x", "x x x", "x x x"],
        'n' => ["     ", "     ", "xxxx ", "x   x", "x   x", "x   x", "x   x"],
        'o' => ["     ", "     ", " xxx ", "x   x", "x   x", "x   x", " xxx "],
        'p' => ["     ", "     ", "xxxx ", "x   x", "xxxx ", "x    ", "x    "],
        'r' => ["     ", "     ", "x xx ", "xx   ", "x    ", "x    ", "x    "],
        's' => ["     ", "     ", " xxxx", "x    ", " xxx ", "    x", "xxxx "],
        't' => ["  x  ", "  x  ", "xxxxx", "  x  ", "  x  ", "  x  ", "   xx"],
        'u' => ["     ", "     ", "x   x", "x   x", "x   x", "x   x", " xxxx"],
        'v' => ["     ", "     ", "x   x", "x   x", "x   x", " x x ", "  x  "],
        'w' => ["     ", "     ", "x x x", "x x x", "x x x", "x x x", " x x "],
        'x' => ["     ", "     ", "x   x", " x x ", "  x  ", " x x ", "x   x"],
        'y' => ["     ", "     ", "x   x", " x x ", "  x  ", "  x  ", "  x  "],
        ' ' => ["     ", "     ", "     ", "     ", "     ", "     ", "     "],
        _ => return None,
    };
    Some(g)
}
