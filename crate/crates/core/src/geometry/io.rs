//! Point-cloud file I/O: ASCII XYZ and binary little-endian PLY.
//!
//! XYZ: one `x y z [r g b]` line per point (floats, colors in [0,1]),
//! `#` starts a comment. PLY: binary_little_endian 1.0 with float x/y/z and
//! optional uchar red/green/blue. [`load_cloud`] picks the format from the
//! file extension.

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use nalgebra::Vector3;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

/// Load a cloud, auto-detecting the format by extension (`.xyz` / `.ply`).
pub fn load_cloud(path: &Path) -> Result<PointCloud> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("ply") => load_ply(path),
        Some(ext) if ext.eq_ignore_ascii_case("xyz") => load_xyz(path),
        other => Err(Error::MalformedFile(format!(
            "unknown point-cloud extension {other:?} for {}",
            path.display()
        ))),
    }
}

/// Save a cloud, auto-detecting the format by extension (`.xyz` / `.ply`).
pub fn save_cloud(cloud: &PointCloud, path: &Path) -> Result<()> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("ply") => save_ply(cloud, path),
        Some(ext) if ext.eq_ignore_ascii_case("xyz") => save_xyz(cloud, path),
        other => Err(Error::MalformedFile(format!(
            "unknown point-cloud extension {other:?} for {}",
            path.display()
        ))),
    }
}

pub fn load_xyz(path: &Path) -> Result<PointCloud> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut points = Vec::new();
    let mut colors = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<f64> = content
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>().map_err(|_| {
                    Error::MalformedFile(format!(
                        "{}:{}: bad float {t:?}",
                        path.display(),
                        lineno + 1
                    ))
                })
            })
            .collect::<Result<_>>()?;
        match fields.len() {
            3 => points.push(Vector3::new(fields[0], fields[1], fields[2])),
            6 => {
                points.push(Vector3::new(fields[0], fields[1], fields[2]));
                colors.push(Vector3::new(fields[3], fields[4], fields[5]));
            }
            n => {
                return Err(Error::MalformedFile(format!(
                    "{}:{}: expected 3 or 6 fields, got {n}",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }
    if !colors.is_empty() && colors.len() != points.len() {
        return Err(Error::MalformedFile(format!(
            "{}: mixed colored and uncolored rows",
            path.display()
        )));
    }
    if colors.is_empty() {
        PointCloud::new(points)
    } else {
        PointCloud::with_colors(points, colors)
    }
}

pub fn save_xyz(cloud: &PointCloud, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    match cloud.colors() {
        Some(colors) => {
            for (p, c) in cloud.points().iter().zip(colors) {
                writeln!(w, "{} {} {} {} {} {}", p.x, p.y, p.z, c.x, c.y, c.z)?;
            }
        }
        None => {
            for p in cloud.points() {
                writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_ply(path: &Path) -> Result<PointCloud> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut header = Vec::new();
    // header is ASCII lines terminated by "end_header"
    loop {
        let mut line = Vec::new();
        let n = read_until_newline(&mut reader, &mut line)?;
        if n == 0 {
            return Err(Error::TruncatedFile(format!(
                "{}: header without end_header",
                path.display()
            )));
        }
        let text = String::from_utf8_lossy(&line).trim().to_string();
        let done = text == "end_header";
        header.push(text);
        if done {
            break;
        }
    }
    if header.first().map(String::as_str) != Some("ply") {
        return Err(Error::BadMagic { expected: "ply" });
    }
    if !header
        .iter()
        .any(|l| l.starts_with("format binary_little_endian"))
    {
        return Err(Error::MalformedFile(format!(
            "{}: only binary_little_endian PLY is supported",
            path.display()
        )));
    }
    let count: usize = header
        .iter()
        .find_map(|l| l.strip_prefix("element vertex "))
        .ok_or_else(|| Error::MalformedFile(format!("{}: no vertex element", path.display())))?
        .trim()
        .parse()
        .map_err(|_| Error::MalformedFile(format!("{}: bad vertex count", path.display())))?;
    let props: Vec<&str> = header
        .iter()
        .filter_map(|l| l.strip_prefix("property "))
        .collect();
    let has_color = match props.as_slice() {
        ["float x", "float y", "float z"] => false,
        ["float x", "float y", "float z", "uchar red", "uchar green", "uchar blue"] => true,
        other => {
            return Err(Error::MalformedFile(format!(
                "{}: unsupported property layout {other:?}",
                path.display()
            )))
        }
    };
    let stride = if has_color { 15 } else { 12 };
    let mut payload = Vec::new();
    reader.read_to_end(&mut payload)?;
    if payload.len() < count * stride {
        return Err(Error::TruncatedFile(format!(
            "{}: expected {} payload bytes, got {}",
            path.display(),
            count * stride,
            payload.len()
        )));
    }
    let mut points = Vec::with_capacity(count);
    let mut colors = Vec::with_capacity(if has_color { count } else { 0 });
    for i in 0..count {
        let rec = &payload[i * stride..(i + 1) * stride];
        let f = |k: usize| f32::from_le_bytes(rec[4 * k..4 * k + 4].try_into().unwrap()) as f64;
        points.push(Vector3::new(f(0), f(1), f(2)));
        if has_color {
            colors.push(Vector3::new(
                rec[12] as f64 / 255.0,
                rec[13] as f64 / 255.0,
                rec[14] as f64 / 255.0,
            ));
        }
    }
    if has_color {
        PointCloud::with_colors(points, colors)
    } else {
        PointCloud::new(points)
    }
}

pub fn save_ply(cloud: &PointCloud, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let has_color = cloud.colors().is_some();
    write!(
        w,
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\n\
         property float x\nproperty float y\nproperty float z\n",
        cloud.len()
    )?;
    if has_color {
        write!(
            w,
            "property uchar red\nproperty uchar green\nproperty uchar blue\n"
        )?;
    }
    write!(w, "end_header\n")?;
    for (i, p) in cloud.points().iter().enumerate() {
        for a in 0..3 {
            w.write_all(&(p[a] as f32).to_le_bytes())?;
        }
        if let Some(colors) = cloud.colors() {
            let c = colors[i];
            for a in 0..3 {
                w.write_all(&[(c[a] * 255.0).round().clamp(0.0, 255.0) as u8])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn read_until_newline(reader: &mut impl BufRead, out: &mut Vec<u8>) -> Result<usize> {
    let n = reader.read_until(b'\n', out)?;
    Ok(n)
}
