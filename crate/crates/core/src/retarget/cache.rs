//! Pair cache file: magic "JGRP", version u16, dimension u32, count u32,
//! then per pair the x0 block followed by the x1 block, little-endian f32.

use crate::error::{Error, Result};
use crate::retarget::RetargetPair;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"JGRP";
const VERSION: u16 = 1;

pub fn save_pairs(pairs: &[RetargetPair], path: &Path) -> Result<()> {
    if pairs.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let dim = pairs[0].dim();
    if pairs.iter().any(|p| p.dim() != dim) {
        return Err(Error::InvalidFlowInput("inconsistent pair dims".into()));
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(dim as u32).to_le_bytes())?;
    w.write_all(&(pairs.len() as u32).to_le_bytes())?;
    for p in pairs {
        for v in p.x0.iter().chain(&p.x1) {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_pairs(path: &Path) -> Result<Vec<RetargetPair>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut head = [0u8; 14];
    r.read_exact(&mut head)
        .map_err(|_| Error::TruncatedFile(format!("{}: header", path.display())))?;
    if &head[0..4] != MAGIC {
        return Err(Error::BadMagic { expected: "JGRP" });
    }
    let version = u16::from_le_bytes([head[4], head[5]]);
    if version != VERSION {
        return Err(Error::UnsupportedVersion {
            expected: VERSION,
            got: version,
        });
    }
    let dim = u32::from_le_bytes(head[6..10].try_into().unwrap()) as usize;
    let count = u32::from_le_bytes(head[10..14].try_into().unwrap()) as usize;
    let mut payload = vec![0u8; count * dim * 8];
    r.read_exact(&mut payload)
        .map_err(|_| Error::TruncatedFile(format!("{}: payload", path.display())))?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::MalformedFile(format!(
            "{}: trailing bytes",
            path.display()
        )));
    }
    let mut pairs = Vec::with_capacity(count);
    let mut floats = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()));
    for _ in 0..count {
        let x0: Vec<f32> = floats.by_ref().take(dim).collect();
        let x1: Vec<f32> = floats.by_ref().take(dim).collect();
        pairs.push(RetargetPair { x0, x1 });
    }
    Ok(pairs)
}
