//! Binary latent file: magic "JGLT", version u16, d_g u16, R u16, n_sat
//! u16, then the flattened [g, r] payload as little-endian f32.

use crate::error::{Error, Result};
use crate::latent::LatentPair;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"JGLT";
const VERSION: u16 = 1;

pub fn save_latent(latent: &LatentPair, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(latent.global().len() as u16).to_le_bytes())?;
    w.write_all(&(latent.grid_res() as u16).to_le_bytes())?;
    w.write_all(&(latent.sat_count() as u16).to_le_bytes())?;
    for v in latent.global().iter().chain(latent.occupancy()) {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_latent(path: &Path) -> Result<LatentPair> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = [0u8; 12];
    r.read_exact(&mut header)
        .map_err(|_| Error::TruncatedFile(format!("{}: header", path.display())))?;
    if &header[0..4] != MAGIC {
        return Err(Error::BadMagic { expected: "JGLT" });
    }
    let u16_at = |i: usize| u16::from_le_bytes([header[i], header[i + 1]]);
    let version = u16_at(4);
    if version != VERSION {
        return Err(Error::UnsupportedVersion {
            expected: VERSION,
            got: version,
        });
    }
    let global_dim = u16_at(6) as usize;
    let grid_res = u16_at(8) as usize;
    let sat_count = u16_at(10) as u32;
    let dim = global_dim + grid_res * grid_res * grid_res;
    let mut payload = vec![0u8; dim * 4];
    r.read_exact(&mut payload)
        .map_err(|_| Error::TruncatedFile(format!("{}: payload", path.display())))?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::MalformedFile(format!(
            "{}: trailing bytes",
            path.display()
        )));
    }
    let floats: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    LatentPair::new(
        floats[..global_dim].to_vec(),
        floats[global_dim..].to_vec(),
        grid_res,
        sat_count,
    )
}
