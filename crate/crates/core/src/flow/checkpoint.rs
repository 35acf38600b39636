//! Checkpoint file: magic "JGRF", version u16, state dim u32, time_freqs
//! u16, layer count u16, per-layer (in u32, out u32), then all parameters
//! as little-endian f32 in layer order (weights row-major, then biases).

use crate::error::{Error, Result};
use crate::flow::{FlowModel, MlpSpec};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"JGRF";
const VERSION: u16 = 1;

pub fn save_checkpoint(model: &FlowModel, path: &Path) -> Result<()> {
    let spec = model.spec();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(spec.state_dim as u32).to_le_bytes())?;
    w.write_all(&(spec.time_freqs as u16).to_le_bytes())?;
    let dims = spec.layer_dims();
    w.write_all(&(dims.len() as u16).to_le_bytes())?;
    for (fan_in, fan_out) in &dims {
        w.write_all(&(*fan_in as u32).to_le_bytes())?;
        w.write_all(&(*fan_out as u32).to_le_bytes())?;
    }
    for p in model.params() {
        w.write_all(&p.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<FlowModel> {
    let mut r = BufReader::new(File::open(path)?);
    let mut head = [0u8; 14];
    r.read_exact(&mut head)
        .map_err(|_| Error::TruncatedFile(format!("{}: header", path.display())))?;
    if &head[0..4] != MAGIC {
        return Err(Error::BadMagic { expected: "JGRF" });
    }
    let version = u16::from_le_bytes([head[4], head[5]]);
    if version != VERSION {
        return Err(Error::UnsupportedVersion {
            expected: VERSION,
            got: version,
        });
    }
    let state_dim = u32::from_le_bytes(head[6..10].try_into().unwrap()) as usize;
    let time_freqs = u16::from_le_bytes([head[10], head[11]]) as usize;
    let n_layers = u16::from_le_bytes([head[12], head[13]]) as usize;
    if n_layers == 0 {
        return Err(Error::MalformedFile(format!(
            "{}: zero layers",
            path.display()
        )));
    }
    let mut dims = Vec::with_capacity(n_layers);
    let mut buf = [0u8; 8];
    for _ in 0..n_layers {
        r.read_exact(&mut buf)
            .map_err(|_| Error::TruncatedFile(format!("{}: layer table", path.display())))?;
        let fan_in = u32::from_le_bytes(buf[0..4].try_into().unwrap()) as usize;
        let fan_out = u32::from_le_bytes(buf[4..8].try_into().unwrap()) as usize;
        dims.push((fan_in, fan_out));
    }

    // reconstruct and cross-check the architecture
    let hidden: Vec<usize> = dims[..n_layers - 1].iter().map(|&(_, o)| o).collect();
    let spec = MlpSpec {
        state_dim,
        hidden,
        time_freqs,
    };
    let expected = spec.layer_dims();
    if expected != dims {
        return Err(Error::FileDimMismatch(format!(
            "{}: layer table {dims:?} inconsistent with state dim {state_dim} and {time_freqs} time frequencies",
            path.display()
        )));
    }

    let mut payload = vec![0u8; spec.param_count() * 4];
    r.read_exact(&mut payload)
        .map_err(|_| Error::TruncatedFile(format!("{}: parameters", path.display())))?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::MalformedFile(format!(
            "{}: trailing bytes",
            path.display()
        )));
    }
    let params: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    FlowModel::from_params(spec, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::velocity_eval;
    use crate::util::derive_rng;
    use rand::Rng;
    use tempfile::tempdir;

    fn sample_model() -> FlowModel {
        let spec = MlpSpec {
            state_dim: 5,
            hidden: vec![12, 8],
            time_freqs: 3,
        };
        let mut rng = derive_rng(111, "ckpt-test", 0);
        let params: Vec<f32> = (0..spec.param_count())
            .map(|_| (rng.random::<f64>() - 0.5) as f32)
            .collect();
        FlowModel::from_params(spec, params).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact_and_eval_identical() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.jgrf");
        let model = sample_model();
        save_checkpoint(&model, &path).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(back.params(), model.params());
        assert_eq!(back.spec(), model.spec());
        let x = [0.1, -0.7, 0.3, 2.0, -1.1];
        assert_eq!(
            velocity_eval(&back, &x, 0.42).unwrap(),
            velocity_eval(&model, &x, 0.42).unwrap()
        );
    }

    #[test]
    fn truncated_file_yields_no_partial_model() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.jgrf");
        save_checkpoint(&sample_model(), &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        for cut in [4usize, 10, 20, bytes.len() - 1] {
            std::fs::write(&path, &bytes[..cut]).unwrap();
            assert!(
                matches!(load_checkpoint(&path), Err(Error::TruncatedFile(_))),
                "cut at {cut}"
            );
        }
    }

    #[test]
    fn version_bump_is_an_explicit_error() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.jgrf");
        save_checkpoint(&sample_model(), &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[4] = 2;
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(Error::UnsupportedVersion { got: 2, .. })
        ));
    }

    #[test]
    fn corrupted_layer_table_is_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.jgrf");
        save_checkpoint(&sample_model(), &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[14] ^= 0xff; // first layer fan_in
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(Error::FileDimMismatch(_))
        ));
    }

    #[test]
    fn wrong_magic_is_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.jgrf");
        std::fs::write(&path, b"NOPE").unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(Error::TruncatedFile(_)) | Err(Error::BadMagic { .. })
        ));
        std::fs::write(&path, vec![0u8; 64]).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(Error::BadMagic { .. })
        ));
    }
}
