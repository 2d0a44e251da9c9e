//! Realization export: a per-level CSV table and a binary cache.
//!
//! Cache layout (little endian): magic `CASCADE1`, 16-byte model digest,
//! seed `u64`, depth `u64`, then for each level `0..=depth` the `Q₁` and `Q₂`
//! arrays, then the two grid arrays. Lengths are implied by base and depth.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use super::CascadeRealization;
use crate::error::{Error, Result};
use crate::weights::WeightModel;
use crate::words::Word;

const MAGIC: &[u8; 8] = b"CASCADE1";

/// Writes `word,q1,q2,f1,f2` for every word at `level`; `f_k` is `F_{k,n}` at
/// the right endpoint of `I_w`.
pub fn write_level_csv<W: Write>(real: &CascadeRealization, level: usize, out: W) -> Result<()> {
    if level > real.depth() {
        return Err(Error::DepthExceeded {
            requested: level,
            available: real.depth(),
        });
    }
    let mut out = BufWriter::new(out);
    writeln!(out, "word,q1,q2,f1,f2")?;
    for i in 0..real.width(level) {
        let word = Word::from_index(real.base(), level, i as u64)?;
        let (q1, q2) = real.product_at(level, i);
        let (_, z) = real.grid_span(level, i);
        writeln!(
            out,
            "{word},{q1:e},{q2:e},{:e},{:e}",
            real.grid(0)[z],
            real.grid(1)[z]
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Conventional cache file name for `(model digest, seed, depth)`.
pub fn cache_path(dir: &Path, model: &WeightModel, seed: u64, depth: usize) -> PathBuf {
    dir.join(format!("{}-s{seed}-n{depth}.bin", model.digest()))
}

pub fn save_binary(real: &CascadeRealization, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(MAGIC)?;
    out.write_all(real.model().digest().as_bytes())?;
    out.write_all(&real.seed().to_le_bytes())?;
    out.write_all(&(real.depth() as u64).to_le_bytes())?;
    let mut put = |xs: &[f64]| -> std::io::Result<()> {
        for x in xs {
            out.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    };
    for level in 0..=real.depth() {
        put(real.products(level, 0))?;
        put(real.products(level, 1))?;
    }
    put(real.grid(0))?;
    put(real.grid(1))?;
    out.flush()?;
    Ok(())
}

pub fn load_binary(path: &Path, model: &WeightModel) -> Result<CascadeRealization> {
    let mut input = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Config(format!("{} is not a realization cache", path.display())));
    }
    let mut digest = [0u8; 16];
    input.read_exact(&mut digest)?;
    if digest != model.digest().as_bytes() {
        return Err(Error::Config(format!(
            "{} was written for a different model",
            path.display()
        )));
    }
    let mut word = [0u8; 8];
    input.read_exact(&mut word)?;
    let seed = u64::from_le_bytes(word);
    input.read_exact(&mut word)?;
    let depth = u64::from_le_bytes(word) as usize;
    let b = model.base() as usize;
    let mut take = |len: usize| -> Result<Vec<f64>> {
        let mut v = Vec::with_capacity(len);
        let mut buf = [0u8; 8];
        for _ in 0..len {
            input.read_exact(&mut buf)?;
            v.push(f64::from_le_bytes(buf));
        }
        Ok(v)
    };
    let mut products = Vec::with_capacity(depth + 1);
    for level in 0..=depth {
        let width = b.pow(level as u32);
        products.push([take(width)?, take(width)?]);
    }
    let cells = b.pow(depth as u32) + 1;
    let grid = [take(cells)?, take(cells)?];
    Ok(CascadeRealization::from_parts(model, seed, depth, products, grid))
}
