//! Upper bounds on computable dimension from a finite codec family.
//!
//! `K_M(w) = min(|encode(w)|, |w|)`; the profile takes, at each prefix length,
//! the best ratio `K_M(x[1..n]) / n` over the family, and estimates the liminf
//! by the minimum over the last quarter of the grid. Every figure is an upper
//! bound for the family, not the dimension itself.

mod codecs;

pub use codecs::{
    pack_bits, symbol_bits, unpack_bits, BitReader, BitWriter, Codec, Lz77, Passthrough,
    RepsysCodec, RunLength, Selector, MAX_DECODE_LEN, MIN_MATCH, REPSYS_HEADER_DIGITS,
};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numstream::{self, RealSpec};
use crate::repsys::RepSystem;

/// `K_M(w)`, after checking that the codec reproduces `w`.
pub fn k_m(codec: &dyn Codec, word: &[u8], base: u32) -> Result<usize> {
    if word.is_empty() {
        return Err(Error::InvalidArgument(
            "K_M is defined on nonempty words".into(),
        ));
    }
    let program = codec.encode(word, base)?;
    match codec.decode(&program, base) {
        Ok(back) if back == word => Ok(program.len().min(word.len())),
        _ => Err(Error::CodecInvalid(codec.name())),
    }
}

/// Codec names accepted by [`codec_by_name`].
pub const CODEC_NAMES: [&str; 4] = ["passthrough", "rle", "lz", "repsys"];

/// `repsys` means the codec over the identity system of `base`; `repsys:<decl>`
/// takes any declaration accepted by [`crate::repsys::parse_repsys`].
pub fn codec_by_name(name: &str, base: u32) -> Result<Box<dyn Codec>> {
    Ok(match name {
        "passthrough" => Box::new(Passthrough),
        "rle" => Box::new(RunLength),
        "lz" => Box::new(Lz77::default()),
        "repsys" => Box::new(RepsysCodec::new(RepSystem::identity(base)?)),
        _ => match name.strip_prefix("repsys:") {
            Some(decl) => Box::new(RepsysCodec::new(crate::repsys::parse_repsys(decl, base)?)),
            None => {
                return Err(Error::InvalidArgument(format!(
                    "unknown codec `{name}`; known: {}",
                    CODEC_NAMES.join(", ")
                )))
            }
        },
    })
}

/// Pass-through, run-length, LZ and the identity repsys codec.
pub fn default_codecs(base: u32) -> Result<Vec<Box<dyn Codec>>> {
    CODEC_NAMES.iter().map(|n| codec_by_name(n, base)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DimPoint {
    pub n: usize,
    /// `K_M` per codec, in family order.
    pub k_m: Vec<usize>,
}

impl DimPoint {
    pub fn best(&self) -> usize {
        self.k_m.iter().copied().min().unwrap_or(self.n)
    }

    pub fn ratio(&self) -> f64 {
        self.best() as f64 / self.n as f64
    }
}

#[derive(Clone, Debug)]
pub struct DimProfile {
    pub spec: String,
    pub base: u32,
    pub codecs: Vec<String>,
    pub points: Vec<DimPoint>,
}

impl DimProfile {
    /// Minimum best ratio over the last quarter of the grid (at least one point).
    pub fn estimate(&self) -> f64 {
        let tail = self.points.len().div_ceil(4).max(1);
        self.points[self.points.len().saturating_sub(tail)..]
            .iter()
            .map(DimPoint::ratio)
            .fold(1.0, f64::min)
    }

    /// Columns `spec,n,codec,k_m,ratio`; the `min` rows carry the family bound.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("spec,n,codec,k_m,ratio\n");
        for p in &self.points {
            let rows = self
                .codecs
                .iter()
                .map(String::as_str)
                .zip(p.k_m.iter().copied())
                .chain(std::iter::once(("min", p.best())));
            for (codec, k) in rows {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    self.spec,
                    p.n,
                    codec,
                    k,
                    k as f64 / p.n as f64
                ));
            }
        }
        out
    }
}

pub fn dim_profile(
    spec: &RealSpec,
    base: u32,
    codecs: &[Box<dyn Codec>],
    n_grid: &[usize],
) -> Result<DimProfile> {
    if codecs.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one codec is required".into(),
        ));
    }
    if n_grid.is_empty() || n_grid.contains(&0) {
        return Err(Error::InvalidArgument(
            "grid lengths must be positive".into(),
        ));
    }
    let n_max = n_grid.iter().copied().max().unwrap_or(0);
    let all = numstream::digits(spec, base, n_max)?;
    let cells: Vec<(usize, usize)> = n_grid
        .iter()
        .flat_map(|&n| (0..codecs.len()).map(move |c| (n, c)))
        .collect();
    let values = cells
        .par_iter()
        .map(|&(n, c)| k_m(codecs[c].as_ref(), &all.digits()[..n], base))
        .collect::<Result<Vec<_>>>()?;
    let points = values
        .chunks(codecs.len())
        .zip(n_grid)
        .map(|(k, &n)| DimPoint { n, k_m: k.to_vec() })
        .collect();
    Ok(DimProfile {
        spec: spec.to_string(),
        base,
        codecs: codecs.iter().map(|c| c.name()).collect(),
        points,
    })
}
