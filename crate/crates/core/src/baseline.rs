//! Round-to-nearest (RTN) uniform quantization, the matched-budget baseline.
//!
//! Asymmetric min-max scheme: every group maps `[min, max]` onto the integer
//! grid `0..=2^bits − 1` and is dequantized straight back, so the output is a
//! simulated-quantization matrix directly comparable with a decompressed one.

use std::fmt;
use std::str::FromStr;

use crate::error::{Result, SwscError};
use crate::linalg::WeightMatrix;

pub const MIN_BITS: u32 = 2;
pub const MAX_BITS: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Granularity {
    PerTensor,
    #[default]
    PerColumn,
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Granularity::PerTensor => "per-tensor",
            Granularity::PerColumn => "per-column",
        })
    }
}

impl FromStr for Granularity {
    type Err = SwscError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-tensor" | "tensor" => Ok(Granularity::PerTensor),
            "per-column" | "column" => Ok(Granularity::PerColumn),
            other => Err(SwscError::param(format!(
                "unknown granularity {other:?} (expected per-tensor or per-column)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RtnConfig {
    bits: u32,
    granularity: Granularity,
}

impl RtnConfig {
    pub fn new(bits: u32, granularity: Granularity) -> Result<Self> {
        if !(MIN_BITS..=MAX_BITS).contains(&bits) {
            return Err(SwscError::param(format!(
                "rtn bits {bits} out of range {MIN_BITS}..={MAX_BITS}"
            )));
        }
        Ok(RtnConfig { bits, granularity })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    fn levels(&self) -> f64 {
        ((1u32 << self.bits) - 1) as f64
    }
}

/// Min-max grid of one quantization group.
#[derive(Debug, Clone, Copy)]
struct Grid {
    min: f64,
    max: f64,
    scale: f64,
    levels: f64,
}

impl Grid {
    fn fit(values: impl Iterator<Item = f64>, levels: f64) -> Grid {
        let (min, max) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
        Grid {
            min,
            max,
            scale: (max - min) / levels,
            levels,
        }
    }

    fn apply(&self, v: f64) -> f64 {
        if self.max == self.min {
            return self.min;
        }
        let q = ((v - self.min) / self.scale).round().clamp(0.0, self.levels);
        // the top level maps to max itself so the grid is reproduced exactly
        if q == self.levels {
            self.max
        } else {
            self.min + q * self.scale
        }
    }
}

/// Quantizes every group of `w` to `cfg.bits()` bits and dequantizes back.
pub fn rtn_quantize_dequantize(w: &WeightMatrix, cfg: &RtnConfig) -> WeightMatrix {
    let (m, n) = w.shape();
    let levels = cfg.levels();
    let mut out = w.values().to_vec();
    match cfg.granularity {
        Granularity::PerTensor => {
            let grid = Grid::fit(w.values().iter().copied(), levels);
            out.iter_mut().for_each(|v| *v = grid.apply(*v));
        }
        Granularity::PerColumn => {
            for j in 0..n {
                let grid = Grid::fit((0..m).map(|i| w.get(i, j)), levels);
                for i in 0..m {
                    out[i * n + j] = grid.apply(w.get(i, j));
                }
            }
        }
    }
    WeightMatrix::new(m, n, out).expect("dequantized values stay within the finite input range")
}
