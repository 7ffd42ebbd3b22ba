use rayon::prelude::*;

use super::{FeatureMap, SparseDirMatrix};
use crate::error::{Error, Result};
use crate::surface_graph::NUM_BINS;

/// Rows gathered per block before the dense product.
const ROW_BLOCK: usize = 64;

/// Per-bin weight blocks `W_m` (`in x out`, row-major) and a bias.
///
/// Absent bins carry no weights, so a 1x1 convolution is just bin 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvWeights {
    in_channels: usize,
    out_channels: usize,
    active: Vec<usize>,
    /// Active blocks stacked vertically: `(active.len() * in) x out`.
    stacked: Vec<f32>,
    bias: Vec<f32>,
}

impl ConvWeights {
    pub fn new(
        in_channels: usize,
        out_channels: usize,
        taps: [Option<Vec<f32>>; NUM_BINS],
        bias: Vec<f32>,
    ) -> Result<Self> {
        if bias.len() != out_channels {
            return Err(Error::Shape(format!(
                "bias has {} entries for {out_channels} output channels",
                bias.len()
            )));
        }
        let mut active = Vec::new();
        let mut stacked = Vec::new();
        for (m, tap) in taps.into_iter().enumerate() {
            if let Some(w) = tap {
                if w.len() != in_channels * out_channels {
                    return Err(Error::Shape(format!(
                        "W_{m} has {} entries, expected {in_channels}x{out_channels}",
                        w.len()
                    )));
                }
                active.push(m);
                stacked.extend(w);
            }
        }
        Ok(ConvWeights {
            in_channels,
            out_channels,
            active,
            stacked,
            bias,
        })
    }

    /// Identity 1x1 convolution on `channels` channels.
    pub fn identity(channels: usize) -> Self {
        let mut w = vec![0.0; channels * channels];
        for c in 0..channels {
            w[c * channels + c] = 1.0;
        }
        let mut taps: [Option<Vec<f32>>; NUM_BINS] = Default::default();
        taps[0] = Some(w);
        ConvWeights::new(channels, channels, taps, vec![0.0; channels]).unwrap()
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    pub fn bias(&self) -> &[f32] {
        &self.bias
    }

    /// `W_m`, if present.
    pub fn tap(&self, m: usize) -> Option<&[f32]> {
        let block = self.in_channels * self.out_channels;
        self.active
            .iter()
            .position(|&a| a == m)
            .map(|p| &self.stacked[p * block..(p + 1) * block])
    }
}

/// `sum_m S_m X W_m + bias`.
///
/// For each block of rows the per-bin neighbour averages `S_m X` are gathered side
/// by side, then multiplied by the stacked weights in one dense product.
pub fn selection_conv(x: &FeatureMap, s: &SparseDirMatrix, w: &ConvWeights) -> Result<FeatureMap> {
    let cin = w.in_channels;
    let cout = w.out_channels;
    if x.cols() != cin {
        return Err(Error::Shape(format!(
            "layer expects {cin} input channels, features have {}",
            x.cols()
        )));
    }
    if x.rows() != s.nodes() {
        return Err(Error::Shape(format!(
            "{} feature rows for a {}-node graph",
            x.rows(),
            s.nodes()
        )));
    }
    let n = x.rows();
    let depth = w.active.len() * cin;
    let mut out = vec![0f32; n * cout];
    if n == 0 || cout == 0 {
        return FeatureMap::new(n, cout, out);
    }
    let xdata = x.data();

    out.par_chunks_mut(ROW_BLOCK * cout)
        .enumerate()
        .for_each_init(
            || vec![0f32; ROW_BLOCK * depth],
            |gather, (block, out_block)| {
                let row0 = block * ROW_BLOCK;
                let rows = out_block.len() / cout;
                let gather = &mut gather[..rows * depth];
                gather.fill(0.0);
                for r in 0..rows {
                    let i = row0 + r;
                    let grow = &mut gather[r * depth..(r + 1) * depth];
                    for (a, &m) in w.active.iter().enumerate() {
                        let dst = &mut grow[a * cin..(a + 1) * cin];
                        let (idx, val) = s.bin(m).row(i);
                        for (&j, &v) in idx.iter().zip(val) {
                            let src = &xdata[j as usize * cin..(j as usize + 1) * cin];
                            for (d, &x) in dst.iter_mut().zip(src) {
                                *d += v * x;
                            }
                        }
                    }
                }
                for row in out_block.chunks_exact_mut(cout) {
                    row.copy_from_slice(&w.bias);
                }
                if depth == 0 {
                    return;
                }
                // SAFETY: the slices are exactly rows x depth, depth x cout and
                // rows x cout, all row-major and non-overlapping.
                unsafe {
                    matrixmultiply::sgemm(
                        rows,
                        depth,
                        cout,
                        1.0,
                        gather.as_ptr(),
                        depth as isize,
                        1,
                        w.stacked.as_ptr(),
                        cout as isize,
                        1,
                        1.0,
                        out_block.as_mut_ptr(),
                        cout as isize,
                        1,
                    );
                }
            },
        );

    FeatureMap::new(n, cout, out)
}
