//! Plain 2D image CNN used as the reference for graph convolution on grids.
//!
//! Convolutions are cross-correlations with zero padding, pooling is a 2x2 block
//! mean and unpooling copies each coarse pixel onto its block.

#![allow(dead_code)]

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use splatstyle::conv_engine::{
    bias_name, weight_name, LayerKind, NetworkManifest, Tensor, WeightStore,
};

/// `h x w x c` image, pixel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub h: usize,
    pub w: usize,
    pub c: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn from_fn(h: usize, w: usize, c: usize, f: impl Fn(usize, usize, usize) -> f64) -> Image {
        let mut data = Vec::with_capacity(h * w * c);
        for r in 0..h {
            for col in 0..w {
                for ch in 0..c {
                    data.push(f(r, col, ch));
                }
            }
        }
        Image { h, w, c, data }
    }

    pub fn at(&self, r: usize, col: usize, ch: usize) -> f64 {
        self.data[(r * self.w + col) * self.c + ch]
    }

    pub fn pixel(&self, r: usize, col: usize) -> &[f64] {
        let i = (r * self.w + col) * self.c;
        &self.data[i..i + self.c]
    }
}

/// Kernel `[out][in][3][3]` (or `[out][in]` for 1x1) and bias of one layer.
#[derive(Debug, Clone)]
pub struct Kernel {
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
    pub size: usize,
}

pub fn conv2d(img: &Image, k: &Kernel, cout: usize) -> Image {
    let cin = img.c;
    let half = (k.size / 2) as isize;
    Image::from_fn(img.h, img.w, cout, |r, col, o| {
        let mut acc = k.bias[o] as f64;
        for ky in 0..k.size {
            for kx in 0..k.size {
                let rr = r as isize + ky as isize - half;
                let cc = col as isize + kx as isize - half;
                if rr < 0 || cc < 0 || rr >= img.h as isize || cc >= img.w as isize {
                    continue;
                }
                for i in 0..cin {
                    let w = k.weights[((o * cin + i) * k.size + ky) * k.size + kx] as f64;
                    acc += w * img.at(rr as usize, cc as usize, i);
                }
            }
        }
        acc
    })
}

pub fn mean_pool2(img: &Image) -> Image {
    let (h, w) = (img.h.div_ceil(2), img.w.div_ceil(2));
    Image::from_fn(h, w, img.c, |r, col, ch| {
        let mut sum = 0.0;
        let mut n = 0;
        for dr in 0..2 {
            for dc in 0..2 {
                let (rr, cc) = (2 * r + dr, 2 * col + dc);
                if rr < img.h && cc < img.w {
                    sum += img.at(rr, cc, ch);
                    n += 1;
                }
            }
        }
        sum / n as f64
    })
}

pub fn unpool2(img: &Image, h: usize, w: usize) -> Image {
    Image::from_fn(h, w, img.c, |r, col, ch| img.at(r / 2, col / 2, ch))
}

/// Random kernels for every conv layer, plus the weight store holding them.
pub fn random_kernels(
    manifest: &NetworkManifest,
    seed: u64,
) -> (WeightStore, BTreeMap<String, Kernel>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = WeightStore {
        manifest: manifest.clone(),
        tensors: BTreeMap::new(),
    };
    let mut kernels = BTreeMap::new();
    for layer in &manifest.layers {
        let (cin, cout) = (layer.in_channels, layer.out_channels);
        let size = match layer.kind {
            LayerKind::Conv => 3,
            LayerKind::Conv1x1 => 1,
            _ => continue,
        };
        let scale = (1.5 / (size * size * cin) as f64).sqrt() as f32;
        let weights: Vec<f32> = (0..cout * cin * size * size)
            .map(|_| rng.gen_range(-1.0f32..1.0) * scale)
            .collect();
        let bias: Vec<f32> = (0..cout).map(|_| rng.gen_range(-0.1f32..0.1)).collect();
        if size == 3 {
            store
                .insert_image_kernel(&layer.name, &weights, cin, cout, &bias)
                .unwrap();
        } else {
            let mut w0 = vec![0.0; cin * cout];
            for o in 0..cout {
                for i in 0..cin {
                    w0[i * cout + o] = weights[o * cin + i];
                }
            }
            store.tensors.insert(
                weight_name(&layer.name, 0),
                Tensor::new(vec![cin, cout], w0).unwrap(),
            );
            store.tensors.insert(
                bias_name(&layer.name),
                Tensor::new(vec![cout], bias.clone()).unwrap(),
            );
        }
        kernels.insert(
            layer.name.clone(),
            Kernel {
                weights,
                bias,
                size,
            },
        );
    }
    store.validate().unwrap();
    (store, kernels)
}

/// Runs `manifest` on `img`; the transform layer calls `hook`. Stops before layer `stop`.
pub fn run_oracle(
    manifest: &NetworkManifest,
    kernels: &BTreeMap<String, Kernel>,
    img: &Image,
    stop: usize,
    hook: &mut dyn FnMut(&Image) -> Image,
) -> Image {
    let mut x = img.clone();
    let mut shapes = Vec::new();
    for layer in manifest.layers.iter().take(stop) {
        x = match layer.kind {
            LayerKind::Conv | LayerKind::Conv1x1 => {
                conv2d(&x, &kernels[&layer.name], layer.out_channels)
            }
            LayerKind::Relu => {
                let mut y = x;
                y.data.iter_mut().for_each(|v| *v = v.max(0.0));
                y
            }
            LayerKind::Pool => {
                shapes.push((x.h, x.w));
                mean_pool2(&x)
            }
            LayerKind::Unpool => {
                let (h, w) = shapes.pop().unwrap();
                unpool2(&x, h, w)
            }
            LayerKind::Transform => hook(&x),
        };
    }
    x
}

fn matrix_power(m: &DMatrix<f64>, p: f64, eps: f64) -> DMatrix<f64> {
    let e = SymmetricEigen::new(m.clone());
    let d = DMatrix::from_diagonal(&e.eigenvalues.map(|l| l.max(eps).powf(p)));
    &e.eigenvectors * d * e.eigenvectors.transpose()
}

fn stats(img: &Image) -> (Vec<f64>, DMatrix<f64>) {
    let n = img.h * img.w;
    let c = img.c;
    let mut mean = vec![0.0; c];
    for px in img.data.chunks_exact(c) {
        for k in 0..c {
            mean[k] += px[k] / n as f64;
        }
    }
    let mut cov = DMatrix::zeros(c, c);
    for px in img.data.chunks_exact(c) {
        for a in 0..c {
            for b in 0..c {
                cov[(a, b)] += (px[a] - mean[a]) * (px[b] - mean[b]) / (n as f64 - 1.0);
            }
        }
    }
    (mean, cov)
}

/// Reference whitening-coloring: `y = Σs^½ Σc^-½ (x - μc) + μs`, blended by `alpha`.
pub fn wct(content: &Image, style: &Image, alpha: f64, eps: f64) -> Image {
    let (mc, cc) = stats(content);
    let (ms, cs) = stats(style);
    let t = matrix_power(&cs, 0.5, eps) * matrix_power(&cc, -0.5, eps);
    let c = content.c;
    let mut data = Vec::with_capacity(content.data.len());
    for px in content.data.chunks_exact(c) {
        for a in 0..c {
            let mut y = ms[a];
            for b in 0..c {
                y += t[(a, b)] * (px[b] - mc[b]);
            }
            data.push(alpha * y + (1.0 - alpha) * px[a]);
        }
    }
    Image {
        data,
        ..content.clone()
    }
}

/// `max |a - b| / max |b|` over matching entries.
pub fn normwise_relative(a: &[f32], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((*x as f64 - y).abs()))
        / scale
}
