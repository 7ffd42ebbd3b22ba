use crate::error::{Error, Result};

/// Dense `rows x cols` node features, row-major `f32`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl FeatureMap {
    pub fn new(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} values cannot fill a {rows}x{cols} feature map",
                data.len()
            )));
        }
        Ok(FeatureMap { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        FeatureMap {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rgb(colors: &[[f64; 3]]) -> Self {
        FeatureMap {
            rows: colors.len(),
            cols: 3,
            data: colors.iter().flat_map(|c| c.map(|v| v as f32)).collect(),
        }
    }

    pub fn to_rgb(&self) -> Result<Vec<[f64; 3]>> {
        if self.cols != 3 {
            return Err(Error::Shape(format!(
                "expected 3 channels, found {}",
                self.cols
            )));
        }
        Ok(self
            .data
            .chunks_exact(3)
            .map(|c| [c[0] as f64, c[1] as f64, c[2] as f64])
            .collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f32] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map_inplace(&mut self, f: impl Fn(f32) -> f32 + Sync) {
        use rayon::prelude::*;
        self.data.par_iter_mut().for_each(|v| *v = f(*v));
    }
}
