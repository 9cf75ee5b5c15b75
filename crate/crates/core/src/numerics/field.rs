use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Real-valued H×W sample grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    h: usize,
    w: usize,
    data: Vec<f64>,
}

impl Field2D {
    pub fn zeros(h: usize, w: usize) -> Self {
        Self::filled(h, w, 0.0)
    }

    pub fn filled(h: usize, w: usize, value: f64) -> Self {
        assert!(h >= 1 && w >= 1, "field dimensions must be positive");
        Self { h, w, data: vec![value; h * w] }
    }

    pub fn from_vec(h: usize, w: usize, data: Vec<f64>) -> Result<Self> {
        if h == 0 || w == 0 || data.len() != h * w {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {h}x{w} field",
                data.len()
            )));
        }
        Ok(Self { h, w, data })
    }

    pub fn from_fn(h: usize, w: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut out = Self::zeros(h, w);
        for i in 0..h {
            for j in 0..w {
                out.data[i * w + j] = f(i, j);
            }
        }
        out
    }

    pub fn height(&self) -> usize {
        self.h
    }

    pub fn width(&self) -> usize {
        self.w
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.h, self.w)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { h: self.h, w: self.w, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        ensure_same_shape(self.shape(), other.shape())?;
        Ok(Self {
            h: self.h,
            w: self.w,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.data.len() as f64
    }

    pub fn sum_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl Index<(usize, usize)> for Field2D {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.h && j < self.w);
        &self.data[i * self.w + j]
    }
}

impl IndexMut<(usize, usize)> for Field2D {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.h && j < self.w);
        &mut self.data[i * self.w + j]
    }
}

/// Complex H×W spectrum, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum2D {
    h: usize,
    w: usize,
    data: Vec<Complex64>,
}

impl Spectrum2D {
    pub fn zeros(h: usize, w: usize) -> Self {
        Self { h, w, data: vec![Complex64::new(0.0, 0.0); h * w] }
    }

    pub fn from_vec(h: usize, w: usize, data: Vec<Complex64>) -> Result<Self> {
        if h == 0 || w == 0 || data.len() != h * w {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {h}x{w} spectrum",
                data.len()
            )));
        }
        Ok(Self { h, w, data })
    }

    pub fn height(&self) -> usize {
        self.h
    }

    pub fn width(&self) -> usize {
        self.w
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.h, self.w)
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn conj(&self) -> Self {
        Self { h: self.h, w: self.w, data: self.data.iter().map(|c| c.conj()).collect() }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { h: self.h, w: self.w, data: self.data.iter().map(|c| c * s).collect() }
    }
}

impl Index<(usize, usize)> for Spectrum2D {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.w + j]
    }
}

impl IndexMut<(usize, usize)> for Spectrum2D {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.w + j]
    }
}

/// Real H×W×D stack stored channel-major: each frontal slice is contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    h: usize,
    w: usize,
    d: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(h: usize, w: usize, d: usize) -> Self {
        assert!(h >= 1 && w >= 1 && d >= 1, "tensor dimensions must be positive");
        Self { h, w, d, data: vec![0.0; h * w * d] }
    }

    pub fn from_vec(h: usize, w: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if h == 0 || w == 0 || d == 0 || data.len() != h * w * d {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {h}x{w}x{d} tensor",
                data.len()
            )));
        }
        Ok(Self { h, w, d, data })
    }

    pub fn from_fn(h: usize, w: usize, d: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut out = Self::zeros(h, w, d);
        for c in 0..d {
            for i in 0..h {
                for j in 0..w {
                    out.data[(c * h + i) * w + j] = f(i, j, c);
                }
            }
        }
        out
    }

    pub fn from_channels(channels: &[Field2D]) -> Result<Self> {
        let first = channels.first().ok_or(Error::EmptyChannelList)?;
        let (h, w) = first.shape();
        let mut data = Vec::with_capacity(h * w * channels.len());
        for ch in channels {
            ensure_same_shape((h, w), ch.shape())?;
            data.extend_from_slice(ch.as_slice());
        }
        Ok(Self { h, w, d: channels.len(), data })
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.h, self.w, self.d)
    }

    pub fn height(&self) -> usize {
        self.h
    }

    pub fn width(&self) -> usize {
        self.w
    }

    pub fn channels(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.h * self.w;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.h * self.w;
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn channel_field(&self, c: usize) -> Field2D {
        Field2D { h: self.h, w: self.w, data: self.channel(c).to_vec() }
    }

    pub fn channel_fields(&self) -> Vec<Field2D> {
        (0..self.d).map(|c| self.channel_field(c)).collect()
    }

    pub fn get(&self, i: usize, j: usize, c: usize) -> f64 {
        self.data[(c * self.h + i) * self.w + j]
    }

    pub fn set(&mut self, i: usize, j: usize, c: usize, v: f64) {
        self.data[(c * self.h + i) * self.w + j] = v;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            h: self.h,
            w: self.w,
            d: self.d,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.ensure_same_shape(other)?;
        Ok(Self {
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
            h: self.h,
            w: self.w,
            d: self.d,
        })
    }

    /// `self + s * other`
    pub fn axpy(&self, s: f64, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + s * b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn sum_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.sum_sq().sqrt()
    }

    pub fn l1(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn ensure_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch(format!(
                "{:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(())
    }
}

pub(crate) fn ensure_same_shape(a: (usize, usize), b: (usize, usize)) -> Result<()> {
    if a != b {
        return Err(Error::ShapeMismatch(format!("{a:?} vs {b:?}")));
    }
    Ok(())
}
