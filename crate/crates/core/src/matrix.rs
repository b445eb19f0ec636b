use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

/// Dense row-major `K x K` matrix of reals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Square {
    k: usize,
    data: Vec<f64>,
}

impl Square {
    pub fn zeros(k: usize) -> Self {
        Self {
            k,
            data: vec![0.0; k * k],
        }
    }

    pub fn filled(k: usize, value: f64) -> Self {
        Self {
            k,
            data: vec![value; k * k],
        }
    }

    pub fn from_fn(k: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(k);
        for l in 0..k {
            for c in 0..k {
                m[(l, c)] = f(l, c);
            }
        }
        m
    }

    /// Panics unless every row has length `rows.len()`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let k = rows.len();
        assert!(rows.iter().all(|r| r.len() == k), "matrix must be square");
        Self {
            k,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn row(&self, l: usize) -> &[f64] {
        &self.data[l * self.k..(l + 1) * self.k]
    }

    pub fn row_mut(&mut self, l: usize) -> &mut [f64] {
        &mut self.data[l * self.k..(l + 1) * self.k]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.k.max(1)).take(self.k)
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.k).all(|l| (0..l).all(|c| self[(l, c)] == self[(c, l)]))
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl Index<(usize, usize)> for Square {
    type Output = f64;

    #[inline]
    fn index(&self, (l, c): (usize, usize)) -> &f64 {
        &self.data[l * self.k + c]
    }
}

impl IndexMut<(usize, usize)> for Square {
    #[inline]
    fn index_mut(&mut self, (l, c): (usize, usize)) -> &mut f64 {
        &mut self.data[l * self.k + c]
    }
}
