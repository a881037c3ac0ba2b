//! Symmetric banded storage and Cholesky factorization, plus a small dense
//! Cholesky for the Woodbury and Schur-complement corrections.

/// Lower band of a symmetric matrix: entry (i, j) with `i − bw ≤ j ≤ i`.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        let bw = bw.min(n.saturating_sub(1));
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    pub fn clear(&mut self) {
        self.data.iter_mut().for_each(|v| *v = 0.0);
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + self.bw - (i - j)
    }

    /// Add `v` to entry (i, j) of the symmetric matrix. Both triangles map to
    /// the same stored element.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    pub fn diag_max(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i).abs()).fold(0.0, f64::max)
    }

    pub fn add_diag(&mut self, v: f64) {
        for i in 0..self.n {
            let k = self.idx(i, i);
            self.data[k] += v;
        }
    }

    /// Multiply the diagonal by `1 + r` and raise it to at least `floor`.
    pub fn inflate_diag(&mut self, r: f64, floor: f64) {
        for i in 0..self.n {
            let k = self.idx(i, i);
            self.data[k] = (self.data[k] * (1.0 + r)).max(floor);
        }
    }

    /// In-place Cholesky `A = L Lᵀ`. Returns `None` if a pivot is not
    /// positive (the matrix is left partially overwritten).
    pub fn cholesky(mut self) -> Option<BandCholesky> {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        for i in 0..n {
            let row_start = i.saturating_sub(bw);
            for j in row_start..=i {
                // s = A[i][j] − Σ_{k<j} L[i][k] L[j][k]
                let k0 = row_start.max(j.saturating_sub(bw));
                let mut s = self.data[i * w + bw - (i - j)];
                for k in k0..j {
                    s -= self.data[i * w + bw - (i - k)] * self.data[j * w + bw - (j - k)];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return None;
                    }
                    self.data[i * w + bw] = s.sqrt();
                } else {
                    self.data[i * w + bw - (i - j)] = s / self.data[j * w + bw];
                }
            }
        }
        Some(BandCholesky { l: self })
    }
}

#[derive(Debug, Clone)]
pub struct BandCholesky {
    l: BandMatrix,
}

impl BandCholesky {
    /// Solve `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, bw) = (self.l.n, self.l.bw);
        let w = bw + 1;
        let d = &self.l.data;
        for i in 0..n {
            let mut s = b[i];
            for k in i.saturating_sub(bw)..i {
                s -= d[i * w + bw - (i - k)] * b[k];
            }
            b[i] = s / d[i * w + bw];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..n.min(i + bw + 1) {
                s -= d[k * w + bw - (k - i)] * b[k];
            }
            b[i] = s / d[i * w + bw];
        }
    }
}

/// Dense symmetric positive definite solve (row-major `n × n`). Returns
/// `None` on a non-positive pivot.
pub fn dense_spd_solve(a: &[f64], n: usize, rhs: &mut [f64]) -> Option<()> {
    let mut l = a.to_vec();
    for j in 0..n {
        let mut s = l[j * n + j];
        for k in 0..j {
            s -= l[j * n + k] * l[j * n + k];
        }
        if !(s > 0.0) || !s.is_finite() {
            return None;
        }
        let d = s.sqrt();
        l[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = l[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    for i in 0..n {
        let mut s = rhs[i];
        for k in 0..i {
            s -= l[i * n + k] * rhs[k];
        }
        rhs[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * rhs[k];
        }
        rhs[i] = s / l[i * n + i];
    }
    Some(())
}
