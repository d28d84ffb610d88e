//! Dense and banded LU factorizations used by the Newton solver and the
//! semi-implicit diffusion step.

/// Row-major dense matrix.
#[derive(Clone, Debug)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix { n, data: vec![0.0; n * n] }
    }

    pub fn from_rows(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n);
        DenseMatrix { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    /// LU with partial pivoting. Fails on a (numerically) singular matrix.
    pub fn factor(mut self) -> Result<DenseLu, Singular> {
        let n = self.n;
        let mut perm = Vec::with_capacity(n);
        for k in 0..n {
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for i in k + 1..n {
                let v = self.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Singular { column: k });
            }
            if p != k {
                for j in 0..n {
                    self.data.swap(k * n + j, p * n + j);
                }
            }
            perm.push(p);
            let pivot = self.get(k, k);
            for i in k + 1..n {
                let l = self.get(i, k) / pivot;
                self.set(i, k, l);
                if l != 0.0 {
                    for j in k + 1..n {
                        let v = self.get(k, j);
                        self.add(i, j, -l * v);
                    }
                }
            }
        }
        Ok(DenseLu { lu: self, perm })
    }

    /// `out = A v`.
    pub fn matvec(&self, v: &[f64], out: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            out[i] = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Singular {
    pub column: usize,
}

#[derive(Clone, Debug)]
pub struct DenseLu {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl DenseLu {
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.lu.n;
        for k in 0..n {
            b.swap(k, self.perm[k]);
            for i in k + 1..n {
                b[i] -= self.lu.get(i, k) * b[k];
            }
        }
        for k in (0..n).rev() {
            b[k] /= self.lu.get(k, k);
            for i in 0..k {
                b[i] -= self.lu.get(i, k) * b[k];
            }
        }
    }
}

/// Banded matrix with `kl` sub- and `ku` superdiagonals, stored in the usual
/// `(2*kl + ku + 1) x n` band layout with `kl` extra rows for pivoting
/// fill-in. Entry `(i, j)` lives at band row `kl + ku + i - j`.
#[derive(Clone, Debug)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        BandedMatrix { n, kl, ku, data: vec![0.0; (2 * kl + ku + 1) * n] }
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i + self.ku + self.kl >= j && j + self.kl >= i, "({i},{j}) outside band");
        (self.kl + self.ku + i - j) * self.n + j
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    /// Banded LU with partial pivoting (row interchanges stay within the
    /// lower bandwidth, fill-in within the widened upper band).
    pub fn factor(mut self) -> Result<BandedLu, Singular> {
        let n = self.n;
        let kl = self.kl;
        let ku_wide = self.kl + self.ku;
        let mut perm = Vec::with_capacity(n);
        for k in 0..n {
            let imax = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for i in k + 1..=imax {
                let v = self.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Singular { column: k });
            }
            if p != k {
                let jmax = (k + ku_wide).min(n - 1);
                for j in k..=jmax {
                    let a = self.idx(k, j);
                    let b = self.idx(p, j);
                    self.data.swap(a, b);
                }
            }
            perm.push(p);
            let pivot = self.get(k, k);
            for i in k + 1..=imax {
                let l = self.get(i, k) / pivot;
                self.set(i, k, l);
                if l != 0.0 {
                    let jmax = (k + ku_wide).min(n - 1);
                    for j in k + 1..=jmax {
                        let v = self.get(k, j);
                        self.add(i, j, -l * v);
                    }
                }
            }
        }
        Ok(BandedLu { band: self, perm })
    }
}

#[derive(Clone, Debug)]
pub struct BandedLu {
    band: BandedMatrix,
    perm: Vec<usize>,
}

impl BandedLu {
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.band.n;
        let kl = self.band.kl;
        let ku_wide = self.band.kl + self.band.ku;
        for k in 0..n {
            b.swap(k, self.perm[k]);
            let imax = (k + kl).min(n - 1);
            for i in k + 1..=imax {
                b[i] -= self.band.get(i, k) * b[k];
            }
        }
        for k in (0..n).rev() {
            b[k] /= self.band.get(k, k);
            let imin = k.saturating_sub(ku_wide);
            for i in imin..k {
                b[i] -= self.band.get(i, k) * b[k];
            }
        }
    }
}

/// Either factorization behind one interface; Newton picks dense for small
/// systems and banded for discretized ones.
#[derive(Clone, Debug)]
pub enum LuSolver {
    Dense(DenseLu),
    Banded(BandedLu),
}

impl LuSolver {
    pub fn solve_in_place(&self, b: &mut [f64]) {
        match self {
            LuSolver::Dense(lu) => lu.solve_in_place(b),
            LuSolver::Banded(lu) => lu.solve_in_place(b),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_solve_matches_hand_result() {
        // [2 1; 1 3] x = [3; 5] -> x = [0.8, 1.4]
        let a = DenseMatrix::from_rows(2, vec![2.0, 1.0, 1.0, 3.0]);
        let lu = a.factor().unwrap();
        let mut b = vec![3.0, 5.0];
        lu.solve_in_place(&mut b);
        assert!((b[0] - 0.8).abs() < 1e-14);
        assert!((b[1] - 1.4).abs() < 1e-14);
    }

    #[test]
    fn dense_singular_detected() {
        let a = DenseMatrix::from_rows(2, vec![1.0, 2.0, 2.0, 4.0]);
        assert!(a.factor().is_err());
    }

    #[test]
    fn dense_pivoting_handles_zero_leading_entry() {
        let a = DenseMatrix::from_rows(2, vec![0.0, 1.0, 1.0, 0.0]);
        let lu = a.factor().unwrap();
        let mut b = vec![2.0, 3.0];
        lu.solve_in_place(&mut b);
        assert_eq!(b, vec![3.0, 2.0]);
    }

    #[test]
    fn banded_matches_dense_on_random_band() {
        // Deterministic pseudo-random band, compared against the dense path.
        let n = 24;
        let (kl, ku) = (3, 2);
        let mut band = BandedMatrix::zeros(n, kl, ku);
        let mut dense = DenseMatrix::zeros(n);
        let mut s = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                let v = if i == j { 6.0 + next() } else { next() };
                band.set(i, j, v);
                dense.set(i, j, v);
            }
        }
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut xb = rhs.clone();
        band.factor().unwrap().solve_in_place(&mut xb);
        let mut xd = rhs;
        dense.factor().unwrap().solve_in_place(&mut xd);
        for (a, b) in xb.iter().zip(&xd) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn banded_pivoting_row_swap() {
        // Leading zero pivot forces an interchange.
        let mut band = BandedMatrix::zeros(3, 1, 1);
        band.set(0, 0, 0.0);
        band.set(0, 1, 2.0);
        band.set(1, 0, 1.0);
        band.set(1, 1, 1.0);
        band.set(1, 2, 1.0);
        band.set(2, 1, 3.0);
        band.set(2, 2, 1.0);
        let lu = band.factor().unwrap();
        // Solve A x = b for x = [1, 2, 3]: b = [4, 6, 9].
        let mut b = vec![4.0, 6.0, 9.0];
        lu.solve_in_place(&mut b);
        assert!((b[0] - 1.0).abs() < 1e-12);
        assert!((b[1] - 2.0).abs() < 1e-12);
        assert!((b[2] - 3.0).abs() < 1e-12);
    }
}
