//! Small dense linear algebra: row-major matrices, LU with partial pivoting,
//! Householder QR least squares, and a one-sided Jacobi SVD for singular
//! values.  Everything here runs on systems of a few dozen rows.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    a: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            a: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map(|x| x.len()).unwrap_or(0);
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            m.a[i * c..(i + 1) * c].copy_from_slice(row);
        }
        m
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.a[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.a[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += aik * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.a[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.a[i * self.cols + j]
    }
}

/// LU factorization with partial pivoting.
pub struct Lu {
    lu: Mat,
    piv: Vec<usize>,
    sign: f64,
    pub singular: bool,
}

pub fn lu_factor(m: &Mat) -> Lu {
    assert_eq!(m.rows, m.cols);
    let n = m.rows;
    let mut lu = m.clone();
    let mut piv: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    let mut singular = false;
    for k in 0..n {
        let mut p = k;
        let mut best = lu[(k, k)].abs();
        for i in k + 1..n {
            if lu[(i, k)].abs() > best {
                best = lu[(i, k)].abs();
                p = i;
            }
        }
        if best == 0.0 {
            singular = true;
            continue;
        }
        if p != k {
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = t;
            }
            piv.swap(k, p);
            sign = -sign;
        }
        for i in k + 1..n {
            let f = lu[(i, k)] / lu[(k, k)];
            lu[(i, k)] = f;
            for j in k + 1..n {
                lu[(i, j)] -= f * lu[(k, j)];
            }
        }
    }
    Lu {
        lu,
        piv,
        sign,
        singular,
    }
}

impl Lu {
    pub fn det(&self) -> f64 {
        if self.singular {
            return 0.0;
        }
        let mut d = self.sign;
        for i in 0..self.lu.rows {
            d *= self.lu[(i, i)];
        }
        d
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if self.singular {
            return Err(Error::SolverFailure("singular LU factorization".into()));
        }
        let n = self.lu.rows;
        let mut x: Vec<f64> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            for j in 0..i {
                x[i] -= self.lu[(i, j)] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.lu[(i, j)] * x[j];
            }
            x[i] /= self.lu[(i, i)];
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<Mat> {
        let n = self.lu.rows;
        let mut inv = Mat::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = self.solve(&e)?;
            e[j] = 0.0;
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Ok(inv)
    }
}

/// Householder QR of an `m x n` matrix with `m >= n`.  Reflector vectors are
/// stored below the diagonal with their leading components in `v0`.
pub struct Qr {
    qr: Mat,
    v0: Vec<f64>,
    beta: Vec<f64>,
    pub rank: usize,
    /// |R_kk| magnitudes, for rank diagnostics.
    pub rdiag: Vec<f64>,
}

pub fn qr_factor(m: &Mat) -> Qr {
    let rows = m.rows;
    let cols = m.cols;
    assert!(rows >= cols, "QR needs rows >= cols");
    let mut qr = m.clone();
    let mut beta = vec![0.0; cols];
    let mut v0s = vec![0.0; cols];
    for k in 0..cols {
        let mut norm2 = 0.0;
        for i in k..rows {
            norm2 += qr[(i, k)] * qr[(i, k)];
        }
        let norm = norm2.sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if qr[(k, k)] >= 0.0 { -norm } else { norm };
        let v0 = qr[(k, k)] - alpha;
        qr[(k, k)] = alpha;
        let mut vtv = v0 * v0;
        for i in k + 1..rows {
            vtv += qr[(i, k)] * qr[(i, k)];
        }
        if vtv == 0.0 {
            continue;
        }
        beta[k] = 2.0 / vtv;
        v0s[k] = v0;
        for j in k + 1..cols {
            let mut dot = v0 * qr[(k, j)];
            for i in k + 1..rows {
                dot += qr[(i, k)] * qr[(i, j)];
            }
            let s = beta[k] * dot;
            qr[(k, j)] -= s * v0;
            for i in k + 1..rows {
                qr[(i, j)] -= s * qr[(i, k)];
            }
        }
    }
    let rdiag: Vec<f64> = (0..cols).map(|k| qr[(k, k)].abs()).collect();
    let scale = rdiag.iter().cloned().fold(0.0, f64::max).max(1e-300);
    let rank = rdiag.iter().filter(|&&r| r > 1e-11 * scale).count();
    Qr {
        qr,
        v0: v0s,
        beta,
        rank,
        rdiag,
    }
}

impl Qr {
    /// Apply `Q^T` to a right-hand side of length `rows`.
    fn apply_qt(&self, b: &mut [f64]) {
        let rows = self.qr.rows;
        let cols = self.qr.cols;
        for k in 0..cols {
            if self.beta[k] == 0.0 {
                continue;
            }
            let v0 = self.v0[k];
            let mut dot = v0 * b[k];
            for i in k + 1..rows {
                dot += self.qr[(i, k)] * b[i];
            }
            let s = self.beta[k] * dot;
            b[k] -= s * v0;
            for i in k + 1..rows {
                b[i] -= s * self.qr[(i, k)];
            }
        }
    }

    /// Least-squares solve `min |A x - b|_2`; requires full column rank.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let cols = self.qr.cols;
        if self.rank < cols {
            return Err(Error::RankDeficient {
                rank: self.rank,
                cols,
            });
        }
        let mut work = b.to_vec();
        self.apply_qt(&mut work);
        let mut x = vec![0.0; cols];
        for i in (0..cols).rev() {
            let mut s = work[i];
            for j in i + 1..cols {
                s -= self.qr[(i, j)] * x[j];
            }
            x[i] = s / self.qr[(i, i)];
        }
        Ok(x)
    }
}

/// Singular values by one-sided Jacobi (columns orthogonalized in place),
/// descending.
pub fn singular_values(m: &Mat) -> Vec<f64> {
    let mut a = if m.rows >= m.cols {
        m.clone()
    } else {
        m.transpose()
    };
    let n = a.cols;
    let eps = 1e-14;
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = 0.0;
                for i in 0..a.rows {
                    app += a[(i, p)] * a[(i, p)];
                    aqq += a[(i, q)] * a[(i, q)];
                    apq += a[(i, p)] * a[(i, q)];
                }
                off = off.max(apq.abs() / (app * aqq).sqrt().max(1e-300));
                if apq.abs() <= eps * (app * aqq).sqrt() {
                    continue;
                }
                let tau = (aqq - app) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..a.rows {
                    let vp = a[(i, p)];
                    let vq = a[(i, q)];
                    a[(i, p)] = c * vp - s * vq;
                    a[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if off < eps {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..n)
        .map(|j| {
            (0..a.rows)
                .map(|i| a[(i, j)] * a[(i, j)])
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    sv
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    #[test]
    fn lu_solves_and_det() {
        let m = Mat::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]);
        let lu = lu_factor(&m);
        assert!((lu.det() - 5.0).abs() < 1e-14);
        let x = lu.solve(&[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);
        let inv = lu.inverse().unwrap();
        let prod = m.matmul(&inv);
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn qr_least_squares_recovers_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![1.0, x]).collect();
        let m = Mat::from_rows(&rows);
        let b: Vec<f64> = xs.iter().map(|&x| 1.0 + 2.0 * x).collect();
        let qr = qr_factor(&m);
        let c = qr.solve(&b).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-12 && (c[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn qr_reports_rank_deficiency() {
        let m = Mat::from_rows(&[
            vec![1.0, 2.0, 3.0],
            vec![2.0, 4.0, 6.0],
            vec![1.0, 1.0, 2.0],
        ]);
        let qr = qr_factor(&m);
        assert_eq!(qr.rank, 2);
        assert!(matches!(
            qr.solve(&[1.0, 2.0, 3.0]),
            Err(Error::RankDeficient { rank: 2, cols: 3 })
        ));
    }

    #[test]
    fn jacobi_singular_values_match_random_products() {
        let mut rng = SplitMix64::new(17);
        for _ in 0..20 {
            let n = 2 + rng.below(5);
            let m_rows = n + rng.below(4);
            let mut m = Mat::zeros(m_rows, n);
            for i in 0..m_rows {
                for j in 0..n {
                    m[(i, j)] = rng.next_f64() * 2.0 - 1.0;
                }
            }
            let sv = singular_values(&m);
            // sum of squared singular values = trace(A^T A); product = det
            let ata = m.transpose().matmul(&m);
            let trace: f64 = (0..n).map(|i| ata[(i, i)]).sum();
            let sum_sq: f64 = sv.iter().map(|s| s * s).sum();
            assert!((trace - sum_sq).abs() < 1e-10 * trace.max(1.0));
            let det = lu_factor(&ata).det();
            let prod_sq: f64 = sv.iter().map(|s| s * s).product();
            assert!((det - prod_sq).abs() < 1e-8 * det.abs().max(1e-8));
        }
    }

    #[test]
    fn qr_matches_lu_on_square_systems() {
        let mut rng = SplitMix64::new(23);
        for _ in 0..20 {
            let n = 2 + rng.below(6);
            let mut m = Mat::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] = rng.next_f64() * 2.0 - 1.0;
                }
                m[(i, i)] += 2.0;
            }
            let b: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
            let x1 = lu_factor(&m).solve(&b).unwrap();
            let x2 = qr_factor(&m).solve(&b).unwrap();
            for i in 0..n {
                assert!((x1[i] - x2[i]).abs() < 1e-10);
            }
        }
    }
}
