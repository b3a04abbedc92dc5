//! Monomial bases, sample matrices, least-squares coefficient maps, condition
//! numbers, and a divided-difference interpolation oracle.

use crate::dense::{lu_factor, qr_factor, singular_values, Mat};
use crate::error::{Error, Result};
use crate::index::{binomial, MultiIndex};
use crate::lattice::TriangularLattice;

/// The monomials of total degree at most `n` in `d` variables, in graded
/// order (degree ascending, exponents descending-lexicographic within each
/// degree: 1, x, y, x², xy, y², ...).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonomialBasis {
    pub d: usize,
    pub n: usize,
    exponents: Vec<MultiIndex>,
}

pub fn monomial_basis(d: usize, n: usize) -> MonomialBasis {
    let mut exponents: Vec<MultiIndex> = crate::index::iter_box(
        &MultiIndex::zero(d),
        &MultiIndex::splat(d, n as i64),
    )
    .into_iter()
    .filter(|e| e.sum() <= n as i64)
    .collect();
    exponents.sort_by(|a, b| {
        a.sum()
            .cmp(&b.sum())
            .then_with(|| b.components().cmp(a.components()))
    });
    MonomialBasis { d, n, exponents }
}

impl MonomialBasis {
    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn exponents(&self) -> &[MultiIndex] {
        &self.exponents
    }

    /// Position of an exponent vector in the basis, if present.
    pub fn position(&self, e: &MultiIndex) -> Option<usize> {
        self.exponents.iter().position(|x| x == e)
    }

    /// Evaluate every monomial at `x`.
    pub fn eval_row(&self, x: &[f64]) -> Vec<f64> {
        self.exponents
            .iter()
            .map(|e| {
                let mut v = 1.0;
                for i in 0..self.d {
                    v *= x[i].powi(e.get(i) as i32);
                }
                v
            })
            .collect()
    }

    /// Row of `∂^alpha` applied to every monomial, evaluated at `x` and
    /// scaled by `h^{-|alpha|}` (sites are assumed expressed in units of `h`).
    pub fn derivative_row(&self, alpha: &MultiIndex, x: &[f64], h: f64) -> Vec<f64> {
        let scale = h.powi(-(alpha.sum() as i32));
        self.exponents
            .iter()
            .map(|e| {
                let mut v = 1.0;
                for i in 0..self.d {
                    let ei = e.get(i);
                    let ai = alpha.get(i);
                    if ei < ai {
                        v = 0.0;
                        break;
                    }
                    // falling factorial e*(e-1)*...*(e-a+1) times x^{e-a}
                    for k in 0..ai {
                        v *= (ei - k) as f64;
                    }
                    v *= x[i].powi((ei - ai) as i32);
                }
                v * scale
            })
            .collect()
    }
}

/// Dense matrix of basis functions evaluated at interpolation sites: entry
/// `(j, k)` is `phi_k(x_j)`.
pub fn sample_matrix(sites: &[Vec<f64>], basis: &MonomialBasis) -> Mat {
    let rows: Vec<Vec<f64>> = sites.iter().map(|x| basis.eval_row(x)).collect();
    Mat::from_rows(&rows)
}

/// The solved least-squares map from row values (site samples plus any
/// appended constraint rows) to polynomial coefficients.
#[derive(Clone, Debug)]
pub struct WeightMap {
    /// `n_basis x n_rows`: coefficients = map · values.
    pub map: Mat,
    pub n_sites: usize,
    pub n_rows: usize,
}

impl WeightMap {
    /// Coefficients for a concrete value vector.
    pub fn coefficients(&self, values: &[f64]) -> Vec<f64> {
        self.map.matvec(values)
    }

    /// Weights on the row values for the linear functional with the given
    /// coefficient-space row: `functional(u) = frow · map · values`.
    pub fn functional_weights(&self, frow: &[f64]) -> Vec<f64> {
        assert_eq!(frow.len(), self.map.rows);
        let mut w = vec![0.0; self.map.cols];
        for k in 0..self.map.rows {
            let f = frow[k];
            if f == 0.0 {
                continue;
            }
            for j in 0..self.map.cols {
                w[j] += f * self.map.row(k)[j];
            }
        }
        w
    }
}

/// Minimum-residual least-squares fit of the basis to sample rows, with
/// optional extra constraint rows (boundary conditions, derivative data)
/// appended below the site rows.
///
/// Returns the full coefficient map so one factorization serves every linear
/// functional of the fitted polynomial.  Rank deficiency is an error carrying
/// the achieved rank.
pub fn least_squares_fit(
    sites: &[Vec<f64>],
    basis: &MonomialBasis,
    extra_rows: &[Vec<f64>],
) -> Result<WeightMap> {
    let n_basis = basis.len();
    let n_rows = sites.len() + extra_rows.len();
    if n_rows < n_basis {
        return Err(Error::InvalidArgument(format!(
            "{n_rows} rows cannot determine {n_basis} coefficients"
        )));
    }
    let mut rows: Vec<Vec<f64>> = sites.iter().map(|x| basis.eval_row(x)).collect();
    rows.extend(extra_rows.iter().cloned());
    let a = Mat::from_rows(&rows);
    let qr = qr_factor(&a);
    if qr.rank < n_basis {
        return Err(Error::RankDeficient {
            rank: qr.rank,
            cols: n_basis,
        });
    }
    // Solve for each unit value vector; n_rows is a few dozen at most.
    let mut map = Mat::zeros(n_basis, n_rows);
    let mut e = vec![0.0; n_rows];
    for j in 0..n_rows {
        e[j] = 1.0;
        let c = qr.solve(&e)?;
        e[j] = 0.0;
        for i in 0..n_basis {
            map[(i, j)] = c[i];
        }
    }
    Ok(WeightMap {
        map,
        n_sites: sites.len(),
        n_rows,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CondNorm {
    Two,
    Inf,
}

/// Condition number of a sample matrix; `+inf` when numerically singular.
pub fn condition_number(m: &Mat, norm: CondNorm) -> f64 {
    match norm {
        CondNorm::Two => {
            let sv = singular_values(m);
            let smax = sv.first().copied().unwrap_or(0.0);
            let smin = sv.last().copied().unwrap_or(0.0);
            if smin <= smax * 1e-300 || smin == 0.0 {
                f64::INFINITY
            } else {
                smax / smin
            }
        }
        CondNorm::Inf => {
            assert_eq!(m.rows, m.cols, "inf-norm condition needs a square matrix");
            let lu = lu_factor(m);
            if lu.singular {
                return f64::INFINITY;
            }
            match lu.inverse() {
                Ok(inv) => m.norm_inf() * inv.norm_inf(),
                Err(_) => f64::INFINITY,
            }
        }
    }
}

/// Determinant factor `psi_n` of the sample-matrix factorization: for each
/// axis the product of coordinate differences `(p_{k,i} - p_{k,l})^alpha(i)`
/// over `l < i`, with `alpha(i) = C(n-i+D-1, D-1)`.  The coordinate numbering
/// comes from the lattice's formation.
pub fn det_factor_psi(lattice: &TriangularLattice, axis: usize) -> f64 {
    let n = lattice.n;
    let d = lattice.d;
    let mut psi = 1.0;
    for i in 1..=n {
        let alpha = binomial((n - i + d - 1) as u64, (d - 1) as u64).unwrap_or(0) as i32;
        for l in 0..i {
            let diff = (lattice.coordinate(axis, i) - lattice.coordinate(axis, l)) as f64;
            psi *= diff.powi(alpha);
        }
    }
    psi
}

/// k-th divided difference over pairwise-distinct abscissas.
pub fn divided_difference(xs: &[f64], fs: &[f64]) -> Result<f64> {
    if xs.len() != fs.len() || xs.is_empty() {
        return Err(Error::InvalidArgument(
            "divided difference needs equal, nonempty xs and fs".into(),
        ));
    }
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            if xs[i] == xs[j] {
                return Err(Error::InvalidArgument(format!(
                    "repeated abscissa {}",
                    xs[i]
                )));
            }
        }
    }
    let mut table = fs.to_vec();
    let k = xs.len();
    for level in 1..k {
        for i in 0..k - level {
            table[i] = (table[i + 1] - table[i]) / (xs[i + level] - xs[i]);
        }
    }
    Ok(table[0])
}

/// Coefficients of a polynomial in one variable, ascending powers.
fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Newton basis polynomial `pi_k(x) = prod_{i<k} (x - x_i)`, ascending powers.
fn newton_poly(coords: &[f64], k: usize) -> Vec<f64> {
    let mut p = vec![1.0];
    for &c in coords.iter().take(k) {
        p = poly_mul(&p, &[-c, 1.0]);
    }
    p
}

/// Bivariate interpolation on a triangular lattice by nested divided
/// differences.  Serves as an independent oracle for the least-squares path:
/// the returned coefficients are in the graded monomial basis of degree `n`.
pub fn newton_interp_2d(
    lattice: &TriangularLattice,
    f: &dyn Fn(f64, f64) -> f64,
) -> Result<Vec<f64>> {
    if lattice.d != 2 {
        return Err(Error::InvalidArgument(
            "divided-difference interpolation is bivariate".into(),
        ));
    }
    let n = lattice.n;
    let xs: Vec<f64> = (0..=n).map(|j| lattice.coordinate(0, j) as f64).collect();
    let ys: Vec<f64> = (0..=n).map(|j| lattice.coordinate(1, j) as f64).collect();

    // dd[k][j] = [x_0..x_k][y_0..y_j] f, for k + j <= n
    let dd = |k: usize, j: usize| -> Result<f64> {
        let gs: Vec<f64> = xs[..=k]
            .iter()
            .map(|&x| {
                let fvals: Vec<f64> = ys[..=j].iter().map(|&y| f(x, y)).collect();
                divided_difference(&ys[..=j], &fvals)
            })
            .collect::<Result<Vec<_>>>()?;
        divided_difference(&xs[..=k], &gs)
    };

    let basis = monomial_basis(2, n);
    let mut coeffs = vec![0.0; basis.len()];
    for m in 0..=n {
        for k in 0..=m {
            let c = dd(k, m - k)?;
            if c == 0.0 {
                continue;
            }
            let px = newton_poly(&xs, k);
            let py = newton_poly(&ys, m - k);
            for (i, &ai) in px.iter().enumerate() {
                for (j, &bj) in py.iter().enumerate() {
                    let pos = basis
                        .position(&MultiIndex::new(&[i as i64, j as i64]))
                        .expect("product degree stays within basis");
                    coeffs[pos] += c * ai * bj;
                }
            }
        }
    }
    Ok(coeffs)
}
