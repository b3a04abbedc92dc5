//! Compressed sparse rows, ILU(0), and a preconditioned BiCGStab, plus a
//! dense direct path for small systems.
//!
//! The assembled systems are nonsymmetric (least-squares stencil rows break
//! symmetry), so nothing here assumes symmetry.  Rows are equilibrated before
//! factorization; solves verify the true relative residual.

use crate::dense::{lu_factor, Mat};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Csr {
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<u32>,
    pub data: Vec<f64>,
}

impl Csr {
    /// Build from per-row (column, value) lists; entries are sorted and
    /// duplicates summed.  A structurally missing diagonal is inserted as an
    /// explicit zero so ILU(0) always has a pivot slot.
    pub fn from_rows(n: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        assert_eq!(rows.len(), n);
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for (i, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|e| e.0);
            let mut compact: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for (c, v) in row {
                match compact.last_mut() {
                    Some(last) if last.0 == c => last.1 += v,
                    _ => compact.push((c, v)),
                }
            }
            if !compact.iter().any(|e| e.0 == i) {
                let pos = compact.partition_point(|e| e.0 < i);
                compact.insert(pos, (i, 0.0));
            }
            for (c, v) in compact {
                indices.push(c as u32);
                data.push(v);
            }
            indptr.push(indices.len());
        }
        Self {
            n,
            indptr,
            indices,
            data,
        }
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.indptr[i]..self.indptr[i + 1] {
                s += self.data[k] * x[self.indices[k] as usize];
            }
            y[i] = s;
        }
    }

    pub fn matvec_alloc(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    pub fn to_dense(&self) -> Mat {
        let mut m = Mat::zeros(self.n, self.n);
        for i in 0..self.n {
            for k in self.indptr[i]..self.indptr[i + 1] {
                m[(i, self.indices[k] as usize)] += self.data[k];
            }
        }
        m
    }

    /// Scale row `i` by `s[i]` in place.
    pub fn scale_rows(&mut self, s: &[f64]) {
        for i in 0..self.n {
            for k in self.indptr[i]..self.indptr[i + 1] {
                self.data[k] *= s[i];
            }
        }
    }

    pub fn row_inf_norms(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                self.data[self.indptr[i]..self.indptr[i + 1]]
                    .iter()
                    .fold(0.0f64, |a, v| a.max(v.abs()))
            })
            .collect()
    }
}

/// Zero-fill incomplete LU on the matrix's own sparsity pattern.
pub struct Ilu0 {
    lu: Csr,
    diag_pos: Vec<usize>,
}

pub fn ilu0(a: &Csr) -> Result<Ilu0> {
    let n = a.n;
    let mut lu = a.clone();
    let mut diag_pos = vec![usize::MAX; n];
    for i in 0..n {
        for k in lu.indptr[i]..lu.indptr[i + 1] {
            if lu.indices[k] as usize == i {
                diag_pos[i] = k;
            }
        }
        if diag_pos[i] == usize::MAX {
            return Err(Error::SolverFailure(format!("row {i} missing diagonal")));
        }
    }
    // ikj variant over the fixed pattern
    let mut colmap = vec![usize::MAX; n];
    for i in 0..n {
        let (ri, ri_end) = (lu.indptr[i], lu.indptr[i + 1]);
        for k in ri..ri_end {
            colmap[lu.indices[k] as usize] = k;
        }
        for kk in ri..ri_end {
            let k = lu.indices[kk] as usize;
            if k >= i {
                break;
            }
            let dk = lu.data[diag_pos[k]];
            if dk == 0.0 {
                return Err(Error::SolverFailure(format!("zero ILU pivot at {k}")));
            }
            let f = lu.data[kk] / dk;
            lu.data[kk] = f;
            for jj in diag_pos[k] + 1..lu.indptr[k + 1] {
                let j = lu.indices[jj] as usize;
                let pos = colmap[j];
                if pos != usize::MAX {
                    lu.data[pos] -= f * lu.data[jj];
                }
            }
        }
        for k in ri..ri_end {
            colmap[lu.indices[k] as usize] = usize::MAX;
        }
        if lu.data[diag_pos[i]] == 0.0 {
            return Err(Error::SolverFailure(format!("zero ILU pivot at {i}")));
        }
    }
    Ok(Ilu0 { lu, diag_pos })
}

impl Ilu0 {
    /// Solve `LU z = r`.
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = self.lu.n;
        z.copy_from_slice(r);
        for i in 0..n {
            let mut s = z[i];
            for k in self.lu.indptr[i]..self.diag_pos[i] {
                s -= self.lu.data[k] * z[self.lu.indices[k] as usize];
            }
            z[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in self.diag_pos[i] + 1..self.lu.indptr[i + 1] {
                s -= self.lu.data[k] * z[self.lu.indices[k] as usize];
            }
            z[i] = s / self.lu.data[self.diag_pos[i]];
        }
    }
}

/// Dual-threshold incomplete LU with column pivoting (ILUTP).
///
/// Row-wise factorization with a column permutation chosen on the fly: the
/// pivot of each row is the largest remaining entry unless the natural
/// diagonal is within `pivtol` of it.  Pivoting is what keeps the triangular
/// factors bounded on the least-squares stencil rows, whose natural diagonals
/// can be arbitrarily small; zero-fill variants are catastrophically unstable
/// there.
pub struct Ilutp {
    n: usize,
    /// L entries per row: (eliminating row k, multiplier), in elimination order.
    l_rows: Vec<Vec<(u32, f64)>>,
    /// U entries per row keyed by original column, excluding the diagonal.
    u_rows: Vec<Vec<(u32, f64)>>,
    diag_col: Vec<u32>,
    diag_val: Vec<f64>,
}

pub fn ilutp(a: &Csr, tau: f64, p_fill: usize, pivtol: f64) -> Result<Ilutp> {
    let n = a.n;
    // logical position of each original column, and its inverse
    let mut pos_of_col: Vec<usize> = (0..n).collect();
    let mut col_at_pos: Vec<usize> = (0..n).collect();
    let mut l_rows: Vec<Vec<(u32, f64)>> = Vec::with_capacity(n);
    let mut u_rows: Vec<Vec<(u32, f64)>> = Vec::with_capacity(n);
    let mut diag_col = vec![0u32; n];
    let mut diag_val = vec![0.0f64; n];

    let mut w = vec![0.0f64; n]; // working row keyed by original column
    let mut in_w = vec![false; n];
    let mut cols: Vec<usize> = Vec::new();

    for i in 0..n {
        let mut rownorm = 0.0;
        for k in a.indptr[i]..a.indptr[i + 1] {
            let c = a.indices[k] as usize;
            if !in_w[c] {
                in_w[c] = true;
                cols.push(c);
            }
            w[c] += a.data[k];
            rownorm += a.data[k] * a.data[k];
        }
        let rownorm = (rownorm / (a.indptr[i + 1] - a.indptr[i]).max(1) as f64).sqrt();
        let drop = tau * rownorm;

        // eliminate entries at logical positions < i, smallest first
        let mut heap: std::collections::BinaryHeap<std::cmp::Reverse<(usize, usize)>> =
            cols.iter()
                .filter(|&&c| pos_of_col[c] < i)
                .map(|&c| std::cmp::Reverse((pos_of_col[c], c)))
                .collect();
        let mut lrow: Vec<(u32, f64)> = Vec::new();
        while let Some(std::cmp::Reverse((pos, c))) = heap.pop() {
            if pos_of_col[c] != pos {
                continue; // stale
            }
            let val = w[c];
            w[c] = 0.0;
            // in_w left set; cols still lists c, harmless
            if val == 0.0 {
                continue;
            }
            let k = pos; // row whose pivot lives at this logical position
            let mult = val / diag_val[k];
            if mult.abs() <= drop {
                continue;
            }
            lrow.push((k as u32, mult));
            for &(uc, uv) in &u_rows[k] {
                let c2 = uc as usize;
                let upd = mult * uv;
                if !in_w[c2] {
                    if upd.abs() <= drop {
                        continue; // never create tiny fill
                    }
                    in_w[c2] = true;
                    cols.push(c2);
                    if pos_of_col[c2] < i {
                        heap.push(std::cmp::Reverse((pos_of_col[c2], c2)));
                    }
                }
                w[c2] -= upd;
            }
        }

        // gather U candidates (logical position >= i)
        let mut urow: Vec<(usize, f64)> = Vec::new();
        for &c in &cols {
            if in_w[c] {
                in_w[c] = false;
                let v = w[c];
                w[c] = 0.0;
                if pos_of_col[c] >= i && v != 0.0 {
                    urow.push((c, v));
                }
            }
        }
        cols.clear();

        // pivot selection
        let natural = col_at_pos[i];
        let mut best: Option<(usize, f64)> = None;
        let mut natural_val = 0.0;
        for &(c, v) in &urow {
            if c == natural {
                natural_val = v;
            }
            if best.map(|(_, bv)| v.abs() > bv.abs()).unwrap_or(true) {
                best = Some((c, v));
            }
        }
        let (piv_col, piv_val) = match best {
            Some((c, v)) if natural_val.abs() < pivtol * v.abs() => (c, v),
            _ if natural_val != 0.0 => (natural, natural_val),
            Some((c, v)) => (c, v),
            None => (natural, 0.0),
        };
        let piv_val = if piv_val == 0.0 {
            // structurally empty pivot; substitute a stable placeholder
            if rownorm > 0.0 {
                rownorm
            } else {
                1.0
            }
        } else {
            piv_val
        };
        // swap logical positions i <-> pos(piv_col)
        let pp = pos_of_col[piv_col];
        let other = col_at_pos[i];
        col_at_pos.swap(i, pp);
        pos_of_col[piv_col] = i;
        pos_of_col[other] = pp;

        // drop and trim
        urow.retain(|&(c, v)| c != piv_col && v.abs() > drop);
        urow.sort_by(|a, b| b.1.abs().partial_cmp(&a.1.abs()).unwrap());
        urow.truncate(p_fill);
        lrow.sort_by(|a, b| b.1.abs().partial_cmp(&a.1.abs()).unwrap());
        lrow.truncate(p_fill);
        lrow.sort_by_key(|e| e.0);

        diag_col[i] = piv_col as u32;
        diag_val[i] = piv_val;
        u_rows.push(urow.into_iter().map(|(c, v)| (c as u32, v)).collect());
        l_rows.push(lrow);
    }
    Ok(Ilutp {
        n,
        l_rows,
        u_rows,
        diag_col,
        diag_val,
    })
}

impl Ilutp {
    /// Approximate solve `A z ~= r` through the pivoted factors.
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = self.n;
        // forward: y_i = r_i - sum L_i[k] y_k
        let mut y = r.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for &(k, v) in &self.l_rows[i] {
                s -= v * y[k as usize];
            }
            y[i] = s;
        }
        // backward on original columns
        for v in z.iter_mut() {
            *v = 0.0;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for &(c, v) in &self.u_rows[i] {
                s -= v * z[c as usize];
            }
            z[self.diag_col[i] as usize] = s / self.diag_val[i];
        }
    }

    pub fn fill(&self) -> usize {
        self.l_rows.iter().map(|r| r.len()).sum::<usize>()
            + self.u_rows.iter().map(|r| r.len()).sum::<usize>()
            + self.n
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub struct KrylovReport {
    pub iterations: usize,
    pub residual: f64,
}

/// Preconditioned BiCGStab.  Converges on the preconditioned residual, then
/// verified against the true residual by the caller.
pub fn bicgstab(
    a: &Csr,
    b: &[f64],
    x: &mut [f64],
    precond: &Ilu0,
    tol: f64,
    max_iter: usize,
) -> Result<KrylovReport> {
    let n = a.n;
    let bnorm = norm2(b).max(1e-300);
    let mut r = vec![0.0; n];
    a.matvec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let r0 = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut phat = vec![0.0; n];
    let mut shat = vec![0.0; n];
    let mut iterations = 0;
    for it in 0..max_iter {
        iterations = it + 1;
        let rho_new = dot(&r0, &r);
        if rho_new.abs() < 1e-300 {
            // restart from the current iterate
            a.matvec(x, &mut r);
            for i in 0..n {
                r[i] = b[i] - r[i];
            }
            if norm2(&r) / bnorm < tol {
                return Ok(KrylovReport {
                    iterations,
                    residual: norm2(&r) / bnorm,
                });
            }
            return Err(Error::SolverFailure("BiCGStab breakdown (rho)".into()));
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        precond.apply(&p, &mut phat);
        a.matvec(&phat, &mut v);
        alpha = rho / dot(&r0, &v);
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm2(&s) / bnorm < tol {
            for i in 0..n {
                x[i] += alpha * phat[i];
            }
            a.matvec(x, &mut r);
            for i in 0..n {
                r[i] = b[i] - r[i];
            }
            return Ok(KrylovReport {
                iterations,
                residual: norm2(&r) / bnorm,
            });
        }
        precond.apply(&s, &mut shat);
        a.matvec(&shat, &mut t);
        let tt = dot(&t, &t);
        if tt == 0.0 {
            return Err(Error::SolverFailure("BiCGStab breakdown (t)".into()));
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * phat[i] + omega * shat[i];
            r[i] = s[i] - omega * t[i];
        }
        if norm2(&r) / bnorm < tol {
            break;
        }
        if omega == 0.0 {
            return Err(Error::SolverFailure("BiCGStab breakdown (omega)".into()));
        }
    }
    a.matvec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    Ok(KrylovReport {
        iterations,
        residual: norm2(&r) / bnorm,
    })
}

/// Flexible GMRES with a (possibly inexact) preconditioner callback.
/// Returns the true relative residual.
pub fn fgmres(
    a: &Csr,
    b: &[f64],
    x: &mut Vec<f64>,
    precond: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    tol: f64,
    m: usize,
    max_outer: usize,
) -> Result<KrylovReport> {
    let n = a.n;
    let bnorm = norm2(b).max(1e-300);
    let mut total = 0usize;
    for _outer in 0..max_outer {
        let mut r = vec![0.0; n];
        a.matvec(x, &mut r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        let beta = norm2(&r);
        if beta / bnorm < tol {
            return Ok(KrylovReport {
                iterations: total,
                residual: beta / bnorm,
            });
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|q| q / beta).collect()];
        let mut z: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut h: Vec<Vec<f64>> = Vec::with_capacity(m);
        let (mut cs, mut sn): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
        let mut g = vec![beta];
        for j in 0..m {
            total += 1;
            let zj = precond(&v[j]);
            let mut w = vec![0.0; n];
            a.matvec(&zj, &mut w);
            z.push(zj);
            let mut hj = vec![0.0; j + 2];
            for (i, vi) in v.iter().enumerate() {
                let d = dot(&w, vi);
                hj[i] = d;
                for k in 0..n {
                    w[k] -= d * vi[k];
                }
            }
            let wn = norm2(&w);
            hj[j + 1] = wn;
            for i in 0..j {
                let t = cs[i] * hj[i] + sn[i] * hj[i + 1];
                hj[i + 1] = -sn[i] * hj[i] + cs[i] * hj[i + 1];
                hj[i] = t;
            }
            let denom = (hj[j] * hj[j] + hj[j + 1] * hj[j + 1]).sqrt();
            let (c, s) = if denom == 0.0 {
                (1.0, 0.0)
            } else {
                (hj[j] / denom, hj[j + 1] / denom)
            };
            cs.push(c);
            sn.push(s);
            hj[j] = denom;
            g.push(-s * g[j]);
            g[j] *= c;
            h.push(hj);
            let done = wn < 1e-14 || j + 1 == m || g[j + 1].abs() / bnorm < 0.2 * tol;
            if done {
                let jj = j + 1;
                let mut y = vec![0.0; jj];
                for i in (0..jj).rev() {
                    let mut s2 = g[i];
                    for k in i + 1..jj {
                        s2 -= h[k][i] * y[k];
                    }
                    y[i] = s2 / h[i][i];
                }
                for (k, zk) in z.iter().take(jj).enumerate() {
                    for i in 0..n {
                        x[i] += y[k] * zk[i];
                    }
                }
                break;
            }
            v.push(w.iter().map(|q| q / wn).collect());
        }
    }
    let mut r = vec![0.0; n];
    a.matvec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    Ok(KrylovReport {
        iterations: total,
        residual: norm2(&r) / bnorm,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SolveMethod {
    /// Dense LU; intended for systems of a few thousand unknowns.
    Direct,
    /// Row-equilibrated ILU(0)-preconditioned BiCGStab.
    Krylov,
}

/// A square sparse system with its right-hand side.
pub struct SparseSystem {
    pub a: Csr,
    pub rhs: Vec<f64>,
}

const DIRECT_CAP: usize = 6000;
const DIRECT_TOL: f64 = 1e-11;
const KRYLOV_TOL: f64 = 1e-12;
const KRYLOV_VERIFY: f64 = 1e-10;

/// Solve to the contract tolerances: relative residual below `1e-11`
/// (direct) or `1e-10` (Krylov).  Nonconvergence is an error.
pub fn solve_linear(sys: &SparseSystem, method: SolveMethod) -> Result<Vec<f64>> {
    let n = sys.a.n;
    if n == 0 {
        return Ok(Vec::new());
    }
    match method {
        SolveMethod::Direct => {
            if n > DIRECT_CAP {
                return Err(Error::SolverFailure(format!(
                    "dense direct solve refused for n = {n} > {DIRECT_CAP}; use Krylov"
                )));
            }
            let lu = lu_factor(&sys.a.to_dense());
            let x = lu.solve(&sys.rhs)?;
            let r = sys.a.matvec_alloc(&x);
            let res: f64 = r
                .iter()
                .zip(&sys.rhs)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
                / norm2(&sys.rhs).max(1e-300);
            if res > DIRECT_TOL {
                return Err(Error::SolverFailure(format!(
                    "direct residual {res:.3e} above {DIRECT_TOL:.0e}"
                )));
            }
            Ok(x)
        }
        SolveMethod::Krylov => {
            // equilibrate rows, factor, iterate
            let norms = sys.a.row_inf_norms();
            let scale: Vec<f64> = norms
                .iter()
                .map(|&v| if v > 0.0 { 1.0 / v } else { 1.0 })
                .collect();
            let mut a = sys.a.clone();
            a.scale_rows(&scale);
            let b: Vec<f64> = sys.rhs.iter().zip(&scale).map(|(v, s)| v * s).collect();
            let pre = ilu0(&a)?;
            let mut x = vec![0.0; n];
            let rep = bicgstab(&a, &b, &mut x, &pre, KRYLOV_TOL, 4000)?;
            // verify against the unscaled system
            let r = sys.a.matvec_alloc(&x);
            let res: f64 = r
                .iter()
                .zip(&sys.rhs)
                .map(|(u, v)| (u - v) * (u - v))
                .sum::<f64>()
                .sqrt()
                / norm2(&sys.rhs).max(1e-300);
            if res > KRYLOV_VERIFY {
                return Err(Error::SolverFailure(format!(
                    "Krylov residual {res:.3e} above {KRYLOV_VERIFY:.0e} after {} iterations",
                    rep.iterations
                )));
            }
            Ok(x)
        }
    }
}

/// Block preconditioner for the fourth-order embedded systems.
///
/// The least-squares stencil rows near the boundary can have arbitrarily
/// small diagonals, which makes every no-pivot incomplete factorization of
/// the full matrix explode.  Instead: rows failing a diagonal-health test
/// form a small "band" block solved exactly by a dense LU *with pivoting*;
/// every other unknown is preconditioned through an inner solve of the
/// spectrally close M-matrix surrogate, whose ILU(0) is stable.  The two
/// blocks combine in block-lower-triangular form
/// `P = [[M_RR, 0], [A_BR, A_BB]]`, leaving the preconditioned spectrum
/// clustered with no boundary outliers.
pub struct BlockPrecond {
    n: usize,
    /// Unknowns of the exactly-solved block, ascending.
    band: Vec<u32>,
    /// Dense index within the band (u32::MAX elsewhere).
    band_pos: Vec<u32>,
    /// R-to-global map.
    bulk: Vec<u32>,
    bulk_pos: Vec<u32>,
    m_rr: Csr,
    m_ilu: Ilu0,
    /// Band rows: couplings into the bulk, by bulk index.
    a_br: Vec<Vec<(u32, f64)>>,
    bb_lu: crate::dense::Lu,
    inner_tol: f64,
}

/// Rows whose diagonal is below this fraction of the row max go into the
/// exactly-solved band block.
const HEALTH_THRESHOLD: f64 = 0.3;
/// Largest band block factored densely.
const BAND_CAP: usize = 16000;

impl BlockPrecond {
    /// `force_band` marks rows that must join the exactly-solved block (the
    /// least-squares stencil rows); low-diagonal rows join it regardless.
    pub fn new(a: &Csr, surrogate: &Csr, force_band: Option<&[bool]>) -> Result<Self> {
        let n = a.n;
        let mut band: Vec<u32> = Vec::new();
        for i in 0..n {
            let mut diag = 0.0;
            let mut rowmax = 0.0f64;
            for k in a.indptr[i]..a.indptr[i + 1] {
                let v = a.data[k].abs();
                rowmax = rowmax.max(v);
                if a.indices[k] as usize == i {
                    diag = v;
                }
            }
            let forced = force_band.map(|f| f[i]).unwrap_or(false);
            if forced || diag < HEALTH_THRESHOLD * rowmax {
                band.push(i as u32);
            }
        }
        if band.len() > BAND_CAP {
            return Err(Error::SolverFailure(format!(
                "{} low-diagonal rows exceed the dense band cap {BAND_CAP}",
                band.len()
            )));
        }
        let mut band_pos = vec![u32::MAX; n];
        for (p, &i) in band.iter().enumerate() {
            band_pos[i as usize] = p as u32;
        }
        let bulk: Vec<u32> = (0..n as u32).filter(|i| band_pos[*i as usize] == u32::MAX).collect();
        let mut bulk_pos = vec![u32::MAX; n];
        for (p, &i) in bulk.iter().enumerate() {
            bulk_pos[i as usize] = p as u32;
        }
        // surrogate restricted to the bulk (absorbing on dropped columns)
        let mut m_rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(bulk.len());
        for &i in &bulk {
            let i = i as usize;
            let mut row = Vec::new();
            for k in surrogate.indptr[i]..surrogate.indptr[i + 1] {
                let j = surrogate.indices[k] as usize;
                if bulk_pos[j] != u32::MAX {
                    row.push((bulk_pos[j] as usize, surrogate.data[k]));
                }
            }
            m_rows.push(row);
        }
        let m_rr = Csr::from_rows(bulk.len(), m_rows);
        let m_ilu = ilu0(&m_rr)?;
        // dense band block and its bulk couplings
        let nb = band.len();
        let mut bb = Mat::zeros(nb.max(1), nb.max(1));
        if nb == 0 {
            bb[(0, 0)] = 1.0;
        }
        let mut a_br: Vec<Vec<(u32, f64)>> = vec![Vec::new(); nb];
        for (p, &i) in band.iter().enumerate() {
            let i = i as usize;
            for k in a.indptr[i]..a.indptr[i + 1] {
                let j = a.indices[k] as usize;
                if band_pos[j] != u32::MAX {
                    bb[(p, band_pos[j] as usize)] += a.data[k];
                } else {
                    a_br[p].push((bulk_pos[j], a.data[k]));
                }
            }
        }
        let bb_lu = lu_factor(&bb);
        if bb_lu.singular {
            return Err(Error::SolverFailure("singular band block".into()));
        }
        Ok(Self {
            n,
            band,
            band_pos,
            bulk,
            bulk_pos,
            m_rr,
            m_ilu,
            a_br,
            bb_lu,
            inner_tol: 3e-3,
        })
    }

    pub fn band_size(&self) -> usize {
        self.band.len()
    }

    pub fn apply(&self, r: &[f64]) -> Vec<f64> {
        let nr = self.bulk.len();
        let r_r: Vec<f64> = self.bulk.iter().map(|&i| r[i as usize]).collect();
        let mut z_r = vec![0.0; nr];
        if nr > 0
            && bicgstab(&self.m_rr, &r_r, &mut z_r, &self.m_ilu, self.inner_tol, 500).is_err()
        {
            self.m_ilu.apply(&r_r, &mut z_r);
        }
        let mut z = vec![0.0; self.n];
        for (p, &i) in self.bulk.iter().enumerate() {
            z[i as usize] = z_r[p];
        }
        if !self.band.is_empty() {
            let mut w: Vec<f64> = self.band.iter().map(|&i| r[i as usize]).collect();
            for (p, row) in self.a_br.iter().enumerate() {
                for &(jr, v) in row {
                    w[p] -= v * z_r[jr as usize];
                }
            }
            let z_b = self.bb_lu.solve(&w).expect("band LU is nonsingular");
            for (p, &i) in self.band.iter().enumerate() {
                z[i as usize] = z_b[p];
            }
        }
        z
    }
}

/// Reusable solver context when many right-hand sides share one matrix
/// (implicit Runge-Kutta stages, repeated elliptic solves).
///
/// Small systems keep a dense LU; larger ones run flexible GMRES with the
/// [`BlockPrecond`] built from a stable surrogate.
pub enum PreparedSolver {
    Direct {
        lu: crate::dense::Lu,
        a: Csr,
    },
    Iterative {
        a: Csr,
        pre: BlockPrecond,
    },
}

/// Systems at or below this size use the prepared dense factorization.
pub const PREPARED_DIRECT_CAP: usize = 1500;

impl PreparedSolver {
    /// `surrogate` must be the stable preconditioning matrix when the system
    /// is large; small systems ignore it.  `force_band` marks rows to solve
    /// exactly inside the preconditioner (the lattice stencil rows).
    pub fn with_surrogate(
        a: Csr,
        surrogate: Option<Csr>,
        force_band: Option<&[bool]>,
    ) -> Result<Self> {
        if a.n <= PREPARED_DIRECT_CAP {
            let lu = lu_factor(&a.to_dense());
            if lu.singular {
                return Err(Error::SolverFailure("singular system".into()));
            }
            return Ok(Self::Direct { lu, a });
        }
        let m = surrogate.ok_or_else(|| {
            Error::SolverFailure(format!(
                "system of {} unknowns needs a surrogate preconditioner",
                a.n
            ))
        })?;
        let pre = BlockPrecond::new(&a, &m, force_band)?;
        Ok(Self::Iterative { a, pre })
    }

    /// Back-compatible constructor for small systems and diagonally dominant
    /// matrices: uses the matrix itself as its own surrogate.
    pub fn new(a: Csr) -> Result<Self> {
        let surrogate = (a.n > PREPARED_DIRECT_CAP).then(|| a.clone());
        Self::with_surrogate(a, surrogate, None)
    }

    pub fn solve_with_guess(&self, rhs: &[f64], x0: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::Direct { lu, a } => {
                let x = lu.solve(rhs)?;
                let r = a.matvec_alloc(&x);
                let res: f64 = r
                    .iter()
                    .zip(rhs)
                    .map(|(u, v)| (u - v) * (u - v))
                    .sum::<f64>()
                    .sqrt()
                    / norm2(rhs).max(1e-300);
                if res > 1e-9 {
                    return Err(Error::SolverFailure(format!(
                        "prepared direct residual {res:.3e}"
                    )));
                }
                Ok(x)
            }
            Self::Iterative { a, pre } => {
                let mut x = x0.to_vec();
                let mut precond = |r: &[f64]| -> Vec<f64> { pre.apply(r) };
                let rep = fgmres(a, rhs, &mut x, &mut precond, KRYLOV_TOL, 250, 16)?;
                if rep.residual > KRYLOV_VERIFY {
                    return Err(Error::SolverFailure(format!(
                        "iterative solve residual {:.3e} after {} outer iterations",
                        rep.residual, rep.iterations
                    )));
                }
                Ok(x)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    #[test]
    fn identity_system() {
        let rows: Vec<Vec<(usize, f64)>> = (0..5).map(|i| vec![(i, 1.0)]).collect();
        let a = Csr::from_rows(5, rows);
        let rhs = vec![3.0, -1.0, 0.5, 2.0, 8.0];
        let sys = SparseSystem { a, rhs: rhs.clone() };
        assert_eq!(solve_linear(&sys, SolveMethod::Direct).unwrap(), rhs);
        let x = solve_linear(&sys, SolveMethod::Krylov).unwrap();
        for (a, b) in x.iter().zip(&rhs) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn poisson_1d_exact_discrete_solution() {
        // -u'' = f with the 3-point stencil; the discrete solution of the
        // tridiagonal system is recovered to machine precision
        let n = 64;
        let h = 1.0 / (n as f64 + 1.0);
        let mut rows = Vec::new();
        for i in 0..n {
            let mut row = vec![(i, 2.0 / (h * h))];
            if i > 0 {
                row.push((i - 1, -1.0 / (h * h)));
            }
            if i + 1 < n {
                row.push((i + 1, -1.0 / (h * h)));
            }
            rows.push(row);
        }
        let a = Csr::from_rows(n, rows);
        // manufactured discrete solution
        let want: Vec<f64> = (0..n)
            .map(|i| {
                let x = (i as f64 + 1.0) * h;
                (std::f64::consts::PI * x).sin()
            })
            .collect();
        let rhs = a.matvec_alloc(&want);
        let sys = SparseSystem { a, rhs };
        let x = solve_linear(&sys, SolveMethod::Direct).unwrap();
        for (a, b) in x.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn krylov_matches_direct_on_random_nonsymmetric() {
        let mut rng = SplitMix64::new(7);
        for _ in 0..10 {
            let n = 40 + rng.below(60);
            let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
            for i in 0..n {
                let mut row = vec![(i, 4.0 + rng.next_f64())];
                for _ in 0..3 {
                    let j = rng.below(n);
                    if j != i {
                        row.push((j, rng.next_f64() - 0.5));
                    }
                }
                rows.push(row);
            }
            let a = Csr::from_rows(n, rows);
            let rhs: Vec<f64> = (0..n).map(|_| rng.next_f64() * 2.0 - 1.0).collect();
            let sys = SparseSystem { a, rhs };
            let xd = solve_linear(&sys, SolveMethod::Direct).unwrap();
            let xk = solve_linear(&sys, SolveMethod::Krylov).unwrap();
            for (a, b) in xd.iter().zip(&xk) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn prepared_solver_is_deterministic() {
        let n = 50;
        let mut rng = SplitMix64::new(11);
        let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
        for i in 0..n {
            let mut row = vec![(i, 5.0)];
            if i > 0 {
                row.push((i - 1, -1.0 - rng.next_f64()));
            }
            if i + 1 < n {
                row.push((i + 1, -1.0 - rng.next_f64()));
            }
            rows.push(row);
        }
        let a = Csr::from_rows(n, rows);
        let solver = PreparedSolver::new(a).unwrap();
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let x0 = vec![0.0; n];
        let x1 = solver.solve_with_guess(&rhs, &x0).unwrap();
        let x2 = solver.solve_with_guess(&rhs, &x0).unwrap();
        assert_eq!(x1, x2); // bit-identical
    }

    #[test]
    fn direct_cap_enforced() {
        let n = DIRECT_CAP + 1;
        let rows: Vec<Vec<(usize, f64)>> = (0..n).map(|i| vec![(i, 1.0)]).collect();
        let a = Csr::from_rows(n, rows);
        let sys = SparseSystem {
            a,
            rhs: vec![1.0; n],
        };
        assert!(solve_linear(&sys, SolveMethod::Direct).is_err());
    }
}
