//! Fourth-order implicit and implicit-explicit Runge-Kutta time integrators.
//!
//! The implicit scheme is a six-stage stiffly-accurate ESDIRK with
//! `gamma = 1/4`; the additive scheme pairs it with its explicit companion so
//! advection can be treated explicitly while diffusion stays implicit.  Both
//! tableaus are validated by numerical order checks in the tests (order 4 for
//! the pair, stage order as expected), not taken on faith.

use crate::error::{Error, Result};
use crate::sparse::{Csr, PreparedSolver};

#[derive(Clone, Debug)]
pub struct ButcherTableau {
    pub s: usize,
    pub a_impl: Vec<Vec<f64>>,
    /// Explicit companion for additive schemes; `None` for pure ESDIRK.
    pub a_expl: Option<Vec<Vec<f64>>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

/// Diagonal coefficient of the singly-diagonal implicit stages.
pub const ESDIRK_GAMMA: f64 = 0.25;

/// Six-stage, fourth-order, stiffly accurate ESDIRK (L-stable).
pub fn esdirk4() -> ButcherTableau {
    let a_impl = vec![
        vec![0.0; 6],
        vec![1.0 / 4.0, 1.0 / 4.0, 0.0, 0.0, 0.0, 0.0],
        vec![8611.0 / 62500.0, -1743.0 / 31250.0, 1.0 / 4.0, 0.0, 0.0, 0.0],
        vec![
            5012029.0 / 34652500.0,
            -654441.0 / 2922500.0,
            174375.0 / 388108.0,
            1.0 / 4.0,
            0.0,
            0.0,
        ],
        vec![
            15267082809.0 / 155376265600.0,
            -71443401.0 / 120774400.0,
            730878875.0 / 902184768.0,
            2285395.0 / 8070912.0,
            1.0 / 4.0,
            0.0,
        ],
        vec![
            82889.0 / 524892.0,
            0.0,
            15625.0 / 83664.0,
            69875.0 / 102672.0,
            -2260.0 / 8211.0,
            1.0 / 4.0,
        ],
    ];
    let b = a_impl[5].clone();
    let c = vec![0.0, 0.5, 83.0 / 250.0, 31.0 / 50.0, 17.0 / 20.0, 1.0];
    ButcherTableau {
        s: 6,
        a_impl,
        a_expl: None,
        b,
        c,
    }
}

/// The additive pair: explicit companion tableau sharing `b` and `c` with the
/// ESDIRK part.
pub fn ark4() -> ButcherTableau {
    let mut t = esdirk4();
    t.a_expl = Some(vec![
        vec![0.0; 6],
        vec![0.5, 0.0, 0.0, 0.0, 0.0, 0.0],
        vec![13861.0 / 62500.0, 6889.0 / 62500.0, 0.0, 0.0, 0.0, 0.0],
        vec![
            -116923316275.0 / 2393684061468.0,
            -2731218467317.0 / 15368042101831.0,
            9408046702089.0 / 11113171139209.0,
            0.0,
            0.0,
            0.0,
        ],
        vec![
            -451086348788.0 / 2902428689909.0,
            -2682348792572.0 / 7519795681897.0,
            12662868775082.0 / 11960479115383.0,
            3355817975965.0 / 11060851509271.0,
            0.0,
            0.0,
        ],
        vec![
            647845179188.0 / 3216320057751.0,
            73281519250.0 / 8382639484533.0,
            552539513391.0 / 3454668386233.0,
            3354512671639.0 / 8306763924573.0,
            4040.0 / 17871.0,
            0.0,
        ],
    ]);
    t
}

/// A semi-discrete affine right-hand side `F(u, t) = A u + s(t)`.
pub struct AffineRhs<'a> {
    pub matrix: &'a Csr,
    /// Time-dependent source (boundary data plus forcing) at the FD nodes.
    pub source: &'a dyn Fn(f64) -> Vec<f64>,
}

impl AffineRhs<'_> {
    fn eval(&self, u: &[f64], t: f64) -> Vec<f64> {
        let mut out = self.matrix.matvec_alloc(u);
        let s = (self.source)(t);
        for (o, v) in out.iter_mut().zip(&s) {
            *o += v;
        }
        out
    }
}

/// One ESDIRK step for `du/dt = F_I(u, t)`; `solver` must hold the prepared
/// factorization of `I - dt*gamma*A`.
pub fn esdirk_step(
    tableau: &ButcherTableau,
    rhs: &AffineRhs,
    solver: &PreparedSolver,
    u: &[f64],
    t: f64,
    dt: f64,
) -> Result<Vec<f64>> {
    let n = u.len();
    let s = tableau.s;
    let mut fs: Vec<Vec<f64>> = Vec::with_capacity(s);
    // first stage is explicit
    fs.push(rhs.eval(u, t));
    let mut guess = u.to_vec();
    for i in 1..s {
        let ti = t + tableau.c[i] * dt;
        // rhs of (I - dt*gamma*A) U = u + dt * sum_{j<i} a_ij F_j
        //                               + dt*gamma * s(t_i)
        let mut b = u.to_vec();
        for j in 0..i {
            let a = tableau.a_impl[i][j];
            if a != 0.0 {
                for k in 0..n {
                    b[k] += dt * a * fs[j][k];
                }
            }
        }
        let src = (rhs.source)(ti);
        for k in 0..n {
            b[k] += dt * ESDIRK_GAMMA * src[k];
        }
        let ui = solver.solve_with_guess(&b, &guess)?;
        fs.push(rhs.eval(&ui, ti));
        guess = ui;
    }
    let mut out = u.to_vec();
    for (i, b) in tableau.b.iter().enumerate() {
        if *b != 0.0 {
            for k in 0..n {
                out[k] += dt * b * fs[i][k];
            }
        }
    }
    Ok(out)
}

/// One additive step for `du/dt = F_E(u, t) + F_I(u, t)` with `F_E` explicit
/// and `F_I` implicit.
#[allow(clippy::too_many_arguments)]
pub fn ark_step(
    tableau: &ButcherTableau,
    rhs_e: &AffineRhs,
    rhs_i: &AffineRhs,
    solver: &PreparedSolver,
    u: &[f64],
    t: f64,
    dt: f64,
) -> Result<Vec<f64>> {
    let a_expl = tableau
        .a_expl
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("tableau lacks the explicit part".into()))?;
    let n = u.len();
    let s = tableau.s;
    let mut fe: Vec<Vec<f64>> = Vec::with_capacity(s);
    let mut fi: Vec<Vec<f64>> = Vec::with_capacity(s);
    fe.push(rhs_e.eval(u, t));
    fi.push(rhs_i.eval(u, t));
    let mut guess = u.to_vec();
    for i in 1..s {
        let ti = t + tableau.c[i] * dt;
        let mut b = u.to_vec();
        for j in 0..i {
            let ae = a_expl[i][j];
            let ai = tableau.a_impl[i][j];
            for k in 0..n {
                b[k] += dt * (ae * fe[j][k] + ai * fi[j][k]);
            }
        }
        let src = (rhs_i.source)(ti);
        for k in 0..n {
            b[k] += dt * ESDIRK_GAMMA * src[k];
        }
        let ui = solver.solve_with_guess(&b, &guess)?;
        fe.push(rhs_e.eval(&ui, ti));
        fi.push(rhs_i.eval(&ui, ti));
        guess = ui;
    }
    let mut out = u.to_vec();
    for i in 0..s {
        let b = tableau.b[i];
        if b != 0.0 {
            for k in 0..n {
                out[k] += dt * b * (fe[i][k] + fi[i][k]);
            }
        }
    }
    Ok(out)
}
