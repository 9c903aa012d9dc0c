//! Classical fourth-order Runge-Kutta for linear systems `y' = G y`,
//! with step-doubling error control.

use super::matrix::{ComplexMatrix, C64, ZERO};
use crate::error::{Error, Result};

/// A linear map on complex state vectors.
pub trait LinearGenerator {
    fn dim(&self) -> usize;
    fn apply(&self, y: &[C64], out: &mut [C64]);
}

impl LinearGenerator for ComplexMatrix {
    fn dim(&self) -> usize {
        self.rows()
    }

    fn apply(&self, y: &[C64], out: &mut [C64]) {
        self.matvec_into(y, out);
    }
}

/// Compressed-row copy of a dense matrix with exact zeros dropped.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    dim: usize,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseMatrix {
    pub fn from_dense(m: &ComplexMatrix) -> Self {
        let mut row_start = Vec::with_capacity(m.rows() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_start.push(0);
        for i in 0..m.rows() {
            for (j, &v) in m.row(i).iter().enumerate() {
                if v != ZERO {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_start.push(cols.len());
        }
        Self {
            dim: m.rows(),
            row_start,
            cols,
            vals,
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }
}

impl LinearGenerator for SparseMatrix {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, y: &[C64], out: &mut [C64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let (a, b) = (self.row_start[i], self.row_start[i + 1]);
            *o = self.cols[a..b]
                .iter()
                .zip(&self.vals[a..b])
                .map(|(&j, &v)| v * y[j])
                .sum();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    /// Bound on the max-norm local error of each accepted step.
    pub tol: f64,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            initial_step: 1e-2,
            min_step: 1e-12,
            max_step: 1.0,
        }
    }
}

impl StepControl {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

struct Workspace {
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    tmp: Vec<C64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self {
            k1: vec![ZERO; n],
            k2: vec![ZERO; n],
            k3: vec![ZERO; n],
            k4: vec![ZERO; n],
            tmp: vec![ZERO; n],
        }
    }
}

fn rk4_step<G: LinearGenerator + ?Sized>(g: &G, y: &[C64], h: f64, out: &mut [C64], w: &mut Workspace) {
    g.apply(y, &mut w.k1);
    for ((t, &yi), &k) in w.tmp.iter_mut().zip(y).zip(&w.k1) {
        *t = yi + k * (0.5 * h);
    }
    g.apply(&w.tmp, &mut w.k2);
    for ((t, &yi), &k) in w.tmp.iter_mut().zip(y).zip(&w.k2) {
        *t = yi + k * (0.5 * h);
    }
    g.apply(&w.tmp, &mut w.k3);
    for ((t, &yi), &k) in w.tmp.iter_mut().zip(y).zip(&w.k3) {
        *t = yi + k * h;
    }
    g.apply(&w.tmp, &mut w.k4);
    for (i, o) in out.iter_mut().enumerate() {
        *o = y[i] + (w.k1[i] + (w.k2[i] + w.k3[i]) * 2.0 + w.k4[i]) * (h / 6.0);
    }
}

/// Integrates `y' = G y` from `grid[0]` and returns the state at every grid time.
///
/// `grid` must be non-decreasing; the first sample is `y0` itself.
pub fn integrate_linear<G: LinearGenerator + ?Sized>(
    g: &G,
    y0: &[C64],
    grid: &[f64],
    ctrl: &StepControl,
) -> Result<Vec<Vec<C64>>> {
    if y0.len() != g.dim() {
        return Err(Error::Dimension(format!(
            "state of length {} for generator of dimension {}",
            y0.len(),
            g.dim()
        )));
    }
    if !(ctrl.tol > 0.0) || !(ctrl.min_step > 0.0) || !(ctrl.initial_step > 0.0) {
        return Err(Error::InvalidParams("step control values must be positive".into()));
    }
    if grid.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::InvalidParams("time grid must be non-decreasing".into()));
    }
    let Some(&t0) = grid.first() else {
        return Ok(Vec::new());
    };

    let n = y0.len();
    let mut w = Workspace::new(n);
    let mut y = y0.to_vec();
    let mut full = vec![ZERO; n];
    let mut mid = vec![ZERO; n];
    let mut half = vec![ZERO; n];
    let mut t = t0;
    let mut h = ctrl.initial_step.min(ctrl.max_step);
    let mut out = Vec::with_capacity(grid.len());

    for &target in grid {
        while t < target {
            let remaining = target - t;
            let last = h >= remaining;
            let step = if last { remaining } else { h };
            rk4_step(g, &y, step, &mut full, &mut w);
            rk4_step(g, &y, 0.5 * step, &mut mid, &mut w);
            rk4_step(g, &mid, 0.5 * step, &mut half, &mut w);
            let err = half
                .iter()
                .zip(&full)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max)
                / 15.0;
            if err <= ctrl.tol {
                std::mem::swap(&mut y, &mut half);
                t = if last { target } else { t + step };
                let grow = if err == 0.0 {
                    4.0
                } else {
                    (0.9 * (ctrl.tol / err).powf(0.2)).clamp(0.2, 4.0)
                };
                // a step clipped to hit the sample says nothing about the natural size
                if !last || step >= h {
                    h = (step * grow).min(ctrl.max_step);
                }
            } else {
                let shrink = (0.9 * (ctrl.tol / err).powf(0.2)).clamp(0.1, 0.5);
                h = step * shrink;
                if h < ctrl.min_step {
                    return Err(Error::StepUnderflow { t, step: h });
                }
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

/// Fixed-step RK4 from `t0` to `t1` in `steps` equal steps.
pub fn integrate_fixed<G: LinearGenerator + ?Sized>(
    g: &G,
    y0: &[C64],
    t0: f64,
    t1: f64,
    steps: usize,
) -> Result<Vec<C64>> {
    if y0.len() != g.dim() {
        return Err(Error::Dimension("state/generator mismatch".into()));
    }
    if steps == 0 || !(t1 >= t0) {
        return Err(Error::InvalidParams("need t1 >= t0 and at least one step".into()));
    }
    let h = (t1 - t0) / steps as f64;
    let mut w = Workspace::new(y0.len());
    let mut y = y0.to_vec();
    let mut next = vec![ZERO; y0.len()];
    for _ in 0..steps {
        rk4_step(g, &y, h, &mut next, &mut w);
        std::mem::swap(&mut y, &mut next);
    }
    Ok(y)
}
