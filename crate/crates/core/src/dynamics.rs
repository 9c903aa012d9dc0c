//! Time evolution, distances to equilibrium, and the direct and two-step
//! (swap-then-relax) relaxation protocols.
//!
//! Times are in units of `1/J` of the relaxation stage.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_liouvillian, ChainParams, DensityMatrix, Superoperator};
use crate::numerics::{
    eigvals_hermitian, integrate_linear, ComplexMatrix, SparseMatrix, StepControl, C64, ZERO,
};
use crate::spectral::{decompose, overlap_coefficients, stationary_state, steady_state_kernel, SpectralData};

/// Coefficients below this magnitude are dropped from spectral sums.
const NEGLIGIBLE: f64 = 1e-16;

/// `(1/2) Tr |rho - sigma|`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    rho.matrix().ensure_same_shape(sigma.matrix())?;
    half_trace_norm(&(rho.matrix() - sigma.matrix()))
}

/// `sqrt(Tr (rho - sigma)^2)`.
pub fn hs_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    rho.matrix().ensure_same_shape(sigma.matrix())?;
    Ok((rho.matrix() - sigma.matrix()).frobenius_norm())
}

/// Half the sum of absolute eigenvalues of a Hermitian matrix.
pub fn half_trace_norm(delta: &ComplexMatrix) -> Result<f64> {
    Ok(0.5 * eigvals_hermitian(delta)?.iter().map(|v| v.abs()).sum::<f64>())
}

/// `rho(t) = rho_E + sum_{alpha > 1} c_alpha e^{lambda_alpha t} R_alpha` for
/// a fixed initial state.
#[derive(Debug, Clone)]
pub struct SpectralTrajectory<'a> {
    sd: &'a SpectralData,
    coeffs: Vec<C64>,
}

impl<'a> SpectralTrajectory<'a> {
    pub fn new(sd: &'a SpectralData, rho0: &DensityMatrix) -> Result<Self> {
        Ok(Self {
            sd,
            coeffs: overlap_coefficients(sd, rho0)?,
        })
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.coeffs
    }

    /// `rho(t) - rho_E`, Hermitized.
    pub fn deviation_at(&self, t: f64) -> ComplexMatrix {
        let l = self.sd.sites();
        let mut acc = vec![ZERO; l * l];
        for alpha in 1..self.sd.len() {
            let c = self.coeffs[alpha] * (self.sd.eigenvalue(alpha) * t).exp();
            if c.norm() < NEGLIGIBLE {
                continue;
            }
            for (a, &r) in acc.iter_mut().zip(self.sd.right_vec(alpha)) {
                *a += c * r;
            }
        }
        ComplexMatrix::unvectorize(&acc, l)
            .expect("mode length is L^2")
            .hermitian_part()
    }

    pub fn state_at(&self, t: f64) -> ComplexMatrix {
        let mut m = self.deviation_at(t);
        m.axpy(C64::new(1.0, 0.0), self.sd.stationary_matrix());
        m.hermitian_part()
    }

    /// Upper bound on `|rho(t) - rho_E|_F` for all times `>= t`.
    pub fn tail_bound(&self, t: f64) -> f64 {
        (1..self.sd.len())
            .map(|a| self.coeffs[a].norm() * (self.sd.eigenvalue(a).re * t).exp())
            .sum()
    }
}

pub fn propagate_spectral(sd: &SpectralData, rho_i: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParams(format!("time must be >= 0, got {t}")));
    }
    let traj = SpectralTrajectory::new(sd, rho_i)?;
    Ok(DensityMatrix::from_evolved(&traj.state_at(t)))
}

/// Integrates `d vec(rho)/dt = L vec(rho)` and samples it on `grid` (starting at `grid[0]`).
pub fn propagate_superoperator(
    superop: &Superoperator,
    rho_i: &ComplexMatrix,
    grid: &[f64],
    ctrl: &StepControl,
) -> Result<Vec<ComplexMatrix>> {
    let l = superop.sites();
    if rho_i.rows() != l || rho_i.cols() != l {
        return Err(Error::Dimension(format!("state must be {l}x{l}")));
    }
    let gen = SparseMatrix::from_dense(superop.matrix());
    integrate_linear(&gen, &rho_i.vectorize(), grid, ctrl)?
        .into_iter()
        .map(|v| ComplexMatrix::unvectorize(&v, l))
        .collect()
}

/// Step control used by [`propagate_numeric`].
pub fn default_step_control() -> StepControl {
    StepControl::with_tol(1e-12)
}

/// Samples `rho(t)` on `grid`; `grid[0]` is the initial time (its sample is `rho_i`).
pub fn propagate_numeric(p: &ChainParams, rho_i: &DensityMatrix, grid: &[f64]) -> Result<Vec<DensityMatrix>> {
    propagate_numeric_with(p, rho_i, grid, &default_step_control())
}

pub fn propagate_numeric_with(
    p: &ChainParams,
    rho_i: &DensityMatrix,
    grid: &[f64],
    ctrl: &StepControl,
) -> Result<Vec<DensityMatrix>> {
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParams("time grid must be increasing".into()));
    }
    let out = propagate_superoperator(&build_liouvillian(p), rho_i.matrix(), grid, ctrl)?;
    Ok(out.iter().map(DensityMatrix::from_evolved).collect())
}

/// Exact evolution under the end-to-end swap generator (`H = -eps1 (|1><L| + |L><1|)`,
/// no dissipation): `U(t) = cos(eps1 t) + i sin(eps1 t) X` on the two end
/// sites, identity elsewhere.
pub fn swap_rotation(rho: &ComplexMatrix, eps1: f64, t: f64) -> ComplexMatrix {
    let l = rho.rows();
    let (s, c) = (eps1 * t).sin_cos();
    let mut u = ComplexMatrix::identity(l);
    let last = l - 1;
    u[(0, 0)] = C64::new(c, 0.0);
    u[(last, last)] = C64::new(c, 0.0);
    u[(0, last)] = C64::new(0.0, s);
    u[(last, 0)] = C64::new(0.0, s);
    (&(&u * rho) * &u.adjoint()).hermitian_part()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    Direct,
    Pontus,
}

/// Relaxation protocol. The two-step variant first evolves under the
/// coherent swap generator with rate `prep_eps1` for `prep_tau`, then under
/// the relaxation generator; the direct variant ignores both fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub kind: ProtocolKind,
    pub prep_eps1: f64,
    pub prep_tau: f64,
    pub relax: ChainParams,
}

impl Protocol {
    pub fn direct(relax: ChainParams) -> Self {
        Self {
            kind: ProtocolKind::Direct,
            prep_eps1: 0.0,
            prep_tau: 0.0,
            relax,
        }
    }

    pub fn pontus(relax: ChainParams, eps1: f64, tau: f64) -> Result<Self> {
        let p = Self {
            kind: ProtocolKind::Pontus,
            prep_eps1: eps1,
            prep_tau: tau,
            relax,
        };
        p.validate()?;
        Ok(p)
    }

    /// Two-step protocol whose preparation is a complete swap: `eps1 = pi / (2 tau)`.
    pub fn pontus_swap(relax: ChainParams, tau: f64) -> Result<Self> {
        Self::pontus(relax, swap_rate(tau), tau)
    }

    /// Two-step protocol with the swap duration `tau = pi / (2 eps1)`.
    pub fn pontus_with_rate(relax: ChainParams, eps1: f64) -> Result<Self> {
        Self::pontus(relax, eps1, FRAC_PI_2 / eps1)
    }

    pub fn validate(&self) -> Result<()> {
        self.relax.validate()?;
        if self.kind == ProtocolKind::Pontus && !(self.prep_eps1 > 0.0 && self.prep_tau > 0.0) {
            return Err(Error::InvalidParams(format!(
                "two-step protocol needs eps1 > 0 and tau > 0, got eps1 = {}, tau = {}",
                self.prep_eps1, self.prep_tau
            )));
        }
        Ok(())
    }

    /// Duration of the preparation stage (zero for the direct protocol).
    pub fn prep_duration(&self) -> f64 {
        match self.kind {
            ProtocolKind::Direct => 0.0,
            ProtocolKind::Pontus => self.prep_tau,
        }
    }
}

/// Swap rate completing `|1> -> |L>` in time `tau`.
pub fn swap_rate(tau: f64) -> f64 {
    FRAC_PI_2 / tau
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrelMode {
    /// Last down-crossing: after this time the distance stays below threshold.
    #[default]
    Settling,
    /// First time the distance reaches the threshold.
    FirstCrossing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub threshold: f64,
    pub horizon: f64,
    pub dt: f64,
    pub mode: TrelMode,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            threshold: 0.01,
            horizon: 200.0,
            dt: 0.01,
            mode: TrelMode::Settling,
        }
    }
}

impl RunOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0) || !(self.dt > 0.0) || !(self.horizon > 0.0) {
            return Err(Error::InvalidParams(
                "threshold, dt and horizon must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        let steps = (self.horizon / self.dt - 1e-9).ceil() as usize;
        (0..=steps).map(|k| k as f64 * self.dt).collect()
    }
}

/// Distances to the stationary state sampled on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceSeries {
    pub times: Vec<f64>,
    pub d_tr: Vec<f64>,
    pub d_hs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationRecord {
    pub times: Vec<f64>,
    pub d_tr: Vec<f64>,
    pub d_hs: Vec<f64>,
    pub t_rel_tr: f64,
    pub t_rel_hs: f64,
    pub threshold: f64,
    pub mode: TrelMode,
}

/// Relaxation time of a sampled distance series, refined by linear
/// interpolation between the bracketing samples.
pub fn relaxation_time(times: &[f64], distances: &[f64], threshold: f64, mode: TrelMode) -> Result<f64> {
    relaxation_time_with(times, distances, threshold, mode, |t| {
        let k = times.partition_point(|&x| x <= t).clamp(1, times.len() - 1);
        let (t0, t1) = (times[k - 1], times[k]);
        let w = (t - t0) / (t1 - t0);
        Ok(distances[k - 1] * (1.0 - w) + distances[k] * w)
    })
}

/// Relaxation time with bisection on `distance_at` inside the bracketing
/// grid interval, to `1e-4`.
pub fn relaxation_time_with(
    times: &[f64],
    distances: &[f64],
    threshold: f64,
    mode: TrelMode,
    distance_at: impl Fn(f64) -> Result<f64>,
) -> Result<f64> {
    if times.len() != distances.len() || times.is_empty() {
        return Err(Error::Dimension("times and distances must be non-empty and equally long".into()));
    }
    let below = |d: f64| d <= threshold;
    let k = match mode {
        TrelMode::Settling => {
            if !below(*distances.last().expect("non-empty")) {
                return Err(Error::NotRelaxed { threshold });
            }
            distances.iter().rposition(|&d| !below(d)).map_or(0, |i| i + 1)
        }
        TrelMode::FirstCrossing => distances
            .iter()
            .position(|&d| below(d))
            .ok_or(Error::NotRelaxed { threshold })?,
    };
    if k == 0 {
        return Ok(times[0]);
    }
    let (mut lo, mut hi) = (times[k - 1], times[k]);
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        if below(distance_at(mid)?) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

enum Engine {
    Spectral(SpectralData),
    Numeric(SparseMatrix),
}

/// Relaxation-stage generator together with its stationary state. Uses the
/// spectral expansion when the decomposition succeeds and falls back to
/// direct integration otherwise.
pub struct Relaxer {
    params: ChainParams,
    stationary: DensityMatrix,
    engine: Engine,
    ctrl: StepControl,
}

impl Relaxer {
    pub fn new(params: &ChainParams) -> Result<Self> {
        params.validate()?;
        let sup = build_liouvillian(params);
        let (engine, stationary) = match decompose(&sup) {
            Ok(sd) => {
                let rho_e = stationary_state(&sd)?;
                (Engine::Spectral(sd), rho_e)
            }
            Err(Error::ExceptionalPoint { .. }) | Err(Error::Residual { .. }) => {
                let rho_e = steady_state_kernel(&sup)?;
                (Engine::Numeric(SparseMatrix::from_dense(sup.matrix())), rho_e)
            }
            Err(e) => return Err(e),
        };
        Ok(Self {
            params: *params,
            stationary,
            engine,
            ctrl: default_step_control(),
        })
    }

    pub fn params(&self) -> &ChainParams {
        &self.params
    }

    pub fn stationary(&self) -> &DensityMatrix {
        &self.stationary
    }

    pub fn spectral(&self) -> Option<&SpectralData> {
        match &self.engine {
            Engine::Spectral(sd) => Some(sd),
            Engine::Numeric(_) => None,
        }
    }

    /// Deviation from equilibrium `rho(t) - rho_E` on `times` (relative to the
    /// start of the relaxation stage), stopping early once the spectral tail
    /// bound guarantees both distances stay below `stop_below`.
    fn deviations(
        &self,
        rho0: &ComplexMatrix,
        times: &[f64],
        stop_below: Option<f64>,
    ) -> Result<Vec<ComplexMatrix>> {
        let l = self.params.l;
        match &self.engine {
            Engine::Spectral(sd) => {
                let traj = SpectralTrajectory::new(sd, &DensityMatrix::from_evolved(rho0))?;
                let mut out = Vec::with_capacity(times.len());
                for &t in times {
                    out.push(traj.deviation_at(t));
                    if let Some(delta) = stop_below {
                        // |X|_1 <= sqrt(L) |X|_F
                        let b = traj.tail_bound(t);
                        if b <= delta && 0.5 * (l as f64).sqrt() * b <= delta {
                            break;
                        }
                    }
                }
                Ok(out)
            }
            Engine::Numeric(gen) => {
                let mut grid = Vec::with_capacity(times.len() + 1);
                let prepend = times.first().is_none_or(|&t| t > 0.0);
                if prepend {
                    grid.push(0.0);
                }
                grid.extend_from_slice(times);
                let states = integrate_linear(gen, &rho0.vectorize(), &grid, &self.ctrl)?;
                states
                    .into_iter()
                    .skip(usize::from(prepend))
                    .map(|v| {
                        let m = ComplexMatrix::unvectorize(&v, l)?;
                        Ok((&m - self.stationary.matrix()).hermitian_part())
                    })
                    .collect()
            }
        }
    }

    fn deviation_at(&self, rho0: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
        Ok(self.deviations(rho0, &[t], None)?.pop().expect("one sample"))
    }

    /// Runs `proto` (whose relaxation parameters must be this relaxer's) from `rho_i`.
    pub fn run(&self, proto: &Protocol, rho_i: &DensityMatrix, opts: &RunOptions) -> Result<RelaxationRecord> {
        self.sample(proto, rho_i, opts, false)
    }

    /// Trace and Hilbert-Schmidt relaxation times, sampling only as far as needed.
    pub fn relaxation_times(&self, proto: &Protocol, rho_i: &DensityMatrix, opts: &RunOptions) -> Result<(f64, f64)> {
        let r = self.sample(proto, rho_i, opts, true)?;
        Ok((r.t_rel_tr, r.t_rel_hs))
    }

    /// Distance series over the whole grid, without extracting relaxation times.
    pub fn distances(&self, proto: &Protocol, rho_i: &DensityMatrix, opts: &RunOptions) -> Result<DistanceSeries> {
        self.check(proto, rho_i, opts)?;
        self.series(proto, rho_i, opts, false)
    }

    fn check(&self, proto: &Protocol, rho_i: &DensityMatrix, opts: &RunOptions) -> Result<()> {
        proto.validate()?;
        opts.validate()?;
        if proto.relax != self.params {
            return Err(Error::InvalidParams("protocol relaxation parameters differ from the relaxer's".into()));
        }
        if rho_i.dim() != self.params.l {
            return Err(Error::Dimension(format!(
                "initial state has {} sites, chain has {}",
                rho_i.dim(),
                self.params.l
            )));
        }
        Ok(())
    }

    fn prepared(&self, proto: &Protocol, rho_i: &DensityMatrix) -> ComplexMatrix {
        match proto.prep_duration() {
            tau if tau > 0.0 => swap_rotation(rho_i.matrix(), proto.prep_eps1, tau),
            _ => rho_i.matrix().clone(),
        }
    }

    fn series(&self, proto: &Protocol, rho_i: &DensityMatrix, opts: &RunOptions, early: bool) -> Result<DistanceSeries> {
        let grid = opts.grid();
        let tau = proto.prep_duration();
        let eps1 = proto.prep_eps1;
        let rho_e = self.stationary.matrix();
        let rho_tau = self.prepared(proto, rho_i);

        let split = grid.partition_point(|&t| t <= tau && tau > 0.0);
        let mut deviations: Vec<ComplexMatrix> = grid[..split]
            .iter()
            .map(|&t| (&swap_rotation(rho_i.matrix(), eps1, t) - rho_e).hermitian_part())
            .collect();
        let relax_times: Vec<f64> = grid[split..].iter().map(|&t| t - tau).collect();
        let stop = early.then_some(opts.threshold);
        deviations.extend(self.deviations(&rho_tau, &relax_times, stop)?);

        Ok(DistanceSeries {
            times: grid[..deviations.len()].to_vec(),
            d_tr: deviations.iter().map(half_trace_norm).collect::<Result<Vec<_>>>()?,
            d_hs: deviations.iter().map(ComplexMatrix::frobenius_norm).collect(),
        })
    }

    fn sample(&self, proto: &Protocol, rho_i: &DensityMatrix, opts: &RunOptions, early: bool) -> Result<RelaxationRecord> {
        self.check(proto, rho_i, opts)?;
        let DistanceSeries { times, d_tr, d_hs } = self.series(proto, rho_i, opts, early)?;
        let tau = proto.prep_duration();
        let eps1 = proto.prep_eps1;
        let rho_e = self.stationary.matrix();
        let rho_tau = self.prepared(proto, rho_i);

        let deviation_at = |t: f64| -> Result<ComplexMatrix> {
            if t <= tau && tau > 0.0 {
                Ok((&swap_rotation(rho_i.matrix(), eps1, t) - rho_e).hermitian_part())
            } else {
                self.deviation_at(&rho_tau, t - tau)
            }
        };
        let horizon_err = |d: &[f64]| Error::Horizon {
            horizon: opts.horizon,
            final_distance: *d.last().expect("non-empty grid"),
        };
        let t_rel_tr = relaxation_time_with(&times, &d_tr, opts.threshold, opts.mode, |t| {
            half_trace_norm(&deviation_at(t)?)
        })
        .map_err(|_| horizon_err(&d_tr))?;
        let t_rel_hs = relaxation_time_with(&times, &d_hs, opts.threshold, opts.mode, |t| {
            Ok(deviation_at(t)?.frobenius_norm())
        })
        .map_err(|_| horizon_err(&d_hs))?;

        Ok(RelaxationRecord {
            times,
            d_tr,
            d_hs,
            t_rel_tr,
            t_rel_hs,
            threshold: opts.threshold,
            mode: opts.mode,
        })
    }
}

/// Runs one protocol from `rho_i` and records both distances to the
/// stationary state of the relaxation generator on the grid `0, dt, ..., horizon`.
/// The time axis counts the preparation stage.
pub fn run_protocol(proto: &Protocol, rho_i: &DensityMatrix, opts: &RunOptions) -> Result<RelaxationRecord> {
    Relaxer::new(&proto.relax)?.run(proto, rho_i, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub tau: f64,
    pub eps1: f64,
    /// `(t_rel by trace distance, t_rel by Hilbert-Schmidt distance)`.
    pub direct: std::result::Result<(f64, f64), String>,
    pub pontus: std::result::Result<(f64, f64), String>,
}

/// Relaxation times of both protocols from `|1><1|` for every `tau`, with
/// the swap rate `eps1 = pi / (2 tau)`. Rows are computed in parallel and
/// returned in grid order; a failing row records its error and the sweep
/// continues.
pub fn sweep_preparation_time(base: &ChainParams, tau_grid: &[f64], opts: &RunOptions) -> Result<Vec<SweepRow>> {
    if tau_grid.is_empty() {
        return Err(Error::InvalidParams("empty tau grid".into()));
    }
    let relaxer = Relaxer::new(base)?;
    let rho_i = DensityMatrix::first_site(base.l);
    let rows = tau_grid
        .par_iter()
        .map(|&tau| {
            let eps1 = swap_rate(tau);
            let direct = Protocol {
                kind: ProtocolKind::Direct,
                prep_eps1: eps1,
                prep_tau: tau,
                relax: *base,
            };
            let direct = relaxer.relaxation_times(&direct, &rho_i, opts).map_err(|e| e.to_string());
            let pontus = Protocol::pontus(*base, eps1, tau)
                .and_then(|p| relaxer.relaxation_times(&p, &rho_i, opts))
                .map_err(|e| e.to_string());
            SweepRow { tau, eps1, direct, pontus }
        })
        .collect();
    Ok(rows)
}
