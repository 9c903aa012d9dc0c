//! The four experiment commands. Each returns its tables plus any tolerance
//! violations; writing files is left to the caller.

use anyhow::{bail, Context, Result};
use pontus_core::classical::{
    analytic_eigenvalues, biorthogonal_modes, build_generator, edge_coefficient_ratio, evolve, stationary_distribution,
    BirthDeathModel,
};
use pontus_core::dynamics::{propagate_numeric, sweep_preparation_time, Protocol, ProtocolKind, Relaxer};
use pontus_core::model::build_liouvillian;
use pontus_core::numerics::{eigvals_general, C64};
use pontus_core::spectral::{decompose, edge_weight, stationary_state, Side};
use pontus_core::{ChainParams, DensityMatrix, Error};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{InitialState, RunConfig};
use crate::table::Table;

#[derive(Debug, Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    /// Human-readable descriptions of failed tolerance checks.
    pub violations: Vec<String>,
}

fn initial_state(l: usize, s: InitialState) -> DensityMatrix {
    match s {
        InitialState::First => DensityMatrix::first_site(l),
        InitialState::Last => DensityMatrix::last_site(l),
    }
}

fn kind_label(k: ProtocolKind) -> &'static str {
    match k {
        ProtocolKind::Direct => "direct",
        ProtocolKind::Pontus => "pontus",
    }
}

/// Eigenvalues, `|rho_E|`, `|R_2|`, `|L_2|` and edge weights.
pub fn spectrum(cfg: &RunConfig) -> Result<Outcome> {
    let p = cfg.chain_params()?;
    let sd = decompose(&build_liouvillian(&p)).context("spectral decomposition failed")?;
    let rho_e = stationary_state(&sd)?;

    let mut eig = Table::new("eigenvalues", &["alpha", "re", "im"]);
    for (a, v) in sd.eigenvalues().iter().enumerate() {
        eig.push(vec![(a + 1).into(), v.re.into(), v.im.into()]);
    }

    let (r2, l2) = (sd.right_mode(1), sd.left_mode(1));
    let mut modes = Table::new("modes", &["n", "m", "abs_rho_e", "abs_r2", "abs_l2"]);
    for n in 0..p.l {
        for m in 0..p.l {
            modes.push(vec![
                (n + 1).into(),
                (m + 1).into(),
                rho_e.matrix()[(n, m)].norm().into(),
                r2[(n, m)].norm().into(),
                l2[(n, m)].norm().into(),
            ]);
        }
    }

    let mut summary = Table::new("spectrum_summary", &["quantity", "value"]);
    let rows: [(&str, f64); 7] = [
        ("generator_norm", sd.generator_norm()),
        ("gap", sd.gap()),
        ("degenerate_clusters", sd.degenerate_clusters() as f64),
        ("edge_weight_r2_left", edge_weight(&r2, Side::Left)?),
        ("edge_weight_r2_right", edge_weight(&r2, Side::Right)?),
        ("edge_weight_l2_left", edge_weight(&l2, Side::Left)?),
        ("edge_weight_l2_right", edge_weight(&l2, Side::Right)?),
    ];
    for (k, v) in rows {
        summary.push(vec![k.into(), v.into()]);
    }

    Ok(Outcome {
        tables: vec![eig, modes, summary],
        violations: Vec::new(),
    })
}

fn build_protocol(cfg: &RunConfig, p: ChainParams, kind: ProtocolKind) -> Result<Protocol> {
    Ok(match kind {
        ProtocolKind::Direct => Protocol::direct(p),
        ProtocolKind::Pontus => {
            let (tau, eps1) = cfg.preparation()?;
            Protocol::pontus(p, eps1, tau)?
        }
    })
}

/// Distance series for every requested (protocol, initial state) pair.
pub fn relax(cfg: &RunConfig) -> Result<Outcome> {
    let p = cfg.chain_params()?;
    let opts = cfg.run_options();
    let relaxer = Relaxer::new(&p)?;
    let mut summary = Table::new(
        "relax_summary",
        &["series", "protocol", "initial_state", "tau", "eps1", "t_rel_tr", "t_rel_hs", "status"],
    );
    let mut tables = Vec::new();
    for &kind in &cfg.protocol.kinds {
        let proto = build_protocol(cfg, p, kind)?;
        for &state in &cfg.protocol.initial_states {
            let name = format!("relax_{}_{}", kind_label(kind), state.label());
            let rho = initial_state(p.l, state);
            let (series, t_rel, status) = match relaxer.run(&proto, &rho, &opts) {
                Ok(rec) => (
                    (rec.times, rec.d_tr, rec.d_hs),
                    (rec.t_rel_tr, rec.t_rel_hs),
                    "ok".to_owned(),
                ),
                Err(e @ Error::Horizon { .. }) => {
                    let s = relaxer.distances(&proto, &rho, &opts)?;
                    ((s.times, s.d_tr, s.d_hs), (f64::NAN, f64::NAN), e.to_string())
                }
                Err(e) => return Err(e).with_context(|| format!("series {name}")),
            };
            let mut t = Table::new(name.clone(), &["t", "d_tr", "d_hs"]);
            for ((&time, &a), &b) in series.0.iter().zip(&series.1).zip(&series.2) {
                t.push(vec![time.into(), a.into(), b.into()]);
            }
            tables.push(t);
            summary.push(vec![
                name.into(),
                kind_label(kind).into(),
                state.label().into(),
                proto.prep_duration().into(),
                match kind {
                    ProtocolKind::Direct => 0.0,
                    ProtocolKind::Pontus => proto.prep_eps1,
                }
                .into(),
                t_rel.0.into(),
                t_rel.1.into(),
                status.into(),
            ]);
        }
    }
    tables.push(summary);
    Ok(Outcome {
        tables,
        violations: Vec::new(),
    })
}

/// Relaxation times of both protocols from `|1><1|` across the `tau` grid.
pub fn sweep(cfg: &RunConfig) -> Result<Outcome> {
    let p = cfg.chain_params()?;
    let grid = cfg.tau_grid()?;
    let rows = sweep_preparation_time(&p, &grid, &cfg.run_options())?;
    let mut t = Table::new(
        "sweep",
        &["tau", "eps1", "t_rel_direct_tr", "t_rel_pontus_tr", "t_rel_direct_hs", "t_rel_pontus_hs", "status"],
    );
    for r in rows {
        let (d, dstat) = match &r.direct {
            Ok(v) => (*v, None),
            Err(e) => ((f64::NAN, f64::NAN), Some(format!("direct: {e}"))),
        };
        let (q, pstat) = match &r.pontus {
            Ok(v) => (*v, None),
            Err(e) => ((f64::NAN, f64::NAN), Some(format!("pontus: {e}"))),
        };
        let status = match (dstat, pstat) {
            (None, None) => "ok".to_owned(),
            (a, b) => a.into_iter().chain(b).collect::<Vec<_>>().join("; "),
        };
        t.push(vec![
            r.tau.into(),
            r.eps1.into(),
            d.0.into(),
            q.0.into(),
            d.1.into(),
            q.1.into(),
            status.into(),
        ]);
    }
    Ok(Outcome {
        tables: vec![t],
        violations: Vec::new(),
    })
}

pub const EIGENVALUE_TOL: f64 = 1e-10;
pub const KERNEL_TOL: f64 = 1e-12;
pub const STATIONARY_TOL: f64 = 1e-10;
pub const POPULATION_TOL: f64 = 1e-8;
pub const COHERENCE_TOL: f64 = 1e-10;

struct Checks {
    table: Table,
    violations: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Self {
            table: Table::new("oracle_checks", &["check", "value", "tolerance", "pass"]),
            violations: Vec::new(),
        }
    }

    fn record(&mut self, name: String, value: f64, tol: f64) {
        let pass = value <= tol;
        if !pass {
            self.violations.push(format!("{name}: {value:e} > {tol:e}"));
        }
        self.table.push(vec![
            name.into(),
            value.into(),
            tol.into(),
            if pass { "true" } else { "false" }.into(),
        ]);
    }
}

/// Classical birth-death limit against the quantum code.
pub fn oracle(cfg: &RunConfig) -> Result<Outcome> {
    let p = cfg.chain_params()?;
    if (p.j != 0.0 || p.eps != 0.0) && !cfg.oracle.force {
        bail!("oracle needs J = eps = 0 (set oracle.force = true to zero them)");
    }
    if p.j_l <= 0.0 || p.j_r <= 0.0 {
        bail!("oracle needs J_R > 0 and J_L > 0");
    }
    let q = ChainParams { j: 0.0, eps: 0.0, ..p };
    let m = BirthDeathModel::new(q.l, q.j_r, q.j_l)?;
    let r = m.r();
    let mut checks = Checks::new();

    // spectrum and kernel over the r sweep
    let mut spectra = Table::new("oracle_spectrum", &["r", "alpha", "analytic", "numeric", "abs_error"]);
    for &rv in &cfg.oracle.r_values {
        let mr = BirthDeathModel::new(q.l, rv, 1.0)?;
        let analytic = analytic_eigenvalues(&mr);
        let mut numeric: Vec<f64> = eigvals_general(&build_generator(&mr))?.iter().map(|c| c.re).collect();
        numeric.sort_by(|a, b| b.total_cmp(a));
        let mut worst = 0.0f64;
        for (a, (x, y)) in analytic.iter().zip(&numeric).enumerate() {
            let e = (x - y).abs();
            worst = worst.max(e);
            spectra.push(vec![rv.into(), (a + 1).into(), (*x).into(), (*y).into(), e.into()]);
        }
        checks.record(format!("eigenvalue_residual_L{}_r{rv}", q.l), worst, EIGENVALUE_TOL);

        let pe: Vec<C64> = stationary_distribution(&mr).iter().map(|&x| C64::new(x, 0.0)).collect();
        let kernel = build_generator(&mr).matvec(&pe).iter().fold(0.0f64, |s, c| s.max(c.norm()));
        checks.record(format!("stationary_kernel_residual_L{}_r{rv}", q.l), kernel, KERNEL_TOL);
    }

    // quantum stationary state against the classical distribution
    let sd = decompose(&build_liouvillian(&q))?;
    let rho_e = stationary_state(&sd)?;
    let pe = stationary_distribution(&m);
    let diff = (0..q.l)
        .flat_map(|n| (0..q.l).map(move |k| (n, k)))
        .map(|(n, k)| {
            let want = if n == k { pe[n] } else { 0.0 };
            (rho_e.matrix()[(n, k)] - C64::new(want, 0.0)).norm()
        })
        .fold(0.0f64, f64::max);
    checks.record("stationary_quantum_vs_classical".into(), diff, STATIONARY_TOL);

    // edge-coefficient ratios against r^{L-1}
    let mut ratios = Table::new(
        "oracle_ratios",
        &["l", "alpha", "ratio", "r_pow_l_minus_1", "ratio_over_r_pow_l_minus_1", "r_pow_half_l"],
    );
    for &l in &cfg.oracle.ratio_sizes {
        let modes = biorthogonal_modes(&BirthDeathModel::new(l, q.j_r, q.j_l)?)?;
        for alpha in 1..l.min(3) {
            let ratio = edge_coefficient_ratio(&modes, alpha);
            let law = r.powi(l as i32 - 1);
            ratios.push(vec![
                l.into(),
                (alpha + 1).into(),
                ratio.into(),
                law.into(),
                (ratio / law).into(),
                r.powf(l as f64 / 2.0).into(),
            ]);
        }
    }

    // quantum trajectory against the classical master equation
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let weights: Vec<f64> = (0..q.l).map(|_| rng.gen::<f64>()).collect();
    let total: f64 = weights.iter().sum();
    let p0: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let rho0 = DensityMatrix::from_populations(&p0)?;
    let n = cfg.oracle.samples;
    // the integration starts at the first grid point
    let grid: Vec<f64> = (0..=n).map(|k| cfg.oracle.t_max * k as f64 / n as f64).collect();
    let states = propagate_numeric(&q, &rho0, &grid)?;
    let modes = biorthogonal_modes(&m)?;
    let mut traj = Table::new("oracle_trajectory", &["t", "max_population_error", "max_coherence"]);
    let (mut worst_pop, mut worst_coh) = (0.0f64, 0.0f64);
    for (&t, rho) in grid.iter().zip(&states).skip(1) {
        let classical = evolve(&modes, &p0, t)?;
        let mut pop = 0.0f64;
        let mut coh = 0.0f64;
        for i in 0..q.l {
            for k in 0..q.l {
                let v = rho.matrix()[(i, k)];
                if i == k {
                    pop = pop.max((v.re - classical[i]).abs().max(v.im.abs()));
                } else {
                    coh = coh.max(v.norm());
                }
            }
        }
        worst_pop = worst_pop.max(pop);
        worst_coh = worst_coh.max(coh);
        traj.push(vec![t.into(), pop.into(), coh.into()]);
    }
    checks.record("trajectory_population_error".into(), worst_pop, POPULATION_TOL);
    checks.record("trajectory_max_coherence".into(), worst_coh, COHERENCE_TOL);

    let mut tables = vec![spectra, ratios, traj];
    let violations = checks.violations;
    tables.push(checks.table);
    Ok(Outcome { tables, violations })
}
