//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. A criterion passes only if all of its
//! checks hold and it finishes inside its runtime budget.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use pontus_cli::RunConfig;
use pontus_core::classical::{analytic_eigenvalues, biorthogonal_modes, build_generator, edge_coefficient_ratio, evolve, BirthDeathModel};
use pontus_core::dynamics::{
    propagate_numeric, propagate_spectral, relaxation_time, sweep_preparation_time, trace_distance, Protocol,
    Relaxer, RunOptions, SweepRow, TrelMode,
};
use pontus_core::model::build_liouvillian;
use pontus_core::numerics::{eigvals_general, ComplexMatrix, C64};
use pontus_core::spectral::{decompose, overlap_coefficients, reconstruct, stationary_state};
use pontus_core::{ChainParams, DensityMatrix, Error};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_611;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new() -> Self {
        Self {
            pass: true,
            detail: String::new(),
        }
    }

    /// Records `value <= tol` (or `value >= tol` when `at_least`).
    fn bound(&mut self, label: &str, value: f64, tol: f64) {
        let ok = value <= tol;
        self.note(ok, format!("{label} = {value:.3e} (<= {tol:.0e})"));
    }

    fn note(&mut self, ok: bool, text: String) {
        self.pass &= ok;
        if !self.detail.is_empty() {
            self.detail.push_str("; ");
        }
        if !ok {
            self.detail.push_str("FAILED ");
        }
        self.detail.push_str(&text);
    }

    fn error(e: impl std::fmt::Display) -> Self {
        Self {
            pass: false,
            detail: format!("error: {e}"),
        }
    }
}

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.max_abs_diff(b)
}

fn c1_classical_spectrum() -> Verdict {
    let mut v = Verdict::new();
    let mut worst = 0.0f64;
    for l in 2..=50 {
        for &r in &[0.25, 0.5, 1.0, 2.0, 4.0] {
            let m = BirthDeathModel::new(l, r, 1.0).unwrap();
            let mut num = match eigvals_general(&build_generator(&m)) {
                Ok(x) => x,
                Err(e) => return Verdict::error(e),
            };
            num.sort_by(|a, b| b.re.total_cmp(&a.re));
            for (x, y) in analytic_eigenvalues(&m).iter().zip(&num) {
                worst = worst.max((C64::new(*x, 0.0) - y).norm());
            }
        }
    }
    v.bound("max |lambda_num - lambda_exact| over L=2..50, 5 r values", worst, 1e-10);
    v
}

fn c2_stationary_states() -> Verdict {
    let mut v = Verdict::new();
    let mut worst_a = 0.0f64;
    for &(l, j, jr) in &[(11, 1.0, 1.0), (6, 0.3, 0.7), (2, 2.0, 1.5)] {
        let p = ChainParams::new(l, j, 0.0, jr, jr).unwrap();
        let rho = match decompose(&build_liouvillian(&p)).and_then(|sd| stationary_state(&sd)) {
            Ok(x) => x,
            Err(e) => return Verdict::error(e),
        };
        let want = ComplexMatrix::identity(l).scale(C64::new(1.0 / l as f64, 0.0));
        worst_a = worst_a.max(max_abs_diff(rho.matrix(), &want));
    }
    v.bound("(a) |rho_E - I/L|", worst_a, 1e-10);
    let mut worst_b = 0.0f64;
    for &(l, jr, jl) in &[(11, 1.0, 0.5), (6, 0.5, 1.0), (2, 2.0, 1.0)] {
        let p = ChainParams::new(l, 0.0, 0.0, jr, jl).unwrap();
        let rho = match decompose(&build_liouvillian(&p)).and_then(|sd| stationary_state(&sd)) {
            Ok(x) => x,
            Err(e) => return Verdict::error(e),
        };
        let r: f64 = jr / jl;
        let norm: f64 = (0..l).map(|k| r.powi(k as i32)).sum();
        let pops: Vec<f64> = (0..l).map(|k| r.powi(k as i32) / norm).collect();
        let want = ComplexMatrix::from_real_diagonal(&pops);
        worst_b = worst_b.max(max_abs_diff(rho.matrix(), &want));
    }
    v.bound("(b) |rho_E - N diag(r^(n-1))|", worst_b, 1e-10);
    v
}

fn c3_quantum_classical_reduction() -> Verdict {
    let mut v = Verdict::new();
    let (l, jr, jl) = (11, 1.0, 0.5);
    let p = ChainParams::new(l, 0.0, 0.0, jr, jl).unwrap();
    let m = BirthDeathModel::new(l, jr, jl).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let w: Vec<f64> = (0..l).map(|_| rng.gen::<f64>()).collect();
    let total: f64 = w.iter().sum();
    let p0: Vec<f64> = w.iter().map(|x| x / total).collect();
    let grid: Vec<f64> = (0..=100).map(|k| 0.2 * k as f64).collect();
    let states = match propagate_numeric(&p, &DensityMatrix::from_populations(&p0).unwrap(), &grid) {
        Ok(s) => s,
        Err(e) => return Verdict::error(e),
    };
    let modes = biorthogonal_modes(&m).unwrap();
    let (mut pop, mut coh) = (0.0f64, 0.0f64);
    for (&t, rho) in grid.iter().zip(&states).skip(1) {
        let classical = evolve(&modes, &p0, t).unwrap();
        for i in 0..l {
            for k in 0..l {
                let x = rho.matrix()[(i, k)];
                if i == k {
                    pop = pop.max((x - C64::new(classical[i], 0.0)).norm());
                } else {
                    coh = coh.max(x.norm());
                }
            }
        }
    }
    v.bound("max population deviation at 100 times", pop, 1e-8);
    v.bound("max coherence", coh, 1e-10);
    v
}

fn c4_coefficient_ratio() -> Verdict {
    let mut v = Verdict::new();
    let r = 2.0f64;
    let ratio_at = |l: usize| edge_coefficient_ratio(&biorthogonal_modes(&BirthDeathModel::new(l, r, 1.0).unwrap()).unwrap(), 1);
    let ratio = ratio_at(11);
    let target = r.powi(10);
    let factor = (ratio / target).max(target / ratio);
    v.note(factor <= 1.1, format!("L=11 |c2/c2'| = {ratio:.4} vs {target} (factor {factor:.3}, <= 1.1)"));

    // cross-check against the quantum overlaps at J = eps = 0
    let p = ChainParams::new(11, 0.0, 0.0, r, 1.0).unwrap();
    if let Ok(sd) = decompose(&build_liouvillian(&p)) {
        let c = overlap_coefficients(&sd, &DensityMatrix::first_site(11)).unwrap();
        let c2 = overlap_coefficients(&sd, &DensityMatrix::last_site(11)).unwrap();
        v.note(true, format!("quantum |c2/c2'| = {:.4}", c[1].norm() / c2[1].norm()));
    }

    let ls: Vec<f64> = (8..=14).map(|l| l as f64).collect();
    let ys: Vec<f64> = (8..=14).map(|l| ratio_at(l).ln()).collect();
    let n = ls.len() as f64;
    let (mx, my) = (ls.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let slope = ls.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / ls.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let rel = (slope / r.ln() - 1.0).abs();
    v.note(
        rel <= 0.1,
        format!("log-ratio slope over L=8..14 = {slope:.4} vs ln r = {:.4} (rel {rel:.3}, <= 0.1)", r.ln()),
    );
    v
}

fn c5_mirror_symmetry() -> Verdict {
    let mut v = Verdict::new();
    let p = ChainParams::new(11, 1.0, 0.0, 1.0, 1.0).unwrap();
    let relaxer = Relaxer::new(&p).unwrap();
    let opts = RunOptions::default();
    let proto = Protocol::direct(p);
    let (a, b) = match (
        relaxer.distances(&proto, &DensityMatrix::first_site(11), &opts),
        relaxer.distances(&proto, &DensityMatrix::last_site(11), &opts),
    ) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return Verdict::error(e),
    };
    let diff = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0f64, f64::max);
    v.note(a.times.len() == b.times.len(), format!("{} samples each", a.times.len()));
    v.bound("max |D_tr(1) - D_tr(L)|", diff(&a.d_tr, &b.d_tr), 1e-8);
    v.bound("max |D_HS(1) - D_HS(L)|", diff(&a.d_hs, &b.d_hs), 1e-8);
    v
}

fn c6_skin_asymmetric_relaxation() -> Verdict {
    let mut v = Verdict::new();
    let p = ChainParams::new(11, 1.0, 0.0, 1.0, 0.5).unwrap();
    let relaxer = Relaxer::new(&p).unwrap();
    let opts = RunOptions::default();
    let proto = Protocol::direct(p);
    let (first, last) = match (
        relaxer.run(&proto, &DensityMatrix::first_site(11), &opts),
        relaxer.run(&proto, &DensityMatrix::last_site(11), &opts),
    ) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return Verdict::error(e),
    };
    v.note(
        last.t_rel_tr < first.t_rel_tr,
        format!("t_rel_tr: |L> {:.3} < |1> {:.3}", last.t_rel_tr, first.t_rel_tr),
    );
    v.note(
        last.t_rel_hs < first.t_rel_hs,
        format!("t_rel_hs: |L> {:.3} < |1> {:.3}", last.t_rel_hs, first.t_rel_hs),
    );

    // final decade before the threshold: from D_HS settling below 10 delta to t_rel
    let lambda2 = relaxer.spectral().expect("non-degenerate instance").eigenvalue(1);
    let t_a = relaxation_time(&first.times, &first.d_hs, 10.0 * opts.threshold, TrelMode::Settling).unwrap();
    let (xs, ys): (Vec<f64>, Vec<f64>) = first
        .times
        .iter()
        .zip(&first.d_hs)
        .filter(|(t, _)| **t >= t_a && **t <= first.t_rel_hs)
        .map(|(t, d)| (*t, d.ln()))
        .unzip();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let rel = (slope / lambda2.re - 1.0).abs();
    v.note(
        rel <= 0.05,
        format!(
            "terminal log-slope {slope:.5} on [{t_a:.2}, {:.2}] vs Re(lambda_2) {:.5} (rel {rel:.4}, <= 0.05)",
            first.t_rel_hs, lambda2.re
        ),
    );
    v
}

fn load_fig4() -> RunConfig {
    RunConfig::load(&configs_dir().join("fig4.cfg")).expect("fig4.cfg")
}

fn sweep_rows(cfg: &RunConfig) -> Result<Vec<SweepRow>, Error> {
    sweep_preparation_time(&cfg.chain_params().unwrap(), &cfg.tau_grid().unwrap(), &cfg.run_options())
}

fn unwrap_rows(rows: &[SweepRow]) -> Option<Vec<(f64, (f64, f64), (f64, f64))>> {
    rows.iter()
        .map(|r| Some((r.tau, r.direct.clone().ok()?, r.pontus.clone().ok()?)))
        .collect()
}

fn c7_pontus_crossover() -> Verdict {
    let mut v = Verdict::new();
    let cfg = load_fig4();
    let rows = match sweep_rows(&cfg) {
        Ok(r) => r,
        Err(e) => return Verdict::error(e),
    };
    let Some(rows) = unwrap_rows(&rows) else {
        return Verdict::error("a sweep row failed");
    };
    for (k, name) in [(0usize, "trace"), (1, "HS")] {
        let get = |x: (f64, f64)| if k == 0 { x.0 } else { x.1 };
        let small_ok = rows.iter().filter(|r| r.0 <= 4.0).all(|r| get(r.2) < get(r.1));
        let large_ok = rows.iter().filter(|r| r.0 >= 6.0).all(|r| get(r.2) > get(r.1));
        let crossover = rows.iter().find(|r| get(r.2) > get(r.1)).map_or(f64::NAN, |r| r.0);
        v.note(small_ok, format!("{name}: pontus < direct for all tau <= 4"));
        v.note(large_ok, format!("{name}: pontus > direct for all tau >= 6 (first loss at tau = {crossover})"));
        let d0 = get(rows[0].1);
        let spread = rows.iter().map(|r| (get(r.1) - d0).abs()).fold(0.0f64, f64::max);
        v.bound(&format!("{name}: direct column spread"), spread, 1e-6);
        let monotone = rows.windows(2).all(|w| get(w[1].2) >= get(w[0].2));
        v.note(monotone, format!("{name}: pontus non-decreasing in tau"));
    }
    v.note(true, format!("{} rows", rows.len()));
    v
}

fn c8_symmetric_no_effect() -> Verdict {
    let mut v = Verdict::new();
    let mut cfg = load_fig4();
    cfg.chain.j_l = cfg.chain.j_r;
    let rows = match sweep_rows(&cfg) {
        Ok(r) => r,
        Err(e) => return Verdict::error(e),
    };
    let Some(rows) = unwrap_rows(&rows) else {
        return Verdict::error("a sweep row failed");
    };
    let tr = rows.iter().all(|r| r.2 .0 >= r.1 .0);
    let hs = rows.iter().all(|r| r.2 .1 >= r.1 .1);
    let margin = rows.iter().map(|r| (r.2 .0 - r.1 .0).min(r.2 .1 - r.1 .1)).fold(f64::INFINITY, f64::min);
    v.note(tr && hs, format!("pontus >= direct on all {} rows, both measures (min margin {margin:.4})", rows.len()));
    v
}

fn random_density(rng: &mut ChaCha8Rng, l: usize) -> DensityMatrix {
    let g = ComplexMatrix::from_fn(l, l, |_, _| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
    let m = &g * &g.adjoint();
    let tr = m.trace();
    DensityMatrix::new(m.scale(C64::new(1.0, 0.0) / tr).hermitian_part()).unwrap()
}

fn c9_property_suites() -> Verdict {
    let mut v = Verdict::new();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let grid = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0];
    let (mut trace, mut positivity, mut biortho, mut agree, mut recon) = (0.0f64, f64::INFINITY, 0.0f64, 0.0f64, 0.0f64);
    let (mut instances, mut skipped) = (0, 0);
    for l in 2..=12 {
        for _ in 0..3 {
            let p = ChainParams::new(
                l,
                rng.gen_range(0.2..2.0),
                rng.gen_range(0.0..1.0),
                rng.gen_range(0.2..2.0),
                rng.gen_range(0.1..2.0),
            )
            .unwrap();
            let rho = random_density(&mut rng, l);
            instances += 1;
            let states = match propagate_numeric(&p, &rho, &grid) {
                Ok(s) => s,
                Err(e) => return Verdict::error(e),
            };
            for s in &states {
                trace = trace.max((s.matrix().trace() - C64::new(1.0, 0.0)).norm());
                positivity = positivity.min(s.min_eigenvalue().unwrap());
            }
            let sd = match decompose(&build_liouvillian(&p)) {
                Ok(sd) => sd,
                Err(Error::ExceptionalPoint { .. }) => {
                    skipped += 1;
                    continue;
                }
                Err(e) => return Verdict::error(e),
            };
            let n = sd.len();
            biortho = biortho.max(max_abs_diff(&sd.biorthogonality_matrix(), &ComplexMatrix::identity(n)));
            let c = overlap_coefficients(&sd, &rho).unwrap();
            recon = recon.max(max_abs_diff(&reconstruct(&sd, &c).unwrap(), rho.matrix()));
            for (&t, s) in grid.iter().zip(&states) {
                let spectral = propagate_spectral(&sd, &rho, t).unwrap();
                agree = agree.max(max_abs_diff(spectral.matrix(), s.matrix()));
            }
        }
    }
    v.note(true, format!("{instances} instances, L=2..12, {skipped} without spectral path"));
    v.bound("trace defect", trace, 1e-7);
    v.note(positivity >= -1e-6, format!("min eigenvalue = {positivity:.3e} (>= -1e-6)"));
    v.bound("biorthonormality defect", biortho, 1e-8);
    v.bound("spectral vs numeric", agree, 1e-7);
    v.bound("reconstruction", recon, 1e-8);
    v
}

fn c10_swap_exactness() -> Verdict {
    let mut v = Verdict::new();
    let l = 11;
    for eps1 in [0.1, 1.0, 10.0] {
        let p = ChainParams::preparatory(l, eps1).unwrap();
        let tau = std::f64::consts::FRAC_PI_2 / eps1;
        let out = match propagate_numeric(&p, &DensityMatrix::first_site(l), &[0.0, tau]) {
            Ok(s) => s,
            Err(e) => return Verdict::error(e),
        };
        let d = trace_distance(&out[1], &DensityMatrix::last_site(l)).unwrap();
        v.bound(&format!("eps1={eps1}: D_tr(rho(tau), |L><L|)"), d, 1e-6);
    }
    v
}

type Criterion = (u32, &'static str, u64, fn() -> Verdict);

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let criteria: [Criterion; 10] = [
        (1, "classical spectrum oracle", 10, c1_classical_spectrum),
        (2, "stationary states", 1, c2_stationary_states),
        (3, "quantum-classical reduction", 5, c3_quantum_classical_reduction),
        (4, "coefficient-ratio law r^(L-1)", 5, c4_coefficient_ratio),
        (5, "mirror-symmetry null result", 5, c5_mirror_symmetry),
        (6, "skin-asymmetric relaxation", 10, c6_skin_asymmetric_relaxation),
        (7, "two-step crossover in [4, 6]/J", 60, c7_pontus_crossover),
        (8, "no speed-up without skin effect", 60, c8_symmetric_no_effect),
        (9, "property suites", 30, c9_property_suites),
        (10, "swap preparation exactness", 1, c10_swap_exactness),
    ];
    println!("acceptance: {} criteria", criteria.len());
    let mut failed = Vec::new();
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let verdict = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(budget);
        let pass = verdict.pass && in_time;
        if !pass {
            failed.push(id);
        }
        println!(
            "[{}] C{id:<2} {name:<34} {:>7.2} s / {budget} s{} | {}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            if in_time { "" } else { " OVER BUDGET" },
            verdict.detail
        );
    }
    println!(
        "acceptance: {} passed, {} failed{}",
        10 - failed.len(),
        failed.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!(" ({})", failed.iter().map(|i| format!("C{i}")).collect::<Vec<_>>().join(", "))
        }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
