//! Acceptance suite: one line per criterion, nonzero exit on any failure.
//!
//! Run with `cargo test -p volspill-cli --test acceptance`.

mod common;

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use volspill_cli::{commands, parse_run_config, parse_sim_config, run_pipeline, ConfigFile};
use volspill_core::correlation::{
    agdcc_step_direct, agdcc_step_rearranged, corr_path_loglik, dcc_filter, dcc_loglik, fit_ccc, fit_dcc,
    gdcc_filter, negative_moment, unconditional_corr, MatrixPath, StdResidualPanel,
};
use volspill_core::diagnostics::{
    adf_test, arch_lm, jarque_bera, ljung_box, AdfOptions, ADF_CONSTANT_CRITICAL_1PCT, CHI2_20_CRITICAL_5PCT,
};
use volspill_core::energy::{
    classify_regime, marginal_cost, marginal_cost_variance, switch_price_lower, switch_price_upper, Fuel,
    PlantParams, Regime, SwitchContext,
};
use volspill_core::garch::{fit_garch, GarchParams, GarchSpec};
use volspill_core::sim::{recovery_study, simulate, simulate_stream, Dgp, RecoveryReport};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Correlation paths gathered from every criterion for the validity check.
#[derive(Default)]
struct PathLog {
    paths: Vec<(String, MatrixPath)>,
}

impl PathLog {
    fn add(&mut self, label: impl Into<String>, p: MatrixPath) {
        self.paths.push((label.into(), p));
    }
}

fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn normals(r: &mut ChaCha20Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.sample(StandardNormal)).collect()
}

fn param_index(rep: &RecoveryReport, name: &str) -> usize {
    rep.params.iter().position(|p| p.name == name).expect("parameter present")
}

fn garch_recovery() -> Outcome {
    let start = Instant::now();
    let dgp = Dgp::univariate(GarchSpec::garch11(), GarchParams::garch11(0.05, 0.05, 0.90), 5000, 20_240_101);
    let rep = match recovery_study(&dgp, 50) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let secs = start.elapsed().as_secs_f64();
    let worst = rep.params.iter().map(|p| p.bias.abs()).fold(0.0, f64::max);
    let biases: Vec<String> = rep.params.iter().map(|p| format!("{}={:+.4}", p.name, p.bias)).collect();
    outcome(
        worst < 0.02 && rep.failures == 0 && secs < 60.0,
        format!("bias {} failures={} time={secs:.1}s", biases.join(" "), rep.failures),
    )
}

fn dcc_recovery(log: &mut PathLog) -> Outcome {
    let g = GarchParams::garch11(0.05, 0.05, 0.90);
    let dgp = Dgp::bivariate_dcc([g.clone(), g], 0.02, 0.95, 0.5, 5000, 20_240_102);
    let rep = match recovery_study(&dgp, 50) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let (ia, ib) = (param_index(&rep, "dcc.alpha"), param_index(&rep, "dcc.beta"));
    let ok: Vec<&Vec<f64>> = rep.estimates.iter().flatten().collect();
    let typical = ok.iter().filter(|e| e[ia] <= 0.04 && e[ia] + e[ib] > 0.80).count();
    let share = typical as f64 / rep.replications as f64;
    let (ba, bb) = (rep.params[ia].bias, rep.params[ib].bias);

    // a few refits to feed the path-validity check
    for stream in 1..=5 {
        let sim = simulate_stream(&dgp, stream).expect("valid dgp");
        log.add(format!("dcc truth #{stream}"), sim.r_path.clone());
        let fits: Vec<_> = (0..2)
            .map(|j| fit_garch(&sim.returns.column(j), GarchSpec::garch11()).expect("fit"))
            .collect();
        let panel = StdResidualPanel::from_fits(sim.returns.dates.clone(), sim.returns.assets.clone(), &[&fits[0], &fits[1]])
            .expect("panel");
        log.add(format!("dcc refit #{stream}"), fit_dcc(&panel, 1, 1).expect("dcc").r_path);
    }
    outcome(
        ba.abs() < 0.01 && bb.abs() < 0.03 && share >= 0.90 && rep.failures == 0,
        format!(
            "bias alpha={ba:+.4} beta={bb:+.4} typical={:.0}% failures={}",
            100.0 * share,
            rep.failures
        ),
    )
}

fn random_panel(r: &mut ChaCha20Rng, t: usize, k: usize, rho: f64) -> StdResidualPanel {
    let mut v = DMatrix::zeros(t, k);
    for s in 0..t {
        let common: f64 = r.sample(StandardNormal);
        for j in 0..k {
            let e: f64 = r.sample(StandardNormal);
            v[(s, j)] = rho.sqrt() * common + (1.0 - rho).sqrt() * e;
        }
    }
    let dates = volspill_core::sim::business_days(t);
    StdResidualPanel::new(dates, (0..k).map(|j| format!("s{j}")).collect(), v).expect("panel")
}

fn nesting(log: &mut PathLog) -> Outcome {
    let mut r = rng(3);
    let panel = random_panel(&mut r, 1500, 3, 0.4);
    let qbar = unconditional_corr(&panel).expect("corr");

    // (a) DCC at alpha = beta = 0 against CCC
    let (_, r0) = dcc_filter(&panel, &[0.0], &[0.0], &qbar).expect("filter");
    let ccc = fit_ccc(&panel).expect("ccc");
    let da = (corr_path_loglik(&panel, &r0).expect("ll") - ccc.loglik).abs();
    log.add("nesting dcc(0,0)", r0);

    // (b) equal loadings against the scalar recursion
    let (alpha, beta) = (0.04, 0.93);
    let (q_dcc, r_dcc) = dcc_filter(&panel, &[alpha], &[beta], &qbar).expect("filter");
    let a = vec![alpha.sqrt(); 3];
    let b = vec![beta.sqrt(); 3];
    let nbar = negative_moment(&panel);
    let (q_g, r_g) = gdcc_filter(&panel, &a, &b, &[], &qbar, &nbar).expect("gdcc");
    let db = q_dcc.max_abs_diff(&q_g);
    log.add("nesting dcc", r_dcc);

    // (c) zero asymmetry against the symmetric filter
    let a2 = [0.15, 0.2, 0.25];
    let b2 = [0.96, 0.95, 0.94];
    let (q_sym, r_sym) = gdcc_filter(&panel, &a2, &b2, &[], &qbar, &nbar).expect("gdcc");
    let (q_zero, _) = gdcc_filter(&panel, &a2, &b2, &[0.0; 3], &qbar, &nbar).expect("agdcc");
    let dc = q_sym.max_abs_diff(&q_zero);
    log.add("nesting gdcc", r_sym);
    log.add("nesting gdcc equal loadings", r_g);

    // (d) rearranged step against the direct matrix form
    let mut dd: f64 = 0.0;
    for _ in 0..100 {
        let k = r.random_range(2..6);
        let x = normals(&mut r, 4 * k * k);
        let m = DMatrix::from_fn(2 * k, k, |i, j| x[i * k + j]);
        let qbar = {
            let s = m.transpose() * &m / (2 * k) as f64 + DMatrix::identity(k, k) * 0.5;
            volspill_core::linalg::to_correlation(&s)
        };
        let y = DMatrix::from_fn(2 * k, k, |i, j| x[2 * k * k + i * k + j].min(0.0));
        let nbar = y.transpose() * &y / (2 * k) as f64;
        let qp = qbar.clone() * 1.1 - DMatrix::identity(k, k) * 0.05;
        let xi = DVector::from_vec(normals(&mut r, k));
        let a: Vec<f64> = (0..k).map(|_| r.random_range(0.0..0.4)).collect();
        let b: Vec<f64> = (0..k).map(|_| r.random_range(0.5..0.95)).collect();
        let g: Vec<f64> = (0..k).map(|_| r.random_range(-0.3..0.3)).collect();
        let d1 = agdcc_step_direct(&qp, &xi, &a, &b, &g, &qbar, &nbar);
        let d2 = agdcc_step_rearranged(&qp, &xi, &a, &b, &g, &qbar, &nbar);
        dd = dd.max((d1 - d2).amax());
    }
    outcome(
        da <= 1e-6 && db <= 1e-8 && dc == 0.0 && dd <= 1e-12,
        format!("(a) {da:.1e} (b) {db:.1e} (c) {dc:.1e} (d) {dd:.1e}"),
    )
}

fn path_validity(log: &PathLog) -> Outcome {
    let mut worst_eig = f64::INFINITY;
    let mut worst_diag: f64 = 0.0;
    let mut worst_rho: f64 = 0.0;
    let mut periods = 0;
    let mut rejected = Vec::new();
    for (label, p) in &log.paths {
        if p.check_correlation(1e-10).is_err() {
            rejected.push(label.as_str());
        }
        let k = p.dim();
        for t in 0..p.len() {
            let m = p.matrix(t);
            for i in 0..k {
                worst_diag = worst_diag.max((m[(i, i)] - 1.0).abs());
                for j in 0..k {
                    worst_rho = worst_rho.max(m[(i, j)].abs());
                }
            }
            worst_eig = worst_eig.min(m.symmetric_eigenvalues().min());
            periods += 1;
        }
    }
    outcome(
        worst_rho <= 1.0 && worst_diag <= 1e-12 && worst_eig >= -1e-10 && periods > 0 && rejected.is_empty(),
        format!(
            "{} paths, {periods} matrices, max|rho|={worst_rho:.6} diag err={worst_diag:.1e} min eig={worst_eig:.3e} rejected={rejected:?}",
            log.paths.len()
        ),
    )
}

/// Scalar DCC(1,1) for two series written out element by element.
fn brute_force_dcc(x: &[[f64; 2]], alpha: f64, beta: f64, qbar: [[f64; 2]; 2], sd: &[[f64; 2]]) -> (Vec<f64>, f64, f64) {
    let mut q = qbar;
    let mut rho = Vec::new();
    let mut corr_ll = 0.0;
    let mut full_ll = 0.0;
    let ln2pi = (2.0 * std::f64::consts::PI).ln();
    for t in 0..x.len() {
        if t > 0 {
            let p = x[t - 1];
            let mut next = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    next[i][j] = (1.0 - alpha - beta) * qbar[i][j] + alpha * p[i] * p[j] + beta * q[i][j];
                }
            }
            q = next;
        }
        let r = q[0][1] / (q[0][0] * q[1][1]).sqrt();
        rho.push(r);
        let det = 1.0 - r * r;
        let quad = (x[t][0] * x[t][0] - 2.0 * r * x[t][0] * x[t][1] + x[t][1] * x[t][1]) / det;
        corr_ll += -0.5 * (2.0 * ln2pi + det.ln() + quad);
        full_ll += -0.5 * (2.0 * ln2pi + 2.0 * (sd[t][0].ln() + sd[t][1].ln()) + det.ln() + quad);
    }
    (rho, corr_ll, full_ll)
}

fn brute_force(log: &mut PathLog) -> Outcome {
    let mut r = rng(5);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let t = 10;
        let x: Vec<[f64; 2]> = (0..t).map(|_| [r.sample(StandardNormal), r.sample(StandardNormal)]).collect();
        let sd: Vec<[f64; 2]> = (0..t).map(|_| [r.random_range(0.5..2.0), r.random_range(0.5..2.0)]).collect();
        let alpha = r.random_range(0.0..0.3);
        let beta = r.random_range(0.0..(0.99 - alpha));
        let rho0 = r.random_range(-0.8..0.8);
        let qbar = [[1.0, rho0], [rho0, 1.0]];

        let (rho, corr_ll, full_ll) = brute_force_dcc(&x, alpha, beta, qbar, &sd);

        let values = DMatrix::from_fn(t, 2, |s, j| x[s][j]);
        let panel = StdResidualPanel::new(volspill_core::sim::business_days(t), vec!["a".into(), "b".into()], values.clone())
            .expect("panel");
        let qm = DMatrix::from_row_slice(2, 2, &[1.0, rho0, rho0, 1.0]);
        let (_, rp) = dcc_filter(&panel, &[alpha], &[beta], &qm).expect("filter");
        let d = DMatrix::from_fn(t, 2, |s, j| sd[s][j]);
        let lib_corr = corr_path_loglik(&panel, &rp).expect("ll");
        let lib_full = dcc_loglik(&values, &rp, &d).expect("ll");
        for (s, v) in rho.iter().enumerate() {
            worst = worst.max((rp.get(s, 0, 1) - v).abs());
        }
        worst = worst.max((lib_corr - corr_ll).abs()).max((lib_full - full_ll).abs());
        log.add("brute force", rp);
    }
    outcome(worst <= 1e-10, format!("max deviation {worst:.2e} over 10 instances"))
}

fn diagnostics_calibration() -> Outcome {
    let mut r = rng(6);
    let reps = 1000;
    let (mut jb, mut lb, mut lm) = (0, 0, 0);
    for _ in 0..reps {
        let x = normals(&mut r, 2000);
        jb += jarque_bera(&x).expect("jb").rejects(0.05) as usize;
        lb += ljung_box(&x, 20, false).expect("lb").rejects(0.05) as usize;
        lm += arch_lm(&x, 20).expect("lm").rejects(0.05) as usize;
    }
    let size = |n: usize| n as f64 / reps as f64;
    let within = |n: usize| (size(n) - 0.05).abs() <= 0.02;

    let (mut wn, mut rw) = (0, 0);
    for _ in 0..500 {
        let x = normals(&mut r, 2000);
        wn += adf_test(&x, AdfOptions::default()).expect("adf").rejects(0.01) as usize;
        let walk: Vec<f64> = x
            .iter()
            .scan(0.0, |s, v| {
                *s += v;
                Some(*s)
            })
            .collect();
        rw += (!adf_test(&walk, AdfOptions::default()).expect("adf").rejects(0.05)) as usize;
    }
    let constants = CHI2_20_CRITICAL_5PCT == 31.41 && ADF_CONSTANT_CRITICAL_1PCT == -3.44;
    outcome(
        within(jb) && within(lb) && within(lm) && wn >= 475 && rw >= 450 && constants,
        format!(
            "size JB={:.1}% LB={:.1}% ARCH={:.1}% ADF white-noise reject={:.1}% random-walk accept={:.1}% constants={}",
            100.0 * size(jb),
            100.0 * size(lb),
            100.0 * size(lm),
            wn as f64 / 5.0,
            rw as f64 / 5.0,
            constants
        ),
    )
}

fn gjr_asymmetry() -> Outcome {
    let dgp = Dgp::univariate(GarchSpec::gjr111(), GarchParams::gjr111(0.05, 0.03, 0.10, 0.88), 10_000, 20_240_107);
    use rayon::prelude::*;
    let results: Vec<Result<(f64, f64, f64), String>> = (1..=50u64)
        .into_par_iter()
        .map(|s| {
            let sim = simulate_stream(&dgp, s).map_err(|e| e.to_string())?;
            let e = sim.returns.column(0);
            let gjr = fit_garch(&e, GarchSpec::gjr111()).map_err(|e| e.to_string())?;
            let garch = fit_garch(&e, GarchSpec::garch11()).map_err(|e| e.to_string())?;
            Ok((gjr.params.gamma[0], gjr.loglik, garch.loglik))
        })
        .collect();
    let failures = results.iter().filter(|r| r.is_err()).count();
    let ok: Vec<_> = results.into_iter().flatten().collect();
    let positive = ok.iter().filter(|(g, _, _)| *g > 0.0).count();
    let min_gap = ok.iter().map(|(_, a, b)| a - b).fold(f64::INFINITY, f64::min);
    outcome(
        failures == 0 && positive >= 48 && min_gap >= -1e-6,
        format!("gamma>0 in {positive}/50, min LL(GJR)-LL(GARCH)={min_gap:.3} failures={failures}"),
    )
}

fn random_context(r: &mut ChaCha20Rng) -> SwitchContext {
    let plant = |r: &mut ChaCha20Rng, fuel, lo: f64, hi: f64, ef: f64| {
        PlantParams::new(fuel, r.random_range(lo..hi), ef * r.random_range(0.9..1.1)).expect("plant")
    };
    let ce = plant(r, Fuel::Coal, 0.38, 0.47, 95.0);
    let ci = PlantParams::new(Fuel::Coal, ce.efficiency * r.random_range(0.7..1.0), ce.emission_factor).expect("plant");
    let ge = plant(r, Fuel::Gas, 0.50, 0.60, 56.0);
    let gi = PlantParams::new(Fuel::Gas, ge.efficiency * r.random_range(0.6..1.0), ge.emission_factor).expect("plant");
    SwitchContext {
        coal_efficient: ce,
        coal_inefficient: ci,
        gas_efficient: ge,
        gas_inefficient: gi,
        fc_coal: r.random_range(1.0..4.0),
        fc_gas: r.random_range(3.0..12.0),
        sigma_fc_coal: r.random_range(0.1..1.0),
        sigma_fc_gas: r.random_range(0.1..2.0),
        sigma_ec: r.random_range(0.001..0.01),
        rho_coal_ec: r.random_range(-0.9..0.9),
        rho_gas_ec: r.random_range(-0.9..0.9),
    }
}

fn switch_indifference() -> Outcome {
    let mut r = rng(8);
    let mut worst: f64 = 0.0;
    let mut segments_ok = true;
    let mut max_segments = 0;
    for _ in 0..100 {
        let ctx = random_context(&mut r);
        ctx.validate().expect("valid context");
        let (Ok(up), Ok(lo)) = (switch_price_upper(&ctx), switch_price_lower(&ctx)) else {
            segments_ok = false;
            continue;
        };
        let gap_u = marginal_cost(&ctx.coal_efficient, ctx.fc_coal, up) - marginal_cost(&ctx.gas_inefficient, ctx.fc_gas, up);
        let gap_l = marginal_cost(&ctx.coal_inefficient, ctx.fc_coal, lo) - marginal_cost(&ctx.gas_efficient, ctx.fc_gas, lo);
        worst = worst.max(gap_u.abs()).max(gap_l.abs());

        let (a, b) = (lo.min(up), lo.max(up));
        let span = (b - a).max(1e-3);
        let sweep: Vec<Regime> = (0..=2000)
            .map(|n| a - span + 3.0 * span * n as f64 / 2000.0)
            .map(|p| classify_regime(p, &ctx).expect("regime"))
            .collect();
        let segments = 1 + sweep.windows(2).filter(|w| w[0] != w[1]).count();
        max_segments = max_segments.max(segments);
        segments_ok &= segments <= 3;
    }
    outcome(
        worst <= 1e-10 && segments_ok,
        format!("max |MC gap| at switch prices {worst:.2e}, max segments {max_segments}"),
    )
}

fn cost_variance() -> Outcome {
    let mut r = rng(9);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let fuel = if r.random_bool(0.5) { Fuel::Coal } else { Fuel::Gas };
        let plant = PlantParams::new(fuel, r.random_range(0.3..0.6), r.random_range(40.0..100.0)).expect("plant");
        let (s_fc, s_ec, rho) = (r.random_range(0.2..2.0), r.random_range(0.002..0.02), r.random_range(-0.95..0.95));
        let (fc0, ec0) = (r.random_range(2.0..10.0), r.random_range(0.005..0.03));
        let n = 1_000_000;
        let (mut sum, mut sum2) = (0.0, 0.0);
        for _ in 0..n {
            let z1: f64 = r.sample(StandardNormal);
            let z2: f64 = r.sample(StandardNormal);
            let fc = fc0 + s_fc * z1;
            let ec = ec0 + s_ec * (rho * z1 + (1.0 - rho * rho).sqrt() * z2);
            let mc = marginal_cost(&plant, fc, ec);
            sum += mc;
            sum2 += mc * mc;
        }
        let mean = sum / n as f64;
        let mc_var = (sum2 / n as f64 - mean * mean) * n as f64 / (n - 1) as f64;
        let formula = marginal_cost_variance(&plant, s_fc, s_ec, rho);
        worst = worst.max((mc_var / formula - 1.0).abs());
    }
    outcome(worst < 0.01, format!("max relative error {:.3}%", 100.0 * worst))
}

fn end_to_end_determinism(log: &mut PathLog) -> Outcome {
    let dir = tempfile::tempdir().expect("tempdir");
    common::write_prices(&dir.path().join("prices.csv"), &["ase", "stoxx", "eua"], 1000, 10);
    let cfg_path = common::write_config(
        dir.path(),
        "[input]\npath = prices.csv\n[returns]\nscale = 100\n[mean]\nmax_p = 2\nmax_q = 1\n\
         [correlation]\nmodel = dcc\n[windows]\nfirst = 2000-06-01..2001-06-29\n[output]\ndir = out\nseed = 10\n",
    );
    let snapshot = || -> Result<Vec<(String, Vec<u8>)>, String> {
        let cfg = parse_run_config(&ConfigFile::load(&cfg_path).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        run_pipeline(&cfg).map_err(|e| e.to_string())?;
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir.path().join("out"))
            .map_err(|e| e.to_string())?
            .map(|e| {
                let e = e.expect("entry");
                (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).expect("read"))
            })
            .collect();
        files.sort();
        Ok(files)
    };
    let (first, second) = match (snapshot(), snapshot()) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return outcome(false, e),
    };
    let identical = first == second;

    let sim_cfg = parse_sim_config(
        &ConfigFile::from_bytes(
            b"[dgp]\nt = 2000\nseed = 10\ncorrelation = dcc\n\
              [series.a]\nomega = 0.05\nalpha = 0.05\nbeta = 0.9\n\
              [series.b]\nomega = 0.05\nalpha = 0.05\nbeta = 0.9\n\
              [correlation]\nrho = 0.5\nalpha = 0.02\nbeta = 0.95\n",
            dir.path().to_path_buf(),
        )
        .expect("sim config"),
    )
    .expect("sim config");
    let sim_snapshot = |name: &str| -> Vec<(String, Vec<u8>)> {
        let out = dir.path().join(name);
        let mut files: Vec<String> = commands::sim(&sim_cfg, &out).expect("sim");
        files.sort();
        files.into_iter().map(|f| (f.clone(), std::fs::read(out.join(&f)).expect("read"))).collect()
    };
    let sim_identical = sim_snapshot("sim_a") == sim_snapshot("sim_b");
    let sim = simulate(&sim_cfg.dgp).expect("sim");
    log.add("simulation", sim.r_path);

    // correlation paths written by the pipeline
    if let Some((_, bytes)) = first.iter().find(|(n, _)| n == "rho_paths.csv") {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(bytes.as_slice());
        let mut by_pair: std::collections::BTreeMap<(String, String), Vec<f64>> = Default::default();
        for rec in rdr.records().flatten() {
            by_pair
                .entry((rec[1].to_string(), rec[2].to_string()))
                .or_default()
                .push(rec[3].parse().unwrap_or(f64::NAN));
        }
        for ((a, b), rho) in by_pair {
            let data: Vec<f64> = rho.iter().flat_map(|r| [1.0, *r, *r, 1.0]).collect();
            log.add(format!("pipeline {a}:{b}"), MatrixPath::from_flat(2, data).expect("path"));
        }
    }
    outcome(
        identical && sim_identical && first.len() >= 7,
        format!("{} files byte-identical={identical}, simulated files identical={sim_identical}", first.len()),
    )
}

fn main() {
    let mut log = PathLog::default();
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let mut run = |name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        println!(
            "[{}] {name}: {} ({:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
        results.push((name, o));
    };
    run("criterion 1, GARCH(1,1) simulation recovery", &mut garch_recovery);
    run("criterion 2, scalar DCC simulation recovery", &mut || dcc_recovery(&mut log));
    run("criterion 3, nesting and reduction identities", &mut || nesting(&mut log));
    run("criterion 5, brute-force DCC oracle", &mut || brute_force(&mut log));
    run("criterion 6, diagnostics calibration", &mut diagnostics_calibration);
    run("criterion 7, GJR asymmetry", &mut gjr_asymmetry);
    run("criterion 8, switch-price indifference", &mut switch_indifference);
    run("criterion 9, marginal-cost variance", &mut cost_variance);
    run("criterion 10, end-to-end determinism", &mut || end_to_end_determinism(&mut log));
    run("criterion 4, correlation-path validity", &mut || path_validity(&log));

    let failed: Vec<&str> = results.iter().filter(|(_, o)| !o.pass).map(|(n, _)| *n).collect();
    println!("acceptance: {}/{} criteria passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
