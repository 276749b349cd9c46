use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use qfeedback::dynamics::{
    beat_spectrum, integrate_with_options, max_step, perturb_stationary_with, BeatOptions,
    EmitterCorrection, IntegrateOptions, WaveFunction,
};
use qfeedback::model::{
    build_grid, build_params, default_grid_size, max_spacing, min_half_bandwidth,
};
use qfeedback::spectrum::{
    critical_r_with, default_scan_points, find_roots, log2_grid, product_table, sweep_with,
    CharEqn, PRODUCT_LAW_TOLERANCE,
};
use qfeedback::stability::{build_jacobian, eigenmodes, general_eigenvalues, visible_frequencies};
use qfeedback::stationary::{dark_state, stationarity_residual};
use qfeedback::{ModeGrid, PhysicalParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{figure_preset, RunConfig};
use crate::output::{CommandOutput, Table, N};
use crate::CliError;

type Out = Result<CommandOutput, CliError>;

fn params(cfg: &RunConfig) -> Result<PhysicalParams, CliError> {
    Ok(build_params(cfg.omega_g, cfg.n, cfg.ratio, cfg.delta_phi)?)
}

/// Builds the bath grid and writes the resolved size back into `cfg`.
fn grid(cfg: &mut RunConfig, p: &PhysicalParams) -> Result<ModeGrid, CliError> {
    let (w0, p0) = default_grid_size(p);
    let w = cfg.half_bandwidth.unwrap_or(w0);
    let pairs = cfg
        .num_pairs
        .unwrap_or_else(|| p0.max((w / (0.9 * max_spacing(p))).ceil() as usize));
    cfg.half_bandwidth = Some(w);
    cfg.num_pairs = Some(pairs);
    Ok(build_grid(p, w, pairs)?)
}

fn window(cfg: &RunConfig) -> Result<Option<(f64, f64)>, CliError> {
    match (cfg.window_min, cfg.window_max) {
        (None, None) => Ok(None),
        (Some(a), Some(b)) if a < b => Ok(Some((a, b))),
        _ => Err(CliError::config(
            "window_min and window_max must be given together with window_min < window_max".into(),
        )),
    }
}

fn c64(z: C64) -> Value {
    json!([z.re, z.im])
}

pub fn stationary(cfg: &mut RunConfig) -> Out {
    let p = params(cfg)?;
    let g = grid(cfg, &p)?;
    let d = dark_state(&p, &g);
    let mut t = Table::new("", &["delta", "re_c", "im_c"]);
    for (delta, c) in g.detunings().iter().zip(d.psi.bath()) {
        t.row(&[&N(*delta), &N(c.re), &N(c.im)]);
    }
    Ok(CommandOutput::new(
        vec![t],
        json!({
            "alpha_grid": d.alpha_grid,
            "alpha_closed": d.alpha_closed,
            "residual": stationarity_residual(&d, &p, &g),
            "approximate": d.approximate,
            "c_e": c64(d.psi.c_e()),
            "c_c": c64(d.psi.c_c()),
            "kappa": p.kappa(),
            "tau": p.tau(),
            "dim": g.state_dim(),
        }),
    ))
}

pub fn evolve(cfg: &mut RunConfig) -> Out {
    let p = params(cfg)?;
    let g = grid(cfg, &p)?;
    let dt = *cfg.dt.get_or_insert(max_step(&p, &g));
    let t_end = *cfg.t_end.get_or_insert(10.0 * p.tau());

    let (psi, alpha) = if cfg.initial == "excited" {
        (WaveFunction::excited(g.len()), None)
    } else {
        let d = dark_state(&p, &g);
        let psi = if cfg.perturbation == 0.0 {
            d.psi.clone()
        } else {
            let correction = cfg
                .perturbation_phase
                .map_or(EmitterCorrection::Colinear, EmitterCorrection::Phase);
            perturb_stationary_with(
                &d,
                C64::new(cfg.perturbation * d.alpha_grid, 0.0),
                correction,
            )?
        };
        (psi, Some(d.alpha_grid))
    };

    let opts = IntegrateOptions {
        snapshot_stride: cfg.snapshot_stride,
    };
    let tr = integrate_with_options(&psi, &p, &g, t_end, dt, opts)?;

    let mut t = Table::new("", &["t", "p_e", "p_c", "p_bath"]);
    for i in 0..tr.len() {
        t.row(&[
            &N(tr.times[i]),
            &N(tr.p_e[i]),
            &N(tr.p_c[i]),
            &N(tr.p_bath[i]),
        ]);
    }
    let mut tables = vec![t];
    if !tr.snapshots.is_empty() {
        let mut s = Table::new("_snapshots", &["t", "index", "re", "im"]);
        for (time, state) in &tr.snapshots {
            for (k, c) in state.as_slice().iter().enumerate() {
                s.row(&[&N(*time), &k, &N(c.re), &N(c.im)]);
            }
        }
        tables.push(s);
    }

    let beat = match beat_spectrum(&tr, &BeatOptions::default()) {
        Ok(b) => json!({
            "resolution": b.resolution,
            "peaks": b.peaks.iter().map(|pk| json!({
                "frequency": pk.frequency,
                "power": pk.power,
                "amplitude": pk.amplitude,
            })).collect::<Vec<_>>(),
        }),
        Err(e) => json!({ "skipped": e.to_string() }),
    };
    Ok(CommandOutput::new(
        tables,
        json!({
            "dt_used": tr.dt,
            "steps": tr.len() - 1,
            "alpha_grid": alpha,
            "max_norm_drift": tr.max_norm_drift(),
            "max_energy_drift": tr.max_energy_drift(),
            "beat_spectrum": beat,
        }),
    ))
}

pub fn jacobian(cfg: &mut RunConfig) -> Out {
    let p = params(cfg)?;
    let g = grid(cfg, &p)?;
    let jac = build_jacobian(&p, &g);
    let spec = eigenmodes(&jac)?;
    let mut t = Table::new("", &["mu", "weight", "omega_osc"]);
    for (i, w) in spec.osc_frequencies().iter().enumerate() {
        t.row(&[&N(spec.mu[i]), &N(spec.weights[i]), &N(*w)]);
    }
    let parity = (0..g.len())
        .map(|j| (g.couplings()[j].abs() - g.couplings()[g.mirror(j)].abs()).abs())
        .fold(0.0, f64::max);
    Ok(CommandOutput::new(
        vec![t],
        json!({
            "method": format!("{:?}", spec.method).to_lowercase(),
            "dim": jac.dim(),
            "skew_hermitian_defect": jac.skew_hermitian_defect(),
            "max_abs_re_lambda": spec.lambdas().iter().map(|z| z.re.abs()).fold(0.0, f64::max),
            "weight_sum": spec.weight_sum(),
            "coupling_parity_defect": parity,
            "symmetric_phase": p.is_symmetric_phase(),
            "visible_frequencies": visible_frequencies(&spec, cfg.weight_threshold)?,
        }),
    ))
}

pub fn roots(cfg: &mut RunConfig) -> Out {
    let p = params(cfg)?;
    let eqn = CharEqn::new(p, cfg.kernel);
    let (lo, hi) = window(cfg)?.unwrap_or_else(|| eqn.default_window());
    cfg.window_min = Some(lo);
    cfg.window_max = Some(hi);
    let scan = *cfg
        .scan_points
        .get_or_insert(default_scan_points(&p, lo, hi));
    let set = find_roots(&eqn, (lo, hi), scan)?;
    let mut t = Table::new("", &["omega_osc_over_omega_g", "kind"]);
    let mut all: Vec<(f64, &str)> = set.roots.iter().map(|&r| (r, "simple")).collect();
    all.extend(set.marginal.iter().map(|&r| (r, "marginal")));
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (r, kind) in all {
        t.row(&[&N(r / p.omega_g()), &kind]);
    }
    Ok(CommandOutput::new(
        vec![t],
        json!({
            "count": set.roots.len(),
            "marginal": set.marginal.len(),
            "max_residual": set.max_residual,
            "bracket_resolution": set.bracket_resolution,
        }),
    ))
}

pub fn critical_r(cfg: &mut RunConfig) -> Out {
    let ns: Vec<u32> = (1..=cfg.n_max).collect();
    let results = ns
        .par_iter()
        .map(|&n| critical_r_with(cfg.omega_g, n, cfg.delta_phi, cfg.kernel))
        .collect::<Result<Vec<_>, _>>()?;
    let mut t = Table::new(
        "",
        &[
            "n",
            "delta_phi",
            "r_bar",
            "log2_r_bar",
            "product",
            "tangency_omega_over_omega_g",
        ],
    );
    let mut rows = Vec::new();
    for c in &results {
        let tangency = c.tangency.map(|(w, _)| w / cfg.omega_g);
        t.row(&[
            &c.n,
            &N(c.delta_phi),
            &N(c.r_bar),
            &N(c.r_bar.log2()),
            &N(c.n as f64 * c.r_bar),
            &tangency.map_or(String::new(), |w| N(w).to_string()),
        ]);
        rows.push(json!({
            "n": c.n,
            "r_bar": c.r_bar,
            "bracket": [c.bracket.0, c.bracket.1],
            "baseline_count": c.baseline_count,
            "count_above": c.count_above,
            "tangency": c.tangency.map(|(w, r)| json!({"omega": w, "ratio": r})),
            "tangency_agrees": c.tangency_agrees(),
        }));
    }
    let deviation = results
        .iter()
        .map(|c| (c.n as f64 * c.r_bar * TAU - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(CommandOutput::new(
        vec![t],
        json!({ "critical": rows, "product_law_max_deviation": deviation }),
    ))
}

pub fn sweep(cfg: &mut RunConfig) -> Out {
    let (ns, dphi) = match &cfg.figure {
        Some(f) => figure_preset(f).expect("validated"),
        None => (vec![cfg.n], cfg.delta_phi),
    };
    cfg.delta_phi = dphi;
    if let [n] = ns[..] {
        cfg.n = n;
    }
    let win = window(cfg)?;
    let axis = log2_grid(cfg.log2_r_min, cfg.log2_r_max, cfg.log2_r_step);
    let mut t = Table::new("", &["n", "log2_r", "omega_osc_over_omega_g", "branch"]);
    let mut summary = Vec::new();
    for n in ns {
        let table = sweep_with(cfg.omega_g, n, dphi, cfg.kernel, &axis, win)?;
        for row in &table.rows {
            for (r, b) in row.roots.iter().zip(&row.branches) {
                t.row(&[&n, &N(row.log2_r), &N(r / cfg.omega_g), b]);
            }
        }
        let critical = critical_r_with(cfg.omega_g, n, dphi, cfg.kernel)
            .map(|c| json!({"r_bar": c.r_bar, "log2_r_bar": c.r_bar.log2()}))
            .unwrap_or_else(|e| json!({ "error": e.to_string() }));
        summary.push(json!({
            "n": n,
            "window": [table.window.0, table.window.1],
            "rows": table.rows.len(),
            "monotonicity_violations": table.monotonicity_violations,
            "marginal_points": table.rows.iter().map(|r| r.marginal.len()).sum::<usize>(),
            "critical": critical,
        }));
    }
    Ok(CommandOutput::new(vec![t], json!({ "tables": summary })))
}

struct CheckRow {
    name: &'static str,
    value: f64,
    tolerance: f64,
    note: String,
}

pub fn check(cfg: &mut RunConfig) -> Out {
    let p = params(cfg)?;
    let w = min_half_bandwidth(&p).max(12.0 * p.omega_g());
    let pairs = (w / max_spacing(&p)).ceil() as usize + 1;
    let g = build_grid(&p, w, pairs)?;
    let mut rows = Vec::new();

    // norm and energy over two delays from a random broadband state
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let amps: Vec<C64> = (0..g.state_dim())
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let psi = WaveFunction::from_vec(amps)?.normalized()?;
    let dt = max_step(&p, &g) / 8.0;
    let tr = integrate_with_options(&psi, &p, &g, 2.0 * p.tau(), dt, IntegrateOptions::default())?;
    rows.push(CheckRow {
        name: "norm-conservation",
        value: tr.max_norm_drift(),
        tolerance: 1e-8,
        note: format!("{} steps, dim {}", tr.len() - 1, g.state_dim()),
    });
    rows.push(CheckRow {
        name: "energy-conservation",
        value: tr.max_energy_drift(),
        tolerance: 1e-8,
        note: String::new(),
    });

    let jac = build_jacobian(&p, &g);
    let (value, note) = if jac.dim() <= 1200 {
        let ev = general_eigenvalues(&jac)?;
        let scale = ev.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let re = ev.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
        (re / scale, "general complex eigensolve".to_string())
    } else {
        let d = jac.skew_hermitian_defect() / jac.max_abs_entry();
        (
            d,
            "entrywise J + J† (grid too large for the general solver)".to_string(),
        )
    };
    rows.push(CheckRow {
        name: "skew-hermitian",
        value,
        tolerance: 1e-12,
        note,
    });

    let table = product_table(cfg.n_max)?;
    let dev = table
        .iter()
        .map(|r| (r.product * TAU - 1.0).abs())
        .fold(0.0, f64::max);
    rows.push(CheckRow {
        name: "product-law",
        value: dev,
        tolerance: PRODUCT_LAW_TOLERANCE,
        note: format!("n = 1..{}", cfg.n_max),
    });

    let mut t = Table::new("", &["check", "value", "tolerance", "pass"]);
    println!(
        "{:<20} {:>12} {:>10}  status",
        "check", "value", "tolerance"
    );
    let mut failed = Vec::new();
    for r in &rows {
        let pass = r.value < r.tolerance;
        if !pass {
            failed.push(r.name);
        }
        println!(
            "{:<20} {:>12.3e} {:>10.0e}  {}  {}",
            r.name,
            r.value,
            r.tolerance,
            if pass { "PASS" } else { "FAIL" },
            r.note
        );
        t.row(&[&r.name, &N(r.value), &N(r.tolerance), &pass]);
    }
    let mut out = CommandOutput::new(
        vec![t],
        json!({
            "half_bandwidth": w,
            "num_pairs": pairs,
            "dt": tr.dt,
            "checks": rows.iter().map(|r| json!({"name": r.name, "note": r.note})).collect::<Vec<_>>(),
        }),
    );
    if !failed.is_empty() {
        out.failure = Some(format!("failed checks: {}", failed.join(", ")));
    }
    Ok(out)
}
