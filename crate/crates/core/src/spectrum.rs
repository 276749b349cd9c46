//! Real roots of the characteristic equation
//!
//! ```text
//! f(ω) = (ω − ω_g)² − κ·(ω − ω_g)·K(ωτ − Δφ) − ω_g²
//! ```
//!
//! with `K = sin` for half-cavity feedback and `K = cos` for the spin dimer.
//! Roots are beat frequencies `ω_osc` of small oscillations about the dark
//! state.

use std::f64::consts::{FRAC_PI_2, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PhysicalParams;

/// Samples per period of the kernel term required by [`find_roots`].
pub const MIN_SAMPLES_PER_PERIOD: f64 = 16.0;

/// Samples per period used by default scans.
pub const DEFAULT_SAMPLES_PER_PERIOD: f64 = 32.0;

/// Bisection stops once the bracket is this narrow, in units of `ω_g`.
pub const BISECTION_TOLERANCE: f64 = 1e-12;

/// Roots must satisfy `|f| <` this times `ω_g²`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Critical points with `|f| <` this times `ω_g²` that do not cross zero are
/// reported as marginal.
pub const MARGINAL_TOLERANCE: f64 = 1e-8;

/// Roots closer than this (times `ω_g`) are merged.
pub const ROOT_MERGE: f64 = 1e-9;

/// Lower end of the critical-ratio search.
pub const R_MIN: f64 = 1e-3;
/// Upper end of the critical-ratio search.
pub const R_MAX: f64 = 10.0;
/// Bracket width at which the critical-ratio bisection stops.
pub const R_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    /// Half-cavity feedback, `K = sin`.
    #[default]
    Sin,
    /// Two-spin dimer, `K = cos`.
    Cos,
}

impl Kernel {
    fn eval(self, theta: f64) -> (f64, f64, f64) {
        let (s, c) = theta.sin_cos();
        match self {
            Kernel::Sin => (s, c, -s),
            Kernel::Cos => (c, -s, -c),
        }
    }
}

impl std::str::FromStr for Kernel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "sin" => Ok(Kernel::Sin),
            "cos" => Ok(Kernel::Cos),
            other => Err(format!("unknown kernel `{other}` (expected sin or cos)")),
        }
    }
}

impl std::fmt::Display for Kernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Kernel::Sin => "sin",
            Kernel::Cos => "cos",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharEqn {
    pub params: PhysicalParams,
    pub kernel: Kernel,
}

/// Value and first two ω-derivatives of `f`, plus `∂f/∂R` and `∂²f/∂ω∂R`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Jet {
    f: f64,
    df: f64,
    d2f: f64,
    df_dr: f64,
    d2f_dwdr: f64,
}

impl CharEqn {
    pub fn new(params: PhysicalParams, kernel: Kernel) -> Self {
        Self { params, kernel }
    }

    /// Same equation at another ratio.
    pub fn with_ratio(&self, ratio: f64) -> Result<Self> {
        Ok(Self {
            params: self.params.with_ratio(ratio)?,
            kernel: self.kernel,
        })
    }

    fn jet(&self, omega: f64) -> Jet {
        let p = &self.params;
        let wg = p.omega_g();
        let kappa = p.kappa();
        let tau = p.tau();
        let x = omega - wg;
        let (k, k1, k2) = self.kernel.eval(omega * tau - p.delta_phi());
        // κ = 2·R·ω_g
        let dkappa = 2.0 * wg;
        Jet {
            f: x * x - kappa * x * k - wg * wg,
            df: 2.0 * x - kappa * k - kappa * x * tau * k1,
            d2f: 2.0 - 2.0 * kappa * tau * k1 - kappa * x * tau * tau * k2,
            df_dr: -dkappa * x * k,
            d2f_dwdr: -dkappa * (k + x * tau * k1),
        }
    }

    pub fn value(&self, omega: f64) -> f64 {
        char_fn(self, omega)
    }

    /// `df/dω`.
    pub fn derivative(&self, omega: f64) -> f64 {
        self.jet(omega).df
    }

    /// Default search window `[ω_g − 4ω_g − 2π/τ, ω_g + 4ω_g + 2π/τ]`.
    pub fn default_window(&self) -> (f64, f64) {
        default_window(&self.params)
    }
}

pub fn char_fn(eqn: &CharEqn, omega: f64) -> f64 {
    let p = &eqn.params;
    let x = omega - p.omega_g();
    let theta = omega * p.tau() - p.delta_phi();
    let k = match eqn.kernel {
        Kernel::Sin => theta.sin(),
        Kernel::Cos => theta.cos(),
    };
    x * x - p.kappa() * x * k - p.omega_g() * p.omega_g()
}

pub fn default_window(params: &PhysicalParams) -> (f64, f64) {
    let wg = params.omega_g();
    let fsr = TAU / params.tau();
    (wg - 4.0 * wg - fsr, wg + 4.0 * wg + fsr)
}

/// Minimum number of scan samples for a window.
pub fn required_scan_points(params: &PhysicalParams, lo: f64, hi: f64) -> usize {
    (MIN_SAMPLES_PER_PERIOD * (hi - lo) * params.tau() / TAU).ceil() as usize
}

pub fn default_scan_points(params: &PhysicalParams, lo: f64, hi: f64) -> usize {
    let n = (DEFAULT_SAMPLES_PER_PERIOD * (hi - lo) * params.tau() / TAU).ceil() as usize + 1;
    n.max(1024)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootSet {
    /// Real roots, ascending.
    pub roots: Vec<f64>,
    /// Near-tangencies that do not cross zero.
    pub marginal: Vec<f64>,
    pub bracket_resolution: f64,
    pub range: (f64, f64),
    pub scan_points: usize,
    pub max_residual: f64,
    pub params: PhysicalParams,
    pub kernel: Kernel,
}

impl RootSet {
    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }
}

/// Bisection of a continuous function on a sign-changing bracket.
fn bisect(mut lo: f64, mut hi: f64, mut f_lo: f64, tol: f64, f: impl Fn(f64) -> f64) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Critical points of `f` (zeros of `f′`) on the scan grid.
fn critical_points(eqn: &CharEqn, grid: &[f64], tol: f64) -> Vec<f64> {
    let d: Vec<f64> = grid.iter().map(|&w| eqn.derivative(w)).collect();
    let mut out = Vec::new();
    for i in 0..grid.len() - 1 {
        if d[i] == 0.0 {
            out.push(grid[i]);
        } else if d[i + 1] != 0.0 && (d[i] < 0.0) != (d[i + 1] < 0.0) {
            out.push(bisect(grid[i], grid[i + 1], d[i], tol, |w| {
                eqn.derivative(w)
            }));
        }
    }
    if d[grid.len() - 1] == 0.0 {
        out.push(grid[grid.len() - 1]);
    }
    out
}

pub fn find_roots(eqn: &CharEqn, range: (f64, f64), scan_points: usize) -> Result<RootSet> {
    let (lo, hi) = range;
    if !lo.is_finite() || !hi.is_finite() || hi <= lo {
        return Err(Error::ParameterDomain {
            field: "range",
            value: hi - lo,
            reason: "need finite ω_lo < ω_hi",
        });
    }
    let required = required_scan_points(&eqn.params, lo, hi).max(2);
    if scan_points < required {
        return Err(Error::ScanResolution {
            scan_points,
            required,
        });
    }
    let wg = eqn.params.omega_g();
    let tol = BISECTION_TOLERANCE * wg;
    let step = (hi - lo) / (scan_points - 1) as f64;
    let grid: Vec<f64> = (0..scan_points)
        .map(|i| {
            if i + 1 == scan_points {
                hi
            } else {
                lo + i as f64 * step
            }
        })
        .collect();
    let crit = critical_points(eqn, &grid, tol);

    // breakpoints: scan samples and critical points, tagged
    let mut pts: Vec<(f64, bool)> = grid.iter().map(|&w| (w, false)).collect();
    pts.extend(crit.iter().map(|&w| (w, true)));
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let vals: Vec<f64> = pts.iter().map(|&(w, _)| char_fn(eqn, w)).collect();

    let mut roots = Vec::new();
    let mut marginal = Vec::new();
    for i in 0..pts.len() {
        let (w, is_crit) = pts[i];
        let v = vals[i];
        if v == 0.0 {
            roots.push(w);
            continue;
        }
        if i > 0 {
            let vp = vals[i - 1];
            if vp != 0.0 && (vp < 0.0) != (v < 0.0) {
                let r = bisect(pts[i - 1].0, w, vp, tol, |x| char_fn(eqn, x));
                roots.push(polish(eqn, r, pts[i - 1].0, w));
            }
        }
        if is_crit && v.abs() < MARGINAL_TOLERANCE * wg * wg {
            let same_left = i == 0 || (vals[i - 1] < 0.0) == (v < 0.0);
            let same_right = i + 1 == pts.len() || (vals[i + 1] < 0.0) == (v < 0.0);
            if same_left && same_right {
                marginal.push(w);
            }
        }
    }

    roots.sort_by(f64::total_cmp);
    let merge = ROOT_MERGE * wg;
    roots.dedup_by(|b, a| (*b - *a).abs() < merge);
    let max_residual = roots
        .iter()
        .map(|&r| char_fn(eqn, r).abs())
        .fold(0.0, f64::max);

    Ok(RootSet {
        roots,
        marginal,
        bracket_resolution: merge,
        range,
        scan_points,
        max_residual,
        params: eqn.params,
        kernel: eqn.kernel,
    })
}

/// Newton refinement kept inside the bracket; stops once the residual meets
/// the tolerance.
fn polish(eqn: &CharEqn, mut r: f64, lo: f64, hi: f64) -> f64 {
    let target = RESIDUAL_TOLERANCE * eqn.params.omega_g().powi(2);
    for _ in 0..3 {
        let j = eqn.jet(r);
        let next = r - j.f / j.df;
        if !(next >= lo && next <= hi) || char_fn(eqn, next).abs() > j.f.abs() {
            break;
        }
        r = next;
        if char_fn(eqn, r).abs() < 0.01 * target {
            break;
        }
    }
    r
}

/// Roots over the default window with the default scan density.
pub fn default_roots(eqn: &CharEqn) -> Result<RootSet> {
    let (lo, hi) = eqn.default_window();
    find_roots(eqn, (lo, hi), default_scan_points(&eqn.params, lo, hi))
}

/// Critical ratio located by a change in root count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalRatio {
    pub n: u32,
    pub delta_phi: f64,
    pub kernel: Kernel,
    /// Midpoint of the final bracket.
    pub r_bar: f64,
    /// `(R_lo, R_hi)` with the baseline count at `R_lo` and more at `R_hi`.
    pub bracket: (f64, f64),
    pub baseline_count: usize,
    pub count_above: usize,
    /// Fold point `(ω, R)` with `f = f′ = 0`, if the Newton solve converged.
    pub tangency: Option<(f64, f64)>,
}

impl CriticalRatio {
    /// True when the fold solve lands inside the bisection bracket (widened
    /// by one bracket width).
    pub fn tangency_agrees(&self) -> bool {
        let w = self.bracket.1 - self.bracket.0;
        self.tangency
            .map(|(_, r)| r >= self.bracket.0 - w && r <= self.bracket.1 + w)
            .unwrap_or(false)
    }
}

fn count_roots(base: &CharEqn, ratio: f64) -> Result<(usize, CharEqn)> {
    let eqn = base.with_ratio(ratio)?;
    let (lo, hi) = eqn.default_window();
    let set = find_roots(&eqn, (lo, hi), default_scan_points(&eqn.params, lo, hi))?;
    Ok((set.len(), eqn))
}

pub fn critical_r(n: u32, delta_phi: f64, kernel: Kernel) -> Result<CriticalRatio> {
    critical_r_with(1.0, n, delta_phi, kernel)
}

pub fn critical_r_with(
    omega_g: f64,
    n: u32,
    delta_phi: f64,
    kernel: Kernel,
) -> Result<CriticalRatio> {
    let params = PhysicalParams::new(omega_g, n, R_MIN, delta_phi)?;
    let base = CharEqn::new(params, kernel);
    let (baseline, _) = count_roots(&base, R_MIN)?;

    let scan = 400;
    let step = (R_MAX / R_MIN).ln() / scan as f64;
    let mut prev = R_MIN;
    let mut found = None;
    for k in 1..=scan {
        let r = if k == scan {
            R_MAX
        } else {
            R_MIN * (step * k as f64).exp()
        };
        let (c, _) = count_roots(&base, r)?;
        if c > baseline {
            found = Some((prev, r, c));
            break;
        }
        prev = r;
    }
    let not_found = |detail: String| Error::CriticalNotFound {
        n,
        delta_phi: params.delta_phi(),
        r_lo: R_MIN,
        r_hi: R_MAX,
        detail,
    };
    let (mut lo, mut hi, mut count_hi) =
        found.ok_or_else(|| not_found(format!("root count stayed at {baseline}")))?;

    while hi - lo > R_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        let (c, _) = count_roots(&base, mid)?;
        if c > baseline {
            hi = mid;
            count_hi = c;
        } else {
            lo = mid;
        }
    }

    let tangency = fold_point(&base, lo, hi)?;
    Ok(CriticalRatio {
        n,
        delta_phi: params.delta_phi(),
        kernel,
        r_bar: 0.5 * (lo + hi),
        bracket: (lo, hi),
        baseline_count: baseline,
        count_above: count_hi,
        tangency,
    })
}

/// Newton solve of `f = 0, f′ = 0` in `(ω, R)` started from critical points
/// of `f` whose value changes sign across the bracket.
fn fold_point(base: &CharEqn, r_lo: f64, r_hi: f64) -> Result<Option<(f64, f64)>> {
    let below = base.with_ratio(r_lo)?;
    let above = base.with_ratio(r_hi)?;
    let (lo, hi) = above.default_window();
    let n = default_scan_points(&above.params, lo, hi);
    let step = (hi - lo) / (n - 1) as f64;
    let grid: Vec<f64> = (0..n).map(|i| lo + i as f64 * step).collect();
    let tol = BISECTION_TOLERANCE * base.params.omega_g();

    let mut candidates: Vec<(f64, f64)> = critical_points(&above, &grid, tol)
        .into_iter()
        .filter_map(|c| {
            let (a, b) = (char_fn(&below, c), char_fn(&above, c));
            ((a < 0.0) != (b < 0.0)).then_some((b.abs(), c))
        })
        .collect();
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));

    let width = r_hi - r_lo;
    for (_, w0) in candidates {
        let mut w = w0;
        let mut r = 0.5 * (r_lo + r_hi);
        let mut converged = false;
        for _ in 0..60 {
            let eqn = base.with_ratio(r)?;
            let j = eqn.jet(w);
            // [[f_ω, f_R], [f_ωω, f_ωR]]·(dω, dR) = −(f, f_ω)
            let det = j.df * j.d2f_dwdr - j.df_dr * j.d2f;
            if det == 0.0 || !det.is_finite() {
                break;
            }
            let dw = (-j.f * j.d2f_dwdr + j.df_dr * j.df) / det;
            let dr = (-j.df * j.df + j.d2f * j.f) / det;
            w += dw;
            r += dr;
            if r.is_nan() || r <= 0.0 || !w.is_finite() {
                break;
            }
            if dw.abs() < 1e-14 * w.abs().max(1.0) && dr.abs() < 1e-14 * r {
                converged = true;
                break;
            }
        }
        if converged && r >= r_lo - width && r <= r_hi + width {
            return Ok(Some((w, r)));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProductRow {
    pub n: u32,
    pub r_bar: f64,
    pub product: f64,
}

/// Relative tolerance of the product law `n·R̄(n, 0) = 1/(2π)`.
pub const PRODUCT_LAW_TOLERANCE: f64 = 0.02;

/// `n·R̄(n, 0)` for `n = 1..=n_max` without checking the law.
pub fn product_table(n_max: u32) -> Result<Vec<ProductRow>> {
    if n_max == 0 {
        return Err(Error::ParameterDomain {
            field: "n_max",
            value: 0.0,
            reason: "must be ≥ 1",
        });
    }
    (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let c = critical_r(n, 0.0, Kernel::Sin)?;
            Ok(ProductRow {
                n,
                r_bar: c.r_bar,
                product: f64::from(n) * c.r_bar,
            })
        })
        .collect()
}

/// Like [`product_table`], failing if any row misses `1/(2π)` by more than
/// [`PRODUCT_LAW_TOLERANCE`].
pub fn product_law(n_max: u32) -> Result<Vec<ProductRow>> {
    let rows = product_table(n_max)?;
    let target = 1.0 / TAU;
    for row in &rows {
        let deviation = (row.product - target).abs() / target;
        if deviation >= PRODUCT_LAW_TOLERANCE {
            return Err(Error::ProductLaw {
                n: row.n,
                product: row.product,
                deviation,
            });
        }
    }
    Ok(rows)
}

/// `lo, lo + step, …` up to `hi` inclusive (within half a step).
pub fn log2_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step + 0.5).floor() as usize;
    (0..=count).map(|k| lo + k as f64 * step).collect()
}

/// Default sweep axis: `log₂R` from −6 to 6 in steps of 1/16.
pub fn default_log2_grid() -> Vec<f64> {
    log2_grid(-6.0, 6.0, 1.0 / 16.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub log2_r: f64,
    pub roots: Vec<f64>,
    /// Branch id of each root.
    pub branches: Vec<usize>,
    pub marginal: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub n: u32,
    pub delta_phi: f64,
    pub kernel: Kernel,
    pub window: (f64, f64),
    pub rows: Vec<SweepRow>,
    /// `(log₂R, previous count, count)` wherever the root count drops.
    pub monotonicity_violations: Vec<(f64, usize, usize)>,
}

/// Root sets over a grid of `log₂R` values at fixed `n`, `Δφ` and kernel.
pub fn sweep(
    n: u32,
    delta_phi: f64,
    kernel: Kernel,
    log2_r: &[f64],
    window: Option<(f64, f64)>,
) -> Result<SweepTable> {
    sweep_with(1.0, n, delta_phi, kernel, log2_r, window)
}

pub fn sweep_with(
    omega_g: f64,
    n: u32,
    delta_phi: f64,
    kernel: Kernel,
    log2_r: &[f64],
    window: Option<(f64, f64)>,
) -> Result<SweepTable> {
    let probe = PhysicalParams::new(omega_g, n, 1.0, delta_phi)?;
    let window = window.unwrap_or_else(|| default_window(&probe));
    let scan = default_scan_points(&probe, window.0, window.1);
    let sets: Vec<RootSet> = log2_r
        .par_iter()
        .map(|&l| {
            let params = PhysicalParams::new(omega_g, n, l.exp2(), delta_phi)?;
            find_roots(&CharEqn::new(params, kernel), window, scan)
        })
        .collect::<Result<_>>()?;

    let mut rows: Vec<SweepRow> = Vec::with_capacity(sets.len());
    let mut next_branch = 0usize;
    let mut violations = Vec::new();
    for (&l, set) in log2_r.iter().zip(sets) {
        let branches = match rows.last() {
            Some(prev) => {
                if set.len() < prev.roots.len() {
                    violations.push((l, prev.roots.len(), set.len()));
                }
                assign_branches(prev, &set.roots, &mut next_branch)
            }
            None => {
                next_branch = set.len();
                (0..set.len()).collect()
            }
        };
        rows.push(SweepRow {
            log2_r: l,
            roots: set.roots,
            branches,
            marginal: set.marginal,
        });
    }
    Ok(SweepTable {
        n,
        delta_phi: probe.delta_phi(),
        kernel,
        window,
        rows,
        monotonicity_violations: violations,
    })
}

/// Greedy nearest-neighbour continuation of branch ids between rows.
fn assign_branches(prev: &SweepRow, roots: &[f64], next_branch: &mut usize) -> Vec<usize> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, r) in roots.iter().enumerate() {
        for (j, p) in prev.roots.iter().enumerate() {
            pairs.push(((r - p).abs(), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut ids = vec![usize::MAX; roots.len()];
    let mut taken = vec![false; prev.roots.len()];
    for (_, i, j) in pairs {
        if ids[i] == usize::MAX && !taken[j] {
            ids[i] = prev.branches[j];
            taken[j] = true;
        }
    }
    for id in ids.iter_mut().filter(|id| **id == usize::MAX) {
        *id = *next_branch;
        *next_branch += 1;
    }
    ids
}

/// Phase at which the sin kernel reproduces the cos kernel at `delta_phi`.
pub fn dimer_equivalent_phase(delta_phi: f64) -> f64 {
    crate::model::normalize_phase(delta_phi - FRAC_PI_2)
}
