//! Eigenmodes of the linearized equations of motion.
//!
//! The one-excitation equations are linear, so the Jacobian about any base
//! state is the full generator `J = i·M`. Eigenfrequencies `μ` of `M` map to
//! beat frequencies against the dark state via `ω_osc = μ + ω_g`.

use faer::{c64, Mat, Side};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::{Generator, ModeGrid, PhysicalParams};

/// Dimension above which [`EigenMethod::Auto`] switches to the secular solver.
pub const DENSE_LIMIT: usize = 4000;

/// Default relative weight threshold for a mode to count as visible.
pub const DEFAULT_WEIGHT_THRESHOLD: f64 = 1e-3;

/// Default merge distance for visible frequencies, in units of `ω_g`.
pub const DEFAULT_MERGE_TOLERANCE: f64 = 0.01;

/// `J = i·M` in arrowhead storage.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianOperator {
    gen: Generator,
}

pub fn build_jacobian(params: &PhysicalParams, grid: &ModeGrid) -> JacobianOperator {
    let jac = JacobianOperator {
        gen: Generator::new(params, grid),
    };
    debug_assert_eq!(jac.skew_hermitian_defect(), 0.0);
    jac
}

impl JacobianOperator {
    pub fn from_generator(gen: Generator) -> Self {
        Self { gen }
    }

    pub fn dim(&self) -> usize {
        self.gen.dim()
    }

    pub fn generator(&self) -> &Generator {
        &self.gen
    }

    /// Entry `J[a, b]`.
    pub fn entry(&self, a: usize, b: usize) -> C64 {
        let m = match (a, b) {
            (0, 1) | (1, 0) => self.gen.omega_g(),
            (1, j) if j >= 2 => self.gen.couplings()[j - 2],
            (j, 1) if j >= 2 => self.gen.couplings()[j - 2],
            (j, k) if j == k && j >= 2 => self.gen.bath_diagonal()[j - 2],
            _ => 0.0,
        };
        C64::new(0.0, m)
    }

    /// `max |J + J†|` over the structurally nonzero entries.
    pub fn skew_hermitian_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        let mut check = |a: usize, b: usize| {
            worst = worst.max((self.entry(a, b) + self.entry(b, a).conj()).norm());
        };
        check(0, 1);
        for j in 2..n {
            check(1, j);
            check(j, j);
        }
        worst
    }

    /// Largest absolute entry of `J`.
    pub fn max_abs_entry(&self) -> f64 {
        self.gen.max_abs_entry()
    }

    /// Dense complex copy of `J`.
    pub fn to_dense(&self) -> Mat<c64> {
        let n = self.dim();
        Mat::from_fn(n, n, |a, b| self.entry(a, b))
    }

    /// Dense real copy of `M`.
    pub fn generator_dense(&self) -> Mat<f64> {
        let n = self.dim();
        let mut m = Mat::<f64>::zeros(n, n);
        m[(0, 1)] = self.gen.omega_g();
        m[(1, 0)] = self.gen.omega_g();
        for (j, (&g, &d)) in self
            .gen
            .couplings()
            .iter()
            .zip(self.gen.bath_diagonal())
            .enumerate()
        {
            m[(1, j + 2)] = g;
            m[(j + 2, 1)] = g;
            m[(j + 2, j + 2)] = d;
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigenMethod {
    /// Dense below [`DENSE_LIMIT`], secular above.
    #[default]
    Auto,
    /// Tridiagonalization-based dense symmetric solve.
    Dense,
    /// Roots of the arrowhead secular equation.
    Secular,
}

/// Real spectrum of `M` with microcavity weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpectrum {
    pub omega_g: f64,
    /// Eigenvalues of `M`, ascending.
    pub mu: Vec<f64>,
    /// `|⟨c_c|v_i⟩|²` for each eigenvector.
    pub weights: Vec<f64>,
    pub method: EigenMethod,
}

impl ModeSpectrum {
    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// `ω_osc,i = μ_i + ω_g`.
    pub fn osc_frequencies(&self) -> Vec<f64> {
        self.mu.iter().map(|m| m + self.omega_g).collect()
    }

    /// Eigenvalues `λ_i = i·μ_i` of `J`.
    pub fn lambdas(&self) -> Vec<C64> {
        self.mu.iter().map(|&m| C64::new(0.0, m)).collect()
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }
}

pub fn eigenmodes(jac: &JacobianOperator) -> Result<ModeSpectrum> {
    eigenmodes_with(jac, EigenMethod::Auto)
}

pub fn eigenmodes_with(jac: &JacobianOperator, method: EigenMethod) -> Result<ModeSpectrum> {
    let method = match method {
        EigenMethod::Auto if jac.dim() > DENSE_LIMIT => EigenMethod::Secular,
        EigenMethod::Auto => EigenMethod::Dense,
        m => m,
    };
    let (mu, weights) = match method {
        EigenMethod::Dense => dense_modes(jac)?,
        _ => secular_modes(jac.generator())?,
    };
    Ok(ModeSpectrum {
        omega_g: jac.generator().omega_g(),
        mu,
        weights,
        method,
    })
}

fn dense_modes(jac: &JacobianOperator) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = jac.generator_dense();
    let evd = m.self_adjoint_eigen(Side::Lower).map_err(|e| {
        Error::Eigensolver(format!(
            "dense symmetric solve failed ({e:?}); dim = {}, max |M| = {}",
            jac.dim(),
            jac.max_abs_entry()
        ))
    })?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let n = jac.dim();
    let mu: Vec<f64> = (0..n).map(|i| s[i]).collect();
    let weights: Vec<f64> = (0..n).map(|i| u[(1, i)] * u[(1, i)]).collect();
    if mu.iter().any(|x| !x.is_finite()) {
        return Err(Error::Eigensolver("non-finite eigenvalue".into()));
    }
    Ok((mu, weights))
}

/// Eigenvalues of `J` from a general (non-Hermitian) complex solver.
///
/// Used as an independent check that the spectrum is purely imaginary.
pub fn general_eigenvalues(jac: &JacobianOperator) -> Result<Vec<C64>> {
    jac.to_dense().eigenvalues().map_err(|e| {
        Error::Eigensolver(format!(
            "general complex solve failed ({e:?}); dim = {}",
            jac.dim()
        ))
    })
}

/// Spectrum of the arrowhead `[[0, bᵀ], [b, diag(a)]]` with the microcavity
/// as hub, from the roots of `μ − Σ b_s²/(μ − a_s) = 0`.
fn secular_modes(gen: &Generator) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut spokes: Vec<(f64, f64)> = Vec::with_capacity(gen.dim() - 1);
    spokes.push((0.0, gen.omega_g()));
    spokes.extend(
        gen.bath_diagonal()
            .iter()
            .copied()
            .zip(gen.couplings().iter().copied()),
    );
    spokes.sort_by(|x, y| x.0.total_cmp(&y.0));

    let scale = gen.max_abs_entry();
    let small = f64::EPSILON * scale;
    let mut mu = Vec::with_capacity(gen.dim());
    let mut weights = Vec::with_capacity(gen.dim());

    // merge coincident poles and drop disconnected spokes
    let mut poles: Vec<f64> = Vec::with_capacity(spokes.len());
    let mut b2: Vec<f64> = Vec::with_capacity(spokes.len());
    for (a, b) in spokes {
        if b.abs() <= small {
            mu.push(a);
            weights.push(0.0);
            continue;
        }
        if let Some(&last) = poles.last() {
            if a - last <= small {
                *b2.last_mut().unwrap() += b * b;
                mu.push(a);
                weights.push(0.0);
                continue;
            }
        }
        poles.push(a);
        b2.push(b * b);
    }

    let m = poles.len();
    if m == 0 {
        mu.push(0.0);
        weights.push(1.0);
    } else {
        let total: f64 = b2.iter().sum();
        let reach = total.sqrt() + scale;
        for k in 0..=m {
            let lo = if k == 0 {
                poles[0] - reach
            } else {
                poles[k - 1]
            };
            let hi = if k == m {
                poles[m - 1] + reach
            } else {
                poles[k]
            };
            let (root, w) = secular_root(&poles, &b2, lo, hi, k == 0, k == m)?;
            mu.push(root);
            weights.push(w);
        }
    }

    let mut order: Vec<usize> = (0..mu.len()).collect();
    order.sort_by(|&i, &j| mu[i].total_cmp(&mu[j]));
    Ok((
        order.iter().map(|&i| mu[i]).collect(),
        order.iter().map(|&i| weights[i]).collect(),
    ))
}

/// Root of the secular function in `(lo, hi)` computed as an offset from
/// the nearer endpoint, with its hub weight.
fn secular_root(
    poles: &[f64],
    b2: &[f64],
    lo: f64,
    hi: f64,
    open_lo: bool,
    open_hi: bool,
) -> Result<(f64, f64)> {
    // secular value and slope at origin + x, with pole gaps taken from the origin
    let eval = |origin: f64, x: f64| -> (f64, f64) {
        let mut f = origin + x;
        let mut df = 1.0;
        for (&a, &b) in poles.iter().zip(b2) {
            let r = 1.0 / (x - (a - origin));
            f -= b * r;
            df += b * r * r;
        }
        (f, df)
    };

    let mid = 0.5 * (lo + hi);
    let (f_mid, _) = eval(mid, 0.0);
    // choose the pole the root is closer to as origin
    let (origin, mut left, mut right) = if f_mid >= 0.0 {
        if open_lo {
            (mid, lo - mid, 0.0)
        } else {
            (lo, 0.0, mid - lo)
        }
    } else if open_hi {
        (mid, 0.0, hi - mid)
    } else {
        (hi, mid - hi, 0.0)
    };
    if f_mid == 0.0 {
        let (_, df) = eval(mid, 0.0);
        return Ok((mid, 1.0 / df));
    }

    let mut x = 0.5 * (left + right);
    for _ in 0..300 {
        let (f, df) = eval(origin, x);
        if f == 0.0 {
            break;
        }
        if f > 0.0 {
            right = x;
        } else {
            left = x;
        }
        let step = f / df;
        let mut next = x - step;
        if !(next > left && next < right) {
            next = 0.5 * (left + right);
        }
        let tol = 2.0 * f64::EPSILON * next.abs().max(f64::MIN_POSITIVE);
        if (next - x).abs() <= tol
            || right - left <= 4.0 * f64::EPSILON * left.abs().max(right.abs())
        {
            x = next;
            break;
        }
        x = next;
    }
    let (_, df) = eval(origin, x);
    let root = origin + x;
    if !root.is_finite() || !df.is_finite() {
        return Err(Error::Eigensolver(format!(
            "secular iteration diverged in ({lo}, {hi})"
        )));
    }
    Ok((root, 1.0 / df))
}

/// Beat frequencies of modes that show up in `|c_c|²`.
///
/// Local maxima of the weight over the sorted spectrum with weight at least
/// `weight_threshold` times the largest weight, merged within
/// [`DEFAULT_MERGE_TOLERANCE`]`·ω_g`.
pub fn visible_frequencies(spec: &ModeSpectrum, weight_threshold: f64) -> Result<Vec<f64>> {
    visible_frequencies_with(
        spec,
        weight_threshold,
        DEFAULT_MERGE_TOLERANCE * spec.omega_g,
    )
}

pub fn visible_frequencies_with(
    spec: &ModeSpectrum,
    weight_threshold: f64,
    merge_tolerance: f64,
) -> Result<Vec<f64>> {
    if !(weight_threshold > 0.0 && weight_threshold <= 1.0) {
        return Err(Error::ParameterDomain {
            field: "weight_threshold",
            value: weight_threshold,
            reason: "must lie in (0, 1]",
        });
    }
    let w = &spec.weights;
    let n = w.len();
    let cut = weight_threshold * spec.max_weight();
    let mut picked: Vec<(f64, f64)> = Vec::new();
    for i in 0..n {
        let left = if i > 0 { w[i - 1] } else { f64::NEG_INFINITY };
        let right = if i + 1 < n {
            w[i + 1]
        } else {
            f64::NEG_INFINITY
        };
        if w[i] >= cut && w[i] > left && w[i] >= right {
            picked.push((spec.mu[i] + spec.omega_g, w[i]));
        }
    }
    // keep the heavier of two peaks closer than the merge tolerance
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(picked.len());
    for (f, wt) in picked {
        match out.last_mut() {
            Some(last) if f - last.0 <= merge_tolerance => {
                if wt > last.1 {
                    *last = (f, wt);
                }
            }
            _ => out.push((f, wt)),
        }
    }
    Ok(out.into_iter().map(|(f, _)| f).collect())
}
