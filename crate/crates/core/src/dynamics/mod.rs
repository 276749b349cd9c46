//! Time evolution of the one-excitation amplitudes.
//!
//! The equations of motion are integrated in the autonomous gauge, where the
//! bath phases `e^{i(ω₀−ω_k)t}` have been absorbed into the amplitudes and the
//! generator [`Generator`] is time independent.

mod beat;

pub use beat::{beat_spectrum, BeatOptions, BeatPeak, BeatSpectrum};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::{Generator, ModeGrid, PhysicalParams};
use crate::stationary::DarkState;

/// Tolerance on the norm of states handed to the integrator.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// Explicit-scheme margin: `dt ≤ STEP_MARGIN / max(W, ω_g, κ)`.
pub const STEP_MARGIN: f64 = 0.05;

/// Norm drift over a run above which integration is reported as failed.
pub const MAX_RUN_DRIFT: f64 = 1e-6;

/// Target bound on norm drift per unit time.
pub const MAX_DRIFT_RATE: f64 = 1e-9;

/// One-excitation state `c_e|e,0,0⟩ + c_c|g,1,0⟩ + Σ_j c_j|g,0,j⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    amps: Vec<C64>,
}

impl WaveFunction {
    pub fn new(c_e: C64, c_c: C64, bath: &[C64]) -> Self {
        let mut amps = Vec::with_capacity(bath.len() + 2);
        amps.push(c_e);
        amps.push(c_c);
        amps.extend_from_slice(bath);
        Self { amps }
    }

    /// Builds a state from the flat ordering `[c_e, c_c, c_1, …]`.
    pub fn from_vec(amps: Vec<C64>) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::InvalidState(format!(
                "need at least 2 amplitudes, got {}",
                amps.len()
            )));
        }
        Ok(Self { amps })
    }

    /// Emitter excited, cavity and bath empty.
    pub fn excited(num_bath: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); num_bath + 2];
        amps[0] = C64::new(1.0, 0.0);
        Self { amps }
    }

    pub fn c_e(&self) -> C64 {
        self.amps[0]
    }

    pub fn c_c(&self) -> C64 {
        self.amps[1]
    }

    pub fn bath(&self) -> &[C64] {
        &self.amps[2..]
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.amps
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn p_e(&self) -> f64 {
        self.amps[0].norm_sqr()
    }

    pub fn p_c(&self) -> f64 {
        self.amps[1].norm_sqr()
    }

    pub fn p_bath(&self) -> f64 {
        self.amps[2..].iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Inner product `⟨self, other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &WaveFunction) -> C64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm();
        if !n.is_finite() || n <= 0.0 {
            return Err(Error::InvalidState("cannot normalize a zero state".into()));
        }
        let s = 1.0 / n;
        self.amps.iter_mut().for_each(|c| *c *= s);
        Ok(self)
    }
}

/// `out = M·c` for the arrowhead generator.
pub(crate) fn apply_generator(gen: &Generator, c: &[C64], out: &mut [C64]) {
    let wg = gen.omega_g();
    let (head, bath) = c.split_at(2);
    let (out_head, out_bath) = out.split_at_mut(2);
    let mut hub = wg * head[0];
    for ((o, &cj), (&g, &d)) in out_bath
        .iter_mut()
        .zip(bath)
        .zip(gen.couplings().iter().zip(gen.bath_diagonal()))
    {
        hub += g * cj;
        *o = g * head[1] + d * cj;
    }
    out_head[0] = wg * head[1];
    out_head[1] = hub;
}

/// `out = i·M·c`.
fn rhs(gen: &Generator, c: &[C64], out: &mut [C64]) {
    apply_generator(gen, c, out);
    for o in out.iter_mut() {
        *o = C64::new(-o.im, o.re);
    }
}

/// Time derivative `dc/dt = i·M·c` of a state.
pub fn derivative(
    state: &WaveFunction,
    params: &PhysicalParams,
    grid: &ModeGrid,
) -> Result<WaveFunction> {
    let gen = Generator::new(params, grid);
    derivative_with(state, &gen)
}

pub fn derivative_with(state: &WaveFunction, gen: &Generator) -> Result<WaveFunction> {
    if state.dim() != gen.dim() {
        return Err(Error::Dimension {
            expected: gen.dim(),
            found: state.dim(),
        });
    }
    let mut out = vec![C64::new(0.0, 0.0); state.dim()];
    rhs(gen, state.as_slice(), &mut out);
    Ok(WaveFunction { amps: out })
}

/// Expectation value `⟨c, M c⟩`.
pub fn energy(state: &WaveFunction, gen: &Generator) -> Result<f64> {
    if state.dim() != gen.dim() {
        return Err(Error::Dimension {
            expected: gen.dim(),
            found: state.dim(),
        });
    }
    let mut mc = vec![C64::new(0.0, 0.0); state.dim()];
    apply_generator(gen, state.as_slice(), &mut mc);
    Ok(state
        .as_slice()
        .iter()
        .zip(&mc)
        .map(|(a, b)| (a.conj() * b).re)
        .sum())
}

/// Largest step allowed for a given parameter set and grid.
pub fn max_step(params: &PhysicalParams, grid: &ModeGrid) -> f64 {
    STEP_MARGIN
        / grid
            .half_bandwidth()
            .max(params.omega_g())
            .max(params.kappa())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IntegrateOptions {
    /// Store a full state every `snapshot_stride` steps; 0 disables snapshots.
    pub snapshot_stride: usize,
}

/// Sampled probabilities along an integration run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub omega_g: f64,
    pub dt: f64,
    pub times: Vec<f64>,
    pub p_e: Vec<f64>,
    pub p_c: Vec<f64>,
    pub p_bath: Vec<f64>,
    /// `⟨c, M c⟩` at each sample.
    pub energy: Vec<f64>,
    pub snapshots: Vec<(f64, WaveFunction)>,
    pub final_state: WaveFunction,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0) - self.times.first().copied().unwrap_or(0.0)
    }

    /// Total probability at each sample.
    pub fn norm_sqr(&self) -> impl Iterator<Item = f64> + '_ {
        self.p_e
            .iter()
            .zip(&self.p_c)
            .zip(&self.p_bath)
            .map(|((a, b), c)| a + b + c)
    }

    /// `max_t |Σp(t) − Σp(0)|`.
    pub fn max_norm_drift(&self) -> f64 {
        let mut it = self.norm_sqr();
        let Some(n0) = it.next() else { return 0.0 };
        it.fold(0.0, |m, n| m.max((n - n0).abs()))
    }

    /// `max_t |⟨M⟩(t) − ⟨M⟩(0)|`.
    pub fn max_energy_drift(&self) -> f64 {
        let Some(&e0) = self.energy.first() else {
            return 0.0;
        };
        self.energy.iter().fold(0.0, |m, e| m.max((e - e0).abs()))
    }
}

/// Fixed-step classical fourth-order Runge–Kutta integration of `dc/dt = i·M·c`.
pub fn integrate(
    state0: &WaveFunction,
    params: &PhysicalParams,
    grid: &ModeGrid,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    integrate_with_options(state0, params, grid, t_end, dt, IntegrateOptions::default())
}

pub fn integrate_with_options(
    state0: &WaveFunction,
    params: &PhysicalParams,
    grid: &ModeGrid,
    t_end: f64,
    dt: f64,
    options: IntegrateOptions,
) -> Result<Trajectory> {
    let gen = Generator::new(params, grid);
    if state0.dim() != gen.dim() {
        return Err(Error::Dimension {
            expected: gen.dim(),
            found: state0.dim(),
        });
    }
    let n0 = state0.norm_sqr();
    if (n0 - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::InvalidState(format!(
            "initial state must be normalized, ‖c‖² = {n0}"
        )));
    }
    let max_dt = max_step(params, grid);
    if dt.is_nan() || dt <= 0.0 || dt > max_dt {
        return Err(Error::StepSize { dt, max: max_dt });
    }
    if !t_end.is_finite() || t_end < 0.0 {
        return Err(Error::ParameterDomain {
            field: "t_end",
            value: t_end,
            reason: "must be finite and ≥ 0",
        });
    }

    let ratio = t_end / dt;
    let steps = if (ratio - ratio.round()).abs() < 1e-9 * ratio.max(1.0) {
        ratio.round() as usize
    } else {
        ratio.ceil() as usize
    };
    let h = if steps == 0 { dt } else { t_end / steps as f64 };

    let mut c = state0.as_slice().to_vec();
    let mut stepper = Stepper::new(&gen);

    let mut traj = Trajectory {
        omega_g: params.omega_g(),
        dt: h,
        times: Vec::with_capacity(steps + 1),
        p_e: Vec::with_capacity(steps + 1),
        p_c: Vec::with_capacity(steps + 1),
        p_bath: Vec::with_capacity(steps + 1),
        energy: Vec::with_capacity(steps + 1),
        snapshots: Vec::new(),
        final_state: state0.clone(),
    };

    let record = |traj: &mut Trajectory, t: f64, head: [f64; 2], p_bath: f64, energy: f64| {
        traj.times.push(t);
        traj.p_e.push(head[0]);
        traj.p_c.push(head[1]);
        traj.p_bath.push(p_bath);
        traj.energy.push(energy);
    };

    for step in 0..steps {
        let t = step as f64 * h;
        if options.snapshot_stride > 0 && step % options.snapshot_stride == 0 {
            traj.snapshots.push((t, WaveFunction { amps: c.clone() }));
        }
        let head = [c[0].norm_sqr(), c[1].norm_sqr()];
        let (p_bath, energy) = stepper.step(&mut c, h);
        record(&mut traj, t, head, p_bath, energy);
    }
    let (p_bath, energy) = stepper.observe(&c);
    record(
        &mut traj,
        steps as f64 * h,
        [c[0].norm_sqr(), c[1].norm_sqr()],
        p_bath,
        energy,
    );
    if options.snapshot_stride > 0 && steps % options.snapshot_stride == 0 {
        traj.snapshots
            .push((steps as f64 * h, WaveFunction { amps: c.clone() }));
    }
    traj.final_state = WaveFunction { amps: c };

    let drift = traj.max_norm_drift();
    if drift > MAX_RUN_DRIFT {
        return Err(Error::IntegrationDiagnostic {
            drift,
            limit: MAX_RUN_DRIFT,
        });
    }
    if t_end > 0.0 && drift / t_end > MAX_DRIFT_RATE {
        log::warn!(
            "norm drift rate {:e} per unit time exceeds {:e}; consider a smaller dt",
            drift / t_end,
            MAX_DRIFT_RATE
        );
    }
    Ok(traj)
}

/// Classical RK4 with each stage fused into a single pass over the bath.
struct Stepper<'a> {
    gen: &'a Generator,
    prev: Vec<C64>,
    next: Vec<C64>,
    acc: Vec<C64>,
}

#[inline(always)]
fn times_i(z: C64) -> C64 {
    C64::new(-z.im, z.re)
}

impl<'a> Stepper<'a> {
    fn new(gen: &'a Generator) -> Self {
        let zero = C64::new(0.0, 0.0);
        let n = gen.dim();
        Self {
            gen,
            prev: vec![zero; n],
            next: vec![zero; n],
            acc: vec![zero; n],
        }
    }

    /// Bath probability and `⟨c, M c⟩` without stepping.
    fn observe(&mut self, c: &[C64]) -> (f64, f64) {
        rhs(self.gen, c, &mut self.prev);
        let p_bath = c[2..].iter().map(|x| x.norm_sqr()).sum();
        // k = i·M·c, so ⟨c, M c⟩ = Σ Im(c̄·k)
        let energy = c
            .iter()
            .zip(&self.prev)
            .map(|(a, k)| (a.conj() * k).im)
            .sum();
        (p_bath, energy)
    }

    /// Advances `c` by `h`; returns the bath probability and energy of the
    /// state before the step.
    fn step(&mut self, c: &mut [C64], h: f64) -> (f64, f64) {
        let wg = self.gen.omega_g();
        let g = self.gen.couplings();
        let d = self.gen.bath_diagonal();
        let (c_head, c_bath) = c.split_at_mut(2);

        let n = c_bath.len();
        assert!(
            g.len() == n && d.len() == n && self.prev.len() == n + 2 && self.next.len() == n + 2
        );
        // four interleaved partial sums keep the hub reduction off the critical path
        let lanes = n - n % 4;

        // stage 1
        let mut energy;
        let mut p_bath = 0.0;
        {
            let (k_head, k_bath) = self.prev.split_at_mut(2);
            let (a_head, a_bath) = self.acc.split_at_mut(2);
            let y1 = c_head[1];
            let mut hub = [C64::new(0.0, 0.0); 4];
            let mut pb = [0.0; 4];
            let mut en = [0.0; 4];
            let mut body = |j: usize, l: usize| {
                let y = c_bath[j];
                let k = times_i(g[j] * y1 + d[j] * y);
                hub[l] += g[j] * y;
                pb[l] += y.norm_sqr();
                en[l] += y.re * k.im - y.im * k.re;
                k_bath[j] = k;
                a_bath[j] = k;
            };
            for base in (0..lanes).step_by(4) {
                for l in 0..4 {
                    body(base + l, l);
                }
            }
            for j in lanes..n {
                body(j, 0);
            }
            let hub = (hub[0] + hub[1]) + (hub[2] + hub[3]);
            p_bath += (pb[0] + pb[1]) + (pb[2] + pb[3]);
            energy = (en[0] + en[1]) + (en[2] + en[3]);
            k_head[0] = times_i(wg * c_head[1]);
            k_head[1] = times_i(wg * c_head[0] + hub);
            energy += (c_head[0].conj() * k_head[0]).im + (c_head[1].conj() * k_head[1]).im;
            a_head[0] = k_head[0];
            a_head[1] = k_head[1];
        }

        // stages 2 and 3
        for _ in 0..2 {
            let a = 0.5 * h;
            let (p_head, p_bath_k) = self.prev.split_at(2);
            let (n_head, n_bath) = self.next.split_at_mut(2);
            let (a_head, a_bath) = self.acc.split_at_mut(2);
            let y0 = c_head[0] + a * p_head[0];
            let y1 = c_head[1] + a * p_head[1];
            let mut hub = [C64::new(0.0, 0.0); 4];
            let mut body = |j: usize, l: usize| {
                let y = c_bath[j] + a * p_bath_k[j];
                let k = times_i(g[j] * y1 + d[j] * y);
                hub[l] += g[j] * y;
                n_bath[j] = k;
                a_bath[j] += 2.0 * k;
            };
            for base in (0..lanes).step_by(4) {
                for l in 0..4 {
                    body(base + l, l);
                }
            }
            for j in lanes..n {
                body(j, 0);
            }
            let hub = (hub[0] + hub[1]) + (hub[2] + hub[3]);
            n_head[0] = times_i(wg * y1);
            n_head[1] = times_i(wg * y0 + hub);
            a_head[0] += 2.0 * n_head[0];
            a_head[1] += 2.0 * n_head[1];
            std::mem::swap(&mut self.prev, &mut self.next);
        }

        // stage 4 and update
        let sixth = h / 6.0;
        let (p_head, p_bath_k) = self.prev.split_at(2);
        let (a_head, a_bath) = self.acc.split_at(2);
        let y0 = c_head[0] + h * p_head[0];
        let y1 = c_head[1] + h * p_head[1];
        let mut hub = [C64::new(0.0, 0.0); 4];
        let mut body = |j: usize, l: usize| {
            let y = c_bath[j] + h * p_bath_k[j];
            let k = times_i(g[j] * y1 + d[j] * y);
            hub[l] += g[j] * y;
            c_bath[j] += sixth * (a_bath[j] + k);
        };
        for base in (0..lanes).step_by(4) {
            for l in 0..4 {
                body(base + l, l);
            }
        }
        for j in lanes..n {
            body(j, 0);
        }
        let hub = (hub[0] + hub[1]) + (hub[2] + hub[3]);
        let k0 = times_i(wg * y1);
        let k1 = times_i(wg * y0 + hub);
        c_head[0] += sixth * (a_head[0] + k0);
        c_head[1] += sixth * (a_head[1] + k1);
        (p_bath, energy)
    }
}

/// How the emitter amplitude is adjusted to keep the norm fixed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum EmitterCorrection {
    /// `δc_e` parallel to `c̄_e`.
    #[default]
    Colinear,
    /// `δc_e = s·e^{iφ}` with the given phase `φ`.
    Phase(f64),
}

/// Shifts the cavity amplitude of the dark state by `delta_cc` and rescales
/// the emitter amplitude so that `|c_e|² + |c_c|²` is unchanged.
pub fn perturb_stationary(dark: &DarkState, delta_cc: C64) -> Result<WaveFunction> {
    perturb_stationary_with(dark, delta_cc, EmitterCorrection::Colinear)
}

pub fn perturb_stationary_with(
    dark: &DarkState,
    delta_cc: C64,
    correction: EmitterCorrection,
) -> Result<WaveFunction> {
    let alpha = dark.alpha_grid;
    if delta_cc.norm() >= alpha {
        return Err(Error::PerturbationDomain(format!(
            "|δc_c| = {} must be below α = {}",
            delta_cc.norm(),
            alpha
        )));
    }
    let ce = dark.psi.c_e();
    let cc = dark.psi.c_c();
    let cc_new = cc + delta_cc;
    let budget = ce.norm_sqr() + cc.norm_sqr() - cc_new.norm_sqr();
    if budget < 0.0 {
        return Err(Error::PerturbationDomain(format!(
            "|c̄_c + δc_c|² exceeds the two-level budget by {}",
            -budget
        )));
    }
    let delta_ce = match correction {
        EmitterCorrection::Colinear => {
            let mag = ce.norm();
            (budget.sqrt() - mag) * (ce / mag)
        }
        EmitterCorrection::Phase(phi) => {
            let u = C64::from_polar(1.0, phi);
            let b = (ce.conj() * u).re;
            let disc = b * b - (ce.norm_sqr() - budget);
            if disc < 0.0 {
                return Err(Error::PerturbationDomain(format!(
                    "no real δc_e along phase {phi} restores the norm"
                )));
            }
            let r1 = -b + disc.sqrt();
            let r2 = -b - disc.sqrt();
            let s = if r1.abs() <= r2.abs() { r1 } else { r2 };
            s * u
        }
    };
    let mut amps = dark.psi.as_slice().to_vec();
    amps[0] = ce + delta_ce;
    amps[1] = cc_new;
    let out = WaveFunction { amps };
    let drift = (out.norm_sqr() - dark.psi.norm_sqr()).abs();
    if drift > 1e-12 {
        return Err(Error::PerturbationDomain(format!(
            "perturbed norm differs by {drift:e}"
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_grid, build_params};
    use crate::stationary::dark_state;
    use std::f64::consts::PI;

    fn small_system(dphi: f64) -> (PhysicalParams, ModeGrid) {
        let p = build_params(1.0, 1, 0.5, dphi).unwrap();
        let g = build_grid(&p, 12.0, 300).unwrap();
        (p, g)
    }

    #[test]
    fn derivative_of_excited_state_reads_generator_column() {
        let (p, g) = small_system(0.0);
        let s = WaveFunction::excited(g.len());
        let d = derivative(&s, &p, &g).unwrap();
        assert_eq!(d.c_e(), C64::new(0.0, 0.0));
        assert_eq!(d.c_c(), C64::new(0.0, 1.0));
        assert!(d.bath().iter().all(|c| *c == C64::new(0.0, 0.0)));
    }

    #[test]
    fn derivative_of_dark_state_is_phase_rotation() {
        let (p, g) = small_system(PI);
        let dark = dark_state(&p, &g);
        let d = derivative(&dark.psi, &p, &g).unwrap();
        let err: f64 = d
            .as_slice()
            .iter()
            .zip(dark.psi.as_slice())
            .map(|(a, b)| (a - C64::new(0.0, -1.0) * b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-12, "err = {err}");
    }

    #[test]
    fn derivative_dimension_mismatch() {
        let (p, g) = small_system(0.0);
        let s = WaveFunction::excited(3);
        assert!(matches!(
            derivative(&s, &p, &g),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn zero_duration_gives_single_sample() {
        let (p, g) = small_system(0.0);
        let s = WaveFunction::excited(g.len());
        let tr = integrate(&s, &p, &g, 0.0, 0.001).unwrap();
        assert_eq!(tr.len(), 1);
        assert_eq!(tr.p_e[0], 1.0);
        assert_eq!(tr.p_c[0], 0.0);
        assert_eq!(tr.p_bath[0], 0.0);
    }

    #[test]
    fn step_size_is_checked() {
        let (p, g) = small_system(0.0);
        let s = WaveFunction::excited(g.len());
        let max = max_step(&p, &g);
        assert!((max - 0.05 / 12.0).abs() < 1e-15);
        assert!(matches!(
            integrate(&s, &p, &g, 1.0, 1.01 * max),
            Err(Error::StepSize { .. })
        ));
        assert!(integrate(&s, &p, &g, 1.0, max).is_ok());
    }

    #[test]
    fn unnormalized_input_is_rejected() {
        let (p, g) = small_system(0.0);
        let mut s = WaveFunction::excited(g.len());
        s.as_mut_slice()[0] = C64::new(2.0, 0.0);
        assert!(matches!(
            integrate(&s, &p, &g, 1.0, 0.001),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn snapshots_follow_stride() {
        let (p, g) = small_system(0.0);
        let s = WaveFunction::excited(g.len());
        let tr = integrate_with_options(
            &s,
            &p,
            &g,
            0.4,
            0.004,
            IntegrateOptions {
                snapshot_stride: 25,
            },
        )
        .unwrap();
        assert_eq!(tr.len(), 101);
        let times: Vec<f64> = tr.snapshots.iter().map(|(t, _)| *t).collect();
        assert_eq!(times.len(), 5);
        assert!((times[4] - 0.4).abs() < 1e-12);
        assert_eq!(&tr.snapshots[4].1, &tr.final_state);
    }

    #[test]
    fn perturbation_identity_and_norm() {
        let (p, g) = small_system(PI);
        let dark = dark_state(&p, &g);
        let same = perturb_stationary(&dark, C64::new(0.0, 0.0)).unwrap();
        for (a, b) in same.as_slice().iter().zip(dark.psi.as_slice()) {
            assert!((a - b).norm() < 1e-16);
        }

        let a = dark.alpha_grid;
        let s = perturb_stationary(&dark, C64::new(0.01 * a, 0.0)).unwrap();
        assert!((s.p_e() + s.p_c() - 2.0 * a * a).abs() < 1e-14);
        assert_eq!(s.bath(), dark.psi.bath());
    }

    #[test]
    fn perturbation_domain_errors() {
        let (p, g) = small_system(PI);
        let dark = dark_state(&p, &g);
        let a = dark.alpha_grid;
        assert!(matches!(
            perturb_stationary(&dark, C64::new(1.5 * a, 0.0)),
            Err(Error::PerturbationDomain(_))
        ));
        // a phase orthogonal to c̄_e with a large budget deficit has no real root
        assert!(matches!(
            perturb_stationary_with(
                &dark,
                C64::new(0.9 * a, 0.0),
                EmitterCorrection::Phase(PI / 2.0)
            ),
            Err(Error::PerturbationDomain(_))
        ));
    }

    #[test]
    fn perturbation_with_fixed_phase_keeps_norm() {
        let (p, g) = small_system(PI);
        let dark = dark_state(&p, &g);
        let a = dark.alpha_grid;
        let s = perturb_stationary_with(
            &dark,
            C64::new(0.0, 0.02 * a),
            EmitterCorrection::Phase(0.3),
        )
        .unwrap();
        assert!((s.p_e() + s.p_c() - 2.0 * a * a).abs() < 1e-14);
        let de = s.c_e() - dark.psi.c_e();
        assert!((de.arg() - 0.3).abs() < 1e-12 || (de.arg() - 0.3 + PI).abs() < 1e-12);
    }
}
