//! The one-excitation dark state and its stationarity on the discrete grid.

use num_complex::Complex64 as C64;

use crate::dynamics::{apply_generator, WaveFunction};
use crate::error::Result;
use crate::model::{build_grid, Generator, ModeGrid, PhysicalParams};

/// Singlet stationary state `c_e = −α`, `c_c = α`, `c_j = α·g_j/δ_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DarkState {
    pub psi: WaveFunction,
    /// Normalization computed on the grid.
    pub alpha_grid: f64,
    /// Continuum value `(2 + τκ)^(-1/2)`.
    pub alpha_closed: f64,
    /// Set when `Δφ ∉ {0, π}`; the formal state is then not an eigenvector.
    pub approximate: bool,
}

pub fn dark_state(params: &PhysicalParams, grid: &ModeGrid) -> DarkState {
    let profile: Vec<f64> = grid
        .couplings()
        .iter()
        .zip(grid.detunings())
        .map(|(g, d)| g / d)
        .collect();
    let bath_weight: f64 = profile.iter().map(|x| x * x).sum();
    let alpha = (2.0 + bath_weight).powf(-0.5);
    let bath: Vec<C64> = profile.iter().map(|x| C64::new(alpha * x, 0.0)).collect();
    DarkState {
        psi: WaveFunction::new(C64::new(-alpha, 0.0), C64::new(alpha, 0.0), &bath),
        alpha_grid: alpha,
        alpha_closed: params.alpha_closed(),
        approximate: !params.is_symmetric_phase(),
    }
}

/// `‖M·v + ω_g·v‖ / ‖v‖`: zero when `v` is stationary up to a global phase.
pub fn stationarity_residual(state: &DarkState, params: &PhysicalParams, grid: &ModeGrid) -> f64 {
    let gen = Generator::new(params, grid);
    residual_with(&state.psi, &gen)
}

pub(crate) fn residual_with(v: &WaveFunction, gen: &Generator) -> f64 {
    let mut mv = vec![C64::new(0.0, 0.0); v.dim()];
    apply_generator(gen, v.as_slice(), &mut mv);
    let wg = gen.omega_g();
    let r: f64 = mv
        .iter()
        .zip(v.as_slice())
        .map(|(a, b)| (a + wg * b).norm_sqr())
        .sum();
    r.sqrt() / v.norm()
}

/// One level of a grid refinement study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementLevel {
    pub half_bandwidth: f64,
    pub num_pairs: usize,
    pub alpha_grid: f64,
    pub alpha_closed: f64,
    pub residual: f64,
}

impl RefinementLevel {
    pub fn relative_error(&self) -> f64 {
        (self.alpha_grid - self.alpha_closed).abs() / self.alpha_closed
    }
}

/// Dark-state normalization on grids `(2^k·W, 2^k·P)` for `k = 0..levels`.
///
/// Both `W` and `P` are doubled, so the spacing stays fixed while the
/// truncated tails shrink.
pub fn refinement_study(
    params: &PhysicalParams,
    half_bandwidth: f64,
    num_pairs: usize,
    levels: usize,
) -> Result<Vec<RefinementLevel>> {
    (0..levels)
        .map(|k| {
            let scale = 1usize << k;
            let w = half_bandwidth * scale as f64;
            let p = num_pairs * scale;
            let grid = build_grid(params, w, p)?;
            let dark = dark_state(params, &grid);
            Ok(RefinementLevel {
                half_bandwidth: w,
                num_pairs: p,
                alpha_grid: dark.alpha_grid,
                alpha_closed: dark.alpha_closed,
                residual: stationarity_residual(&dark, params, &grid),
            })
        })
        .collect()
}
