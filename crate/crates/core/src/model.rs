//! System constants and the discretized external-cavity mode bath.
//!
//! Units are nondimensional: the speed of light is 1 and rates are usually
//! quoted in units of the emitter–microcavity coupling `ω_g`. The emitter
//! frequency `ω₀` never appears explicitly; it enters only through the
//! round-trip feedback phase via `ω₀τ = Δφ + π (mod 2π)`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants of the emitter / microcavity / half-cavity system.
///
/// Only `ω_g`, `n`, `R` and `Δφ` are inputs; everything else is derived on
/// construction. The round-trip delay is always `τ = n·τ_g`, so the
/// commensurability condition holds by construction.
///
/// `κ` is the damping rate of the microcavity field amplitude (the rate that
/// appears in `G₀`, in the dark-state normalization and in the characteristic
/// equation). The ratio `R` is defined against the energy damping rate `2κ`,
/// `R = 2κ/(4g)`, so `κ = 2·R·ω_g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    omega_g: f64,
    n: u32,
    ratio: f64,
    delta_phi: f64,
    kappa: f64,
    tau_g: f64,
    tau: f64,
    g0: f64,
}

/// Reduces a phase into `[0, 2π)`.
pub fn normalize_phase(phi: f64) -> f64 {
    let p = phi.rem_euclid(TAU);
    if p >= TAU {
        0.0
    } else {
        p
    }
}

impl PhysicalParams {
    pub fn new(omega_g: f64, n: u32, ratio: f64, delta_phi: f64) -> Result<Self> {
        if !omega_g.is_finite() || omega_g <= 0.0 {
            return Err(Error::ParameterDomain {
                field: "omega_g",
                value: omega_g,
                reason: "must be finite and > 0",
            });
        }
        if n == 0 {
            return Err(Error::ParameterDomain {
                field: "n",
                value: 0.0,
                reason: "commensurability index must be ≥ 1",
            });
        }
        if !ratio.is_finite() || ratio <= 0.0 {
            return Err(Error::ParameterDomain {
                field: "R",
                value: ratio,
                reason: "must be finite and > 0",
            });
        }
        if !delta_phi.is_finite() {
            return Err(Error::ParameterDomain {
                field: "delta_phi",
                value: delta_phi,
                reason: "must be finite",
            });
        }
        let kappa = 2.0 * ratio * omega_g;
        let tau_g = TAU / omega_g;
        let tau = f64::from(n) * tau_g;
        let g0 = (2.0 * kappa / PI).sqrt();
        Ok(Self {
            omega_g,
            n,
            ratio,
            delta_phi: normalize_phase(delta_phi),
            kappa,
            tau_g,
            tau,
            g0,
        })
    }

    pub fn omega_g(&self) -> f64 {
        self.omega_g
    }

    /// Commensurability index, `τ = n·τ_g`.
    pub fn n(&self) -> u32 {
        self.n
    }

    /// Damping-to-coupling ratio `R`.
    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    /// Round-trip feedback phase in `[0, 2π)`.
    pub fn delta_phi(&self) -> f64 {
        self.delta_phi
    }

    /// Microcavity field damping rate.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Rabi period `2π/ω_g`.
    pub fn tau_g(&self) -> f64 {
        self.tau_g
    }

    /// External-cavity round-trip delay.
    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Mirror distance `L = τ/2`.
    pub fn mirror_distance(&self) -> f64 {
        0.5 * self.tau
    }

    /// Coupling prefactor `G₀ = sqrt(2κ/π)`.
    pub fn g0(&self) -> f64 {
        self.g0
    }

    /// Continuum dark-state amplitude `(2 + τκ)^(-1/2)`.
    pub fn alpha_closed(&self) -> f64 {
        (2.0 + self.tau * self.kappa).powf(-0.5)
    }

    pub fn with_ratio(&self, ratio: f64) -> Result<Self> {
        Self::new(self.omega_g, self.n, ratio, self.delta_phi)
    }

    pub fn with_delta_phi(&self, delta_phi: f64) -> Result<Self> {
        Self::new(self.omega_g, self.n, self.ratio, delta_phi)
    }

    /// True when `Δφ` is 0 or π, the two phases for which the formal dark
    /// state is an exact eigenvector on a symmetric grid.
    pub fn is_symmetric_phase(&self) -> bool {
        let tol = 1e-12;
        let d = self.delta_phi;
        d < tol || (TAU - d) < tol || (d - PI).abs() < tol
    }
}

pub fn build_params(omega_g: f64, n: u32, ratio: f64, delta_phi: f64) -> Result<PhysicalParams> {
    PhysicalParams::new(omega_g, n, ratio, delta_phi)
}

/// Staggered, exactly antisymmetric detuning grid with its coupling amplitudes.
///
/// Detunings are measured from `ω₀ + ω_g`. The grid holds `2P` points
/// `±(j − ½)·Δδ`, so the resonance `δ = 0` is never sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeGrid {
    half_bandwidth: f64,
    num_pairs: usize,
    spacing: f64,
    detunings: Vec<f64>,
    couplings: Vec<f64>,
}

impl ModeGrid {
    pub fn half_bandwidth(&self) -> f64 {
        self.half_bandwidth
    }

    pub fn num_pairs(&self) -> usize {
        self.num_pairs
    }

    /// Number of bath modes, `2P`.
    pub fn len(&self) -> usize {
        self.detunings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detunings.is_empty()
    }

    /// Grid spacing `Δδ = W/P`.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn detunings(&self) -> &[f64] {
        &self.detunings
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    /// Index of the mode at `−δ_j`.
    pub fn mirror(&self, j: usize) -> usize {
        self.detunings.len() - 1 - j
    }

    /// Dimension of the one-excitation state vector, `2P + 2`.
    pub fn state_dim(&self) -> usize {
        self.detunings.len() + 2
    }
}

/// Upper bound on the grid spacing: at least four points per half free
/// spectral range.
pub fn max_spacing(params: &PhysicalParams) -> f64 {
    PI / (4.0 * params.tau())
}

/// Lower bound on the half-bandwidth.
pub fn min_half_bandwidth(params: &PhysicalParams) -> f64 {
    (8.0 * params.omega_g()).max(4.0 * params.kappa())
}

pub fn build_grid(
    params: &PhysicalParams,
    half_bandwidth: f64,
    num_pairs: usize,
) -> Result<ModeGrid> {
    if !half_bandwidth.is_finite() || half_bandwidth <= 0.0 {
        return Err(Error::ParameterDomain {
            field: "half_bandwidth",
            value: half_bandwidth,
            reason: "must be finite and > 0",
        });
    }
    if num_pairs == 0 {
        return Err(Error::ParameterDomain {
            field: "num_pairs",
            value: 0.0,
            reason: "must be ≥ 1",
        });
    }
    let spacing = half_bandwidth / num_pairs as f64;
    let bound = max_spacing(params);
    if spacing >= bound {
        return Err(Error::GridResolution { spacing, bound });
    }
    let required = min_half_bandwidth(params);
    if half_bandwidth < required {
        return Err(Error::GridBandwidth {
            half_bandwidth,
            required,
        });
    }

    let positive: Vec<f64> = (1..=num_pairs)
        .map(|j| (j as f64 - 0.5) * spacing)
        .collect();
    let detunings: Vec<f64> = positive
        .iter()
        .rev()
        .map(|d| -d)
        .chain(positive.iter().copied())
        .collect();
    let couplings = build_couplings(params, &detunings, spacing);
    Ok(ModeGrid {
        half_bandwidth,
        num_pairs,
        spacing,
        detunings,
        couplings,
    })
}

/// Smallest grid satisfying both grid constraints with the default
/// resolution (`W = 12·ω_g`, `P = 1500`) as a floor.
pub fn default_grid_size(params: &PhysicalParams) -> (f64, usize) {
    let w = (12.0 * params.omega_g()).max(min_half_bandwidth(params));
    // 10% margin under the spacing bound
    let p_min = (w / (0.9 * max_spacing(params))).ceil() as usize;
    (w, p_min.max(1500))
}

/// Discrete coupling amplitudes `g_j = G₀·sin(θ_j)·sqrt(Δδ)`, with
/// `θ_j = (Δφ + π)/2 + δ_j·τ/2` standing in for `k_j·L`.
pub fn build_couplings(params: &PhysicalParams, detunings: &[f64], spacing: f64) -> Vec<f64> {
    let base = 0.5 * (params.delta_phi() + PI);
    let half_tau = 0.5 * params.tau();
    let scale = params.g0() * spacing.sqrt();
    detunings
        .iter()
        .map(|d| scale * (base + d * half_tau).sin())
        .collect()
}

/// Real symmetric generator `M` of the one-excitation dynamics, `dc/dt = i·M·c`.
///
/// The state is ordered `[c_e, c_c, c_1, …, c_2P]` in the frame rotating at
/// `ω₀`. `M` is an arrowhead matrix with the microcavity as hub:
/// `M[e,c] = ω_g`, `M[c,j] = g_j`, `M[j,j] = −(δ_j + ω_g)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    omega_g: f64,
    couplings: Vec<f64>,
    diagonal: Vec<f64>,
}

impl Generator {
    pub fn new(params: &PhysicalParams, grid: &ModeGrid) -> Self {
        let omega_g = params.omega_g();
        Self {
            omega_g,
            couplings: grid.couplings().to_vec(),
            diagonal: grid.detunings().iter().map(|d| -(d + omega_g)).collect(),
        }
    }

    /// Generator with explicit bath couplings and diagonal.
    pub fn from_parts(omega_g: f64, couplings: Vec<f64>, diagonal: Vec<f64>) -> Self {
        assert_eq!(
            couplings.len(),
            diagonal.len(),
            "coupling/diagonal length mismatch"
        );
        Self {
            omega_g,
            couplings,
            diagonal,
        }
    }

    pub fn dim(&self) -> usize {
        self.couplings.len() + 2
    }

    pub fn omega_g(&self) -> f64 {
        self.omega_g
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    /// Bath diagonal entries `M[j,j]`.
    pub fn bath_diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    /// Largest absolute entry.
    pub fn max_abs_entry(&self) -> f64 {
        self.couplings
            .iter()
            .chain(self.diagonal.iter())
            .fold(self.omega_g.abs(), |m, x| m.max(x.abs()))
    }

    /// Dense row-major copy of `M`.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut m = vec![vec![0.0; n]; n];
        m[0][1] = self.omega_g;
        m[1][0] = self.omega_g;
        for (j, (&g, &d)) in self.couplings.iter().zip(&self.diagonal).enumerate() {
            m[1][j + 2] = g;
            m[j + 2][1] = g;
            m[j + 2][j + 2] = d;
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_direct_substitution() {
        let p = build_params(1.0, 1, 0.5, 0.0).unwrap();
        assert_eq!(p.kappa(), 1.0);
        assert_eq!(p.tau(), TAU);
        assert_eq!(p.tau_g(), TAU);
        assert!((p.g0() - (2.0 / PI).sqrt()).abs() < 1e-15);
        assert_eq!(p.mirror_distance(), PI);
    }

    #[test]
    fn params_fig6_n4() {
        let p = build_params(1.0, 4, 0.039, 0.0).unwrap();
        assert!((p.tau() - 8.0 * PI).abs() < 1e-14);
        assert!((p.kappa() - 0.078).abs() < 1e-15);
    }

    #[test]
    fn params_domain_errors() {
        assert!(matches!(
            build_params(1.0, 1, 0.0, 0.0),
            Err(Error::ParameterDomain { field: "R", .. })
        ));
        assert!(matches!(
            build_params(0.0, 1, 0.5, 0.0),
            Err(Error::ParameterDomain {
                field: "omega_g",
                ..
            })
        ));
        assert!(matches!(
            build_params(1.0, 0, 0.5, 0.0),
            Err(Error::ParameterDomain { field: "n", .. })
        ));
        assert!(build_params(-1.0, 1, 0.5, 0.0).is_err());
    }

    #[test]
    fn phase_is_normalized() {
        let p = build_params(1.0, 1, 0.5, -PI / 2.0).unwrap();
        assert!((p.delta_phi() - 1.5 * PI).abs() < 1e-15);
        let p = build_params(1.0, 1, 0.5, TAU).unwrap();
        assert_eq!(p.delta_phi(), 0.0);
        let p = build_params(1.0, 1, 0.5, -1e-300).unwrap();
        assert!(p.delta_phi() >= 0.0 && p.delta_phi() < TAU);
    }

    #[test]
    fn grid_resolution_checks() {
        let p1 = build_params(1.0, 1, 0.5, 0.0).unwrap();
        let g = build_grid(&p1, 12.0, 600).unwrap();
        assert!((g.spacing() - 0.02).abs() < 1e-15);
        assert_eq!(g.len(), 1200);
        assert!(matches!(
            build_grid(&p1, 12.0, 20),
            Err(Error::GridResolution { .. })
        ));

        let p4 = build_params(1.0, 4, 0.5, 0.0).unwrap();
        // π/(4·8π) = 1/32
        assert!((max_spacing(&p4) - 0.03125).abs() < 1e-15);
        assert!(build_grid(&p4, 12.0, 600).is_ok());
        assert!(matches!(
            build_grid(&p4, 12.0, 200),
            Err(Error::GridResolution { spacing, bound }) if spacing > bound
        ));
    }

    #[test]
    fn grid_bandwidth_check() {
        let p = build_params(1.0, 1, 8.0, 0.0).unwrap();
        assert!(matches!(
            build_grid(&p, 12.0, 1500),
            Err(Error::GridBandwidth { required, .. }) if required == 64.0
        ));
        let (w, pairs) = default_grid_size(&p);
        assert_eq!(w, 64.0);
        assert!(build_grid(&p, w, pairs).is_ok());
    }

    #[test]
    fn grid_is_bitwise_antisymmetric_and_increasing() {
        let p = build_params(1.0, 2, 0.3, 1.0).unwrap();
        let g = build_grid(&p, 12.0, 777).unwrap();
        let d = g.detunings();
        for j in 0..d.len() {
            assert_eq!(d[j], -d[g.mirror(j)]);
        }
        assert!(d.windows(2).all(|w| w[0] < w[1]));
        assert!(d.iter().all(|&x| x != 0.0));
        assert_eq!(d[0], -12.0 + 0.5 * g.spacing());
    }

    #[test]
    fn coupling_node_and_antinode_at_resonance() {
        // Δφ = π: sin(π + x) = −sin(x), a node at δ = 0
        let p = build_params(1.0, 1, 0.5, PI).unwrap();
        let g = build_grid(&p, 12.0, 1500).unwrap();
        let j0 = g.num_pairs();
        let d0 = g.detunings()[j0];
        let expected = -p.g0() * g.spacing().sqrt() * (d0 * p.tau() / 2.0).sin();
        assert!((g.couplings()[j0] - expected).abs() < 1e-15);
        assert!(g.couplings()[j0].abs() < 0.03 * p.g0() * g.spacing().sqrt());

        // Δφ = 0: cos-like, antinode at δ = 0
        let p = build_params(1.0, 1, 0.5, 0.0).unwrap();
        let g = build_grid(&p, 12.0, 1500).unwrap();
        let s = g.couplings()[j0] / (p.g0() * g.spacing().sqrt());
        assert!((s.abs() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn coupling_node_at_rabi_sideband() {
        let p = build_params(1.0, 1, 0.5, PI).unwrap();
        let theta = 0.5 * (p.delta_phi() + PI) + 1.0 * p.tau() / 2.0;
        assert!(theta.sin().abs() < 1e-15);
        let c = build_couplings(&p, &[1.0], 1.0);
        assert!(c[0].abs() < 1e-15);
    }
}
