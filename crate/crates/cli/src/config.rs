//! Run configuration: a flat `key = value` TOML table with defaults for
//! every field. Command-line flags override file values.

use std::path::Path;

use clap::Args;
use qfeedback::spectrum::Kernel;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const FORMAT_VERSION: u32 = 1;

/// Every input of every subcommand. Optional fields are derived from the
/// physics when absent and filled in before being echoed to a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub omega_g: f64,
    pub n: u32,
    pub ratio: f64,
    pub delta_phi: f64,
    pub kernel: Kernel,

    pub half_bandwidth: Option<f64>,
    pub num_pairs: Option<usize>,

    pub dt: Option<f64>,
    /// Defaults to `10τ`.
    pub t_end: Option<f64>,
    pub snapshot_stride: usize,
    /// `dark` or `excited`.
    pub initial: String,
    /// Real shift of the cavity amplitude in units of `α`.
    pub perturbation: f64,
    /// Phase of the emitter correction; colinear with `c̄_e` when absent.
    pub perturbation_phase: Option<f64>,

    pub weight_threshold: f64,

    pub window_min: Option<f64>,
    pub window_max: Option<f64>,
    pub scan_points: Option<usize>,

    pub log2_r_min: f64,
    pub log2_r_max: f64,
    pub log2_r_step: f64,
    /// `fig5a`–`fig5d` or `fig6`; overrides `n` and `delta_phi` for `sweep`.
    pub figure: Option<String>,
    pub n_max: u32,

    pub seed: u64,
    pub format_version: u32,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            omega_g: 1.0,
            n: 1,
            ratio: 0.5,
            delta_phi: 0.0,
            kernel: Kernel::Sin,
            half_bandwidth: None,
            num_pairs: None,
            dt: None,
            t_end: None,
            snapshot_stride: 0,
            initial: "dark".into(),
            perturbation: 0.0,
            perturbation_phase: None,
            weight_threshold: 1e-3,
            window_min: None,
            window_max: None,
            scan_points: None,
            log2_r_min: -6.0,
            log2_r_max: 6.0,
            log2_r_step: 0.0625,
            figure: None,
            n_max: 4,
            seed: 1,
            format_version: FORMAT_VERSION,
        }
    }
}

/// Flag overrides, one per config field.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long, global = true)]
    pub omega_g: Option<f64>,
    #[arg(long, short = 'n', global = true)]
    pub n: Option<u32>,
    /// Ratio R = κ/(2ω_g) of feedback strength to coupling.
    #[arg(long, short = 'r', global = true, allow_negative_numbers = true)]
    pub ratio: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub delta_phi: Option<f64>,
    #[arg(long, global = true)]
    pub kernel: Option<Kernel>,
    #[arg(long, global = true)]
    pub half_bandwidth: Option<f64>,
    #[arg(long, global = true)]
    pub num_pairs: Option<usize>,
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    #[arg(long, global = true)]
    pub t_end: Option<f64>,
    #[arg(long, global = true)]
    pub snapshot_stride: Option<usize>,
    #[arg(long, global = true)]
    pub initial: Option<String>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub perturbation: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub perturbation_phase: Option<f64>,
    #[arg(long, global = true)]
    pub weight_threshold: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub window_min: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub window_max: Option<f64>,
    #[arg(long, global = true)]
    pub scan_points: Option<usize>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub log2_r_min: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub log2_r_max: Option<f64>,
    #[arg(long, global = true)]
    pub log2_r_step: Option<f64>,
    #[arg(long, global = true)]
    pub figure: Option<String>,
    #[arg(long, global = true)]
    pub n_max: Option<u32>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

macro_rules! apply {
    ($cfg:ident, $ov:ident; $($f:ident),*; $($o:ident),*) => {
        $(if let Some(v) = $ov.$f.clone() { $cfg.$f = v; })*
        $(if $ov.$o.is_some() { $cfg.$o = $ov.$o.clone(); })*
    };
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {}", path.display(), e.message())))
    }

    pub fn apply(&mut self, ov: &Overrides) {
        apply!(self, ov;
            omega_g, n, ratio, delta_phi, kernel, snapshot_stride, initial, perturbation,
            weight_threshold, log2_r_min, log2_r_max, log2_r_step, n_max, seed;
            half_bandwidth, num_pairs, dt, t_end, perturbation_phase, window_min, window_max,
            scan_points, figure);
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.format_version != FORMAT_VERSION {
            return Err(CliError::config(format!(
                "format_version {} is not supported (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        if !matches!(self.initial.as_str(), "dark" | "excited") {
            return Err(CliError::config(format!(
                "initial = `{}` (expected dark or excited)",
                self.initial
            )));
        }
        if let Some(f) = &self.figure {
            if figure_preset(f).is_none() {
                return Err(CliError::config(format!(
                    "figure = `{f}` (expected fig5a, fig5b, fig5c, fig5d or fig6)"
                )));
            }
        }
        if self.log2_r_step.is_nan()
            || self.log2_r_step <= 0.0
            || self.log2_r_max.is_nan()
            || self.log2_r_max < self.log2_r_min
        {
            return Err(CliError::config(
                "log2_r grid must have step > 0 and max ≥ min".into(),
            ));
        }
        if !(self.weight_threshold > 0.0 && self.weight_threshold <= 1.0) {
            return Err(CliError::config(
                "weight_threshold must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// `(n values, Δφ)` of a figure preset.
pub fn figure_preset(name: &str) -> Option<(Vec<u32>, f64)> {
    use std::f64::consts::PI;
    Some(match name {
        "fig5a" => (vec![1], 0.0),
        "fig5b" => (vec![1], 0.5 * PI),
        "fig5c" => (vec![1], PI),
        "fig5d" => (vec![1], 1.5 * PI),
        "fig6" => (vec![1, 2, 3, 4], 0.0),
        _ => return None,
    })
}
