//! Per-frame compute and energy accounting.
//!
//! Compute per frame is the primary detector's cost plus the secondary
//! detector's cost once per processed region:
//!
//! ```text
//! gflops = cl_primary + cl_secondary · n_rois
//! energy = α + β + γ·fs + gflops·10⁹ · fps / (ee_hw·10¹²)
//! ```
//!
//! The compute term is kept in the form the energy model is stated in:
//! multiplying per-frame operations by the frame rate gives a power (W), which
//! the model nevertheless adds to the per-frame sensor energies (J). With the
//! default constants this yields 0.431 for 66.4 GFLOPs. [`EnergyMode::PerFrame`]
//! offers the dimensionally consistent alternative (J per frame, no `fps`
//! factor) for sensitivity studies.

use alloc::vec::Vec;

/// Sensor, transfer and accelerator constants.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct EnergyParams {
    /// Camera capture energy, J/frame.
    pub alpha: f64,
    /// Radar capture energy, J/frame.
    pub beta: f64,
    /// Transfer energy, J/Mb.
    pub gamma: f64,
    /// Combined camera + radar frame size, Mb.
    pub frame_size_mb: f64,
    pub fps: f64,
    /// Accelerator efficiency, TOPS/W.
    pub ee_hw: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self {
            alpha: 0.020,
            beta: 0.92,
            gamma: 0.0039,
            frame_size_mb: 34.5,
            fps: 20.0,
            ee_hw: 3.08,
        }
    }
}

impl EnergyParams {
    pub fn validate(&self) -> Result<(), &'static str> {
        let all = [
            self.alpha,
            self.beta,
            self.gamma,
            self.frame_size_mb,
            self.fps,
            self.ee_hw,
        ];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err("energy parameters must be finite and positive")
        }
    }

    /// `α + β + γ·fs`, independent of the detectors.
    pub fn sensing_energy(&self) -> f64 {
        self.alpha + self.beta + self.gamma * self.frame_size_mb
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum EnergyMode {
    /// Compute term multiplied by `fps`, as the energy model is written.
    #[default]
    FpsScaled,
    /// Compute term is energy per frame (no `fps` factor).
    PerFrame,
}

/// `cl_primary + cl_secondary · n_rois`, in GFLOPs.
pub fn frame_gflops(cl_primary: f64, cl_secondary: f64, n_rois: usize) -> f64 {
    cl_primary + cl_secondary * n_rois as f64
}

/// The compute term alone.
pub fn compute_energy(params: &EnergyParams, total_gflops: f64, mode: EnergyMode) -> f64 {
    let ops_per_joule = params.ee_hw * 1e12;
    match mode {
        EnergyMode::FpsScaled => total_gflops * 1e9 * params.fps / ops_per_joule,
        EnergyMode::PerFrame => total_gflops * 1e9 / ops_per_joule,
    }
}

/// Energy per frame exactly as the model is written ([`EnergyMode::FpsScaled`]).
pub fn frame_energy(params: &EnergyParams, total_gflops: f64) -> f64 {
    frame_energy_with(params, total_gflops, EnergyMode::FpsScaled)
}

pub fn frame_energy_with(params: &EnergyParams, total_gflops: f64, mode: EnergyMode) -> f64 {
    params.sensing_energy() + compute_energy(params, total_gflops, mode)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FrameCost {
    pub frame_id: u64,
    pub n_rois: usize,
    pub gflops: f64,
    pub energy_j: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CostReport {
    pub cl_primary: f64,
    pub cl_secondary: f64,
    pub energy_mode: EnergyMode,
    pub per_frame: Vec<FrameCost>,
    pub per_frame_gflops: Vec<f64>,
    pub mean_gflops: f64,
    pub mean_energy_j: f64,
    pub mean_n_rois: f64,
}

/// Builds the cost report from `(frame_id, n_rois)` pairs.
pub fn cost_report(
    cl_primary: f64,
    cl_secondary: f64,
    frames: &[(u64, usize)],
    params: &EnergyParams,
    mode: EnergyMode,
) -> CostReport {
    let per_frame: Vec<FrameCost> = frames
        .iter()
        .map(|&(frame_id, n_rois)| {
            let gflops = frame_gflops(cl_primary, cl_secondary, n_rois);
            FrameCost {
                frame_id,
                n_rois,
                gflops,
                energy_j: frame_energy_with(params, gflops, mode),
            }
        })
        .collect();
    let n = per_frame.len().max(1) as f64;
    let mean = |f: fn(&FrameCost) -> f64| per_frame.iter().map(f).sum::<f64>() / n;
    CostReport {
        cl_primary,
        cl_secondary,
        energy_mode: mode,
        per_frame_gflops: per_frame.iter().map(|c| c.gflops).collect(),
        mean_gflops: mean(|c| c.gflops),
        mean_energy_j: mean(|c| c.energy_j),
        mean_n_rois: mean(|c| c.n_rois as f64),
        per_frame,
    }
}
