//! Batch evaluation of a sequence.

use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use rayon::prelude::*;
use roifuse_core::cost::{cost_report, CostReport, EnergyMode, EnergyParams};
use roifuse_core::detector::{Detection, DetectorError, Region};
use roifuse_core::fusion::{
    aggregate, check_detectors, primary_only_frame, roi_regions, FuseError,
};
use roifuse_core::metrics::{evaluate, FrameTruth, MetricsReport};
use roifuse_core::rng::hash_key;
use roifuse_core::{
    Detector, DetectorProfile, FlopsCatalog, Frame, FusedFrameResult, FusionConfig,
    SyntheticDetector,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `name:input_size`, e.g. `yolov3-spp:416`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectorSpec {
    pub name: String,
    pub input_size: u32,
}

impl DetectorSpec {
    pub fn new(name: impl Into<String>, input_size: u32) -> Self {
        Self {
            name: name.into(),
            input_size,
        }
    }
}

impl FromStr for DetectorSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (name, size) = s
            .rsplit_once(':')
            .ok_or_else(|| format!("expected NAME:INPUT_SIZE, got `{s}`"))?;
        let input_size: u32 = size
            .parse()
            .map_err(|_| format!("input size `{size}` is not a positive integer"))?;
        if name.is_empty() || input_size == 0 {
            return Err(format!("expected NAME:INPUT_SIZE, got `{s}`"));
        }
        Ok(Self::new(name, input_size))
    }
}

impl fmt::Display for DetectorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.name, self.input_size)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Fusion,
    PrimaryOnly,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "fusion" => Ok(Mode::Fusion),
            "primary-only" => Ok(Mode::PrimaryOnly),
            _ => Err(format!(
                "unknown mode `{s}` (expected fusion or primary-only)"
            )),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Fusion => "fusion",
            Mode::PrimaryOnly => "primary-only",
        })
    }
}

/// Everything that determines the outcome of a run, apart from the frames.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub primary: DetectorSpec,
    pub secondary: DetectorSpec,
    /// Input sizes here are overwritten from `primary` / `secondary`.
    pub fusion: FusionConfig,
    pub match_iou: f64,
    pub mode: Mode,
    pub seed: u64,
    /// Behavior of the synthetic primary; its input size and seed are overwritten.
    pub primary_profile: DetectorProfile,
    pub secondary_profile: DetectorProfile,
    pub energy: EnergyParams,
    pub energy_mode: EnergyMode,
    pub catalog: FlopsCatalog,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            primary: DetectorSpec::new("yolov3-spp", 416),
            secondary: DetectorSpec::new("ssdlite", 300),
            fusion: FusionConfig::default(),
            match_iou: 0.4,
            mode: Mode::Fusion,
            seed: 0,
            primary_profile: DetectorProfile::default(),
            secondary_profile: DetectorProfile::default(),
            energy: EnergyParams::default(),
            energy_mode: EnergyMode::default(),
            catalog: FlopsCatalog::builtin(),
        }
    }
}

impl RunConfig {
    /// Fusion settings with input sizes taken from the detector specs.
    pub fn fusion_config(&self) -> FusionConfig {
        FusionConfig {
            primary_input_size: self.primary.input_size,
            secondary_input_size: self.secondary.input_size,
            ..self.fusion
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.fusion_config().validate()?;
        if !(self.match_iou > 0.0 && self.match_iou <= 1.0) {
            return Err(Error::Config(format!(
                "match_iou must be in (0, 1], got {}",
                self.match_iou
            )));
        }
        self.energy
            .validate()
            .map_err(|e| Error::Config(e.into()))?;
        for spec in [&self.primary, &self.secondary] {
            if !self.catalog.contains(&spec.name) {
                return Err(DetectorError::UnknownDetector(spec.name.clone()).into());
            }
        }
        Ok(())
    }

    /// Synthetic stand-ins for the configured detectors. The two draw from
    /// independent streams derived from `seed`.
    pub fn build_detectors(&self) -> Result<(SyntheticDetector, SyntheticDetector)> {
        let primary = SyntheticDetector::new(
            self.primary.name.clone(),
            DetectorProfile {
                input_size: self.primary.input_size,
                seed: hash_key(&[self.seed, 1]),
                ..self.primary_profile
            },
        )?;
        let secondary = SyntheticDetector::new(
            self.secondary.name.clone(),
            DetectorProfile {
                input_size: self.secondary.input_size,
                seed: hash_key(&[self.seed, 2]),
                ..self.secondary_profile
            },
        )?;
        Ok((primary, secondary))
    }
}

/// Serializes calls into a detector that reports itself as exclusive.
struct Serialized<'a> {
    inner: &'a dyn Detector,
    lock: Option<Mutex<()>>,
}

impl<'a> Serialized<'a> {
    fn new(inner: &'a dyn Detector) -> Self {
        Self {
            inner,
            lock: inner.exclusive().then(|| Mutex::new(())),
        }
    }
}

impl Detector for Serialized<'_> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn input_size(&self) -> u32 {
        self.inner.input_size()
    }

    fn exclusive(&self) -> bool {
        self.inner.exclusive()
    }

    fn detect(
        &self,
        frame: &Frame,
        region: &Region,
    ) -> std::result::Result<Vec<Detection>, DetectorError> {
        match &self.lock {
            Some(m) => {
                let _guard = m.lock().unwrap_or_else(|p| p.into_inner());
                self.inner.detect(frame, region)
            }
            None => self.inner.detect(frame, region),
        }
    }
}

/// [`roifuse_core::fuse_frame`] with the primary pass and the region passes
/// evaluated concurrently. Produces exactly the same result. Detectors that
/// report [`Detector::exclusive`] must be wrapped by the caller; [`run_with`]
/// does this.
pub fn fuse_frame_parallel(
    frame: &Frame,
    primary: &dyn Detector,
    secondary: &dyn Detector,
    cfg: &FusionConfig,
) -> std::result::Result<FusedFrameResult, FuseError> {
    check_detectors(primary, Some(secondary), cfg)?;
    let size = frame.image_size();
    let regions = roi_regions(frame, cfg);
    let (primary_dets, secondary_dets) = rayon::join(
        || primary.detect(frame, &Region::full_image(size)),
        || {
            regions
                .par_iter()
                .map(|r| secondary.detect(frame, r).map(|d| (*r, d)))
                .collect::<std::result::Result<Vec<_>, _>>()
        },
    );
    Ok(aggregate(
        frame.frame_id,
        size,
        &primary_dets?,
        &secondary_dets?,
        cfg,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub mode: Mode,
    pub primary: DetectorSpec,
    pub secondary: DetectorSpec,
    pub fusion: FusionConfig,
    pub results: Vec<FusedFrameResult>,
    pub metrics: MetricsReport,
    pub cost: CostReport,
}

/// Evaluates `frames` with the synthetic detectors described by `cfg`.
pub fn run_frames(frames: &[Frame], cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let (primary, secondary) = cfg.build_detectors()?;
    run_with(frames, &primary, &secondary, cfg)
}

/// Evaluates `frames` with caller-supplied detectors. Frames are processed
/// in parallel; calls into exclusive detectors are serialized.
pub fn run_with(
    frames: &[Frame],
    primary: &dyn Detector,
    secondary: &dyn Detector,
    cfg: &RunConfig,
) -> Result<RunOutcome> {
    cfg.validate()?;
    let fusion = cfg.fusion_config();
    let primary = Serialized::new(primary);
    let secondary = Serialized::new(secondary);
    let results = frames
        .par_iter()
        .map(|f| match cfg.mode {
            Mode::Fusion => fuse_frame_parallel(f, &primary, &secondary, &fusion),
            Mode::PrimaryOnly => primary_only_frame(f, &primary, &fusion),
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let truth: Vec<FrameTruth<'_>> = frames
        .iter()
        .map(|f| FrameTruth {
            frame_id: f.frame_id,
            boxes: &f.ground_truth,
        })
        .collect();
    let metrics = evaluate(&results, &truth, cfg.match_iou)?;
    let cl_primary = cfg
        .catalog
        .flops_for(&cfg.primary.name, cfg.primary.input_size)?;
    let cl_secondary = cfg
        .catalog
        .flops_for(&cfg.secondary.name, cfg.secondary.input_size)?;
    let counts: Vec<(u64, usize)> = results.iter().map(|r| (r.frame_id, r.n_rois)).collect();
    let cost = cost_report(
        cl_primary,
        cl_secondary,
        &counts,
        &cfg.energy,
        cfg.energy_mode,
    );
    Ok(RunOutcome {
        mode: cfg.mode,
        primary: cfg.primary.clone(),
        secondary: cfg.secondary.clone(),
        fusion,
        results,
        metrics,
        cost,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    RoiSize,
    SecondaryInputSize,
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "roi-size" => Ok(SweepAxis::RoiSize),
            "secondary-input-size" => Ok(SweepAxis::SecondaryInputSize),
            _ => Err(format!(
                "unknown sweep axis `{s}` (expected roi-size or secondary-input-size)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: u32,
    pub recall: f64,
    pub mean_gflops: f64,
    pub mean_energy_j: f64,
    pub mean_n_rois: f64,
}

/// One run per distinct value of `axis`, in ascending order of value.
pub fn sweep(
    frames: &[Frame],
    base: &RunConfig,
    axis: SweepAxis,
    values: &[u32],
) -> Result<Vec<SweepRow>> {
    let mut values = values.to_vec();
    values.sort_unstable();
    values.dedup();
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    values
        .into_iter()
        .map(|value| {
            let mut cfg = base.clone();
            match axis {
                SweepAxis::RoiSize => cfg.fusion.roi_size = value,
                SweepAxis::SecondaryInputSize => cfg.secondary.input_size = value,
            }
            let out = run_frames(frames, &cfg)?;
            Ok(SweepRow {
                value,
                recall: out.metrics.recall,
                mean_gflops: out.cost.mean_gflops,
                mean_energy_j: out.cost.mean_energy_j,
                mean_n_rois: out.cost.mean_n_rois,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detector_spec_parsing() {
        let s: DetectorSpec = "yolov3-spp:416".parse().unwrap();
        assert_eq!(s, DetectorSpec::new("yolov3-spp", 416));
        assert_eq!(s.to_string(), "yolov3-spp:416");
        assert!("yolov3".parse::<DetectorSpec>().is_err());
        assert!("x:0".parse::<DetectorSpec>().is_err());
        assert!(":300".parse::<DetectorSpec>().is_err());
    }

    #[test]
    fn unknown_detector_is_rejected() {
        let cfg = RunConfig {
            secondary: DetectorSpec::new("retinanet", 300),
            ..Default::default()
        };
        let err = cfg.validate().unwrap_err();
        assert!(matches!(
            err,
            Error::Detector(DetectorError::UnknownDetector(_))
        ));
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn detector_seeds_differ() {
        let (p, s) = RunConfig::default().build_detectors().unwrap();
        assert_ne!(p.profile().seed, s.profile().seed);
        assert_eq!(p.profile().input_size, 416);
        assert_eq!(s.profile().input_size, 300);
    }
}
