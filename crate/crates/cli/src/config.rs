//! The JSON experiment document.

use std::path::{Path, PathBuf};

use fiberchan::capacity::ScanGrid;
use fiberchan::channel::fiber::{fiber_channel, FiberParams, SpectralProfile};
use fiberchan::channel::{dephasing_channel, Axis, ChiMatrix};
use fiberchan::interferometer::{Network, NetworkMode, DEFAULT_NODES};
use fiberchan::tomography::DEFAULT_RESTARTS;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result, StageExt};

pub const SEED_ENV: &str = "FIBERCHAN_SEED";
pub const DEFAULT_SEED: u64 = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Fiber,
    Unidir,
    BidirAb,
    BidirBa,
    Tomo,
    Capacity,
    Chsh,
    Bootstrap,
}

impl Mode {
    pub fn network(self) -> Option<NetworkMode> {
        match self {
            Mode::Unidir => Some(NetworkMode::Unidirectional),
            Mode::BidirAb => Some(NetworkMode::BidirectionalAB),
            Mode::BidirBa => Some(NetworkMode::BidirectionalBA),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Fiber => "fiber",
            Mode::Unidir => "unidir",
            Mode::BidirAb => "bidir-ab",
            Mode::BidirBa => "bidir-ba",
            Mode::Tomo => "tomo",
            Mode::Capacity => "capacity",
            Mode::Chsh => "chsh",
            Mode::Bootstrap => "bootstrap",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub wavelength_nm: f64,
    pub fwhm_nm: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            wavelength_nm: 800.0,
            fwhm_nm: 3.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelKind {
    Identity,
    /// Real coherence factor `gamma` along `axis`.
    Dephasing,
    /// Single fiber from the `fiber` and `spectrum` fields.
    Fiber,
    /// Merged-port channel of the interferometer in `network`.
    Network,
    /// χ JSON document at `path`.
    File,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub kind: ChannelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl ChannelSpec {
    pub fn identity() -> Self {
        Self {
            kind: ChannelKind::Identity,
            gamma: None,
            axis: None,
            network: None,
            path: None,
        }
    }

    pub fn dephasing(gamma: f64, axis: Axis) -> Self {
        Self {
            kind: ChannelKind::Dephasing,
            gamma: Some(gamma),
            axis: Some(axis),
            ..Self::identity()
        }
    }
}

/// Experiment document as read from disk. Absent fields take defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Option<Mode>,
    pub fiber: Option<FiberParams>,
    /// Second fiber of the interferometer; defaults to `fiber`.
    pub fiber2: Option<FiberParams>,
    pub spectrum: Option<SpectrumConfig>,
    pub axis: Option<Axis>,
    pub nodes: Option<usize>,
    pub shots: Option<u64>,
    pub seed: Option<u64>,
    pub grid: Option<ScanGrid>,
    /// Coarser grid for the Q₁ of each bootstrap set.
    pub bootstrap_grid: Option<ScanGrid>,
    pub restarts: Option<usize>,
    pub bootstrap_sets: Option<usize>,
    pub alpha_sq: Option<Vec<f64>>,
    pub channel: Option<ChannelSpec>,
    /// Counts CSV for `tomo` and `bootstrap`.
    pub counts: Option<PathBuf>,
    pub keep_surface: Option<bool>,
    pub out: Option<PathBuf>,
}

/// Fully resolved settings; this is what a run records.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Settings {
    pub mode: Mode,
    pub fiber: FiberParams,
    pub fiber2: FiberParams,
    pub spectrum: SpectrumConfig,
    pub axis: Axis,
    pub nodes: usize,
    pub shots: u64,
    pub seed: u64,
    pub grid: ScanGrid,
    pub bootstrap_grid: ScanGrid,
    pub restarts: usize,
    pub bootstrap_sets: usize,
    pub alpha_sq: Vec<f64>,
    pub channel: ChannelSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counts: Option<PathBuf>,
    pub keep_surface: bool,
}

pub fn default_fiber() -> FiberParams {
    FiberParams {
        length: 120.0,
        delta_n: 3.5e-4,
    }
}

pub const DEFAULT_ALPHA_SQ: [f64; 5] = [0.1, 0.2, 0.5, 0.8, 0.9];

pub fn default_bootstrap_grid() -> ScanGrid {
    ScanGrid {
        lambda_points: 21,
        theta_points: 10,
        phi_points: 20,
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::config(path, e.into_inner())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn with_mode(mode: Mode) -> Self {
        Self {
            mode: Some(mode),
            ..Self::default()
        }
    }

    /// Fills defaults and validates every field. `seed` is the already
    /// resolved seed.
    pub fn resolve(&self, seed: u64) -> Result<Settings> {
        let mode = self
            .mode
            .ok_or_else(|| CliError::config("mode", "missing field `mode`"))?;
        let fiber = self.fiber.unwrap_or_else(default_fiber);
        fiber.validate().map_err(|e| CliError::config("fiber", e))?;
        let fiber2 = self.fiber2.unwrap_or(fiber);
        fiber2.validate().map_err(|e| CliError::config("fiber2", e))?;
        let spectrum = self.spectrum.unwrap_or_default();
        SpectralProfile::from_wavelength(spectrum.wavelength_nm, spectrum.fwhm_nm)
            .map_err(|e| CliError::config("spectrum", e))?;
        let nodes = self.nodes.unwrap_or(DEFAULT_NODES);
        if nodes < 16 {
            return Err(CliError::config("nodes", format!("need at least 16, got {nodes}")));
        }
        let shots = self.shots.unwrap_or(1_000_000);
        if shots == 0 {
            return Err(CliError::config("shots", "must be at least 1"));
        }
        let grid = self.grid.unwrap_or_default();
        grid.validate().map_err(|e| CliError::config("grid", e))?;
        let bootstrap_grid = self.bootstrap_grid.unwrap_or_else(default_bootstrap_grid);
        bootstrap_grid
            .validate()
            .map_err(|e| CliError::config("bootstrap_grid", e))?;
        let restarts = self.restarts.unwrap_or(DEFAULT_RESTARTS);
        if restarts == 0 {
            return Err(CliError::config("restarts", "must be at least 1"));
        }
        let bootstrap_sets = self.bootstrap_sets.unwrap_or(fiberchan::stats::DEFAULT_SETS);
        if bootstrap_sets < 2 {
            return Err(CliError::config(
                "bootstrap_sets",
                format!("need at least 2, got {bootstrap_sets}"),
            ));
        }
        let alpha_sq = self.alpha_sq.clone().unwrap_or_else(|| DEFAULT_ALPHA_SQ.to_vec());
        for (k, a) in alpha_sq.iter().enumerate() {
            if !(0.0..=1.0).contains(a) {
                return Err(CliError::config(
                    format!("alpha_sq[{k}]"),
                    format!("must lie in [0, 1], got {a}"),
                ));
            }
        }
        let channel = self.channel.clone().unwrap_or_else(ChannelSpec::identity);
        validate_channel(&channel)?;
        if matches!(mode, Mode::Tomo | Mode::Bootstrap)
            && self.counts.is_none()
            && self.channel.is_none()
        {
            return Err(CliError::config(
                "counts",
                "either `counts` or `channel` is required for this mode",
            ));
        }
        Ok(Settings {
            mode,
            fiber,
            fiber2,
            spectrum,
            axis: self.axis.unwrap_or(Axis::Z),
            nodes,
            shots,
            seed,
            grid,
            bootstrap_grid,
            restarts,
            bootstrap_sets,
            alpha_sq,
            channel,
            counts: self.counts.clone(),
            keep_surface: self.keep_surface.unwrap_or(false),
        })
    }
}

fn validate_channel(c: &ChannelSpec) -> Result<()> {
    let unused = |field: &str, present: bool| -> Result<()> {
        if present {
            Err(CliError::config(
                format!("channel.{field}"),
                format!("not used by channel kind {:?}", c.kind),
            ))
        } else {
            Ok(())
        }
    };
    match c.kind {
        ChannelKind::Identity => {
            unused("gamma", c.gamma.is_some())?;
            unused("axis", c.axis.is_some())?;
            unused("network", c.network.is_some())?;
            unused("path", c.path.is_some())
        }
        ChannelKind::Dephasing => {
            let g = c
                .gamma
                .ok_or_else(|| CliError::config("channel.gamma", "required for dephasing"))?;
            if !(-1.0..=1.0).contains(&g) {
                return Err(CliError::config("channel.gamma", format!("|gamma| must be at most 1, got {g}")));
            }
            unused("network", c.network.is_some())?;
            unused("path", c.path.is_some())
        }
        ChannelKind::Fiber => {
            unused("gamma", c.gamma.is_some())?;
            unused("network", c.network.is_some())?;
            unused("path", c.path.is_some())
        }
        ChannelKind::Network => {
            if c.network.is_none() {
                return Err(CliError::config("channel.network", "required for network channels"));
            }
            unused("gamma", c.gamma.is_some())?;
            unused("axis", c.axis.is_some())?;
            unused("path", c.path.is_some())
        }
        ChannelKind::File => {
            if c.path.is_none() {
                return Err(CliError::config("channel.path", "required for file channels"));
            }
            unused("gamma", c.gamma.is_some())?;
            unused("axis", c.axis.is_some())?;
            unused("network", c.network.is_some())
        }
    }
}

impl Settings {
    pub fn profile(&self) -> SpectralProfile {
        SpectralProfile::from_wavelength(self.spectrum.wavelength_nm, self.spectrum.fwhm_nm)
            .expect("validated spectrum")
    }

    pub fn network(&self, mode: NetworkMode) -> Network {
        Network {
            mode,
            fiber1: self.fiber,
            fiber2: self.fiber2,
            spectrum: self.profile(),
            nodes: self.nodes,
        }
    }

    /// The χ named by `channel`.
    pub fn build_channel(&self) -> Result<ChiMatrix> {
        let c = &self.channel;
        match c.kind {
            ChannelKind::Identity => Ok(ChiMatrix::identity()),
            ChannelKind::Dephasing => dephasing_channel(
                Complex64::new(c.gamma.unwrap_or(1.0), 0.0),
                c.axis.unwrap_or(Axis::Z),
            )
            .stage("channel"),
            ChannelKind::Fiber => {
                fiber_channel(&self.fiber, &self.profile(), c.axis.unwrap_or(self.axis)).stage("channel")
            }
            ChannelKind::Network => {
                let mode = c.network.expect("validated network channel");
                Ok(self.network(mode).extract_port_channels().stage("channel")?.combined)
            }
            ChannelKind::File => {
                let path = c.path.as_ref().expect("validated file channel");
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                let de = &mut serde_json::Deserializer::from_str(&text);
                let chi: ChiMatrix = serde_path_to_error::deserialize(de).map_err(|e| {
                    CliError::config(format!("channel.path ({}) {}", path.display(), e.path()), e.into_inner())
                })?;
                chi.require_channel().stage("channel")?;
                Ok(chi)
            }
        }
    }
}

/// Seed precedence: command line, config document, `FIBERCHAN_SEED`,
/// [`DEFAULT_SEED`].
pub fn resolve_seed(flag: Option<u64>, cfg: &ExperimentConfig) -> Result<u64> {
    if let Some(s) = flag.or(cfg.seed) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::config(SEED_ENV, format!("not an unsigned integer: {v:?}"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

/// Independent seed for one labelled sub-task (splitmix64 of `seed ⊕ tag`).
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
