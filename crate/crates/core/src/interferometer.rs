//! Polarization ⊗ path propagation through the paired-fiber Mach-Zehnder
//! network. Amplitudes are indexed `2·pol + path` (`pol` 0 = H, 1 = V) and
//! carried per frequency node.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::fiber::{gamma_for_kappa, FiberParams, SpectralProfile};
use crate::channel::quadrature::FrequencyGrid;
use crate::channel::{chi_from_probe_outputs, mix_channels, ChiMatrix};
use crate::qstate::linalg::ZERO;
use crate::qstate::{CMatrix, DensityMatrix, PureState};
use crate::{Error, Result};

pub const DEFAULT_NODES: usize = 128;
/// Ports reached with lower probability have no conditional state.
pub const MIN_PORT_PROBABILITY: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NetworkMode {
    #[serde(alias = "unidir")]
    Unidirectional,
    #[serde(rename = "bidirectional-ab", alias = "bidir-ab")]
    BidirectionalAB,
    #[serde(rename = "bidirectional-ba", alias = "bidir-ba")]
    BidirectionalBA,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pol {
    H = 0,
    V = 1,
}

/// One optical element of a network.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Element {
    Pbs,
    Hwp { angle_deg: f64, path: usize },
    /// Fiber 1 or 2 on `path`; `pol` is the polarization travelling along
    /// the fiber's delayed axis.
    Fiber { fiber: usize, path: usize, pol: Pol },
}

impl NetworkMode {
    /// HWP1..HWP4 and the output-port plate, in degrees.
    pub fn hwp_angles(self) -> [f64; 5] {
        match self {
            NetworkMode::Unidirectional => [22.5, 22.5, 22.5, 22.5, 45.0],
            _ => [0.0, 0.0, 45.0, 45.0, 0.0],
        }
    }

    pub fn elements(self) -> Vec<Element> {
        use Element::*;
        let [h1, h2, h3, h4, out] = self.hwp_angles();
        match self {
            NetworkMode::Unidirectional => vec![
                Pbs,
                Hwp { angle_deg: h1, path: 0 },
                Hwp { angle_deg: h3, path: 1 },
                Fiber { fiber: 0, path: 0, pol: Pol::V },
                Fiber { fiber: 1, path: 1, pol: Pol::V },
                Hwp { angle_deg: h2, path: 0 },
                Hwp { angle_deg: h4, path: 1 },
                Pbs,
                Hwp { angle_deg: out, path: 1 },
            ],
            NetworkMode::BidirectionalAB => vec![
                Pbs,
                Hwp { angle_deg: h1, path: 0 },
                Hwp { angle_deg: h3, path: 1 },
                Fiber { fiber: 0, path: 0, pol: Pol::H },
                Fiber { fiber: 1, path: 1, pol: Pol::H },
                Hwp { angle_deg: h2, path: 0 },
                Hwp { angle_deg: h4, path: 1 },
                Pbs,
            ],
            // entering from B, the plates and fibers are met in reverse order
            NetworkMode::BidirectionalBA => vec![
                Pbs,
                Hwp { angle_deg: h4, path: 0 },
                Hwp { angle_deg: h2, path: 1 },
                Fiber { fiber: 1, path: 0, pol: Pol::V },
                Fiber { fiber: 0, path: 1, pol: Pol::V },
                Hwp { angle_deg: h3, path: 0 },
                Hwp { angle_deg: h1, path: 1 },
                Pbs,
            ],
        }
    }
}

impl std::str::FromStr for NetworkMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unidirectional" | "unidir" => Ok(Self::Unidirectional),
            "bidirectional-ab" | "bidir-ab" => Ok(Self::BidirectionalAB),
            "bidirectional-ba" | "bidir-ba" => Ok(Self::BidirectionalBA),
            _ => Err(Error::Parse(format!("unknown network mode {s:?}"))),
        }
    }
}

/// Joint polarization/path amplitudes on a frequency grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PolPathState {
    omega: Vec<f64>,
    weight: Vec<f64>,
    amps: Vec<[Complex64; 4]>,
}

impl PolPathState {
    /// `input ⊗ |path 0⟩` at every node of `grid`.
    pub fn new(input: &PureState, grid: &FrequencyGrid) -> Result<Self> {
        if input.dim() != 2 {
            return Err(Error::Dimension {
                expected: 2,
                found: input.dim(),
            });
        }
        let a = input.amplitudes();
        let amp = [a[0], ZERO, a[1], ZERO];
        Ok(Self {
            omega: grid.omega.clone(),
            weight: grid.weight.clone(),
            amps: vec![amp; grid.len()],
        })
    }

    /// A single frequency node with unit weight.
    pub fn single_node(omega: f64, amps: [Complex64; 4]) -> Self {
        Self {
            omega: vec![omega],
            weight: vec![1.0],
            amps: vec![amps],
        }
    }

    pub fn amplitudes(&self) -> &[[Complex64; 4]] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps
            .iter()
            .zip(&self.weight)
            .map(|(a, w)| w * a.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum()
    }

    /// `|H⟩|x⟩ → |H⟩|x⟩`, `|V⟩|x⟩ → |V⟩|x⊕1⟩`.
    pub fn pbs_apply(&mut self) {
        for a in &mut self.amps {
            a.swap(2, 3);
        }
    }

    /// Half-wave plate `[[cos 2a, sin 2a], [sin 2a, −cos 2a]]` on `path`.
    pub fn hwp_apply(&mut self, angle_deg: f64, path: usize) {
        let (s, c) = (2.0 * angle_deg.to_radians()).sin_cos();
        for a in &mut self.amps {
            let (h, v) = (a[path], a[2 + path]);
            a[path] = h * c + v * s;
            a[2 + path] = h * s - v * c;
        }
    }

    /// Multiplies the `pol` amplitude on `path` by `e^{iκω}`.
    pub fn delay_apply(&mut self, kappa: f64, path: usize, pol: Pol) {
        let idx = 2 * pol as usize + path;
        for (a, &om) in self.amps.iter_mut().zip(&self.omega) {
            a[idx] *= Complex64::from_polar(1.0, kappa * om);
        }
    }

    /// The `|V⟩` component on `path` gains `e^{iκω}`.
    pub fn fiber_apply(&mut self, path: usize, f: &FiberParams) {
        self.delay_apply(f.kappa(), path, Pol::V);
    }

    /// Unnormalised polarization state of output `port`,
    /// `Σ_ω w(ω) |ψ_port(ω)⟩⟨ψ_port(ω)|`.
    pub fn port_matrix(&self, port: usize) -> CMatrix {
        let mut m = CMatrix::zeros(2);
        for (a, &w) in self.amps.iter().zip(&self.weight) {
            let v = [a[port], a[2 + port]];
            for i in 0..2 {
                for j in 0..2 {
                    m[(i, j)] += v[i] * v[j].conj() * w;
                }
            }
        }
        m
    }
}

pub fn apply_elements(state: &mut PolPathState, elements: &[Element], kappas: [f64; 2]) -> Result<()> {
    for e in elements {
        match *e {
            Element::Pbs => state.pbs_apply(),
            Element::Hwp { angle_deg, path } if path < 2 => state.hwp_apply(angle_deg, path),
            Element::Fiber { fiber, path, pol } if fiber < 2 && path < 2 => {
                state.delay_apply(kappas[fiber], path, pol)
            }
            other => {
                return Err(Error::InvalidParameter(format!(
                    "element {other:?} refers to a nonexistent path or fiber"
                )))
            }
        }
    }
    Ok(())
}

/// Probability of reaching a port and the conditional polarization state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PortOutcome {
    pub port: usize,
    pub probability: f64,
    pub state: Option<DensityMatrix>,
}

/// Physical setup shared by the network operations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Network {
    pub mode: NetworkMode,
    pub fiber1: FiberParams,
    pub fiber2: FiberParams,
    pub spectrum: SpectralProfile,
    pub nodes: usize,
}

impl Network {
    pub fn kappas(&self) -> [f64; 2] {
        [self.fiber1.kappa(), self.fiber2.kappa()]
    }

    pub fn grid(&self) -> Result<FrequencyGrid> {
        if self.nodes < 16 {
            return Err(Error::InvalidParameter(format!(
                "need at least 16 quadrature nodes, got {}",
                self.nodes
            )));
        }
        let [k1, k2] = self.kappas();
        Ok(FrequencyGrid::adapted(&self.spectrum, self.nodes, k1.abs() + k2.abs()))
    }

    /// Unnormalised port matrices for one input.
    pub fn port_matrices(&self, input: &PureState, grid: &FrequencyGrid) -> Result<[CMatrix; 2]> {
        let mut s = PolPathState::new(input, grid)?;
        apply_elements(&mut s, &self.mode.elements(), self.kappas())?;
        Ok([s.port_matrix(0), s.port_matrix(1)])
    }

    pub fn run(&self, input: &PureState) -> Result<Vec<PortOutcome>> {
        let grid = self.grid()?;
        let ports = self.port_matrices(input, &grid)?;
        ports
            .into_iter()
            .enumerate()
            .map(|(port, m)| {
                let probability = m.trace().re;
                let state = if probability < MIN_PORT_PROBABILITY {
                    None
                } else {
                    Some(DensityMatrix::with_tolerance(m.scale_real(1.0 / probability), 1e-9)?)
                };
                Ok(PortOutcome {
                    port,
                    probability,
                    state,
                })
            })
            .collect()
    }

    /// Ports merged: `Σ_port p_port ρ_port`.
    pub fn combined_output(&self, input: &PureState) -> Result<DensityMatrix> {
        let grid = self.grid()?;
        let [a, b] = self.port_matrices(input, &grid)?;
        DensityMatrix::with_tolerance(&a + &b, 1e-9)
    }

    /// Coherence factor of the merged output, `ρ_HV = αβ*·Γ`.
    pub fn closed_form_gamma(&self) -> Complex64 {
        let [k1, k2] = self.kappas();
        let dk = k1 - k2;
        let s = &self.spectrum;
        match self.mode {
            NetworkMode::Unidirectional => (Complex64::new(1.0, 0.0) + gamma_for_kappa(dk, s).value()) * 0.5,
            NetworkMode::BidirectionalAB => gamma_for_kappa(dk, s).value(),
            NetworkMode::BidirectionalBA => gamma_for_kappa(dk, s).value().conj(),
        }
    }

    pub fn closed_form_output(&self, input: &PureState) -> Result<DensityMatrix> {
        if input.dim() != 2 {
            return Err(Error::Dimension {
                expected: 2,
                found: input.dim(),
            });
        }
        let a = input.amplitudes();
        let off = a[0] * a[1].conj() * self.closed_form_gamma();
        let m = CMatrix::from_vec(
            2,
            vec![
                Complex64::new(a[0].norm_sqr(), 0.0),
                off,
                off.conj(),
                Complex64::new(a[1].norm_sqr(), 0.0),
            ],
        )?;
        DensityMatrix::new(m)
    }

    /// Per-port processes by linear inversion of the four probe outputs.
    pub fn extract_port_channels(&self) -> Result<PortChannels> {
        let grid = self.grid()?;
        let probes = [PureState::h(), PureState::v(), PureState::d(), PureState::r()];
        let mut outs: [Vec<CMatrix>; 2] = [Vec::new(), Vec::new()];
        for p in &probes {
            let [a, b] = self.port_matrices(p, &grid)?;
            outs[0].push(a);
            outs[1].push(b);
        }
        let mut probabilities = [0.0; 2];
        let mut chis = [None, None];
        let mut total = CMatrix::zeros(4);
        for port in 0..2 {
            let o: [CMatrix; 4] = std::array::from_fn(|k| outs[port][k].clone());
            let raw = chi_from_probe_outputs(&o);
            total = &total + &raw;
            let p = raw.trace().re;
            probabilities[port] = p;
            if p >= MIN_PORT_PROBABILITY {
                chis[port] = Some(ChiMatrix::new(raw.scale_real(1.0 / p))?);
            }
        }
        let combined = ChiMatrix::channel(total)?;
        Ok(PortChannels {
            probabilities,
            chis,
            combined,
        })
    }
}

/// Conditional processes of both ports. The probabilities refer to a
/// maximally mixed input, so that `Σ p_port χ_port` is the merged channel.
#[derive(Clone, Debug, PartialEq)]
pub struct PortChannels {
    pub probabilities: [f64; 2],
    pub chis: [Option<ChiMatrix>; 2],
    pub combined: ChiMatrix,
}

impl PortChannels {
    pub fn port(&self, port: usize) -> Result<&ChiMatrix> {
        self.chis
            .get(port)
            .and_then(|c| c.as_ref())
            .ok_or(Error::UndefinedPortChannel {
                port,
                probability: self.probabilities.get(port).copied().unwrap_or(0.0),
            })
    }

    /// Recombines the defined ports with [`mix_channels`].
    pub fn mixed(&self) -> Result<ChiMatrix> {
        let parts: Vec<(f64, ChiMatrix)> = (0..2)
            .filter_map(|k| self.chis[k].clone().map(|c| (self.probabilities[k], c)))
            .collect();
        let total: f64 = parts.iter().map(|(p, _)| p).sum();
        let parts: Vec<_> = parts.into_iter().map(|(p, c)| (p / total, c)).collect();
        mix_channels(&parts)
    }
}

pub fn run_network(
    mode: NetworkMode,
    input: &PureState,
    fiber1: &FiberParams,
    fiber2: &FiberParams,
    s: &SpectralProfile,
    nodes: usize,
) -> Result<Vec<PortOutcome>> {
    Network {
        mode,
        fiber1: *fiber1,
        fiber2: *fiber2,
        spectrum: *s,
        nodes,
    }
    .run(input)
}

pub fn closed_form_output(
    mode: NetworkMode,
    input: &PureState,
    fiber1: &FiberParams,
    fiber2: &FiberParams,
    s: &SpectralProfile,
) -> Result<DensityMatrix> {
    Network {
        mode,
        fiber1: *fiber1,
        fiber2: *fiber2,
        spectrum: *s,
        nodes: DEFAULT_NODES,
    }
    .closed_form_output(input)
}
