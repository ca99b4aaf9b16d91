use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::ResponseKernel;

const MODULE: &str = "queue-sim";

/// Four exponential response kernels; `g_xy` is side `x` responding to side
/// `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadParams {
    pub g11: ResponseKernel,
    pub g12: ResponseKernel,
    pub g21: ResponseKernel,
    pub g22: ResponseKernel,
}

impl QuadParams {
    pub fn new(g11: ResponseKernel, g12: ResponseKernel, g21: ResponseKernel, g22: ResponseKernel) -> Self {
        Self { g11, g12, g21, g22 }
    }

    /// Kernels from responsiveness ratios `α/β` and decay rates, both in the
    /// order `(11, 12, 21, 22)`.
    pub fn from_ratios(ratios: [f64; 4], betas: [f64; 4]) -> Result<Self> {
        let k = |i: usize| ResponseKernel::exponential_with_mass(ratios[i], betas[i]);
        Ok(Self::new(k(0)?, k(1)?, k(2)?, k(3)?))
    }

    /// Kernels from jump sizes and decay rates, order `(11, 12, 21, 22)`.
    pub fn from_alphas(alphas: [f64; 4], betas: [f64; 4]) -> Result<Self> {
        let k = |i: usize| ResponseKernel::exponential(alphas[i], betas[i]);
        Ok(Self::new(k(0)?, k(1)?, k(2)?, k(3)?))
    }

    pub fn kernels(&self) -> [ResponseKernel; 4] {
        [self.g11, self.g12, self.g21, self.g22]
    }

    /// `(α, β)` per direction in the order `(11, 12, 21, 22)`.
    pub fn alpha_beta(&self) -> [(f64, f64); 4] {
        self.kernels().map(|k| match k {
            ResponseKernel::Exponential { alpha, beta } => (alpha, beta),
        })
    }

    /// Responsiveness ratios `ρ_xy = α_xy / β_xy`, order `(11, 12, 21, 22)`.
    pub fn ratios(&self) -> [f64; 4] {
        self.kernels().map(|k| k.mass())
    }
}

/// Spectral radius of `[[ρ11, ρ12], [ρ21, ρ22]]`; the model is stable iff it
/// is below 1.
pub fn check_stability_quad(quad: &QuadParams) -> f64 {
    let [a, b, c, d] = quad.ratios();
    let half_trace = 0.5 * (a + d);
    let disc = 0.25 * (a - d) * (a - d) + b * c;
    // non-negative entries give real eigenvalues (Perron–Frobenius)
    half_trace + disc.max(0.0).sqrt()
}

/// Mean number of contributions in a customer-initiated conversation,
/// `(1 - ρ22 + ρ21) / ((1 - ρ11)(1 - ρ22) - ρ12 ρ21)`.
pub fn expected_size_quad(quad: &QuadParams) -> Result<f64> {
    let [r11, r12, r21, r22] = quad.ratios();
    let den = (1.0 - r11) * (1.0 - r22) - r12 * r21;
    if !(den > 0.0) || check_stability_quad(quad) >= 1.0 {
        return Err(Error::stability(
            MODULE,
            format!("quad responsiveness matrix is not subcritical (denominator {den})"),
        ));
    }
    Ok((1.0 - r22 + r21) / den)
}

/// The four interdependence settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Preset {
    HighCo,
    ModerateCo,
    ModerateSelf,
    HighSelf,
}

/// Decay rates shared by every preset, order `(11, 12, 21, 22)`.
pub const PRESET_BETAS: [f64; 4] = [3.64, 38.388, 20.374, 260.1];
/// Jump sizes of the unperturbed setting.
pub const MODERATE_CO_ALPHAS: [f64; 4] = [0.843, 14.083, 17.102, 113.719];

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::HighCo, Preset::ModerateCo, Preset::ModerateSelf, Preset::HighSelf];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::HighCo => "highCo",
            Preset::ModerateCo => "moderateCo",
            Preset::ModerateSelf => "moderateSelf",
            Preset::HighSelf => "highSelf",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(name))
            .ok_or_else(|| {
                Error::domain(
                    MODULE,
                    format!("unknown preset '{name}', expected one of highCo, moderateCo, moderateSelf, highSelf"),
                )
            })
    }

    /// Published responsiveness ratios (three decimals), order `(11, 12, 21, 22)`.
    pub fn printed_ratios(&self) -> [f64; 4] {
        match self {
            Preset::HighCo => [0.032, 0.501, 1.039, 0.303],
            Preset::ModerateCo => [0.232, 0.367, 0.839, 0.437],
            Preset::ModerateSelf => [0.482, 0.199, 0.589, 0.605],
            Preset::HighSelf => [0.732, 0.032, 0.339, 0.772],
        }
    }

    /// `moderateCo` keeps the estimated jump sizes; the others take
    /// `α = ratio · β` from the published ratios.
    pub fn params(&self) -> QuadParams {
        let kernels = match self {
            Preset::ModerateCo => QuadParams::from_alphas(MODERATE_CO_ALPHAS, PRESET_BETAS),
            _ => QuadParams::from_ratios(self.printed_ratios(), PRESET_BETAS),
        };
        kernels.expect("preset constants are valid")
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::from_name(s)
    }
}
