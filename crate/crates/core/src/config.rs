//! Run configuration: one versioned TOML document drives every
//! subcommand, and its hash stamps every emitted file.

use crate::basis::{BasisEnumeration, GramQuad};
use crate::bell::{make_bell, TransitionKind};
use crate::error::{Error, Result};
use crate::verify::CheckConfig;
use crate::wavelet::{MotherWavelet, QuadratureSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    /// Section dimension N.
    pub dim: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub j_min: i32,
    pub j_max: i32,
    pub k_min: i32,
    pub k_max: i32,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WaveletConfig {
    pub m_max: usize,
    pub points_per_panel: usize,
    pub cycles_per_panel: f64,
    pub min_panels: usize,
    pub max_panels: usize,
    pub quad_tol: f64,
    pub sup_search_radius: f64,
    pub decay_radius: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PairingConfig {
    /// Number of selected pairs K.
    pub pairs: usize,
    /// Scale of the first decaying atom; the rest march downward.
    pub start_scale: i32,
    /// Cap on every Σ d_k (G_{k,i} + 1).
    pub dg_budget: f64,
    /// Cap factor for Σ H_{k,i} relative to A_i.
    pub h_budget_factor: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    /// Cap on retained Schmidt terms per kernel half.
    pub rank_cap: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    pub gram_tol: f64,
    pub action_tol: f64,
    pub eps_decay: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ChecksConfig {
    pub boxes: Vec<f64>,
    pub vanish_orders: usize,
    pub section_samples: usize,
    pub action_functions: usize,
    pub annulus_step: f64,
    pub annulus_margin: f64,
    pub mercer_samples: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub half_width: f64,
    pub points: usize,
    /// Extra derivative blocks (i, j) for the kernel export.
    pub derivatives: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunMeta {
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub space: SpaceConfig,
    pub window: WindowConfig,
    pub wavelet: WaveletConfig,
    pub pairing: PairingConfig,
    pub kernel: KernelConfig,
    pub tolerances: ToleranceConfig,
    pub checks: ChecksConfig,
    pub grid: GridConfig,
    pub run: RunMeta,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            version: CONFIG_VERSION,
            space: SpaceConfig { dim: 128 },
            window: WindowConfig {
                j_min: -124,
                j_max: 3,
                k_min: -4,
                k_max: 4,
            },
            wavelet: WaveletConfig {
                m_max: 3,
                points_per_panel: 16,
                cycles_per_panel: 1.5,
                min_panels: 4,
                max_panels: 4096,
                quad_tol: 1e-10,
                sup_search_radius: 40.0,
                decay_radius: 45.0,
            },
            pairing: PairingConfig {
                pairs: 12,
                start_scale: 0,
                dg_budget: 1.0,
                h_budget_factor: 3.5,
            },
            kernel: KernelConfig { rank_cap: 20 },
            tolerances: ToleranceConfig {
                gram_tol: 1e-6,
                action_tol: 1e-6,
                eps_decay: 1e-4,
            },
            checks: ChecksConfig {
                boxes: vec![10.0, 20.0, 40.0],
                vanish_orders: 2,
                section_samples: 16,
                action_functions: 20,
                annulus_step: 0.5,
                annulus_margin: 8.0,
                mercer_samples: 5,
            },
            grid: GridConfig {
                half_width: 10.0,
                points: 101,
                derivatives: vec![],
            },
            run: RunMeta { seed: 7 },
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        if self.space.dim == 0 {
            return Err(Error::Config("section dimension must be positive".into()));
        }
        if self.window.j_min > self.window.j_max || self.window.k_min > self.window.k_max {
            return Err(Error::Config("empty atom window".into()));
        }
        if self.pairing.pairs == 0 || self.pairing.pairs >= self.space.dim {
            return Err(Error::Config(format!(
                "pair count {} must sit strictly inside the section dimension {}",
                self.pairing.pairs, self.space.dim
            )));
        }
        for (name, value) in [
            ("gram_tol", self.tolerances.gram_tol),
            ("action_tol", self.tolerances.action_tol),
            ("eps_decay", self.tolerances.eps_decay),
            ("quad_tol", self.wavelet.quad_tol),
        ] {
            if value <= 0.0 {
                return Err(Error::Config(format!("tolerance {name} must be positive")));
            }
        }
        if self.wavelet.points_per_panel == 0
            || self.wavelet.cycles_per_panel <= 0.0
            || self.wavelet.max_panels == 0
        {
            return Err(Error::Config("degenerate quadrature specification".into()));
        }
        if self.grid.points == 0 || self.grid.half_width <= 0.0 {
            return Err(Error::Config("degenerate export grid".into()));
        }
        if self.checks.boxes.is_empty()
            || self.checks.boxes.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::Config(
                "decay boxes must be strictly increasing".into(),
            ));
        }
        for (i, j) in &self.grid.derivatives {
            if *i > self.wavelet.m_max || *j > self.wavelet.m_max {
                return Err(Error::Config(format!(
                    "export derivative ({i},{j}) exceeds m_max {}",
                    self.wavelet.m_max
                )));
            }
        }
        if self.checks.vanish_orders > self.wavelet.m_max {
            return Err(Error::Config(format!(
                "vanish_orders {} exceeds m_max {}",
                self.checks.vanish_orders, self.wavelet.m_max
            )));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: RunConfig = toml::from_str(&text)
            .map_err(|err| Error::Config(format!("{}: {err}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml())?;
        Ok(())
    }

    /// Canonical serialized form (field order is fixed by the structs).
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical serialization, stamped into every output.
    pub fn hash_hex(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn quadrature_spec(&self) -> QuadratureSpec {
        QuadratureSpec {
            points_per_panel: self.wavelet.points_per_panel,
            cycles_per_panel: self.wavelet.cycles_per_panel,
            min_panels: self.wavelet.min_panels,
            max_panels: self.wavelet.max_panels,
            tol: self.wavelet.quad_tol,
        }
    }

    pub fn build_mother(&self) -> MotherWavelet {
        MotherWavelet::new(
            make_bell(TransitionKind::SmoothExponential),
            self.quadrature_spec(),
            self.wavelet.m_max,
            self.wavelet.sup_search_radius,
            self.wavelet.decay_radius,
        )
    }

    pub fn build_enumeration(&self) -> Result<BasisEnumeration> {
        BasisEnumeration::new(
            (self.window.j_min, self.window.j_max),
            (self.window.k_min, self.window.k_max),
        )
    }

    pub fn gram_quad(&self) -> GramQuad {
        GramQuad {
            points_per_panel: self.wavelet.points_per_panel,
            cycles_per_panel: self.wavelet.cycles_per_panel,
            certify_tol: self.tolerances.gram_tol * 0.25,
        }
    }

    pub fn check_config(&self) -> CheckConfig {
        CheckConfig {
            eps_decay: self.tolerances.eps_decay,
            boxes: self.checks.boxes.clone(),
            vanish_orders: self.checks.vanish_orders,
            action_tol: self.tolerances.action_tol,
            grid_half_width: self.grid.half_width,
            grid_points: self.grid.points,
            annulus_step: self.checks.annulus_step,
            annulus_margin: self.checks.annulus_margin,
            section_samples: self.checks.section_samples,
            action_functions: self.checks.action_functions,
            seed: self.run.seed,
        }
    }
}
