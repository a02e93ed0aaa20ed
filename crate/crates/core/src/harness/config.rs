use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::{default_t0, PacketSpec};
use crate::error::{Error, Result};
use crate::model::DiabaticModel;
use crate::spectral::Grid1D;

/// A number given either literally or as an arithmetic expression such as
/// `"-pi/3"`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Num(pub f64);

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Float(f64),
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Float(v) => Ok(Num(v)),
            Raw::Int(v) => Ok(Num(v as f64)),
            Raw::Text(s) => meval::eval_str(&s)
                .map(Num)
                .map_err(|e| serde::de::Error::custom(format!("cannot evaluate {s:?}: {e}"))),
        }
    }
}

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Sweep,
    Spectrum,
    Histories,
    Verify,
}

/// Sech-family coupling `θ′ = (c/2) sech(αq)` with constant half-gap δ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub c: Num,
    pub alpha: Num,
    pub delta: Num,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub x_min: Num,
    pub x_max: Num,
    pub points: usize,
    /// Points of the grid carrying the recursion tables.
    #[serde(default = "default_table_points")]
    pub table_points: usize,
}

fn default_table_points() -> usize {
    2048
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Gaussian,
    Sextic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketBlock {
    #[serde(default = "default_shape")]
    pub shape: Shape,
    pub p0: Num,
    pub sigma2: Option<Num>,
}

fn default_shape() -> Shape {
    Shape::Gaussian
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum StartTime {
    Auto,
    At(f64),
}

impl<'de> Deserialize<'de> for StartTime {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Float(f64),
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Float(v) => Ok(StartTime::At(v)),
            Raw::Int(v) => Ok(StartTime::At(v as f64)),
            Raw::Text(s) if s == "auto" => Ok(StartTime::Auto),
            Raw::Text(s) => meval::eval_str(&s).map(StartTime::At).map_err(|e| {
                serde::de::Error::custom(format!("t0 must be \"auto\" or a number, got {s:?}: {e}"))
            }),
        }
    }
}

fn auto() -> StartTime {
    StartTime::Auto
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    pub epsilon: Num,
    #[serde(default = "auto")]
    pub t0: StartTime,
    pub dt: Num,
    pub t_final: Num,
    /// Extra times at which `simulate` writes the spectrum.
    #[serde(default)]
    pub snapshots: Vec<Num>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistoriesBlock {
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_sample_every")]
    pub sample_every: usize,
}

fn default_n_max() -> usize {
    5
}

fn default_sample_every() -> usize {
    25
}

impl Default for HistoriesBlock {
    fn default() -> Self {
        Self {
            n_max: default_n_max(),
            sample_every: default_sample_every(),
        }
    }
}

/// One sweep point; unset fields fall back to the base blocks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepEntry {
    pub epsilon: Num,
    pub p0: Option<Num>,
    pub points: Option<usize>,
    pub x_min: Option<Num>,
    pub x_max: Option<Num>,
    pub dt: Option<Num>,
    pub t_final: Option<Num>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default = "default_experiment")]
    experiment: Experiment,
    model: Option<ModelBlock>,
    grid: Option<GridBlock>,
    packet: Option<PacketBlock>,
    run: Option<RunBlock>,
    #[serde(default)]
    histories: HistoriesBlock,
    #[serde(default)]
    sweep: Vec<SweepEntry>,
}

fn default_experiment() -> Experiment {
    Experiment::Spectrum
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub model: ModelBlock,
    pub grid: GridBlock,
    pub packet: PacketBlock,
    pub run: RunBlock,
    pub histories: HistoriesBlock,
    pub sweep: Vec<SweepEntry>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let missing = |name: &str| Error::Config(format!("missing [{name}] block"));
        let cfg = Self {
            experiment: raw.experiment,
            model: raw.model.ok_or_else(|| missing("model"))?,
            grid: raw.grid.ok_or_else(|| missing("grid"))?,
            packet: raw.packet.ok_or_else(|| missing("packet"))?,
            run: raw.run.ok_or_else(|| missing("run"))?,
            histories: raw.histories,
            sweep: raw.sweep,
        };
        cfg.validate()?;
        for point in cfg.points() {
            point.validate()?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let eps = self.run.epsilon.0;
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Config(format!(
                "epsilon must lie in (0, 1), got {eps}"
            )));
        }
        if !(self.run.dt.0 > 0.0) {
            return Err(Error::Config(format!(
                "dt must be positive, got {}",
                self.run.dt
            )));
        }
        if let (StartTime::At(t0), t1) = (self.run.t0, self.run.t_final.0) {
            if !(t1 > t0) {
                return Err(Error::Config(format!("t_final {t1} must exceed t0 {t0}")));
            }
        }
        if self.histories.sample_every == 0 {
            return Err(Error::Config(
                "histories.sample_every must be positive".into(),
            ));
        }
        self.model()?;
        self.solver_grid()?;
        self.packet()?;
        Ok(())
    }

    pub fn epsilon(&self) -> f64 {
        self.run.epsilon.0
    }

    pub fn model(&self) -> Result<DiabaticModel> {
        DiabaticModel::sech(self.model.c.0, self.model.alpha.0, self.model.delta.0)
    }

    pub fn solver_grid(&self) -> Result<Arc<Grid1D>> {
        Grid1D::new(
            self.grid.x_min.0,
            self.grid.x_max.0,
            self.grid.points,
            self.epsilon(),
        )
    }

    pub fn table_grid(&self) -> Result<Arc<Grid1D>> {
        Grid1D::new(
            self.grid.x_min.0,
            self.grid.x_max.0,
            self.grid.table_points,
            self.epsilon(),
        )
    }

    pub fn packet(&self) -> Result<PacketSpec> {
        let p0 = self.packet.p0.0;
        match self.packet.shape {
            Shape::Gaussian => {
                PacketSpec::gaussian(p0, self.packet.sigma2.map_or(2.0, |s| s.0), self.epsilon())
            }
            Shape::Sextic => {
                if self.packet.sigma2.is_some() {
                    return Err(Error::Config(
                        "sigma2 applies to Gaussian packets only".into(),
                    ));
                }
                PacketSpec::sextic(p0, self.epsilon())
            }
        }
    }

    pub fn t0(&self) -> Result<f64> {
        Ok(match self.run.t0 {
            StartTime::At(t) => t,
            StartTime::Auto => default_t0(&self.packet()?, &self.model()?),
        })
    }

    /// The configuration of every sweep point, or of this run alone when no
    /// points are listed.
    pub fn points(&self) -> Vec<RunConfig> {
        if self.sweep.is_empty() {
            return vec![self.clone()];
        }
        self.sweep
            .iter()
            .map(|p| {
                let mut c = self.clone();
                c.sweep.clear();
                c.run.epsilon = p.epsilon;
                if let Some(v) = p.p0 {
                    c.packet.p0 = v;
                }
                if let Some(v) = p.points {
                    c.grid.points = v;
                }
                if let Some(v) = p.x_min {
                    c.grid.x_min = v;
                }
                if let Some(v) = p.x_max {
                    c.grid.x_max = v;
                }
                if let Some(v) = p.dt {
                    c.run.dt = v;
                }
                if let Some(v) = p.t_final {
                    c.run.t_final = v;
                }
                c
            })
            .collect()
    }

    /// SHA-256 of the canonical JSON form, so formatting does not matter.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("configuration serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}
