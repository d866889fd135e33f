//! Experiment configuration: flat `key = value` files with defaults, the
//! mapping from parameters to generator specs, and threshold presets.

use std::fs;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::generators::{GeneratorSpec, KernelShape};
use crate::grid::{Grid, GridFunction};
use crate::kv::{format_f64, KeyValues};
use crate::margins::MarginSpec;
use crate::processes::{default_clip, MixingDf};

pub const CONFIG_KEYS: &[&str] = &[
    "seed",
    "grid",
    "paths",
    "samples",
    "generator",
    "width",
    "atoms",
    "dim",
    "p",
    "process",
    "clip",
    "s",
    "s_list",
    "f",
    "f_file",
    "t0",
    "y_points",
    "margin",
    "eps_trunc",
    "min_exceedances",
    "conditioned",
];

/// Builds a generator from `generator` plus its named parameters:
/// `triangular`/`rectangular` take `width` (half-width for the triangle),
/// `discrete` takes `atoms` (rows separated by `;`, entries by spaces),
/// `logistic` takes `dim` and `p` (`p = inf` allowed).
pub fn generator_from_keys(kv: &KeyValues) -> Result<GeneratorSpec> {
    let name = kv.get("generator").unwrap_or("triangular");
    match name {
        "constant" => Ok(GeneratorSpec::Constant),
        "triangular" => GeneratorSpec::moving_triangular(kv.get_parsed("width")?.unwrap_or(0.25)),
        "rectangular" => GeneratorSpec::moving_rectangular(kv.get_parsed("width")?.unwrap_or(0.25)),
        "discrete" => {
            let text = kv.get("atoms").ok_or_else(|| Error::Parse("generator 'discrete' needs 'atoms'".into()))?;
            GeneratorSpec::discrete_interpolated(parse_atoms(text)?)
        }
        "logistic" => GeneratorSpec::logistic_frechet(kv.require("dim")?, kv.require("p")?),
        other => Err(Error::Parse(format!("unknown generator '{other}'"))),
    }
}

fn parse_atoms(text: &str) -> Result<Vec<Vec<f64>>> {
    text.split(';')
        .map(|row| {
            row.split_whitespace()
                .map(|v| v.parse::<f64>().map_err(|e| Error::Parse(format!("atom entry '{v}': {e}"))))
                .collect()
        })
        .collect()
}

/// Inverse of [`generator_from_keys`]; writes exactly the keys in use.
pub fn generator_to_keys(spec: &GeneratorSpec, kv: &mut KeyValues) {
    for key in ["generator", "width", "atoms", "dim", "p"] {
        kv.remove(key);
    }
    match spec {
        GeneratorSpec::Constant => kv.set("generator", "constant"),
        GeneratorSpec::MovingKernel(KernelShape::Triangular { half_width }) => {
            kv.set("generator", "triangular");
            kv.set("width", format_f64(*half_width));
        }
        GeneratorSpec::MovingKernel(KernelShape::Rectangular { width }) => {
            kv.set("generator", "rectangular");
            kv.set("width", format_f64(*width));
        }
        GeneratorSpec::DiscreteInterpolated { atoms } => {
            kv.set("generator", "discrete");
            let rows: Vec<String> =
                atoms.iter().map(|a| a.iter().map(|&v| format_f64(v)).collect::<Vec<_>>().join(" ")).collect();
            kv.set("atoms", rows.join("; "));
        }
        GeneratorSpec::LogisticFrechet { dim, p } => {
            kv.set("generator", "logistic");
            kv.set("dim", dim);
            kv.set("p", format_f64(*p));
        }
    }
}

/// Named threshold-function shapes on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum FSelection {
    /// `f = -1`.
    Constant,
    /// `f(t) = t - 1`.
    Linear,
    /// `f(t) = -(2 - t)`; its sup norm is 2, so it only serves the
    /// generator functionals, not threshold specs.
    Shifted,
    /// One value per grid point, whitespace or comma separated.
    File(PathBuf),
}

impl FSelection {
    pub fn name(&self) -> &'static str {
        match self {
            FSelection::Constant => "const",
            FSelection::Linear => "linear",
            FSelection::Shifted => "shifted",
            FSelection::File(_) => "file",
        }
    }

    pub fn build(&self, grid: Grid) -> Result<GridFunction> {
        match self {
            FSelection::Constant => GridFunction::constant(grid, -1.0),
            FSelection::Linear => GridFunction::from_fn(grid, |t| t - 1.0),
            FSelection::Shifted => GridFunction::from_fn(grid, |t| -(2.0 - t)),
            FSelection::File(path) => {
                let text = fs::read_to_string(path)?;
                let values = text
                    .lines()
                    .filter(|l| !l.trim_start().starts_with('#'))
                    .flat_map(|l| l.split(|c: char| c == ',' || c.is_whitespace()))
                    .filter(|v| !v.is_empty())
                    .map(|v| v.parse::<f64>().map_err(|e| Error::Parse(format!("f file entry '{v}': {e}"))))
                    .collect::<Result<Vec<_>>>()?;
                GridFunction::new(grid, values)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProcessChoice {
    /// Standard generalized Pareto process, uniform mixing.
    Gpp,
    /// Pareto-type process with exponential mixing.
    Perturbed,
    MaxStable,
}

impl ProcessChoice {
    pub fn name(&self) -> &'static str {
        match self {
            ProcessChoice::Gpp => "gpp",
            ProcessChoice::Perturbed => "perturbed",
            ProcessChoice::MaxStable => "msp",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "gpp" => Ok(ProcessChoice::Gpp),
            "perturbed" => Ok(ProcessChoice::Perturbed),
            "msp" => Ok(ProcessChoice::MaxStable),
            other => Err(Error::Parse(format!("unknown process '{other}'"))),
        }
    }

    pub fn mixing(&self) -> Option<MixingDf> {
        match self {
            ProcessChoice::Gpp => Some(MixingDf::Uniform01),
            ProcessChoice::Perturbed => Some(MixingDf::StdExponential),
            ProcessChoice::MaxStable => None,
        }
    }
}

/// Fully resolved experiment parameters. The seed determines every output.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub grid: usize,
    pub paths: usize,
    /// Generator samples for the theoretical functionals.
    pub samples: usize,
    pub generator: GeneratorSpec,
    pub process: ProcessChoice,
    /// Clip `M` of Pareto-type processes; `None` means `-10^6 / m`.
    pub clip: Option<f64>,
    pub s: f64,
    pub s_list: Vec<f64>,
    pub f: FSelection,
    pub t0: f64,
    pub y_points: usize,
    /// Target margin; `None` keeps the native margin of the process.
    pub margin: Option<MarginSpec>,
    pub eps_trunc: f64,
    pub min_exceedances: usize,
    /// Draw the mixing variable conditioned on the exceedance-relevant event.
    pub conditioned: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            grid: 100,
            paths: 100_000,
            samples: 100_000,
            generator: GeneratorSpec::moving_triangular(0.25).expect("valid default kernel"),
            process: ProcessChoice::Gpp,
            clip: None,
            s: 1e-3,
            s_list: vec![1e-1, 1e-2, 1e-3],
            f: FSelection::Constant,
            t0: 0.25,
            y_points: 101,
            margin: None,
            eps_trunc: 1e-6,
            min_exceedances: crate::sojourn::DEFAULT_MIN_EXCEEDANCES,
            conditioned: false,
        }
    }
}

fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| Error::Parse(format!("list entry '{v}': {e}"))))
        .collect()
}

impl ExperimentConfig {
    /// Defaults overridden by the keys present in `kv`; unknown keys fail.
    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        kv.check_keys(CONFIG_KEYS)?;
        let d = Self::default();
        let f = match kv.get("f").unwrap_or("const") {
            "const" => FSelection::Constant,
            "linear" => FSelection::Linear,
            "shifted" => FSelection::Shifted,
            "file" => FSelection::File(kv.require::<String>("f_file")?.into()),
            other => return Err(Error::Parse(format!("unknown f preset '{other}'"))),
        };
        let clip = match kv.get("clip") {
            None | Some("default") => None,
            Some(_) => kv.get_parsed("clip")?,
        };
        let margin = match kv.get("margin") {
            None | Some("native") => None,
            Some(name) => Some(MarginSpec::from_name(name)?),
        };
        let cfg = Self {
            seed: kv.get_parsed("seed")?.unwrap_or(d.seed),
            grid: kv.get_parsed("grid")?.unwrap_or(d.grid),
            paths: kv.get_parsed("paths")?.unwrap_or(d.paths),
            samples: kv.get_parsed("samples")?.unwrap_or(d.samples),
            generator: if kv.get("generator").is_some() { generator_from_keys(kv)? } else { d.generator },
            process: kv.get("process").map(ProcessChoice::from_name).transpose()?.unwrap_or(d.process),
            clip,
            s: kv.get_parsed("s")?.unwrap_or(d.s),
            s_list: kv.get("s_list").map(parse_list).transpose()?.unwrap_or(d.s_list),
            f,
            t0: kv.get_parsed("t0")?.unwrap_or(d.t0),
            y_points: kv.get_parsed("y_points")?.unwrap_or(d.y_points),
            margin,
            eps_trunc: kv.get_parsed("eps_trunc")?.unwrap_or(d.eps_trunc),
            min_exceedances: kv.get_parsed("min_exceedances")?.unwrap_or(d.min_exceedances),
            conditioned: kv.get_parsed("conditioned")?.unwrap_or(d.conditioned),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        Grid::new(self.grid)?;
        if self.paths < 2 || self.samples < 2 {
            return Err(Error::InvalidArgument("paths and samples must be at least 2".into()));
        }
        if self.y_points < 2 {
            return Err(Error::InvalidArgument("y_points must be at least 2".into()));
        }
        if let Some(s) = std::iter::once(&self.s).chain(&self.s_list).find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidArgument(format!("threshold level {s} must be positive")));
        }
        if !(0.0..1.0).contains(&self.t0) {
            return Err(Error::InvalidArgument(format!("t0 = {} outside [0, 1)", self.t0)));
        }
        if !(self.eps_trunc > 0.0) {
            return Err(Error::InvalidArgument("eps_trunc must be positive".into()));
        }
        if let Some(c) = self.clip {
            if !(c < 0.0) {
                return Err(Error::InvalidArgument(format!("clip {c} must be negative")));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.grid).expect("validated grid size")
    }

    pub fn clip(&self) -> f64 {
        self.clip.unwrap_or_else(|| default_clip(&self.generator))
    }

    /// Canonical rendering with every key resolved, in a fixed order.
    pub fn to_kv(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        kv.set("seed", self.seed);
        kv.set("grid", self.grid);
        kv.set("paths", self.paths);
        kv.set("samples", self.samples);
        generator_to_keys(&self.generator, &mut kv);
        kv.set("process", self.process.name());
        kv.set("clip", self.clip.map_or("default".to_string(), format_f64));
        kv.set("s", format_f64(self.s));
        kv.set("s_list", self.s_list.iter().map(|&s| format_f64(s)).collect::<Vec<_>>().join(","));
        kv.set("f", self.f.name());
        if let FSelection::File(path) = &self.f {
            kv.set("f_file", path.display());
        }
        kv.set("t0", format_f64(self.t0));
        kv.set("y_points", self.y_points);
        kv.set("margin", self.margin.map_or("native", |m| m.name()));
        kv.set("eps_trunc", format_f64(self.eps_trunc));
        kv.set("min_exceedances", self.min_exceedances);
        kv.set("conditioned", self.conditioned);
        kv
    }
}
