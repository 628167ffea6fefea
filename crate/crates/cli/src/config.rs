//! Run configuration: TOML file, command-line overrides, per-command
//! defaults and range checks.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use phasemargins::constructions::MAX_N;
use phasemargins::reconstruct::MAX_MOMENT_DEGREE;
use serde::{Deserialize, Serialize};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    VerifyProp1,
    VerifyProp2,
    Reconstruct,
    CompletenessCheck,
}

/// Named generating operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Husimi,
    Prop1,
    Prop2(usize),
    RemarkF0,
}

impl FromStr for Preset {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "husimi" => Ok(Preset::Husimi),
            "prop1" => Ok(Preset::Prop1),
            "remark-f0" => Ok(Preset::RemarkF0),
            "prop2" => Ok(Preset::Prop2(4)),
            _ => match s.strip_prefix("prop2:") {
                Some(n) => n
                    .parse()
                    .map(Preset::Prop2)
                    .map_err(|_| ConfigError(format!("preset {s:?}: N must be a positive integer"))),
                None => err(format!("unknown preset {s:?} (husimi, prop1, prop2:N, remark-f0)")),
            },
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::Husimi => f.write_str("husimi"),
            Preset::Prop1 => f.write_str("prop1"),
            Preset::Prop2(n) => write!(f, "prop2:{n}"),
            Preset::RemarkF0 => f.write_str("remark-f0"),
        }
    }
}

impl Serialize for Preset {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convolver {
    Husimi,
    Prop1,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Fourier,
    Moments,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataMode {
    Exact,
    Sampled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Completeness {
    Complete,
    Incomplete,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MarginPattern {
    Equivalent,
    Inequivalent,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub line_half_width: Option<f64>,
    pub line_n: Option<usize>,
    pub field_half_width: Option<f64>,
    pub field_n: Option<usize>,
    pub band_half_width: Option<f64>,
    pub band_n: Option<usize>,
}

/// Everything settable from a config file or the command line.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub epsilon: Option<f64>,
    pub n_max: Option<usize>,
    /// Real Hermite coefficients, normalized on load.
    pub state: Option<Vec<f64>>,
    pub convolver: Option<Convolver>,
    pub method: Option<Method>,
    pub data: Option<DataMode>,
    pub samples: Option<usize>,
    pub l1_bound: Option<f64>,
    pub moment_degree: Option<usize>,
    pub expect_completeness: Option<Completeness>,
    pub expect_margins: Option<MarginPattern>,
    #[serde(default)]
    pub grid: GridSection,
}

impl RawConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }

    /// Fields set in `other` replace ours.
    pub fn overlay(mut self, other: RawConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(
            preset, seed, out, epsilon, n_max, state, convolver, method, data, samples, l1_bound, moment_degree,
            expect_completeness, expect_margins
        );
        macro_rules! take_grid {
            ($($f:ident),*) => { $( if other.grid.$f.is_some() { self.grid.$f = other.grid.$f; } )* };
        }
        take_grid!(line_half_width, line_n, field_half_width, field_n, band_half_width, band_n);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    pub half_width: f64,
    pub n: usize,
}

/// A fully specified run; serialized verbatim into every report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub preset: Preset,
    pub seed: u64,
    pub out: PathBuf,
    pub epsilon: f64,
    pub state: Vec<f64>,
    pub convolver: Convolver,
    pub method: Method,
    pub data: DataMode,
    pub samples: usize,
    pub l1_bound_fourier: f64,
    pub l1_bound_moments: f64,
    pub moment_degree: usize,
    pub expect_completeness: Completeness,
    pub expect_margins: MarginPattern,
    pub line: GridSpec,
    pub field: GridSpec,
    pub band: GridSpec,
}

pub const DEFAULT_EPSILON: f64 = phasemargins::infocheck::DEFAULT_EPSILON;

/// Reference grids (field, band) for each preset. Bands stop where the
/// Gaussian factor of a Husimi-based transform would sink below ε.
pub fn reference_grids(preset: Preset) -> (GridSpec, GridSpec) {
    match preset {
        Preset::Husimi => (GridSpec { half_width: 5.0, n: 201 }, GridSpec { half_width: 8.0, n: 321 }),
        Preset::Prop1 => (GridSpec { half_width: 5.0, n: 201 }, GridSpec { half_width: 8.0 * PI, n: 4001 }),
        Preset::Prop2(_) | Preset::RemarkF0 => {
            (GridSpec { half_width: 3.0, n: 121 }, GridSpec { half_width: 3.0, n: 241 })
        }
    }
}

pub const REFERENCE_LINE: GridSpec = GridSpec { half_width: 20.48, n: 8193 };

fn expected_pattern(preset: Preset) -> (Completeness, MarginPattern) {
    match preset {
        Preset::Husimi => (Completeness::Complete, MarginPattern::Equivalent),
        Preset::Prop1 => (Completeness::Incomplete, MarginPattern::Equivalent),
        Preset::Prop2(_) => (Completeness::Complete, MarginPattern::Inequivalent),
        Preset::RemarkF0 => (Completeness::Incomplete, MarginPattern::Equivalent),
    }
}

fn in_range<T: PartialOrd + fmt::Display + Copy>(name: &str, v: T, lo: T, hi: T) -> Result<T, ConfigError> {
    if v >= lo && v <= hi {
        Ok(v)
    } else {
        err(format!("{name} = {v} outside [{lo}, {hi}]"))
    }
}

impl RunConfig {
    pub fn resolve(command: Command, raw: RawConfig) -> Result<Self, ConfigError> {
        let mut preset = match &raw.preset {
            Some(s) => s.parse()?,
            None => match command {
                Command::VerifyProp1 => Preset::Prop1,
                Command::VerifyProp2 => Preset::Prop2(4),
                Command::Reconstruct => match raw.convolver {
                    Some(Convolver::Prop1) => Preset::Prop1,
                    _ => Preset::Husimi,
                },
                Command::CompletenessCheck => Preset::Husimi,
            },
        };
        if let Some(n) = raw.n_max {
            match preset {
                Preset::Prop2(m) if raw.preset.as_deref().is_some_and(|s| s.contains(':')) && m != n => {
                    return err(format!("n_max = {n} conflicts with preset prop2:{m}"));
                }
                Preset::Prop2(_) => preset = Preset::Prop2(n),
                _ => return err(format!("n_max only applies to prop2, not {preset}")),
            }
        }
        if let Preset::Prop2(n) = preset {
            in_range("n_max", n, 1, MAX_N)?;
        }
        match (command, preset) {
            (Command::VerifyProp1, Preset::Prop1) | (Command::VerifyProp2, Preset::Prop2(_)) => {}
            (Command::VerifyProp1, p) => return err(format!("verify-prop1 runs the prop1 operator, not {p}")),
            (Command::VerifyProp2, p) => return err(format!("verify-prop2 runs a prop2:N construction, not {p}")),
            _ => {}
        }

        let convolver = match (raw.convolver, preset) {
            (Some(c), _) => c,
            (None, Preset::Prop1) => Convolver::Prop1,
            (None, _) => Convolver::Husimi,
        };
        if command == Command::Reconstruct && raw.preset.is_some() {
            let matches = matches!((preset, convolver), (Preset::Husimi, Convolver::Husimi) | (Preset::Prop1, Convolver::Prop1));
            if !matches {
                return err(format!("reconstruct needs a husimi or prop1 convolver; preset {preset} with convolver {convolver:?}"));
            }
        }

        let epsilon = in_range("epsilon", raw.epsilon.unwrap_or(DEFAULT_EPSILON), 1e-15, 1e-2)?;
        let state = raw.state.clone().unwrap_or_else(|| vec![1.0]);
        if state.is_empty() || state.len() > 41 {
            return err(format!("state has {} coefficients; expected 1 to 41", state.len()));
        }
        if state.iter().any(|c| !c.is_finite()) || state.iter().all(|&c| c == 0.0) {
            return err("state coefficients must be finite and not all zero");
        }
        let data = raw.data.unwrap_or(DataMode::Exact);
        let samples = in_range("samples", raw.samples.unwrap_or(1_000_000), 100, 100_000_000)?;
        let moment_degree = in_range("moment_degree", raw.moment_degree.unwrap_or(6), 2, MAX_MOMENT_DEGREE)?;
        if moment_degree % 2 == 1 {
            return err(format!("moment_degree = {moment_degree} must be even"));
        }
        let (l1_bound_fourier, l1_bound_moments) = match (raw.l1_bound, data, convolver) {
            (Some(b), _, _) => {
                let b = in_range("l1_bound", b, 1e-15, 2.0)?;
                (b, b)
            }
            (None, DataMode::Sampled, _) => (0.02, 0.02),
            (None, DataMode::Exact, Convolver::Husimi) => (1e-6, 1e-6),
            (None, DataMode::Exact, Convolver::Prop1) => (1e-3, 1e-6),
        };
        let (expect_c, expect_m) = expected_pattern(preset);

        let (field_ref, band_ref) = reference_grids(preset);
        let g = &raw.grid;
        let line = GridSpec {
            half_width: in_range("grid.line_half_width", g.line_half_width.unwrap_or(REFERENCE_LINE.half_width), 4.0, 200.0)?,
            n: in_range("grid.line_n", g.line_n.unwrap_or(REFERENCE_LINE.n), 513, 65_537)?,
        };
        let field = GridSpec {
            half_width: in_range("grid.field_half_width", g.field_half_width.unwrap_or(field_ref.half_width), 0.5, 20.0)?,
            n: in_range("grid.field_n", g.field_n.unwrap_or(field_ref.n), 5, 1001)?,
        };
        let band = GridSpec {
            half_width: in_range("grid.band_half_width", g.band_half_width.unwrap_or(band_ref.half_width), 0.5, 200.0)?,
            n: in_range("grid.band_n", g.band_n.unwrap_or(band_ref.n), 11, 40_001)?,
        };

        Ok(RunConfig {
            command,
            preset,
            seed: raw.seed.unwrap_or(1),
            out: raw.out.clone().unwrap_or_else(|| PathBuf::from("out")),
            epsilon,
            state,
            convolver,
            method: raw.method.unwrap_or(Method::Fourier),
            data,
            samples,
            l1_bound_fourier,
            l1_bound_moments,
            moment_degree,
            expect_completeness: raw.expect_completeness.unwrap_or(expect_c),
            expect_margins: raw.expect_margins.unwrap_or(expect_m),
            line,
            field,
            band,
        })
    }

    /// Grids coarser than the reference resolution for this preset.
    pub fn resolution_warnings(&self) -> Vec<String> {
        let (field_ref, band_ref) = reference_grids(self.preset);
        let mut out = Vec::new();
        let mut cmp = |name: &str, used: GridSpec, reference: GridSpec| {
            let dx = 2.0 * used.half_width / (used.n - 1) as f64;
            let ref_dx = 2.0 * reference.half_width / (reference.n - 1) as f64;
            if dx > ref_dx * (1.0 + 1e-9) {
                out.push(format!(
                    "{name} spacing {dx:.4} is coarser than the reference {ref_dx:.4}; verdicts are resolution limited"
                ));
            }
        };
        match self.command {
            Command::Reconstruct => cmp("line grid", self.line, REFERENCE_LINE),
            _ => {
                cmp("field grid", self.field, field_ref);
                cmp("band grid", self.band, band_ref);
            }
        }
        out
    }
}
