use std::path::{Path, PathBuf};

use clap::ValueEnum;
use qar_core::damping::{NormMode, DEFAULT_HORIZON, DEFAULT_SAMPLES};
use qar_core::optimize::{OptimizeConfig, DEFAULT_COEFF_BOX, DEFAULT_GAMMA_STEP, DEFAULT_REFINE_STEP};
use qar_core::spectral::critical_damping_window;
use qar_core::CouplingCase;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    /// Only the c↔h coupling `g_w` is kept.
    Gw,
    /// Only the g↔c coupling `g_c` is kept.
    Gc,
}

impl Case {
    pub fn coupling(self) -> CouplingCase {
        match self {
            Case::Gw => CouplingCase::GwOnly,
            Case::Gc => CouplingCase::GcOnly,
        }
    }

    /// Default `γ⁻` and chain coefficients: the reported optimum sets.
    pub fn defaults(self) -> (f64, [f64; 4]) {
        match self {
            Case::Gw => (7.159, [0.0, 0.125, 0.1, 0.0]),
            Case::Gc => (5.857, [0.127, 0.1, 0.0, 0.0]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    Vector1,
    Trace,
}

impl Norm {
    pub fn mode(self) -> NormMode {
        match self {
            Norm::Vector1 => NormMode::Vector1,
            Norm::Trace => NormMode::Trace,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SweepVariable {
    C1,
    C2,
    C3,
    C4,
    GammaMinus,
}

impl SweepVariable {
    /// 1-based coefficient index, `None` for `γ⁻`.
    pub fn coefficient(self) -> Option<usize> {
        match self {
            SweepVariable::C1 => Some(1),
            SweepVariable::C2 => Some(2),
            SweepVariable::C3 => Some(3),
            SweepVariable::C4 => Some(4),
            SweepVariable::GammaMinus => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::C1 => "c1",
            SweepVariable::C2 => "c2",
            SweepVariable::C3 => "c3",
            SweepVariable::C4 => "c4",
            SweepVariable::GammaMinus => "gamma_minus",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Spectrum,
    Lep3,
    Evolve,
    Heat,
    Damping,
    Optimize,
    Sweep,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Spectrum => "spectrum",
            CommandKind::Lep3 => "lep3",
            CommandKind::Evolve => "evolve",
            CommandKind::Heat => "heat",
            CommandKind::Damping => "damping",
            CommandKind::Optimize => "optimize",
            CommandKind::Sweep => "sweep",
        }
    }

    /// Commands whose table goes to stdout when no output file is given.
    pub fn emits_data(self) -> bool {
        !matches!(self, CommandKind::Spectrum | CommandKind::Lep3)
    }

    /// Commands defined only at the third-order point.
    fn needs_lep3(self) -> bool {
        matches!(
            self,
            CommandKind::Lep3 | CommandKind::Damping | CommandKind::Optimize | CommandKind::Sweep
        )
    }

    /// Commands that take chain coefficients and so default to the
    /// third-order point unless explicit rates are given.
    fn implies_lep3(self) -> bool {
        self.needs_lep3() || self == CommandKind::Heat
    }
}

/// Partially specified configuration, as read from a file or flags.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub case: Option<Case>,
    pub omega: Option<f64>,
    pub gamma_minus: Option<f64>,
    pub gamma_plus: Option<f64>,
    pub g: Option<f64>,
    pub lep3: Option<bool>,
    pub coeffs: Option<Vec<f64>>,
    pub populations: Option<Vec<f64>>,
    pub t_end: Option<f64>,
    pub samples: Option<usize>,
    pub norm: Option<Norm>,
    pub ref_g: Option<Vec<f64>>,
    pub variable: Option<SweepVariable>,
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub steps: Option<usize>,
    pub fixed_index: Option<usize>,
    pub fixed_value: Option<f64>,
    pub gamma_min: Option<f64>,
    pub gamma_max: Option<f64>,
    pub gamma_step: Option<f64>,
    pub refine_step: Option<f64>,
    pub coeff_box: Option<Vec<f64>>,
    pub strict_psd: Option<bool>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    /// Reads a TOML file. A metadata sidecar is accepted too, in which case its
    /// `[config]` table is used.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    pub fn from_toml(text: &str) -> std::result::Result<Self, toml::de::Error> {
        let mut table: toml::Table = toml::from_str(text)?;
        let value = match table.remove("config") {
            Some(inner @ toml::Value::Table(_)) => inner,
            Some(other) => {
                table.insert("config".into(), other);
                toml::Value::Table(table)
            }
            None => toml::Value::Table(table),
        };
        value.try_into()
    }
}

/// Fully resolved run configuration. Written verbatim to the metadata sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub case: Case,
    pub omega: f64,
    pub gamma_minus: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_plus: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    pub lep3: bool,
    pub coeffs: [f64; 4],
    pub populations: [f64; 3],
    pub t_end: f64,
    pub samples: usize,
    pub norm: Norm,
    pub ref_g: Vec<f64>,
    pub variable: SweepVariable,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
    pub fixed_index: usize,
    pub fixed_value: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub gamma_step: f64,
    pub refine_step: f64,
    pub coeff_box: [f64; 2],
    pub strict_psd: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

const DEFAULT_REF_G: [f64; 2] = [1.314, 0.414];
const DEFAULT_SWEEP_STEPS: usize = 101;

fn finite(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::config(format!("{name} must be finite, got {x}")))
    }
}

fn positive(name: &str, x: f64) -> Result<f64> {
    if finite(name, x)? > 0.0 {
        Ok(x)
    } else {
        Err(CliError::config(format!("{name} must be positive, got {x}")))
    }
}

fn fixed_len<const N: usize>(name: &str, v: &[f64]) -> Result<[f64; N]> {
    let arr: [f64; N] = v
        .try_into()
        .map_err(|_| CliError::config(format!("{name} needs {N} values, got {}", v.len())))?;
    for x in arr {
        finite(name, x)?;
    }
    Ok(arr)
}

impl RunConfig {
    /// Fills defaults and validates. Flags and file values are already merged
    /// into `o`.
    pub fn resolve(kind: CommandKind, o: &Overrides) -> Result<Self> {
        let case = o.case.ok_or_else(|| CliError::config("--case is required"))?;
        let (default_gm, default_coeffs) = case.defaults();
        let omega = positive("omega", o.omega.unwrap_or(1.0))?;
        let gamma_minus = positive("gamma_minus", o.gamma_minus.unwrap_or(default_gm))?;

        let lep3 = o.lep3.unwrap_or(kind.implies_lep3() && o.gamma_plus.is_none());
        if lep3 && o.gamma_plus.is_some() {
            return Err(CliError::config("--gamma-plus cannot be combined with --lep3"));
        }
        if kind.needs_lep3() && !lep3 {
            return Err(CliError::config(format!(
                "{} runs at the third-order point only",
                kind.name()
            )));
        }
        if !lep3 && (o.gamma_plus.is_none() || o.g.is_none()) {
            return Err(CliError::config(
                "without --lep3 both --gamma-plus and --g are required",
            ));
        }
        if let Some(gp) = o.gamma_plus {
            if finite("gamma_plus", gp)? < 0.0 {
                return Err(CliError::config("gamma_plus must be nonnegative"));
            }
        }
        if let Some(g) = o.g {
            if finite("g", g)? < 0.0 {
                return Err(CliError::config("g must be nonnegative"));
            }
        }

        let coeffs = match &o.coeffs {
            Some(c) => fixed_len::<4>("coeffs", c)?,
            None => default_coeffs,
        };
        let populations = match &o.populations {
            Some(p) => fixed_len::<3>("populations", p)?,
            None => [1.0, 0.0, 0.0],
        };
        if populations.iter().any(|&p| p < 0.0) || (populations.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(CliError::config("populations must be nonnegative and sum to 1"));
        }

        let t_end = finite("t_end", o.t_end.unwrap_or(DEFAULT_HORIZON / omega))?;
        let samples = o.samples.unwrap_or(DEFAULT_SAMPLES);
        if samples == 0 {
            return Err(CliError::config("time grid is empty (samples = 0)"));
        }
        if t_end < 0.0 || (samples > 1 && t_end == 0.0) {
            return Err(CliError::config(format!("t_end must be positive, got {t_end}")));
        }

        let ref_g = o.ref_g.clone().unwrap_or_else(|| DEFAULT_REF_G.to_vec());
        if ref_g.is_empty() {
            return Err(CliError::config("at least one reference coupling is required"));
        }
        for &g in &ref_g {
            if finite("ref_g", g)? < 0.0 {
                return Err(CliError::config("ref_g must be nonnegative"));
            }
        }

        let standard = OptimizeConfig::standard(case.coupling());
        let gamma_step = positive("gamma_step", o.gamma_step.unwrap_or(DEFAULT_GAMMA_STEP))?;
        let refine_step = positive("refine_step", o.refine_step.unwrap_or(DEFAULT_REFINE_STEP))?;
        let interior = OptimizeConfig {
            omega,
            gamma_step,
            ..standard
        }
        .bounds();
        let gamma_min = finite("gamma_min", o.gamma_min.unwrap_or(interior.0))?;
        let gamma_max = finite("gamma_max", o.gamma_max.unwrap_or(interior.1))?;
        if gamma_min > gamma_max {
            return Err(CliError::config("gamma_min exceeds gamma_max"));
        }
        let fixed_index = o.fixed_index.unwrap_or(standard.fixed.0);
        if !(1..=4).contains(&fixed_index) {
            return Err(CliError::config(format!(
                "fixed_index must be in 1..=4, got {fixed_index}"
            )));
        }
        let fixed_value = finite("fixed_value", o.fixed_value.unwrap_or(standard.fixed.1))?;
        let coeff_box = match &o.coeff_box {
            Some(b) => fixed_len::<2>("coeff_box", b)?,
            None => [DEFAULT_COEFF_BOX.0, DEFAULT_COEFF_BOX.1],
        };
        if coeff_box[0] >= coeff_box[1] {
            return Err(CliError::config("coeff_box needs lo < hi"));
        }

        let variable = o.variable.unwrap_or(SweepVariable::GammaMinus);
        let (lo, hi) = match variable {
            SweepVariable::GammaMinus => {
                let (a, b) = critical_damping_window(omega, case.coupling());
                let pad = 1e-3 * (b - a);
                (a + pad, b - pad)
            }
            _ => (coeff_box[0], coeff_box[1]),
        };
        let from = finite("from", o.from.unwrap_or(lo))?;
        let to = finite("to", o.to.unwrap_or(hi))?;
        let steps = o.steps.unwrap_or(DEFAULT_SWEEP_STEPS);
        if steps == 0 {
            return Err(CliError::config("sweep grid is empty (steps = 0)"));
        }

        Ok(Self {
            case,
            omega,
            gamma_minus,
            gamma_plus: o.gamma_plus,
            g: o.g,
            lep3,
            coeffs,
            populations,
            t_end,
            samples,
            norm: o.norm.unwrap_or(Norm::Vector1),
            ref_g,
            variable,
            from,
            to,
            steps,
            fixed_index,
            fixed_value,
            gamma_min,
            gamma_max,
            gamma_step,
            refine_step,
            coeff_box,
            strict_psd: o.strict_psd.unwrap_or(false),
            out: o.out.clone(),
        })
    }

    pub fn times(&self) -> Vec<f64> {
        if self.samples == 1 {
            vec![0.0]
        } else {
            qar_core::damping::time_grid(self.t_end, self.samples)
        }
    }

    pub fn sweep_values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.from];
        }
        let n = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| self.from + (self.to - self.from) * k as f64 / n)
            .collect()
    }

    pub fn optimize_config(&self) -> OptimizeConfig {
        OptimizeConfig {
            case: self.case.coupling(),
            omega: self.omega,
            fixed: (self.fixed_index, self.fixed_value),
            gamma_bounds: Some((self.gamma_min, self.gamma_max)),
            coeff_box: (self.coeff_box[0], self.coeff_box[1]),
            gamma_step: self.gamma_step,
            refine_step: self.refine_step,
            strict_psd: self.strict_psd,
        }
    }
}
