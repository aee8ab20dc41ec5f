use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};

use crate::config::{Case, CommandKind, Norm, Overrides, SweepVariable};
use crate::error::Result;

#[derive(Debug, Parser)]
#[command(
    name = "qar",
    version,
    about = "Three-level absorption refrigerator at third-order exceptional points",
    after_help = "Exit codes: 0 ok, 1 runtime failure, 2 configuration error, \
                  3 infeasible optimization, 4 horizon too short for a damping verdict.\n\
                  Set QAR_WORKERS to fix the worker-thread count."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues, classification and discriminants of the population block.
    Spectrum(CommonArgs),
    /// Third-order point, its Jordan chain and chain diagnostics.
    Lep3(CommonArgs),
    /// Time series of the population-block state.
    Evolve {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        time: TimeArgs,
    },
    /// Heat currents, accumulated heats and coefficients of performance.
    Heat {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        time: TimeArgs,
    },
    /// Damping ratios against reference couplings with verdicts.
    Damping {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        time: TimeArgs,
        #[command(flatten)]
        damping: DampingArgs,
    },
    /// Maximize the initial cold current under the performance constraints.
    Optimize {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        optimize: OptimizeArgs,
    },
    /// Initial and steady currents along a coefficient or γ⁻ grid.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        sweep: SweepArgs,
    },
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML configuration file; flags take precedence over its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Data file to write; a `.meta.toml` sidecar is written next to it.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub case: Option<Case>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub gamma_minus: Option<f64>,
    #[arg(long)]
    pub gamma_plus: Option<f64>,
    /// Active coupling; with `--lep3` it overrides `√2 ω`.
    #[arg(long)]
    pub g: Option<f64>,
    /// Derive `γ⁺` and `g` at the third-order point.
    #[arg(long)]
    pub lep3: bool,
    /// Chain coefficients `c1,c2,c3,c4`.
    #[arg(long = "c", value_delimiter = ',', allow_hyphen_values = true)]
    pub coeffs: Option<Vec<f64>>,
    /// Initial populations `p_g,p_c,p_h` for runs with explicit rates.
    #[arg(long, value_delimiter = ',')]
    pub populations: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct TimeArgs {
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Number of evenly spaced times in `[0, t_end]`.
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DampingArgs {
    /// Reference coupling; repeat for several series.
    #[arg(long = "ref-g", action = ArgAction::Append)]
    pub ref_g: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub norm: Option<Norm>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    /// 1-based index of the coefficient held fixed.
    #[arg(long)]
    pub fixed_index: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub fixed_value: Option<f64>,
    #[arg(long)]
    pub gamma_min: Option<f64>,
    #[arg(long)]
    pub gamma_max: Option<f64>,
    #[arg(long)]
    pub gamma_step: Option<f64>,
    #[arg(long)]
    pub refine_step: Option<f64>,
    /// Box `lo,hi` for the free coefficients.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub coeff_box: Option<Vec<f64>>,
    /// Also require a positive semidefinite initial state.
    #[arg(long)]
    pub strict_psd: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub variable: Option<SweepVariable>,
    #[arg(long, allow_negative_numbers = true)]
    pub from: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub to: Option<f64>,
    /// Number of grid points.
    #[arg(long)]
    pub steps: Option<usize>,
}

fn set<T: Clone>(slot: &mut Option<T>, flag: &Option<T>) {
    if flag.is_some() {
        *slot = flag.clone();
    }
}

impl CommonArgs {
    fn apply(&self, o: &mut Overrides) {
        set(&mut o.out, &self.out);
        set(&mut o.case, &self.case);
        set(&mut o.omega, &self.omega);
        set(&mut o.gamma_minus, &self.gamma_minus);
        set(&mut o.gamma_plus, &self.gamma_plus);
        set(&mut o.g, &self.g);
        if self.lep3 {
            o.lep3 = Some(true);
        }
        set(&mut o.coeffs, &self.coeffs);
        set(&mut o.populations, &self.populations);
    }

    fn load(&self) -> Result<Overrides> {
        let mut o = match &self.config {
            Some(path) => Overrides::from_file(path)?,
            None => Overrides::default(),
        };
        self.apply(&mut o);
        Ok(o)
    }
}

impl TimeArgs {
    fn apply(&self, o: &mut Overrides) {
        set(&mut o.t_end, &self.t_end);
        set(&mut o.samples, &self.samples);
    }
}

impl DampingArgs {
    fn apply(&self, o: &mut Overrides) {
        set(&mut o.ref_g, &self.ref_g);
        set(&mut o.norm, &self.norm);
    }
}

impl OptimizeArgs {
    fn apply(&self, o: &mut Overrides) {
        set(&mut o.fixed_index, &self.fixed_index);
        set(&mut o.fixed_value, &self.fixed_value);
        set(&mut o.gamma_min, &self.gamma_min);
        set(&mut o.gamma_max, &self.gamma_max);
        set(&mut o.gamma_step, &self.gamma_step);
        set(&mut o.refine_step, &self.refine_step);
        set(&mut o.coeff_box, &self.coeff_box);
        if self.strict_psd {
            o.strict_psd = Some(true);
        }
    }
}

impl SweepArgs {
    fn apply(&self, o: &mut Overrides) {
        set(&mut o.variable, &self.variable);
        set(&mut o.from, &self.from);
        set(&mut o.to, &self.to);
        set(&mut o.steps, &self.steps);
    }
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum(_) => "spectrum",
            Command::Lep3(_) => "lep3",
            Command::Evolve { .. } => "evolve",
            Command::Heat { .. } => "heat",
            Command::Damping { .. } => "damping",
            Command::Optimize { .. } => "optimize",
            Command::Sweep { .. } => "sweep",
        }
    }

    /// Merges the configuration file (if any) with the flags.
    pub fn overrides(&self) -> Result<(CommandKind, Overrides)> {
        Ok(match self {
            Command::Spectrum(c) => (CommandKind::Spectrum, c.load()?),
            Command::Lep3(c) => (CommandKind::Lep3, c.load()?),
            Command::Evolve { common, time } => {
                let mut o = common.load()?;
                time.apply(&mut o);
                (CommandKind::Evolve, o)
            }
            Command::Heat { common, time } => {
                let mut o = common.load()?;
                time.apply(&mut o);
                (CommandKind::Heat, o)
            }
            Command::Damping { common, time, damping } => {
                let mut o = common.load()?;
                time.apply(&mut o);
                damping.apply(&mut o);
                (CommandKind::Damping, o)
            }
            Command::Optimize { common, optimize } => {
                let mut o = common.load()?;
                optimize.apply(&mut o);
                (CommandKind::Optimize, o)
            }
            Command::Sweep { common, sweep } => {
                let mut o = common.load()?;
                sweep.apply(&mut o);
                (CommandKind::Sweep, o)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_parse_into_overrides() {
        let cli = Cli::try_parse_from([
            "qar",
            "heat",
            "--case",
            "gw",
            "--gamma-minus",
            "7.159",
            "--c",
            "0,0.125,0.1,0",
        ])
        .unwrap();
        let (kind, o) = cli.command.overrides().unwrap();
        assert_eq!(kind, CommandKind::Heat);
        assert_eq!(o.coeffs, Some(vec![0.0, 0.125, 0.1, 0.0]));
        assert_eq!(o.gamma_minus, Some(7.159));
    }

    #[test]
    fn repeated_reference_couplings() {
        let cli =
            Cli::try_parse_from(["qar", "damping", "--case", "gw", "--ref-g", "1.314", "--ref-g", "0.414"]).unwrap();
        let (_, o) = cli.command.overrides().unwrap();
        assert_eq!(o.ref_g, Some(vec![1.314, 0.414]));
    }

    #[test]
    fn negative_coefficients_are_values() {
        let cli = Cli::try_parse_from(["qar", "heat", "--case", "gc", "--c", "-0.1,0.1,0,0"]).unwrap();
        let (_, o) = cli.command.overrides().unwrap();
        assert_eq!(o.coeffs, Some(vec![-0.1, 0.1, 0.0, 0.0]));
    }
}
