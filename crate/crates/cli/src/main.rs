use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gsb_mi::divergence::GsbParams;
use gsb_mi::io::{emit_result, load_samples, Format, Output, RunConfig, SampleSource, SimulationFile};
use gsb_mi::robustness::{ges_curve, normal_null, robustness_grid, DeltaPolicy, DEFAULT_ETA};
use gsb_mi::sim::run_table;
use gsb_mi::tuning::{gsb_grid, pd_grid, select_tuning, Search, TuningConfig, DEFAULT_LOCAL_STEPS, DEFAULT_RESAMPLES};
use gsb_mi::two_sample::{run_test, Bandwidth, Method, DEFAULT_LEVEL, DEFAULT_PERMUTATIONS};
use gsb_mi::{Error, Result};

#[derive(Parser)]
#[command(name = "gsb-mi", version, about = "Robust two-sample tests based on GSB mutual information")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test whether two samples share a distribution.
    Test {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Pick tuning parameters by minimizing the resampled testing risk.
    Tune {
        #[command(flatten)]
        data: DataArgs,
        /// Pilot parameters.
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum, default_value_t = SearchKind::GridLocal)]
        search: SearchKind,
        #[arg(long, default_value_t = DEFAULT_RESAMPLES)]
        resamples: usize,
        /// Score power-divergence candidates with asymptotic calibration instead
        /// of listing them as excluded.
        #[arg(long)]
        include_pd: bool,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Second-order influence curve, gross-error sensitivity and breakdown bound
    /// under a normal null.
    Robustness {
        #[command(flatten)]
        params: ParamArgs,
        /// Group label of the contamination point.
        #[arg(long, default_value_t = 0)]
        x0: u8,
        /// Probability of group 0.
        #[arg(long, default_value_t = 0.5)]
        p0: f64,
        #[arg(long, default_value_t = -6.0, allow_hyphen_values = true)]
        y_min: f64,
        #[arg(long, default_value_t = 6.0, allow_hyphen_values = true)]
        y_max: f64,
        #[arg(long, default_value_t = 121)]
        points: usize,
        /// Collapse delta integrals to point evaluation instead of a bump.
        #[arg(long)]
        evaluation: bool,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Rejection-proportion table for a scenario file.
    Simulate {
        /// TOML scenario file.
        #[arg(long)]
        config: PathBuf,
        /// Overrides the replication count of the file.
        #[arg(long)]
        replications: Option<usize>,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Args)]
struct DataArgs {
    /// CSV with `group` and `y` columns.
    #[arg(long, conflicts_with_all = ["sample0", "sample1"], required_unless_present_all = ["sample0", "sample1"])]
    data: Option<PathBuf>,
    /// CSV with a `y` column for group 0.
    #[arg(long, requires = "sample1")]
    sample0: Option<PathBuf>,
    /// CSV with a `y` column for group 1.
    #[arg(long, requires = "sample0")]
    sample1: Option<PathBuf>,
}

impl DataArgs {
    fn source(&self) -> SampleSource {
        match (&self.data, &self.sample0, &self.sample1) {
            (Some(p), _, _) => SampleSource::Grouped(p.clone()),
            (None, Some(a), Some(b)) => SampleSource::Split(a.clone(), b.clone()),
            _ => unreachable!("enforced by the argument parser"),
        }
    }
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    lambda: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    beta: f64,
}

impl ParamArgs {
    fn params(&self) -> Result<GsbParams> {
        GsbParams::new(self.alpha, self.lambda, self.beta)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Auto,
    Asymptotic,
    Permutation,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum SearchKind {
    Grid,
    Local,
    GridLocal,
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long, default_value_t = DEFAULT_LEVEL)]
    level: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    method: MethodArg,
    #[arg(long, default_value_t = DEFAULT_PERMUTATIONS)]
    permutations: usize,
    #[arg(long, default_value_t = 512)]
    grid_points: usize,
    /// `auto` for the rule of thumb, or a positive number.
    #[arg(long, default_value = "auto", value_parser = parse_bandwidth)]
    bandwidth: Bandwidth,
    /// Master seed; defaults to 0, or to the scenario file's seed for `simulate`.
    #[arg(long)]
    seed: Option<u64>,
    /// Width of the bump that stands in for a point mass.
    #[arg(long, default_value_t = DEFAULT_ETA)]
    eta: f64,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
}

fn parse_bandwidth(s: &str) -> std::result::Result<Bandwidth, String> {
    if s.eq_ignore_ascii_case("auto") || s.eq_ignore_ascii_case("silverman") {
        return Ok(Bandwidth::Silverman);
    }
    match s.parse::<f64>() {
        Ok(h) if h > 0.0 && h.is_finite() => Ok(Bandwidth::Fixed(h)),
        _ => Err(format!("expected \"auto\" or a positive number, got \"{s}\"")),
    }
}

impl CommonArgs {
    fn run_config(&self, evaluation: bool) -> Result<RunConfig> {
        let config = RunConfig {
            level: self.level,
            method: match self.method {
                MethodArg::Auto => Method::Auto,
                MethodArg::Asymptotic => Method::Asymptotic,
                MethodArg::Permutation => Method::Permutation,
            },
            n_perm: self.permutations,
            grid_points: self.grid_points,
            bandwidth: self.bandwidth,
            seed: self.seed.unwrap_or(0),
            delta_policy: if evaluation { DeltaPolicy::Evaluation } else { DeltaPolicy::Bump { eta: self.eta } },
            format: match self.format {
                FormatArg::Json => Format::Json,
                FormatArg::Csv => Format::Csv,
            },
        };
        config.validate()?;
        Ok(config)
    }

    fn write(&self, output: &Output, config: &RunConfig) -> Result<()> {
        let mut text = emit_result(output, config)?;
        if !text.ends_with('\n') {
            text.push('\n');
        }
        match &self.out {
            Some(path) => std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Test { data, params, common } => {
            let config = common.run_config(false)?;
            let data = load_samples(&data.source())?;
            let result = run_test(&data, &params.params()?, &config.test_config())?;
            common.write(&Output::Test(result), &config)
        }
        Command::Tune { data, params, search, resamples, include_pd, common } => {
            let config = common.run_config(false)?;
            let data = load_samples(&data.source())?;
            let pilot = params.params()?;
            let mut candidates = gsb_grid();
            candidates.extend(pd_grid());
            let search = match search {
                SearchKind::Grid => Search::Grid { candidates },
                SearchKind::Local => Search::LocalSearch { start: pilot, steps: DEFAULT_LOCAL_STEPS },
                SearchKind::GridLocal => Search::GridThenLocal { candidates, steps: DEFAULT_LOCAL_STEPS },
            };
            let tuning = TuningConfig {
                test: config.test_config(),
                n_resample: resamples,
                allow_pd_asymptotic: include_pd,
            };
            let surface = select_tuning(&data, &pilot, &search, config.level, config.seed, &tuning)?;
            common.write(&Output::Risk(surface), &config)
        }
        Command::Robustness { params, x0, p0, y_min, y_max, points, evaluation, common } => {
            let config = common.run_config(evaluation)?;
            if !(p0 > 0.0 && p0 < 1.0) {
                return Err(Error::InvalidArgument(format!("p0 must lie in (0, 1), got {p0}")));
            }
            let null = normal_null([p0, 1.0 - p0], robustness_grid())?;
            let report = ges_curve(&params.params()?, &null, x0, (y_min, y_max), points, config.delta_policy)?;
            common.write(&Output::Robustness(report), &config)
        }
        Command::Simulate { config: path, replications, common } => {
            let file = SimulationFile::load(&path)?;
            let mut spec = file.scenario();
            if let Some(r) = replications {
                spec.replications = r;
            }
            if let Some(seed) = common.seed {
                spec.seed = seed;
            }
            let mut config = common.run_config(false)?;
            config.level = spec.level;
            config.seed = spec.seed;
            let table = run_table(&spec, &file.grid.alphas, &file.grid.lambdas, file.grid.beta, &config.test_config())?;
            common.write(&Output::Table(table), &config)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
