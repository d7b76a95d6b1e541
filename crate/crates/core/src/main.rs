use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nbldpc::analysis::floor_bound_general;
use nbldpc::decoder::DecoderConfig;
use nbldpc::gf::FieldParams;
use nbldpc::graph::{expurgate_with, export_code, DegreeDistPair, EnsembleSpec, ExpurgationLimits, ForbiddenSet};
use nbldpc::sim::{
    self, BetaSpec, ChannelKind, Engine, EnsembleExperiment, Experiment, SimConfig, ZigzagExperiment,
};
use nbldpc::{Error, Result};

#[derive(Parser)]
#[command(name = "nbldpc", version, about = "Non-binary LDPC zigzag-cycle analysis and simulation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate a single zigzag cycle code.
    Zigzag(ZigzagArgs),
    /// Simulate an expurgated ensemble.
    Ensemble(EnsembleArgs),
    /// Error-floor lower bound, per weight and total.
    Bound(BoundArgs),
    /// Sample one code from an expurgated ensemble and write it as alist.
    Design(DesignArgs),
    /// Print the cycle parameters to avoid for each field.
    Field(FieldArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ChannelArg {
    Bec,
    Bsc,
    Awgn,
}

#[derive(Args, Clone)]
struct ChannelArgs {
    #[arg(long, value_enum, default_value = "awgn")]
    channel: ChannelArg,
    /// Erasure or crossover probabilities (BEC/BSC).
    #[arg(long, value_delimiter = ',')]
    eps: Vec<f64>,
    /// Noise variances (AWGN).
    #[arg(long, value_delimiter = ',')]
    sigma2: Vec<f64>,
    /// Eb/N0 points in dB (AWGN), converted with --rate.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    ebno_db: Vec<f64>,
    #[arg(long)]
    rate: Option<f64>,
}

impl ChannelArgs {
    fn kind(&self) -> ChannelKind {
        match self.channel {
            ChannelArg::Bec => ChannelKind::Bec,
            ChannelArg::Bsc => ChannelKind::Bsc,
            ChannelArg::Awgn => ChannelKind::Awgn,
        }
    }

    fn grid(&self, default_rate: Option<f64>) -> Result<Vec<f64>> {
        match self.channel {
            ChannelArg::Bec | ChannelArg::Bsc => {
                if self.eps.is_empty() {
                    return Err(Error::Config("--eps is required for BEC/BSC".into()));
                }
                Ok(self.eps.clone())
            }
            ChannelArg::Awgn => {
                let mut grid = self.sigma2.clone();
                if !self.ebno_db.is_empty() {
                    let rate = self.rate.or(default_rate).ok_or_else(|| {
                        Error::Config("--ebno-db needs --rate for this experiment".into())
                    })?;
                    for &x in &self.ebno_db {
                        let ch = nbldpc::channel::ChannelModel::awgn_ebno_db(x, rate)?;
                        grid.push(ch.param());
                    }
                }
                if grid.is_empty() {
                    return Err(Error::Config("give --sigma2 or --ebno-db".into()));
                }
                Ok(grid)
            }
        }
    }
}

#[derive(Args, Clone)]
struct EnsembleSpecArgs {
    /// Number of variable nodes.
    #[arg(long = "N", short = 'N', default_value_t = 315)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    m: u32,
    /// Edge-perspective variable degrees as degree:coefficient, comma separated.
    #[arg(long, default_value = "2:1")]
    lambda: String,
    #[arg(long, default_value = "3:1")]
    rho: String,
    #[arg(long, default_value_t = 1)]
    sg: usize,
    #[arg(long, default_value_t = 8)]
    sc: usize,
    /// "bad" (non-maximal order), "identity", or comma separated alpha exponents.
    #[arg(long, default_value = "bad")]
    forbidden: String,
}

fn parse_terms(s: &str) -> Result<Vec<(usize, f64)>> {
    s.split(',')
        .map(|t| {
            let (d, c) = t
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("degree term '{t}' is not degree:coefficient")))?;
            let d = d.trim().parse().map_err(|_| Error::Config(format!("bad degree in '{t}'")))?;
            let c = c.trim().parse().map_err(|_| Error::Config(format!("bad coefficient in '{t}'")))?;
            Ok((d, c))
        })
        .collect()
}

impl EnsembleSpecArgs {
    fn spec(&self) -> Result<EnsembleSpec> {
        let degrees = DegreeDistPair::from_terms(&parse_terms(&self.lambda)?, &parse_terms(&self.rho)?)?;
        let forbidden = match self.forbidden.as_str() {
            "bad" => ForbiddenSet::BadParams,
            "identity" => ForbiddenSet::Identity,
            list => ForbiddenSet::Exponents(
                list.split(',')
                    .map(|x| x.trim().parse().map_err(|_| Error::Config(format!("bad exponent '{x}'"))))
                    .collect::<Result<_>>()?,
            ),
        };
        let spec = EnsembleSpec { n: self.n, m: self.m, degrees, s_g: self.sg, s_c: self.sc, forbidden };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Trial budget per channel point.
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 100)]
    min_errors: u64,
    /// Always run the full budget.
    #[arg(long)]
    no_early_stop: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    chunk: u64,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    ec_window: Option<usize>,
    /// Results CSV; a JSON sidecar with the full configuration is written next to it.
    #[arg(long, default_value = "results.csv")]
    out: PathBuf,
    /// Also write whitespace-separated plot data here.
    #[arg(long, alias = "gnuplot")]
    points: Option<PathBuf>,
    /// Rerun from a JSON configuration (such as a sidecar); experiment flags are ignored.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    allow_low_confidence: bool,
    /// Dump the decision trace of trial 0 at the first channel point as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct ZigzagArgs {
    #[arg(long, default_value_t = 3)]
    s: usize,
    #[arg(long, default_value_t = 4)]
    m: u32,
    /// beta = alpha^k (gamma_1 = alpha^k, other gammas 1).
    #[arg(long, conflicts_with = "labels")]
    beta_exp: Option<usize>,
    /// Label exponents h_{i,i}:h_{i,i+1}, comma separated, one pair per symbol.
    #[arg(long)]
    labels: Option<String>,
    #[arg(long, value_enum, default_value = "predicate")]
    engine: EngineArg,
    #[command(flatten)]
    channel: ChannelArgs,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Predicate,
    Bp,
}

#[derive(Args)]
struct EnsembleArgs {
    #[command(flatten)]
    spec: EnsembleSpecArgs,
    /// Simulate one sampled code instead of resampling per trial.
    #[arg(long)]
    fixed_code: bool,
    #[command(flatten)]
    channel: ChannelArgs,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    spec: EnsembleSpecArgs,
    #[command(flatten)]
    channel: ChannelArgs,
    /// Fixed truncation weight; chosen automatically when absent.
    #[arg(long)]
    s_max: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DesignArgs {
    #[command(flatten)]
    spec: EnsembleSpecArgs,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FieldArgs {
    /// Extension degrees to list.
    #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6")]
    m: Vec<u32>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<ExitCode> {
    match cmd {
        Cmd::Zigzag(a) => {
            let cfg = match &a.run.config {
                Some(p) => sim::read_config(p)?,
                None => zigzag_config(&a)?,
            };
            simulate(cfg, &a.run)
        }
        Cmd::Ensemble(a) => {
            let cfg = match &a.run.config {
                Some(p) => sim::read_config(p)?,
                None => ensemble_config(&a)?,
            };
            simulate(cfg, &a.run)
        }
        Cmd::Bound(a) => bound(&a).map(|_| ExitCode::SUCCESS),
        Cmd::Design(a) => design(&a).map(|_| ExitCode::SUCCESS),
        Cmd::Field(a) => field(&a).map(|_| ExitCode::SUCCESS),
    }
}

fn decoder_config(run: &RunArgs, period: Option<usize>) -> DecoderConfig {
    let base = DecoderConfig::default();
    // Zigzag codes need the window to cover a full period of the dynamics.
    let window = run.ec_window.unwrap_or(match period {
        Some(p) => 2 * p + 1,
        None => base.ec_window,
    });
    let max_iter = run.max_iter.unwrap_or(match period {
        Some(p) => (20 * p + window).max(base.max_iter),
        None => base.max_iter,
    });
    DecoderConfig { max_iter, ec_window: window, ..base }
}

fn zigzag_config(a: &ZigzagArgs) -> Result<SimConfig> {
    let beta = match (&a.labels, a.beta_exp) {
        (Some(l), _) => BetaSpec::Labels {
            labels: l
                .split(',')
                .map(|p| {
                    let (x, y) = p
                        .split_once(':')
                        .ok_or_else(|| Error::Config(format!("label pair '{p}' is not a:b")))?;
                    let parse = |t: &str| t.trim().parse().map_err(|_| Error::Config(format!("bad exponent '{t}'")));
                    Ok((parse(x)?, parse(y)?))
                })
                .collect::<Result<_>>()?,
        },
        (None, k) => BetaSpec::Exponent { k: k.unwrap_or(1) },
    };
    let engine = match a.engine {
        EngineArg::Predicate => Engine::Predicate,
        EngineArg::Bp => Engine::Bp,
    };
    let exp = ZigzagExperiment { s: a.s, m: a.m, beta, engine };
    let field = FieldParams::new(a.m)?;
    let beta = exp.gammas(&field)?.into_iter().fold(nbldpc::gf::FieldElement::ONE, |x, g| field.mul(x, g));
    let period = a.s * field.order(beta)?;
    if engine == Engine::Bp && a.run.ec_window.is_some_and(|w| w < period) {
        return Err(Error::Config(format!("--ec-window must be at least s * order(beta) = {period}")));
    }
    Ok(SimConfig {
        experiment: Experiment::Zigzag(exp),
        channel: a.channel.kind(),
        grid: a.channel.grid(None)?,
        max_trials: a.run.trials,
        min_errors: a.run.min_errors,
        early_stop: !a.run.no_early_stop,
        seed: a.run.seed,
        chunk: a.run.chunk,
        decoder: decoder_config(&a.run, Some(period)),
    })
}

fn ensemble_config(a: &EnsembleArgs) -> Result<SimConfig> {
    let spec = a.spec.spec()?;
    let rate = spec.degrees.design_rate();
    Ok(SimConfig {
        experiment: Experiment::Ensemble(EnsembleExperiment { spec, fixed_code: a.fixed_code }),
        channel: a.channel.kind(),
        grid: a.channel.grid(Some(rate))?,
        max_trials: a.run.trials,
        min_errors: a.run.min_errors,
        early_stop: !a.run.no_early_stop,
        seed: a.run.seed,
        chunk: a.run.chunk,
        decoder: decoder_config(&a.run, None),
    })
}

fn simulate(cfg: SimConfig, run: &RunArgs) -> Result<ExitCode> {
    cfg.validate()?;
    let records = sim::run(&cfg)?;
    sim::emit_results(&records, &cfg, &run.out)?;
    if let Some(p) = &run.points {
        sim::write_points(&records, p)?;
    }
    if let Some(p) = &run.trace {
        let r = sim::trace_trial(&cfg, cfg.grid[0], 0)?;
        fs::write(p, r.trace_json_lines())?;
    }
    for r in &records {
        eprintln!(
            "p={} ser={:.4e} [{:.4e}, {:.4e}] errors={} observed={}{}",
            r.channel_param,
            r.ser,
            r.ci_low,
            r.ci_high,
            r.errors,
            r.observed,
            r.bound.map_or(String::new(), |b| format!(" bound={b:.4e}"))
        );
    }
    let low: Vec<f64> = records.iter().filter(|r| r.low_confidence).map(|r| r.channel_param).collect();
    if !low.is_empty() {
        eprintln!("warning: fewer than {} errors at {:?}", cfg.min_errors, low);
        if !run.allow_low_confidence {
            return Ok(ExitCode::from(3));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn bound(a: &BoundArgs) -> Result<()> {
    let spec = a.spec.spec()?;
    let kind = a.channel.kind();
    let mut w = csv::Writer::from_writer(output(&a.out)?);
    w.write_record(["channel_param", "kind", "s", "value"])?;
    for p in a.channel.grid(Some(spec.degrees.design_rate()))? {
        let fb = floor_bound_general(&spec, &kind.model(p)?, a.s_max)?;
        for (s, t) in fb.scaled_terms(spec.n) {
            w.write_record([p.to_string(), "term".into(), s.to_string(), format!("{t:e}")])?;
        }
        w.write_record([p.to_string(), "total".into(), fb.s_max.to_string(), format!("{:e}", fb.value)])?;
        w.write_record([p.to_string(), "tail".into(), fb.s_max.to_string(), format!("{:e}", fb.tail_estimate)])?;
        if !fb.convergent {
            eprintln!("warning: series diverges at {p} (mu * B^m = {:.4})", fb.ratio);
        }
    }
    w.flush()?;
    Ok(())
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(fs::File::create(p)?),
        None => Box::new(std::io::stdout()),
    })
}

fn design(a: &DesignArgs) -> Result<()> {
    let spec = a.spec.spec()?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let (g, stats) = expurgate_with(&spec, ExpurgationLimits::default(), &mut rng)?;
    eprintln!(
        "graph draws {} ({} without valid labels), label sweeps {}, labels redrawn {}, cycles checked {}",
        stats.graph_draws, stats.graphs_rejected_by_labels, stats.label_sweeps, stats.labels_redrawn, stats.cycles_checked
    );
    output(&a.out)?.write_all(export_code(&g).as_bytes())?;
    Ok(())
}

fn field(a: &FieldArgs) -> Result<()> {
    for &m in &a.m {
        let f = FieldParams::new(m)?;
        let bad: Vec<String> = f.bad_cycle_params().iter().map(|b| f.power_notation(*b)).collect();
        println!("m={m} q={} poly={:#x} |H|={}: {}", f.q(), f.prim_poly(), bad.len(), bad.join(" "));
    }
    Ok(())
}
