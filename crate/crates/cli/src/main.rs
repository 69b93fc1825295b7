use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use voipcell::coloring::CsRangeRule;
use voipcell::geometry::FrequencyScheme;
use voipcell::scenario::{
    self, CsSetting, Mode, OutputFormat, RunManifest, ScenarioConfig, ScenarioError, Table, Versioned,
};

#[derive(Parser, Debug)]
#[command(name = "voipcell", version, about = "VoIP capacity planning for multi-cell 802.11 WLANs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate hexagonal topologies with stations.
    Topology(Common),
    /// Run clique-based admission control over shuffled arrivals.
    Admit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        c_max: Option<usize>,
        /// Carrier-sense range in meters.
        #[arg(long)]
        cs_range: Option<f64>,
    },
    /// Color one conflict graph per seed.
    Color {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        slots: SlotArgs,
        /// Carrier-sense range as a multiple of d_max.
        #[arg(long, conflicts_with = "sector")]
        cs_range: Option<f64>,
        /// Use the sector-diameter range for the chosen n.
        #[arg(long)]
        sector: bool,
    },
    /// Coverage over n values and carrier-sense ranges.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        c_ap_1: Option<u32>,
        /// Comma-separated slot counts.
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<u32>>,
        /// Comma-separated ranges as multiples of d_max.
        #[arg(long, value_delimiter = ',', conflicts_with = "sector")]
        cs_range: Option<Vec<f64>>,
        #[arg(long)]
        sector: bool,
        #[arg(long)]
        trials: Option<u32>,
    },
    /// Closed-form slotted capacity.
    Capacity {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        slots: SlotArgs,
        /// Frames per beacon interval; defaults to the delay-budget minimum.
        #[arg(long)]
        frames: Option<u32>,
        #[arg(long)]
        codec: Option<String>,
    },
    /// Re-run a published experiment and compare against its numbers.
    Replicate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        table: TableArg,
    },
    /// Check that an output directory matches its manifest.
    Verify { dir: PathBuf },
}

#[derive(Args, Debug)]
struct Common {
    /// JSON scenario config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// First seed of the run.
    #[arg(long)]
    seed: Option<u64>,
    /// Seed count, or a comma-separated list of seeds.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long, env = "VOIPCELL_OUT_DIR", default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Grid dimension.
    #[arg(long = "dim", short = 'D')]
    dim: Option<usize>,
    #[arg(long, value_enum)]
    channels: Option<ChannelsArg>,
}

#[derive(Args, Debug)]
struct SlotArgs {
    /// Slots per frame.
    #[arg(long)]
    n: Option<u32>,
    /// Single-cell capacity.
    #[arg(long)]
    c_ap_1: Option<u32>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ChannelsArg {
    Single,
    Three,
    Seven,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum TableArg {
    Table2,
    Table4,
    #[value(name = "fig11_14")]
    Fig11_14,
}

fn parse_seeds(cfg: &mut ScenarioConfig, text: &str) -> Result<(), ScenarioError> {
    let bad = |_| ScenarioError::Config(format!("cannot parse seeds `{text}`"));
    if text.contains(',') {
        let list = text.split(',').map(|s| s.trim().parse::<u64>()).collect::<Result<Vec<_>, _>>().map_err(bad)?;
        cfg.seeds.list = Some(list);
    } else {
        cfg.seeds.count = text.trim().parse().map_err(bad)?;
        cfg.seeds.list = None;
    }
    Ok(())
}

fn base_config(mode: Mode, common: &Common) -> Result<ScenarioConfig, ScenarioError> {
    let mut cfg = match &common.config {
        Some(path) => {
            let mut cfg = ScenarioConfig::load(path)?;
            cfg.mode = mode;
            cfg
        }
        None => ScenarioConfig::new(mode),
    };
    if let Some(seed) = common.seed {
        cfg.seeds.base = seed;
        if common.seeds.is_none() {
            cfg.seeds.list = None;
        }
    }
    if let Some(seeds) = &common.seeds {
        parse_seeds(&mut cfg, seeds)?;
    }
    if let Some(f) = common.format {
        cfg.format = match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        };
    }
    if let Some(d) = common.dim {
        cfg.topology.dim = d;
    }
    if let Some(ch) = common.channels {
        cfg.topology.frequency = match ch {
            ChannelsArg::Single => FrequencyScheme::Single,
            ChannelsArg::Three => FrequencyScheme::ThreeChannel,
            ChannelsArg::Seven => FrequencyScheme::SevenChannel,
        };
    }
    Ok(cfg)
}

fn apply_slots(cfg: &mut ScenarioConfig, slots: &SlotArgs) {
    if let Some(n) = slots.n {
        cfg.color.n = n;
        cfg.capacity.n = n;
    }
    if let Some(c) = slots.c_ap_1 {
        cfg.color.c_ap_1 = c;
        cfg.capacity.c_ap_1 = c;
    }
}

fn build(command: Command) -> Result<(ScenarioConfig, PathBuf), ScenarioError> {
    Ok(match command {
        Command::Topology(common) => (base_config(Mode::Topology, &common)?, common.out),
        Command::Admit { common, c_max, cs_range } => {
            let mut cfg = base_config(Mode::Admit, &common)?;
            if let Some(c) = c_max {
                cfg.admit.c_max = c;
            }
            if cs_range.is_some() {
                cfg.admit.cs_range = cs_range;
            }
            (cfg, common.out)
        }
        Command::Color { common, slots, cs_range, sector } => {
            let mut cfg = base_config(Mode::Color, &common)?;
            apply_slots(&mut cfg, &slots);
            if let Some(x) = cs_range {
                cfg.color.cs_range = CsSetting::OverDmax(x);
            }
            if sector {
                cfg.color.cs_range = CsSetting::Sector;
            }
            (cfg, common.out)
        }
        Command::Sweep { common, c_ap_1, n, cs_range, sector, trials } => {
            let mut cfg = base_config(Mode::Sweep, &common)?;
            if let Some(c) = c_ap_1 {
                cfg.color.c_ap_1 = c;
            }
            if let Some(n) = n {
                cfg.sweep.n_values = n;
            }
            if let Some(cs) = cs_range {
                cfg.sweep.cs_range = CsRangeRule::Fixed(cs);
            }
            if sector {
                cfg.sweep.cs_range = CsRangeRule::Sector;
            }
            if let Some(t) = trials {
                cfg.sweep.trials = t;
            }
            (cfg, common.out)
        }
        Command::Capacity { common, slots, frames, codec } => {
            let mut cfg = base_config(Mode::Capacity, &common)?;
            apply_slots(&mut cfg, &slots);
            if frames.is_some() {
                cfg.capacity.frames = frames;
            }
            if let Some(c) = codec {
                cfg.capacity.codec = c;
            }
            (cfg, common.out)
        }
        Command::Replicate { common, table } => {
            let mut cfg = base_config(Mode::Replicate, &common)?;
            cfg.replicate.table = match table {
                TableArg::Table2 => Table::Table2,
                TableArg::Table4 => Table::Table4,
                TableArg::Fig11_14 => Table::Fig11_14,
            };
            (cfg, common.out)
        }
        Command::Verify { .. } => unreachable!("handled before build"),
    })
}

fn report(manifest: &RunManifest, out: &std::path::Path) {
    println!("wrote {} files to {}", manifest.files.len(), out.display());
    println!("config hash {}", manifest.config_hash);
    let summary = manifest.files.iter().find(|f| f.path == "summary.json");
    if let Some(f) = summary {
        let text = std::fs::read_to_string(out.join(&f.path)).unwrap_or_default();
        if let Ok(v) = serde_json::from_str::<Versioned<scenario::RunSummary>>(&text) {
            println!("mean {}: {:.4} over {} seeds", v.data.label, v.data.mean, v.data.seeds.len());
        }
    }
    for f in manifest.files.iter().filter(|f| f.path.starts_with("replicate_") && f.path.ends_with(".csv")) {
        if let Ok(text) = std::fs::read_to_string(out.join(&f.path)) {
            print!("{text}");
        }
    }
    if manifest.mode == Mode::Capacity {
        if let Ok(text) = std::fs::read_to_string(out.join("capacity.json")) {
            println!("{text}");
        }
    }
}

fn execute(cli: Cli) -> Result<(), ScenarioError> {
    if let Command::Verify { dir } = &cli.command {
        let manifest = RunManifest::load(dir)?;
        manifest.verify(dir)?;
        println!("{}: {} files verified", dir.display(), manifest.files.len());
        return Ok(());
    }
    let (cfg, out) = build(cli.command)?;
    let manifest = scenario::run(&cfg, &out)?;
    report(&manifest, &out);
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
