use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use afa::bench::{self, ablate, benchmark, discover, mode_grid, write_ablation, write_report};
use afa::config::{apply_overrides, load_config, to_toml};
use afa::error::{AfaError, Result, StageExt};
use afa::imgio::{load_image, read_label_map, write_label_map, write_overlay};
use afa::run::{prepare, worker_pool};
use afa_core::metrics::{evaluate, VoiBase};
use afa_core::pipeline::PipelineConfig;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "afa", version, about = "Unsupervised image segmentation with adaptive fusion affinity graphs")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Configuration override `key=value` (dotted keys, TOML values).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, short = 'j', default_value_t = 0)]
    workers: usize,
    /// Report VoI in bits instead of nats.
    #[arg(long)]
    bits: bool,
}

impl Common {
    fn config(&self) -> Result<PipelineConfig> {
        let base = match &self.config {
            Some(p) => load_config(p)?,
            None => PipelineConfig::default(),
        };
        let mut overrides = self.overrides.clone();
        if let Some(s) = self.seed {
            overrides.push(format!("seed={s}"));
        }
        apply_overrides(&base, &overrides)
    }

    fn base(&self) -> VoiBase {
        if self.bits {
            VoiBase::Bits
        } else {
            VoiBase::Nat
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Segment one image.
    Segment {
        image: PathBuf,
        /// Number of groups; defaults to the upper end of the configured range.
        #[arg(long = "kt")]
        k_t: Option<usize>,
        /// Output directory.
        #[arg(long, short, default_value = ".")]
        out: PathBuf,
        /// Also write per-scale features and graphs here.
        #[arg(long)]
        dump: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Best-PRI sweep over a dataset with images/ and groundtruth/.
    Benchmark {
        #[arg(env = "AFA_DATASET_ROOT")]
        dataset: PathBuf,
        /// CSV report path; stdout when absent.
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// JSON lines with per-image run records.
        #[arg(long)]
        records: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// One benchmark row per combination of modes.
    Ablate {
        #[arg(env = "AFA_DATASET_ROOT")]
        dataset: PathBuf,
        /// Denoisers as kind[:image|feature]; kinds none, gaussian, bilateral, ikde.
        #[arg(long, value_delimiter = ',', default_value = "ikde:feature")]
        denoise: Vec<String>,
        /// Graphs: a, nolrr, a+nolrr.
        #[arg(long, value_delimiter = ',', default_value = "a+nolrr")]
        graph: Vec<String>,
        /// Node selection: apc+spr, kmeans+spr, kmeans, area.
        #[arg(long, value_delimiter = ',', default_value = "apc+spr")]
        nodes: Vec<String>,
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Scores an existing segmentation against annotations.
    Metrics {
        segmentation: PathBuf,
        #[arg(required = true)]
        ground_truth: Vec<PathBuf>,
        #[arg(long)]
        bits: bool,
    },
    /// Prints the effective configuration as TOML.
    Config {
        #[command(flatten)]
        common: Common,
    },
}

fn output(path: Option<&Path>) -> Result<Box<dyn io::Write>> {
    Ok(match path {
        Some(p) => Box::new(fs::File::create(p).map_err(|e| AfaError::io(p, e))?),
        None => Box::new(io::stdout()),
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Command::Segment { image, k_t, out, dump, common } => {
            let cfg = common.config()?;
            let pool = worker_pool(common.workers)?;
            let img = load_image(&image)?;
            let id = image.file_stem().and_then(|s| s.to_str()).unwrap_or("image").to_string();
            let mut p = prepare(&img, &id, &cfg, &pool)?;
            let seg = p.segment(k_t.unwrap_or(cfg.k_t.max))?;
            if let Some(d) = dump {
                p.dump(&d)?;
            }
            fs::create_dir_all(&out).map_err(|e| AfaError::io(&out, e))?;
            let stem = format!("{id}_{}_k{}", &p.config_hash[..12], seg.k_t);
            write_label_map(&seg.labels, &out.join(format!("{stem}.pgm")))?;
            write_overlay(&img, &seg.labels, &out.join(format!("{stem}.png")))?;
            let record = afa::run::RunRecord {
                image_id: id,
                config_hash: p.config_hash.clone(),
                times: p.times,
                k_t: seg.k_t,
                k_used: seg.k_used,
                report: None,
            };
            let json = serde_json::to_string_pretty(&record).expect("record serializes");
            let path = out.join(format!("{stem}.json"));
            fs::write(&path, &json).map_err(|e| AfaError::io(&path, e))?;
            println!("{json}");
        }
        Command::Benchmark { dataset, out, records, common } => {
            let cfg = common.config()?;
            let pool = worker_pool(common.workers)?;
            let ds = discover(&dataset)?;
            let report = match benchmark(&ds, &cfg, common.base(), &pool) {
                Err(e @ AfaError::EmptyDataset(_)) => {
                    write_report(None, output(out.as_deref())?)?;
                    return Err(e);
                }
                r => r?,
            };
            write_report(Some(&report), output(out.as_deref())?)?;
            if let Some(p) = records {
                let mut text = String::new();
                for r in &report.results {
                    text.push_str(&serde_json::to_string(&r.record).expect("record serializes"));
                    text.push('\n');
                }
                fs::write(&p, text).map_err(|e| AfaError::io(&p, e))?;
            }
        }
        Command::Ablate { dataset, denoise, graph, nodes, out, common } => {
            let cfg = common.config()?;
            let pool = worker_pool(common.workers)?;
            let modes = mode_grid(
                &denoise.iter().map(|s| bench::parse_denoise(s)).collect::<Result<Vec<_>>>()?,
                &graph.iter().map(|s| bench::parse_graph(s)).collect::<Result<Vec<_>>>()?,
                &nodes.iter().map(|s| bench::parse_nodes(s)).collect::<Result<Vec<_>>>()?,
            );
            let ds = discover(&dataset)?;
            let rows = ablate(&ds, &cfg, &modes, common.base(), &pool)?;
            write_ablation(&rows, output(out.as_deref())?)?;
        }
        Command::Metrics { segmentation, ground_truth, bits } => {
            let seg = read_label_map(&segmentation)?;
            let gt = ground_truth
                .iter()
                .map(|p| read_label_map(p))
                .collect::<Result<Vec<_>>>()?;
            let base = if bits { VoiBase::Bits } else { VoiBase::Nat };
            let r = evaluate(&seg, &gt, base).stage("metrics")?;
            println!("PRI,VoI,GCE,BDE");
            println!("{},{},{},{}", r.pri, r.voi, r.gce, r.bde);
        }
        Command::Config { common } => print!("{}", to_toml(&common.config()?)),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
