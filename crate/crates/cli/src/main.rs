use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use taxonet::bootstrap::{link_reliability, link_reliability_with_threads, DEFAULT_REPLICAS};
use taxonet::export;
use taxonet::hierarchy;
use taxonet::ingest::{load_metadata, MissingPolicy};
use taxonet::newick::export_newick;
use taxonet::pipeline::{self, Formats, LinkageChoice, Prepared, RunConfig};
use taxonet::synthetic::{generate_block_model, prices_from_returns, BlockSpec};
use taxonet::{correlation_to_distance, kruskal_mst, pearson_matrix, Error, ErrorClass, Linkage};

#[derive(Parser)]
#[command(name = "taxonet", version, about = "Correlation-based taxonomies of time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write log returns (returns.csv).
    Returns {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write correlation and distance matrices (corr.csv, dist.csv).
    Corr {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the minimum spanning tree without bootstrap (mst.json, mst.dot).
    Mst {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Write hierarchical trees (slca.nwk, alca.nwk and merge tables).
    Tree {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum, default_value_t = LinkageArg::Both)]
        linkage: LinkageArg,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Bootstrap link reliability of the MST (bootstrap.csv, mst.json, mst.dot).
    Boot {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        boot: BootArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run every stage and write all artifacts plus manifest.json.
    Run {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum, default_value_t = LinkageArg::Both)]
        linkage: LinkageArg,
        /// Bootstrap replicas; 0 skips the bootstrap.
        #[arg(long, default_value_t = DEFAULT_REPLICAS)]
        replicas: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        threads: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Generate a planted block-model price dataset.
    Gen {
        /// Blocks as PREFIX:SIZE pairs, e.g. EU:5,AS:5,AM:5.
        #[arg(long, default_value = "A:5,B:5,C:5")]
        blocks: String,
        #[arg(long, default_value_t = 0.9)]
        intra: f64,
        #[arg(long, default_value_t = 0.0)]
        inter: f64,
        /// Number of return rows; the price table has one more.
        #[arg(long, default_value_t = 500)]
        rows: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// First month label.
        #[arg(long, default_value = "2000-01")]
        start: String,
        /// Output CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct InputArgs {
    /// Wide price CSV: DATE,SYM1,...,SYMN.
    #[arg(long)]
    input: PathBuf,
    /// Return lag in sampling periods.
    #[arg(long, default_value_t = 1)]
    tau: usize,
    /// Comma-separated subset of symbols to keep.
    #[arg(long, value_delimiter = ',')]
    symbols: Option<Vec<String>>,
    #[arg(long, value_enum, default_value_t = MissingArg::Drop)]
    missing: MissingArg,
    /// Drop zero-variance series instead of failing.
    #[arg(long)]
    drop_constant: bool,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated subset of dot,json,newick,csv.
    #[arg(long, default_value = "dot,json,newick,csv")]
    format: String,
    /// Sidecar CSV symbol,continent,name.
    #[arg(long)]
    metadata: Option<PathBuf>,
}

#[derive(Args)]
struct BootArgs {
    #[arg(long, default_value_t = DEFAULT_REPLICAS)]
    replicas: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LinkageArg {
    Single,
    Average,
    Both,
}

impl From<LinkageArg> for LinkageChoice {
    fn from(l: LinkageArg) -> Self {
        match l {
            LinkageArg::Single => LinkageChoice::Single,
            LinkageArg::Average => LinkageChoice::Average,
            LinkageArg::Both => LinkageChoice::Both,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MissingArg {
    /// Drop months with any missing value.
    Drop,
    /// Fail on any missing value.
    Reject,
}

impl From<MissingArg> for MissingPolicy {
    fn from(m: MissingArg) -> Self {
        match m {
            MissingArg::Drop => MissingPolicy::DropRows,
            MissingArg::Reject => MissingPolicy::Reject,
        }
    }
}

fn prepare(input: &InputArgs) -> taxonet::Result<Prepared> {
    pipeline::prepare_returns(
        &input.input,
        input.tau,
        input.symbols.clone(),
        input.missing.into(),
        input.drop_constant,
    )
}

fn metadata(path: Option<&Path>) -> taxonet::Result<Option<taxonet::ingest::Metadata>> {
    path.map(load_metadata).transpose()
}

fn parse_blocks(list: &str) -> taxonet::Result<Vec<(String, usize)>> {
    list.split(',')
        .map(|item| {
            let (prefix, size) = item
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("block {item:?} is not PREFIX:SIZE")))?;
            let size = size
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad block size in {item:?}")))?;
            Ok((prefix.trim().to_string(), size))
        })
        .collect()
}

fn check_threads(threads: Option<usize>) -> taxonet::Result<()> {
    if threads == Some(0) {
        return Err(Error::Config("threads must be at least 1".into()));
    }
    Ok(())
}

fn execute(command: Command) -> taxonet::Result<()> {
    match command {
        Command::Returns { input, out } => {
            let p = prepare(&input)?;
            let body = export::returns_csv(&p.dates, &p.returns);
            pipeline::write_files(&out, &[("returns.csv", body)])
        }
        Command::Corr { input, out } => {
            let p = prepare(&input)?;
            let c = pearson_matrix(&p.returns)?;
            let d = correlation_to_distance(&c);
            pipeline::write_files(
                &out,
                &[
                    (pipeline::CORR_FILE, export::matrix_csv(c.symbols(), c.values())),
                    (pipeline::DIST_FILE, export::matrix_csv(d.symbols(), d.values())),
                ],
            )
        }
        Command::Mst { input, output } => {
            let formats = Formats::parse(&output.format)?;
            let meta = metadata(output.metadata.as_deref())?;
            let p = prepare(&input)?;
            let tree = kruskal_mst(&correlation_to_distance(&pearson_matrix(&p.returns)?))?;
            let mut files = Vec::new();
            if formats.json {
                files.push((pipeline::MST_JSON_FILE, export::mst_json(&tree, None)));
            }
            if formats.dot {
                files.push((pipeline::MST_DOT_FILE, export::export_dot(&tree, meta.as_ref())));
            }
            pipeline::write_files(&output.out, &files)
        }
        Command::Tree {
            input,
            linkage,
            output,
        } => {
            let formats = Formats::parse(&output.format)?;
            let p = prepare(&input)?;
            let d = correlation_to_distance(&pearson_matrix(&p.returns)?);
            let mut files = Vec::new();
            for l in LinkageChoice::from(linkage).linkages() {
                let dendro = hierarchy::linkage(&d, l)?;
                let (nwk, merges) = match l {
                    Linkage::Single => (pipeline::SLCA_FILE, pipeline::SLCA_MERGES_FILE),
                    Linkage::Average => (pipeline::ALCA_FILE, pipeline::ALCA_MERGES_FILE),
                };
                if formats.newick {
                    files.push((nwk, export_newick(&dendro) + "\n"));
                }
                if formats.csv {
                    files.push((merges, export::merge_table_csv(&dendro)));
                }
            }
            pipeline::write_files(&output.out, &files)
        }
        Command::Boot {
            input,
            boot,
            output,
        } => {
            check_threads(boot.threads)?;
            let formats = Formats::parse(&output.format)?;
            let meta = metadata(output.metadata.as_deref())?;
            let p = prepare(&input)?;
            let (tree, report) = match boot.threads {
                Some(t) => link_reliability_with_threads(&p.returns, boot.replicas, boot.seed, t)?,
                None => link_reliability(&p.returns, boot.replicas, boot.seed)?,
            };
            if report.dropped_replicas > 0 {
                log::warn!("{} replicas dropped", report.dropped_replicas);
            }
            let mut files = Vec::new();
            if formats.csv {
                files.push((pipeline::BOOTSTRAP_FILE, export::bootstrap_csv(&tree)));
            }
            if formats.json {
                files.push((pipeline::MST_JSON_FILE, export::mst_json(&tree, Some(&report))));
            }
            if formats.dot {
                files.push((pipeline::MST_DOT_FILE, export::export_dot(&tree, meta.as_ref())));
            }
            pipeline::write_files(&output.out, &files)
        }
        Command::Run {
            input,
            linkage,
            replicas,
            seed,
            threads,
            output,
        } => {
            let config = RunConfig {
                input: input.input,
                metadata: output.metadata,
                tau: input.tau,
                linkage: linkage.into(),
                replicas,
                seed,
                out: output.out,
                symbols: input.symbols,
                missing: input.missing.into(),
                drop_constant: input.drop_constant,
                formats: Formats::parse(&output.format)?,
                threads,
            };
            let manifest = pipeline::run_pipeline(&config)?;
            log::info!(
                "wrote {} artifacts for {} symbols to {}",
                manifest.artifacts.len() + 1,
                manifest.symbols.len(),
                config.out.display()
            );
            Ok(())
        }
        Command::Gen {
            blocks,
            intra,
            inter,
            rows,
            seed,
            start,
            out,
        } => {
            let spec = BlockSpec {
                blocks: parse_blocks(&blocks)?,
                intra_rho: intra,
                inter_rho: inter,
                rows,
                seed,
            };
            let returns = generate_block_model(&spec)?;
            let body = export::prices_csv(&prices_from_returns(&returns, &start)?);
            match out {
                Some(path) => std::fs::write(&path, body).map_err(|e| Error::Io { path, source: e }),
                None => {
                    print!("{body}");
                    Ok(())
                }
            }
        }
    }
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Usage => 2,
        ErrorClass::Io => 3,
        ErrorClass::Validation => 4,
        ErrorClass::Numerical => 5,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.class()))
        }
    }
}
