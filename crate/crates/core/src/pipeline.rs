//! End-to-end orchestration: prices -> returns -> correlations -> MST with
//! bootstrap -> hierarchical trees -> files.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bootstrap::{link_reliability, link_reliability_with_threads, BootstrapReport, DEFAULT_REPLICAS};
use crate::corrnet::{correlation_to_distance, pearson_matrix, CorrelationMatrix, DistanceMatrix};
use crate::error::{Error, Result};
use crate::export;
use crate::hierarchy::{self, Dendrogram, Linkage};
use crate::ingest::{
    compute_log_returns, load_csv, load_metadata, IngestOptions, IngestWarning, Metadata, MissingPolicy,
    ReturnsMatrix,
};
use crate::mst::{kruskal_mst, SpanningTree};
use crate::newick::export_newick;

pub const CORR_FILE: &str = "corr.csv";
pub const DIST_FILE: &str = "dist.csv";
pub const MST_JSON_FILE: &str = "mst.json";
pub const MST_DOT_FILE: &str = "mst.dot";
pub const SLCA_FILE: &str = "slca.nwk";
pub const ALCA_FILE: &str = "alca.nwk";
pub const SLCA_MERGES_FILE: &str = "slca_merges.csv";
pub const ALCA_MERGES_FILE: &str = "alca_merges.csv";
pub const BOOTSTRAP_FILE: &str = "bootstrap.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkageChoice {
    Single,
    Average,
    #[default]
    Both,
}

impl LinkageChoice {
    pub fn linkages(self) -> Vec<Linkage> {
        match self {
            LinkageChoice::Single => vec![Linkage::Single],
            LinkageChoice::Average => vec![Linkage::Average],
            LinkageChoice::Both => vec![Linkage::Single, Linkage::Average],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Formats {
    pub dot: bool,
    pub json: bool,
    pub newick: bool,
    pub csv: bool,
}

impl Default for Formats {
    fn default() -> Self {
        Formats {
            dot: true,
            json: true,
            newick: true,
            csv: true,
        }
    }
}

impl Formats {
    /// Parses a comma list such as `dot,json`.
    pub fn parse(list: &str) -> Result<Self> {
        let mut f = Formats {
            dot: false,
            json: false,
            newick: false,
            csv: false,
        };
        for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item {
                "dot" => f.dot = true,
                "json" => f.json = true,
                "newick" => f.newick = true,
                "csv" => f.csv = true,
                other => return Err(Error::Config(format!("unknown format {other:?}"))),
            }
        }
        Ok(f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub input: PathBuf,
    pub metadata: Option<PathBuf>,
    pub tau: usize,
    pub linkage: LinkageChoice,
    /// Zero skips the bootstrap.
    pub replicas: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub symbols: Option<Vec<String>>,
    pub missing: MissingPolicy,
    /// Drop zero-variance series instead of failing.
    pub drop_constant: bool,
    pub formats: Formats,
    /// Bootstrap worker threads; `None` uses the global pool.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn new(input: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        RunConfig {
            input: input.into(),
            metadata: None,
            tau: 1,
            linkage: LinkageChoice::Both,
            replicas: DEFAULT_REPLICAS,
            seed: 0,
            out: out.into(),
            symbols: None,
            missing: MissingPolicy::DropRows,
            drop_constant: false,
            formats: Formats::default(),
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tau == 0 {
            return Err(Error::Config("tau must be at least 1".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        Ok(())
    }
}

/// Returns ready for correlation analysis, with what was dropped on the way.
#[derive(Debug, Clone)]
pub struct Prepared {
    /// End date of each return interval.
    pub dates: Vec<String>,
    pub returns: ReturnsMatrix,
    pub dropped_months: Vec<String>,
    pub dropped_symbols: Vec<String>,
    pub warnings: Vec<IngestWarning>,
}

pub fn prepare_returns(
    input: &Path,
    tau: usize,
    symbols: Option<Vec<String>>,
    missing: MissingPolicy,
    drop_constant: bool,
) -> Result<Prepared> {
    if tau == 0 {
        return Err(Error::ZeroLag);
    }
    let loaded = load_csv(input, &IngestOptions { tau, symbols })?;
    let (table, dropped_months) = loaded.table.apply_missing_policy(missing)?;
    if !dropped_months.is_empty() {
        log::warn!("dropped {} incomplete months", dropped_months.len());
    }
    let returns = compute_log_returns(&table, tau)?;
    let constant = returns.constant_columns();
    let mut dropped_symbols = Vec::new();
    let returns = if constant.is_empty() {
        returns
    } else if drop_constant {
        dropped_symbols = constant.iter().map(|&i| returns.symbols()[i].clone()).collect();
        log::warn!("dropping zero-variance series {dropped_symbols:?}");
        returns.drop_columns(&constant)
    } else {
        return Err(Error::ZeroVariance(returns.symbols()[constant[0]].clone()));
    };
    if returns.n_cols() < 2 {
        return Err(Error::TooFewSymbols(returns.n_cols()));
    }
    Ok(Prepared {
        dates: table.dates()[tau..].to_vec(),
        returns,
        dropped_months,
        dropped_symbols,
        warnings: loaded.warnings,
    })
}

/// Everything computed by one run, before it is written out.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub prepared: Prepared,
    pub correlation: CorrelationMatrix,
    pub distance: DistanceMatrix,
    pub tree: SpanningTree,
    pub bootstrap: Option<BootstrapReport>,
    pub dendrograms: Vec<Dendrogram>,
}

pub fn analyze(config: &RunConfig) -> Result<Analysis> {
    config.validate()?;
    let prepared = prepare_returns(
        &config.input,
        config.tau,
        config.symbols.clone(),
        config.missing,
        config.drop_constant,
    )?;
    let correlation = pearson_matrix(&prepared.returns)?;
    let distance = correlation_to_distance(&correlation);
    let (tree, bootstrap) = if config.replicas == 0 {
        (kruskal_mst(&distance)?, None)
    } else {
        let (tree, report) = match config.threads {
            Some(t) => link_reliability_with_threads(&prepared.returns, config.replicas, config.seed, t)?,
            None => link_reliability(&prepared.returns, config.replicas, config.seed)?,
        };
        if report.dropped_replicas > 0 {
            log::warn!("{} bootstrap replicas dropped", report.dropped_replicas);
        }
        (tree, Some(report))
    };
    let dendrograms = config
        .linkage
        .linkages()
        .into_iter()
        .map(|l| hierarchy::linkage(&distance, l))
        .collect::<Result<Vec<_>>>()?;
    Ok(Analysis {
        prepared,
        correlation,
        distance,
        tree,
        bootstrap,
        dendrograms,
    })
}

/// Layout of `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub symbols: Vec<String>,
    pub return_rows: usize,
    pub dropped_months: Vec<String>,
    pub dropped_symbols: Vec<String>,
    pub nonpositive_cells: usize,
    pub replicas_used: Option<usize>,
    pub dropped_replicas: Option<usize>,
    pub artifacts: Vec<String>,
    pub wall_time_seconds: f64,
}

/// Renders every artifact selected by `config.formats`, in a fixed order.
pub fn render_artifacts(
    analysis: &Analysis,
    config: &RunConfig,
    metadata: Option<&Metadata>,
) -> Vec<(&'static str, String)> {
    let f = config.formats;
    let mut files = Vec::new();
    if f.csv {
        files.push((
            CORR_FILE,
            export::matrix_csv(analysis.correlation.symbols(), analysis.correlation.values()),
        ));
        files.push((
            DIST_FILE,
            export::matrix_csv(analysis.distance.symbols(), analysis.distance.values()),
        ));
    }
    if f.json {
        files.push((
            MST_JSON_FILE,
            export::mst_json(&analysis.tree, analysis.bootstrap.as_ref()),
        ));
    }
    if f.dot {
        files.push((MST_DOT_FILE, export::export_dot(&analysis.tree, metadata)));
    }
    for d in &analysis.dendrograms {
        let (nwk, merges) = match d.linkage() {
            Linkage::Single => (SLCA_FILE, SLCA_MERGES_FILE),
            Linkage::Average => (ALCA_FILE, ALCA_MERGES_FILE),
        };
        if f.newick {
            let mut s = export_newick(d);
            s.push('\n');
            files.push((nwk, s));
        }
        if f.csv {
            files.push((merges, export::merge_table_csv(d)));
        }
    }
    if f.csv && analysis.bootstrap.is_some() {
        files.push((BOOTSTRAP_FILE, export::bootstrap_csv(&analysis.tree)));
    }
    files
}

pub fn write_files(dir: &Path, files: &[(&str, String)]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Runs the whole pipeline and writes artifacts plus `manifest.json` into
/// `config.out`. Nothing is written unless every stage succeeds.
pub fn run_pipeline(config: &RunConfig) -> Result<Manifest> {
    let started = Instant::now();
    let metadata = config.metadata.as_deref().map(load_metadata).transpose()?;
    let analysis = analyze(config)?;
    let files = render_artifacts(&analysis, config, metadata.as_ref());

    let p = &analysis.prepared;
    let mut manifest = Manifest {
        tool: "taxonet".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        symbols: p.returns.symbols().to_vec(),
        return_rows: p.returns.n_rows(),
        dropped_months: p.dropped_months.clone(),
        dropped_symbols: p.dropped_symbols.clone(),
        nonpositive_cells: p.warnings.len(),
        replicas_used: analysis.bootstrap.as_ref().map(BootstrapReport::used_replicas),
        dropped_replicas: analysis.bootstrap.as_ref().map(|r| r.dropped_replicas),
        artifacts: files.iter().map(|(n, _)| n.to_string()).collect(),
        wall_time_seconds: 0.0,
    };
    write_files(&config.out, &files)?;
    manifest.wall_time_seconds = started.elapsed().as_secs_f64();
    let mut body = serde_json::to_string_pretty(&manifest)?;
    body.push('\n');
    write_files(&config.out, &[(MANIFEST_FILE, body)])?;
    Ok(manifest)
}
