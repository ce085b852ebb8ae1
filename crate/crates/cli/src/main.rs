use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{ArgGroup, Parser};
use log::info;

use crm_core::{
    build_with, detect_sections, export_bundle, ingest, layout_with, render_history_flow_svg, render_svg,
    to_history_flow, DiffOptions, Granularity, HeatScale, LayoutOptions, SectionFormat, SourceKind,
    SourceSpec, StyleConfig,
};

/// Build a cumulative revision map from a document history.
#[derive(Debug, Parser)]
#[command(name = "crm", version)]
#[command(group(ArgGroup::new("source").required(true).args(["git", "files", "wiki_xml"])))]
#[command(group(ArgGroup::new("output").required(true).multiple(true).args(["svg", "bundle", "hf_svg"])))]
struct Cli {
    /// Git repository; use with --path.
    #[arg(long, value_name = "REPO", requires = "path")]
    git: Option<PathBuf>,
    /// File inside the git repository to follow.
    #[arg(long, value_name = "FILE")]
    path: Option<PathBuf>,
    /// Directory of snapshot files, one revision per file, ordered by name.
    #[arg(long, value_name = "DIR")]
    files: Option<PathBuf>,
    /// MediaWiki XML export; the first page is used.
    #[arg(long, value_name = "FILE")]
    wiki_xml: Option<PathBuf>,

    #[arg(long, default_value = "word", value_parser = ["word", "line"])]
    granularity: String,
    /// Section heading syntax.
    #[arg(long, default_value = "none", value_parser = ["latex", "mediawiki", "none"])]
    sections: String,

    /// Write the map as SVG.
    #[arg(long, value_name = "OUT")]
    svg: Option<PathBuf>,
    /// Write the viewer bundle (JSON).
    #[arg(long, value_name = "OUT")]
    bundle: Option<PathBuf>,
    /// Write the History Flow figure as SVG.
    #[arg(long, value_name = "OUT")]
    hf_svg: Option<PathBuf>,

    /// Vertical chain connectors.
    #[arg(long)]
    compact: bool,
    /// Bucket count for the top change bar.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    buckets: Option<u32>,
    #[arg(long, default_value = "linear", value_parser = ["linear", "log"])]
    heat: String,
    #[arg(long, default_value = "heat", value_parser = ["heat", "gray", "viridis"])]
    colormap: String,
    /// DP table cell cap before the diff switches to linear space.
    #[arg(long, default_value_t = 1_000_000)]
    max_dp_cells: usize,

    /// More logging on stderr (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    init_logging(cli.verbose);
    match run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let style = match std::env::var("CRM_COLORS").as_deref() {
        Ok("none") => env_logger::WriteStyle::Never,
        _ => env_logger::WriteStyle::Auto,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .write_style(style)
        .format_timestamp(None)
        .init();
}

fn source_spec(cli: &Cli) -> Result<SourceSpec> {
    let granularity: Granularity = cli.granularity.parse().map_err(anyhow::Error::msg)?;
    let format: SectionFormat = cli.sections.parse().map_err(anyhow::Error::msg)?;
    let mut spec = if let Some(repo) = &cli.git {
        let target = cli.path.clone().context("--git needs --path")?;
        SourceSpec::new(SourceKind::Git, repo).with_target(target)
    } else if let Some(dir) = &cli.files {
        SourceSpec::new(SourceKind::Files, dir)
    } else if let Some(file) = &cli.wiki_xml {
        SourceSpec::new(SourceKind::MediawikiXml, file)
    } else {
        bail!("no source given");
    };
    spec.granularity = granularity;
    spec.format = format;
    Ok(spec)
}

fn run(cli: &Cli) -> Result<String> {
    let started = Instant::now();
    let spec = source_spec(cli)?;
    let style = StyleConfig { heat_colormap: cli.colormap.clone(), ..Default::default() };
    style.validate()?;

    let revisions = ingest(&spec).with_context(|| format!("reading {}", spec.location.display()))?;
    info!("read {} revisions", revisions.len());

    let opts = DiffOptions { max_dp_cells: cli.max_dp_cells };
    let (graph, scripts) = build_with(&revisions, &opts)?;
    info!("graph has {} nodes", graph.nodes().len());

    let latest = revisions.last().map(|r| r.content.clone()).unwrap_or_default();
    let sections = detect_sections(&latest, spec.format);
    let heat: HeatScale = cli.heat.parse().map_err(anyhow::Error::msg)?;
    let layout_opts = LayoutOptions { compact: cli.compact, buckets: cli.buckets.map(|b| b as usize), heat };
    let model = layout_with(&graph, &sections, &layout_opts);

    // Render everything before touching the filesystem.
    let mut outputs: Vec<(&Path, String)> = Vec::new();
    if let Some(out) = &cli.svg {
        outputs.push((out, render_svg(&model, &style)));
    }
    if let Some(out) = &cli.bundle {
        outputs.push((out, export_bundle(&graph, &model, spec.granularity).to_json()));
    }
    if let Some(out) = &cli.hf_svg {
        let hf = to_history_flow(&graph, &scripts)?;
        outputs.push((out, render_history_flow_svg(&hf, &style)));
    }
    for (path, text) in &outputs {
        write_atomic(path, text.as_bytes())?;
        info!("wrote {}", path.display());
    }

    Ok(format!(
        "revisions={} alive={} dead={} tokens={} elapsed_ms={}",
        graph.revision_count(),
        graph.alive_count(),
        graph.dead_count(),
        graph.latest_len(),
        started.elapsed().as_millis()
    ))
}

/// Writes to a temporary file next to `path` and renames it into place, so
/// a failed run never leaves a partial output.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp =
        tempfile::NamedTempFile::new_in(dir).with_context(|| format!("cannot write to {}", dir.display()))?;
    tmp.write_all(bytes).with_context(|| format!("writing {}", path.display()))?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
