use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use tempfile::NamedTempFile;

use varseer::annotator::{AnnotationConfig, Annotator, InputFormat};
use varseer::genemodel::Flanks;
use varseer::metrics::dataset_stats;
use varseer::query::{read_gene_list, OpenOptions, Project, ProjectFormat, QueryResult, TypeFilter};
use varseer::records::{open_text_input, MarkerSpec};
use varseer::tabindex::{build_index_for_path, index_path_for, write_index, TabSchema, MAX_COORD};
use varseer::{Error, ErrorClass, Result};

#[derive(Parser)]
#[command(name = "varseer", version, about = "Annotate, index and query variant project files")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Add gene, region and score annotations to a VCF, tab or METAL file.
    Annotate(AnnotateArgs),
    /// Build a .tbi index for a BGZF file.
    Index(IndexArgs),
    /// Extract records by range or by gene.
    Query(QueryArgs),
    /// Ts/Tv ratio and annotation type counts.
    Stats(StatsArgs),
}

#[derive(Copy, Clone, ValueEnum)]
enum Format {
    Vcf,
    Tab,
    Metal,
}

#[derive(Args)]
struct AnnotateArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// refFlat gene table.
    #[arg(long)]
    gene: PathBuf,
    /// Reference FASTA (a .fai next to it is used when present).
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Region database as LABEL=PATH (BED).
    #[arg(long = "bed", value_name = "LABEL=PATH")]
    beds: Vec<String>,
    /// Score database as LABEL=PATH (BGZF with .tbi).
    #[arg(long = "score", value_name = "LABEL=PATH")]
    scores: Vec<String>,
    #[arg(long, value_enum, default_value = "vcf")]
    format: Format,
    /// seq,beg,end,base (columns are 1-based; base is 0 or 1).
    #[arg(long)]
    schema: Option<String>,
    #[arg(long)]
    marker_col: Option<String>,
    #[arg(long, default_value_t = 1000)]
    upstream: u64,
    #[arg(long, default_value_t = 1000)]
    downstream: u64,
    #[arg(long)]
    no_index: bool,
}

#[derive(Copy, Clone, ValueEnum)]
enum Preset {
    Vcf,
    Bed,
    Tab,
}

#[derive(Args)]
struct IndexArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "vcf")]
    preset: Preset,
    #[arg(long)]
    schema: Option<String>,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    gene_def: Option<PathBuf>,
    /// CHR:BEG-END, 1-based inclusive.
    #[arg(long, conflicts_with_all = ["gene", "gene_file"])]
    range: Option<String>,
    /// Comma-separated gene symbols.
    #[arg(long, conflicts_with = "gene_file")]
    gene: Option<String>,
    #[arg(long)]
    gene_file: Option<PathBuf>,
    /// Comma-separated annotation types.
    #[arg(long = "type")]
    types: Option<String>,
    /// Comma-separated FORMAT keys for matrix output.
    #[arg(long)]
    fields: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    matrix: bool,
    /// Window added around each transcript when resolving genes.
    #[arg(long, default_value_t = 1000)]
    gene_flank: u64,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_target(false)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("error: {first}");
            return ExitCode::from(1);
        }
    };
    let result = match cli.command {
        Command::Annotate(a) => annotate(a),
        Command::Index(a) => index(a),
        Command::Query(a) => query(a),
        Command::Stats(a) => stats(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            ExitCode::from(match e.class() {
                ErrorClass::Usage => 1,
                ErrorClass::Input => 2,
                ErrorClass::Integrity => 3,
            })
        }
    }
}

fn labeled(specs: &[String], flag: &str) -> Result<Vec<(String, PathBuf)>> {
    specs
        .iter()
        .map(|s| match s.split_once('=') {
            Some((l, p)) if !l.is_empty() && !p.is_empty() => Ok((l.to_string(), PathBuf::from(p))),
            _ => Err(Error::Usage(format!("--{flag} expects LABEL=PATH, got '{s}'"))),
        })
        .collect()
}

fn scratch_dir(out: &Path) -> PathBuf {
    match std::env::var_os("VARSEER_TMPDIR") {
        Some(d) if !d.is_empty() => PathBuf::from(d),
        _ => match out.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        },
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Moves a finished temporary file to `dest`.
fn persist(tmp: NamedTempFile, dest: &Path) -> Result<()> {
    match tmp.persist(dest) {
        Ok(_) => Ok(()),
        Err(e) => {
            // rename fails across filesystems; fall back to a copy
            std::fs::copy(e.file.path(), dest)?;
            Ok(())
        }
    }
}

fn annotate(a: AnnotateArgs) -> Result<()> {
    let input = match (a.format, &a.schema, &a.marker_col) {
        (Format::Vcf, None, None) => InputFormat::Vcf,
        (Format::Vcf, _, _) => {
            return Err(Error::Usage("--schema and --marker-col apply to --format tab or metal".into()))
        }
        (Format::Tab, Some(_), Some(_)) => {
            return Err(Error::Usage("--schema and --marker-col are mutually exclusive".into()))
        }
        (Format::Tab, Some(s), None) => InputFormat::Tab(TabSchema::parse_spec(s)?),
        (Format::Tab, None, Some(m)) => InputFormat::Metal(MarkerSpec { marker_col: m.clone() }),
        (Format::Tab, None, None) => {
            return Err(Error::Usage("--format tab needs --schema or --marker-col".into()))
        }
        (Format::Metal, Some(_), _) => return Err(Error::Usage("--schema does not apply to --format metal".into())),
        (Format::Metal, None, m) => {
            InputFormat::Metal(m.clone().map(|marker_col| MarkerSpec { marker_col }).unwrap_or_default())
        }
    };
    let mut config = AnnotationConfig::new(&a.gene, &a.reference);
    config.regions = labeled(&a.beds, "bed")?;
    config.scores = labeled(&a.scores, "score")?;
    config.flanks = Flanks { upstream: a.upstream, downstream: a.downstream };
    config.input = input.clone();
    config.validate()?;
    if a.out == a.input {
        return Err(Error::Usage("--out must differ from --in".into()));
    }

    let source = open_text_input(&a.input)?;
    let mut annotator = Annotator::open(&config)?;
    let dir = scratch_dir(&a.out);
    let tmp = NamedTempFile::new_in(&dir)?;
    let sink = BufWriter::new(tmp.reopen()?);
    let result = annotator.run(source, &input, sink, !a.no_index)?;
    result.sink.into_inner().map_err(|e| Error::Io(e.into_error()))?.sync_all()?;

    if let Some(index) = &result.index {
        let mut t = NamedTempFile::new_in(&dir)?;
        t.write_all(&write_index(index)?)?;
        persist(t, &index_path_for(&a.out))?;
    }
    let mut r = NamedTempFile::new_in(&dir)?;
    r.write_all(result.summary.report().as_bytes())?;
    persist(tmp, &a.out)?;
    persist(r, &with_suffix(&a.out, ".report"))?;
    let s = &result.summary;
    info!(
        "{} records in {:.2}s ({:.0} records/s)",
        s.records_written,
        s.wall_time.as_secs_f64(),
        s.records_written as f64 / s.wall_time.as_secs_f64().max(1e-9)
    );
    for w in &s.transcript_warnings {
        warn!("transcript {w}: coding length is not a multiple of 3");
    }
    Ok(())
}

fn index(a: IndexArgs) -> Result<()> {
    let schema = match (a.preset, &a.schema) {
        (Preset::Vcf, None) => TabSchema::vcf(),
        (Preset::Bed, None) => TabSchema::bed(),
        (Preset::Tab, Some(s)) => TabSchema::parse_spec(s)?,
        (Preset::Tab, None) => return Err(Error::Usage("--preset tab needs --schema".into())),
        (_, Some(_)) => return Err(Error::Usage("--schema applies to --preset tab only".into())),
    };
    let index = build_index_for_path(&a.input, schema)?;
    let dest = index_path_for(&a.input);
    let mut t = NamedTempFile::new_in(scratch_dir(&dest))?;
    t.write_all(&write_index(&index)?)?;
    persist(t, &dest)
}

/// Parses `chr:beg-end` (1-based inclusive) into 0-based half-open coordinates.
fn parse_range(s: &str) -> Result<(String, u64, u64)> {
    let bad = || Error::Usage(format!("range '{s}' must look like CHR:BEG-END"));
    let (chrom, span) = s.rsplit_once(':').ok_or_else(bad)?;
    let (b, e) = span.split_once('-').ok_or_else(bad)?;
    let num = |x: &str| x.replace(',', "").parse::<u64>().map_err(|_| bad());
    let (beg, end) = (num(b)?, num(e)?);
    if chrom.is_empty() || beg == 0 {
        return Err(bad());
    }
    if end < beg {
        return Err(Error::Range(format!("range '{s}' ends before it begins")));
    }
    if end > MAX_COORD {
        return Err(Error::Range(format!("range '{s}' exceeds the addressable maximum {MAX_COORD}")));
    }
    Ok((chrom.to_string(), beg - 1, end))
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(str::to_string).collect()
}

fn query(a: QueryArgs) -> Result<()> {
    let genes = match (&a.gene, &a.gene_file) {
        (Some(g), _) => Some(split_list(g)),
        (None, Some(p)) => Some(read_gene_list(open_text_input(p)?)?),
        (None, None) => None,
    };
    if a.range.is_none() && genes.is_none() {
        return Err(Error::Usage("one of --range, --gene or --gene-file is required".into()));
    }
    let filter: TypeFilter = a.types.as_deref().unwrap_or("").parse()?;
    if a.range.is_some() && !filter.is_empty() {
        return Err(Error::Usage("--type applies to gene queries only".into()));
    }
    let fields = a.fields.as_deref().map(split_list).unwrap_or_default();
    if !fields.is_empty() && !a.matrix {
        return Err(Error::Usage("--fields needs --matrix".into()));
    }
    let opts = OpenOptions { gene_def: a.gene_def.clone(), gene_flank: a.gene_flank, ..Default::default() };
    let project = Project::open(&a.input, &opts)?;
    if a.matrix && project.format() != ProjectFormat::Vcf {
        return Err(Error::Usage("--matrix needs a VCF project".into()));
    }

    let result: QueryResult = match (&a.range, genes) {
        (Some(r), _) => {
            let (chrom, beg, end) = parse_range(r)?;
            project.fetch_range(&chrom, beg, end)?
        }
        (None, Some(g)) => project.fetch_gene(&g, &filter)?,
        (None, None) => unreachable!(),
    };
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    info!("{} records, {} compressed bytes read", result.records.len(), result.bytes_read);

    let mut out: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    if a.matrix {
        let m = project.genotype_matrix(&result.records, &fields)?;
        for w in &m.warnings {
            eprintln!("warning: {w}");
        }
        out.write_all(m.to_tsv().as_bytes())?;
    } else {
        for line in result.lines() {
            out.write_all(line.as_bytes())?;
            out.write_all(b"\n")?;
        }
    }
    out.flush()?;
    Ok(())
}

fn stats(a: StatsArgs) -> Result<()> {
    let s = dataset_stats(open_text_input(&a.input)?)?;
    match &a.out {
        Some(p) => std::fs::write(p, s.report())?,
        None => {
            let mut o = io::stdout().lock();
            o.write_all(s.report().as_bytes())?;
            o.flush()?;
        }
    }
    Ok(())
}
