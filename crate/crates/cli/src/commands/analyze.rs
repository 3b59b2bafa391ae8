use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use msbitrate_core::dataset::{
    read_manifest_csv, schema_line, write_features_csv, FeatureRow, BLOCKS_HEADERS, BLOCKS_KIND,
};
use msbitrate_core::dataset::fmt_f64;
use msbitrate_core::descriptors::accumulate;
use msbitrate_core::frame::Framerate;
use msbitrate_core::io::{open_raw_yuv, open_y4m, FrameReader};
use msbitrate_core::motion::{analyze_sequence, AnalysisConfig, BlockRecord, FrameStats};

use super::{read_file, write_file, EXIT_OK, EXIT_PARTIAL};

#[derive(clap::Args)]
pub struct AnalyzeArgs {
    /// Input files; Y4M is self-describing, raw YUV 4:2:0 additionally
    /// needs --width/--height/--framerate (or manifest columns)
    pub inputs: Vec<PathBuf>,

    /// Manifest CSV listing inputs: path,width,height,framerate
    /// (paths resolve relative to the manifest's directory)
    #[arg(long)]
    pub manifest: Option<PathBuf>,

    /// Output features CSV
    #[arg(long)]
    pub out: PathBuf,

    /// Motion search range in pixels
    #[arg(long, default_value_t = 16)]
    pub search_range: u32,

    /// Seconds between intra frames
    #[arg(long, default_value_t = 5.0)]
    pub gop_seconds: f64,

    /// Worker threads for file-level parallelism; any value produces
    /// byte-identical output
    #[arg(long, default_value_t = 1)]
    pub threads: usize,

    /// Luma width of raw YUV inputs
    #[arg(long)]
    pub width: Option<u32>,

    /// Luma height of raw YUV inputs
    #[arg(long)]
    pub height: Option<u32>,

    /// Framerate of raw YUV inputs, e.g. 30 or 30000/1001
    #[arg(long)]
    pub framerate: Option<Framerate>,

    /// Fill the analysis_wall_time column (the output then varies from
    /// run to run; leave off for byte-reproducible CSVs)
    #[arg(long)]
    pub timing: bool,

    /// Directory receiving one per-block CSV dump per input
    #[arg(long)]
    pub block_dump: Option<PathBuf>,
}

struct InputSpec {
    path: PathBuf,
    sequence_id: String,
    width: Option<u32>,
    height: Option<u32>,
    framerate: Option<Framerate>,
}

pub fn run(args: AnalyzeArgs) -> Result<i32> {
    let config = AnalysisConfig {
        search_range: args.search_range,
        gop_length_seconds: args.gop_seconds,
    };
    config.validate().map_err(anyhow::Error::msg)?;

    let mut inputs: Vec<InputSpec> = Vec::new();
    for path in &args.inputs {
        inputs.push(InputSpec {
            path: path.clone(),
            sequence_id: stem_of(path),
            width: args.width,
            height: args.height,
            framerate: args.framerate,
        });
    }
    if let Some(manifest_path) = &args.manifest {
        let base = manifest_path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        for entry in read_manifest_csv(&read_file(manifest_path)?)? {
            let path = base.join(&entry.path);
            inputs.push(InputSpec {
                sequence_id: stem_of(&path),
                path,
                width: entry.width.or(args.width),
                height: entry.height.or(args.height),
                framerate: entry.framerate.or(args.framerate),
            });
        }
    }
    if inputs.is_empty() {
        bail!("no inputs: pass files and/or --manifest");
    }

    if let Some(dir) = &args.block_dump {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }

    // Duplicate ids would collide in the join; fail those rows, keep the batch.
    let mut seen = std::collections::BTreeSet::new();
    let duplicates: Vec<bool> = inputs
        .iter()
        .map(|i| !seen.insert(i.sequence_id.clone()))
        .collect();

    let pool = super::build_pool(args.threads)?;
    let rows: Vec<FeatureRow> = pool.install(|| {
        inputs
            .par_iter()
            .zip(duplicates)
            .map(|(input, duplicate)| {
                if duplicate {
                    return FeatureRow::Failed {
                        sequence_id: input.sequence_id.clone(),
                        error: "duplicate sequence id in this batch".into(),
                    };
                }
                match analyze_one(input, &config, args.block_dump.as_deref()) {
                    Ok(row) => row,
                    Err(e) => FeatureRow::Failed {
                        sequence_id: input.sequence_id.clone(),
                        error: format!("{e:#}"),
                    },
                }
            })
            .collect()
    });

    let mut bytes = Vec::new();
    write_features_csv(&mut bytes, &rows, args.timing)?;
    write_file(&args.out, &bytes)?;

    let failed = rows
        .iter()
        .filter(|r| matches!(r, FeatureRow::Failed { .. }))
        .count();
    eprintln!(
        "analyzed {} inputs ({} failed) -> {}",
        rows.len(),
        failed,
        args.out.display()
    );
    Ok(if failed > 0 { EXIT_PARTIAL } else { EXIT_OK })
}

fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string_lossy().into_owned())
}

fn analyze_one(
    input: &InputSpec,
    config: &AnalysisConfig,
    block_dump: Option<&Path>,
) -> Result<FeatureRow> {
    let file = File::open(&input.path).with_context(|| format!("opening {}", input.path.display()))?;
    let reader = BufReader::new(file);
    let is_y4m = input
        .path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("y4m"));
    let mut source = if is_y4m {
        FrameReader::Y4m(open_y4m(reader)?)
    } else {
        let (Some(width), Some(height), Some(framerate)) =
            (input.width, input.height, input.framerate)
        else {
            bail!("raw YUV input needs width, height and framerate");
        };
        FrameReader::Raw(open_raw_yuv(reader, width, height, framerate)?)
    };
    let meta = source.meta();

    let mut dump = match block_dump {
        Some(dir) => {
            let path = dir.join(format!("{}.blocks.csv", input.sequence_id));
            let file =
                File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(file);
            writeln!(w, "{}", schema_line(BLOCKS_KIND))?;
            writeln!(w, "{}", BLOCKS_HEADERS.join(","))?;
            Some(w)
        }
        None => None,
    };
    let mut dump_error: Option<std::io::Error> = None;

    let started = Instant::now();
    let stats = analyze_sequence(&mut source, meta.framerate, config, |stats, blocks| {
        if let (Some(w), None) = (dump.as_mut(), dump_error.as_ref()) {
            if let Err(e) = write_block_rows(w, stats, blocks) {
                dump_error = Some(e);
            }
        }
    })?;
    let wall_time = started.elapsed().as_secs_f64();
    if let Some(e) = dump_error {
        return Err(e).context("writing block dump");
    }
    if let Some(mut w) = dump {
        w.flush().context("flushing block dump")?;
    }

    let mut features = accumulate(&stats, meta.width, meta.height)?;
    features.analysis_wall_time = wall_time;
    Ok(FeatureRow::Ok {
        sequence_id: input.sequence_id.clone(),
        framerate: meta.framerate,
        features,
    })
}

fn write_block_rows<W: Write>(
    w: &mut W,
    stats: &FrameStats,
    blocks: &[BlockRecord],
) -> std::io::Result<()> {
    for b in blocks {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            stats.frame_index,
            b.block_x,
            b.block_y,
            b.kind.as_char(),
            fmt_f64(b.mse_intra),
            b.mse_mv.map(fmt_f64).unwrap_or_default(),
            fmt_f64(b.mse_block),
            b.bitsize,
            b.mv.map(|m| m.dx.to_string()).unwrap_or_default(),
            b.mv.map(|m| m.dy.to_string()).unwrap_or_default(),
        )?;
    }
    Ok(())
}
