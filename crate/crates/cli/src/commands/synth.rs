use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};

use msbitrate_core::dataset::{
    write_encodings_csv, write_manifest_csv, write_vca_csv, ManifestEntry,
};
use msbitrate_core::frame::Framerate;
use msbitrate_core::io::write_y4m;
use msbitrate_core::motion::AnalysisConfig;
use msbitrate_core::synth::{generate_corpus, pseudo_ground_truth, CorpusConfig};

use super::{write_file, EXIT_OK};

#[derive(clap::Args)]
pub struct SynthArgs {
    /// Directory receiving videos/, manifest.csv, encodings.csv, vca.csv
    #[arg(long)]
    pub out_dir: PathBuf,

    /// Corpus seed; everything downstream is deterministic in it
    #[arg(long, default_value_t = 7)]
    pub seed: u64,

    /// Number of sequences
    #[arg(long, default_value_t = 20)]
    pub sequences: usize,

    #[arg(long, default_value_t = 64)]
    pub width: u32,

    #[arg(long, default_value_t = 64)]
    pub height: u32,

    /// Frames per sequence
    #[arg(long, default_value_t = 32)]
    pub frames: u32,

    #[arg(long, default_value = "30/1")]
    pub framerate: Framerate,

    /// Search range used when deriving the pseudo targets; match it in
    /// `analyze` so features and targets line up
    #[arg(long, default_value_t = 16)]
    pub search_range: u32,

    #[arg(long, default_value_t = 5.0)]
    pub gop_seconds: f64,
}

pub fn run(args: SynthArgs) -> Result<i32> {
    let analysis = AnalysisConfig {
        search_range: args.search_range,
        gop_length_seconds: args.gop_seconds,
    };
    analysis.validate().map_err(anyhow::Error::msg)?;
    let config = CorpusConfig {
        sequences: args.sequences,
        width: args.width,
        height: args.height,
        frames: args.frames,
        framerate: args.framerate,
        seed: args.seed,
    };

    let corpus = generate_corpus(&config);
    let videos_dir = args.out_dir.join("videos");
    std::fs::create_dir_all(&videos_dir)
        .with_context(|| format!("creating {}", videos_dir.display()))?;

    let mut manifest = Vec::new();
    for (index, sequence) in corpus.iter().enumerate() {
        // One sequence ships headerless to exercise the raw-YUV path.
        if index == 1 {
            let path = videos_dir.join(format!("{}.yuv", sequence.id));
            let mut bytes = Vec::new();
            let chroma = vec![
                128u8;
                args.width.div_ceil(2) as usize * args.height.div_ceil(2) as usize
            ];
            for frame in &sequence.frames {
                bytes.write_all(frame.samples())?;
                bytes.write_all(&chroma)?;
                bytes.write_all(&chroma)?;
            }
            write_file(&path, &bytes)?;
            manifest.push(ManifestEntry {
                path: format!("videos/{}.yuv", sequence.id),
                width: Some(args.width),
                height: Some(args.height),
                framerate: Some(args.framerate),
            });
        } else {
            let path = videos_dir.join(format!("{}.y4m", sequence.id));
            let mut bytes = Vec::new();
            write_y4m(&mut bytes, args.framerate, &sequence.frames)?;
            write_file(&path, &bytes)?;
            manifest.push(ManifestEntry {
                path: format!("videos/{}.y4m", sequence.id),
                width: None,
                height: None,
                framerate: None,
            });
        }
    }

    let (encodings, vca) = pseudo_ground_truth(&corpus, args.framerate, &analysis);

    let mut bytes = Vec::new();
    write_manifest_csv(&mut bytes, &manifest)?;
    write_file(&args.out_dir.join("manifest.csv"), &bytes)?;

    let mut bytes = Vec::new();
    write_encodings_csv(&mut bytes, &encodings)?;
    write_file(&args.out_dir.join("encodings.csv"), &bytes)?;

    let mut bytes = Vec::new();
    write_vca_csv(&mut bytes, &vca)?;
    write_file(&args.out_dir.join("vca.csv"), &bytes)?;

    eprintln!(
        "wrote {} sequences, {} pseudo encodings -> {}",
        corpus.len(),
        encodings.len(),
        args.out_dir.display()
    );
    Ok(EXIT_OK)
}
