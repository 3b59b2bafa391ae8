//! End-to-end tests of the command-line surface: exit codes, schema
//! enforcement, batch behavior and output determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use msbitrate_core::dataset::{
    write_dataset_csv, write_encodings_csv, DatasetRow, EncodingRow, FeatureVector, CRF_GRID,
};
use msbitrate_core::frame::{Framerate, LumaFrame};
use msbitrate_core::io::write_y4m;
use msbitrate_core::synth::pseudo_theta;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_msbitrate"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "command failed: {}\n{}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
}

fn write_noise_y4m(path: &Path, seed: u64, frames: u32) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frames: Vec<LumaFrame> = (0..frames)
        .map(|i| LumaFrame::from_fn(64, 48, u64::from(i), |_, _| rng.gen()).unwrap())
        .collect();
    let mut bytes = Vec::new();
    write_y4m(&mut bytes, Framerate { num: 30, den: 1 }, &frames).unwrap();
    fs::write(path, bytes).unwrap();
}

/// 50 sequences x 4 CRFs with power-law targets; the bundled dataset
/// fixture used by the fit/evaluate tests.
fn dataset_fixture(preset: u32, with_vca: bool) -> Vec<DatasetRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut rows = Vec::new();
    for s in 0..50 {
        let bpp_ms = 10f64.powf(rng.gen_range(-3.0..-1.2));
        let mse_ms = 10f64.powf(rng.gen_range(0.0..3.6));
        let ip_ratio: f64 = rng.gen_range(0.0..1.0);
        for &crf in &CRF_GRID {
            let theta = pseudo_theta(preset, crf);
            let bpp = theta[0] * bpp_ms.powf(theta[1]) + theta[2] * mse_ms.powf(theta[3]);
            let pixels = 64u64 * 64 * 32;
            let bits = (bpp * pixels as f64).round().max(64.0) as u64;
            rows.push(DatasetRow {
                sequence_id: format!("fix{s:03}"),
                preset,
                crf,
                width: 64,
                height: 64,
                frame_count: 32,
                features: FeatureVector {
                    crf,
                    bpp_ms,
                    mse_ms,
                    ip_ratio,
                    vca_spatial: with_vca.then(|| 25.0 * (1.0 + mse_ms).ln()),
                    vca_temporal: with_vca.then_some(180.0 * bpp_ms),
                },
                target_bpp: bits as f64 / pixels as f64,
                target_bits: bits,
            });
        }
    }
    rows
}

fn write_dataset(path: &Path, rows: &[DatasetRow]) {
    let mut bytes = Vec::new();
    write_dataset_csv(&mut bytes, rows).unwrap();
    fs::write(path, bytes).unwrap();
}

#[test]
fn analyze_writes_one_row_per_input() {
    let dir = tempfile::tempdir().unwrap();
    for (i, name) in ["clip_a.y4m", "clip_b.y4m", "clip_c.y4m"].iter().enumerate() {
        write_noise_y4m(&dir.path().join(name), i as u64, 4);
    }
    let out = run_in(
        dir.path(),
        &[
            "analyze",
            "clip_a.y4m",
            "clip_b.y4m",
            "clip_c.y4m",
            "--out",
            "features.csv",
            "--search-range",
            "4",
        ],
    );
    assert_ok(&out);
    let text = fs::read_to_string(dir.path().join("features.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "# schema: msbitrate/features/v1");
    assert_eq!(
        lines.next().unwrap(),
        "sequence_id,width,height,framerate,n_frames,mse_ms,bpp_ms,ip_ratio,analysis_wall_time,error"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("clip_a,64,48,30/1,4,"));
}

#[test]
fn corrupt_input_gives_error_row_and_partial_exit() {
    let dir = tempfile::tempdir().unwrap();
    write_noise_y4m(&dir.path().join("good_a.y4m"), 1, 3);
    fs::write(dir.path().join("bad.y4m"), b"YUV4MPEG3 W64 H48\n").unwrap();
    write_noise_y4m(&dir.path().join("good_b.y4m"), 2, 3);
    let out = run_in(
        dir.path(),
        &[
            "analyze",
            "good_a.y4m",
            "bad.y4m",
            "good_b.y4m",
            "--out",
            "features.csv",
            "--search-range",
            "4",
        ],
    );
    assert_eq!(out.status.code(), Some(2), "partial failure exit code");
    let text = fs::read_to_string(dir.path().join("features.csv")).unwrap();
    let data_rows: Vec<&str> = text.lines().skip(2).collect();
    assert_eq!(data_rows.len(), 3);
    assert!(data_rows[1].starts_with("bad,,,,,,,,,"));
    assert!(data_rows[1].contains("bad magic"));
    assert!(!data_rows[0].contains("bad magic") && !data_rows[2].contains("bad magic"));
}

#[test]
fn analyze_is_byte_deterministic_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    for i in 0..4 {
        write_noise_y4m(&dir.path().join(format!("clip_{i}.y4m")), 10 + i, 4);
    }
    let inputs = ["clip_0.y4m", "clip_1.y4m", "clip_2.y4m", "clip_3.y4m"];
    for (out_name, threads) in [("f1.csv", "1"), ("f2.csv", "1"), ("f4.csv", "4")] {
        let mut args = vec!["analyze"];
        args.extend(inputs);
        args.extend(["--out", out_name, "--search-range", "4", "--threads", threads]);
        assert_ok(&run_in(dir.path(), &args));
    }
    let f1 = fs::read(dir.path().join("f1.csv")).unwrap();
    assert_eq!(f1, fs::read(dir.path().join("f2.csv")).unwrap());
    assert_eq!(f1, fs::read(dir.path().join("f4.csv")).unwrap());
}

#[test]
fn analyze_requires_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["analyze", "--out", "f.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no inputs"));
}

#[test]
fn analyze_reads_raw_yuv_with_flags() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut bytes = Vec::new();
    for _ in 0..2 {
        for _ in 0..64 * 48 {
            bytes.push(rng.gen::<u8>());
        }
        bytes.extend(vec![128u8; 2 * 32 * 24]);
    }
    fs::write(dir.path().join("raw.yuv"), &bytes).unwrap();
    let out = run_in(
        dir.path(),
        &[
            "analyze",
            "raw.yuv",
            "--width",
            "64",
            "--height",
            "48",
            "--framerate",
            "24/1",
            "--out",
            "features.csv",
            "--search-range",
            "4",
        ],
    );
    assert_ok(&out);
    let text = fs::read_to_string(dir.path().join("features.csv")).unwrap();
    assert!(text.lines().nth(2).unwrap().starts_with("raw,64,48,24/1,2,"));
}

#[test]
fn block_dump_writes_one_csv_per_input() {
    let dir = tempfile::tempdir().unwrap();
    write_noise_y4m(&dir.path().join("clip.y4m"), 3, 3);
    let out = run_in(
        dir.path(),
        &[
            "analyze",
            "clip.y4m",
            "--out",
            "features.csv",
            "--search-range",
            "4",
            "--block-dump",
            "blocks",
        ],
    );
    assert_ok(&out);
    let dump = fs::read_to_string(dir.path().join("blocks/clip.blocks.csv")).unwrap();
    let mut lines = dump.lines();
    assert_eq!(lines.next().unwrap(), "# schema: msbitrate/blocks/v1");
    assert_eq!(
        lines.next().unwrap(),
        "frame_index,block_x,block_y,kind,mse_intra,mse_mv,mse_block,bitsize,dx,dy"
    );
    // 64x48 -> 12 blocks per frame, 3 frames.
    assert_eq!(lines.count(), 36);
}

#[test]
fn join_rejects_unknown_versions_and_lists_unmatched_rows() {
    let dir = tempfile::tempdir().unwrap();
    write_noise_y4m(&dir.path().join("clip.y4m"), 4, 3);
    assert_ok(&run_in(
        dir.path(),
        &["analyze", "clip.y4m", "--out", "features.csv", "--search-range", "4"],
    ));

    let encodings = vec![
        EncodingRow {
            sequence_id: "clip".into(),
            preset: 5,
            crf: 32,
            bits: 90_000,
            frame_count: 3,
        },
        EncodingRow {
            sequence_id: "ghost".into(),
            preset: 5,
            crf: 32,
            bits: 90_000,
            frame_count: 3,
        },
    ];
    let mut bytes = Vec::new();
    write_encodings_csv(&mut bytes, &encodings).unwrap();
    fs::write(dir.path().join("encodings.csv"), bytes).unwrap();

    let out = run_in(
        dir.path(),
        &[
            "join",
            "--features",
            "features.csv",
            "--encodings",
            "encodings.csv",
            "--out",
            "dataset.csv",
        ],
    );
    assert_ok(&out);
    let rejects = fs::read_to_string(dir.path().join("dataset.rejects.csv")).unwrap();
    assert!(rejects.contains("encodings,ghost,5,32,no matching feature row"));
    let dataset = fs::read_to_string(dir.path().join("dataset.csv")).unwrap();
    assert_eq!(dataset.lines().count(), 3); // schema + header + 1 row

    // Tampering with the schema line must fail the reader.
    let tampered = fs::read_to_string(dir.path().join("features.csv"))
        .unwrap()
        .replace("features/v1", "features/v9");
    fs::write(dir.path().join("tampered.csv"), tampered).unwrap();
    let out = run_in(
        dir.path(),
        &[
            "join",
            "--features",
            "tampered.csv",
            "--encodings",
            "encodings.csv",
            "--out",
            "d2.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("schema"));
}

#[test]
fn fit_polynomial_writes_one_theta_per_crf() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(&dir.path().join("dataset.csv"), &dataset_fixture(5, false));
    let out = run_in(
        dir.path(),
        &[
            "fit",
            "--dataset",
            "dataset.csv",
            "--model",
            "polynomial",
            "--preset",
            "5",
            "--seed",
            "1",
            "--out",
            "model.json",
        ],
    );
    assert_ok(&out);
    let model: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("model.json")).unwrap()).unwrap();
    assert_eq!(model["format"], "msbitrate-model");
    assert_eq!(model["model"], "polynomial");
    let per_crf = model["per_crf"].as_object().unwrap();
    assert_eq!(per_crf.len(), 4);
    for crf in ["32", "43", "55", "63"] {
        assert_eq!(per_crf[crf]["theta"].as_array().unwrap().len(), 4);
    }
}

#[test]
fn predict_appends_columns_and_checks_presets() {
    let dir = tempfile::tempdir().unwrap();
    let rows = dataset_fixture(5, false);
    write_dataset(&dir.path().join("dataset.csv"), &rows);
    assert_ok(&run_in(
        dir.path(),
        &[
            "fit", "--dataset", "dataset.csv", "--model", "ms", "--preset", "5", "--seed", "9",
            "--out", "ms.json",
        ],
    ));
    assert_ok(&run_in(
        dir.path(),
        &[
            "predict",
            "--dataset",
            "dataset.csv",
            "--model",
            "ms.json",
            "--out",
            "pred.csv",
        ],
    ));
    let text = fs::read_to_string(dir.path().join("pred.csv")).unwrap();
    assert!(text
        .lines()
        .nth(1)
        .unwrap()
        .ends_with("predicted_bpp,relative_error"));
    assert_eq!(text.lines().count(), 2 + rows.len());

    // Preset-10 rows against a preset-5 model are a hard error.
    write_dataset(&dir.path().join("p10.csv"), &dataset_fixture(10, false));
    let out = run_in(
        dir.path(),
        &[
            "predict",
            "--dataset",
            "p10.csv",
            "--model",
            "ms.json",
            "--out",
            "pred10.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("preset mismatch"));
}

#[test]
fn vca_model_against_rows_without_vca_columns_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(&dir.path().join("with_vca.csv"), &dataset_fixture(5, true));
    write_dataset(&dir.path().join("no_vca.csv"), &dataset_fixture(5, false));
    assert_ok(&run_in(
        dir.path(),
        &[
            "fit",
            "--dataset",
            "with_vca.csv",
            "--model",
            "ms-vca",
            "--preset",
            "5",
            "--seed",
            "4",
            "--out",
            "msvca.json",
        ],
    ));
    let out = run_in(
        dir.path(),
        &[
            "predict",
            "--dataset",
            "no_vca.csv",
            "--model",
            "msvca.json",
            "--out",
            "pred.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("vca_spatial"));
}

#[test]
fn evaluate_ms_forest_on_bundled_dataset_reaches_high_correlation() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(&dir.path().join("dataset.csv"), &dataset_fixture(5, false));
    let out = run_in(
        dir.path(),
        &[
            "evaluate",
            "--dataset",
            "dataset.csv",
            "--model",
            "ms",
            "--preset",
            "5",
            "--seed",
            "42",
            "--report",
            "report.json",
            "--report-csv",
            "report.csv",
            "--scatter",
            "scatter.csv",
        ],
    );
    assert_ok(&out);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["format"], "msbitrate-eval-report");
    assert_eq!(report["per_fold"].as_array().unwrap().len(), 5);
    assert!(report["pcc"].as_f64().unwrap() >= 0.9);
    assert_eq!(report["n_rows"].as_u64().unwrap(), 200);

    let scatter = fs::read_to_string(dir.path().join("scatter.csv")).unwrap();
    assert_eq!(scatter.lines().count(), 2 + 200);
    let report_csv = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(report_csv.lines().nth(1).unwrap().starts_with("model,preset,"));

    // The pooled MAPE equals an independent re-summation of the per-row
    // relative errors in the scatter output.
    let mut relative_errors = Vec::new();
    let mut outliers = 0u64;
    for line in scatter.lines().skip(2) {
        let fields: Vec<&str> = line.split(',').collect();
        relative_errors.push(fields[6].parse::<f64>().unwrap());
        outliers += fields[7].parse::<u64>().unwrap();
    }
    let resummed = relative_errors.iter().sum::<f64>() / relative_errors.len() as f64;
    let reported = report["mape"].as_f64().unwrap();
    assert!(
        (resummed - reported).abs() <= 1e-12,
        "mape {reported} vs re-summed {resummed}"
    );
    assert_eq!(outliers, report["outlier_count"].as_u64().unwrap());
}

#[test]
fn report_correlation_emits_per_descriptor_rows() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(&dir.path().join("dataset.csv"), &dataset_fixture(5, true));
    let out = run_in(
        dir.path(),
        &[
            "report-correlation",
            "--dataset",
            "dataset.csv",
            "--preset",
            "5",
            "--crf",
            "32",
            "--out",
            "corr.csv",
        ],
    );
    assert_ok(&out);
    let text = fs::read_to_string(dir.path().join("corr.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[1], "descriptor,n,pcc");
    assert_eq!(lines.len(), 2 + 5);
    // mse_ms dominates the pseudo targets at crf 32.
    let mse_line = lines.iter().find(|l| l.starts_with("mse_ms,")).unwrap();
    let pcc: f64 = mse_line.rsplit(',').next().unwrap().parse().unwrap();
    assert!(pcc > 0.5, "mse_ms pcc = {pcc}");
}
