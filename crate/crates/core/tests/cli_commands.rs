use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::{Mutex, MutexGuard};

use tdnn_enhance::cli::{
    cmd_bench, cmd_enhance, cmd_evaluate, cmd_synth, cmd_train, BenchTarget, EvalSource, RunConfig,
};
use tdnn_enhance::datagen::{synth_speechlike, Split};
use tdnn_enhance::dsp::{analyze, istft, Waveform, FFT_SIZE, FRAME_SHIFT};
use tdnn_enhance::metrics::{aggregate, Grouping};
use tdnn_enhance::nn::{save_model, ModelConfig, Normalization, Preset, TdnnModel};
use tdnn_enhance::wav::{read_wav, write_wav};
use tdnn_enhance::Error;

const SMALL: &str = "
model.width = 8
data.train = 4
data.valid = 2
data.test = 2
data.seen_noises = 2
data.unseen_noises = 1
data.duration_s = 2.0
data.noise_duration_s = 4.0
data.expansion = balanced
bench.utterances = 2
bench.frames = 60
bench.reps = 3
";

static SERIAL: Mutex<()> = Mutex::new(());

/// Runs tests one at a time so timings are not disturbed by other tests.
fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

/// The small setup with `extra` lines replacing any keys they repeat.
fn merged(extra: &str) -> String {
    let key = |l: &str| l.split('=').next().unwrap_or("").trim().to_string();
    let overridden: Vec<String> = extra.lines().map(key).filter(|k| !k.is_empty()).collect();
    let mut text: String = SMALL
        .lines()
        .filter(|l| !overridden.contains(&key(l)))
        .map(|l| format!("{l}\n"))
        .collect();
    text.push_str(extra);
    text
}

fn config(dir: &Path, extra: &str) -> RunConfig {
    let mut cfg = RunConfig::parse(&merged(extra), dir).unwrap();
    cfg.out_dir = dir.join("out");
    cfg
}

fn read_dir_sorted(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| {
            let bytes = fs::read(&p).unwrap();
            (PathBuf::from(p.file_name().unwrap()), bytes)
        })
        .collect();
    files.sort();
    files
}

/// A model whose mask is identically one: zero weights, output bias one.
fn unit_mask_model() -> TdnnModel {
    let config = ModelConfig::from_preset(Preset::TdnnF, 4);
    let mut model = TdnnModel::init(&config, Normalization::identity(129), 0).unwrap();
    let mut p = vec![0.0; model.param_count()];
    let n = p.len();
    p[n - 129..].fill(1.0);
    model.set_parameters(&p).unwrap();
    model
}

#[test]
fn synth_is_byte_identical_across_runs() {
    let _guard = serial();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let sa = cmd_synth(&config(a.path(), "")).unwrap();
    let sb = cmd_synth(&config(b.path(), "")).unwrap();
    assert_eq!((sa.train, sa.valid, sa.test), (sb.train, sb.valid, sb.test));
    let dir = |d: &Path| d.join("out").join("corpus");
    assert_eq!(
        read_dir_sorted(&dir(a.path())),
        read_dir_sorted(&dir(b.path()))
    );
    for sub in ["clean", "noise"] {
        if dir(a.path()).join(sub).is_dir() {
            assert_eq!(
                read_dir_sorted(&dir(a.path()).join(sub)),
                read_dir_sorted(&dir(b.path()).join(sub))
            );
        }
    }
}

#[test]
fn exhaustive_synth_expands_every_noise_and_snr() {
    let _guard = serial();
    let d = tempfile::tempdir().unwrap();
    let extra = "data.train = 10\ndata.seen_noises = 3\ndata.expansion = exhaustive\ndata.duration_s = 0.5\n";
    let s = cmd_synth(&config(d.path(), extra)).unwrap();
    assert_eq!(s.train, 180);
}

#[test]
fn synth_with_no_utterances_is_an_error() {
    let _guard = serial();
    let d = tempfile::tempdir().unwrap();
    assert!(cmd_synth(&config(d.path(), "data.train = 0\n")).is_err());
}

#[test]
fn train_writes_one_line_per_epoch() {
    let _guard = serial();
    let d = tempfile::tempdir().unwrap();
    let cfg = config(d.path(), "train.stages = noisy_clean:1\n");
    cmd_synth(&cfg).unwrap();
    let s = cmd_train(&cfg).unwrap();
    assert_eq!(s.report.records.len(), 1);
    let text = fs::read_to_string(&s.report_path).unwrap();
    let data_lines = text.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(data_lines, 2, "header plus one epoch:\n{text}");
    assert!(s.model.is_file());
}

#[test]
fn default_plan_reports_45_epochs() {
    let _guard = serial();
    let d = tempfile::tempdir().unwrap();
    let cfg = config(
        d.path(),
        "model.width = 4\ndata.train = 2\ndata.valid = 1\ndata.test = 1\ndata.duration_s = 0.5\n",
    );
    cmd_synth(&cfg).unwrap();
    let s = cmd_train(&cfg).unwrap();
    assert_eq!(s.report.records.len(), 45);
    let text = fs::read_to_string(&s.report_path).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 46);
}

#[test]
fn corrupt_manifest_line_is_named() {
    let _guard = serial();
    let d = tempfile::tempdir().unwrap();
    let cfg = config(d.path(), "train.stages = noisy_clean:1\n");
    let s = cmd_synth(&cfg).unwrap();
    let text = fs::read_to_string(&s.manifest).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let target = lines.iter().position(|l| !l.starts_with('#')).unwrap() + 2;
    lines[target] = "broken line".into();
    fs::write(&s.manifest, lines.join("\n")).unwrap();
    match cmd_train(&cfg) {
        Err(Error::Manifest { line, .. }) => assert_eq!(line, target + 1),
        other => panic!("{other:?}"),
    }
}

#[test]
fn enhance_with_unit_mask_reproduces_the_round_trip() {
    let _guard = serial();
    let d = tempfile::tempdir().unwrap();
    let model_path = d.path().join("unit.tdnn");
    save_model(&unit_mask_model(), &model_path).unwrap();
    let input = synth_speechlike(1.3, 5).unwrap();
    let in_path = d.path().join("in.wav");
    write_wav(&in_path, &input).unwrap();
    let out_path = d.path().join("out.wav");
    cmd_enhance(&model_path, &in_path, &out_path).unwrap();

    let stored = read_wav(&in_path).unwrap();
    let out = read_wav(&out_path).unwrap();
    assert_eq!(out.len(), stored.len());
    let (mag, ph) = analyze(&stored).unwrap();
    let rt = istft(&mag, &ph, FRAME_SHIFT, FFT_SIZE, stored.len(), 8000).unwrap();
    let peak = rt.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // both sides pass through 16-bit quantization, allow one step
    let interior = FFT_SIZE..stored.len() - FFT_SIZE;
    for i in interior {
        assert!(
            (out.samples()[i] - rt.samples()[i]).abs() <= 1.0 / 32768.0 + 1e-6 * peak,
            "sample {i}"
        );
    }
}

#[test]
fn enhance_keeps_duration_and_silence() {
    let _guard = serial();
    let d = tempfile::tempdir().unwrap();
    let model_path = d.path().join("m.tdnn");
    let config = ModelConfig::from_preset(Preset::TdnnF, 8);
    save_model(
        &TdnnModel::init(&config, Normalization::identity(129), 3).unwrap(),
        &model_path,
    )
    .unwrap();
    for len in [1usize, 127, 128, 4001, 8000] {
        let in_path = d.path().join("in.wav");
        let out_path = d.path().join("out.wav");
        write_wav(&in_path, &synth_speechlike(len as f64 / 8000.0, 1).unwrap()).unwrap();
        cmd_enhance(&model_path, &in_path, &out_path).unwrap();
        assert_eq!(
            read_wav(&out_path).unwrap().len(),
            read_wav(&in_path).unwrap().len(),
            "{len}"
        );
        write_wav(&in_path, &Waveform::zeros(len, 8000)).unwrap();
        cmd_enhance(&model_path, &in_path, &out_path).unwrap();
        assert!(
            read_wav(&out_path)
                .unwrap()
                .samples()
                .iter()
                .all(|v| *v == 0.0),
            "{len}"
        );
    }
}

#[test]
fn evaluate_clean_scores_perfectly() {
    let _guard = serial();
    let d = tempfile::tempdir().unwrap();
    let cfg = config(d.path(), "");
    cmd_synth(&cfg).unwrap();
    let s = cmd_evaluate(&cfg, &EvalSource::Clean, Split::Test).unwrap();
    assert!(!s.rows.is_empty());
    for r in &s.rows {
        assert_eq!(r.stoi, 1.0, "{}", r.id);
        assert_eq!(r.sdr, 100.0, "{}", r.id);
    }
    assert!(s.scores_path.is_file() && s.summary_path.is_file());
}

#[test]
fn evaluate_noisy_matches_mixing_snr_and_groups_by_snr() {
    let _guard = serial();
    let d = tempfile::tempdir().unwrap();
    let cfg = config(d.path(), "data.test = 6\n");
    cmd_synth(&cfg).unwrap();
    let s = cmd_evaluate(&cfg, &EvalSource::Noisy, Split::Test).unwrap();
    for r in &s.rows {
        let snr = r.snr_db.unwrap();
        if snr == 0.0 {
            assert!(r.sdr.abs() < 0.1, "{}: {}", r.id, r.sdr);
        }
        assert!((r.sdr - snr).abs() < 0.1, "{}: {} vs {snr}", r.id, r.sdr);
    }
    assert_eq!(aggregate(&s.rows, Grouping::BySnr).unwrap().len(), 6);
}

#[test]
fn evaluate_model_scores_every_entry() {
    let _guard = serial();
    let d = tempfile::tempdir().unwrap();
    let cfg = config(d.path(), "");
    cmd_synth(&cfg).unwrap();
    let model_path = d.path().join("unit.tdnn");
    save_model(&unit_mask_model(), &model_path).unwrap();
    let s = cmd_evaluate(&cfg, &EvalSource::Model(model_path), Split::Test).unwrap();
    assert_eq!(s.rows.len(), 2);
    assert!(s.scores_path.ends_with("scores_test_unit.tsv"));
}

#[test]
fn bench_identical_files_agree_within_30_percent() {
    let _guard = serial();
    let d = tempfile::tempdir().unwrap();
    let mut cfg = config(
        d.path(),
        "bench.utterances = 4\nbench.frames = 200\nbench.reps = 5\n",
    );
    cfg.model.widths = vec![64];
    let config = cfg.model.model_config().unwrap();
    let model = TdnnModel::init(&config, Normalization::identity(129), 1).unwrap();
    let (a, b) = (d.path().join("a.tdnn"), d.path().join("b.tdnn"));
    save_model(&model, &a).unwrap();
    save_model(&model, &b).unwrap();
    // timing on a shared machine is noisy; take the best of three attempts
    let ok = (0..3).any(|_| {
        let s = cmd_bench(
            &cfg,
            &[BenchTarget::File(a.clone()), BenchTarget::File(b.clone())],
        )
        .unwrap();
        let (x, y) = (s.results[0].mean_ms, s.results[1].mean_ms);
        (x - y).abs() <= 0.3 * x.min(y)
    });
    assert!(ok);
}

#[test]
fn bench_presets_report_both_rows_and_ratio() {
    let _guard = serial();
    let d = tempfile::tempdir().unwrap();
    let cfg = config(d.path(), "");
    let s = cmd_bench(
        &cfg,
        &[
            BenchTarget::Preset(Preset::Dnn),
            BenchTarget::Preset(Preset::TdnnF),
        ],
    )
    .unwrap();
    let table = s.to_tsv();
    let rows: Vec<&str> = table
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("dnn\t") && rows[1].starts_with("tdnn-f\t"));
    assert!(table.lines().next().unwrap().ends_with("ratio"));
}

#[test]
fn bench_missing_file_names_the_path() {
    let _guard = serial();
    let d = tempfile::tempdir().unwrap();
    let cfg = config(d.path(), "");
    let missing = d.path().join("absent.tdnn");
    let err = cmd_bench(&cfg, &[BenchTarget::File(missing.clone())]).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.to_string().contains(&missing.display().to_string()));
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tdnn-enhance"))
}

fn write_config(dir: &Path, extra: &str) -> PathBuf {
    let path = dir.join("run.cfg");
    fs::write(&path, format!("{}io.out_dir = out\n", merged(extra))).unwrap();
    path
}

#[test]
fn exit_codes_follow_the_error_class() {
    let _guard = serial();
    let d = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| bin().args(args).output().unwrap().status.code().unwrap();
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&[]), 1);
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(code(&["evaluate"]), 1);
    let bad_cfg = d.path().join("bad.cfg");
    fs::write(&bad_cfg, "model.nonsense = 3\n").unwrap();
    assert_eq!(code(&["--config", bad_cfg.to_str().unwrap(), "synth"]), 1);
    let missing = d.path().join("nothing.wav");
    let m = d.path().join("m.tdnn");
    save_model(&unit_mask_model(), &m).unwrap();
    assert_eq!(
        code(&[
            "enhance",
            "--model",
            m.to_str().unwrap(),
            missing.to_str().unwrap(),
            "out.wav"
        ]),
        2
    );
}

/// Runs synth, train, evaluate and bench through the binary and returns every
/// output file, with the timing columns blanked.
fn full_run(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let cfg = write_config(dir, "train.stages = noisy_clean:2,clean_clean:1\n");
    let run = |args: &[&str]| {
        let out = bin().arg("--config").arg(&cfg).args(args).output().unwrap();
        assert!(
            out.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    };
    run(&["synth"]);
    run(&["train"]);
    let model = dir.join("out").join("model.tdnn");
    run(&["evaluate", "--model", model.to_str().unwrap()]);
    run(&["evaluate", "--baseline", "noisy"]);
    let out = dir.join("out");
    let mut files = read_dir_sorted(&out);
    files.extend(read_dir_sorted(&out.join("corpus")));
    for (name, bytes) in &mut files {
        if name.as_os_str() == "train_report.tsv" {
            // the last column is wall-clock seconds
            let text = String::from_utf8(bytes.clone()).unwrap();
            let blanked: Vec<String> = text
                .lines()
                .map(|l| match l.rsplit_once('\t') {
                    Some((head, _)) if !l.starts_with('#') => head.to_string(),
                    _ => l.to_string(),
                })
                .collect();
            *bytes = blanked.join("\n").into_bytes();
        }
    }
    files
}

#[test]
fn commands_are_deterministic_apart_from_timing() {
    let _guard = serial();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let fa = full_run(a.path());
    let fb = full_run(b.path());
    assert!(fa.iter().any(|(n, _)| n.as_os_str() == "model.tdnn"));
    assert_eq!(fa, fb);
}
