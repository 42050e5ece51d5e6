use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fest::commands::{self, GridSettings};
use fest::fusion::resample_bilinear;
use fest::metrics::{MatchConfig, ScoreConfig};
use fest::sensitivity::InjectionStyle;
use fest::ProbMask;

fn fest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fest"))
        .args(args)
        .output()
        .expect("spawn fest")
}

fn ok(args: &[&str]) -> String {
    let out = fest(args);
    assert!(
        out.status.success(),
        "fest {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path, n: usize) -> PathBuf {
    let data = dir.join("data");
    ok(&[
        "synth",
        "--out-dir",
        s(&data),
        "--n",
        &n.to_string(),
        "--seed",
        "3",
        "--hw",
        "40x48",
    ]);
    data
}

fn rows(csv_text: &str) -> Vec<csv::StringRecord> {
    csv::Reader::from_reader(csv_text.as_bytes())
        .records()
        .map(|r| r.unwrap())
        .collect()
}

#[test]
fn synth_writes_trees_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), 4);
    for sub in ["gt", "prob", "img"] {
        assert_eq!(fs::read_dir(data.join(sub)).unwrap().count(), 4);
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(data.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.as_array().unwrap().len(), 4);
    let header = fs::read(data.join("prob/case_0000.pgm")).unwrap();
    assert!(header.starts_with(b"P5\n48 40\n65535\n"));
}

#[test]
fn sweep_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), 5);
    let (prob, gt) = (data.join("prob"), data.join("gt"));
    let cli = ok(&[
        "sweep",
        "--prob-dir",
        s(&prob),
        "--gt-dir",
        s(&gt),
        "--th1",
        "0.5,0.3",
        "--th2",
        "none,0.1",
    ]);
    let lib = commands::cmd_sweep(
        &prob,
        &gt,
        &[0.5, 0.3],
        &[None, Some(0.1)],
        InjectionStyle::SinglePixel,
        &MatchConfig::default(),
        &ScoreConfig::default(),
    )
    .unwrap();
    let mut buf = Vec::new();
    commands::write_sweep_csv(&mut buf, &lib).unwrap();
    assert_eq!(cli, String::from_utf8(buf).unwrap());
    let table = rows(&cli);
    assert_eq!(table.len(), 4);
    let pd = |i: usize| table[i][3].parse::<f64>().unwrap();
    assert!(pd(2) >= pd(0));
    assert!(pd(3) >= pd(2));
}

#[test]
fn roc_defaults_to_99_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), 3);
    let out = dir.path().join("roc.csv");
    ok(&[
        "roc",
        "--prob-dir",
        s(&data.join("prob")),
        "--gt-dir",
        s(&data.join("gt")),
        "--csv",
        s(&out),
    ]);
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("threshold,fa,pd\n"));
    let table = rows(&text);
    assert_eq!(table.len(), 99);
    assert_eq!(&table[0][0], "0.99");
    assert_eq!(&table[98][0], "0.01");
}

#[test]
fn post_then_eval() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), 4);
    let post = dir.path().join("post");
    let report = dir.path().join("targets.csv");
    ok(&[
        "post",
        "--prob-dir",
        s(&data.join("prob")),
        "--th1",
        "0.3",
        "--th2",
        "0.1",
        "--out",
        s(&post),
        "--report",
        s(&report),
    ]);
    let targets = fs::read_to_string(&report).unwrap();
    assert!(targets.starts_with("image,class,pixel_count,centroid_row,centroid_col,peak\n"));
    let eval = ok(&[
        "eval",
        "--pred-dir",
        s(&post),
        "--gt-dir",
        s(&data.join("gt")),
    ]);
    let table = rows(&eval);
    assert_eq!(table.len(), 5);
    assert_eq!(&table[0][0], "dataset");

    // single-file form
    let one = dir.path().join("one.pgm");
    ok(&[
        "post",
        "--prob",
        s(&data.join("prob/case_0001.pgm")),
        "--th1",
        "0.3",
        "--out",
        s(&one),
    ]);
    assert_eq!(
        fs::read(&one).unwrap(),
        fs::read(post.join("case_0001.pgm")).unwrap()
    );
}

#[test]
fn fuse_from_prediction_directory() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), 2);
    let preds = dir.path().join("preds");
    for id in ["case_0000", "case_0001"] {
        let prob = ProbMask::read(&data.join("prob").join(format!("{id}.pgm"))).unwrap();
        fs::create_dir_all(preds.join(id)).unwrap();
        for scale in [32, 64] {
            resample_bilinear(&prob, scale, scale)
                .unwrap()
                .write(&preds.join(id).join(format!("{scale}.pgm")))
                .unwrap();
        }
    }
    let out = dir.path().join("fused.pgm");
    ok(&[
        "fuse",
        "--image",
        s(&data.join("img/case_0000.pgm")),
        "--scales",
        "32,64",
        "--pred-dir",
        s(&preds),
        "--out",
        s(&out),
    ]);
    let fused = ProbMask::read(&out).unwrap();
    assert_eq!(fused.dims(), (40, 48));

    let err = fest(&[
        "fuse",
        "--image",
        s(&data.join("img/case_0000.pgm")),
        "--scales",
        "32,48",
        "--pred-dir",
        s(&preds),
        "--out",
        s(&out),
    ]);
    assert!(!err.status.success());
    let msg = String::from_utf8(err.stderr).unwrap();
    assert!(msg.starts_with("error: predictor:"), "{msg}");
    assert!(msg.contains("48"), "{msg}");
}

#[test]
fn train_toy_writes_one_weight_per_line() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), 3);
    let model = dir.path().join("model.txt");
    let log = dir.path().join("log.csv");
    ok(&[
        "train-toy",
        "--data",
        s(&data),
        "--loss",
        "eedm",
        "--w",
        "4",
        "--p",
        "0.5",
        "--lr",
        "0.5",
        "--epochs",
        "30",
        "--seed",
        "7",
        "--out",
        s(&model),
        "--log",
        s(&log),
    ]);
    let text = fs::read_to_string(&model).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().all(|l| l.parse::<f64>().is_ok()));
    let losses = rows(&fs::read_to_string(&log).unwrap());
    assert_eq!(losses.len(), 31);
    let first: f64 = losses[0][1].parse().unwrap();
    let last: f64 = losses[30][1].parse().unwrap();
    assert!(last < first);
}

#[test]
fn grid_default_has_25_cells_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), 6);
    let args = ["grid", "--data", s(&data), "--epochs", "10"];
    let a = ok(&args);
    assert_eq!(a, ok(&args));
    let table = rows(&a);
    assert_eq!(table.len(), 25);
    assert_eq!((&table[0][0], &table[0][1]), ("1", "0.1"));

    let d = commands::load_synth_images(&data).unwrap();
    let settings = GridSettings {
        train: fest::toymodel::TrainConfig {
            epochs: 10,
            ..Default::default()
        },
        ..GridSettings::default()
    };
    let mut buf = Vec::new();
    commands::write_grid_csv(
        &mut buf,
        &commands::grid(&d.inputs, &d.gts, &settings).unwrap(),
    )
    .unwrap();
    assert_eq!(a, String::from_utf8(buf).unwrap());
}

#[test]
fn config_file_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), 3);
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        format!(
            "# sweep defaults\nprob-dir = {}\ngt-dir = {}\nth1 = 0.3\njobs = 2\nepochs = 5\n",
            s(&data.join("prob")),
            s(&data.join("gt"))
        ),
    )
    .unwrap();
    let from_file = rows(&ok(&["--config", s(&cfg), "sweep"]));
    assert_eq!(from_file.len(), 1);
    assert_eq!(&from_file[0][0], "0.3");
    let overridden = rows(&ok(&["--config", s(&cfg), "sweep", "--th1", "0.45"]));
    assert_eq!(overridden.len(), 1);
    assert_eq!(&overridden[0][0], "0.45");

    fs::write(&cfg, "nonsense = 1\n").unwrap();
    let bad = fest(&["--config", s(&cfg), "sweep"]);
    assert!(!bad.status.success());
    assert!(String::from_utf8(bad.stderr)
        .unwrap()
        .starts_with("error: invalid-config:"));
}

#[test]
fn loss_subcommand_reports_per_image() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), 2);
    let table = rows(&ok(&[
        "loss",
        "--prob-dir",
        s(&data.join("prob")),
        "--gt-dir",
        s(&data.join("gt")),
    ]));
    assert_eq!(table.len(), 2);
    assert!(table.iter().all(|r| r[1].parse::<f64>().unwrap() >= 0.0));
}

#[test]
fn errors_are_single_line_and_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), 2);
    let cases: Vec<Vec<String>> = vec![
        vec![
            "eval".into(),
            "--pred-dir".into(),
            s(&dir.path().join("missing")).into(),
            "--gt-dir".into(),
            s(&data.join("gt")).into(),
        ],
        vec![
            "post".into(),
            "--prob".into(),
            s(&data.join("prob/case_0000.pgm")).into(),
            "--th1".into(),
            "0.1".into(),
            "--th2".into(),
            "0.3".into(),
            "--out".into(),
            s(&dir.path().join("x.pgm")).into(),
        ],
        vec![
            "roc".into(),
            "--prob-dir".into(),
            s(&data.join("prob")).into(),
            "--gt-dir".into(),
            s(&data.join("gt")).into(),
            "--thresholds".into(),
            "0.2,0.5".into(),
        ],
        vec![
            "eval".into(),
            "--pred-dir".into(),
            s(&data.join("prob")).into(),
            "--gt-dir".into(),
            s(&data.join("gt")).into(),
        ],
    ];
    for args in cases {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = fest(&refs);
        assert!(!out.status.success(), "{args:?}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert_eq!(err.trim_end().lines().count(), 1, "{err}");
        assert!(err.starts_with("error: "), "{err}");
    }
}
