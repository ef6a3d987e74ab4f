use std::fs;
use std::path::Path;

use bbglm_cli::run;

fn call(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut argv = vec!["bbglm"];
    argv.extend_from_slice(args);
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

/// Small two-ratio problem in CSV form with a handful of missing cells.
fn write_dataset(dir: &Path) {
    let mut train = String::from("attr1,attr2,class\n");
    let mut test = train.clone();
    for i in 0..300 {
        let a = ((i * 37) % 101) as f64 / 25.0 - 2.0;
        let b = ((i * 53) % 97) as f64 / 24.0 - 2.0;
        let y = u8::from(1.5 * a - b + ((i * 17) % 13) as f64 / 6.5 - 1.0 > 1.2);
        let a_cell = if i % 41 == 0 {
            "?".to_string()
        } else {
            format!("{a}")
        };
        let line = format!("{a_cell},{b},{y}\n");
        if i % 4 == 0 {
            test.push_str(&line);
        } else {
            train.push_str(&line);
        }
    }
    fs::write(dir.join("train.csv"), train).unwrap();
    fs::write(dir.join("test.csv"), test).unwrap();
}

fn write_config(dir: &Path, seed: u64, out: &str) -> String {
    let path = dir.join(format!("run-{seed}-{out}.cfg"));
    fs::write(
        &path,
        format!(
            "train = train.csv\ntest = test.csv\nformat = csv\npreset = custom\nfeatures = attr1, attr2\n\
             model_name = tiny\nchains = 2\nwarmup = 200\ndraws = 200\nkfold_k = 3\nseed = {seed}\nout = {out}\n"
        ),
    )
    .unwrap();
    path.display().to_string()
}

#[test]
fn fit_evaluate_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path());
    let cfg = write_config(dir.path(), 5, "a");
    let (code, out, err) = call(&["fit", "--config", &cfg]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("fitted tiny (3 parameters)"));
    for f in [
        "draws.json",
        "scaler.json",
        "imputation.json",
        "manifest.json",
    ] {
        assert!(dir.path().join("a").join(f).exists(), "{f}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["config"]["seed"], "5");
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 3);

    let (code, md, err) = call(&["evaluate", "--config", &cfg]);
    assert_eq!(code, 0, "{err}");
    assert!(md.contains("| True NO |"));
    let eval: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a/eval.json")).unwrap()).unwrap();
    assert_eq!(eval["n"], 75);

    let (code, md, err) = call(&["report", "--config", &cfg]);
    assert_eq!(code, 0, "{err}");
    assert!(md.contains("| attr1 ("), "{md}");
    assert!(md.contains("probability of"));
}

#[test]
fn same_config_gives_identical_draw_files() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path());
    let first = write_config(dir.path(), 9, "one");
    let second = write_config(dir.path(), 9, "two");
    assert_eq!(call(&["fit", "--config", &first]).0, 0);
    assert_eq!(call(&["fit", "--config", &second]).0, 0);
    let a = fs::read(dir.path().join("one/draws.json")).unwrap();
    let b = fs::read(dir.path().join("two/draws.json")).unwrap();
    assert!(a == b);

    let other = write_config(dir.path(), 10, "three");
    assert_eq!(call(&["fit", "--config", &other]).0, 0);
    assert!(fs::read(dir.path().join("three/draws.json")).unwrap() != a);
}

#[test]
fn missing_training_file_is_a_user_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 1, "x");
    let (code, _, err) = call(&["fit", "--config", &cfg]);
    assert_eq!(code, 1);
    assert!(err.contains("train.csv"), "{err}");
}

#[test]
fn seed_is_mandatory() {
    let (code, _, err) = call(&["fit", "--preset", "model1"]);
    assert_eq!(code, 1);
    assert!(err.contains("seed"), "{err}");
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    fs::write(&path, "seed = 1\nwarmpu = 10\n").unwrap();
    let (code, _, err) = call(&["fit", "--config", path.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("warmpu"), "{err}");
}

#[test]
fn empty_draws_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let draws = dir.path().join("draws.json");
    fs::write(
        &draws,
        r#"{"format":"bbglm-draws","version":1,"param_names":[],"chains":0,"draws":0,"values":[],
            "stats":{"divergent":[],"tree_depth":[],"n_leapfrog":[],"step_size":[],"accept_stat":[],"energy":[]}}"#,
    )
    .unwrap();
    let (code, _, err) = call(&["report", "--draws", draws.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("draws.json"), "{err}");
}

#[test]
fn positive_draws_are_reported_significant() {
    let dir = tempfile::tempdir().unwrap();
    let values: Vec<f64> = (0..400).map(|i| 1.0 + (i % 17) as f64 * 0.01).collect();
    let draws =
        bbglm_core::PosteriorDraws::from_values(vec!["attr33".into()], 2, 200, values).unwrap();
    let path = dir.path().join("draws.json");
    fs::write(&path, draws.to_json().unwrap()).unwrap();
    let (code, md, err) = call(&["report", "--draws", path.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(
        md.contains("probability of 100.00% of being positive"),
        "{md}"
    );
    assert!(md.contains("Effect is significant."));
    assert!(md.contains("Significant parameters: attr33"));
    assert!(dir.path().join("summary.json").exists());
}

#[test]
fn catalog_lists_every_ratio() {
    let (code, out, _) = call(&["catalog"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 64);
    assert!(out.starts_with("attr1\t"));
}

#[test]
fn compare_two_models() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path());
    let full = write_config(dir.path(), 3, "cmp");
    let reduced = dir.path().join("reduced.cfg");
    fs::write(
        &reduced,
        "train = train.csv\nformat = csv\npreset = custom\nfeatures = attr2\nmodel_name = attr2-only\n\
         chains = 2\nwarmup = 200\ndraws = 200\nkfold_k = 3\nseed = 3\n",
    )
    .unwrap();
    let (code, md, err) = call(&[
        "compare",
        &full,
        reduced.to_str().unwrap(),
        "--out",
        dir.path().join("cmp").to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let first = md.lines().nth(2).unwrap();
    assert!(
        first.starts_with("| tiny |") && first.ends_with("| 0.000 | 0.000 |"),
        "{md}"
    );
}
