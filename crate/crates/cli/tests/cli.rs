use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nlrecon::freefield::WickSeriesModel;
use nlrecon::gns::{build_gram, Dictionary, GnsOpts};
use nlrecon::store::{Context, IntegralStore, KeyBuilder};
use nlrecon::testfn::GaussPolyFn;
use nlrecon_cli::cache::{decode, encode, FileStore, FILE_NAME, MAGIC};
use nlrecon_cli::checks::count_matchings;
use nlrecon_cli::config::Scenario;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const MINIMAL: &str = r#"
schema_version = 1
seed = 1

[model]
kind = "free"
mass = 1.0

[[dictionary]]
center = [0.0, 0.0]
width = 1.0

[[dictionary]]
center = [0.0, 1.0]
width = 1.0

[gns]
max_degree = 2

[[checks]]
kind = "gns"
"#;

/// Free-field scenario exercising every cached code path cheaply.
const SMALL: &str = r#"
schema_version = 1
seed = 3

[model]
kind = "free"

[[dictionary]]
center = [0.0, 0.0]

[[dictionary]]
center = [0.5, -0.5]

[gns]
max_degree = 2

[[checks]]
kind = "cluster"
word_f = [0]
word_g = [1]
a = [0.0, 1.0]
lambdas = [0.0, 2.0, 4.0]
threshold = 1.0

[[checks]]
kind = "wick"
max_total = 6
max_points = 3
points = [[0.0, 0.0], [0.3, 0.5]]

[[checks]]
kind = "gns"

[[checks]]
kind = "quasiloc"
separations = [1.0, 2.0]
"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_nlrecon"));
    c.env_remove("NLRECON_OUTPUT_DIR");
    c
}

/// Writes `text` as a scenario whose output goes to `dir/out`.
fn scenario(dir: &Path, name: &str, text: &str) -> PathBuf {
    let out = dir.join("out");
    let text = format!("output_dir = {:?}\n{text}", out.display().to_string());
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

/// Report with wall times removed.
fn values_only(mut r: Value) -> Value {
    for c in r["checks"].as_array_mut().unwrap() {
        c.as_object_mut().unwrap().remove("wall_time_s");
    }
    r
}

fn check<'a>(r: &'a Value, kind: &str) -> &'a Value {
    r["checks"].as_array().unwrap().iter().find(|c| c["kind"] == kind).unwrap()
}

#[test]
fn minimal_run_matches_gram_oracle() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(tmp.path(), "minimal.toml", MINIMAL);
    let o = run(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(&tmp.path().join("out"));
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["all_pass"], true);
    let g = check(&r, "gns");
    assert_eq!(g["pass"], true);
    let dict = Dictionary::new(vec![GaussPolyFn::gaussian(&[0.0, 0.0], 1.0), GaussPolyFn::gaussian(&[0.0, 1.0], 1.0)], 2).unwrap();
    let gram = build_gram(&WickSeriesModel::free(1.0).unwrap(), &dict, &GnsOpts::default(), &Context::default()).unwrap();
    let eig = gram.eigenvalues();
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(g["values"]["min_eigenvalue"].as_f64().unwrap(), min);
    assert_eq!(g["values"]["max_eigenvalue"].as_f64().unwrap(), max);
    assert_eq!(g["values"]["dimension"], 7);
}

#[test]
fn missing_model_is_config_invalid() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(tmp.path(), "bad.toml", "schema_version = 1\n");
    for cmd in ["run", "validate"] {
        let o = run(&[cmd, cfg.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2));
        assert!(stderr(&o).contains("CONFIG_INVALID") && stderr(&o).contains("`model`"), "{}", stderr(&o));
    }
}

#[test]
fn config_errors_name_the_key() {
    let cases = [
        ("schema_version = 1\n[model]\nkind = \"free\"\nmass = -1.0\n", "model.mass"),
        ("schema_version = 1\n[model]\nkind = \"free\"\ncolour = 3\n", "colour"),
        ("schema_version = 2\n[model]\nkind = \"free\"\n", "schema_version"),
        ("schema_version = 1\n[model]\nkind = \"gaussian\"\n", "model.g"),
        ("schema_version = 1\n[model]\nkind = \"free\"\n[gns]\nmax_degree = 2\n[[checks]]\nkind = \"spectrum\"\nword_f = [0, 0, 0]\nword_g = [0]\n", "checks[0].word_f"),
        ("schema_version = 1\n[model]\nkind = \"free\"\n[[checks]]\nkind = \"cluster\"\nword_f = [0]\nword_g = [0]\na = [2.0, 1.0]\nlambdas = [1.0]\n", "checks[0].a"),
    ];
    for (text, key) in cases {
        let e = Scenario::parse(text).unwrap_err();
        assert_eq!(e.key, key, "{e}");
    }
}

#[test]
fn scenario_hash_is_canonical() {
    let a = Scenario::parse(MINIMAL).unwrap();
    // key order and explicit defaults do not change the hash
    let reordered = MINIMAL.replace("kind = \"free\"\nmass = 1.0", "mass = 1.0\nkind = \"free\"").replace("max_degree = 2", "max_degree = 2\nword_cap = 200");
    let b = Scenario::parse(&reordered).unwrap();
    assert_eq!(a.hash(), b.hash());
    let c = Scenario::parse(&MINIMAL.replace("seed = 1", "seed = 2")).unwrap();
    assert_ne!(a.hash(), c.hash());
}

#[test]
fn repeated_runs_are_identical_and_cache_is_transparent() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(tmp.path(), "small.toml", SMALL);
    let out = tmp.path().join("out");
    let cold = run(&["run", cfg.to_str().unwrap()]);
    assert_eq!(cold.status.code(), Some(0), "{}", stderr(&cold));
    let first = report(&out);
    assert!(out.join(FILE_NAME).exists());
    assert!(out.join("00_cluster.csv").exists() && out.join("03_quasiloc.csv").exists());
    let warm = run(&["run", cfg.to_str().unwrap()]);
    assert_eq!(warm.status.code(), Some(0));
    let second = report(&out);
    assert_eq!(values_only(first.clone()), values_only(second.clone()));
    let t = |r: &Value| check(r, "wick")["wall_time_s"].as_f64().unwrap();
    assert!(t(&second) < t(&first), "warm {} vs cold {}", t(&second), t(&first));
    // deleting the cache changes nothing
    std::fs::remove_file(out.join(FILE_NAME)).unwrap();
    run(&["run", cfg.to_str().unwrap()]);
    assert_eq!(values_only(report(&out)), values_only(first.clone()));
    // neither does running without it
    run(&["--no-cache", "run", cfg.to_str().unwrap()]);
    assert_eq!(values_only(report(&out)), values_only(first));
}

#[test]
fn corrupt_cache_is_ignored_with_a_warning() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(tmp.path(), "small.toml", SMALL);
    let out = tmp.path().join("out");
    run(&["run", cfg.to_str().unwrap()]);
    let clean = values_only(report(&out));
    let path = out.join(FILE_NAME);
    let mut bytes = std::fs::read(&path).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x40;
    std::fs::write(&path, &bytes).unwrap();
    let o = run(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("CACHE_CORRUPT"), "{}", stderr(&o));
    assert_eq!(values_only(report(&out)), clean);
    // the rewritten cache is clean again
    let o = run(&["run", cfg.to_str().unwrap()]);
    assert!(!stderr(&o).contains("CACHE_CORRUPT"));
}

#[test]
fn output_dir_override_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(tmp.path(), "minimal.toml", MINIMAL);
    let elsewhere = tmp.path().join("elsewhere");
    let o = bin().env("NLRECON_OUTPUT_DIR", &elsewhere).args(["--seed", "9", "run", cfg.to_str().unwrap()]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(!tmp.path().join("out").exists());
    assert_eq!(report(&elsewhere)["seed"], 9);
    let s = run(&["report", "--summary", elsewhere.to_str().unwrap()]);
    assert_eq!(s.status.code(), Some(0));
    let text = String::from_utf8(s.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("PASS 00_gns")), "{text}");
    let missing = run(&["report", "--summary", tmp.path().join("nowhere").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn failing_check_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "schema_version = 1\n[model]\nkind = \"free\"\n[[dictionary]]\ncenter = [0.0, 0.0]\n[gns]\nmax_degree = 2\n\
                [[checks]]\nkind = \"cluster\"\nword_f = [0]\nword_g = [0]\na = [0.0, 1.0]\nlambdas = [0.0, 2.0]\nthreshold = 1e-3\n";
    let cfg = scenario(tmp.path(), "fail.toml", text);
    let o = run(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("CHECK_FAILED") && stderr(&o).contains("00_cluster"));
    assert_eq!(report(&tmp.path().join("out"))["all_pass"], false);
    // a looser scale passes the same check
    let o = run(&["--tolerance-scale", "1000", "run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn exhausted_budget_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "schema_version = 1\n[model]\nkind = \"free\"\n[gns]\nword_cap = 5\n[[checks]]\nkind = \"gns\"\n";
    let cfg = scenario(tmp.path(), "cap.toml", text);
    let o = run(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("BUDGET_EXCEEDED") && stderr(&o).contains("00_gns"), "{}", stderr(&o));
}

#[test]
fn cache_records_round_trip() {
    let key = KeyBuilder::new("t").f64(1.5).finish();
    let rec = encode(&key, &[1.0, -2.5, f64::MIN_POSITIVE]);
    let mut file = MAGIC.to_vec();
    file.extend_from_slice(&rec);
    let map = decode(&file).unwrap();
    assert_eq!(map[&key], vec![1.0, -2.5, f64::MIN_POSITIVE]);
    for i in MAGIC.len()..file.len() {
        let mut bad = file.clone();
        bad[i] ^= 1;
        assert!(decode(&bad).map(|m| m.get(&key) != Some(&vec![1.0, -2.5, f64::MIN_POSITIVE])).unwrap_or(true));
    }
    assert!(decode(&file[..file.len() - 3]).is_err());
    assert!(decode(b"something else").is_err());
}

#[test]
fn file_store_persists_across_opens() {
    let tmp = tempfile::tempdir().unwrap();
    let keys: Vec<_> = (0..50u64).map(|i| KeyBuilder::new("p").u64(i).finish()).collect();
    {
        let s = FileStore::open(tmp.path(), |w| panic!("{w}")).unwrap();
        for (i, k) in keys.iter().enumerate() {
            s.put(*k, vec![i as f64; i % 4]);
        }
    }
    let s = FileStore::open(tmp.path(), |w| panic!("{w}")).unwrap();
    assert_eq!(s.len(), 50);
    for (i, k) in keys.iter().enumerate() {
        assert_eq!(s.get(k), Some(vec![i as f64; i % 4]));
    }
}

#[test]
fn no_key_collisions_on_random_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut seen = HashSet::new();
    for i in 0..100_000u64 {
        let k = KeyBuilder::new("two_point").f64(rng.random()).f64(rng.random_range(-5.0..5.0)).u64(i % 7).finish();
        assert!(seen.insert(k));
    }
}

#[test]
fn matching_counts() {
    assert_eq!(count_matchings(&[]), 1);
    assert_eq!(count_matchings(&[2]), 0);
    assert_eq!(count_matchings(&[1, 1]), 1);
    assert_eq!(count_matchings(&[2, 2]), 2);
    assert_eq!(count_matchings(&[3, 3]), 6);
    assert_eq!(count_matchings(&[1, 1, 1, 1]), 3);
    // (2n−1)!! for n singletons
    assert_eq!(count_matchings(&[1; 8]), 105);
}
