use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

struct Place {
    id: u64,
    name: &'static str,
    lat: f64,
    lon: f64,
    population: u64,
}

const PLACES: &[Place] = &[
    Place { id: 2988507, name: "Paris", lat: 48.85341, lon: 2.3488, population: 2_138_551 },
    Place { id: 4717560, name: "Paris", lat: 33.66094, lon: -95.55551, population: 24_782 },
    Place { id: 2643743, name: "London", lat: 51.50853, lon: -0.12574, population: 8_961_989 },
    Place { id: 184745, name: "Nairobi", lat: -1.28333, lon: 36.81667, population: 2_750_547 },
    Place { id: 2158177, name: "Melbourne", lat: -37.814, lon: 144.96332, population: 4_917_750 },
    Place { id: 4163971, name: "Melbourne", lat: 28.08363, lon: -80.60811, population: 83_029 },
    Place { id: 524901, name: "Moscow", lat: 55.75222, lon: 37.61556, population: 10_381_222 },
    Place { id: 2797656, name: "Ghent", lat: 51.05, lon: 3.71667, population: 231_493 },
];

fn place(id: u64) -> &'static Place {
    PLACES.iter().find(|p| p.id == id).unwrap()
}

fn dump_line(p: &Place) -> String {
    format!(
        "{}\t{}\t{}\t\t{}\t{}\tP\tPPL\tXX\t\t\t\t\t\t{}\t\t0\tUTC\t2024-01-01\n",
        p.id, p.name, p.name, p.lat, p.lon, p.population
    )
}

/// (doc id, text, [(surface, type, geonames id)], [(surface, expression label, role)])
type Doc = (&'static str, &'static str, Vec<(&'static str, &'static str, Option<u64>)>, Vec<(&'static str, &'static str, &'static str)>);

fn documents() -> Vec<Doc> {
    vec![
        ("d1", "Floods hit Paris and London yesterday.", vec![("Paris", "Literal", Some(2988507)), ("London", "Literal", Some(2643743))], vec![]),
        (
            "d2",
            "Nairobi signed the deal with Melbourne.",
            vec![("Nairobi", "Metonymy", Some(184745)), ("Melbourne", "Literal", Some(4163971))],
            vec![],
        ),
        (
            "d3",
            "Russian troops entered Ghent, not Atlantis.",
            vec![("Russian", "Demonym", Some(524901)), ("Ghent", "Literal", Some(2797656)), ("Atlantis", "Literal", None)],
            vec![],
        ),
        ("d4", "They spoke French at home.", vec![("French", "Language", None)], vec![]),
        (
            "d5",
            "Paris, London, Nairobi and Ghent.",
            vec![
                ("Paris", "Literal", Some(2988507)),
                ("London", "Literal", Some(2643743)),
                ("Nairobi", "Literal", Some(184745)),
                ("Ghent", "Literal", Some(2797656)),
            ],
            vec![],
        ),
        (
            "d6",
            "The new school opened in the city yesterday.",
            vec![],
            vec![("the city", "Literal_Expression", "Context")],
        ),
    ]
}

/// Gold toponyms kept by the exclusion policy: (doc, start, end, surface, geonames id).
fn kept() -> Vec<(&'static str, usize, usize, &'static str, u64)> {
    documents()
        .into_iter()
        .flat_map(|(doc, text, toponyms, _)| {
            toponyms.into_iter().filter_map(move |(surface, _, id)| {
                let start = text.find(surface).unwrap();
                id.map(|id| (doc, start, start + surface.len(), surface, id))
            })
        })
        .collect()
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let gold = dir.path().join("gold");
        std::fs::create_dir(&gold).unwrap();
        for (doc, text, toponyms, expressions) in documents() {
            let mut ann = String::new();
            let mut t = 0;
            for (n, (surface, label, id)) in toponyms.iter().enumerate() {
                t += 1;
                let start = text.find(surface).unwrap();
                ann += &format!("T{t}\t{label} {start} {}\t{surface}\n", start + surface.len());
                if let Some(id) = id {
                    ann += &format!("N{}\tReference T{t} Geonames:{id}\t{surface}\n", n + 1);
                }
            }
            for (n, (surface, label, role)) in expressions.iter().enumerate() {
                t += 1;
                let start = text.find(surface).unwrap();
                ann += &format!("T{t}\t{label} {start} {}\t{surface}\n", start + surface.len());
                ann += &format!("A{}\trole T{t} {role}\n", n + 1);
            }
            std::fs::write(gold.join(format!("{doc}.txt")), text).unwrap();
            std::fs::write(gold.join(format!("{doc}.ann")), ann).unwrap();
        }
        let dump: String = PLACES.iter().map(dump_line).collect();
        std::fs::write(dir.path().join("dump.tsv"), dump).unwrap();
        let f = Fixture { dir };
        let out = f.run(&["ingest", "--dump", &f.arg("dump.tsv"), "--cache", &f.arg("gaz.idx")]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        f
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn arg(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_geoeval")).args(args).current_dir(self.dir.path()).output().unwrap()
    }

    fn run_ok(&self, args: &[&str]) -> Value {
        let mut full = vec!["--quiet"];
        full.extend_from_slice(args);
        let out = self.run(&full);
        assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
        serde_json::from_slice(&out.stdout).expect("stdout is JSON under --quiet")
    }

    /// Prediction file from (doc, start, end, surface, optional coordinate).
    fn predictions(&self, name: &str, records: &[(&str, usize, usize, &str, Option<(f64, f64)>)]) -> String {
        let lines: String = records
            .iter()
            .map(|(doc, start, end, surface, coord)| {
                let (lat, lon) = coord.map_or(("null".into(), "null".into()), |(a, b)| (a.to_string(), b.to_string()));
                format!(
                    "{{\"doc_id\":\"{doc}\",\"start\":{start},\"end\":{end},\"surface\":\"{surface}\",\"label\":\"Location\",\"lat\":{lat},\"lon\":{lon}}}\n"
                )
            })
            .collect();
        std::fs::write(self.path(name), lines).unwrap();
        self.arg(name)
    }

    fn gold_predictions(&self, name: &str, with_coord: impl Fn(usize) -> bool) -> String {
        let records: Vec<_> = kept()
            .into_iter()
            .enumerate()
            .map(|(i, (doc, s, e, surface, id))| {
                let p = place(id);
                (doc, s, e, surface, with_coord(i).then_some((p.lat, p.lon)))
            })
            .collect();
        self.predictions(name, &records)
    }
}

fn report(v: &Value, i: usize) -> &Value {
    &v["reports"][i]
}

#[test]
fn ingest_counts_skips_and_reuses_cache() {
    let f = Fixture::new();
    let mut dump: String = PLACES.iter().map(dump_line).collect();
    dump += "garbage line without tabs\n";
    std::fs::write(f.path("dump2.tsv"), &dump).unwrap();
    let args = ["ingest", "--dump", &f.arg("dump2.tsv"), "--cache", &f.arg("g2.idx")];
    let first = f.run_ok(&args);
    assert_eq!(first["cache_hit"], false);
    assert_eq!(first["indexed"], PLACES.len());
    assert_eq!(first["skipped"], 1);
    let second = f.run_ok(&args);
    assert_eq!(second["cache_hit"], true);
    assert_eq!(second["gazetteer_version"], first["gazetteer_version"]);

    let filtered = f.run_ok(&["ingest", "--dump", &f.arg("dump2.tsv"), "--cache", &f.arg("g2.idx"), "--feature-classes", "A"]);
    assert_eq!(filtered["cache_hit"], false);
    assert_eq!(filtered["filtered_out"], PLACES.len());
}

#[test]
fn tagging_oracle_empty_and_mcnemar() {
    let f = Fixture::new();
    let gold = f.arg("gold");
    let oracle = f.gold_predictions("oracle.jsonl", |_| false);
    let v = f.run_ok(&["eval-tagging", "--gold", &gold, "--pred", &oracle, "--exclude", "--cache", &f.arg("gaz.idx")]);
    let t = &report(&v, 0)["tagging"];
    assert_eq!(t["f_score"], 1.0);
    assert_eq!(report(&v, 0)["dataset_id"], "gold");
    assert!(report(&v, 0)["gazetteer_version"].as_str().unwrap().starts_with("geonames-sha256:"));

    let empty = f.predictions("empty.jsonl", &[]);
    let v = f.run_ok(&["eval-tagging", "--gold", &gold, "--pred", &empty]);
    assert_eq!(report(&v, 0)["tagging"]["recall"], 0.0);

    let v = f.run_ok(&[
        "eval-tagging", "--gold", &gold, "--pred", &oracle, "--pred-b", &empty, "--exclude", "--cache", &f.arg("gaz.idx"),
        "--no-continuity-correction", "--csv", &f.arg("t.csv"),
    ]);
    let test = &report(&v, 0)["significance"][0];
    assert_eq!(test["test"], "mcnemar");
    assert_eq!(test["n"], 10);
    assert_eq!(test["statistic"], 10.0);
    assert!(test["p_value"].as_f64().unwrap() < 0.01);
    let csv = std::fs::read_to_string(f.path("t.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn overlap_mode_credits_partial_spans() {
    let f = Fixture::new();
    let shifted: Vec<_> = kept().into_iter().map(|(d, s, e, surface, _)| (d, s + 1, e, surface, None)).collect();
    let pred = f.predictions("shifted.jsonl", &shifted);
    let args = ["eval-tagging", "--gold", &f.arg("gold"), "--pred", &pred, "--exclude", "--cache", &f.arg("gaz.idx")];
    assert_eq!(report(&f.run_ok(&args), 0)["tagging"]["tp"], 0);
    let mut overlap = args.to_vec();
    overlap.extend(["--mode", "overlap"]);
    assert_eq!(report(&f.run_ok(&overlap), 0)["tagging"]["tp"], 10);
}

#[test]
fn geocoding_perfect_wilcoxon_and_warning() {
    let f = Fixture::new();
    let gold = f.arg("gold");
    let cache = f.arg("gaz.idx");
    let perfect = f.gold_predictions("perfect.jsonl", |_| true);
    let v = f.run_ok(&["eval-geocoding", "--gold", &gold, "--pred", &perfect, "--cache", &cache, "--thresholds", "161,1000"]);
    let g = &report(&v, 0)["geocoding"];
    assert_eq!(g["mean_error_km"], 0.0);
    assert_eq!(g["auc"], 0.0);
    assert_eq!(g["accuracy_at_km"]["161"], 1.0);
    assert_eq!(g["accuracy_at_km"]["1000"], 1.0);
    assert_eq!(report(&v, 0)["n_gold"], 10);
    assert_eq!(report(&v, 0)["warnings"].as_array().unwrap().len(), 0);

    let off: Vec<_> = kept()
        .into_iter()
        .map(|(d, s, e, surface, id)| {
            let p = place(id);
            (d, s, e, surface, Some((p.lat + 1.0, p.lon)))
        })
        .collect();
    let off = f.predictions("off.jsonl", &off);
    let v = f.run_ok(&["eval-geocoding", "--gold", &gold, "--pred", &off, "--pred-b", &perfect, "--cache", &cache]);
    let test = &report(&v, 0)["significance"][0];
    assert_eq!(test["test"], "wilcoxon_signed_rank");
    assert!(test["statistic"].as_f64().unwrap() > 0.0);
    assert_eq!(test["n"], 10);

    let partial = f.gold_predictions("partial.jsonl", |i| i < 4);
    let v = f.run_ok(&["eval-geocoding", "--gold", &gold, "--pred", &partial, "--cache", &cache]);
    assert_eq!(report(&v, 0)["n_resolved"], 4);
    let warnings = report(&v, 0)["warnings"].as_array().unwrap();
    assert!(warnings.iter().any(|w| w.as_str().unwrap().contains("40.0%")));
}

fn read_predictions(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn baselines_and_lexicon() {
    let f = Fixture::new();
    let gold = f.arg("gold");
    let cache = f.arg("gaz.idx");
    let v = f.run_ok(&["baseline", "--gold", &gold, "--cache", &cache, "--oracle-ner", "--out", &f.arg("oracle.jsonl")]);
    assert_eq!(v["predictions"], 10);
    // Everything but the demonym resolves without a lexicon.
    assert_eq!(v["resolved"], 9);
    let records = read_predictions(&f.path("oracle.jsonl"));
    let melbourne = records.iter().find(|r| r["surface"] == "Melbourne").unwrap();
    assert_eq!(melbourne["lat"], -37.814);

    std::fs::write(f.path("lexicon.tsv"), "Russian\tMoscow\n").unwrap();
    let v = f.run_ok(&[
        "baseline", "--gold", &gold, "--cache", &cache, "--oracle-ner", "--lexicon", &f.arg("lexicon.tsv"), "--out",
        &f.arg("oracle_lex.jsonl"),
    ]);
    assert_eq!(v["resolved"], 10);

    let v = f.run_ok(&["baseline", "--gold", &gold, "--cache", &cache, "--dictionary-ner", "--out", &f.arg("dict.jsonl")]);
    let n = v["predictions"].as_u64().unwrap();
    assert!(n > 0 && n <= 10);

    let v = f.run_ok(&[
        "eval-geocoding", "--gold", &gold, "--pred", &f.arg("oracle_lex.jsonl"), "--cache", &cache,
    ]);
    let g = &report(&v, 0)["geocoding"];
    // Only the Florida Melbourne is misresolved.
    assert_eq!(g["accuracy_at_km"]["161"], 0.9);
    assert!(g["mean_error_km"].as_f64().unwrap() > 1000.0);

    let out = f.run(&["baseline", "--gold", &gold, "--cache", &cache, "--out", &f.arg("x.jsonl")]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn align_snaps_to_nearest_candidate() {
    let f = Fixture::new();
    let pred = f.predictions(
        "foreign.jsonl",
        &[("d1", 11, 16, "Paris", Some((33.7, -95.5))), ("d1", 21, 27, "London", None), ("x", 0, 8, "Atlantis", Some((0.0, 0.0)))],
    );
    let v = f.run_ok(&["align", "--pred", &pred, "--cache", &f.arg("gaz.idx"), "--out", &f.arg("aligned.jsonl")]);
    assert_eq!((v["aligned"].as_u64(), v["unchanged"].as_u64()), (Some(1), Some(2)));
    let records = read_predictions(&f.path("aligned.jsonl"));
    assert_eq!((records[0]["lat"].as_f64(), records[0]["lon"].as_f64()), (Some(33.66094), Some(-95.55551)));
    assert_eq!(records[2]["lat"], 0.0);
}

#[test]
fn folds_are_deterministic() {
    let f = Fixture::new();
    let run = |out: &str, seed: &str| {
        f.run_ok(&["folds", "--gold", &f.arg("gold"), "--k", "3", "--seed", seed, "--out", &f.arg(out)]);
        std::fs::read_to_string(f.path(out)).unwrap()
    };
    let a = run("a.json", "11");
    assert_eq!(a, run("b.json", "11"));
    let plan: Value = serde_json::from_str(&a).unwrap();
    let sizes: Vec<usize> = plan["folds"].as_array().unwrap().iter().map(|f| f.as_array().unwrap().len()).collect();
    assert_eq!(sizes, [2, 2, 2]);
    let out = f.run(&["folds", "--gold", &f.arg("gold"), "--k", "9", "--seed", "1", "--out", &f.arg("c.json")]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn augment_writes_tagged_sentences() {
    let f = Fixture::new();
    let v = f.run_ok(&[
        "augment", "--gold", &f.arg("gold"), "--max-per-source", "3", "--seed", "5", "--out", &f.arg("aug.tsv"),
    ]);
    assert_eq!(v["sentences"], 3);
    let text = std::fs::read_to_string(f.path("aug.tsv")).unwrap();
    assert_eq!(text.split("\n\n").filter(|s| !s.is_empty()).count(), 3);
    assert!(text.lines().any(|l| l.ends_with("\tB-Literal")));
    assert!(!text.contains("Associative"));
}

#[test]
fn config_supplies_defaults_and_flags_override() {
    let f = Fixture::new();
    let perfect = f.gold_predictions("perfect.jsonl", |_| true);
    std::fs::write(
        f.path("geoeval.toml"),
        format!("cache = {:?}\n[eval-geocoding]\nthresholds = [10, 20]\n", f.arg("gaz.idx")),
    )
    .unwrap();
    let base = ["--config", "geoeval.toml", "eval-geocoding", "--gold", "gold", "--pred", perfect.as_str()];
    let v = f.run_ok(&base);
    let acc = report(&v, 0)["geocoding"]["accuracy_at_km"].as_object().unwrap().clone();
    assert_eq!(acc.keys().collect::<Vec<_>>(), ["10", "20"]);

    let mut overridden = base.to_vec();
    overridden.extend(["--thresholds", "161"]);
    let v = f.run_ok(&overridden);
    let acc = report(&v, 0)["geocoding"]["accuracy_at_km"].as_object().unwrap().clone();
    assert_eq!(acc.keys().collect::<Vec<_>>(), ["161"]);
}

#[test]
fn exit_codes() {
    let f = Fixture::new();
    assert_eq!(f.run(&["--help"]).status.code(), Some(0));
    assert_eq!(f.run(&["eval-tagging"]).status.code(), Some(1));
    let out = f.run(&["eval-tagging", "--gold", &f.arg("missing"), "--pred", &f.arg("x.jsonl")]);
    assert_eq!(out.status.code(), Some(1));
    std::fs::write(f.path("bad.jsonl"), "not json\n").unwrap();
    let out = f.run(&["eval-tagging", "--gold", &f.arg("gold"), "--pred", &f.arg("bad.jsonl")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
    let out = f.run(&["eval-geocoding", "--gold", &f.arg("gold"), "--pred", &f.arg("bad.jsonl"), "--cache", &f.arg("dump.tsv")]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn human_summary_follows_json() {
    let f = Fixture::new();
    let perfect = f.gold_predictions("perfect.jsonl", |_| true);
    let out = f.run(&["eval-geocoding", "--gold", &f.arg("gold"), "--pred", &perfect, "--cache", &f.arg("gaz.idx"), "--out", &f.arg("r.json")]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("acc@161 100.0"));
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(f.path("r.json")).unwrap()).unwrap();
    assert_eq!(report(&saved, 0)["geocoding"]["auc"], 0.0);
}
