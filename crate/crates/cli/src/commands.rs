//! Subcommand implementations.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::anyhow;
use geoeval::augment::{generate_augmented, write_tagged};
use geoeval::corpus::{
    all_toponyms, apply_exclusion_policy, load_corpus_dir, load_predictions, write_predictions, Corpus, ExclusionReason,
    GoldToponym, PredictionRecord,
};
use geoeval::gazetteer::{self, cache, FeatureClassFilter, GazetteerIndex};
use geoeval::metrics::{write_csv, EvalReport};
use geoeval::pipeline::{compare_geocoding, compare_tagging, evaluate_geocoding, evaluate_tagging, RunInfo};
use geoeval::resolver::{align_to_gazetteer, resolve_population, Lexicon, ResolverOptions};
use geoeval::stats::{make_folds, WilcoxonOptions};
use geoeval::tagger::{oracle_spans, tag_corpus, Blocklist};
use serde_json::json;

use crate::{
    AlignArgs, AugmentArgs, BaselineArgs, Cli, Command, EvalGeocodingArgs, EvalTaggingArgs, FoldsArgs, GoldArgs,
    IngestArgs, ReportArgs, ResolverArgs,
};

/// A failed run: bad input (exit 1) or a fault of our own (exit 2).
#[derive(Debug)]
pub enum Failure {
    Input(anyhow::Error),
    Internal(anyhow::Error),
}

impl Failure {
    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Input(e) | Failure::Internal(e) => e,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Internal(_) => 2,
        }
    }
}

type Outcome<T = ()> = Result<T, Failure>;

trait Classify<T> {
    fn input(self, what: impl FnOnce() -> String) -> Outcome<T>;
    fn internal(self, what: impl FnOnce() -> String) -> Outcome<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn input(self, what: impl FnOnce() -> String) -> Outcome<T> {
        self.map_err(|e| Failure::Input(e.into().context(what())))
    }

    fn internal(self, what: impl FnOnce() -> String) -> Outcome<T> {
        self.map_err(|e| Failure::Internal(e.into().context(what())))
    }
}

fn input_error(message: String) -> Failure {
    Failure::Input(anyhow!(message))
}

pub fn run(cli: &Cli) -> Outcome {
    let out = Output { quiet: cli.quiet };
    match &cli.command {
        Command::Ingest(a) => ingest(a, &out),
        Command::EvalTagging(a) => eval_tagging(a, &out),
        Command::EvalGeocoding(a) => eval_geocoding(a, &out),
        Command::Baseline(a) => baseline(a, &out),
        Command::Align(a) => align(a, &out),
        Command::Folds(a) => folds(a, &out),
        Command::Augment(a) => augment(a, &out),
    }
}

/// Standard output: a JSON document, then a human summary unless `--quiet`.
struct Output {
    quiet: bool,
}

impl Output {
    fn emit(&self, value: &serde_json::Value, summary: &str) -> Outcome {
        let mut stdout = std::io::stdout().lock();
        let text = serde_json::to_string_pretty(value).internal(|| "serialising output".into())?;
        writeln!(stdout, "{text}").internal(|| "writing to stdout".into())?;
        if !self.quiet {
            write!(stdout, "\n{summary}").internal(|| "writing to stdout".into())?;
        }
        Ok(())
    }
}

fn create(path: &Path) -> Outcome<BufWriter<File>> {
    File::create(path).map(BufWriter::new).input(|| format!("cannot create {}", path.display()))
}

fn open(path: &Path) -> Outcome<BufReader<File>> {
    File::open(path).map(BufReader::new).input(|| format!("cannot open {}", path.display()))
}

fn load_gold(args: &GoldArgs) -> Outcome<(Corpus, String)> {
    let corpus = load_corpus_dir(&args.gold, &args.brat_config())
        .input(|| format!("cannot load gold corpus {}", args.gold.display()))?;
    for (doc, issue) in &corpus.issues {
        log::warn!("{doc}.ann line {}: {}", issue.line, issue.message);
    }
    log::info!("loaded {} documents, {} toponyms", corpus.documents.len(), corpus.annotation_count());
    let dataset_id = args.dataset_id.clone().unwrap_or_else(|| {
        args.gold
            .canonicalize()
            .ok()
            .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .unwrap_or_else(|| args.gold.display().to_string())
    });
    Ok((corpus, dataset_id))
}

fn load_cache(path: &Path) -> Outcome<GazetteerIndex> {
    cache::load(path).input(|| format!("cannot load gazetteer cache {} (run `geoeval ingest` first)", path.display()))
}

fn load_pred(path: &Path) -> Outcome<Vec<PredictionRecord>> {
    let load = load_predictions(open(path)?).input(|| format!("cannot read {}", path.display()))?;
    if !load.errors.is_empty() {
        let first: Vec<String> = load.errors.iter().take(5).map(|e| format!("line {}: {}", e.line, e.message)).collect();
        return Err(input_error(format!(
            "{}: {} invalid prediction lines ({})",
            path.display(),
            load.errors.len(),
            first.join("; ")
        )));
    }
    Ok(load.records)
}

fn load_resolver(args: &ResolverArgs) -> Outcome<ResolverOptions> {
    let lexicon = match &args.lexicon {
        Some(path) => {
            let (lexicon, errors) = Lexicon::from_reader(open(path)?).input(|| format!("cannot read {}", path.display()))?;
            for e in &errors {
                log::warn!("{} line {}: {}", path.display(), e.line, e.message);
            }
            Some(lexicon)
        }
        None => None,
    };
    Ok(ResolverOptions { populated_only: args.populated_only, lexicon })
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "system".into())
}

fn warn_unknown_documents(corpus: &Corpus, pred: &[PredictionRecord], path: &Path) {
    let ids: std::collections::HashSet<&str> = corpus.documents.iter().map(|d| d.doc_id.as_str()).collect();
    let unknown = pred.iter().filter(|p| !ids.contains(p.doc_id.as_str())).count();
    if unknown > 0 {
        log::warn!("{}: {unknown} predictions refer to documents outside the gold set", path.display());
    }
}

fn write_reports(args: &ReportArgs, reports: &[EvalReport], out: &Output) -> Outcome {
    let value = json!({ "reports": reports });
    if let Some(path) = &args.out {
        let mut w = create(path)?;
        serde_json::to_writer_pretty(&mut w, &value).internal(|| "serialising report".into())?;
        writeln!(w).and_then(|_| w.flush()).input(|| format!("cannot write {}", path.display()))?;
    }
    if let Some(path) = &args.csv {
        write_csv(create(path)?, reports).input(|| format!("cannot write {}", path.display()))?;
    }
    let summary: Vec<String> = reports.iter().map(EvalReport::summary).collect();
    out.emit(&value, &summary.join("\n"))
}

fn ingest(args: &IngestArgs, out: &Output) -> Outcome {
    let filter = args
        .feature_classes
        .as_deref()
        .map(FeatureClassFilter::parse_csv)
        .transpose()
        .input(|| "invalid --feature-classes".into())?;
    let filter_label = filter.as_ref().map(ToString::to_string).unwrap_or_default();

    if !args.force && args.cache.exists() {
        if let Ok(Some(header)) = cache::read_header(&args.cache) {
            let checksum = gazetteer::dump_checksum(open(&args.dump)?)
                .input(|| format!("cannot read {}", args.dump.display()))?;
            if header.matches(&checksum, &filter_label) {
                let version = gazetteer::snapshot_version(&checksum, &filter_label);
                return out.emit(
                    &json!({ "cache_hit": true, "checksum": checksum, "gazetteer_version": version }),
                    &format!("cache {} is up to date ({version})\n", args.cache.display()),
                );
            }
        }
    }

    let (index, summary) = gazetteer::ingest(open(&args.dump)?, filter.as_ref())
        .input(|| format!("cannot ingest {}", args.dump.display()))?;
    for s in &summary.skipped {
        log::warn!("{} line {}: {}", args.dump.display(), s.line, s.reason);
    }
    cache::save(&args.cache, &index).input(|| format!("cannot write {}", args.cache.display()))?;
    let version = index.version();
    out.emit(
        &json!({
            "cache_hit": false,
            "checksum": summary.checksum,
            "gazetteer_version": version,
            "lines": summary.lines,
            "indexed": summary.indexed,
            "filtered_out": summary.filtered_out,
            "skipped": summary.skipped.len(),
        }),
        &format!(
            "indexed {} of {} lines ({} filtered out, {} skipped) into {} ({version})\n",
            summary.indexed,
            summary.lines,
            summary.filtered_out,
            summary.skipped.len(),
            args.cache.display()
        ),
    )
}

fn exclusion_note(excluded: &[geoeval::corpus::ExcludedToponym]) -> String {
    let count = |r: ExclusionReason| excluded.iter().filter(|e| e.reason == r).count();
    format!(
        "excluded {} gold toponyms ({} {}, {} {})",
        excluded.len(),
        count(ExclusionReason::NotInGazetteer),
        ExclusionReason::NotInGazetteer,
        count(ExclusionReason::NonLocationalType),
        ExclusionReason::NonLocationalType
    )
}

fn kept_gold(corpus: &Corpus, index: &GazetteerIndex) -> Vec<GoldToponym> {
    let outcome = apply_exclusion_policy(&corpus.documents, index);
    log::info!("{}", exclusion_note(&outcome.excluded));
    outcome.kept
}

fn eval_tagging(args: &EvalTaggingArgs, out: &Output) -> Outcome {
    let (corpus, dataset_id) = load_gold(&args.gold)?;
    let index = args.cache.as_deref().map(load_cache).transpose()?;
    let gold = match (&index, args.exclude) {
        (Some(index), true) => kept_gold(&corpus, index),
        _ => all_toponyms(&corpus.documents),
    };
    let gazetteer_version = index.as_ref().map(GazetteerIndex::version).unwrap_or_else(|| "none".into());
    let info = |system: &Option<String>, path: &Path| RunInfo {
        system: system.clone().unwrap_or_else(|| stem(path)),
        dataset_id: dataset_id.clone(),
        gazetteer_version: gazetteer_version.clone(),
    };

    let pred = load_pred(&args.pred)?;
    warn_unknown_documents(&corpus, &pred, &args.pred);
    let a = evaluate_tagging(&info(&args.report.system, &args.pred), &gold, &pred, args.mode);
    let mut reports = vec![a.report.clone()];

    if let Some(path_b) = &args.pred_b {
        let pred_b = load_pred(path_b)?;
        warn_unknown_documents(&corpus, &pred_b, path_b);
        let b = evaluate_tagging(&info(&args.report.system_b, path_b), &gold, &pred_b, args.mode);
        let test = compare_tagging(gold.len(), &a.matching, &b.matching, !args.no_continuity_correction)
            .internal(|| "McNemar's test".into())?
            .to_report("mcnemar");
        reports.push(b.report);
        for r in &mut reports {
            r.significance.push(test.clone());
        }
    }
    write_reports(&args.report, &reports, out)
}

fn eval_geocoding(args: &EvalGeocodingArgs, out: &Output) -> Outcome {
    if let Some(bad) = args.thresholds.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(input_error(format!("invalid threshold {bad}")));
    }
    let (corpus, dataset_id) = load_gold(&args.gold)?;
    let index = load_cache(&args.cache)?;
    let outcome = apply_exclusion_policy(&corpus.documents, &index);
    let note = exclusion_note(&outcome.excluded);
    log::info!("{note}");
    let gold = outcome.kept;
    let info = |system: &Option<String>, path: &Path| RunInfo {
        system: system.clone().unwrap_or_else(|| stem(path)),
        dataset_id: dataset_id.clone(),
        gazetteer_version: index.version(),
    };

    let pred = load_pred(&args.pred)?;
    warn_unknown_documents(&corpus, &pred, &args.pred);
    let a = evaluate_geocoding(&info(&args.report.system, &args.pred), &gold, &pred, args.mode, &args.thresholds);
    let mut reports = vec![a.report.clone()];

    if let Some(path_b) = &args.pred_b {
        let pred_b = load_pred(path_b)?;
        warn_unknown_documents(&corpus, &pred_b, path_b);
        let b = evaluate_geocoding(&info(&args.report.system_b, path_b), &gold, &pred_b, args.mode, &args.thresholds);
        let options = WilcoxonOptions { tie_correction: !args.no_tie_correction };
        let (result, paired) =
            compare_geocoding(&a.errors, &b.errors, options).internal(|| "Wilcoxon signed-rank test".into())?;
        let mut test = result.to_report("wilcoxon_signed_rank");
        test.notes.push(format!("{paired} toponyms resolved by both systems"));
        reports.push(b.report);
        for r in &mut reports {
            r.significance.push(test.clone());
        }
    }
    write_reports(&args.report, &reports, out)
}

fn baseline(args: &BaselineArgs, out: &Output) -> Outcome {
    let (corpus, _) = load_gold(&args.gold)?;
    let index = load_cache(&args.cache)?;
    let options = load_resolver(&args.resolver)?;
    let spans = if args.oracle_ner {
        oracle_spans(&kept_gold(&corpus, &index))
    } else {
        let blocklist = match (&args.blocklist, args.no_blocklist) {
            (_, true) => Blocklist::empty(),
            (Some(path), false) => {
                Blocklist::from_reader(open(path)?).input(|| format!("cannot read {}", path.display()))?
            }
            (None, false) => Blocklist::default_english(),
        };
        tag_corpus(&corpus.documents, &index, &blocklist, args.max_ngram)
    };
    let resolution = resolve_population(&spans, &index, &options);
    write_predictions(create(&args.out)?, &resolution.records)
        .input(|| format!("cannot write {}", args.out.display()))?;
    let (total, resolved) = (resolution.records.len(), resolution.resolved_count());
    out.emit(
        &json!({
            "predictions": total,
            "resolved": resolved,
            "unresolved": resolution.unresolved.len(),
            "gazetteer_version": index.version(),
        }),
        &format!("wrote {total} predictions ({resolved} resolved) to {}\n", args.out.display()),
    )
}

fn align(args: &AlignArgs, out: &Output) -> Outcome {
    let index = load_cache(&args.cache)?;
    let options = load_resolver(&args.resolver)?;
    let pred = load_pred(&args.pred)?;
    let alignment = align_to_gazetteer(&pred, &index, &options);
    write_predictions(create(&args.out)?, &alignment.records)
        .input(|| format!("cannot write {}", args.out.display()))?;
    let aligned = alignment.records.len() - alignment.flagged.len();
    out.emit(
        &json!({
            "predictions": alignment.records.len(),
            "aligned": aligned,
            "unchanged": alignment.flagged.len(),
            "gazetteer_version": index.version(),
        }),
        &format!(
            "aligned {aligned} of {} predictions; {} passed through unchanged\n",
            alignment.records.len(),
            alignment.flagged.len()
        ),
    )
}

fn folds(args: &FoldsArgs, out: &Output) -> Outcome {
    let (corpus, _) = load_gold(&args.gold)?;
    let plan = make_folds(&corpus.doc_ids(), args.k, args.seed).input(|| "cannot build folds".into())?;
    let mut w = create(&args.out)?;
    serde_json::to_writer_pretty(&mut w, &plan).internal(|| "serialising fold plan".into())?;
    writeln!(w).and_then(|_| w.flush()).input(|| format!("cannot write {}", args.out.display()))?;
    let sizes: Vec<usize> = plan.folds.iter().map(Vec::len).collect();
    out.emit(
        &json!({ "k": plan.k, "seed": plan.seed, "fold_sizes": sizes }),
        &format!("{} folds of sizes {:?} written to {}\n", plan.k, sizes, args.out.display()),
    )
}

fn augment(args: &AugmentArgs, out: &Output) -> Outcome {
    let (corpus, _) = load_gold(&args.gold)?;
    let result = generate_augmented(&corpus.documents, args.max_per_source, args.seed);
    for w in &result.warnings {
        log::warn!("{w}");
    }
    write_tagged(create(&args.out)?, &result.sentences).input(|| format!("cannot write {}", args.out.display()))?;
    out.emit(
        &json!({ "sentences": result.sentences.len(), "warnings": result.warnings.len() }),
        &format!(
            "wrote {} augmented sentences to {} ({} skipped expressions)\n",
            result.sentences.len(),
            args.out.display(),
            result.warnings.len()
        ),
    )
}
