use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use ruag_core::classifiers::{
    load_model, save_model, train_bow_lr, train_ngram_linear, IntentClassifier, IrModel, RandomGuess, SavedModel,
};
use ruag_core::dataset::{import_csv, Dataset, LabeledUtterance, NEEDS_REVIEW, STATUS_COLUMN};
use ruag_core::evaluation::mining::read_corpus;
use ruag_core::evaluation::{
    build_probe_set, evaluate, mine_negatives_with, probe_recall, report_row, Aggregation, MiningMethod,
    Probe, REPORT_HEADER,
};
use ruag_core::generation::{default_max_attempts, sample};
use ruag_core::guard::{guard_batch, DisclosureConfig};
use ruag_core::partition::{emit_split_datasets, partition, PartitionedGrammar};
use ruag_core::recognizer::RecognizerModel;
use ruag_core::{seed, shipped, Grammar, GrammarSplit, Label, Split};

use crate::config::RunConfig;
use crate::{
    Agg, ClassifierArgs, Cli, Command, EvalArgs, GenArgs, GuardArgs, ImportArgs, Method, MineArgs, ModelKind,
    ProbeArgs, SplitArgs, TrainArgs,
};

struct Ctx {
    cfg: RunConfig,
    seed: u64,
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = RunConfig::load(cli.config.as_deref())?;
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    let ctx = Ctx { cfg, seed };
    match cli.command {
        Command::Gen(a) => gen(&ctx, a),
        Command::Split(a) => split(&ctx, a),
        Command::Train(a) => train(&ctx, a),
        Command::Eval(a) => eval(&ctx, a),
        Command::Mine(a) => mine(&ctx, a),
        Command::Guard(a) => guard(&ctx, a),
        Command::Probe(a) => probe(&ctx, a),
        Command::Import(a) => import(a),
    }
}

fn load_grammar(spec: &str) -> Result<Grammar> {
    if let Some(name) = spec.strip_prefix("shipped:") {
        return shipped::grammar(name).ok_or_else(|| anyhow!("no shipped grammar named {name:?}"));
    }
    let text = fs::read_to_string(spec).with_context(|| format!("reading grammar {spec}"))?;
    text.parse().with_context(|| format!("in grammar {spec}"))
}

impl Ctx {
    fn grammar(&self, flag: Option<&str>, configured: Option<&String>, shipped_default: &str) -> Result<Grammar> {
        let spec = match (flag, configured) {
            (Some(f), _) => f.to_string(),
            (None, Some(c)) => self.cfg.resolve_grammar(c),
            (None, None) => format!("shipped:{shipped_default}"),
        };
        load_grammar(&spec)
    }

    fn dataset_path(&self, flag: Option<&Path>) -> Result<PathBuf> {
        self.cfg.path_or(flag, self.cfg.paths.dataset.as_ref(), "dataset.tsv", "dataset")
    }

    fn model_path(&self, flag: Option<&Path>) -> Result<PathBuf> {
        self.cfg.path_or(flag, self.cfg.paths.model.as_ref(), "model.bin", "model")
    }

    fn classifier(&self, a: &ClassifierArgs) -> Result<Loaded> {
        if a.recognizer {
            let pos = self.grammar(a.pos_grammar.as_deref(), self.cfg.paths.pos_grammar.as_ref(), "pos")?;
            let aic = self.grammar(a.aic_grammar.as_deref(), self.cfg.paths.aic_grammar.as_ref(), "aic")?;
            return Ok(Loaded::Recognizer(RecognizerModel::new(&pos, &aic, !a.no_heuristics)));
        }
        let path = self.model_path(a.model.as_deref())?;
        let m = load_model(&path).with_context(|| format!("loading model {}", path.display()))?;
        Ok(Loaded::Saved(m))
    }
}

enum Loaded {
    Saved(SavedModel),
    Recognizer(RecognizerModel),
}

impl Loaded {
    fn get(&self) -> &dyn IntentClassifier {
        match self {
            Loaded::Saved(m) => m.classifier(),
            Loaded::Recognizer(r) => r,
        }
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => io::stdout().lock().write_all(text.as_bytes()).context("writing to stdout"),
    }
}

fn read_dataset(path: &Path, reviewed: bool) -> Result<Dataset> {
    let d = Dataset::read(path).with_context(|| format!("reading dataset {}", path.display()))?;
    let pending = d.unreviewed().count();
    if pending > 0 && !reviewed {
        bail!(
            "{} has {pending} rows marked {NEEDS_REVIEW}; check them and pass --reviewed to use them",
            path.display()
        );
    }
    Ok(d)
}

fn gen(ctx: &Ctx, a: GenArgs) -> Result<()> {
    let configured = match a.label {
        Label::Aic => ctx.cfg.paths.aic_grammar.as_ref(),
        _ => ctx.cfg.paths.pos_grammar.as_ref(),
    };
    let default = match a.label {
        Label::Pos => "pos",
        Label::Aic => "aic",
        Label::Neg => "neg",
    };
    let g = ctx.grammar(a.grammar.as_deref(), configured, default)?;
    let n = a.n as usize;
    let batch = sample(
        &g,
        n,
        seed::derive(ctx.seed, "gen"),
        !a.no_dedup,
        a.max_attempts.unwrap_or_else(|| default_max_attempts(n)),
    )?;
    let rows = batch.utterances.into_iter().map(|t| LabeledUtterance::new(t, a.label, a.split, "grammar")).collect();
    write_output(a.out.as_deref(), &Dataset::new(rows).to_tsv()?)
}

fn triple<T: Copy>(v: &[T], flag: &str) -> Result<[T; 3]> {
    <[T; 3]>::try_from(v).map_err(|_| anyhow!("{flag} takes three comma-separated values (train,val,test)"))
}

fn split(ctx: &Ctx, a: SplitArgs) -> Result<()> {
    let g = ctx.grammar(a.grammar.as_deref(), ctx.cfg.paths.pos_grammar.as_ref(), "pos")?;
    let pg = match &a.manifest {
        Some(m) => {
            let text = fs::read_to_string(m).with_context(|| format!("reading manifest {}", m.display()))?;
            PartitionedGrammar::from_manifest(&g, &text).with_context(|| format!("in manifest {}", m.display()))?
        }
        None => {
            let mut cfg = ctx.cfg.partition_config();
            cfg.p = a.p.unwrap_or(cfg.p);
            if let Some(f) = &a.fractions {
                cfg.split_fractions = triple(f, "--fractions")?;
            }
            cfg.min_alternatives_to_split = a.min_alternatives.unwrap_or(cfg.min_alternatives_to_split);
            cfg.seed = seed::derive(ctx.seed, "partition");
            partition(&g, &cfg)?
        }
    };
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    for s in GrammarSplit::ALL {
        let path = a.out_dir.join(format!("{s}.cfg"));
        fs::write(&path, pg.grammar(s).to_dsl()).with_context(|| format!("writing {}", path.display()))?;
    }
    if a.manifest.is_none() {
        fs::write(a.out_dir.join("manifest.tsv"), pg.to_manifest()).context("writing manifest")?;
    }
    if let Some(counts) = &a.emit {
        let samples = emit_split_datasets(&pg, triple(counts, "--emit")?, seed::derive(ctx.seed, "emit"))?;
        let rows = samples
            .into_iter()
            .flat_map(|s| {
                let split = s.split.into();
                s.batch.utterances.into_iter().map(move |t| LabeledUtterance::new(t, a.label, split, "grammar"))
            })
            .collect();
        Dataset::new(rows).write(&a.out_dir.join("dataset.tsv"))?;
    }
    for s in GrammarSplit::ALL {
        let g = pg.grammar(s);
        println!("{s}\trules={}\tderivations={}", g.len(), g.count_derivations());
    }
    Ok(())
}

fn train(ctx: &Ctx, a: TrainArgs) -> Result<()> {
    let path = ctx.dataset_path(a.dataset.as_deref())?;
    let d = read_dataset(&path, a.reviewed)?;
    let rows: Vec<&LabeledUtterance> = d.split(Split::Train).collect();
    if rows.is_empty() {
        bail!("{} has no train rows", path.display());
    }
    let kind_seed = |k: &str| seed::derive(ctx.seed, &format!("train/{k}"));
    let model = match a.kind {
        ModelKind::Bowlr => SavedModel::BowLr(train_bow_lr(&rows, &ctx.cfg.bowlr_params(), kind_seed("bowlr"))?),
        ModelKind::Ngram => SavedModel::Ngram(train_ngram_linear(&rows, &ctx.cfg.ngram_params(), kind_seed("ngram"))?),
        ModelKind::Ir => SavedModel::Ir(IrModel::train(&rows)?),
        ModelKind::Random => SavedModel::Random(RandomGuess::train(&rows, kind_seed("random"))?),
    };
    let out = ctx.model_path(a.out.as_deref())?;
    save_model(&model, &out).with_context(|| format!("writing model {}", out.display()))?;
    eprintln!("trained {} on {} rows -> {}", model.kind(), rows.len(), out.display());
    Ok(())
}

fn eval(ctx: &Ctx, a: EvalArgs) -> Result<()> {
    let model = ctx.classifier(&a.classifier)?;
    let path = ctx.dataset_path(a.dataset.as_deref())?;
    let d = read_dataset(&path, a.reviewed)?;
    let mut report = format!("{REPORT_HEADER}\n");
    let mut audit = String::new();
    for &s in &a.split {
        let rows: Vec<LabeledUtterance> = d.split(s).cloned().collect();
        if rows.is_empty() {
            bail!("{} has no {s} rows", path.display());
        }
        let e = evaluate(model.get(), &rows).with_context(|| format!("evaluating the {s} split"))?;
        if e.report.vacuous_precision {
            log::warn!("{s}: no POS predictions, P_w reported as 100");
        }
        report.push_str(&report_row(model.get().id(), s.as_str(), &e.report));
        report.push('\n');
        audit.push_str(&e.audit_jsonl());
    }
    print!("{report}");
    let report_path = a.report.or_else(|| ctx.cfg.paths.report.as_ref().map(|p| ctx.cfg.resolve(p)));
    if let Some(p) = report_path {
        fs::write(&p, &report).with_context(|| format!("writing {}", p.display()))?;
    }
    if let Some(p) = a.audit {
        fs::write(&p, audit).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn mine(ctx: &Ctx, a: MineArgs) -> Result<()> {
    let mut corpus = Vec::new();
    for p in &a.corpus {
        corpus.extend(read_corpus(p).with_context(|| format!("reading corpus {}", p.display()))?);
    }
    let method = match a.method {
        Method::Random => MiningMethod::Random,
        Method::Tfidf => MiningMethod::TfidfWeighted,
    };
    let positives_ds = match (method, &a.positives) {
        (MiningMethod::Random, None) => None,
        (_, p) => Some(read_dataset(&ctx.dataset_path(p.as_deref())?, true)?),
    };
    let positives: Vec<&str> = positives_ds
        .iter()
        .flat_map(|d| d.rows.iter().filter(|r| r.label == Label::Pos).map(|r| r.text.as_str()))
        .collect();
    let agg = match a.aggregation {
        Agg::Max => Aggregation::Max,
        Agg::Mean => Aggregation::Mean,
        Agg::Sum => Aggregation::Sum,
    };
    let mined = mine_negatives_with(&corpus, &positives, a.n, method, agg, seed::derive(ctx.seed, "mine"))?;
    let mut d = Dataset { extra_columns: vec!["score".into(), STATUS_COLUMN.into()], rows: Vec::new() };
    for u in mined.utterances {
        let mut row = LabeledUtterance::new(u.text, Label::Neg, a.split, u.source);
        row.extra = vec![u.score.map(|s| format!("{s:.6}")).unwrap_or_default(), NEEDS_REVIEW.into()];
        d.rows.push(row);
    }
    write_output(a.out.as_deref(), &d.to_tsv()?)
}

fn disclosure(ctx: &Ctx, a: &GuardArgs) -> Result<DisclosureConfig> {
    if let Some(p) = &a.guard_config {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        return DisclosureConfig::parse(&text).with_context(|| format!("in {}", p.display()));
    }
    if let Some(name) = &a.preset {
        return Ok(DisclosureConfig::preset(name)?);
    }
    if let Some(p) = &ctx.cfg.guard.config {
        let p = ctx.cfg.resolve(p);
        let text = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
        return DisclosureConfig::parse(&text).with_context(|| format!("in {}", p.display()));
    }
    Ok(DisclosureConfig::preset(ctx.cfg.guard.preset.as_deref().unwrap_or("cc"))?)
}

fn guard(ctx: &Ctx, a: GuardArgs) -> Result<()> {
    let cfg = disclosure(ctx, &a)?;
    let model = ctx.classifier(&a.classifier)?;
    let lines: Vec<String> = if a.text.is_empty() {
        io::stdin().lock().lines().collect::<io::Result<_>>().context("reading stdin")?
    } else {
        a.text.clone()
    };
    let texts: Vec<&str> = lines.iter().map(String::as_str).collect();
    let mut out = io::stdout().lock();
    for d in guard_batch(&texts, model.get(), &cfg)? {
        writeln!(out, "{}", serde_json::to_string(&d)?)?;
    }
    Ok(())
}

fn read_lines(p: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_string).collect())
}

fn probe(ctx: &Ctx, a: ProbeArgs) -> Result<()> {
    let model = ctx.classifier(&a.classifier)?;
    let probes: Vec<Probe> = match (&a.probes, &a.crowd) {
        (Some(p), _) => read_lines(p)?.into_iter().map(|text| Probe { text, source: "file".into() }).collect(),
        (None, Some(c)) => {
            let crowd = read_lines(c)?;
            let crowd: Vec<&str> = crowd.iter().map(String::as_str).collect();
            let g = ctx.grammar(a.grammar.as_deref(), ctx.cfg.paths.pos_grammar.as_ref(), "pos")?;
            build_probe_set(&crowd, &g, a.n.unwrap_or(100), seed::derive(ctx.seed, "probe"))?
        }
        (None, None) => bail!("pass --probes, or --crowd to build a probe set"),
    };
    let r = probe_recall(model.get(), &probes)?;
    println!("probe recall: {:.3} ({}/{})", r.recall, r.detected, r.total);
    if let Some(out) = &a.out {
        let mut tsv = String::from("text\tsource\tpredicted\tdetected\n");
        for v in &r.verdicts {
            tsv.push_str(&format!("{}\t{}\t{}\t{}\n", v.text, v.source, v.predicted.code(), v.detected));
        }
        fs::write(out, tsv).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(())
}

fn import(a: ImportArgs) -> Result<()> {
    let f = fs::File::open(&a.csv).with_context(|| format!("opening {}", a.csv.display()))?;
    let mut d = import_csv(f, &a.source).with_context(|| format!("importing {}", a.csv.display()))?;
    if let Some(s) = a.split {
        d.rows.iter_mut().filter(|r| r.split == Split::None).for_each(|r| r.split = s);
    }
    let [p, aic, n] = d.label_counts();
    eprintln!("imported {} rows (p={p} a={aic} n={n})", d.rows.len());
    write_output(a.out.as_deref(), &d.to_tsv()?)
}

