use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::PipelineConfig;
use super::{BaselineArgs, Cli, ClusterCommand, Command, EvalArgs, ExtractArgs, QueriesArgs, SynthArgs, TrainArgs, ValuesArgs};
use crate::cluster::{
    cluster_distance, kmeans, read_assignments, validity_scores, write_assignments, write_model, KMeansParams,
    SweepParams,
};
use crate::corpus::{is_valid_user, load_users, save_users, split_users, SplitSizes, Thresholds, UserRecord};
use crate::embed::{load_embeddings, read_phrase_vectors, write_phrase_vectors, EmbeddingTable, PhraseEncoder};
use crate::error::{Error, Result};
use crate::eval::{evaluate, max_comparison_size, random_baseline, simulate_random, ReportTable};
use crate::extract::{extract_additional, extract_instance, match_any, ActivityPhraseInstance, NegationFilter};
use crate::io::{read_jsonl, read_to_string, write_atomic, write_jsonl};
use crate::lexicon::VerbLexicon;
use crate::predict::{log_csv, train, Checkpoint, Featurizer, UserFeatures};
use crate::querygen::{convert_all, ActivityQuery};
use crate::synth::{generate, SynthParams};
use crate::values::{cluster_value_scores, rank_clusters, AttributeVector, DdrScorer, ValueLexicon};

pub const QUERIES: &str = "queries.jsonl";
pub const INSTANCES: &str = "instances.jsonl";
pub const ADDITIONAL: &str = "additional.jsonl";
pub const USERS_VALID: &str = "users_valid.jsonl";
pub const PHRASES: &str = "phrases.tsv";
pub const CLUSTER_MODEL: &str = "clusters.model";
pub const ASSIGNMENTS: &str = "assignments.jsonl";
pub const DISTANCES: &str = "cluster_distances.tsv";
pub const VALIDITY: &str = "validity.csv";
pub const ATTRIBUTES: &str = "attributes.jsonl";
pub const CLUSTER_VALUES: &str = "cluster_values.tsv";
pub const LABELED: &str = "labeled.jsonl";
pub const SPLITS: &str = "splits.json";
pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_JSON: &str = "report.json";

fn checkpoint_name(variant: &str) -> String {
    format!("model-{variant}.json")
}

fn train_log_name(variant: &str) -> String {
    format!("trainlog-{variant}.csv")
}

fn require(paths: &[&Path]) -> Result<()> {
    for p in paths {
        if !p.exists() {
            return Err(Error::io(*p, std::io::Error::new(std::io::ErrorKind::NotFound, "input not found")));
        }
    }
    Ok(())
}

pub fn execute(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    cfg.strict |= cli.strict;
    if cli.workdir.is_some() {
        cfg.paths.workdir = cli.workdir;
    }
    if let Some(n) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::debug!("thread pool already configured: {e}");
        }
    }
    match cli.command {
        Command::Queries(a) => queries(&cfg, a),
        Command::Extract(a) => extract(&cfg, a),
        Command::Embed => embed(&cfg),
        Command::Cluster(ClusterCommand::Fit { k, distances }) => cluster_fit(&cfg, k, distances),
        Command::Cluster(ClusterCommand::Sweep { n_min, n_max }) => cluster_sweep(&cfg, n_min, n_max),
        Command::Values(a) => values(&cfg, a),
        Command::Label => label(&cfg),
        Command::Train(a) => train_stage(&cfg, a),
        Command::Eval(a) => eval_stage(&cfg, a),
        Command::Baseline(a) => baseline(&cfg, a),
        Command::Synth(a) => synth(&cfg, a),
    }
}

fn lexicon(cfg: &PipelineConfig, extra: Option<PathBuf>) -> Result<VerbLexicon> {
    let mut lex = VerbLexicon::builtin();
    if let Some(p) = extra.or_else(|| cfg.paths.verbs.clone()) {
        lex.extend_from_tsv(&read_to_string(&p)?)?;
    }
    Ok(lex)
}

fn embeddings(cfg: &PipelineConfig) -> Result<EmbeddingTable> {
    let path = cfg.embeddings_path();
    let loaded = load_embeddings(&path)?;
    if !loaded.diagnostics.is_empty() {
        if cfg.strict {
            return Err(Error::InvalidInput(format!("{}: {}", path.display(), loaded.diagnostics[0])));
        }
        log::warn!("{}: skipped {} malformed lines", path.display(), loaded.diagnostics.len());
    }
    Ok(loaded.table)
}

fn queries(cfg: &PipelineConfig, args: QueriesArgs) -> Result<()> {
    let events_path = args.events.unwrap_or_else(|| cfg.events_path());
    require(&[&events_path])?;
    let events = read_to_string(&events_path)?;
    let survey_path = args.survey.unwrap_or_else(|| cfg.survey_path());
    let survey = if survey_path.exists() {
        read_to_string(&survey_path)?
    } else {
        log::info!("no survey file at {}", survey_path.display());
        String::new()
    };
    let lex = lexicon(cfg, args.verbs)?;
    let (out, failures) = convert_all(events.lines(), survey.lines(), &lex);
    for (line, e) in &failures {
        if cfg.strict {
            return Err(Error::InvalidInput(format!("{line:?}: {e}")));
        }
        log::warn!("skipped {line:?}: {e}");
    }
    write_jsonl(&cfg.out(QUERIES), &out)?;
    log::info!("{} queries, {} lines rejected", out.len(), failures.len());
    Ok(())
}

struct Extracted {
    user: UserRecord,
    queried: Vec<ActivityPhraseInstance>,
    additional: Vec<ActivityPhraseInstance>,
}

fn extract(cfg: &PipelineConfig, args: ExtractArgs) -> Result<()> {
    let users_path = args.users.unwrap_or_else(|| cfg.users_path());
    let queries_path = cfg.out(QUERIES);
    require(&[&users_path, &queries_path])?;
    let loaded = load_users(&users_path, cfg.strict)?;
    for d in &loaded.diagnostics {
        log::warn!("{}:{}: {}", users_path.display(), d.line, d.message);
    }
    let queries: Vec<ActivityQuery> = read_jsonl(&queries_path)?;
    let lex = lexicon(cfg, args.verbs)?;
    let filter = match args.negation.or_else(|| cfg.paths.negation.clone()) {
        Some(p) => NegationFilter::from_lines(&read_to_string(&p)?),
        None => NegationFilter::default(),
    };
    let thresholds = Thresholds {
        min_tweets: args.min_tweets.unwrap_or(cfg.filter.min_tweets),
        min_activities: args.min_activities.unwrap_or(cfg.filter.min_activities),
    };

    let mut users = Vec::with_capacity(loaded.users.len());
    for u in loaded.users {
        match u.check() {
            Ok(()) => users.push(u),
            Err(e) if cfg.strict => return Err(Error::InvalidInput(format!("user {}: {e}", u.user_id))),
            Err(e) => log::warn!("dropped user {}: {e}", u.user_id),
        }
    }
    let total = users.len();
    let extracted: Vec<Extracted> = users
        .into_par_iter()
        .map(|mut user| {
            let queried: Vec<ActivityPhraseInstance> = user
                .queried()
                .filter_map(|d| {
                    let (qi, span) = match_any(d, &queries, &filter)?;
                    Some(extract_instance(d, &span, &user.user_id, Some(qi), &lex))
                })
                .collect();
            let additional: Vec<ActivityPhraseInstance> = user
                .additional()
                .flat_map(|d| extract_additional(d, &user.user_id, &lex, &filter))
                .collect();
            user.additional_activities = additional
                .iter()
                .map(|i| i.normalized.clone())
                .filter(|p| !p.is_empty())
                .collect();
            Extracted { user, queried, additional }
        })
        .filter(|e| is_valid_user(&e.user, thresholds))
        .collect();

    let queried: Vec<&ActivityPhraseInstance> = extracted.iter().flat_map(|e| &e.queried).collect();
    let additional: Vec<&ActivityPhraseInstance> = extracted.iter().flat_map(|e| &e.additional).collect();
    let valid: Vec<UserRecord> = extracted.iter().map(|e| e.user.clone()).collect();
    write_jsonl(&cfg.out(INSTANCES), &queried)?;
    write_jsonl(&cfg.out(ADDITIONAL), &additional)?;
    save_users(&cfg.out(USERS_VALID), &valid)?;
    log::info!(
        "{} of {total} users kept; {} queried and {} additional activity instances",
        valid.len(),
        queried.len(),
        additional.len()
    );
    Ok(())
}

/// Distinct non-empty normalized phrases in first-occurrence order.
fn distinct_phrases(instances: &[ActivityPhraseInstance]) -> Vec<String> {
    let mut seen = BTreeSet::new();
    instances
        .iter()
        .filter(|i| !i.normalized.is_empty() && seen.insert(i.normalized.as_str()))
        .map(|i| i.normalized.clone())
        .collect()
}

fn embed(cfg: &PipelineConfig) -> Result<()> {
    let inst_path = cfg.out(INSTANCES);
    let emb_path = cfg.embeddings_path();
    require(&[&inst_path, &emb_path])?;
    let instances: Vec<ActivityPhraseInstance> = read_jsonl(&inst_path)?;
    let table = embeddings(cfg)?;
    let phrases = distinct_phrases(&instances);
    let vectors = table.encode_all(&phrases);
    let uncovered = vectors.iter().filter(|v| v.covered == 0.0).count();
    write_phrase_vectors(&cfg.out(PHRASES), &vectors)?;
    log::info!("{} phrases embedded, {uncovered} without any known token", vectors.len());
    Ok(())
}

fn phrase_vectors(cfg: &PipelineConfig) -> Result<Vec<Vec<f64>>> {
    let path = cfg.out(PHRASES);
    require(&[&path])?;
    Ok(read_phrase_vectors(&path)?.into_iter().map(|p| p.vector).collect())
}

fn cluster_fit(cfg: &PipelineConfig, k: Option<usize>, distances: bool) -> Result<()> {
    let vectors = phrase_vectors(cfg)?;
    let params = KMeansParams {
        k: k.unwrap_or(cfg.cluster.k),
        seed: cfg.seed,
        max_iter: cfg.cluster.max_iter,
        tol: cfg.cluster.tol,
    };
    let model = kmeans(&vectors, params)?;
    write_model(&cfg.out(CLUSTER_MODEL), &model)?;
    write_assignments(&cfg.out(ASSIGNMENTS), &model)?;
    if distances {
        let mut out = String::new();
        for i in 0..model.k {
            let row: Vec<String> = (0..model.k)
                .map(|j| cluster_distance(&model, i, j).map(|d| d.to_string()))
                .collect::<Result<_>>()?;
            out.push_str(&row.join("\t"));
            out.push('\n');
        }
        write_atomic(&cfg.out(DISTANCES), out.as_bytes())?;
    }
    if model.k >= 2 {
        let v = validity_scores(&vectors, &model, cfg.cluster.silhouette_sample, cfg.seed)?;
        log::info!(
            "k={} iterations={} objective={:.6} silhouette={:.4} CH={:.4} DB={:.4}",
            model.k,
            model.iterations,
            model.objective,
            v.silhouette,
            v.calinski_harabasz,
            v.davies_bouldin
        );
    }
    Ok(())
}

fn cluster_sweep(cfg: &PipelineConfig, n_min: Option<u32>, n_max: Option<u32>) -> Result<()> {
    let vectors = phrase_vectors(cfg)?;
    let params = SweepParams {
        n_min: n_min.unwrap_or(cfg.cluster.n_min),
        n_max: n_max.unwrap_or(cfg.cluster.n_max),
        seed: cfg.seed,
        max_iter: cfg.cluster.max_iter,
        tol: cfg.cluster.tol,
        silhouette_sample: cfg.cluster.silhouette_sample,
    };
    let report = crate::cluster::sweep_k(&vectors, params)?;
    let csv = report.to_csv();
    write_atomic(&cfg.out(VALIDITY), csv.as_bytes())?;
    print!("{csv}");
    Ok(())
}

fn values(cfg: &PipelineConfig, args: ValuesArgs) -> Result<()> {
    let users_path = cfg.out(USERS_VALID);
    let values_path = args.values.unwrap_or_else(|| cfg.values_path());
    require(&[&users_path, &values_path, &cfg.embeddings_path()])?;
    let users: Vec<UserRecord> = read_jsonl(&users_path)?;
    let lexicon = ValueLexicon::load(&values_path)?;
    let table = embeddings(cfg)?;
    let scorer = DdrScorer::new(&lexicon, &table)?;
    let attributes: Vec<AttributeVector> = users
        .par_iter()
        .map(|u| AttributeVector {
            user_id: u.user_id.clone(),
            scores: scorer.scores(&u.profile),
        })
        .collect();
    write_jsonl(&cfg.out(ATTRIBUTES), &attributes)?;
    log::info!("{} attribute vectors over {} values", attributes.len(), lexicon.len());

    if args.cluster_scores {
        let labeled_path = cfg.out(LABELED);
        require(&[&labeled_path])?;
        let labeled: Vec<UserRecord> = read_jsonl(&labeled_path)?;
        let by_id: HashMap<&str, &AttributeVector> = attributes.iter().map(|a| (a.user_id.as_str(), a)).collect();
        let pairs: Vec<(&[usize], &AttributeVector)> = labeled
            .iter()
            .filter_map(|u| by_id.get(u.user_id.as_str()).map(|a| (u.target_labels.as_slice(), *a)))
            .collect();
        let mut out = String::from("value\trank\tcluster\tscore\n");
        for (v, dim) in lexicon.dims().iter().enumerate() {
            let scores = cluster_value_scores(pairs.iter().copied(), v)?;
            for (rank, c) in rank_clusters(&scores).into_iter().enumerate() {
                out.push_str(&format!("{}\t{}\t{c}\t{}\n", dim.name, rank + 1, scores[&c]));
            }
        }
        write_atomic(&cfg.out(CLUSTER_VALUES), out.as_bytes())?;
    }
    Ok(())
}

fn label(cfg: &PipelineConfig) -> Result<()> {
    let paths = [cfg.out(USERS_VALID), cfg.out(INSTANCES), cfg.out(PHRASES), cfg.out(ASSIGNMENTS)];
    require(&paths.iter().map(PathBuf::as_path).collect::<Vec<_>>())?;
    let users: Vec<UserRecord> = read_jsonl(&paths[0])?;
    let instances: Vec<ActivityPhraseInstance> = read_jsonl(&paths[1])?;
    let phrases = read_phrase_vectors(&paths[2])?;
    let assignments: HashMap<usize, usize> = read_assignments(&paths[3])?.into_iter().collect();
    let phrase_cluster: HashMap<&str, usize> = phrases
        .iter()
        .enumerate()
        .filter_map(|(i, p)| assignments.get(&i).map(|&c| (p.phrase.as_str(), c)))
        .collect();
    let mut targets: HashMap<&str, BTreeSet<usize>> = HashMap::new();
    for inst in &instances {
        if let Some(&c) = phrase_cluster.get(inst.normalized.as_str()) {
            targets.entry(inst.user_id.as_str()).or_default().insert(c);
        }
    }
    let labeled: Vec<UserRecord> = users
        .into_iter()
        .filter_map(|mut u| {
            let t = targets.get(u.user_id.as_str())?;
            u.target_labels = t.iter().copied().collect();
            Some(u)
        })
        .collect();
    let n = labeled.len();
    let dev = cfg.split.dev.unwrap_or((n as f64 * 0.15).round() as usize);
    let test = cfg.split.test.unwrap_or((n as f64 * 0.15).round() as usize);
    let train = cfg.split.train.unwrap_or(n.saturating_sub(dev + test));
    let split = split_users(&labeled, SplitSizes { train, dev, test }, cfg.seed)?;
    save_users(&cfg.out(LABELED), &labeled)?;
    let mut json = serde_json::to_string_pretty(&split)?;
    json.push('\n');
    write_atomic(&cfg.out(SPLITS), json.as_bytes())?;
    log::info!("{n} labeled users; split {train}/{dev}/{test}");
    Ok(())
}

struct LabeledData {
    users: HashMap<String, UserRecord>,
    split: crate::corpus::DatasetSplit,
}

fn labeled_data(cfg: &PipelineConfig) -> Result<LabeledData> {
    let (lp, sp) = (cfg.out(LABELED), cfg.out(SPLITS));
    require(&[&lp, &sp])?;
    let users: Vec<UserRecord> = read_jsonl(&lp)?;
    let split = serde_json::from_str(&read_to_string(&sp)?)?;
    Ok(LabeledData {
        users: users.into_iter().map(|u| (u.user_id.clone(), u)).collect(),
        split,
    })
}

fn attributes(cfg: &PipelineConfig) -> Result<HashMap<String, AttributeVector>> {
    let path = cfg.out(ATTRIBUTES);
    require(&[&path])?;
    let list: Vec<AttributeVector> = read_jsonl(&path)?;
    Ok(list.into_iter().map(|a| (a.user_id.clone(), a)).collect())
}

fn features(
    ids: &[String],
    data: &LabeledData,
    attrs: Option<&HashMap<String, AttributeVector>>,
    featurizer: &Featurizer,
) -> Result<Vec<UserFeatures>> {
    let mut users = Vec::with_capacity(ids.len());
    let mut a = Vec::with_capacity(ids.len());
    for id in ids {
        let u = data
            .users
            .get(id)
            .ok_or_else(|| Error::InvalidInput(format!("split user {id} is not in the labeled set")))?;
        users.push(u.clone());
        match attrs {
            Some(m) => a.push(Some(
                m.get(id)
                    .ok_or_else(|| Error::InvalidInput(format!("no attribute vector for {id}")))?,
            )),
            None => a.push(None),
        }
    }
    Ok(featurizer.features_all(&users, &a))
}

fn train_stage(cfg: &PipelineConfig, args: TrainArgs) -> Result<()> {
    let mut config = cfg.model.model_config(cfg.seed);
    config.use_a = !args.no_attributes;
    config.use_p = !args.no_profile;
    config.use_h = !args.no_history;
    if let Some(h) = args.history {
        config.history_source = h;
    }
    if let Some(e) = args.epochs {
        config.epochs = e;
    }
    if let Some(lr) = args.lr {
        config.adam.lr = lr;
    }
    require(&[&cfg.embeddings_path()])?;
    let data = labeled_data(cfg)?;
    let attrs = if config.use_a { Some(attributes(cfg)?) } else { None };
    let table = embeddings(cfg)?;
    config.emb_dim = table.dim();
    if let Some(a) = attrs.as_ref().and_then(|m| m.values().next()) {
        config.dim_a = a.scores.len();
    }
    let featurizer = Featurizer::new(&table, config.history_source);
    let train_set = features(&data.split.train, &data, attrs.as_ref(), &featurizer)?;
    let dev_set = features(&data.split.dev, &data, attrs.as_ref(), &featurizer)?;
    let outcome = train(&train_set, &dev_set, &config, args.task)?;

    let mut json = serde_json::to_string(&outcome.checkpoint)?;
    json.push('\n');
    write_atomic(&cfg.out(&checkpoint_name(&args.name)), json.as_bytes())?;
    write_atomic(&cfg.out(&train_log_name(&args.name)), log_csv(&outcome.log).as_bytes())?;
    log::info!(
        "{}: {} instances, {} classes, best epoch {}",
        args.name,
        outcome.num_instances,
        outcome.checkpoint.classes.dim_o(),
        outcome.best_epoch
    );
    Ok(())
}

fn eval_stage(cfg: &PipelineConfig, args: EvalArgs) -> Result<()> {
    let mut checkpoints = Vec::new();
    for name in &args.models {
        let path = cfg.out(&checkpoint_name(name));
        require(&[&path])?;
        let cp: Checkpoint = serde_json::from_str(&read_to_string(&path)?)?;
        checkpoints.push((name.clone(), cp));
    }
    let data = labeled_data(cfg)?;
    let need_attrs = checkpoints.iter().any(|(_, c)| c.model.config.use_a);
    let attrs = if need_attrs { Some(attributes(cfg)?) } else { None };
    let table = embeddings(cfg)?;

    let min_classes = checkpoints.iter().map(|(_, c)| c.classes.dim_o()).min().unwrap_or(0);
    let ks: Vec<usize> = args
        .ks
        .unwrap_or_else(|| cfg.eval.ks.clone())
        .into_iter()
        .filter(|&k| k >= 1 && k <= min_classes)
        .collect();
    if ks.is_empty() {
        return Err(Error::InvalidInput("no k value fits the number of classes".into()));
    }
    let mut table_out = ReportTable::new(&ks);
    for (name, cp) in &checkpoints {
        let featurizer = Featurizer::new(&table, cp.model.config.history_source);
        let a = if cp.model.config.use_a { attrs.as_ref() } else { None };
        let test = features(&data.split.test, &data, a, &featurizer)?;
        let scored = cp.score(&test)?;
        let wanted = args.acr_n.unwrap_or(cfg.eval.acr_n);
        let available = max_comparison_size(&scored);
        let n = wanted.min(available);
        if n < wanted {
            log::warn!("{name}: comparison sample reduced from {wanted} to {n}");
        }
        table_out.push(name, evaluate(&scored, &ks, n, cfg.seed)?)?;
    }
    if let Some((_, cp)) = checkpoints.first() {
        table_out.push("rand", random_baseline(cp.classes.dim_o(), &ks)?)?;
    }
    let csv = table_out.to_csv();
    write_atomic(&cfg.out(REPORT_CSV), csv.as_bytes())?;
    write_atomic(&cfg.out(REPORT_JSON), (table_out.to_json()? + "\n").as_bytes())?;
    print!("{csv}");
    Ok(())
}

fn baseline(cfg: &PipelineConfig, args: BaselineArgs) -> Result<()> {
    let ks: Vec<usize> = args
        .ks
        .unwrap_or_else(|| cfg.eval.ks.clone())
        .into_iter()
        .filter(|&k| k <= args.classes)
        .collect();
    let mut t = ReportTable::new(&ks);
    t.push("rand", random_baseline(args.classes, &ks)?)?;
    if let Some(users) = args.simulate {
        let n = args.acr_n.unwrap_or(cfg.eval.acr_n);
        t.push("rand-sim", simulate_random(args.classes, &ks, users, n, cfg.seed)?)?;
    }
    let csv = t.to_csv();
    if let Some(stem) = args.out {
        write_atomic(&stem.with_extension("csv"), csv.as_bytes())?;
        write_atomic(&stem.with_extension("json"), (t.to_json()? + "\n").as_bytes())?;
    }
    print!("{csv}");
    Ok(())
}

fn synth(cfg: &PipelineConfig, args: SynthArgs) -> Result<()> {
    let out = args.out.unwrap_or_else(|| cfg.workdir());
    let corpus = generate(SynthParams::new(args.users, args.clusters, cfg.seed), &VerbLexicon::builtin())?;
    corpus.write_to(&out)?;
    log::info!("synthetic corpus with {} users written to {}", corpus.users.len(), out.display());
    Ok(())
}
