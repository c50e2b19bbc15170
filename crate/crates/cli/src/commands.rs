use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use labeldist::appr::{appr_all, ApprConfig, ApprMatrix};
use labeldist::datasets::{
    load_content_cites, load_edge_label_tsv, make_figure1_synthetic, make_multilabel_communities, planetoid_split,
    ratio_split,
};
use labeldist::eval::{
    method_features, run_sweep, summarize, summary_csv, train_and_score, EvalReport, ExperimentConfig, Method,
    SplitStrategy,
};
use labeldist::{Dataset, Error, Features, SplitSpec, Task, TrainConfig};

use crate::args::*;

fn input_error(msg: impl Into<String>) -> anyhow::Error {
    Error::Input(msg.into()).into()
}

fn load_dataset(a: &DatasetArgs) -> Result<Dataset> {
    let task = Task::from(a.task);
    let ds = match (&a.content, &a.cites, &a.edges, &a.labels) {
        (Some(content), Some(cites), _, _) => {
            if task != Task::Multiclass {
                return Err(input_error("content/cites files are multiclass only"));
            }
            load_content_cites(content, cites)?
        }
        (_, _, Some(edges), Some(labels)) => load_edge_label_tsv(edges, labels, task)?,
        _ => return Err(input_error("give either --content/--cites or --edges/--labels")),
    };
    log::info!(
        "loaded {} nodes, {} edges, {} labels",
        ds.num_nodes(),
        ds.graph.num_edges(),
        ds.labels.num_labels()
    );
    Ok(ds)
}

fn strategy(mode: SplitMode, task: Task) -> SplitStrategy {
    match mode {
        SplitMode::Auto => SplitStrategy::for_task(task),
        SplitMode::Planetoid => SplitStrategy::for_task(Task::Multiclass),
        SplitMode::Ratio => SplitStrategy::for_task(Task::Multilabel),
    }
}

fn resolve_split(a: &SplitArgs, ds: &Dataset) -> Result<SplitSpec> {
    let split = match &a.split {
        Some(path) => SplitSpec::load(path)?,
        None => match strategy(a.split_mode, ds.task()) {
            SplitStrategy::Planetoid { per_class, n_val, n_test } => {
                planetoid_split(ds, per_class, n_val, n_test, a.seed)?
            }
            SplitStrategy::Ratio { train, val, test } => ratio_split(ds, train, val, test, a.seed)?,
            SplitStrategy::Custom(f) => f(ds, a.seed)?,
        },
    };
    split.validate(ds)?;
    Ok(split)
}

fn train_config(a: &TrainArgs, task: Task) -> Result<TrainConfig> {
    if task == Task::Multiclass {
        if a.pos_weight.is_some() {
            return Err(input_error("--pos-weight only applies to multilabel data"));
        }
        if a.threshold.is_some() {
            return Err(input_error("--threshold only applies to multilabel data"));
        }
    }
    let d = TrainConfig::default();
    let cfg = TrainConfig {
        learning_rate: a.lr,
        l2_weight: a.l2,
        dropout_keep_prob: a.keep_prob,
        max_epochs: a.epochs,
        early_stop_patience: a.patience,
        pos_weight: a.pos_weight.unwrap_or(d.pos_weight),
        hidden: a.hidden,
        rng_seed: a.model_seed,
        threshold: a.threshold.unwrap_or(d.threshold),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn experiment_config(train: &TrainArgs, task: Task, threads: usize) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::new(task);
    cfg.train = train_config(train, task)?;
    cfg.threads = threads;
    cfg.row_normalize = !train.no_row_normalize;
    Ok(cfg)
}

fn check_alpha_use(method: Method, alpha: Option<f64>) -> Result<()> {
    if !method.uses_alpha() && alpha.is_some() {
        return Err(input_error(format!("--alpha does not apply to method {}", method.name())));
    }
    Ok(())
}

pub fn cmd_appr(a: &ApprArgs) -> Result<()> {
    let ds = load_dataset(&a.data)?;
    let cfg = ApprConfig::new(a.alpha, a.epsilon)?;
    let start = Instant::now();
    let m = appr_all(&ds.graph, &cfg, a.threads)?;
    let elapsed = start.elapsed();
    m.save(&a.out)?;
    println!("n={} nnz={} time_ms={}", m.num_nodes(), m.nnz(), elapsed.as_millis());
    Ok(())
}

pub fn cmd_featurize(a: &FeaturizeArgs) -> Result<()> {
    let ds = load_dataset(&a.data)?;
    let split = resolve_split(&a.split, &ds)?;
    let method = match a.mode {
        FeatureMode::Ld => Method::Ld,
        FeatureMode::Adj => Method::Adj,
        FeatureMode::Labelconv => Method::LabelConv,
    };
    check_alpha_use(method, a.alpha)?;
    let appr = match (method, &a.appr, a.alpha) {
        (Method::Ld, Some(path), _) => {
            let m = ApprMatrix::load(path)?;
            if m.num_nodes() != ds.num_nodes() {
                return Err(Error::Dimension(format!(
                    "{} has {} rows, dataset has {} nodes",
                    path.display(),
                    m.num_nodes(),
                    ds.num_nodes()
                ))
                .into());
            }
            Some(m)
        }
        (Method::Ld, None, Some(alpha)) => Some(appr_all(&ds.graph, &ApprConfig::new(alpha, a.epsilon)?, a.threads)?),
        (Method::Ld, None, None) => return Err(input_error("ld mode needs --appr or --alpha")),
        _ => None,
    };
    let features = method_features(&ds, method, &split.train, appr.as_ref())?;
    features.save(&a.out)?;
    if let Some(path) = &a.split_out {
        split.save(path)?;
    }
    println!("rows={} cols={}", features.rows(), features.cols());
    Ok(())
}

pub fn cmd_train_eval(a: &TrainEvalArgs) -> Result<()> {
    let ds = load_dataset(&a.data)?;
    let mut method: Method = a.method.parse()?;
    if a.emb_dim.is_some() {
        if !matches!(method, Method::Ld | Method::LdEmb) {
            return Err(input_error("--emb-dim only combines with ld features"));
        }
        method = Method::LdEmb;
    }
    check_alpha_use(method, a.alpha)?;
    if a.model_out.is_some() && method == Method::LdEmb {
        return Err(input_error("--model-out is not supported for ld+emb"));
    }
    let mut cfg = experiment_config(&a.train, ds.task(), a.threads)?;
    cfg.epsilon = a.epsilon;
    cfg.record_timing = a.record_timing;
    if let Some(k) = a.emb_dim {
        cfg.emb_dim = k;
    }
    let split = resolve_split(&a.split, &ds)?;

    let start = Instant::now();
    let features = match &a.features {
        Some(path) => Features::load(path)?,
        None => {
            let appr = match (method.uses_alpha(), a.alpha) {
                (true, Some(alpha)) => Some(appr_all(&ds.graph, &ApprConfig::new(alpha, a.epsilon)?, a.threads)?),
                (true, None) => return Err(input_error(format!("method {} needs --alpha or --features", method.name()))),
                (false, _) => None,
            };
            method_features(&ds, method, &split.train, appr.as_ref())?
        }
    };
    let mut out = train_and_score(&ds, method, a.alpha, a.split.seed, &split, features, &cfg)?;
    if a.record_timing {
        out.row.wall_ms = start.elapsed().as_millis() as u64;
    }

    if let Some(path) = &a.report {
        EvalReport { rows: vec![out.row.clone()] }.append_to(path)?;
    }
    if let (Some(path), Some(model)) = (&a.model_out, &out.model) {
        model.save(path)?;
    }
    if let Some(path) = &a.log_out {
        out.log.save(path)?;
    }
    let r = &out.row;
    println!(
        "method={} micro_f1={:.6} macro_f1={:.6} accuracy={:.6} best_epoch={}",
        r.method, r.micro_f1, r.macro_f1, r.accuracy, out.log.best_epoch
    );
    Ok(())
}

fn default_summary_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.summary.csv"))
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    let ds = load_dataset(&a.data)?;
    let methods: Vec<Method> = a.methods.iter().map(|m| m.parse()).collect::<labeldist::Result<_>>()?;
    let mut cfg = experiment_config(&a.train, ds.task(), a.threads)?;
    cfg.epsilon = a.epsilon;
    cfg.emb_dim = a.emb_dim;
    cfg.split = strategy(a.split_mode, ds.task());
    cfg.cache_dir = a.cache_dir.clone();
    cfg.record_timing = a.record_timing;

    let report = run_sweep(&ds, &methods, &a.alphas, &a.seeds, &cfg)?;
    report.save(&a.out)?;
    let summary = summarize(&report)?;
    let summary_path = a.summary.clone().unwrap_or_else(|| default_summary_path(&a.out));
    fs::write(&summary_path, summary_csv(&summary)).with_context(|| format!("writing {}", summary_path.display()))?;
    print!("{}", summary_csv(&summary));
    Ok(())
}

pub fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let prefixed = |suffix: &str| {
        let mut s = a.out_prefix.clone().into_os_string();
        s.push(suffix);
        PathBuf::from(s)
    };
    let (edges, labels) = (prefixed(".edges.tsv"), prefixed(".labels.tsv"));
    match a.kind {
        SynthKind::Figure1 => {
            let s = make_figure1_synthetic(a.components, a.seed)?;
            s.dataset.write_edge_label_tsv(&edges, &labels)?;
            let mut text = String::new();
            for v in 0..s.dataset.num_nodes() {
                text.push_str(&format!("{}\t{}\t{}\n", s.dataset.id_map.name(v), s.component[v], s.role[v].name()));
            }
            let path = prefixed(".components.tsv");
            fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            // the last two components are held out
            let held: Vec<usize> = (a.components - 2..a.components).collect();
            s.holdout_split(&held, 0.25, a.seed).save(&prefixed(".split.json"))?;
            println!("nodes={} edges={}", s.dataset.num_nodes(), s.dataset.graph.num_edges());
        }
        SynthKind::Communities => {
            let ds = make_multilabel_communities(a.components, 40, 8, a.seed)?;
            ds.write_edge_label_tsv(&edges, &labels)?;
            println!("nodes={} edges={}", ds.num_nodes(), ds.graph.num_edges());
        }
    }
    Ok(())
}
