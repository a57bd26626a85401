use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clam::baselines::MilParams;
use clam::checkpoint::{CLAM_MAGIC, MIL_MAGIC};
use clam::metrics::{write_probabilities_csv, MetricsReport};
use clam::model::{InitScheme, ModelConfig};
use clam::training::{
    evaluate_fold, fit, monte_carlo_split, predict_probs, BagClassifier, CaseRecord, SplitPlan, SplitSet, TrainConfig,
};
use clam::{ClamError, ClamParams, FeatureBag, Matrix, SeededRng};

use crate::config::{KeyValues, TRAIN_KEYS};
use crate::error::{CliError, Result};
use crate::io::{load_bags, parse_pairs, read, read_text, write_atomic};

pub const SPLIT_FILE: &str = "splits.csv";

pub enum LoadedModel {
    Clam(ClamParams),
    Mil(MilParams),
}

impl LoadedModel {
    fn n_classes(&self) -> usize {
        match self {
            LoadedModel::Clam(p) => p.n_classes(),
            LoadedModel::Mil(p) => p.n_classes,
        }
    }

    fn feature_dim(&self) -> usize {
        match self {
            LoadedModel::Clam(p) => p.feature_dim(),
            LoadedModel::Mil(p) => p.feature_dim,
        }
    }

    fn predict(&self, bags: &[FeatureBag]) -> Result<Matrix> {
        Ok(match self {
            LoadedModel::Clam(p) => predict_probs(p, bags)?,
            LoadedModel::Mil(p) => predict_probs(p, bags)?,
        })
    }
}

/// Picks the model type from the checkpoint magic.
pub fn load_model(path: &Path) -> Result<LoadedModel> {
    let bytes = read(path)?;
    let tagged = |e: ClamError| match e {
        ClamError::Format { offset, message } => CliError::Core(ClamError::Format {
            offset,
            message: format!("{}: {message}", path.display()),
        }),
        other => CliError::Core(other),
    };
    if bytes.starts_with(&CLAM_MAGIC) {
        ClamParams::from_checkpoint_bytes(&bytes)
            .map(LoadedModel::Clam)
            .map_err(tagged)
    } else if bytes.starts_with(&MIL_MAGIC) {
        MilParams::from_checkpoint_bytes(&bytes)
            .map(LoadedModel::Mil)
            .map_err(tagged)
    } else {
        Err(tagged(ClamError::Format {
            offset: 0,
            message: "not a CLAM or MIL checkpoint".into(),
        }))
    }
}

/// Groups bags into cases, one per slide unless `cases` maps slides to cases.
fn build_cases(bags: &[FeatureBag], n_classes: usize, cases: Option<&Path>) -> Result<Vec<CaseRecord>> {
    let mut seen = BTreeSet::new();
    for bag in bags {
        if !seen.insert(bag.slide_id.as_str()) {
            return Err(CliError::usage(format!("slide {} appears in two bags", bag.slide_id)));
        }
    }
    let mapping: BTreeMap<String, String> = match cases {
        Some(p) => parse_pairs(&read_text(p)?, "cases")?.into_iter().collect(),
        None => bags.iter().map(|b| (b.slide_id.clone(), b.slide_id.clone())).collect(),
    };
    let mut records: Vec<CaseRecord> = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    for bag in bags {
        let class = bag.class(n_classes)?;
        let case = mapping
            .get(&bag.slide_id)
            .ok_or_else(|| CliError::usage(format!("slide {} has no case", bag.slide_id)))?;
        match index.get(case) {
            Some(&i) => {
                if records[i].class != class {
                    return Err(CliError::Core(ClamError::Label(format!(
                        "case {case} mixes classes {} and {class}",
                        records[i].class
                    ))));
                }
                records[i].slide_ids.push(bag.slide_id.clone());
            }
            None => {
                index.insert(case.clone(), records.len());
                records.push(CaseRecord {
                    case_id: case.clone(),
                    class,
                    slide_ids: vec![bag.slide_id.clone()],
                });
            }
        }
    }
    Ok(records)
}

fn select(bags: &[FeatureBag], ids: &[String]) -> Vec<FeatureBag> {
    let wanted: BTreeSet<&str> = ids.iter().map(String::as_str).collect();
    bags.iter()
        .filter(|b| wanted.contains(b.slide_id.as_str()))
        .cloned()
        .collect()
}

fn write_evaluation(
    out: &Path,
    prefix: &str,
    header: &str,
    ids: &[String],
    labels: &[usize],
    probs: &Matrix,
    report: &MetricsReport,
) -> Result<()> {
    write_atomic(
        &out.join(format!("{prefix}metrics.txt")),
        format!("{header}{}", report.to_text()).as_bytes(),
    )?;
    write_atomic(
        &out.join(format!("{prefix}probabilities.csv")),
        write_probabilities_csv(ids, labels, probs)?.as_bytes(),
    )
}

fn run_fold<M: BagClassifier>(
    init: M,
    sets: [&[FeatureBag]; 3],
    config: &TrainConfig,
    out: &Path,
    fold: usize,
) -> Result<Option<f64>> {
    let [train, val, test] = sets;
    let (model, log) = fit(train, val, init, config)?;
    write_atomic(&out.join(format!("fold_{fold}.ckpt")), &model.to_checkpoint_bytes())?;
    write_atomic(&out.join(format!("fold_{fold}.log.tsv")), log.to_text().as_bytes())?;
    if test.is_empty() {
        return Ok(None);
    }
    let ev = evaluate_fold(&model, test)?;
    write_evaluation(
        out,
        &format!("fold_{fold}.test_"),
        "",
        &ev.slide_ids,
        &ev.labels,
        &ev.probs,
        &ev.report,
    )?;
    Ok(ev.report.headline_auc())
}

pub fn train(
    bags_dir: &Path,
    out: &Path,
    config: Option<&Path>,
    split: Option<&Path>,
    cases: Option<&Path>,
    seed: Option<u64>,
) -> Result<()> {
    let kv = KeyValues::load(config, TRAIN_KEYS)?;
    let mut cfg = kv.train_config()?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let kind: String = kv.get("model")?.unwrap_or_else(|| "clam".into());
    if kind != "clam" && kind != "mil" {
        return Err(CliError::usage(format!("model must be clam or mil, got {kind:?}")));
    }
    let bags = load_bags(bags_dir)?;
    let n_classes = match kv.get("n_classes")? {
        Some(n) => n,
        None => bags.iter().map(|b| b.label.max(0) as usize + 1).max().unwrap_or(0),
    };
    let feature_dim = bags[0].feature_dim();
    let records = build_cases(&bags, n_classes, cases)?;
    let plan = match split {
        Some(p) => SplitPlan::from_split_file(&read_text(p)?, &records)?,
        None => {
            let folds = kv.get("folds")?.unwrap_or(1);
            monte_carlo_split(&records, folds, kv.split_fractions()?, &mut SeededRng::new(cfg.seed))?
        }
    };
    write_atomic(&out.join(SPLIT_FILE), plan.to_split_file().as_bytes())?;

    let mut summary = format!("model={kind}\nfolds={}\n", plan.n_folds());
    let mut aucs = Vec::new();
    for fold in 0..plan.n_folds() {
        let [train, val, test] =
            [SplitSet::Train, SplitSet::Val, SplitSet::Test].map(|s| select(&bags, &plan.slides(fold, s)));
        let fold_seed = SeededRng::derive_seed(cfg.seed, fold as u64);
        let fold_cfg = TrainConfig {
            seed: SeededRng::derive_seed(fold_seed, 1),
            ..cfg.clone()
        };
        let mut init_rng = SeededRng::new(SeededRng::derive_seed(fold_seed, 2));
        let sets = [&train[..], &val[..], &test[..]];
        let auc = if kind == "clam" {
            let init = ClamParams::init(
                ModelConfig::new(n_classes, feature_dim),
                InitScheme::default(),
                &mut init_rng,
            )?;
            run_fold(init, sets, &fold_cfg, out, fold)?
        } else {
            let init = MilParams::init(n_classes, feature_dim, InitScheme::default(), &mut init_rng)?;
            run_fold(init, sets, &fold_cfg, out, fold)?
        };
        match auc {
            Some(a) => {
                let _ = writeln!(summary, "fold_{fold}_test_auc={a}");
                aucs.push(a);
                println!("fold {fold}: test AUC {a:.4}");
            }
            None => println!("fold {fold}: no test AUC"),
        }
    }
    if !aucs.is_empty() {
        let _ = writeln!(
            summary,
            "mean_test_auc={}",
            aucs.iter().sum::<f64>() / aucs.len() as f64
        );
    }
    write_atomic(&out.join("summary.txt"), summary.as_bytes())
}

/// One set of one fold of a split file.
pub struct Subset {
    pub split: PathBuf,
    pub fold: usize,
    pub set: String,
    pub cases: Option<PathBuf>,
}

pub fn eval(bags_dir: &Path, checkpoints: &[PathBuf], out: &Path, subset: Option<&Subset>) -> Result<()> {
    let models = checkpoints.iter().map(|p| load_model(p)).collect::<Result<Vec<_>>>()?;
    let (n_classes, feature_dim) = (models[0].n_classes(), models[0].feature_dim());
    if let Some((i, _)) = models
        .iter()
        .enumerate()
        .find(|(_, m)| (m.n_classes(), m.feature_dim()) != (n_classes, feature_dim))
    {
        return Err(CliError::Core(ClamError::Dimension(format!(
            "{} does not match the shape of {}",
            checkpoints[i].display(),
            checkpoints[0].display()
        ))));
    }
    let mut bags = load_bags(bags_dir)?;
    if let Some(s) = subset {
        let records = build_cases(&bags, n_classes, s.cases.as_deref())?;
        let plan = SplitPlan::from_split_file(&read_text(&s.split)?, &records)?;
        if s.fold >= plan.n_folds() {
            return Err(CliError::usage(format!(
                "fold {} of a {}-fold split",
                s.fold,
                plan.n_folds()
            )));
        }
        let set = match s.set.as_str() {
            "train" => SplitSet::Train,
            "val" => SplitSet::Val,
            _ => SplitSet::Test,
        };
        bags = select(&bags, &plan.slides(s.fold, set));
    }
    if bags.is_empty() {
        return Err(CliError::Core(ClamError::Evaluation("no bags to evaluate".into())));
    }
    let labels = bags
        .iter()
        .map(|b| b.class(n_classes))
        .collect::<clam::Result<Vec<_>>>()?;
    let mut mean = Matrix::zeros(bags.len(), n_classes);
    for m in &models {
        let p = m.predict(&bags)?;
        for (acc, x) in mean.data_mut().iter_mut().zip(p.data()) {
            *acc += x;
        }
    }
    let count = models.len() as f64;
    mean.data_mut().iter_mut().for_each(|x| *x /= count);
    let report = MetricsReport::from_probs(&mean, &labels)?;
    let ids: Vec<String> = bags.iter().map(|b| b.slide_id.clone()).collect();
    write_evaluation(
        out,
        "",
        &format!("checkpoints={}\n", models.len()),
        &ids,
        &labels,
        &mean,
        &report,
    )?;
    print!("{}", report.to_text());
    Ok(())
}
