use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde_json::json;
use thiserror::Error;

use ctxsal::context::{evaluate, train_with_progress, Context, ContextDataset, ContextMapping, ContextModel, TrainParams};
use ctxsal::voc::{
    build_context_dataset, decode_label_png, load_corpus, VocCorpus, VocSplit, REFERENCE_TEST_CONTEXT_COUNTS,
    REFERENCE_TRAIN_CONTEXT_COUNTS,
};
use ctxsal::{run_pipeline, Error, LutBank, PipelineOutput};

use crate::config::PipelineConfig;
use crate::output::{load_rgb, save_saliency_png};
use crate::{LutChoice, SharedArgs};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Dimensions(String),
    #[error("{0}")]
    Diverged(String),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Dimensions(_) => 3,
            CliError::Diverged(_) => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e.root_cause() {
            Error::DimensionMismatch { .. } => CliError::Dimensions(e.to_string()),
            Error::DivergedLoss { .. } => CliError::Diverged(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

/// Everything a pipeline run needs, resolved from flags, config and defaults.
struct Resources {
    config: PipelineConfig,
    bank: LutBank,
    model: ContextModel,
}

fn load_mapping(shared: &SharedArgs, config: Option<&PipelineConfig>) -> Result<ContextMapping, CliError> {
    let path = shared
        .mapping
        .clone()
        .or_else(|| config.and_then(|c| c.mapping.clone()));
    match path {
        Some(p) => Ok(ContextMapping::load(&p)?),
        None => Ok(ContextMapping::default()),
    }
}

fn resolve(shared: &SharedArgs) -> Result<Resources, CliError> {
    let mut config = match &shared.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    let p = &mut config.params;
    if let Some(v) = shared.block_size {
        p.contrast.block_size = v;
    }
    if let Some(v) = shared.color_p {
        p.color.p = v;
    }
    if let Some(v) = shared.w1 {
        p.fusion.w1 = v;
    }
    if let Some(v) = shared.w2 {
        p.fusion.w2 = v;
    }
    if let Some(v) = shared.sigma_sq {
        p.center_prior.sigma_sq = v;
    }
    if let Some(v) = shared.smooth_size {
        p.smooth.size = v;
    }
    if shared.no_center_prior {
        p.center_prior.enabled = false;
    }
    if shared.no_smooth {
        p.smooth.enabled = false;
    }
    if let Some(choice) = shared.lut {
        p.user_lut = choice == LutChoice::User;
    }
    if shared.lut_bank.is_some() {
        config.lut_bank = shared.lut_bank.clone();
    }
    if shared.model.is_some() {
        config.model = shared.model.clone();
    }
    config.params.validate()?;

    let mapping = load_mapping(shared, Some(&config))?;
    let bank = match &config.lut_bank {
        Some(path) => LutBank::load(path)?,
        None => LutBank::default_with(&mapping),
    };
    if config.params.user_lut && bank.user_lut().is_none() {
        return Err(Error::MissingUserLut.into());
    }
    let model = match &config.model {
        Some(path) => ContextModel::load(path)?,
        None => {
            info!("no context model given; scoring contexts by summed class area");
            ContextModel::area_vote(&mapping)
        }
    };
    Ok(Resources { config, bank, model })
}

fn run_one(res: &Resources, image: &Path, labels: &Path) -> Result<PipelineOutput, CliError> {
    let img = load_rgb(image)?;
    let lab = decode_label_png(labels)?;
    if img.dims() != lab.dims() {
        return Err(CliError::Dimensions(format!(
            "{} is {}x{} but {} is {}x{}",
            image.display(),
            img.width(),
            img.height(),
            labels.display(),
            lab.width(),
            lab.height()
        )));
    }
    Ok(run_pipeline(&img, &lab, &res.config.params, &res.bank, &res.model)?)
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::input(format!("{}: {e}", dir.display())))
}

pub fn saliency(shared: &SharedArgs, image: &Path, labels: &Path, out: &Path) -> Result<u8, CliError> {
    let res = resolve(shared)?;
    let result = run_one(&res, image, labels)?;
    create_dir(out)?;

    let mut written: Vec<PathBuf> = Vec::new();
    let mut write = |name: &str, map| -> Result<(), CliError> {
        let path = out.join(name);
        save_saliency_png(&path, map)?;
        written.push(path);
        Ok(())
    };
    write("final.png", &result.final_map)?;
    if shared.intermediates {
        let i = &result.intermediates;
        write("s_cn.png", &i.s_cn)?;
        write("s_cl.png", &i.s_cl)?;
        write("s_sege.png", &i.s_sege)?;
        write("s_cncl.png", &i.s_cncl)?;
    }

    if shared.json {
        let files: Vec<String> = written.iter().map(|p| p.display().to_string()).collect();
        println!("{}", json!({ "context": result.context.name(), "outputs": files }));
    } else {
        println!("{}", result.context);
    }
    Ok(0)
}

fn open_corpus(root: &Path, split: VocSplit) -> Result<VocCorpus, CliError> {
    let corpus = load_corpus(root, split)?;
    if let Some(w) = corpus.size_warning() {
        warn!("{w}");
    }
    Ok(corpus)
}

fn reference_counts(split: VocSplit) -> Option<[usize; Context::COUNT]> {
    match split {
        VocSplit::Train => Some(REFERENCE_TRAIN_CONTEXT_COUNTS),
        VocSplit::Val => Some(REFERENCE_TEST_CONTEXT_COUNTS),
        VocSplit::Trainval => None,
    }
}

fn report_counts(ds: &ContextDataset, split: VocSplit) {
    let counts = ds.counts();
    let reference = reference_counts(split);
    for ctx in Context::ALL {
        match reference {
            Some(r) => eprintln!("  {:<14} {:>5}  (reference {})", ctx.name(), counts[ctx.index()], r[ctx.index()]),
            None => eprintln!("  {:<14} {:>5}", ctx.name(), counts[ctx.index()]),
        }
    }
}

pub struct TrainArgs {
    pub root: PathBuf,
    pub split: VocSplit,
    pub out: PathBuf,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub history: Option<PathBuf>,
    pub test_split: Option<VocSplit>,
}

pub fn train_context(shared: &SharedArgs, args: &TrainArgs) -> Result<u8, CliError> {
    let mapping = load_mapping(shared, None)?;
    let corpus = open_corpus(&args.root, args.split)?;
    let dataset = build_context_dataset(&corpus, &mapping)?;
    eprintln!("{} images in split {}", dataset.len(), args.split);
    report_counts(&dataset, args.split);

    let params = TrainParams {
        learning_rate: args.lr,
        epochs: args.epochs,
        batch_size: args.batch_size,
        seed: shared.seed.unwrap_or(0),
    };
    let (model, history) = train_with_progress(&dataset, &params, |s| {
        if !shared.json {
            println!("epoch {} loss {} accuracy {}", s.epoch, s.loss, s.accuracy);
        }
    })?;
    model.save(&args.out)?;

    if let Some(path) = &args.history {
        let mut csv = String::new();
        for s in &history {
            let _ = writeln!(csv, "{},{},{}", s.epoch, s.loss, s.accuracy);
        }
        fs::write(path, csv).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    }

    let train_accuracy = model.meta().train_accuracy.unwrap_or(0.0);
    let test_accuracy = match args.test_split {
        Some(split) => {
            let test = build_context_dataset(&open_corpus(&args.root, split)?, &mapping)?;
            Some(evaluate(&model, &test).accuracy)
        }
        None => None,
    };
    if shared.json {
        println!(
            "{}",
            json!({
                "images": dataset.len(),
                "epochs": params.epochs,
                "train_accuracy": train_accuracy,
                "test_accuracy": test_accuracy,
                "model": args.out.display().to_string(),
            })
        );
    } else {
        println!("train accuracy {train_accuracy}");
        if let Some(a) = test_accuracy {
            println!("test accuracy {a}");
        }
    }
    Ok(0)
}

pub fn eval_context(shared: &SharedArgs, root: &Path, split: VocSplit) -> Result<u8, CliError> {
    let model_path = shared
        .model
        .as_ref()
        .ok_or_else(|| CliError::input("eval-context needs --model"))?;
    let model = ContextModel::load(model_path)?;
    let mapping = load_mapping(shared, None)?;
    let dataset = build_context_dataset(&open_corpus(root, split)?, &mapping)?;
    let eval = evaluate(&model, &dataset);

    if shared.json {
        println!(
            "{}",
            json!({
                "images": dataset.len(),
                "accuracy": eval.accuracy,
                "loss": eval.loss,
                "contexts": Context::ALL.iter().map(|c| c.name()).collect::<Vec<_>>(),
                "confusion": eval.confusion,
            })
        );
        return Ok(0);
    }
    println!("accuracy {}", eval.accuracy);
    println!("confusion (rows: truth, columns: predicted)");
    let mut header = format!("{:<14}", "");
    for c in Context::ALL {
        let _ = write!(header, " {:>13}", c.name());
    }
    println!("{header}");
    for truth in Context::ALL {
        let mut row = format!("{:<14}", truth.name());
        for n in eval.confusion[truth.index()] {
            let _ = write!(row, " {n:>13}");
        }
        println!("{row}");
    }
    Ok(0)
}

pub fn batch(shared: &SharedArgs, root: &Path, split: VocSplit, out: &Path) -> Result<u8, CliError> {
    let res = resolve(shared)?;
    let corpus = open_corpus(root, split)?;
    create_dir(out)?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = shared.jobs {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::input(format!("thread pool: {e}")))?;

    let outcomes: Vec<Result<(), CliError>> = pool.install(|| {
        corpus
            .entries()
            .par_iter()
            .map(|entry| {
                let result = run_one(&res, &entry.image, &entry.label)?;
                save_saliency_png(&out.join(format!("{}_saliency.png", entry.id)), &result.final_map)
            })
            .collect()
    });

    let mut failed = Vec::new();
    for (entry, outcome) in corpus.entries().iter().zip(&outcomes) {
        if let Err(e) = outcome {
            warn!("{}: {e}", entry.id);
            failed.push(entry.id.clone());
        }
    }
    let ok = outcomes.len() - failed.len();
    if shared.json {
        println!("{}", json!({ "ok": ok, "failed": failed.len(), "failed_ids": failed }));
    } else {
        println!("{ok} ok, {} failed", failed.len());
    }
    Ok(if ok == 0 && !failed.is_empty() { 2 } else { 0 })
}
