use std::fs;
use std::path::{Path, PathBuf};

use log::info;

use super::{
    attack_config, attack_samples, checkpoint_label, load_checkpoint, run_attack_sweep, run_lipschitz_table,
    run_regularization_report, run_transfer_matrix, save_checkpoint, train_variant, Checkpoint, ExperimentConfig,
    MetricsTable, RegularizationRow, TrainSettings, Variant,
};
use crate::attacks::{generate_adversarial_batch, perturbation_csv, perturbation_pgm};
use crate::dataset::{save_dataset, Splits};
use crate::error::{Error, Result};
use crate::models::{Model, ModelKind};

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
    fs::write(path, contents)?;
    info!("wrote {}", path.display());
    Ok(path.to_path_buf())
}

fn checkpoint_file(ckpt: &Checkpoint) -> String {
    format!("{}_seed{}_epoch{}.json", ckpt.variant().slug(), ckpt.seed, ckpt.epochs)
}

pub fn gen_data(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out)?;
    let splits = cfg.load_splits()?;
    let train = out.join("train.qads");
    let test = out.join("test.qads");
    save_dataset(&splits.train, &train)?;
    save_dataset(&splits.test, &test)?;
    Ok(vec![train, test])
}

/// Trains the configured variant for every seed and writes each checkpoint.
pub fn train_to_dir(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    fs::create_dir_all(out)?;
    let data = cfg.load_splits()?;
    let mut paths = Vec::new();
    for &seed in &cfg.seeds {
        for ckpt in train_variant(&TrainSettings::from_config(cfg, seed), &data)? {
            let path = out.join(checkpoint_file(&ckpt));
            save_checkpoint(&ckpt, &path)?;
            paths.push(path);
        }
    }
    Ok(paths)
}

fn load_configured_checkpoints(cfg: &ExperimentConfig) -> Result<Vec<Checkpoint>> {
    if cfg.checkpoints.is_empty() {
        return Err(Error::Config("no checkpoints listed in the configuration".into()));
    }
    cfg.checkpoints
        .iter()
        .map(|p| {
            load_checkpoint(p).map_err(|e| match e {
                Error::Io(io) => Error::Config(format!("cannot read {}: {io}", p.display())),
                other => other,
            })
        })
        .collect()
}

fn sweep_budgets(cfg: &ExperimentConfig) -> Vec<f64> {
    let mut eps = vec![0.0];
    eps.extend(cfg.epsilons.iter().copied().filter(|&e| e != 0.0));
    eps
}

/// Self-attack sweep plus a δ heatmap of the first sample per checkpoint.
fn attack_checkpoints(cfg: &ExperimentConfig, ckpts: &[Checkpoint], splits: &Splits, out: &Path) -> Result<Vec<PathBuf>> {
    let (inputs, labels) = attack_samples(&splits.test, cfg.attack_samples);
    let mut table = MetricsTable::default();
    let mut paths = Vec::new();
    for ckpt in ckpts {
        let model = ckpt.to_model()?;
        let label = checkpoint_label(ckpt);
        table.extend(run_attack_sweep(&label, &model, &inputs, &labels, &sweep_budgets(cfg), cfg.attack_steps)?);
        let attack = attack_config(cfg.transfer_epsilon, cfg.attack_steps, 1);
        let batch = generate_adversarial_batch(&model, &inputs[..1], &labels[..1], &attack)?;
        let stem = format!("delta_{}_seed{}_epoch{}", ckpt.variant().slug(), ckpt.seed, ckpt.epochs);
        paths.push(write(&out.join(format!("{stem}.csv")), perturbation_csv(&batch, 0)?)?);
        paths.push(write(&out.join(format!("{stem}.pgm")), perturbation_pgm(&batch, 0)?)?);
    }
    paths.insert(0, write(&out.join("attack_sweep.csv"), table.to_csv())?);
    Ok(paths)
}

fn transfer_checkpoints(cfg: &ExperimentConfig, ckpts: &[Checkpoint], splits: &Splits, out: &Path) -> Result<PathBuf> {
    let (inputs, labels) = attack_samples(&splits.test, cfg.attack_samples);
    let models = ckpts.iter().map(Checkpoint::to_model).collect::<Result<Vec<_>>>()?;
    let named: Vec<(String, &Model)> = ckpts.iter().map(checkpoint_label).zip(&models).collect();
    let matrix = run_transfer_matrix(&named, &inputs, &labels, cfg.transfer_epsilon, cfg.attack_steps)?;
    write(&out.join("transfer.csv"), matrix.to_csv())
}

fn lipschitz_checkpoints(cfg: &ExperimentConfig, ckpts: &[Checkpoint], splits: &Splits, out: &Path) -> Result<PathBuf> {
    let (probes, _) = splits.test.take(cfg.lipschitz_probes).to_samples();
    write(&out.join("lipschitz.csv"), run_lipschitz_table(ckpts, &probes)?.to_csv())
}

pub fn attack_to_dir(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    fs::create_dir_all(out)?;
    let ckpts = load_configured_checkpoints(cfg)?;
    attack_checkpoints(cfg, &ckpts, &cfg.load_splits()?, out)
}

pub fn transfer_to_dir(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf> {
    cfg.validate()?;
    fs::create_dir_all(out)?;
    let ckpts = load_configured_checkpoints(cfg)?;
    transfer_checkpoints(cfg, &ckpts, &cfg.load_splits()?, out)
}

pub fn lipschitz_to_dir(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf> {
    cfg.validate()?;
    fs::create_dir_all(out)?;
    let ckpts = load_configured_checkpoints(cfg)?;
    lipschitz_checkpoints(cfg, &ckpts, &cfg.load_splits()?, out)
}

/// The models of the full study: the re-upload penalty sweep trained to
/// `long_epochs`, and the other three kinds trained to `epochs`.
pub fn study_variants(cfg: &ExperimentConfig) -> Vec<(Variant, usize)> {
    let mut v: Vec<(Variant, usize)> = cfg
        .lambdas
        .iter()
        .map(|&l| (Variant::new(ModelKind::ReUp, l), cfg.long_epochs))
        .collect();
    for kind in [ModelKind::AmpEnc, ModelKind::Fourier, ModelKind::ConvNet] {
        v.push((Variant::new(kind, 0.0), cfg.epochs));
    }
    v
}

/// Trains every study variant for every seed; snapshots at `epochs` and `long_epochs`.
pub fn train_study(cfg: &ExperimentConfig, data: &Splits) -> Result<Vec<Checkpoint>> {
    let mut all = Vec::new();
    for &seed in &cfg.seeds {
        for (variant, epochs) in study_variants(cfg) {
            let settings = TrainSettings {
                variant,
                seed,
                epochs,
                snapshot_epochs: vec![cfg.epochs, cfg.long_epochs],
                batch_size: cfg.batch_size,
                learning_rate: cfg.learning_rate,
            };
            all.extend(train_variant(&settings, data)?);
        }
    }
    Ok(all)
}

/// Full study: data, checkpoints, attack sweep, transfer matrix of the first
/// seed, Lipschitz table and the regularization report.
pub fn report_to_dir(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let ckpt_dir = out.join("checkpoints");
    let heat_dir = out.join("heatmaps");
    fs::create_dir_all(&ckpt_dir)?;
    fs::create_dir_all(&heat_dir)?;
    let mut paths = gen_data(cfg, out)?;
    let data = cfg.load_splits()?;
    let ckpts = train_study(cfg, &data)?;
    for c in &ckpts {
        let path = ckpt_dir.join(checkpoint_file(c));
        save_checkpoint(c, &path)?;
        paths.push(path);
    }
    let short: Vec<Checkpoint> = ckpts.iter().filter(|c| c.epochs == cfg.epochs).cloned().collect();
    let first_seed = cfg.seeds[0];
    let transfer_set: Vec<Checkpoint> = short.iter().filter(|c| c.seed == first_seed).cloned().collect();

    let sweep = attack_checkpoints(cfg, &short, &data, &heat_dir)?;
    let sweep_csv = heat_dir.join("attack_sweep.csv");
    let target = out.join("attack_sweep.csv");
    fs::rename(&sweep_csv, &target)?;
    paths.push(target);
    paths.extend(sweep.into_iter().filter(|p| p != &sweep_csv));

    paths.push(transfer_checkpoints(cfg, &transfer_set, &data, out)?);
    paths.push(lipschitz_checkpoints(cfg, &ckpts, &data, out)?);

    let (inputs, labels) = attack_samples(&data.test, cfg.attack_samples);
    let mut reg_csv = format!("{}\n", RegularizationRow::CSV_HEADER);
    for &seed in &cfg.seeds {
        let refs: Vec<Checkpoint> = short
            .iter()
            .filter(|c| c.seed == seed && c.model != ModelKind::ReUp)
            .cloned()
            .collect();
        let ref_models = refs.iter().map(Checkpoint::to_model).collect::<Result<Vec<_>>>()?;
        let named: Vec<(String, &Model)> = refs.iter().map(checkpoint_label).zip(&ref_models).collect();
        let reup: Vec<Checkpoint> = ckpts
            .iter()
            .filter(|c| c.seed == seed && c.model == ModelKind::ReUp)
            .cloned()
            .collect();
        for row in run_regularization_report(&reup, &named, &inputs, &labels, cfg.transfer_epsilon, cfg.attack_steps)? {
            reg_csv.push_str(&row.csv_row());
            reg_csv.push('\n');
        }
    }
    paths.push(write(&out.join("regularization.csv"), reg_csv)?);
    Ok(paths)
}
