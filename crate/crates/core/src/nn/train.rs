use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{dice_loss, Adam, HasParams, Mode, NetworkConfig, PlateauSchedule, ScheduleAction, Tensor4, UNet};
use crate::error::{Error, Result};
use crate::metrics::{dice, threshold};
use crate::scalar::Scalar;

/// One network input with its binary target, both `[H, W]` in display layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    pub image: Array2<T>,
    pub mask: Array2<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    /// Adam first-moment decay.
    pub beta1: f64,
    pub batch_size: usize,
    pub lr_drop_factor: f64,
    pub lr_patience_epochs: usize,
    pub early_stop_epochs: usize,
    pub max_epochs: usize,
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.0005,
            beta1: 0.9,
            batch_size: 16,
            lr_drop_factor: 0.5,
            lr_patience_epochs: 4,
            early_stop_epochs: 20,
            max_epochs: 200,
            rng_seed: 0,
        }
    }
}

impl TrainConfig {
    /// `lr = 0` is accepted and freezes every parameter.
    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::Parameter(what));
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return bad(format!("lr must be finite and >= 0, got {}", self.lr));
        }
        if !(0.0..1.0).contains(&self.beta1) {
            return bad(format!("beta1 must lie in [0, 1), got {}", self.beta1));
        }
        if !(self.lr_drop_factor > 0.0 && self.lr_drop_factor < 1.0) {
            return bad(format!("lr_drop_factor must lie in (0, 1), got {}", self.lr_drop_factor));
        }
        if self.batch_size == 0 || self.lr_patience_epochs == 0 || self.early_stop_epochs == 0 || self.max_epochs == 0 {
            return bad("batch_size, patience, early stop and max epochs must be >= 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_dice: f64,
    /// Learning rate used during this epoch.
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub history: Vec<EpochRecord>,
    /// Validation Dice before the first update.
    pub baseline_val_dice: f64,
    /// 0 when no epoch beat the baseline.
    pub best_epoch: usize,
    pub best_val_dice: f64,
    pub stopped_early: bool,
}

fn batch_tensors<T: Scalar>(samples: &[Sample<T>], idx: &[usize]) -> Result<(Tensor4<T>, Tensor4<T>)> {
    let images: Vec<&Array2<T>> = idx.iter().map(|&i| &samples[i].image).collect();
    let masks: Vec<&Array2<T>> = idx.iter().map(|&i| &samples[i].mask).collect();
    Ok((Tensor4::stack(&images)?, Tensor4::stack(&masks)?))
}

/// Probability maps for every sample, inference mode.
pub fn predict_all<T: Scalar>(net: &mut UNet<T>, samples: &[Sample<T>], batch: usize) -> Result<Vec<Array2<T>>> {
    let mut out = Vec::with_capacity(samples.len());
    let idx: Vec<usize> = (0..samples.len()).collect();
    for chunk in idx.chunks(batch.max(1)) {
        let images: Vec<&Array2<T>> = chunk.iter().map(|&i| &samples[i].image).collect();
        let y = net.predict(&Tensor4::stack(&images)?)?;
        out.extend((0..chunk.len()).map(|s| y.to_raster(s, 0)));
    }
    Ok(out)
}

/// Mean hard Dice at threshold 0.5 over the set.
pub fn mean_dice<T: Scalar>(net: &mut UNet<T>, samples: &[Sample<T>], batch: usize) -> Result<f64> {
    let preds = predict_all(net, samples, batch)?;
    let mut total = 0.0;
    for (p, s) in preds.iter().zip(samples) {
        total += dice(&threshold(p, 0.5)?, &threshold(&s.mask, 0.5)?)?;
    }
    Ok(total / samples.len() as f64)
}

fn snapshot<T: Scalar>(net: &UNet<T>) -> Vec<Vec<T>> {
    net.params().iter().map(|p| p.value.clone()).collect()
}

fn restore<T: Scalar>(net: &mut UNet<T>, snap: &[Vec<T>]) {
    for (p, v) in net.params_mut().into_iter().zip(snap) {
        p.value.clone_from(v);
    }
}

fn check_set<T: Scalar>(name: &str, set: &[Sample<T>], hw: (usize, usize)) -> Result<()> {
    if set.is_empty() {
        return Err(Error::Parameter(format!("{name} set is empty")));
    }
    for (i, s) in set.iter().enumerate() {
        if s.image.dim() != hw || s.mask.dim() != hw {
            return Err(Error::Shape(format!(
                "{name} sample {i}: image {:?} / mask {:?}, network expects {hw:?}",
                s.image.dim(),
                s.mask.dim()
            )));
        }
    }
    Ok(())
}

/// Trains `net` in place and leaves it holding the parameters of the best
/// validation epoch.
pub fn train_network<T: Scalar>(
    net: &mut UNet<T>,
    train_set: &[Sample<T>],
    val_set: &[Sample<T>],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let hw = net.config().input_hw;
    check_set("training", train_set, hw)?;
    check_set("validation", val_set, hw)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    rng.set_stream(2);
    let mut opt = Adam::<T>::new(cfg.lr, cfg.beta1);
    let baseline = mean_dice(net, val_set, cfg.batch_size)?;
    let mut sched = PlateauSchedule::new(
        cfg.lr,
        cfg.lr_drop_factor,
        cfg.lr_patience_epochs,
        cfg.early_stop_epochs,
        baseline,
    );
    let mut best = snapshot(net);
    let mut history = Vec::new();
    let mut stopped_early = false;
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let lr = sched.lr;
        opt.lr = lr;
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let (x, t) = batch_tensors(train_set, chunk)?;
            net.zero_grad();
            let y = net.forward(&x, Mode::Train)?;
            let (loss, grad) = dice_loss(&y, &t)?;
            net.backward(&grad)?;
            opt.step(&mut net.params_mut())?;
            loss_sum += loss.as_f64() * chunk.len() as f64;
        }
        net.clear_cache();
        let train_loss = loss_sum / train_set.len() as f64;
        if !train_loss.is_finite() {
            return Err(Error::Numerical(format!("training loss diverged at epoch {epoch}")));
        }
        let val_dice = mean_dice(net, val_set, cfg.batch_size)?;
        let (improved, action) = sched.observe(epoch, val_dice);
        if improved {
            best = snapshot(net);
        }
        let rec = EpochRecord {
            epoch,
            train_loss,
            val_dice,
            lr,
        };
        on_epoch(&rec);
        history.push(rec);
        if action == ScheduleAction::Stop {
            stopped_early = true;
            break;
        }
    }
    restore(net, &best);
    Ok(TrainOutcome {
        history,
        baseline_val_dice: baseline,
        best_epoch: sched.best_epoch,
        best_val_dice: sched.best,
        stopped_early,
    })
}

/// Builds a fresh network from `net_cfg` and trains it.
pub fn train<T: Scalar>(
    train_set: &[Sample<T>],
    val_set: &[Sample<T>],
    net_cfg: &NetworkConfig,
    cfg: &TrainConfig,
) -> Result<(UNet<T>, TrainOutcome)> {
    let mut net = UNet::new(net_cfg.clone(), cfg.rng_seed)?;
    let outcome = train_network(&mut net, train_set, val_set, cfg, |_| {})?;
    Ok((net, outcome))
}

pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut s = String::from("epoch,train_loss,val_dice,lr\n");
    for r in history {
        let _ = writeln!(s, "{},{},{},{}", r.epoch, r.train_loss, r.val_dice, r.lr);
    }
    s
}

pub fn write_history_csv(path: impl AsRef<Path>, history: &[EpochRecord]) -> Result<()> {
    std::fs::write(path, history_csv(history))?;
    Ok(())
}
