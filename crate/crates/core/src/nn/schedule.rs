use serde::{Deserialize, Serialize};

/// Outcome of the schedule check after an epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScheduleAction {
    Continue,
    DropLr,
    Stop,
}

/// Plateau schedule on validation Dice.
///
/// Every `patience` epochs the schedule checks whether the best score
/// improved within the last `patience` epochs and multiplies the learning
/// rate by `factor` if not. Training stops once `early_stop` epochs pass
/// without improvement; stopping takes precedence over a drop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateauSchedule {
    pub lr: f64,
    pub factor: f64,
    pub patience: usize,
    pub early_stop: usize,
    pub best: f64,
    pub best_epoch: usize,
}

impl PlateauSchedule {
    /// `baseline` is the validation score before any training (epoch 0).
    pub fn new(lr: f64, factor: f64, patience: usize, early_stop: usize, baseline: f64) -> Self {
        Self {
            lr,
            factor,
            patience,
            early_stop,
            best: baseline,
            best_epoch: 0,
        }
    }

    /// Records the score of `epoch` (1-based); returns whether it improved
    /// on the best so far and the resulting action.
    pub fn observe(&mut self, epoch: usize, score: f64) -> (bool, ScheduleAction) {
        let improved = score > self.best;
        if improved {
            self.best = score;
            self.best_epoch = epoch;
        }
        let stale = epoch - self.best_epoch;
        let action = if stale >= self.early_stop {
            ScheduleAction::Stop
        } else if epoch % self.patience == 0 && stale >= self.patience {
            self.lr *= self.factor;
            ScheduleAction::DropLr
        } else {
            ScheduleAction::Continue
        };
        (improved, action)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stagnant_run_drops_every_cadence_then_stops() {
        let mut s = PlateauSchedule::new(0.01, 0.5, 4, 20, 0.3);
        let mut drops = Vec::new();
        let mut stop = None;
        for e in 1..=100 {
            match s.observe(e, 0.3).1 {
                ScheduleAction::DropLr => drops.push(e),
                ScheduleAction::Stop => {
                    stop = Some(e);
                    break;
                }
                ScheduleAction::Continue => {}
            }
        }
        assert_eq!(drops, vec![4, 8, 12, 16]);
        assert_eq!(stop, Some(20));
        assert!((s.lr - 0.01 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn improvement_resets_the_clocks() {
        let mut s = PlateauSchedule::new(1.0, 0.5, 4, 20, 0.0);
        assert_eq!(s.observe(1, 0.1), (true, ScheduleAction::Continue));
        assert_eq!(s.observe(2, 0.1).1, ScheduleAction::Continue);
        assert_eq!(s.observe(3, 0.05).1, ScheduleAction::Continue);
        // Best at epoch 1: only three stale epochs at the epoch-4 check.
        assert_eq!(s.observe(4, 0.1).1, ScheduleAction::Continue);
        assert_eq!(s.observe(8, 0.1).1, ScheduleAction::DropLr);
        assert_eq!(s.best_epoch, 1);
    }
}
