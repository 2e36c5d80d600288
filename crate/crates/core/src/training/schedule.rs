//! Reduce-on-plateau learning-rate schedule driven by validation loss.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_LR: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub initial_lr: f64,
    pub factor: f64,
    /// Consecutive epochs without a new best validation loss before decaying.
    pub patience: usize,
    pub min_lr: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            initial_lr: 1e-3,
            factor: 0.5,
            patience: 5,
            min_lr: MIN_LR,
        }
    }
}

impl ScheduleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_lr > 0.0) || !self.initial_lr.is_finite() {
            return Err(Error::config("learning rate must be positive"));
        }
        if !(self.factor > 0.0 && self.factor < 1.0) {
            return Err(Error::config("decay factor must lie in (0, 1)"));
        }
        if self.patience == 0 {
            return Err(Error::config("patience must be at least 1"));
        }
        if !(self.min_lr >= MIN_LR) {
            return Err(Error::config(format!("learning-rate floor must be at least {MIN_LR}")));
        }
        Ok(())
    }
}

/// Incremental form of [`lr_for_history`].
#[derive(Clone, Debug)]
pub struct Plateau {
    cfg: ScheduleConfig,
    lr: f64,
    best: f64,
    stale: usize,
}

impl Plateau {
    pub fn new(cfg: ScheduleConfig) -> Self {
        Plateau {
            cfg,
            lr: cfg.initial_lr,
            best: f64::INFINITY,
            stale: 0,
        }
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    /// Records one epoch's validation loss and returns the rate for the next.
    pub fn observe(&mut self, loss: f64) -> f64 {
        if loss < self.best {
            self.best = loss;
            self.stale = 0;
        } else {
            self.stale += 1;
            if self.stale >= self.cfg.patience {
                self.lr = (self.lr * self.cfg.factor).max(self.cfg.min_lr).min(self.lr);
                self.stale = 0;
            }
        }
        self.lr
    }
}

/// Learning rate after observing `val_losses` in order.
pub fn lr_for_history(cfg: &ScheduleConfig, val_losses: &[f64]) -> f64 {
    let mut p = Plateau::new(*cfg);
    for &l in val_losses {
        p.observe(l);
    }
    p.lr()
}
