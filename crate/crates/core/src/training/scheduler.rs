use super::config::SchedulerConfig;

/// Halves the learning rate when the monitored loss has not improved by a
/// relative margin for `patience` consecutive epochs.
#[derive(Clone, Debug, PartialEq)]
pub struct PlateauScheduler {
    cfg: SchedulerConfig,
    best: f64,
    bad_epochs: usize,
}

impl PlateauScheduler {
    pub fn new(cfg: SchedulerConfig) -> Self {
        Self {
            cfg,
            best: f64::INFINITY,
            bad_epochs: 0,
        }
    }

    pub fn step(&mut self, lr: f64, loss: f64) -> f64 {
        if loss < self.best * (1.0 - self.cfg.threshold) {
            self.best = loss;
            self.bad_epochs = 0;
            return lr;
        }
        self.bad_epochs += 1;
        if self.bad_epochs >= self.cfg.patience {
            self.bad_epochs = 0;
            return (lr * self.cfg.factor).max(self.cfg.min_lr).min(lr);
        }
        lr
    }
}

/// Learning rate after replaying `history` through a fresh scheduler.
pub fn scheduler_step(lr: f64, history: &[f64]) -> f64 {
    scheduler_step_with(lr, history, SchedulerConfig::default())
}

pub fn scheduler_step_with(lr: f64, history: &[f64], cfg: SchedulerConfig) -> f64 {
    let mut s = PlateauScheduler::new(cfg);
    history.iter().fold(lr, |lr, &l| s.step(lr, l))
}
