use std::fmt::Write as _;

use crate::error::{ClamError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean total loss over the epoch's training draws.
    pub train_loss: f64,
    pub train_slide_loss: f64,
    pub train_patch_loss: f64,
    /// Mean slide-level cross-entropy on the validation bags.
    pub val_loss: f64,
    pub stopped: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainingLog {
    pub records: Vec<EpochRecord>,
    pub best_epoch: usize,
}

const HEADER: &str = "epoch\ttrain_loss\ttrain_slide_loss\ttrain_patch_loss\tval_loss\tstopped";

impl TrainingLog {
    /// Tab-separated, one header line then one line per epoch; `stopped` is
    /// 0 or 1. A trailing `# best_epoch=<e>` line names the returned model.
    pub fn to_text(&self) -> String {
        let mut out = format!("{HEADER}\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                r.epoch,
                r.train_loss,
                r.train_slide_loss,
                r.train_patch_loss,
                r.val_loss,
                u8::from(r.stopped)
            );
        }
        let _ = writeln!(out, "# best_epoch={}", self.best_epoch);
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| ClamError::config(format!("training log line {line}: {msg}"));
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h == HEADER => {}
            _ => return Err(bad(1, "missing header")),
        }
        let mut log = TrainingLog::default();
        for (i, line) in lines {
            if let Some(best) = line.strip_prefix("# best_epoch=") {
                log.best_epoch = best.parse().map_err(|_| bad(i + 1, "bad best_epoch"))?;
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 6 {
                return Err(bad(i + 1, "expected 6 fields"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(i + 1, "bad number"));
            log.records.push(EpochRecord {
                epoch: f[0].parse().map_err(|_| bad(i + 1, "bad epoch"))?,
                train_loss: num(f[1])?,
                train_slide_loss: num(f[2])?,
                train_patch_loss: num(f[3])?,
                val_loss: num(f[4])?,
                stopped: f[5] == "1",
            });
        }
        Ok(log)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let log = TrainingLog {
            records: vec![
                EpochRecord {
                    epoch: 1,
                    train_loss: 0.7,
                    train_slide_loss: 0.69,
                    train_patch_loss: 0.71,
                    val_loss: 0.1 + 0.2,
                    stopped: false,
                },
                EpochRecord {
                    epoch: 2,
                    train_loss: 0.5,
                    train_slide_loss: 0.4,
                    train_patch_loss: 0.6,
                    val_loss: 0.25,
                    stopped: true,
                },
            ],
            best_epoch: 2,
        };
        let text = log.to_text();
        assert!(text.starts_with("epoch\ttrain_loss"));
        assert_eq!(TrainingLog::parse(&text).unwrap(), log);
    }
}
