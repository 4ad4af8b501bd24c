// Copyright 2026 The omega-search Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Histogram-based, leaf-wise boosting with Newton leaf values and
//! validation early stopping. Single-threaded and deterministic for a fixed
//! seed.

use log::debug;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{logit, sigmoid, GbdtModel, Node, TrainConfig, Tree, TrainingRecord};
use crate::error::{Error, Result};
use crate::trajectory::FEATURE_NAMES;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    pub train_size: usize,
    pub valid_size: usize,
    /// Rounds boosted before stopping, including the ones discarded.
    pub rounds_run: usize,
    /// Trees kept in the returned model.
    pub best_round: usize,
    pub stopped_early: bool,
    /// Mean log-loss on the training rows; entry 0 is the constant model.
    pub train_loss: Vec<f64>,
    pub valid_loss: Vec<f64>,
}

impl TrainReport {
    pub fn best_valid_loss(&self) -> Option<f64> {
        self.valid_loss.get(self.best_round).copied()
    }
}

pub fn train(records: &[TrainingRecord], config: &TrainConfig) -> Result<GbdtModel> {
    train_with_report(records, config).map(|(m, _)| m)
}

pub fn train_with_report(
    records: &[TrainingRecord],
    config: &TrainConfig,
) -> Result<(GbdtModel, TrainReport)> {
    let x: Vec<Vec<f64>> = records.iter().map(|r| r.features.to_array().to_vec()).collect();
    let y: Vec<bool> = records.iter().map(|r| r.label).collect();
    let names = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    train_dense(&x, &y, names, config)
}

/// softplus(s) - y*s, the logistic loss written on the raw score.
#[inline]
fn log_loss(score: f64, label: bool) -> f64 {
    let sp = if score > 0.0 {
        score + (-score).exp().ln_1p()
    } else {
        score.exp().ln_1p()
    };
    sp - if label { score } else { 0.0 }
}

fn mean_loss(scores: &[f64], labels: &[bool]) -> f64 {
    if scores.is_empty() {
        return f64::NAN;
    }
    scores.iter().zip(labels).map(|(&s, &y)| log_loss(s, y)).sum::<f64>() / scores.len() as f64
}

/// Per-feature cut points; value `x` falls in bin `#{cuts < x}`.
fn make_cuts(column: &mut [f64], max_bins: usize) -> Vec<f64> {
    column.sort_by(f64::total_cmp);
    let mut distinct = column.to_vec();
    distinct.dedup();
    if distinct.len() <= max_bins {
        distinct.pop();
        return distinct;
    }
    let n = column.len();
    let mut cuts: Vec<f64> = (1..max_bins).map(|q| column[q * n / max_bins]).collect();
    cuts.dedup();
    if cuts.last() == column.last() {
        cuts.pop();
    }
    cuts
}

#[derive(Clone, Copy, Default)]
struct Bin {
    g: f64,
    h: f64,
    n: u32,
}

struct Split {
    gain: f64,
    feature: usize,
    bin: usize,
}

struct Leaf {
    node: usize,
    rows: Vec<u32>,
    hist: Vec<Bin>,
    g: f64,
    h: f64,
    best: Option<Split>,
}

struct Grower<'a> {
    bins: &'a [Vec<u8>],
    cuts: &'a [Vec<f64>],
    offsets: Vec<usize>,
    total_bins: usize,
    grad: &'a [f64],
    hess: &'a [f64],
    cfg: &'a TrainConfig,
}

impl Grower<'_> {
    fn histogram(&self, rows: &[u32]) -> Vec<Bin> {
        let mut hist = vec![Bin::default(); self.total_bins];
        for (f, col) in self.bins.iter().enumerate() {
            let base = self.offsets[f];
            for &r in rows {
                let b = &mut hist[base + col[r as usize] as usize];
                b.g += self.grad[r as usize];
                b.h += self.hess[r as usize];
                b.n += 1;
            }
        }
        hist
    }

    fn score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.cfg.l2_reg)
    }

    fn best_split(&self, hist: &[Bin], g: f64, h: f64, n: usize) -> Option<Split> {
        let min = self.cfg.min_samples_per_leaf;
        if n < 2 * min {
            return None;
        }
        let parent = self.score(g, h);
        let mut best: Option<Split> = None;
        for f in 0..self.bins.len() {
            let nb = self.cuts[f].len() + 1;
            let base = self.offsets[f];
            let (mut gl, mut hl, mut nl) = (0.0, 0.0, 0usize);
            for b in 0..nb - 1 {
                let bin = hist[base + b];
                gl += bin.g;
                hl += bin.h;
                nl += bin.n as usize;
                if nl < min {
                    continue;
                }
                if n - nl < min {
                    break;
                }
                let gain = self.score(gl, hl) + self.score(g - gl, h - hl) - parent;
                if gain > 1e-12 && best.as_ref().is_none_or(|s| gain > s.gain) {
                    best = Some(Split {
                        gain,
                        feature: f,
                        bin: b,
                    });
                }
            }
        }
        best
    }

    fn leaf(&self, node: usize, rows: Vec<u32>, hist: Vec<Bin>) -> Leaf {
        let g: f64 = rows.iter().map(|&r| self.grad[r as usize]).sum();
        let h: f64 = rows.iter().map(|&r| self.hess[r as usize]).sum();
        let best = self.best_split(&hist, g, h, rows.len());
        Leaf {
            node,
            rows,
            hist,
            g,
            h,
            best,
        }
    }

    /// Grows one tree; returns it with the leaf value of every training row.
    fn grow(&self, n_rows: usize) -> (Tree, Vec<f64>) {
        let rows: Vec<u32> = (0..n_rows as u32).collect();
        let hist = self.histogram(&rows);
        let mut nodes = vec![Node::Leaf { value: 0.0 }];
        let mut leaves = vec![self.leaf(0, rows, hist)];
        while leaves.len() < self.cfg.max_leaves {
            let pick = leaves
                .iter()
                .enumerate()
                .filter_map(|(i, l)| l.best.as_ref().map(|s| (i, s.gain)))
                .fold(None::<(usize, f64)>, |acc, (i, g)| match acc {
                    Some((_, bg)) if bg >= g => acc,
                    _ => Some((i, g)),
                });
            let Some((i, _)) = pick else { break };
            let parent = leaves.swap_remove(i);
            let split = parent.best.expect("picked leaf has a split");
            let col = &self.bins[split.feature];
            let (left, right): (Vec<u32>, Vec<u32>) = parent
                .rows
                .iter()
                .partition(|&&r| (col[r as usize] as usize) <= split.bin);
            let small_is_left = left.len() <= right.len();
            let small_hist = self.histogram(if small_is_left { &left } else { &right });
            let large_hist: Vec<Bin> = parent
                .hist
                .iter()
                .zip(&small_hist)
                .map(|(p, s)| Bin {
                    g: p.g - s.g,
                    h: p.h - s.h,
                    n: p.n - s.n,
                })
                .collect();
            let (lh, rh) = if small_is_left {
                (small_hist, large_hist)
            } else {
                (large_hist, small_hist)
            };
            let li = nodes.len();
            nodes.push(Node::Leaf { value: 0.0 });
            nodes.push(Node::Leaf { value: 0.0 });
            nodes[parent.node] = Node::Split {
                feature: split.feature as u32,
                threshold: self.cuts[split.feature][split.bin],
                left: li as u32,
                right: li as u32 + 1,
            };
            leaves.push(self.leaf(li, left, lh));
            leaves.push(self.leaf(li + 1, right, rh));
        }
        let mut row_values = vec![0.0; n_rows];
        for leaf in &leaves {
            let value = -leaf.g / (leaf.h + self.cfg.l2_reg);
            nodes[leaf.node] = Node::Leaf { value };
            for &r in &leaf.rows {
                row_values[r as usize] = value;
            }
        }
        (Tree { nodes }, row_values)
    }
}

/// Trains on dense rows. `names` fixes the model's feature order and arity.
pub fn train_dense(
    x: &[Vec<f64>],
    y: &[bool],
    names: Vec<String>,
    config: &TrainConfig,
) -> Result<(GbdtModel, TrainReport)> {
    config.validate()?;
    if x.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if x.len() != y.len() {
        return Err(Error::InvalidParameter(format!(
            "{} feature rows but {} labels",
            x.len(),
            y.len()
        )));
    }
    let arity = names.len();
    if let Some(bad) = x.iter().find(|r| r.len() != arity) {
        return Err(Error::ArityMismatch {
            expected: arity,
            found: bad.len(),
        });
    }

    let mut order: Vec<usize> = (0..x.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));
    let n_valid = if x.len() < 2 {
        0
    } else {
        ((x.len() as f64 * config.validation_fraction).round() as usize).clamp(1, x.len() - 1)
    };
    let (valid_idx, train_idx) = order.split_at(n_valid);
    let train_y: Vec<bool> = train_idx.iter().map(|&i| y[i]).collect();
    let valid_y: Vec<bool> = valid_idx.iter().map(|&i| y[i]).collect();
    let pos_rate = train_y.iter().filter(|&&b| b).count() as f64 / train_y.len() as f64;
    let base = logit(pos_rate);
    let mut model = GbdtModel::with_features(base, config.learning_rate, names);
    let mut report = TrainReport {
        train_size: train_idx.len(),
        valid_size: valid_idx.len(),
        ..Default::default()
    };

    let mut train_scores = vec![base; train_idx.len()];
    let mut valid_scores = vec![base; valid_idx.len()];
    report.train_loss.push(mean_loss(&train_scores, &train_y));
    report.valid_loss.push(mean_loss(&valid_scores, &valid_y));
    if pos_rate == 0.0 || pos_rate == 1.0 {
        debug!("single-class training set, returning constant model");
        return Ok((model, report));
    }

    let cuts: Vec<Vec<f64>> = (0..arity)
        .map(|f| {
            let mut col: Vec<f64> = train_idx.iter().map(|&i| x[i][f]).collect();
            make_cuts(&mut col, config.max_bins)
        })
        .collect();
    let bins: Vec<Vec<u8>> = cuts
        .iter()
        .enumerate()
        .map(|(f, c)| {
            train_idx
                .iter()
                .map(|&i| c.partition_point(|&cut| cut < x[i][f]) as u8)
                .collect()
        })
        .collect();
    let mut offsets = Vec::with_capacity(arity);
    let mut total_bins = 0;
    for c in &cuts {
        offsets.push(total_bins);
        total_bins += c.len() + 1;
    }

    let mut grad = vec![0.0; train_idx.len()];
    let mut hess = vec![0.0; train_idx.len()];
    let mut best_loss = report.valid_loss[0];
    let mut stale = 0;
    for round in 1..=config.max_rounds {
        for (i, (&s, &label)) in train_scores.iter().zip(&train_y).enumerate() {
            let p = sigmoid(s);
            grad[i] = p - if label { 1.0 } else { 0.0 };
            hess[i] = (p * (1.0 - p)).max(1e-16);
        }
        let grower = Grower {
            bins: &bins,
            cuts: &cuts,
            offsets: offsets.clone(),
            total_bins,
            grad: &grad,
            hess: &hess,
            cfg: config,
        };
        let (tree, row_values) = grower.grow(train_idx.len());
        for (s, v) in train_scores.iter_mut().zip(&row_values) {
            *s += config.learning_rate * v;
        }
        for (s, &i) in valid_scores.iter_mut().zip(valid_idx) {
            *s += config.learning_rate * tree.eval(&x[i]);
        }
        model.trees.push(tree);
        report.rounds_run = round;
        report.train_loss.push(mean_loss(&train_scores, &train_y));
        let vl = mean_loss(&valid_scores, &valid_y);
        report.valid_loss.push(vl);
        if n_valid == 0 {
            report.best_round = round;
            continue;
        }
        if vl < best_loss - config.early_stop_tolerance {
            best_loss = vl;
            report.best_round = round;
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.early_stop_patience {
                report.stopped_early = true;
                break;
            }
        }
    }
    model.truncate(report.best_round);
    debug!(
        "boosting stopped after {} rounds, kept {} (valid loss {:?})",
        report.rounds_run,
        report.best_round,
        report.best_valid_loss()
    );
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{FeatureVector, FEATURE_COUNT};
    use rand::Rng;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    fn threshold_task(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen::<f64>()]).collect();
        let y = x.iter().map(|r| r[0] > 0.5).collect();
        (x, y)
    }

    #[test]
    fn empty_set_is_an_error() {
        assert!(matches!(
            train_dense(&[], &[], names(1), &TrainConfig::default()),
            Err(Error::EmptyTrainingSet)
        ));
    }

    #[test]
    fn all_positive_saturates() {
        let recs: Vec<TrainingRecord> = (0..50)
            .map(|i| TrainingRecord {
                features: FeatureVector::from_array([i as f64; FEATURE_COUNT]),
                label: true,
            })
            .collect();
        let m = train(&recs, &TrainConfig::default()).unwrap();
        assert!(m.trees().is_empty());
        for v in [-1e9, 0.0, 3.0, 1e9] {
            assert!(m.predict(&[v; FEATURE_COUNT]).unwrap() >= 0.99);
        }
    }

    #[test]
    fn learns_threshold() {
        let (x, y) = threshold_task(10_000, 1);
        let (m, _) = train_dense(&x, &y, names(1), &TrainConfig::default()).unwrap();
        let (tx, ty) = threshold_task(5_000, 2);
        let correct = tx
            .iter()
            .zip(&ty)
            .filter(|(r, &l)| (m.predict(r).unwrap() >= 0.5) == l)
            .count();
        let acc = correct as f64 / tx.len() as f64;
        assert!(acc >= 0.99, "accuracy {acc}");
    }

    #[test]
    fn training_loss_nonincreasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<Vec<f64>> = (0..3_000).map(|_| vec![rng.gen(), rng.gen(), rng.gen()]).collect();
        let y: Vec<bool> = x
            .iter()
            .map(|r| r[0] + 0.5 * r[1] + 0.3 * rng.gen::<f64>() > 0.9)
            .collect();
        let cfg = TrainConfig {
            learning_rate: 0.1,
            early_stop_patience: 1000,
            max_rounds: 60,
            ..Default::default()
        };
        let (_, rep) = train_dense(&x, &y, names(3), &cfg).unwrap();
        assert_eq!(rep.train_loss.len(), 61);
        for w in rep.train_loss.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn early_stop_respects_max_rounds_and_plateau() {
        let (x, y) = threshold_task(4_000, 4);
        let cfg = TrainConfig { max_rounds: 300, learning_rate: 0.5, ..Default::default() };
        let (m, rep) = train_dense(&x, &y, names(1), &cfg).unwrap();
        assert!(rep.rounds_run <= 300);
        assert!(rep.stopped_early);
        assert_eq!(m.trees().len(), rep.best_round);
        assert!(rep.best_round < rep.rounds_run);
    }

    #[test]
    fn deterministic_for_seed() {
        let (x, y) = threshold_task(2_000, 5);
        let y: Vec<bool> = y.iter().enumerate().map(|(i, &b)| b ^ (i % 7 == 0)).collect();
        let cfg = TrainConfig::default();
        let (a, _) = train_dense(&x, &y, names(1), &cfg).unwrap();
        let (b, _) = train_dense(&x, &y, names(1), &cfg).unwrap();
        assert_eq!(a.to_bytes(), b.to_bytes());
    }

    #[test]
    fn trees_respect_leaf_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x: Vec<Vec<f64>> = (0..2_000).map(|_| vec![rng.gen(), rng.gen()]).collect();
        let y: Vec<bool> = x.iter().map(|r| (r[0] * 10.0) as u32 % 2 == (r[1] > 0.3) as u32).collect();
        let cfg = TrainConfig { max_leaves: 7, min_samples_per_leaf: 50, ..Default::default() };
        let (m, _) = train_dense(&x, &y, names(2), &cfg).unwrap();
        assert!(!m.trees().is_empty());
        assert!(m.trees().iter().all(|t| t.num_leaves() <= 7));
    }

    #[test]
    fn cuts_cover_few_distinct_values() {
        let mut col = vec![3.0, 1.0, 2.0, 1.0, 3.0];
        assert_eq!(make_cuts(&mut col, 255), vec![1.0, 2.0]);
        let mut many: Vec<f64> = (0..1000).map(f64::from).collect();
        let cuts = make_cuts(&mut many, 16);
        assert!(cuts.len() <= 15);
        assert!(cuts.windows(2).all(|w| w[0] < w[1]));
    }
}
