//! The epoch loop, evaluation and whole-model gradient checking.

use serde::{Deserialize, Serialize};

use crate::data::{minibatches, MultiViewDataset, SplitIndices};
use crate::error::{Error, Result};
use crate::model::{forward_batch, predict, FusionKind, Mode, ModelParams};
use crate::numerics::{finite_diff_check, GradCheck, Matrix, Rng, Stream, Tape};
use crate::training::adam::{AdamConfig, AdamState};
use crate::training::objective::{total_loss, ObjectiveConfig};
use crate::training::schedule::{Plateau, ScheduleConfig};

/// Rows evaluated per forward pass outside training.
const EVAL_CHUNK: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub dropout: f64,
    pub objective: ObjectiveConfig,
    pub schedule: ScheduleConfig,
    pub adam: AdamConfig,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            epochs: 200,
            batch_size: 16,
            dropout: 0.5,
            objective: ObjectiveConfig::default(),
            schedule: ScheduleConfig::default(),
            adam: AdamConfig::default(),
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self, kind: FusionKind) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("batch size must be at least 1"));
        }
        crate::numerics::ops::check_dropout_rate(self.dropout)?;
        self.objective.validate(kind)?;
        self.schedule.validate()?;
        self.adam.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_total_loss: f64,
    pub train_ce: f64,
    /// Mean unweighted penalty; zero for the baselines.
    pub train_penalty: f64,
    pub val_acc: f64,
    pub test_acc: f64,
    /// Rate used during this epoch.
    pub lr: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Snapshot with the best validation accuracy, earliest on ties.
    pub model: ModelParams,
    pub curves: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
}

/// Rows of a dataset gathered into per-view matrices.
#[derive(Clone, Debug)]
pub struct Subset {
    pub views: Vec<Matrix>,
    pub labels: Vec<usize>,
}

impl Subset {
    pub fn new(ds: &MultiViewDataset, indices: &[usize], what: &str) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::config(format!("the {what} split is empty")));
        }
        let (views, labels) = ds.gather(indices);
        Ok(Subset { views, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn rows(&self, rows: &[usize]) -> (Vec<Matrix>, Vec<usize>) {
        let views = self.views.iter().map(|m| select_rows(m, rows)).collect();
        (views, rows.iter().map(|&r| self.labels[r]).collect())
    }
}

fn select_rows(m: &Matrix, rows: &[usize]) -> Matrix {
    let mut data = Vec::with_capacity(rows.len() * m.cols());
    for &r in rows {
        data.extend_from_slice(m.row(r));
    }
    Matrix::new(rows.len(), m.cols(), data).expect("non-empty row selection")
}

/// Accuracy and mean objective of `model` on `subset` in evaluation mode.
pub fn assess(model: &ModelParams, subset: &Subset, objective: &ObjectiveConfig) -> Result<(f64, f64)> {
    let kind = model.fusion.kind();
    let all: Vec<usize> = (0..subset.len()).collect();
    let mut correct = 0usize;
    let mut loss = 0.0;
    for chunk in all.chunks(EVAL_CHUNK) {
        let (views, labels) = subset.rows(chunk);
        let mut tape = Tape::new();
        let bound = model.bind(&mut tape);
        let out = forward_batch(&mut tape, model, &bound, &views, &mut Mode::Eval)?;
        let nodes = total_loss(&mut tape, &out, &labels, kind, objective)?;
        loss += tape.value(nodes.total).get(0, 0) * chunk.len() as f64;
        let probs = tape.value(out.probs);
        correct += labels.iter().enumerate().filter(|&(i, &y)| predict(probs.row(i)) == y).count();
    }
    let n = subset.len() as f64;
    Ok((correct as f64 / n, loss / n))
}

/// Fraction of `indices` classified correctly.
pub fn evaluate(model: &ModelParams, ds: &MultiViewDataset, indices: &[usize]) -> Result<f64> {
    let subset = Subset::new(ds, indices, "evaluation")?;
    model.check_view_dims(&ds.view_dims())?;
    let (acc, _) = assess(model, &subset, &ObjectiveConfig { lambda: 0.0 })?;
    Ok(acc)
}

/// Trains `model` on `split.train`, selecting the epoch by validation
/// accuracy. Deterministic in (`ds`, `split`, `cfg`, `seed`).
pub fn train(
    model: ModelParams,
    ds: &MultiViewDataset,
    split: &SplitIndices,
    cfg: &TrainingConfig,
    seed: u64,
) -> Result<TrainOutcome> {
    let kind = model.fusion.kind();
    cfg.validate(kind)?;
    model.check_view_dims(&ds.view_dims())?;
    let train_set = Subset::new(ds, &split.train, "training")?;
    let val_set = Subset::new(ds, &split.validation, "validation")?;
    let test_set = Subset::new(ds, &split.test, "test")?;

    let mut shuffle_rng = Rng::stream(seed, Stream::Shuffle);
    let mut dropout_rng = Rng::stream(seed, Stream::Dropout);
    let mut opt = AdamState::new(&model.tensors(), cfg.adam);
    let mut schedule = Plateau::new(cfg.schedule);

    let mut model = model;
    let mut best = model.clone();
    let mut best_acc = f64::NEG_INFINITY;
    let mut best_epoch = None;
    let mut curves = Vec::with_capacity(cfg.epochs);
    let positions: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=cfg.epochs {
        let lr = schedule.lr();
        let (mut total, mut ce, mut penalty) = (0.0, 0.0, 0.0);
        for batch in minibatches(&positions, cfg.batch_size, &mut shuffle_rng)? {
            let (views, labels) = train_set.rows(&batch);
            let mut tape = Tape::new();
            let bound = model.bind(&mut tape);
            let mut mode = Mode::Train {
                dropout: cfg.dropout,
                rng: &mut dropout_rng,
            };
            let out = forward_batch(&mut tape, &model, &bound, &views, &mut mode)?;
            let nodes = total_loss(&mut tape, &out, &labels, kind, &cfg.objective)?;
            let w = batch.len() as f64;
            total += tape.value(nodes.total).get(0, 0) * w;
            ce += tape.value(nodes.cross_entropy).get(0, 0) * w;
            if kind == FusionKind::SelfAttention {
                penalty += nodes.penalty.map_or(0.0, |p| tape.value(p).get(0, 0)) * w;
            }
            let mut grads = tape.backward(nodes.total)?;
            let g: Vec<Matrix> = bound.ids().iter().map(|&id| grads.take(id)).collect();
            opt.step(&mut model.tensors_mut(), &g, lr)?;
        }
        let n = train_set.len() as f64;
        let (val_acc, val_loss) = assess(&model, &val_set, &cfg.objective)?;
        let (test_acc, _) = assess(&model, &test_set, &cfg.objective)?;
        schedule.observe(val_loss);
        if val_acc > best_acc {
            best_acc = val_acc;
            best_epoch = Some(epoch);
            best = model.clone();
        }
        let record = EpochRecord {
            epoch,
            train_total_loss: total / n,
            train_ce: ce / n,
            train_penalty: penalty / n,
            val_acc,
            test_acc,
            lr,
        };
        log::debug!("{record:?}");
        curves.push(record);
    }

    Ok(TrainOutcome {
        model: best,
        curves,
        best_epoch,
    })
}

/// Finite-difference check of the full objective (evaluation mode) with
/// respect to every parameter tensor of `model`.
pub fn check_gradients(
    model: &ModelParams,
    views: &[Matrix],
    labels: &[usize],
    objective: &ObjectiveConfig,
    eps: f64,
) -> Result<GradCheck> {
    let kind = model.fusion.kind();
    let loss_of = |m: &ModelParams| -> Result<(f64, Vec<Matrix>)> {
        let mut tape = Tape::new();
        let bound = m.bind(&mut tape);
        let out = forward_batch(&mut tape, m, &bound, views, &mut Mode::Eval)?;
        let nodes = total_loss(&mut tape, &out, labels, kind, objective)?;
        let mut grads = tape.backward(nodes.total)?;
        let g = bound.ids().iter().map(|&id| grads.take(id)).collect();
        Ok((tape.value(nodes.total).get(0, 0), g))
    };
    let (_, analytic) = loss_of(model)?;
    let params: Vec<Matrix> = model.tensors().into_iter().cloned().collect();
    let mut work = model.clone();
    finite_diff_check(
        |p| {
            work.set_tensors(p)?;
            Ok(loss_of(&work)?.0)
        },
        &params,
        &analytic,
        crate::numerics::gradcheck::DEFAULT_EPS.max(eps),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{split, View};
    use crate::model::Architecture;

    fn arch(kind: FusionKind, dims: &[usize], classes: usize) -> Architecture {
        Architecture {
            view_dims: dims.to_vec(),
            encoder_widths: [8, 6, 4],
            fusion: kind,
            attention_units: 5,
            hops: 3,
            head_hidden: 12,
            classes,
        }
    }

    fn separable(n: usize, seed: u64) -> MultiViewDataset {
        let mut rng = Rng::new(seed);
        let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let view = |rng: &mut Rng, d: usize| {
            Matrix::from_fn(n, d, |r, c| {
                let s = if labels[r] == 1 { 1.0 } else { -1.0 };
                if c == 0 {
                    s + 0.1 * rng.normal()
                } else {
                    rng.normal()
                }
            })
        };
        let a = view(&mut rng, 3);
        let b = view(&mut rng, 2);
        MultiViewDataset::new(
            "toy",
            2,
            vec![
                View {
                    name: "a".into(),
                    features: a,
                },
                View {
                    name: "b".into(),
                    features: b,
                },
            ],
            labels,
        )
        .unwrap()
    }

    fn quick(epochs: usize) -> TrainingConfig {
        TrainingConfig {
            epochs,
            batch_size: 8,
            dropout: 0.0,
            schedule: ScheduleConfig {
                initial_lr: 1e-2,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn zero_epochs_returns_initial_model() {
        let ds = separable(40, 0);
        let s = split(&ds.labels, 2, 0).unwrap();
        let m = ModelParams::init(&arch(FusionKind::SelfAttention, &[3, 2], 2), &mut Rng::new(1)).unwrap();
        let out = train(m.clone(), &ds, &s, &quick(0), 0).unwrap();
        assert_eq!(out.model, m);
        assert!(out.curves.is_empty());
        assert_eq!(out.best_epoch, None);
    }

    #[test]
    fn separable_toy_fits_and_is_deterministic() {
        let ds = separable(80, 3);
        let mut s = split(&ds.labels, 2, 5).unwrap();
        // Selecting on the training rows makes the snapshot the first fit.
        s.validation = s.train.clone();
        for kind in crate::model::FusionKind::ALL {
            let m = ModelParams::init(&arch(kind, &[3, 2], 2), &mut Rng::new(2)).unwrap();
            let mut cfg = quick(50);
            cfg.objective = ObjectiveConfig::for_fusion(kind);
            let a = train(m.clone(), &ds, &s, &cfg, 11).unwrap();
            let b = train(m, &ds, &s, &cfg, 11).unwrap();
            assert_eq!(a.curves, b.curves);
            assert_eq!(a.model, b.model);
            assert_eq!(evaluate(&a.model, &ds, &s.train).unwrap(), 1.0, "{kind}");
            let rec = a.curves.last().unwrap();
            if kind != FusionKind::SelfAttention {
                assert_eq!(rec.train_penalty, 0.0);
                assert_eq!(rec.train_total_loss, rec.train_ce);
            }
        }
    }

    #[test]
    fn zero_head_predicts_class_zero() {
        let ds = separable(30, 1);
        let mut m = ModelParams::init(&arch(FusionKind::MeanPool, &[3, 2], 2), &mut Rng::new(0)).unwrap();
        m.head.output.weight = Matrix::zeros(12, 2);
        m.head.output.bias = Matrix::zeros(1, 2);
        let idx: Vec<usize> = (0..30).collect();
        let freq0 = ds.labels.iter().filter(|&&y| y == 0).count() as f64 / 30.0;
        assert_eq!(evaluate(&m, &ds, &idx).unwrap(), freq0);
        let mut rev = idx.clone();
        rev.reverse();
        let m = ModelParams::init(&arch(FusionKind::MaxPool, &[3, 2], 2), &mut Rng::new(0)).unwrap();
        assert_eq!(evaluate(&m, &ds, &idx).unwrap(), evaluate(&m, &ds, &rev).unwrap());
        assert!(evaluate(&m, &ds, &[]).is_err());
    }

    #[test]
    fn invalid_configs() {
        let ds = separable(30, 1);
        let s = split(&ds.labels, 2, 0).unwrap();
        let m = ModelParams::init(&arch(FusionKind::MaxPool, &[3, 2], 2), &mut Rng::new(0)).unwrap();
        let mut cfg = quick(1);
        assert!(train(m.clone(), &ds, &s, &cfg, 0).is_err(), "lambda with a baseline");
        cfg.objective.lambda = 0.0;
        cfg.batch_size = 0;
        assert!(train(m.clone(), &ds, &s, &cfg, 0).is_err());
        cfg.batch_size = 4;
        let empty = SplitIndices {
            train: s.train.clone(),
            validation: vec![],
            test: s.test.clone(),
        };
        assert!(train(m, &ds, &empty, &cfg, 0).is_err());
    }

    fn random_batch(a: &Architecture, n: usize, seed: u64) -> (ModelParams, Vec<Matrix>, Vec<usize>) {
        let mut rng = Rng::new(seed);
        let mut m = ModelParams::init(a, &mut rng).unwrap();
        for t in m.tensors_mut() {
            for x in t.as_mut_slice() {
                *x += rng.uniform(-0.3, 0.3);
            }
        }
        let views = a.view_dims.iter().map(|&d| Matrix::from_fn(n, d, |_, _| rng.normal())).collect();
        let labels = (0..n).map(|i| i % a.classes).collect();
        (m, views, labels)
    }

    #[test]
    fn full_objective_gradients() {
        for kind in FusionKind::ALL {
            let a = arch(kind, &[5, 7, 9], 4);
            let (m, views, labels) = random_batch(&a, 4, 7);
            let check = check_gradients(&m, &views, &labels, &ObjectiveConfig::for_fusion(kind), 1e-5).unwrap();
            assert!(check.max_rel_error < 1e-4, "{kind}: {:?}", check.per_tensor);
        }
    }

    #[test]
    fn penalty_gradient_reaches_ws2() {
        let a = arch(FusionKind::SelfAttention, &[5, 7, 9], 4);
        let (m, views, labels) = random_batch(&a, 4, 3);
        let grad_ws2 = |lambda: f64| {
            let mut tape = Tape::new();
            let bound = m.bind(&mut tape);
            let out = forward_batch(&mut tape, &m, &bound, &views, &mut Mode::Eval).unwrap();
            let nodes = total_loss(&mut tape, &out, &labels, FusionKind::SelfAttention, &ObjectiveConfig { lambda }).unwrap();
            let grads = tape.backward(nodes.total).unwrap();
            // Encoder tensors come first: V·3 layers × (W, b), then W_s1, W_s2.
            grads.wrt(bound.ids()[3 * 3 * 2 + 1])
        };
        let diff = grad_ws2(1e-4).sub(&grad_ws2(0.0)).unwrap();
        assert!(diff.sum_squares() > 0.0);
    }
}
