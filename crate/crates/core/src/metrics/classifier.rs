use super::samples::SampleSet;
use crate::diffusion::{init_weight, Condition, LabeledSamples};
use crate::error::{Error, Result};
use crate::numerics::{log_softmax_row, Rng, Tape, Tensor};
use crate::optim::Adam;
use crate::params::Params;

const W0: &str = "clf.0.weight";
const B0: &str = "clf.0.bias";
const W1: &str = "clf.1.weight";
const B1: &str = "clf.1.bias";

/// Small tanh MLP producing class logits; frozen once trained.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionClassifier {
    params: Params,
    classes: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierConfig {
    pub hidden: usize,
    pub steps: usize,
    pub batch: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            hidden: 64,
            steps: 2000,
            batch: 128,
            lr: 1e-2,
            seed: 0,
        }
    }
}

impl ConditionClassifier {
    pub fn new(input_dim: usize, classes: usize, hidden: usize, rng: &mut Rng) -> Self {
        let mut params = Params::new();
        params.insert(W0, init_weight(rng, input_dim, hidden));
        params.insert(B0, Tensor::zeros(&[hidden]));
        params.insert(W1, init_weight(rng, hidden, classes));
        params.insert(B1, Tensor::zeros(&[classes]));
        Self { params, classes }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn params_mut(&mut self) -> &mut Params {
        &mut self.params
    }

    fn logits_on(&self, tape: &mut Tape, bind: &crate::params::Bindings, x: &Tensor) -> Result<crate::numerics::Var> {
        let xv = tape.constant(x.clone())?;
        let h = tape.matmul(xv, bind.get(W0)?)?;
        let h = tape.add(h, bind.get(B0)?)?;
        let h = tape.tanh(h)?;
        let o = tape.matmul(h, bind.get(W1)?)?;
        tape.add(o, bind.get(B1)?)
    }

    pub fn logits(&self, x: &Tensor) -> Result<Tensor> {
        let mut tape = Tape::new();
        let bind = self.params.bind(&mut tape, |_| false)?;
        let o = self.logits_on(&mut tape, &bind, x)?;
        Ok(tape.value(o).clone())
    }

    /// Row-wise log class probabilities.
    pub fn log_probs(&self, x: &Tensor) -> Result<Tensor> {
        let logits = self.logits(x)?;
        let mut data = Vec::with_capacity(logits.len());
        for r in 0..logits.rows() {
            data.extend(log_softmax_row(logits.row(r)));
        }
        Tensor::new(logits.shape().to_vec(), data)
    }

    /// Cross-entropy training with Adam; deterministic given `cfg.seed`.
    pub fn train(data: &LabeledSamples, classes: usize, cfg: &ClassifierConfig) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Config("classifier dataset is empty".into()));
        }
        let mut rng = Rng::seed_from_u64(cfg.seed);
        let mut clf = Self::new(data.x.cols(), classes, cfg.hidden, &mut rng);
        let mut adam = Adam::new(cfg.lr);
        let d = data.x.cols();
        for _ in 0..cfg.steps {
            let mut rows = Vec::with_capacity(cfg.batch * d);
            let mut onehot = vec![0.0; cfg.batch * classes];
            for b in 0..cfg.batch {
                let i = rng.uniform_int(0, data.len() - 1);
                rows.extend_from_slice(data.x.row(i));
                onehot[b * classes + data.labels[i]] = 1.0;
            }
            let x = Tensor::matrix(cfg.batch, d, rows)?;
            let mut tape = Tape::new();
            let bind = clf.params.bind(&mut tape, |_| true)?;
            let logits = clf.logits_on(&mut tape, &bind, &x)?;
            let lp = tape.log_softmax(logits)?;
            let target = tape.constant(Tensor::matrix(cfg.batch, classes, onehot)?)?;
            let picked = tape.mul(lp, target)?;
            let total = tape.sum(picked)?;
            let loss = tape.scale(total, -1.0 / cfg.batch as f64)?;
            tape.backward(loss, &Tensor::scalar(1.0))?;
            adam.step(&mut clf.params, &bind.grads(&tape))?;
        }
        Ok(clf)
    }
}

/// Mean log-probability the classifier assigns to `target` over the samples.
pub fn condition_score(a: &SampleSet, clf: &ConditionClassifier, target: Condition) -> Result<f64> {
    let Condition::Class(k) = target else {
        return Err(Error::Usage("condition score needs a class target".into()));
    };
    if k >= clf.classes() {
        return Err(Error::Usage(format!("class {k} outside 0..{}", clf.classes())));
    }
    if a.is_empty() {
        return Err(Error::Usage("condition score of an empty sample set".into()));
    }
    let lp = clf.log_probs(a.points())?;
    Ok((0..lp.rows()).map(|r| lp.get2(r, k)).sum::<f64>() / lp.rows() as f64)
}
