//! Minimal dense feedforward regressor with explicit forward/backward
//! passes. The penultimate activation is the feature vector the regularizer
//! consumes; its gradient is injected through a dedicated upstream port in
//! [`RegressorNet::backward`] alongside the prediction gradient.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use rand::Rng;

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }
}

/// One affine layer, weights stored row-major as `out x in`.
#[derive(Debug, Clone)]
struct Layer {
    in_dim: usize,
    out_dim: usize,
    weight: Vec<f64>,
    bias: Vec<f64>,
}

impl Layer {
    fn uniform_init<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, limit: f64, rng: &mut R) -> Self {
        let weight = (0..in_dim * out_dim)
            .map(|_| rng.gen_range(-limit..limit))
            .collect();
        Self {
            in_dim,
            out_dim,
            weight,
            bias: vec![0.0; out_dim],
        }
    }

    fn apply(&self, input: &Matrix) -> Matrix {
        let m = input.rows();
        let mut out = Matrix::zeros(m, self.out_dim);
        for i in 0..m {
            let x = input.row(i);
            let y = out.row_mut(i);
            for o in 0..self.out_dim {
                let w = &self.weight[o * self.in_dim..(o + 1) * self.in_dim];
                let mut acc = self.bias[o];
                for k in 0..self.in_dim {
                    acc += w[k] * x[k];
                }
                y[o] = acc;
            }
        }
        out
    }

    /// Returns (weight grad, bias grad, input grad) for output grad `delta`.
    fn backward(&self, input: &Matrix, delta: &Matrix) -> (Vec<f64>, Vec<f64>, Matrix) {
        let m = input.rows();
        let mut dw = vec![0.0; self.weight.len()];
        let mut db = vec![0.0; self.out_dim];
        let mut dx = Matrix::zeros(m, self.in_dim);
        for i in 0..m {
            let x = input.row(i);
            let d = delta.row(i);
            for o in 0..self.out_dim {
                let g = d[o];
                if g == 0.0 {
                    continue;
                }
                db[o] += g;
                let w_row = &self.weight[o * self.in_dim..(o + 1) * self.in_dim];
                let dw_row = &mut dw[o * self.in_dim..(o + 1) * self.in_dim];
                let dx_row = dx.row_mut(i);
                for k in 0..self.in_dim {
                    dw_row[k] += g * x[k];
                    dx_row[k] += g * w_row[k];
                }
            }
        }
        (dw, db, dx)
    }
}

/// Architecture of the regressor: input width and hidden widths. The feature
/// dimension equals the last hidden width; the output head is scalar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetConfig {
    pub input_dim: usize,
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
}

fn default_hidden() -> Vec<usize> {
    vec![64, 64]
}

impl NetConfig {
    pub fn new(input_dim: usize) -> Self {
        Self {
            input_dim,
            hidden: default_hidden(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::InvalidConfig("input_dim must be positive".into()));
        }
        if self.hidden.is_empty() || self.hidden.iter().any(|&h| h == 0) {
            return Err(Error::InvalidConfig(
                "hidden widths must be nonempty and positive".into(),
            ));
        }
        Ok(())
    }
}

/// ReLU MLP with a scalar linear head.
#[derive(Debug, Clone)]
pub struct RegressorNet {
    config: NetConfig,
    hidden: Vec<Layer>,
    head: Layer,
}

/// Cached activations from one forward pass, consumed by `backward`.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    input: Matrix,
    /// Pre-activation values per hidden layer.
    pre: Vec<Matrix>,
    /// Post-ReLU values per hidden layer; the last one is the feature matrix.
    post: Vec<Matrix>,
    pub predictions: Vec<f64>,
}

impl ForwardPass {
    /// Post-activation values of the last hidden layer.
    pub fn features(&self) -> &Matrix {
        self.post.last().expect("at least one hidden layer")
    }

    pub fn batch_size(&self) -> usize {
        self.input.rows()
    }
}

/// Loss gradients entering the network from above. Either port may be absent.
#[derive(Debug, Clone, Copy, Default)]
pub struct Upstream<'a> {
    /// dL/d(predictions), length = batch size.
    pub prediction_grad: Option<&'a [f64]>,
    /// dL/d(features), batch size x feature dim.
    pub feature_grad: Option<&'a Matrix>,
}

/// Parameter gradients in the same tensor order as
/// [`RegressorNet::parameter_tensors`].
#[derive(Debug, Clone)]
pub struct Gradients {
    tensors: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn tensors(&self) -> Vec<&[f64]> {
        self.tensors.iter().map(Vec::as_slice).collect()
    }

    pub fn into_tensors(self) -> Vec<Vec<f64>> {
        self.tensors
    }
}

impl RegressorNet {
    /// He-uniform init for hidden layers, Xavier-uniform for the head.
    pub fn new<R: Rng + ?Sized>(config: NetConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let mut hidden = Vec::with_capacity(config.hidden.len());
        let mut in_dim = config.input_dim;
        for &width in &config.hidden {
            let limit = (6.0 / in_dim as f64).sqrt();
            hidden.push(Layer::uniform_init(in_dim, width, limit, rng));
            in_dim = width;
        }
        let limit = (6.0 / (in_dim + 1) as f64).sqrt();
        let head = Layer::uniform_init(in_dim, 1, limit, rng);
        Ok(Self {
            config,
            hidden,
            head,
        })
    }

    pub fn config(&self) -> &NetConfig {
        &self.config
    }

    pub fn feature_dim(&self) -> usize {
        *self.config.hidden.last().expect("validated")
    }

    pub fn forward(&self, batch: &[Vec<f64>]) -> Result<ForwardPass> {
        let input = Matrix::from_rows(batch)?;
        if input.rows() == 0 {
            return Err(Error::EmptyVector);
        }
        if input.cols() != self.config.input_dim {
            return Err(Error::DimensionMismatch(format!(
                "batch width {} does not match input_dim {}",
                input.cols(),
                self.config.input_dim
            )));
        }
        let mut pre = Vec::with_capacity(self.hidden.len());
        let mut post = Vec::with_capacity(self.hidden.len());
        let mut current = input.clone();
        for layer in &self.hidden {
            let z = layer.apply(&current);
            let mut a = z.clone();
            for v in &mut a.data {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            pre.push(z);
            current = a.clone();
            post.push(a);
        }
        let out = self.head.apply(&current);
        let predictions = (0..out.rows()).map(|i| out.get(i, 0)).collect();
        Ok(ForwardPass {
            input,
            pre,
            post,
            predictions,
        })
    }

    /// Reverse-mode gradients for all parameters, combining the prediction
    /// and feature upstream ports. ReLU subgradient at 0 is 0.
    pub fn backward(&self, fwd: &ForwardPass, upstream: Upstream) -> Result<Gradients> {
        let m = fwd.batch_size();
        if fwd.pre.len() != self.hidden.len()
            || fwd.input.cols() != self.config.input_dim
            || fwd
                .post
                .last()
                .map_or(true, |f| f.cols() != self.feature_dim())
        {
            return Err(Error::DimensionMismatch(
                "forward cache does not match this network".into(),
            ));
        }
        if let Some(pg) = upstream.prediction_grad {
            if pg.len() != m {
                return Err(Error::LengthMismatch {
                    context: "prediction gradient",
                    left: pg.len(),
                    right: m,
                });
            }
        }
        if let Some(fg) = upstream.feature_grad {
            if fg.rows() != m || fg.cols() != self.feature_dim() {
                return Err(Error::DimensionMismatch(format!(
                    "feature gradient is {}x{}, expected {}x{}",
                    fg.rows(),
                    fg.cols(),
                    m,
                    self.feature_dim()
                )));
            }
        }

        // Head backward from the prediction port.
        let features = fwd.features();
        let mut head_dw = vec![0.0; self.head.weight.len()];
        let mut head_db = vec![0.0; 1];
        let mut dfeat = Matrix::zeros(m, self.feature_dim());
        if let Some(pg) = upstream.prediction_grad {
            let delta = Matrix {
                rows: m,
                cols: 1,
                data: pg.to_vec(),
            };
            let (dw, db, dx) = self.head.backward(features, &delta);
            head_dw = dw;
            head_db = db;
            dfeat = dx;
        }
        // Inject the feature port.
        if let Some(fg) = upstream.feature_grad {
            for (acc, x) in dfeat.data.iter_mut().zip(&fg.data) {
                *acc += x;
            }
        }

        // Walk hidden layers in reverse.
        let mut layer_grads: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(self.hidden.len());
        let mut dpost = dfeat;
        for (l, layer) in self.hidden.iter().enumerate().rev() {
            let mut delta = dpost;
            for (d, z) in delta.data.iter_mut().zip(&fwd.pre[l].data) {
                if *z <= 0.0 {
                    *d = 0.0;
                }
            }
            let layer_input = if l == 0 { &fwd.input } else { &fwd.post[l - 1] };
            let (dw, db, dx) = layer.backward(layer_input, &delta);
            layer_grads.push((dw, db));
            dpost = dx;
        }
        layer_grads.reverse();

        let mut tensors = Vec::with_capacity(2 * self.hidden.len() + 2);
        for (dw, db) in layer_grads {
            tensors.push(dw);
            tensors.push(db);
        }
        tensors.push(head_dw);
        tensors.push(head_db);
        Ok(Gradients { tensors })
    }

    /// Parameter tensors in a fixed order: each hidden layer's weight then
    /// bias, then the head's weight and bias.
    pub fn parameter_tensors(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(2 * self.hidden.len() + 2);
        for layer in &self.hidden {
            out.push(layer.weight.as_slice());
            out.push(layer.bias.as_slice());
        }
        out.push(self.head.weight.as_slice());
        out.push(self.head.bias.as_slice());
        out
    }

    pub fn parameter_tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(2 * self.hidden.len() + 2);
        for layer in &mut self.hidden {
            out.push(layer.weight.as_mut_slice());
            out.push(layer.bias.as_mut_slice());
        }
        out.push(self.head.weight.as_mut_slice());
        out.push(self.head.bias.as_mut_slice());
        out
    }

    /// Indices of head tensors within [`Self::parameter_tensors`], for
    /// head-only retraining.
    pub fn head_tensor_indices(&self) -> Vec<usize> {
        vec![2 * self.hidden.len(), 2 * self.hidden.len() + 1]
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut tensors = Vec::new();
        for (l, layer) in self.hidden.iter().enumerate() {
            tensors.push(NamedTensor {
                name: format!("hidden.{l}.weight"),
                shape: vec![layer.out_dim, layer.in_dim],
                data: layer.weight.clone(),
            });
            tensors.push(NamedTensor {
                name: format!("hidden.{l}.bias"),
                shape: vec![layer.out_dim],
                data: layer.bias.clone(),
            });
        }
        tensors.push(NamedTensor {
            name: "head.weight".into(),
            shape: vec![1, self.head.in_dim],
            data: self.head.weight.clone(),
        });
        tensors.push(NamedTensor {
            name: "head.bias".into(),
            shape: vec![1],
            data: self.head.bias.clone(),
        });
        Checkpoint {
            version: CHECKPOINT_VERSION,
            config: self.config.clone(),
            tensors,
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported checkpoint version {}",
                ckpt.version
            )));
        }
        ckpt.config.validate()?;
        let mut net = {
            // shape-only init, parameters overwritten below
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
            use rand::SeedableRng;
            Self::new(ckpt.config.clone(), &mut rng)?
        };
        let expected = 2 * net.hidden.len() + 2;
        if ckpt.tensors.len() != expected {
            return Err(Error::InvalidConfig(format!(
                "checkpoint has {} tensors, expected {expected}",
                ckpt.tensors.len()
            )));
        }
        {
            let params = net.parameter_tensors_mut();
            for (slot, tensor) in params.into_iter().zip(&ckpt.tensors) {
                if slot.len() != tensor.data.len() {
                    return Err(Error::InvalidConfig(format!(
                        "tensor {} has {} values, expected {}",
                        tensor.name,
                        tensor.data.len(),
                        slot.len()
                    )));
                }
                slot.copy_from_slice(&tensor.data);
            }
        }
        Ok(net)
    }
}

pub const CHECKPOINT_VERSION: u32 = 1;

/// Version-tagged parameter snapshot: named tensors with shapes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config: NetConfig,
    pub tensors: Vec<NamedTensor>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Checkpoint {
    pub fn save_json(&self, path: &std::path::Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load_json(path: &std::path::Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }
}

/// Task loss over a batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressionLossKind {
    #[default]
    L1,
    Mse,
}

/// Weighted mean of `|e|` or `e^2` over the batch (weights multiply before
/// the mean over N) and its gradient with respect to predictions.
pub fn regression_loss(
    predictions: &[f64],
    targets: &[f64],
    weights: &[f64],
    kind: RegressionLossKind,
) -> Result<(f64, Vec<f64>)> {
    if predictions.len() != targets.len() {
        return Err(Error::LengthMismatch {
            context: "regression loss",
            left: predictions.len(),
            right: targets.len(),
        });
    }
    if predictions.len() != weights.len() {
        return Err(Error::LengthMismatch {
            context: "regression loss weights",
            left: predictions.len(),
            right: weights.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::EmptyVector);
    }
    if weights.iter().any(|&w| !(w.is_finite() && w >= 0.0)) {
        return Err(Error::InvalidConfig(
            "per-sample weights must be nonnegative".into(),
        ));
    }
    let n = predictions.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; predictions.len()];
    for i in 0..predictions.len() {
        let e = predictions[i] - targets[i];
        let w = weights[i];
        match kind {
            RegressionLossKind::L1 => {
                loss += w * e.abs();
                let sign = if e > 0.0 {
                    1.0
                } else if e < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                grad[i] = w * sign / n;
            }
            RegressionLossKind::Mse => {
                loss += w * e * e;
                grad[i] = 2.0 * w * e / n;
            }
        }
    }
    Ok((loss / n, grad))
}
