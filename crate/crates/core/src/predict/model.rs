use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ModelConfig;
use crate::error::{Error, Result};

/// Affine map `y = W x + b` with `W` stored row-major (outputs x inputs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            inputs,
            outputs,
            w: vec![0.0; inputs * outputs],
            b: vec![0.0; outputs],
        }
    }

    fn uniform(inputs: usize, outputs: usize, scale: f64, rng: &mut ChaCha8Rng) -> Self {
        let mut d = Self::zeros(inputs, outputs);
        for w in &mut d.w {
            *w = rng.gen_range(-scale..scale);
        }
        d
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.inputs);
        self.w
            .chunks_exact(self.inputs.max(1))
            .take(self.outputs)
            .zip(&self.b)
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>())
            .collect()
    }

    /// Accumulates `dW += dz xᵀ`, `db += dz`.
    fn accumulate(&self, grad: &mut Dense, x: &[f64], dz: &[f64]) {
        for (o, &g) in dz.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            grad.b[o] += g;
            let row = &mut grad.w[o * self.inputs..(o + 1) * self.inputs];
            for (w, &xi) in row.iter_mut().zip(x) {
                *w += g * xi;
            }
        }
    }

    /// `Wᵀ dz`.
    fn backprop(&self, dz: &[f64]) -> Vec<f64> {
        let mut dx = vec![0.0; self.inputs];
        for (o, &g) in dz.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            let row = &self.w[o * self.inputs..(o + 1) * self.inputs];
            for (d, &w) in dx.iter_mut().zip(row) {
                *d += g * w;
            }
        }
        dx
    }

    fn zeros_like(&self) -> Dense {
        Dense::zeros(self.inputs, self.outputs)
    }
}

/// The trainable tensors. Also used as the gradient container.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gradients {
    pub doc: Option<Dense>,
    pub profile: Option<Dense>,
    pub layers: Vec<Dense>,
}

impl Gradients {
    pub fn zeros_like(p: &Gradients) -> Gradients {
        Gradients {
            doc: p.doc.as_ref().map(Dense::zeros_like),
            profile: p.profile.as_ref().map(Dense::zeros_like),
            layers: p.layers.iter().map(Dense::zeros_like).collect(),
        }
    }

    fn denses(&self) -> impl Iterator<Item = &Dense> {
        self.doc.iter().chain(self.profile.iter()).chain(self.layers.iter())
    }

    fn denses_mut(&mut self) -> impl Iterator<Item = &mut Dense> {
        self.doc
            .iter_mut()
            .chain(self.profile.iter_mut())
            .chain(self.layers.iter_mut())
    }

    /// Flat tensors in a fixed order: doc W, b, profile W, b, then each
    /// classifier layer's W, b.
    pub fn tensors(&self) -> Vec<&Vec<f64>> {
        self.denses().flat_map(|d| [&d.w, &d.b]).collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        self.denses_mut().flat_map(|d| [&mut d.w, &mut d.b]).collect()
    }

    /// Elementwise `self += other`; shapes must match.
    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }
}

/// Pooled word-embedding vectors of a user's history documents.
pub trait HistoryDocs {
    fn docs(&self) -> &[Vec<f64>];
}

impl HistoryDocs for &[Vec<f64>] {
    fn docs(&self) -> &[Vec<f64>] {
        self
    }
}

impl HistoryDocs for Vec<Vec<f64>> {
    fn docs(&self) -> &[Vec<f64>] {
        self
    }
}

/// One weighted training instance, already pooled.
#[derive(Debug, Clone, Copy)]
pub struct TrainingExample<'a> {
    pub attributes: &'a [f64],
    pub history: &'a [Vec<f64>],
    pub profile: &'a [f64],
    pub class: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionModel {
    pub config: ModelConfig,
    pub params: Gradients,
}

struct Trace {
    /// Pooled input and tanh output per history document.
    docs: Vec<(Vec<f64>, Vec<f64>)>,
    profile_in: Vec<f64>,
    profile_out: Vec<f64>,
    /// Input to every classifier layer; the last entry is the softmax output.
    activations: Vec<Vec<f64>>,
    /// log-sum-exp of the output logits.
    log_norm: f64,
    logits: Vec<f64>,
}

fn tanh_all(mut v: Vec<f64>) -> Vec<f64> {
    v.iter_mut().for_each(|x| *x = x.tanh());
    v
}

fn softmax(logits: &[f64]) -> (Vec<f64>, f64) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|z| (z - max).exp()).sum();
    let log_norm = max + sum.ln();
    (logits.iter().map(|z| (z - log_norm).exp()).collect(), log_norm)
}

impl PredictionModel {
    /// Glorot-uniform tanh encoders, He-uniform ReLU hidden layers,
    /// zero biases.
    pub fn init(config: ModelConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        config.validate()?;
        let glorot = |i: usize, o: usize| (6.0 / (i + o) as f64).sqrt();
        let doc = config
            .use_h
            .then(|| Dense::uniform(config.emb_dim, config.dim_d, glorot(config.emb_dim, config.dim_d), rng));
        let profile = config
            .use_p
            .then(|| Dense::uniform(config.emb_dim, config.dim_p, glorot(config.emb_dim, config.dim_p), rng));
        let mut layers = Vec::with_capacity(config.classifier_layers);
        let mut inputs = config.classifier_input();
        for l in 0..config.classifier_layers {
            let last = l + 1 == config.classifier_layers;
            let outputs = if last { config.dim_o } else { config.hidden };
            let scale = if last {
                glorot(inputs, outputs)
            } else {
                (6.0 / inputs as f64).sqrt()
            };
            layers.push(Dense::uniform(inputs, outputs, scale, rng));
            inputs = outputs;
        }
        Ok(PredictionModel {
            config,
            params: Gradients { doc, profile, layers },
        })
    }

    /// `tanh(W x + b)` on one pooled document vector.
    pub fn encode_document(&self, pooled: &[f64]) -> Vec<f64> {
        match &self.params.doc {
            Some(d) => tanh_all(d.forward(pooled)),
            None => Vec::new(),
        }
    }

    /// Mean of the document encodings; zero vector for an empty history.
    pub fn encode_history(&self, docs: &[Vec<f64>]) -> Vec<f64> {
        let mut h = vec![0.0; self.config.dim_h()];
        if self.params.doc.is_none() || docs.is_empty() {
            return h;
        }
        for d in docs {
            for (a, x) in h.iter_mut().zip(self.encode_document(d)) {
                *a += x;
            }
        }
        let n = docs.len() as f64;
        h.iter_mut().for_each(|x| *x /= n);
        h
    }

    pub fn encode_profile(&self, pooled: &[f64]) -> Vec<f64> {
        match &self.params.profile {
            Some(p) => tanh_all(p.forward(pooled)),
            None => Vec::new(),
        }
    }

    fn check_inputs(&self, attributes: &[f64], profile: &[f64]) -> Result<()> {
        let c = &self.config;
        if c.use_a && attributes.len() != c.dim_a {
            return Err(Error::DimensionMismatch {
                expected: c.dim_a,
                got: attributes.len(),
            });
        }
        if c.use_p && profile.len() != c.emb_dim {
            return Err(Error::DimensionMismatch {
                expected: c.emb_dim,
                got: profile.len(),
            });
        }
        Ok(())
    }

    fn run(&self, attributes: &[f64], history: &dyn HistoryDocs, profile: &[f64]) -> Trace {
        let c = &self.config;
        let mut input = Vec::with_capacity(c.classifier_input());
        if c.use_a {
            input.extend_from_slice(attributes);
        }
        let mut docs = Vec::new();
        if c.use_h {
            let pooled = history.docs();
            let mut h = vec![0.0; c.dim_h()];
            for x in pooled {
                let out = self.encode_document(x);
                for (a, y) in h.iter_mut().zip(&out) {
                    *a += y;
                }
                docs.push((x.clone(), out));
            }
            if !pooled.is_empty() {
                let n = pooled.len() as f64;
                h.iter_mut().for_each(|x| *x /= n);
            }
            input.extend(h);
        }
        let mut profile_out = Vec::new();
        let mut profile_in = Vec::new();
        if c.use_p {
            profile_in = profile.to_vec();
            profile_out = self.encode_profile(profile);
            input.extend_from_slice(&profile_out);
        }

        let mut activations = vec![input];
        let last = self.params.layers.len() - 1;
        let mut logits = Vec::new();
        for (l, layer) in self.params.layers.iter().enumerate() {
            let z = layer.forward(activations.last().unwrap());
            if l == last {
                logits = z;
            } else {
                activations.push(z.into_iter().map(|v| v.max(0.0)).collect());
            }
        }
        let (probs, log_norm) = softmax(&logits);
        activations.push(probs);
        Trace {
            docs,
            profile_in,
            profile_out,
            activations,
            log_norm,
            logits,
        }
    }

    /// Class probabilities for one user. Disabled inputs are left out of
    /// the classifier input entirely and never read.
    pub fn forward(&self, attributes: &[f64], history: &dyn HistoryDocs, profile: &[f64]) -> Result<Vec<f64>> {
        self.check_inputs(attributes, profile)?;
        Ok(self.run(attributes, history, profile).activations.pop().unwrap())
    }

    /// Weighted cross-entropy averaged over the batch, and its gradient.
    /// Examples are reduced in slice order.
    pub fn loss_and_gradients(&self, batch: &[TrainingExample<'_>]) -> Result<(f64, Gradients)> {
        if batch.is_empty() {
            return Ok((0.0, Gradients::zeros_like(&self.params)));
        }
        self.scaled_loss_and_gradients(batch, 1.0 / batch.len() as f64)
    }

    /// Loss and gradient of `scale * Σ w_i CE_i` over `examples`.
    pub fn scaled_loss_and_gradients(&self, examples: &[TrainingExample<'_>], scale: f64) -> Result<(f64, Gradients)> {
        let mut grads = Gradients::zeros_like(&self.params);
        let mut loss = 0.0;
        let batch = examples;
        for ex in batch {
            self.check_inputs(ex.attributes, ex.profile)?;
            if ex.class >= self.config.dim_o {
                return Err(Error::InvalidInput(format!("class {} >= dim_o {}", ex.class, self.config.dim_o)));
            }
            let trace = self.run(ex.attributes, &ex.history, ex.profile);
            loss += scale * ex.weight * (trace.log_norm - trace.logits[ex.class]);
            self.backward(&trace, ex.class, scale * ex.weight, &mut grads);
        }
        Ok((loss, grads))
    }

    fn backward(&self, trace: &Trace, class: usize, coeff: f64, grads: &mut Gradients) {
        let probs = trace.activations.last().unwrap();
        let mut dz: Vec<f64> = probs.iter().map(|p| coeff * p).collect();
        dz[class] -= coeff;

        let n_layers = self.params.layers.len();
        for l in (0..n_layers).rev() {
            let layer = &self.params.layers[l];
            let x = &trace.activations[l];
            layer.accumulate(&mut grads.layers[l], x, &dz);
            let dx = layer.backprop(&dz);
            if l == 0 {
                dz = dx;
            } else {
                // ReLU: x is the post-activation of the previous layer.
                dz = dx.iter().zip(x).map(|(g, &a)| if a > 0.0 { *g } else { 0.0 }).collect();
            }
        }

        let c = &self.config;
        let mut offset = if c.use_a { c.dim_a } else { 0 };
        if c.use_h {
            let dh = &dz[offset..offset + c.dim_h()];
            offset += c.dim_h();
            if let (Some(doc), Some(gdoc)) = (&self.params.doc, grads.doc.as_mut()) {
                let n = trace.docs.len() as f64;
                for (x, out) in &trace.docs {
                    let g: Vec<f64> = dh.iter().zip(out).map(|(d, y)| d / n * (1.0 - y * y)).collect();
                    doc.accumulate(gdoc, x, &g);
                }
            }
        }
        if c.use_p {
            let dp = &dz[offset..offset + c.dim_p];
            if let (Some(prof), Some(gprof)) = (&self.params.profile, grads.profile.as_mut()) {
                let g: Vec<f64> = dp.iter().zip(&trace.profile_out).map(|(d, y)| d * (1.0 - y * y)).collect();
                prof.accumulate(gprof, &trace.profile_in, &g);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn small_config() -> ModelConfig {
        ModelConfig {
            emb_dim: 4,
            dim_d: 4,
            dim_p: 4,
            dim_a: 4,
            dim_o: 3,
            classifier_layers: 3,
            hidden: 5,
            ..ModelConfig::default()
        }
    }

    fn model(config: ModelConfig, seed: u64) -> PredictionModel {
        PredictionModel::init(config, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    fn vecs(seed: u64, n: usize, d: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
    }

    #[test]
    fn document_encoding_matches_hand_composition() {
        let m = model(small_config(), 3);
        let d = m.params.doc.as_ref().unwrap();
        let tokens = vecs(5, 3, 4);
        let pooled: Vec<f64> = (0..4).map(|j| tokens.iter().map(|t| t[j]).sum::<f64>() / 3.0).collect();
        let got = m.encode_document(&pooled);
        for (o, g) in got.iter().enumerate() {
            let row = &d.w[o * 4..(o + 1) * 4];
            let z = d.b[o] + row.iter().zip(&pooled).map(|(w, x)| w * x).sum::<f64>();
            assert!((g - z.tanh()).abs() < 1e-9);
        }
        let empty = m.encode_document(&[0.0; 4]);
        let bias: Vec<f64> = d.b.iter().map(|b| b.tanh()).collect();
        assert_eq!(empty, bias);
    }

    #[test]
    fn history_pooling_is_a_set_mean() {
        let m = model(small_config(), 4);
        let docs = vecs(6, 5, 4);
        let h = m.encode_history(&docs);
        let mut rev = docs.clone();
        rev.reverse();
        let mut doubled = docs.clone();
        doubled.extend(docs.clone());
        for (a, b) in h.iter().zip(m.encode_history(&rev)) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in h.iter().zip(m.encode_history(&doubled)) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(m.encode_history(&docs[..1]), m.encode_document(&docs[0]));
        assert_eq!(m.encode_history(&[]), vec![0.0; 4]);
    }

    #[test]
    fn output_is_a_distribution() {
        let m = model(small_config(), 7);
        let docs = vecs(8, 3, 4);
        let p = m.forward(&[1.0, -2.0, 0.5, 3.0], &docs, &[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(p.len(), 3);
        assert!(p.iter().all(|&x| x > 0.0));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_classifier_gives_uniform() {
        let mut m = model(small_config(), 9);
        for l in &mut m.params.layers {
            l.w.iter_mut().for_each(|w| *w = 0.0);
        }
        let p = m.forward(&[1.0; 4], &vecs(1, 2, 4), &[1.0; 4]).unwrap();
        for x in p {
            assert!((x - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hand_forward_on_single_layer() {
        let config = ModelConfig {
            dim_a: 2,
            dim_o: 3,
            classifier_layers: 1,
            use_h: false,
            use_p: false,
            ..small_config()
        };
        let mut m = model(config, 0);
        m.params.layers[0].w = vec![1.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        m.params.layers[0].b = vec![0.0, 0.5, -1.0];
        let p = m.forward(&[0.2, -0.4], &Vec::<Vec<f64>>::new(), &[]).unwrap();
        let z = [0.2f64, 0.1, -1.2];
        let s: f64 = z.iter().map(|v| v.exp()).sum();
        for (a, zi) in p.iter().zip(z) {
            assert!((a - zi.exp() / s).abs() < 1e-9);
        }
    }

    struct Untouchable;

    impl HistoryDocs for Untouchable {
        fn docs(&self) -> &[Vec<f64>] {
            panic!("history read with use_h = false");
        }
    }

    #[test]
    fn ablated_history_is_never_read() {
        let config = ModelConfig { use_h: false, ..small_config() };
        let m = model(config, 2);
        assert!(m.params.doc.is_none());
        assert_eq!(m.params.layers[0].inputs, 8);
        m.forward(&[0.0; 4], &Untouchable, &[0.0; 4]).unwrap();
    }

    #[test]
    fn wrong_attribute_length_is_rejected() {
        let m = model(small_config(), 2);
        assert!(m.forward(&[0.0; 3], &Vec::<Vec<f64>>::new(), &[0.0; 4]).is_err());
    }

    #[test]
    fn unit_weights_equal_unweighted_loss() {
        let m = model(small_config(), 11);
        let a = vecs(1, 4, 4);
        let h = vecs(2, 3, 4);
        let p = vecs(3, 4, 4);
        let batch: Vec<TrainingExample> = (0..4)
            .map(|i| TrainingExample { attributes: &a[i], history: &h, profile: &p[i], class: i % 3, weight: 1.0 })
            .collect();
        let (loss, _) = m.loss_and_gradients(&batch).unwrap();
        let plain: f64 = batch
            .iter()
            .map(|e| -m.forward(e.attributes, &e.history, e.profile).unwrap()[e.class].ln())
            .sum::<f64>()
            / 4.0;
        assert!((loss - plain).abs() < 1e-12);
    }

    #[test]
    fn gradients_match_central_differences() {
        let m = model(small_config(), 21);
        let a = vecs(31, 3, 4);
        let h = vecs(32, 4, 4);
        let p = vecs(33, 3, 4);
        let batch: Vec<TrainingExample> = (0..3)
            .map(|i| TrainingExample {
                attributes: &a[i],
                history: &h[i..],
                profile: &p[i],
                class: i,
                weight: 0.5 + i as f64,
            })
            .collect();
        let (_, grads) = m.loss_and_gradients(&batch).unwrap();
        let analytic: Vec<f64> = grads.tensors().into_iter().flatten().copied().collect();
        let eps = 1e-5;
        let mut idx = 0;
        let n_tensors = m.params.tensors().len();
        for t in 0..n_tensors {
            let len = m.params.tensors()[t].len();
            for j in 0..len {
                let mut plus = m.clone();
                plus.params.tensors_mut()[t][j] += eps;
                let mut minus = m.clone();
                minus.params.tensors_mut()[t][j] -= eps;
                let lp = plus.loss_and_gradients(&batch).unwrap().0;
                let lm = minus.loss_and_gradients(&batch).unwrap().0;
                let numeric = (lp - lm) / (2.0 * eps);
                let g = analytic[idx];
                let err = (g - numeric).abs() / g.abs().max(numeric.abs()).max(1e-6);
                assert!(err < 1e-4, "tensor {t} entry {j}: analytic {g} numeric {numeric}");
                idx += 1;
            }
        }
        assert_eq!(idx, m.params.num_params());
    }
}
