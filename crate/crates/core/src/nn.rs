//! Small feed-forward policy/value network with hand-derived gradients.
//!
//! The architecture is fixed by the training setup: a tanh trunk feeding
//! a 16-logit policy head and a scalar value head. Parameters live in
//! plain `Vec<f64>` tensors with a deterministic flat layout, so
//! checkpoints, the optimizer, and finite-difference checks all operate
//! on one canonical vector.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    /// Row-major `out_dim x in_dim`.
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Linear {
    fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Linear {
            w: vec![0.0; in_dim * out_dim],
            b: vec![0.0; out_dim],
            in_dim,
            out_dim,
        }
    }

    fn init_uniform(in_dim: usize, out_dim: usize, scale: f64, rng: &mut ChaCha8Rng) -> Self {
        let mut l = Linear::zeros(in_dim, out_dim);
        for w in &mut l.w {
            *w = rng.random_range(-scale..scale);
        }
        l
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.in_dim);
        (0..self.out_dim)
            .map(|o| {
                let row = &self.w[o * self.in_dim..(o + 1) * self.in_dim];
                self.b[o] + row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>()
            })
            .collect()
    }

    fn param_count(&self) -> usize {
        self.w.len() + self.b.len()
    }
}

/// Policy/value approximator: tanh trunk, 16-logit policy head, scalar
/// value head.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyNet {
    pub input_dim: usize,
    pub num_actions: usize,
    pub trunk: Vec<Linear>,
    pub policy_head: Linear,
    pub value_head: Linear,
}

/// Intermediate activations kept for the backward pass. `acts[0]` is the
/// input; `acts[i]` for i >= 1 is the tanh output of trunk layer i-1.
pub struct ForwardCache {
    acts: Vec<Vec<f64>>,
}

impl PolicyNet {
    /// Fresh network. Biases start at zero and the head weights are
    /// near-zero, so a zero observation yields exactly uniform action
    /// probabilities.
    pub fn new(input_dim: usize, hidden: &[usize], num_actions: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut trunk = Vec::with_capacity(hidden.len());
        let mut prev = input_dim;
        for &h in hidden {
            let scale = (6.0 / (prev + h) as f64).sqrt();
            trunk.push(Linear::init_uniform(prev, h, scale, &mut rng));
            prev = h;
        }
        let policy_head = Linear::init_uniform(prev, num_actions, 0.01, &mut rng);
        let value_head = Linear::init_uniform(prev, 1, 0.01, &mut rng);
        PolicyNet {
            input_dim,
            num_actions,
            trunk,
            policy_head,
            value_head,
        }
    }

    pub fn hidden_sizes(&self) -> Vec<usize> {
        self.trunk.iter().map(|l| l.out_dim).collect()
    }

    /// (logits, value); rejects non-finite input.
    pub fn forward(&self, obs: &[f64]) -> (Vec<f64>, f64) {
        let (logits, value, _) = self.forward_cached(obs);
        (logits, value)
    }

    pub fn forward_cached(&self, obs: &[f64]) -> (Vec<f64>, f64, ForwardCache) {
        assert_eq!(obs.len(), self.input_dim);
        assert!(
            obs.iter().all(|x| x.is_finite()),
            "non-finite observation rejected"
        );
        let mut acts = Vec::with_capacity(self.trunk.len() + 1);
        acts.push(obs.to_vec());
        for layer in &self.trunk {
            let mut z = layer.forward(acts.last().unwrap());
            for x in &mut z {
                *x = x.tanh();
            }
            acts.push(z);
        }
        let h = acts.last().unwrap();
        let logits = self.policy_head.forward(h);
        let value = self.value_head.forward(h)[0];
        (logits, value, ForwardCache { acts })
    }

    /// Accumulate parameter gradients for one sample given the loss
    /// gradients at the heads. Returns nothing; `grads` uses the same
    /// flat layout as [`PolicyNet::to_flat`].
    pub fn backward(
        &self,
        cache: &ForwardCache,
        dlogits: &[f64],
        dvalue: f64,
        grads: &mut [f64],
    ) {
        debug_assert_eq!(grads.len(), self.param_count());
        let layout = self.layout();
        let h_last = cache.acts.last().unwrap();

        // heads
        let (pw, pb) = layout.policy;
        for (o, &dl) in dlogits.iter().enumerate() {
            let row = &mut grads[pw + o * h_last.len()..pw + (o + 1) * h_last.len()];
            for (g, &hi) in row.iter_mut().zip(h_last) {
                *g += dl * hi;
            }
            grads[pb + o] += dl;
        }
        let (vw, vb) = layout.value;
        for (i, &hi) in h_last.iter().enumerate() {
            grads[vw + i] += dvalue * hi;
        }
        grads[vb] += dvalue;

        // gradient w.r.t. trunk output
        let mut dh = vec![0.0; h_last.len()];
        for (o, &dl) in dlogits.iter().enumerate() {
            let row = &self.policy_head.w[o * h_last.len()..(o + 1) * h_last.len()];
            for (d, &w) in dh.iter_mut().zip(row) {
                *d += dl * w;
            }
        }
        for (d, &w) in dh.iter_mut().zip(&self.value_head.w) {
            *d += dvalue * w;
        }

        // trunk layers, reversed; tanh'(z) = 1 - tanh(z)^2
        for (li, layer) in self.trunk.iter().enumerate().rev() {
            let out = &cache.acts[li + 1];
            let inp = &cache.acts[li];
            let dz: Vec<f64> = (0..layer.out_dim)
                .map(|o| dh[o] * (1.0 - out[o] * out[o]))
                .collect();
            let (wo, bo) = layout.trunk[li];
            for o in 0..layer.out_dim {
                let row = &mut grads[wo + o * layer.in_dim..wo + (o + 1) * layer.in_dim];
                for (g, &xi) in row.iter_mut().zip(inp) {
                    *g += dz[o] * xi;
                }
                grads[bo + o] += dz[o];
            }
            let mut dprev = vec![0.0; layer.in_dim];
            for (o, &dzo) in dz.iter().enumerate() {
                let row = &layer.w[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (d, &w) in dprev.iter_mut().zip(row) {
                    *d += dzo * w;
                }
            }
            dh = dprev;
        }
    }

    pub fn param_count(&self) -> usize {
        self.trunk.iter().map(Linear::param_count).sum::<usize>()
            + self.policy_head.param_count()
            + self.value_head.param_count()
    }

    fn layout(&self) -> Layout {
        let mut off = 0;
        let mut trunk = Vec::with_capacity(self.trunk.len());
        for l in &self.trunk {
            let wo = off;
            off += l.w.len();
            let bo = off;
            off += l.b.len();
            trunk.push((wo, bo));
        }
        let pw = off;
        off += self.policy_head.w.len();
        let pb = off;
        off += self.policy_head.b.len();
        let vw = off;
        off += self.value_head.w.len();
        let vb = off;
        off += self.value_head.b.len();
        Layout {
            trunk,
            policy: (pw, pb),
            value: (vw, vb),
            total: off,
        }
    }

    /// Canonical flat parameter vector (trunk w/b pairs, policy head,
    /// value head).
    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.param_count());
        for l in &self.trunk {
            flat.extend_from_slice(&l.w);
            flat.extend_from_slice(&l.b);
        }
        flat.extend_from_slice(&self.policy_head.w);
        flat.extend_from_slice(&self.policy_head.b);
        flat.extend_from_slice(&self.value_head.w);
        flat.extend_from_slice(&self.value_head.b);
        flat
    }

    pub fn load_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count());
        let mut off = 0;
        let take = |len: usize, off: &mut usize| {
            let s = &flat[*off..*off + len];
            *off += len;
            s.to_vec()
        };
        for l in &mut self.trunk {
            l.w = take(l.w.len(), &mut off);
            l.b = take(l.b.len(), &mut off);
        }
        self.policy_head.w = take(self.policy_head.w.len(), &mut off);
        self.policy_head.b = take(self.policy_head.b.len(), &mut off);
        self.value_head.w = take(self.value_head.w.len(), &mut off);
        self.value_head.b = take(self.value_head.b.len(), &mut off);
    }

    pub fn all_finite(&self) -> bool {
        self.to_flat().iter().all(|x| x.is_finite())
    }
}

struct Layout {
    trunk: Vec<(usize, usize)>,
    policy: (usize, usize),
    value: (usize, usize),
    #[allow(dead_code)]
    total: usize,
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Entropy of a categorical distribution.
pub fn entropy(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}
