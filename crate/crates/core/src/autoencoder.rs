//! Morpheme-tensor autoencoder.
//!
//! One affine encoder (flattened tensor → latent, optional tanh) and one
//! affine decoder (latent → flattened tensor). Tensors are flattened with the
//! filler axis varying fastest. Training is full-batch gradient descent on
//! the summed unbinding loss of every reconstruction; a step that would raise
//! the loss is retried with half the learning rate, so the loss trace never
//! increases.
//!
//! Mean squared error against the input tensor is available as a baseline
//! objective.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tpr::{unbinding_loss_grad, FillerVocab, LossConfig, RoleSpace, Structure, TprTensor};

const MAX_HALVINGS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    #[default]
    Linear,
    Tanh,
}

impl std::str::FromStr for Activation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Activation::Linear),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::Config(format!("unknown activation {other:?}"))),
        }
    }
}

const PARAMS_FORMAT: &str = "polylm-autoencoder";
const PARAMS_VERSION: u32 = 1;

/// Encoder and decoder weights. Matrices are row-major: `enc_w` is
/// `latent × input`, `dec_w` is `input × latent`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderParams {
    format: String,
    version: u32,
    pub shape: Vec<usize>,
    pub latent_dim: usize,
    pub activation: Activation,
    pub seed: u64,
    pub enc_w: Vec<f64>,
    pub enc_b: Vec<f64>,
    pub dec_w: Vec<f64>,
    pub dec_b: Vec<f64>,
}

/// A latent morpheme vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorphemeVector {
    pub id: String,
    pub values: Vec<f64>,
}

impl AutoencoderParams {
    /// Xavier-uniform weights from a seeded generator, zero biases.
    pub fn init(shape: &[usize], latent_dim: usize, activation: Activation, seed: u64) -> Result<Self> {
        let input: usize = shape.iter().product();
        if input == 0 || latent_dim == 0 {
            return Err(Error::Domain("autoencoder dimensions must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let limit = (6.0 / (input + latent_dim) as f64).sqrt();
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-limit..limit)).collect() };
        let enc_w = draw(latent_dim * input);
        let dec_w = draw(input * latent_dim);
        Ok(AutoencoderParams {
            format: PARAMS_FORMAT.into(),
            version: PARAMS_VERSION,
            shape: shape.to_vec(),
            latent_dim,
            activation,
            seed,
            enc_w,
            enc_b: vec![0.0; latent_dim],
            dec_w,
            dec_b: vec![0.0; input],
        })
    }

    /// Linear identity map (latent size equals the input size).
    pub fn identity(shape: &[usize]) -> Result<Self> {
        let n: usize = shape.iter().product();
        let mut p = AutoencoderParams::init(shape, n, Activation::Linear, 0)?;
        let eye: Vec<f64> = (0..n * n).map(|k| if k / n == k % n { 1.0 } else { 0.0 }).collect();
        p.enc_w = eye.clone();
        p.dec_w = eye;
        Ok(p)
    }

    pub fn input_dim(&self) -> usize {
        self.dec_b.len()
    }

    pub fn param_count(&self) -> usize {
        self.enc_w.len() + self.enc_b.len() + self.dec_w.len() + self.dec_b.len()
    }

    fn check(&self) -> Result<()> {
        let (n, k) = (self.shape.iter().product::<usize>(), self.latent_dim);
        let ok = self.enc_w.len() == n * k
            && self.enc_b.len() == k
            && self.dec_w.len() == n * k
            && self.dec_b.len() == n;
        if !ok {
            return Err(Error::Model("autoencoder weight shapes are inconsistent".into()));
        }
        if self.flat().any(|x| !x.is_finite()) {
            return Err(Error::Model("autoencoder weights are not finite".into()));
        }
        Ok(())
    }

    fn flat(&self) -> impl Iterator<Item = &f64> {
        self.enc_w.iter().chain(&self.enc_b).chain(&self.dec_w).chain(&self.dec_b)
    }

    fn flat_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.enc_w
            .iter_mut()
            .chain(self.enc_b.iter_mut())
            .chain(self.dec_w.iter_mut())
            .chain(self.dec_b.iter_mut())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serde_json::to_string(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let p: AutoencoderParams = serde_json::from_str(&text)?;
        if p.format != PARAMS_FORMAT || p.version != PARAMS_VERSION {
            return Err(Error::Model(format!("unsupported parameters {} v{}", p.format, p.version)));
        }
        p.check()?;
        Ok(p)
    }
}

fn affine(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    b.iter()
        .enumerate()
        .map(|(i, bi)| bi + w[i * n..(i + 1) * n].iter().zip(x).map(|(a, c)| a * c).sum::<f64>())
        .collect()
}

fn encode_flat(p: &AutoencoderParams, x: &[f64]) -> Vec<f64> {
    let h = affine(&p.enc_w, &p.enc_b, x);
    match p.activation {
        Activation::Linear => h,
        Activation::Tanh => h.into_iter().map(f64::tanh).collect(),
    }
}

pub fn encode(p: &AutoencoderParams, t: &TprTensor) -> Result<Vec<f64>> {
    if t.shape() != p.shape.as_slice() {
        return Err(Error::Shape(format!("tensor {:?}, encoder expects {:?}", t.shape(), p.shape)));
    }
    Ok(encode_flat(p, t.data()))
}

pub fn decode(p: &AutoencoderParams, z: &[f64]) -> Result<TprTensor> {
    if z.len() != p.latent_dim {
        return Err(Error::Shape(format!("latent of length {}, decoder expects {}", z.len(), p.latent_dim)));
    }
    TprTensor::from_data(p.shape.clone(), affine(&p.dec_w, &p.dec_b, z))
}

/// Training objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    Unbinding(LossConfig),
    /// Mean squared reconstruction error; a baseline only.
    Mse,
}

impl Default for Objective {
    fn default() -> Self {
        Objective::Unbinding(LossConfig::default())
    }
}

/// Gold structures with their tensors, plus the spaces the loss needs.
#[derive(Debug, Clone, Copy)]
pub struct Dataset<'a> {
    pub samples: &'a [(Structure, TprTensor)],
    pub fillers: &'a FillerVocab,
    pub roles: &'a [&'a RoleSpace],
}

fn sample_loss_grad(y: &TprTensor, x: &TprTensor, gold: &Structure, data: &Dataset, obj: Objective) -> Result<(f64, Vec<f64>)> {
    match obj {
        Objective::Unbinding(cfg) => unbinding_loss_grad(y, gold, data.fillers, data.roles, cfg),
        Objective::Mse => {
            let n = y.len() as f64;
            let diff: Vec<f64> = y.data().iter().zip(x.data()).map(|(a, b)| a - b).collect();
            let loss = diff.iter().map(|d| d * d).sum::<f64>() / n;
            Ok((loss, diff.iter().map(|d| 2.0 * d / n).collect()))
        }
    }
}

/// Summed loss and, if `grad` is given, its gradient in flattened parameter
/// order (`enc_w`, `enc_b`, `dec_w`, `dec_b`).
fn forward_backward(p: &AutoencoderParams, data: &Dataset, obj: Objective, mut grad: Option<&mut Vec<f64>>) -> Result<f64> {
    let (n, k) = (p.input_dim(), p.latent_dim);
    if let Some(g) = grad.as_deref_mut() {
        g.clear();
        g.resize(p.param_count(), 0.0);
    }
    let mut total = 0.0;
    for (gold, x) in data.samples {
        let z = encode(p, x)?;
        let y = decode(p, &z)?;
        let (loss, gy) = sample_loss_grad(&y, x, gold, data, obj)?;
        total += loss;
        let Some(g) = grad.as_deref_mut() else { continue };
        let (g_enc_w, rest) = g.split_at_mut(k * n);
        let (g_enc_b, rest) = rest.split_at_mut(k);
        let (g_dec_w, g_dec_b) = rest.split_at_mut(n * k);
        let mut dz = vec![0.0; k];
        for i in 0..n {
            g_dec_b[i] += gy[i];
            for j in 0..k {
                g_dec_w[i * k + j] += gy[i] * z[j];
                dz[j] += p.dec_w[i * k + j] * gy[i];
            }
        }
        if p.activation == Activation::Tanh {
            dz.iter_mut().zip(&z).for_each(|(d, zj)| *d *= 1.0 - zj * zj);
        }
        let xd = x.data();
        for j in 0..k {
            g_enc_b[j] += dz[j];
            if dz[j] != 0.0 {
                for (gw, xi) in g_enc_w[j * n..(j + 1) * n].iter_mut().zip(xd) {
                    *gw += dz[j] * xi;
                }
            }
        }
    }
    Ok(total)
}

/// Total loss of `p` over the dataset.
pub fn dataset_loss(p: &AutoencoderParams, data: &Dataset, obj: Objective) -> Result<f64> {
    forward_backward(p, data, obj, None)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub latent_dim: usize,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    pub activation: Activation,
    pub objective: Objective,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            latent_dim: 16,
            epochs: 200,
            lr: 0.5,
            seed: 0,
            activation: Activation::Linear,
            objective: Objective::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub params: AutoencoderParams,
    /// Loss before training followed by the loss after every epoch.
    pub trace: Vec<f64>,
    /// Learning rate after backtracking.
    pub lr: f64,
}

pub fn train_autoencoder(data: &Dataset, cfg: &TrainConfig) -> Result<Trained> {
    if data.samples.is_empty() {
        return Err(Error::Domain("empty tensor dictionary".into()));
    }
    if !(cfg.lr > 0.0 && cfg.lr.is_finite()) {
        return Err(Error::Config(format!("learning rate must be positive, got {}", cfg.lr)));
    }
    let shape = data.samples[0].1.shape().to_vec();
    let mut params = AutoencoderParams::init(&shape, cfg.latent_dim, cfg.activation, cfg.seed)?;
    let mut grad = Vec::new();
    let mut loss = forward_backward(&params, data, cfg.objective, Some(&mut grad))?;
    if !loss.is_finite() {
        return Err(Error::Divergence { epoch: 0 });
    }
    let mut trace = vec![loss];
    let mut lr = cfg.lr;
    for epoch in 1..=cfg.epochs {
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Divergence { epoch });
        }
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let mut cand = params.clone();
            cand.flat_mut().zip(&grad).for_each(|(w, g)| *w -= lr * g);
            let mut cand_grad = Vec::new();
            let cand_loss = forward_backward(&cand, data, cfg.objective, Some(&mut cand_grad))?;
            if cand_loss.is_finite() && cand_loss <= loss {
                accepted = Some((cand, cand_loss, cand_grad));
                break;
            }
            lr *= 0.5;
        }
        match accepted {
            Some((p, l, g)) => {
                params = p;
                loss = l;
                grad = g;
            }
            None if loss.is_finite() => {
                log::debug!("epoch {epoch}: no descent step found, stopping early");
                trace.push(loss);
                continue;
            }
            None => return Err(Error::Divergence { epoch }),
        }
        log::debug!("epoch {epoch}: loss {loss:.6} lr {lr:e}");
        trace.push(loss);
    }
    Ok(Trained { params, trace, lr })
}

/// Latent vectors for a set of tensors.
pub fn encode_all<'a>(
    p: &AutoencoderParams,
    items: impl IntoIterator<Item = (&'a str, &'a TprTensor)>,
) -> Result<Vec<MorphemeVector>> {
    items
        .into_iter()
        .map(|(id, t)| {
            Ok(MorphemeVector {
                id: id.to_string(),
                values: encode(p, t)?,
            })
        })
        .collect()
}

/// Largest relative disagreement between the analytic gradient and central
/// finite differences, over every parameter.
pub fn gradient_check(p: &AutoencoderParams, data: &Dataset, obj: Objective, epsilon: f64) -> Result<f64> {
    if !(1e-7..=1e-3).contains(&epsilon) {
        return Err(Error::Domain(format!("epsilon {epsilon} outside [1e-7, 1e-3]")));
    }
    let mut grad = Vec::new();
    forward_backward(p, data, obj, Some(&mut grad))?;
    let mut worst: f64 = 0.0;
    let mut probe = p.clone();
    for (i, &ga) in grad.iter().enumerate() {
        let orig = *probe.flat().nth(i).expect("index in range");
        let set = |probe: &mut AutoencoderParams, v: f64| *probe.flat_mut().nth(i).expect("index in range") = v;
        set(&mut probe, orig + epsilon);
        let up = dataset_loss(&probe, data, obj)?;
        set(&mut probe, orig - epsilon);
        let down = dataset_loss(&probe, data, obj)?;
        set(&mut probe, orig);
        let fd = (up - down) / (2.0 * epsilon);
        let rel = (ga - fd).abs() / ga.abs().max(fd.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tpr::{bind_hierarchical, make_role_space, RoleScheme};

    struct Toy {
        fillers: FillerVocab,
        roles: RoleSpace,
        samples: Vec<(Structure, TprTensor)>,
    }

    impl Toy {
        /// Two one-hot fillers, two orthonormal roles, every single binding.
        fn new() -> Self {
            let fillers = FillerVocab::one_hot(&["x", "y"]).unwrap();
            let roles = make_role_space(&["r1", "r2"], 2, RoleScheme::Orthonormal, None).unwrap();
            let mut samples = Vec::new();
            for f in ["x", "y"] {
                for r in ["r1", "r2"] {
                    let s = Structure::Node(vec![(r.into(), Structure::Leaf(f.into()))]);
                    let t = bind_hierarchical(&s, &fillers, &[&roles]).unwrap();
                    samples.push((s, t));
                }
            }
            Toy { fillers, roles, samples }
        }
    }

    impl Toy {
        fn data<'a>(&'a self, roles: &'a [&'a RoleSpace]) -> Dataset<'a> {
            Dataset {
                samples: &self.samples,
                fillers: &self.fillers,
                roles,
            }
        }
    }

    #[test]
    fn encode_decode_basics() {
        let p = AutoencoderParams::init(&[2, 3], 4, Activation::Linear, 1).unwrap();
        let zero = TprTensor::zeros(vec![2, 3]);
        assert!(encode(&p, &zero).unwrap().iter().all(|&x| x == 0.0));
        assert!(decode(&p, &[0.0; 4]).unwrap().data().iter().all(|&x| x == 0.0));
        let t = TprTensor::from_data(vec![2, 3], vec![1.0, -2.0, 0.5, 0.0, 3.0, 1.5]).unwrap();
        let z = encode(&p, &t).unwrap();
        assert_eq!(z, encode(&p, &t).unwrap());
        let z3 = encode(&p, &t.scale(3.0)).unwrap();
        for (a, b) in z.iter().zip(&z3) {
            assert!((3.0 * a - b).abs() < 1e-12);
        }
        let y = decode(&p, &z).unwrap();
        let y3 = decode(&p, &z3).unwrap();
        assert!(y.scale(3.0).max_abs_diff(&y3) < 1e-12);
        assert!(matches!(encode(&p, &TprTensor::zeros(vec![3, 2])), Err(Error::Shape(_))));
        assert!(matches!(decode(&p, &[0.0; 3]), Err(Error::Shape(_))));
    }

    #[test]
    fn zero_epochs_returns_initialisation() {
        let toy = Toy::new();
        let rs = [&toy.roles];
        let data = toy.data(&rs);
        let cfg = TrainConfig { latent_dim: 3, epochs: 0, seed: 5, ..Default::default() };
        let out = train_autoencoder(&data, &cfg).unwrap();
        assert_eq!(out.params, AutoencoderParams::init(&[2, 2], 3, Activation::Linear, 5).unwrap());
        assert_eq!(out.trace.len(), 1);
    }

    #[test]
    fn toy_training_reduces_loss_monotonically() {
        let toy = Toy::new();
        let rs = [&toy.roles];
        let data = toy.data(&rs);
        let cfg = TrainConfig { latent_dim: 8, epochs: 200, lr: 1.0, seed: 3, ..Default::default() };
        let out = train_autoencoder(&data, &cfg).unwrap();
        assert!(out.trace.last().unwrap() < &out.trace[0]);
        assert!(out.trace.windows(2).all(|w| w[1] <= w[0]));
        // deterministic
        let again = train_autoencoder(&data, &cfg).unwrap();
        assert_eq!(again.params, out.params);
    }

    #[test]
    fn full_width_linear_reaches_identity_certificate() {
        let toy = Toy::new();
        let rs = [&toy.roles];
        let data = toy.data(&rs);
        let identity = dataset_loss(&AutoencoderParams::identity(&[2, 2]).unwrap(), &data, Objective::default()).unwrap();
        let floor = (1f64.exp() + 1.0).ln() - 1.0;
        assert!((identity - 4.0 * floor).abs() < 1e-12);
        let cfg = TrainConfig { latent_dim: 4, epochs: 300, lr: 2.0, seed: 11, ..Default::default() };
        let out = train_autoencoder(&data, &cfg).unwrap();
        let per_leaf = out.trace.last().unwrap() / 4.0;
        assert!(per_leaf <= floor + 1e-2, "{per_leaf} vs {floor}");
    }

    #[test]
    fn gradients_match_finite_differences() {
        let toy = Toy::new();
        let rs = [&toy.roles];
        let data = toy.data(&rs);
        for (seed, act) in [(1, Activation::Linear), (2, Activation::Tanh)] {
            let p = AutoencoderParams::init(&[2, 2], 3, act, seed).unwrap();
            for obj in [Objective::default(), Objective::Unbinding(LossConfig { unbound_weight: 0.5 }), Objective::Mse] {
                let err = gradient_check(&p, &data, obj, 1e-5).unwrap();
                assert!(err < 1e-4, "{act:?} {obj:?}: {err}");
            }
        }
    }

    #[test]
    fn central_difference_error_is_second_order() {
        let toy = Toy::new();
        let rs = [&toy.roles];
        let data = toy.data(&rs);
        let p = AutoencoderParams::init(&[2, 2], 3, Activation::Tanh, 4).unwrap();
        let obj = Objective::default();
        let mut grad = Vec::new();
        forward_backward(&p, &data, obj, Some(&mut grad)).unwrap();
        let i = grad.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).unwrap().0;
        let fd = |eps: f64| {
            let mut q = p.clone();
            *q.flat_mut().nth(i).unwrap() += eps;
            let up = dataset_loss(&q, &data, obj).unwrap();
            *q.flat_mut().nth(i).unwrap() -= 2.0 * eps;
            let down = dataset_loss(&q, &data, obj).unwrap();
            (up - down) / (2.0 * eps)
        };
        let e1 = (fd(1e-3) - grad[i]).abs();
        let e2 = (fd(2e-3) - grad[i]).abs();
        // doubling epsilon roughly quadruples the truncation error
        assert!(e2 / e1 > 3.0 && e2 / e1 < 5.0, "{e1} {e2}");
    }

    #[test]
    fn zero_decoder_on_singleton_vocab_has_zero_gradient() {
        let fillers = FillerVocab::one_hot(&["x"]).unwrap();
        let roles = make_role_space(&["r"], 1, RoleScheme::Orthonormal, None).unwrap();
        let s = Structure::Node(vec![("r".into(), Structure::Leaf("x".into()))]);
        let t = bind_hierarchical(&s, &fillers, &[&roles]).unwrap();
        let samples = [(s, t)];
        let rs = [&roles];
        let data = Dataset { samples: &samples, fillers: &fillers, roles: &rs };
        let mut p = AutoencoderParams::init(&[1, 1], 2, Activation::Linear, 0).unwrap();
        p.dec_w.iter_mut().for_each(|w| *w = 0.0);
        let mut grad = Vec::new();
        let loss = forward_backward(&p, &data, Objective::default(), Some(&mut grad)).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn epsilon_range_is_enforced() {
        let toy = Toy::new();
        let rs = [&toy.roles];
        let data = toy.data(&rs);
        let p = AutoencoderParams::init(&[2, 2], 2, Activation::Linear, 0).unwrap();
        assert!(gradient_check(&p, &data, Objective::default(), 1e-2).is_err());
        assert!(gradient_check(&p, &data, Objective::default(), 1e-9).is_err());
    }

    #[test]
    fn params_roundtrip() {
        let p = AutoencoderParams::init(&[3, 2], 4, Activation::Tanh, 8).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ae.json");
        p.save(&path).unwrap();
        assert_eq!(AutoencoderParams::load(&path).unwrap(), p);
    }
}
