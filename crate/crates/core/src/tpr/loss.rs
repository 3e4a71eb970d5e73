use super::space::{dot, norm, FillerVocab, RoleSpace};
use super::tensor::{contract, outer_append, Structure, TprTensor};
use crate::error::{Error, Result};

/// Norm floor inside the loss, so a zero unbinding scores `s = 0` against
/// every filler instead of being undefined.
pub const NORM_EPS: f64 = 1e-8;

/// Cosine similarity of `f` against every filler column.
pub fn similarity_vector(f: &[f64], fillers: &FillerVocab) -> Result<Vec<f64>> {
    if f.len() != fillers.dim() {
        return Err(Error::Shape(format!(
            "vector of length {} against fillers of dimension {}",
            f.len(),
            fillers.dim()
        )));
    }
    let n = norm(f);
    if n == 0.0 {
        return Err(Error::UndefinedDirection);
    }
    Ok(fillers
        .columns()
        .iter()
        .zip(fillers.column_norms())
        .map(|(c, cn)| dot(f, c) / (n * cn))
        .collect())
}

/// The filler with the highest cosine similarity to `v`. Ties go to the
/// earlier id.
pub fn nearest_filler<'a>(v: &[f64], fillers: &'a FillerVocab) -> Result<(&'a str, f64)> {
    let s = similarity_vector(v, fillers)?;
    let mut best = 0;
    for (i, &x) in s.iter().enumerate() {
        if x > s[best] {
            best = i;
        }
    }
    Ok((&fillers.ids()[best], s[best]))
}

fn log_sum_exp(s: &[f64]) -> f64 {
    let m = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + s.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `log(softmax(s))`.
pub fn unbinding_log_probs(s: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(s);
    s.iter().map(|x| x - lse).collect()
}

/// Extra loss terms.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossConfig {
    /// Weight of a mean-squared penalty on the unbinding of every role the
    /// gold structure leaves empty. Zero (the default) ignores unbound roles.
    pub unbound_weight: f64,
}

/// Loss and gradient of one leaf: `-s_c + logsumexp(s)` where `s` is the
/// clamped-norm cosine of `f` against the fillers.
fn leaf_loss(f: &[f64], gold: usize, fillers: &FillerVocab, want_grad: bool) -> (f64, Vec<f64>) {
    let raw = norm(f);
    let n = raw.max(NORM_EPS);
    let cols = fillers.columns();
    let cn = fillers.column_norms();
    let s: Vec<f64> = cols.iter().zip(cn).map(|(c, k)| dot(f, c) / (n * k)).collect();
    let lse = log_sum_exp(&s);
    let loss = lse - s[gold];
    if !want_grad {
        return (loss, Vec::new());
    }
    let mut g = vec![0.0; f.len()];
    let clamped = raw < NORM_EPS;
    for (i, (c, k)) in cols.iter().zip(cn).enumerate() {
        let delta = (s[i] - lse).exp() - if i == gold { 1.0 } else { 0.0 };
        if delta == 0.0 {
            continue;
        }
        for (j, gj) in g.iter_mut().enumerate() {
            let mut ds = c[j] / (k * n);
            if !clamped {
                ds -= s[i] * f[j] / (n * n);
            }
            *gj += delta * ds;
        }
    }
    (loss, g)
}

struct Walk<'a> {
    fillers: &'a FillerVocab,
    spaces: &'a [&'a RoleSpace],
    cfg: LossConfig,
    grad: Option<Vec<f64>>,
}

impl<'a> Walk<'a> {
    /// Adds `g ⊗ path[last] ⊗ … ⊗ path[0]` into the gradient.
    fn scatter(&mut self, g: Vec<f64>, path: &[&[f64]]) {
        if let Some(total) = self.grad.as_mut() {
            let full = path.iter().rev().fold(g, |acc, r| outer_append(&acc, r));
            total.iter_mut().zip(full).for_each(|(a, b)| *a += b);
        }
    }

    fn visit(&mut self, node: &Structure, data: &[f64], shape: &[usize], path: &mut Vec<&'a [f64]>) -> Result<f64> {
        match node {
            Structure::Leaf(id) => {
                let c = self.fillers.position(id)?;
                let (loss, g) = leaf_loss(data, c, self.fillers, self.grad.is_some());
                if self.grad.is_some() {
                    self.scatter(g, path);
                }
                Ok(loss)
            }
            Structure::Node(children) => {
                let level = path.len();
                let Some(&space) = self.spaces.get(level) else {
                    // an empty node below the last level binds nothing
                    return Ok(0.0);
                };
                let axis = shape.len() - 1;
                let sub_shape = &shape[..axis];
                let mut total = 0.0;
                for (role, child) in children {
                    let r = space.vector(role)?;
                    let sub = contract(data, shape, axis, r);
                    path.push(r);
                    total += self.visit(child, &sub, sub_shape, path)?;
                    path.pop();
                }
                if self.cfg.unbound_weight > 0.0 {
                    for role in space.ids() {
                        if children.iter().any(|(r, _)| r == role) {
                            continue;
                        }
                        let r = space.vector(role)?;
                        let sub = contract(data, shape, axis, r);
                        let m = sub.len() as f64;
                        let w = self.cfg.unbound_weight;
                        total += w * sub.iter().map(|x| x * x).sum::<f64>() / m;
                        if self.grad.is_some() {
                            let g: Vec<f64> = sub.iter().map(|x| 2.0 * w * x / m).collect();
                            let mut p = path.clone();
                            p.push(r);
                            self.scatter(g, &p);
                        }
                    }
                }
                Ok(total)
            }
        }
    }
}

fn run(
    t: &TprTensor,
    gold: &Structure,
    fillers: &FillerVocab,
    role_spaces: &[&RoleSpace],
    cfg: LossConfig,
    want_grad: bool,
) -> Result<(f64, Option<Vec<f64>>)> {
    gold.check_depth(role_spaces.len())?;
    let mut expected = vec![fillers.dim()];
    expected.extend(role_spaces.iter().rev().map(|r| r.dim()));
    if t.shape() != expected.as_slice() {
        return Err(Error::Shape(format!(
            "tensor shape {:?}, configured spaces give {expected:?}",
            t.shape()
        )));
    }
    let mut walk = Walk {
        fillers,
        spaces: role_spaces,
        cfg,
        grad: want_grad.then(|| vec![0.0; t.len()]),
    };
    let loss = walk.visit(gold, t.data(), t.shape(), &mut Vec::new())?;
    Ok((loss, walk.grad))
}

/// Sum over the gold leaves of `-log softmax(s)[gold]`, where `s` compares
/// the unbinding of the leaf's role path with every filler.
pub fn unbinding_loss(
    t: &TprTensor,
    gold: &Structure,
    fillers: &FillerVocab,
    role_spaces: &[&RoleSpace],
    cfg: LossConfig,
) -> Result<f64> {
    run(t, gold, fillers, role_spaces, cfg, false).map(|(l, _)| l)
}

/// Loss and its gradient with respect to every entry of `t`.
pub fn unbinding_loss_grad(
    t: &TprTensor,
    gold: &Structure,
    fillers: &FillerVocab,
    role_spaces: &[&RoleSpace],
    cfg: LossConfig,
) -> Result<(f64, Vec<f64>)> {
    run(t, gold, fillers, role_spaces, cfg, true).map(|(l, g)| (l, g.expect("requested")))
}
