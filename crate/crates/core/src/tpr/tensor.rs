use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::space::{FillerVocab, RoleSpace};
use crate::error::{Error, Result};

/// One entry of a binding record: a filler and the roles it sits under,
/// outermost first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Binding {
    pub filler: String,
    pub path: Vec<String>,
}

/// Dense tensor product representation.
///
/// Axis 0 is the filler axis. A depth-k structure has shape
/// `(d, n_{k-1}, …, n_1, n_0)`: each binding level appends its role axis, so
/// level 0 (the outermost roles) is the last axis. Data is stored with axis 0
/// varying fastest, which is also the flattening order seen by the
/// autoencoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TprTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
    #[serde(default)]
    bindings: Vec<Binding>,
}

impl TprTensor {
    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        TprTensor {
            shape,
            data: vec![0.0; n],
            bindings: Vec::new(),
        }
    }

    pub fn from_data(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.iter().product::<usize>() != data.len() {
            return Err(Error::Shape(format!(
                "{} values do not fill shape {shape:?}",
                data.len()
            )));
        }
        Ok(TprTensor {
            shape,
            data,
            bindings: Vec::new(),
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Number of role levels (rank minus the filler axis).
    pub fn depth(&self) -> usize {
        self.shape.len() - 1
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn bindings(&self) -> &[Binding] {
        &self.bindings
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Elementwise sum; binding records are concatenated.
    pub fn add(&self, other: &TprTensor) -> Result<TprTensor> {
        if self.shape != other.shape {
            return Err(Error::Shape(format!("{:?} vs {:?}", self.shape, other.shape)));
        }
        let mut bindings = self.bindings.clone();
        bindings.extend(other.bindings.iter().cloned());
        Ok(TprTensor {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
            bindings,
        })
    }

    pub fn scale(&self, a: f64) -> TprTensor {
        TprTensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|x| a * x).collect(),
            bindings: self.bindings.clone(),
        }
    }

    pub fn max_abs_diff(&self, other: &TprTensor) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `a ⊗ v`, with `v` appended as the new last (slowest) axis.
pub(crate) fn outer_append(a: &[f64], v: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() * v.len());
    for &r in v {
        out.extend(a.iter().map(|x| x * r));
    }
    out
}

/// Contracts `data` (with `shape`) against `v` along `axis`.
pub(crate) fn contract(data: &[f64], shape: &[usize], axis: usize, v: &[f64]) -> Vec<f64> {
    let inner: usize = shape[..axis].iter().product();
    let n = shape[axis];
    let outer: usize = shape[axis + 1..].iter().product();
    let mut out = vec![0.0; inner * outer];
    for o in 0..outer {
        for (r, &w) in v.iter().enumerate().take(n) {
            if w == 0.0 {
                continue;
            }
            let src = &data[(o * n + r) * inner..(o * n + r + 1) * inner];
            let dst = &mut out[o * inner..(o + 1) * inner];
            dst.iter_mut().zip(src).for_each(|(d, s)| *d += w * s);
        }
    }
    out
}

/// `T = Σ f_i ⊗ r_j` over the binding list.
pub fn bind<F: AsRef<str>, R: AsRef<str>>(
    bindings: &[(F, R)],
    fillers: &FillerVocab,
    roles: &RoleSpace,
) -> Result<TprTensor> {
    let node = Structure::Node(
        bindings
            .iter()
            .map(|(f, r)| (r.as_ref().to_string(), Structure::Leaf(f.as_ref().to_string())))
            .collect(),
    );
    bind_hierarchical(&node, fillers, &[roles])
}

/// A filler/role tree. Leaves name fillers; nodes list `(role, child)` pairs
/// and are bound with the role space of their level (the root's children use
/// level 0).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Structure {
    Leaf(String),
    Node(Vec<(String, Structure)>),
}

impl Structure {
    /// Every leaf with its role path, in tree order.
    pub fn leaves(&self) -> Vec<Binding> {
        fn walk(s: &Structure, path: &mut Vec<String>, out: &mut Vec<Binding>) {
            match s {
                Structure::Leaf(f) => out.push(Binding {
                    filler: f.clone(),
                    path: path.clone(),
                }),
                Structure::Node(children) => {
                    for (role, child) in children {
                        path.push(role.clone());
                        walk(child, path, out);
                        path.pop();
                    }
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut Vec::new(), &mut out);
        out
    }

    /// Checks that every leaf sits exactly `depth` levels down. Empty nodes
    /// are allowed anywhere.
    pub(crate) fn check_depth(&self, depth: usize) -> Result<()> {
        match (self, depth) {
            (Structure::Leaf(_), 0) => Ok(()),
            (Structure::Leaf(f), _) => Err(Error::Shape(format!(
                "filler {f:?} sits {depth} level(s) above the configured depth"
            ))),
            (Structure::Node(children), 0) if !children.is_empty() => {
                Err(Error::Shape("structure is deeper than the configured role spaces".into()))
            }
            (Structure::Node(children), _) => children
                .iter()
                .try_for_each(|(_, c)| c.check_depth(depth.saturating_sub(1))),
        }
    }
}

fn build(s: &Structure, fillers: &FillerVocab, spaces: &[&RoleSpace], level: usize) -> Result<Vec<f64>> {
    match s {
        Structure::Leaf(f) => Ok(fillers.vector(f)?.to_vec()),
        Structure::Node(children) => {
            let size = fillers.dim() * spaces[level..].iter().map(|r| r.dim()).product::<usize>();
            let mut acc = vec![0.0; size];
            let mut seen = HashSet::new();
            for (role, child) in children {
                let r = spaces[level].vector(role)?;
                if !seen.insert(role.as_str()) {
                    log::warn!("role {role:?} bound more than once at level {level}");
                }
                let inner = build(child, fillers, spaces, level + 1)?;
                acc.iter_mut()
                    .zip(outer_append(&inner, r))
                    .for_each(|(a, b)| *a += b);
            }
            Ok(acc)
        }
    }
}

/// Binds a tree level by level: each subtree's tensor acts as the filler of
/// its parent role. `role_spaces[0]` holds the outermost roles.
pub fn bind_hierarchical(
    structure: &Structure,
    fillers: &FillerVocab,
    role_spaces: &[&RoleSpace],
) -> Result<TprTensor> {
    structure.check_depth(role_spaces.len())?;
    let data = build(structure, fillers, role_spaces, 0)?;
    let mut shape = vec![fillers.dim()];
    shape.extend(role_spaces.iter().rev().map(|r| r.dim()));
    Ok(TprTensor {
        shape,
        data,
        bindings: structure.leaves(),
    })
}

/// Contracts `t` with `role` at `level` (0 = outermost remaining level).
/// The result has one axis fewer; its binding record keeps the bindings
/// under `role` with that path step removed.
pub fn unbind(t: &TprTensor, role_id: &str, level: usize, roles: &RoleSpace) -> Result<TprTensor> {
    if level >= t.depth() {
        return Err(Error::Shape(format!(
            "level {level} out of range for a depth-{} tensor",
            t.depth()
        )));
    }
    let axis = t.depth() - level;
    if t.shape[axis] != roles.dim() {
        return Err(Error::Shape(format!(
            "axis {axis} has size {} but roles have dimension {}",
            t.shape[axis],
            roles.dim()
        )));
    }
    let r = roles.vector(role_id)?;
    let data = contract(&t.data, &t.shape, axis, r);
    let mut shape = t.shape.clone();
    shape.remove(axis);
    let bindings = t
        .bindings
        .iter()
        .filter(|b| b.path.get(level).map(String::as_str) == Some(role_id))
        .map(|b| {
            let mut path = b.path.clone();
            path.remove(level);
            Binding {
                filler: b.filler.clone(),
                path,
            }
        })
        .collect();
    Ok(TprTensor {
        shape,
        data,
        bindings,
    })
}

/// Unbinds a full role path, outermost first, down to a filler vector.
pub fn unbind_path<S: AsRef<str>>(t: &TprTensor, path: &[S], role_spaces: &[&RoleSpace]) -> Result<Vec<f64>> {
    if path.len() != t.depth() || role_spaces.len() != t.depth() {
        return Err(Error::Shape(format!(
            "path of length {} for a depth-{} tensor",
            path.len(),
            t.depth()
        )));
    }
    let mut cur = t.clone();
    for (role, space) in path.iter().zip(role_spaces) {
        cur = unbind(&cur, role.as_ref(), 0, space)?;
    }
    Ok(cur.data)
}
