use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest Gram eigenvalue accepted for a random role space.
pub const MIN_GRAM_EIGENVALUE: f64 = 1e-6;
const MAX_RESAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoleScheme {
    /// Standard basis without a seed, a seeded random orthonormal set with one.
    Orthonormal,
    /// Seeded unit Gaussian vectors, linearly independent.
    Random,
    /// Caller-supplied vectors, normalised.
    Custom,
}

/// Role identifiers embedded as unit vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceDoc<RoleScheme>", into = "SpaceDoc<RoleScheme>")]
pub struct RoleSpace {
    dim: usize,
    scheme: RoleScheme,
    seed: Option<u64>,
    ids: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Vec<Vec<f64>>,
}

fn index_ids<S: AsRef<str>>(ids: &[S]) -> Result<(Vec<String>, HashMap<String, usize>)> {
    let ids: Vec<String> = ids.iter().map(|s| s.as_ref().to_string()).collect();
    let mut index = HashMap::with_capacity(ids.len());
    for (i, id) in ids.iter().enumerate() {
        if index.insert(id.clone(), i).is_some() {
            return Err(Error::Config(format!("duplicate id {id:?}")));
        }
    }
    Ok((ids, index))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

fn normalise(mut v: Vec<f64>) -> Option<Vec<f64>> {
    let n = norm(&v);
    if n < 1e-12 || !n.is_finite() {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= n);
    Some(v)
}

fn seeded_orthonormal(k: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    while basis.len() < k {
        let mut v = gaussian(&mut rng, dim);
        // Two passes of modified Gram-Schmidt keep the set orthogonal to
        // machine precision.
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        if norm(&v) > 1e-6 {
            basis.push(normalise(v).expect("non-zero"));
        }
    }
    basis
}

/// Smallest eigenvalue of the Gram matrix of `vectors`.
pub fn min_gram_eigenvalue(vectors: &[Vec<f64>]) -> f64 {
    let k = vectors.len();
    if k == 0 {
        return f64::INFINITY;
    }
    let gram = DMatrix::from_fn(k, k, |i, j| dot(&vectors[i], &vectors[j]));
    gram.symmetric_eigen().eigenvalues.min()
}

fn seeded_independent(k: usize, dim: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_RESAMPLES {
        let vs: Option<Vec<Vec<f64>>> = (0..k).map(|_| normalise(gaussian(&mut rng, dim))).collect();
        if let Some(vs) = vs {
            if min_gram_eigenvalue(&vs) > MIN_GRAM_EIGENVALUE {
                return Ok(vs);
            }
        }
    }
    Err(Error::Capacity { roles: k, dim })
}

/// Builds a role space. `seed` selects a random orthonormal basis (when
/// `None` the standard basis is used) or drives the random scheme.
pub fn make_role_space<S: AsRef<str>>(
    role_ids: &[S],
    dim: usize,
    scheme: RoleScheme,
    seed: Option<u64>,
) -> Result<RoleSpace> {
    if dim == 0 {
        return Err(Error::Domain("role dimension must be positive".into()));
    }
    let (ids, index) = index_ids(role_ids)?;
    let k = ids.len();
    if k > dim {
        return Err(Error::Capacity { roles: k, dim });
    }
    let vectors = match (scheme, seed) {
        (RoleScheme::Orthonormal, None) => (0..k)
            .map(|i| {
                let mut v = vec![0.0; dim];
                v[i] = 1.0;
                v
            })
            .collect(),
        (RoleScheme::Orthonormal, Some(s)) => seeded_orthonormal(k, dim, s),
        (RoleScheme::Random, s) => seeded_independent(k, dim, s.unwrap_or(0))?,
        (RoleScheme::Custom, _) => {
            return Err(Error::Config("custom role spaces are built with RoleSpace::from_vectors".into()))
        }
    };
    Ok(RoleSpace {
        dim,
        scheme,
        seed,
        ids,
        index,
        vectors,
    })
}

impl RoleSpace {
    /// Custom role vectors, normalised to unit length. Zero vectors are
    /// rejected; linear independence is not required.
    pub fn from_vectors<S: AsRef<str>>(role_ids: &[S], vectors: Vec<Vec<f64>>) -> Result<Self> {
        let (ids, index) = index_ids(role_ids)?;
        if ids.len() != vectors.len() {
            return Err(Error::Shape(format!("{} ids but {} vectors", ids.len(), vectors.len())));
        }
        let dim = vectors.first().map_or(0, Vec::len);
        if dim == 0 || vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::Shape("role vectors must share a positive dimension".into()));
        }
        let vectors = vectors
            .into_iter()
            .map(|v| normalise(v).ok_or(Error::UndefinedDirection))
            .collect::<Result<Vec<_>>>()?;
        Ok(RoleSpace {
            dim,
            scheme: RoleScheme::Custom,
            seed: None,
            ids,
            index,
            vectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scheme(&self) -> RoleScheme {
        self.scheme
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn vector(&self, id: &str) -> Result<&[f64]> {
        self.index
            .get(id)
            .map(|&i| self.vectors[i].as_slice())
            .ok_or_else(|| Error::Lookup(format!("role {id:?}")))
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FillerScheme {
    /// Identity embedding, dimension equal to the vocabulary size.
    OneHot,
    /// Seeded unit Gaussian vectors.
    Dense,
    Custom,
}

/// Filler identifiers and their embedding matrix `V` (one column per id).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceDoc<FillerScheme>", into = "SpaceDoc<FillerScheme>")]
pub struct FillerVocab {
    dim: usize,
    scheme: FillerScheme,
    seed: Option<u64>,
    ids: Vec<String>,
    index: HashMap<String, usize>,
    columns: Vec<Vec<f64>>,
    norms: Vec<f64>,
}

impl FillerVocab {
    pub fn one_hot<S: AsRef<str>>(ids: &[S]) -> Result<Self> {
        let (ids, index) = index_ids(ids)?;
        if ids.is_empty() {
            return Err(Error::Domain("empty filler vocabulary".into()));
        }
        let d = ids.len();
        let columns = (0..d)
            .map(|i| {
                let mut v = vec![0.0; d];
                v[i] = 1.0;
                v
            })
            .collect();
        Ok(FillerVocab {
            dim: d,
            scheme: FillerScheme::OneHot,
            seed: None,
            ids,
            index,
            columns,
            norms: vec![1.0; d],
        })
    }

    pub fn dense<S: AsRef<str>>(ids: &[S], dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("filler dimension must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut columns = Vec::with_capacity(ids.len());
        while columns.len() < ids.len() {
            if let Some(v) = normalise(gaussian(&mut rng, dim)) {
                columns.push(v);
            }
        }
        let mut v = FillerVocab::from_columns(ids, columns)?;
        v.scheme = FillerScheme::Dense;
        v.seed = Some(seed);
        Ok(v)
    }

    /// Custom embedding. Columns are used as given; zero columns are
    /// rejected.
    pub fn from_columns<S: AsRef<str>>(ids: &[S], columns: Vec<Vec<f64>>) -> Result<Self> {
        let (ids, index) = index_ids(ids)?;
        if ids.is_empty() {
            return Err(Error::Domain("empty filler vocabulary".into()));
        }
        if ids.len() != columns.len() {
            return Err(Error::Shape(format!("{} ids but {} columns", ids.len(), columns.len())));
        }
        let dim = columns[0].len();
        if dim == 0 || columns.iter().any(|c| c.len() != dim) {
            return Err(Error::Shape("filler columns must share a positive dimension".into()));
        }
        let norms: Vec<f64> = columns.iter().map(|c| norm(c)).collect();
        if norms.iter().any(|&n| n == 0.0 || !n.is_finite()) {
            return Err(Error::UndefinedDirection);
        }
        Ok(FillerVocab {
            dim,
            scheme: FillerScheme::Custom,
            seed: None,
            ids,
            index,
            columns,
            norms,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scheme(&self) -> FillerScheme {
        self.scheme
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn position(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::Lookup(format!("filler {id:?}")))
    }

    pub fn vector(&self, id: &str) -> Result<&[f64]> {
        Ok(&self.columns[self.position(id)?])
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub(crate) fn column_norms(&self) -> &[f64] {
        &self.norms
    }
}

pub(crate) const SPACE_FORMAT_VERSION: u32 = 1;

/// Persisted form of a role or filler space. Seeded schemes store only the
/// seed; custom ones store their vectors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceDoc<K> {
    version: u32,
    scheme: K,
    dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vectors: Option<Vec<Vec<f64>>>,
}

impl From<RoleSpace> for SpaceDoc<RoleScheme> {
    fn from(r: RoleSpace) -> Self {
        SpaceDoc {
            version: SPACE_FORMAT_VERSION,
            scheme: r.scheme,
            dim: r.dim,
            seed: r.seed,
            vectors: (r.scheme == RoleScheme::Custom).then_some(r.vectors),
            ids: r.ids,
        }
    }
}

impl TryFrom<SpaceDoc<RoleScheme>> for RoleSpace {
    type Error = Error;
    fn try_from(d: SpaceDoc<RoleScheme>) -> Result<Self> {
        if d.version != SPACE_FORMAT_VERSION {
            return Err(Error::Model(format!("unsupported role space version {}", d.version)));
        }
        match (d.scheme, d.vectors) {
            (RoleScheme::Custom, Some(v)) => RoleSpace::from_vectors(&d.ids, v),
            (RoleScheme::Custom, None) => Err(Error::Model("custom role space without vectors".into())),
            (scheme, _) => make_role_space(&d.ids, d.dim, scheme, d.seed),
        }
    }
}

impl From<FillerVocab> for SpaceDoc<FillerScheme> {
    fn from(f: FillerVocab) -> Self {
        SpaceDoc {
            version: SPACE_FORMAT_VERSION,
            scheme: f.scheme,
            dim: f.dim,
            seed: f.seed,
            vectors: (f.scheme == FillerScheme::Custom).then_some(f.columns),
            ids: f.ids,
        }
    }
}

impl TryFrom<SpaceDoc<FillerScheme>> for FillerVocab {
    type Error = Error;
    fn try_from(d: SpaceDoc<FillerScheme>) -> Result<Self> {
        if d.version != SPACE_FORMAT_VERSION {
            return Err(Error::Model(format!("unsupported filler vocabulary version {}", d.version)));
        }
        match (d.scheme, d.vectors) {
            (FillerScheme::OneHot, _) => FillerVocab::one_hot(&d.ids),
            (FillerScheme::Dense, _) => FillerVocab::dense(&d.ids, d.dim, d.seed.unwrap_or(0)),
            (FillerScheme::Custom, Some(v)) => FillerVocab::from_columns(&d.ids, v),
            (FillerScheme::Custom, None) => Err(Error::Model("custom filler vocabulary without vectors".into())),
        }
    }
}
