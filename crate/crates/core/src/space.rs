//! Discrete measure spaces and functions on them.
//!
//! A [`DiscreteMeasureSpace`] is a finite, ordered vertex set carrying a
//! strictly positive measure `m`. Functions are stored densely in vertex
//! order. All sesquilinear forms are antilinear in the first argument:
//!
//! ```text
//! <v, u> = sum_x conj(v(x)) u(x) m(x)
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::{czero, Real, C};

#[derive(Debug, Clone)]
pub struct DiscreteMeasureSpace<R> {
    ids: Vec<String>,
    lookup: HashMap<String, usize>,
    measure: Vec<R>,
}

impl<R: Real> DiscreteMeasureSpace<R> {
    pub fn new<S: Into<String>>(vertices: impl IntoIterator<Item = (S, R)>) -> Result<Self> {
        let mut ids = Vec::new();
        let mut lookup = HashMap::new();
        let mut measure = Vec::new();
        for (id, m) in vertices {
            let id = id.into();
            if !(m.is_finite() && m > R::zero()) {
                return Err(Error::InvalidMeasure { vertex: id, value: m.as_f64() });
            }
            if lookup.insert(id.clone(), ids.len()).is_some() {
                return Err(Error::DuplicateVertex(id));
            }
            ids.push(id);
            measure.push(m);
        }
        Ok(Self { ids, lookup, measure })
    }

    /// Space with vertices named `0..measure.len()`.
    pub fn indexed(measure: Vec<R>) -> Result<Self> {
        Self::new(measure.into_iter().enumerate().map(|(i, m)| (i.to_string(), m)))
    }

    /// Space with `n` vertices of unit measure.
    pub fn uniform(n: usize) -> Self {
        Self::indexed(vec![R::one(); n]).expect("unit measure is valid")
    }

    /// Parses the `vertex_id<TAB>measure` text format.
    ///
    /// Blank lines and lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse { line: lineno + 1, message };
            let mut fields = line.split('\t');
            let id = fields.next().unwrap_or_default().trim();
            let value = fields
                .next()
                .ok_or_else(|| parse_err("expected vertex_id<TAB>measure".into()))?
                .trim();
            if fields.next().is_some() {
                return Err(parse_err("too many fields".into()));
            }
            if id.is_empty() {
                return Err(parse_err("empty vertex id".into()));
            }
            let m: f64 = value
                .parse()
                .map_err(|_| parse_err(format!("invalid measure {value:?}")))?;
            if !(m.is_finite() && m > 0.0) {
                return Err(parse_err("measure must be positive".into()));
            }
            rows.push((id.to_string(), R::lit(m)));
        }
        Self::new(rows).map_err(|e| match e {
            Error::DuplicateVertex(id) => Error::Parse {
                line: 0,
                message: format!("duplicate vertex id {id:?}"),
            },
            other => other,
        })
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (id, m) in self.ids.iter().zip(&self.measure) {
            let _ = writeln!(out, "{id}\t{m}");
        }
        out
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, index: usize) -> &str {
        &self.ids[index]
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.lookup
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownVertex(id.to_string()))
    }

    pub fn measure(&self) -> &[R] {
        &self.measure
    }

    pub fn total_mass(&self) -> R {
        self.measure.iter().copied().sum()
    }

    pub(crate) fn check_index(&self, index: usize) -> Result<()> {
        if index < self.len() {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange { index, len: self.len() })
        }
    }
}

impl<R: PartialEq> PartialEq for DiscreteMeasureSpace<R> {
    fn eq(&self, other: &Self) -> bool {
        self.ids == other.ids && self.measure == other.measure
    }
}

pub(crate) fn same_space<R: Real>(
    a: &Arc<DiscreteMeasureSpace<R>>,
    b: &Arc<DiscreteMeasureSpace<R>>,
) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// Element of `C(V)`: a complex value at every vertex of its space.
#[derive(Debug, Clone)]
pub struct VertexFunction<R> {
    space: Arc<DiscreteMeasureSpace<R>>,
    values: Vec<C<R>>,
}

impl<R: Real> VertexFunction<R> {
    pub fn new(space: Arc<DiscreteMeasureSpace<R>>, values: Vec<C<R>>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::ShapeMismatch { expected: space.len(), found: values.len() });
        }
        Ok(Self { space, values })
    }

    pub fn from_real(space: Arc<DiscreteMeasureSpace<R>>, values: &[R]) -> Result<Self> {
        Self::new(space, values.iter().map(|&v| C::new(v, R::zero())).collect())
    }

    pub fn zeros(space: Arc<DiscreteMeasureSpace<R>>) -> Self {
        let n = space.len();
        Self { space, values: vec![czero(); n] }
    }

    pub fn constant(space: Arc<DiscreteMeasureSpace<R>>, value: C<R>) -> Self {
        let n = space.len();
        Self { space, values: vec![value; n] }
    }

    /// Indicator of a single vertex.
    pub fn delta(space: Arc<DiscreteMeasureSpace<R>>, index: usize) -> Result<Self> {
        space.check_index(index)?;
        let mut f = Self::zeros(space);
        f.values[index] = C::new(R::one(), R::zero());
        Ok(f)
    }

    pub fn space(&self) -> &Arc<DiscreteMeasureSpace<R>> {
        &self.space
    }

    pub fn values(&self) -> &[C<R>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C<R>] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<C<R>> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> R {
        self.values.iter().fold(R::zero(), |acc, v| acc.max(v.norm()))
    }

    /// `ℓ²(V, m)` norm.
    pub fn norm(&self) -> R {
        self.norm_sq().sqrt()
    }

    pub fn norm_sq(&self) -> R {
        self.values
            .iter()
            .zip(self.space.measure())
            .map(|(v, &m)| v.norm_sqr() * m)
            .sum()
    }

    pub fn scale(&self, factor: C<R>) -> Self {
        Self { space: self.space.clone(), values: self.values.iter().map(|&v| v * factor).collect() }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.ensure_same_space(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| a - b).collect();
        Ok(Self { space: self.space.clone(), values })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.ensure_same_space(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| a + b).collect();
        Ok(Self { space: self.space.clone(), values })
    }

    /// `self += factor * other`.
    pub fn axpy(&mut self, factor: C<R>, other: &Self) -> Result<()> {
        self.ensure_same_space(other)?;
        for (a, &b) in self.values.iter_mut().zip(&other.values) {
            *a = *a + factor * b;
        }
        Ok(())
    }

    pub(crate) fn ensure_same_space(&self, other: &Self) -> Result<()> {
        if same_space(&self.space, &other.space) {
            Ok(())
        } else {
            Err(Error::DomainMismatch)
        }
    }

    pub(crate) fn ensure_on(&self, space: &Arc<DiscreteMeasureSpace<R>>) -> Result<()> {
        if same_space(&self.space, space) {
            Ok(())
        } else {
            Err(Error::DomainMismatch)
        }
    }
}

/// Element of `C_c(V)`: a function with an explicitly declared finite support.
#[derive(Debug, Clone)]
pub struct CompactFunction<R> {
    function: VertexFunction<R>,
    support: Vec<usize>,
}

impl<R: Real> CompactFunction<R> {
    /// Values outside `support` must vanish.
    pub fn new(function: VertexFunction<R>, support: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut support: Vec<usize> = support.into_iter().collect();
        support.sort_unstable();
        support.dedup();
        for &i in &support {
            function.space().check_index(i)?;
        }
        let mut inside = vec![false; function.len()];
        for &i in &support {
            inside[i] = true;
        }
        for (i, v) in function.values().iter().enumerate() {
            if !inside[i] && *v != czero() {
                return Err(Error::InvalidArgument(format!(
                    "value at vertex {:?} is nonzero outside the declared support",
                    function.space().id(i)
                )));
            }
        }
        Ok(Self { function, support })
    }

    /// Support taken to be the set of vertices with nonzero value.
    pub fn from_function(function: VertexFunction<R>) -> Self {
        let support = function
            .values()
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != czero())
            .map(|(i, _)| i)
            .collect();
        Self { function, support }
    }

    pub fn delta(space: Arc<DiscreteMeasureSpace<R>>, index: usize) -> Result<Self> {
        let f = VertexFunction::delta(space, index)?;
        Ok(Self { function: f, support: vec![index] })
    }

    pub fn function(&self) -> &VertexFunction<R> {
        &self.function
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }
}

/// `⟨v, u⟩ = Σ_x conj(v(x)) u(x) m(x)`.
pub fn inner_product<R: Real>(
    v: &VertexFunction<R>,
    u: &VertexFunction<R>,
    space: &Arc<DiscreteMeasureSpace<R>>,
) -> Result<C<R>> {
    v.ensure_on(space)?;
    u.ensure_on(space)?;
    Ok(raw_inner(v.values(), u.values(), space.measure()))
}

pub(crate) fn raw_inner<R: Real>(v: &[C<R>], u: &[C<R>], m: &[R]) -> C<R> {
    let mut acc = czero();
    for ((a, b), &w) in v.iter().zip(u).zip(m) {
        acc = acc + a.conj() * b * w;
    }
    acc
}

/// The pairing `(g, u)_m` between `C(V)` and `C_c(V)`; sums over the support of `u`.
pub fn dual_pairing<R: Real>(g: &VertexFunction<R>, u: &CompactFunction<R>) -> Result<C<R>> {
    g.ensure_same_space(u.function())?;
    let m = g.space().measure();
    let mut acc = czero();
    for &x in u.support() {
        acc = acc + g.values()[x].conj() * u.function().values()[x] * m[x];
    }
    Ok(acc)
}

/// `Σ_x ω(x)² |u(x)|² m(x)`.
pub fn weighted_norm_sq<R: Real>(
    u: &VertexFunction<R>,
    omega: &[R],
    space: &Arc<DiscreteMeasureSpace<R>>,
) -> Result<R> {
    u.ensure_on(space)?;
    if omega.len() != space.len() {
        return Err(Error::ShapeMismatch { expected: space.len(), found: omega.len() });
    }
    Ok(u
        .values()
        .iter()
        .zip(omega)
        .zip(space.measure())
        .map(|((v, &w), &m)| w * w * v.norm_sqr() * m)
        .sum())
}
