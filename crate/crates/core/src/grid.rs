//! Piecewise-constant functions on the finest cells, cube averages and norms.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::sync::{Arc, Mutex, OnceLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

use crate::dyadic::{Cube, Domain, Node};
use crate::error::{param, Error, Result};

/// Per-node aggregates (sums or maxima) of one cell-wise power of a function.
pub struct Pyramid {
    domain: Domain,
    data: Vec<f64>,
}

impl Pyramid {
    fn build(domain: Domain, leaves: Vec<f64>, combine: fn(f64, f64) -> f64) -> Self {
        let d = domain.dim();
        let fan = 1usize << d;
        let mut data = vec![0.0; domain.node_count()];
        let leaf_off = domain.level_offset(domain.max_level());
        data[leaf_off..].copy_from_slice(&leaves);
        for level in (0..domain.max_level()).rev() {
            let off = domain.level_offset(level);
            let child_off = domain.level_offset(level + 1);
            for z in 0..domain.nodes_at(level) {
                let base = child_off + z * fan;
                let mut acc = data[base];
                for e in 1..fan {
                    acc = combine(acc, data[base + e]);
                }
                data[off + z] = acc;
            }
        }
        Self { domain, data }
    }

    pub fn get(&self, node: Node) -> f64 {
        self.data[node.id(&self.domain)]
    }

    /// Values indexed by [`Node::id`].
    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// A cube with corners on the finest-cell lattice, in cell units.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellCube {
    pub lo: Vec<usize>,
    pub side: usize,
}

impl CellCube {
    pub fn from_node(domain: &Domain, node: Node) -> Self {
        let cube = domain.cube_of(node);
        let side = 1usize << (domain.max_level() - node.level);
        let lo = cube.index().iter().map(|&k| k as usize * side).collect();
        Self { lo, side }
    }

    /// The shift-0 dyadic cube with the same extent, if there is one.
    pub fn to_dyadic(&self, domain: &Domain) -> Option<Cube> {
        if !self.side.is_power_of_two() || self.side > domain.side_cells() {
            return None;
        }
        if self.lo.iter().any(|&l| l % self.side != 0) {
            return None;
        }
        let level = domain.max_level() - self.side.trailing_zeros();
        Cube::dyadic(
            level,
            self.lo.iter().map(|&l| (l / self.side) as i64).collect(),
        )
        .ok()
    }

    /// Row-major indices of the cells inside.
    pub fn rows(&self, domain: &Domain) -> Vec<usize> {
        let d = self.lo.len();
        let count = self.side.pow(d as u32);
        let mut out = Vec::with_capacity(count);
        let mut offset = vec![0usize; d];
        for _ in 0..count {
            let coords: Vec<usize> = self.lo.iter().zip(&offset).map(|(l, o)| l + o).collect();
            out.push(domain.row_index(&coords));
            for axis in (0..d).rev() {
                offset[axis] += 1;
                if offset[axis] < self.side {
                    break;
                }
                offset[axis] = 0;
            }
        }
        out
    }

    pub fn describe(&self, domain: &Domain) -> String {
        match self.to_dyadic(domain) {
            Some(cube) => cube.to_string(),
            None => {
                let lo: Vec<String> = self.lo.iter().map(|l| l.to_string()).collect();
                format!("lo={};side={}", lo.join(","), self.side)
            }
        }
    }
}

#[derive(Clone, Copy, Default)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    fn add(self, other: Dd) -> Dd {
        let s = self.hi + other.hi;
        let bb = s - self.hi;
        let err = (self.hi - (s - bb)) + (other.hi - bb);
        let lo = err + self.lo + other.lo;
        let hi = s + lo;
        Dd {
            hi,
            lo: lo - (hi - s),
        }
    }

    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

/// Summed-volume table (row-major, compensated) for sums over arbitrary lattice boxes.
pub struct BoxTable {
    dim: usize,
    stride: usize,
    data: Vec<Dd>,
}

impl BoxTable {
    fn build(domain: &Domain, row_values: &[f64]) -> Self {
        let d = domain.dim();
        let n = domain.side_cells();
        let stride = n + 1;
        let mut data = vec![Dd::default(); stride.pow(d as u32)];
        for (row, &v) in row_values.iter().enumerate() {
            let coords = domain.cell_coords(row);
            let idx = coords.iter().fold(0, |acc, &c| acc * stride + c + 1);
            data[idx] = Dd { hi: v, lo: 0.0 };
        }
        for axis in 0..d {
            let step = stride.pow((d - 1 - axis) as u32);
            for idx in 0..data.len() {
                if !(idx / step).is_multiple_of(stride) {
                    data[idx] = data[idx].add(data[idx - step]);
                }
            }
        }
        Self {
            dim: d,
            stride,
            data,
        }
    }

    /// Sum over the cells of `cube`.
    pub fn sum(&self, cube: &CellCube) -> f64 {
        let hi: Vec<usize> = cube.lo.iter().map(|l| l + cube.side).collect();
        self.sum_box(&cube.lo, &hi)
    }

    /// Sum over the cells `lo <= c < hi` (per axis).
    pub fn sum_box(&self, lo: &[usize], hi: &[usize]) -> f64 {
        let mut total = Dd::default();
        for corner in 0..1usize << self.dim {
            let mut idx = 0;
            let mut lower = 0;
            for axis in 0..self.dim {
                let take_lo = (corner >> axis) & 1 == 1;
                let c = if take_lo { lo[axis] } else { hi[axis] };
                lower += take_lo as u32;
                idx = idx * self.stride + c;
            }
            let term = self.data[idx];
            total = total.add(if lower % 2 == 1 { term.neg() } else { term });
        }
        total.hi + total.lo
    }
}

#[derive(Default)]
struct Cache {
    morton: OnceLock<Arc<Vec<f64>>>,
    sums: Mutex<HashMap<u64, Arc<Pyramid>>>,
    maxima: Mutex<HashMap<u64, Arc<Pyramid>>>,
    tables: Mutex<HashMap<u64, Arc<BoxTable>>>,
}

/// A nonnegative function, constant on each finest cell, stored row-major.
///
/// Cell-wise power aggregates are cached lazily per exponent; the cache is
/// shared between clones since the values never change.
#[derive(Clone)]
pub struct GridFunction {
    domain: Domain,
    values: Arc<Vec<f64>>,
    cache: Arc<Cache>,
}

impl fmt::Debug for GridFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridFunction")
            .field("dim", &self.domain.dim())
            .field("max_level", &self.domain.max_level())
            .field("values", &self.values)
            .finish()
    }
}

impl PartialEq for GridFunction {
    fn eq(&self, other: &Self) -> bool {
        self.domain == other.domain && self.values == other.values
    }
}

fn power(v: f64, e: f64) -> f64 {
    if e == 1.0 {
        v
    } else {
        v.powf(e)
    }
}

impl GridFunction {
    /// Row-major values; each must be finite and nonnegative.
    pub fn new(domain: Domain, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.cell_count() {
            return Err(Error::LengthMismatch {
                expected: domain.cell_count(),
                got: values.len(),
            });
        }
        if let Some((cell, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::InvalidValue {
                cell,
                value,
                reason: "values must be finite and nonnegative",
            });
        }
        Ok(Self {
            domain,
            values: Arc::new(values),
            cache: Arc::default(),
        })
    }

    /// Like [`GridFunction::new`] but every value must be strictly positive.
    pub fn weight(domain: Domain, values: Vec<f64>) -> Result<Self> {
        let f = Self::new(domain, values)?;
        f.require_weight()?;
        Ok(f)
    }

    pub fn constant(domain: Domain, c: f64) -> Result<Self> {
        Self::new(domain, vec![c; domain.cell_count()])
    }

    /// Values given in Morton order.
    pub fn from_morton(domain: Domain, morton: Vec<f64>) -> Result<Self> {
        if morton.len() != domain.cell_count() {
            return Err(Error::LengthMismatch {
                expected: domain.cell_count(),
                got: morton.len(),
            });
        }
        let mut rows = vec![0.0; morton.len()];
        for (m, row) in domain.morton_to_row().into_iter().enumerate() {
            rows[row] = morton[m];
        }
        let f = Self::new(domain, rows)?;
        let _ = f.cache.morton.set(Arc::new(morton));
        Ok(f)
    }

    /// Value per cell from its integer coordinates.
    pub fn from_fn(domain: Domain, mut value: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let values = (0..domain.cell_count())
            .map(|row| value(&domain.cell_coords(row)))
            .collect();
        Self::new(domain, values)
    }

    /// Indicator of a set of row-major cells.
    pub fn indicator(domain: Domain, rows: &[usize]) -> Result<Self> {
        let mut values = vec![0.0; domain.cell_count()];
        for &r in rows {
            *values.get_mut(r).ok_or(Error::LengthMismatch {
                expected: domain.cell_count(),
                got: r + 1,
            })? = 1.0;
        }
        Self::new(domain, values)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_weight(&self) -> bool {
        self.values.iter().all(|&v| v > 0.0)
    }

    pub fn require_weight(&self) -> Result<()> {
        match self.values.iter().enumerate().find(|(_, &v)| v <= 0.0) {
            Some((cell, &value)) => Err(Error::InvalidValue {
                cell,
                value,
                reason: "a weight must be strictly positive",
            }),
            None => Ok(()),
        }
    }

    pub fn same_domain(&self, other: &GridFunction) -> Result<()> {
        if self.domain == other.domain {
            Ok(())
        } else {
            Err(Error::DomainMismatch)
        }
    }

    /// Values in Morton order (cached).
    pub fn morton_values(&self) -> Arc<Vec<f64>> {
        self.cache
            .morton
            .get_or_init(|| {
                Arc::new(
                    self.domain
                        .morton_to_row()
                        .into_iter()
                        .map(|r| self.values[r])
                        .collect(),
                )
            })
            .clone()
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.domain, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Cell-wise power `f^e`.
    pub fn powf(&self, e: f64) -> Result<Self> {
        if e < 0.0 {
            self.require_weight()?;
        }
        self.map(|v| power(v, e))
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        self.map(|v| c * v)
    }

    pub fn mul(&self, other: &GridFunction) -> Result<Self> {
        self.same_domain(other)?;
        Self::new(
            self.domain,
            self.values
                .iter()
                .zip(other.values.iter())
                .map(|(a, b)| a * b)
                .collect(),
        )
    }

    pub fn div(&self, other: &GridFunction) -> Result<Self> {
        self.same_domain(other)?;
        other.require_weight()?;
        Self::new(
            self.domain,
            self.values
                .iter()
                .zip(other.values.iter())
                .map(|(a, b)| a / b)
                .collect(),
        )
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// `∫ f dx`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.domain.cell_volume()
    }

    /// Per-node sums of `f^e` over the cells of each shift-0 cube (cached).
    pub fn power_sums(&self, e: f64) -> Arc<Pyramid> {
        let mut map = self.cache.sums.lock().expect("cache poisoned");
        map.entry(e.to_bits())
            .or_insert_with(|| {
                let leaves = self.morton_values().iter().map(|&v| power(v, e)).collect();
                Arc::new(Pyramid::build(self.domain, leaves, |a, b| a + b))
            })
            .clone()
    }

    /// Per-node maxima of `f^e` (cached).
    pub fn power_maxima(&self, e: f64) -> Arc<Pyramid> {
        let mut map = self.cache.maxima.lock().expect("cache poisoned");
        map.entry(e.to_bits())
            .or_insert_with(|| {
                let leaves = self.morton_values().iter().map(|&v| power(v, e)).collect();
                Arc::new(Pyramid::build(self.domain, leaves, f64::max))
            })
            .clone()
    }

    /// Summed-volume table of `f^e` for arbitrary lattice cubes (cached).
    pub fn power_table(&self, e: f64) -> Arc<BoxTable> {
        let mut map = self.cache.tables.lock().expect("cache poisoned");
        map.entry(e.to_bits())
            .or_insert_with(|| {
                let powered: Vec<f64> = self.values.iter().map(|&v| power(v, e)).collect();
                Arc::new(BoxTable::build(&self.domain, &powered))
            })
            .clone()
    }

    /// `<f^e>_{1,Q}` for a shift-0 cube.
    pub fn node_mean(&self, e: f64, node: Node) -> f64 {
        self.power_sums(e).get(node) / self.domain.cells_per_node(node.level) as f64
    }

    /// `∫_Q f dx` for a shift-0 cube.
    pub fn node_integral(&self, node: Node) -> f64 {
        self.power_sums(1.0).get(node) * self.domain.cell_volume()
    }

    /// Parse the weight mini-language (see the crate README).
    pub fn from_spec(domain: Domain, spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let num = |s: &str, what: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("bad {what} {s:?} in {spec:?}")))
        };
        match kind {
            "const" => Self::constant(domain, num(rest, "constant")?),
            "power" => {
                let (a, center) = rest.split_once(':').unwrap_or((rest, "0"));
                let a = num(a, "exponent")?;
                let mut c: Vec<f64> = center
                    .split(',')
                    .map(|x| num(x, "center"))
                    .collect::<Result<_>>()?;
                if c.len() == 1 {
                    c = vec![c[0]; domain.dim()];
                }
                if c.len() != domain.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: domain.dim(),
                        got: c.len(),
                    });
                }
                Ok(power_weight(domain, a, &c))
            }
            "cells" => {
                let values = rest
                    .split(',')
                    .map(|x| num(x, "cell value"))
                    .collect::<Result<Vec<_>>>()?;
                Self::new(domain, values)
            }
            "random-lognormal" => {
                let (seed, sigma) = rest.split_once(':').ok_or_else(|| {
                    Error::InvalidParameter(format!("expected seed:sigma in {spec:?}"))
                })?;
                let seed = seed
                    .trim()
                    .parse::<u64>()
                    .map_err(|_| Error::InvalidParameter(format!("bad seed in {spec:?}")))?;
                random_lognormal(domain, seed, num(sigma, "sigma")?)
            }
            "file" => {
                let f = Self::read_file(rest)?;
                if f.domain != domain {
                    return Err(Error::DomainMismatch);
                }
                Ok(f)
            }
            _ => param(format!("unknown function spec {spec:?}")),
        }
    }

    /// Text form: a line `d L`, then one value per line, row-major.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.domain.dim(), self.domain.max_level());
        for v in self.values.iter() {
            out.push_str(&format!("{v:e}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim().starts_with('#'));
        let (i, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "empty input".into(),
        })?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        let bad_header = || Error::Parse {
            line: i + 1,
            message: format!("expected 'd L', got {header:?}"),
        };
        if parts.len() != 2 {
            return Err(bad_header());
        }
        let d = parts[0].parse::<usize>().map_err(|_| bad_header())?;
        let l = parts[1].parse::<u32>().map_err(|_| bad_header())?;
        let domain = Domain::new(d, l)?;
        let values = lines
            .map(|(i, l)| {
                l.trim().parse::<f64>().map_err(|_| Error::Parse {
                    line: i + 1,
                    message: format!("bad value {l:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(domain, values)
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// `|x - center|^a` at cell midpoints, with the distance clamped below at `2^-L / 2`.
pub fn power_weight(domain: Domain, a: f64, center: &[f64]) -> GridFunction {
    let h = 1.0 / domain.side_cells() as f64;
    GridFunction::from_fn(domain, |coords| {
        let dist = coords
            .iter()
            .zip(center)
            .map(|(&k, &c)| {
                let x = (k as f64 + 0.5) * h - c;
                x * x
            })
            .sum::<f64>()
            .sqrt()
            .max(h / 2.0);
        dist.powf(a)
    })
    .expect("power weights are positive")
}

/// Independent log-normal cell values `exp(sigma Z)`.
pub fn random_lognormal(domain: Domain, seed: u64, sigma: f64) -> Result<GridFunction> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return param(format!("sigma must be nonnegative, got {sigma}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = LogNormal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    GridFunction::new(
        domain,
        (0..domain.cell_count())
            .map(|_| dist.sample(&mut rng))
            .collect(),
    )
}

/// Conjugate exponent: `p/(p-1)`, with `1' = ∞` and `∞' = 1`; NaN below 1.
pub fn conjugate(p: f64) -> f64 {
    if p == f64::INFINITY {
        1.0
    } else if p == 1.0 {
        f64::INFINITY
    } else if p > 1.0 {
        p / (p - 1.0)
    } else {
        f64::NAN
    }
}

/// Exponents `p_1, ..., p_m` in `(0, ∞]` with `1/p = Σ 1/p_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentTuple {
    p: Vec<f64>,
}

impl ExponentTuple {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidExponent("need at least one exponent".into()));
        }
        if let Some(bad) = p.iter().find(|&&x| !(x > 0.0)) {
            return Err(Error::InvalidExponent(format!(
                "exponents must lie in (0, inf], got {bad}"
            )));
        }
        Ok(Self { p })
    }

    /// Comma-separated list; `inf` allowed.
    pub fn parse(text: &str) -> Result<Self> {
        let p = text
            .split(',')
            .map(|s| {
                let s = s.trim();
                if s.eq_ignore_ascii_case("inf") || s == "∞" {
                    Ok(f64::INFINITY)
                } else {
                    s.parse::<f64>()
                        .map_err(|_| Error::InvalidExponent(format!("cannot parse {s:?}")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(p)
    }

    pub fn m(&self) -> usize {
        self.p.len()
    }

    pub fn exponents(&self) -> &[f64] {
        &self.p
    }

    pub fn pj(&self, j: usize) -> f64 {
        self.p[j]
    }

    /// The harmonic combination `p`.
    pub fn p(&self) -> f64 {
        let s: f64 = self.p.iter().map(|x| 1.0 / x).sum();
        1.0 / s
    }

    /// `p_j'`.
    pub fn conj(&self, j: usize) -> f64 {
        conjugate(self.p[j])
    }

    /// `p_0 := p'`.
    pub fn p0(&self) -> f64 {
        conjugate(self.p())
    }

    /// Require every `p_j` in `[lo, ∞]` (or `(lo, ∞]` when `open`).
    pub fn require_at_least(&self, lo: f64, open: bool) -> Result<()> {
        match self
            .p
            .iter()
            .find(|&&x| if open { x <= lo } else { x < lo })
        {
            Some(bad) => Err(Error::InvalidExponent(format!(
                "p_j = {bad} outside {}{lo}, inf]",
                if open { "(" } else { "[" }
            ))),
            None => Ok(()),
        }
    }
}

impl fmt::Display for ExponentTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .p
            .iter()
            .map(|x| {
                if x.is_infinite() {
                    "inf".into()
                } else {
                    x.to_string()
                }
            })
            .collect();
        write!(f, "({})", parts.join(","))
    }
}

/// `<f>^w_{p,Q}`: the (weighted) mean of order `p` over a shift-0 cube; `p = ∞` gives the max.
pub fn average(f: &GridFunction, p: f64, q: &Cube, w: Option<&GridFunction>) -> Result<f64> {
    let domain = f.domain();
    let node = domain.node_of(q)?;
    if !(p > 0.0) {
        return Err(Error::InvalidExponent(format!(
            "average needs p > 0, got {p}"
        )));
    }
    match w {
        None => Ok(if p.is_infinite() {
            f.power_maxima(1.0).get(node)
        } else {
            f.node_mean(p, node).powf(1.0 / p)
        }),
        Some(w) => {
            f.same_domain(w)?;
            w.require_weight()?;
            let fv = f.morton_values();
            let wv = w.morton_values();
            let range = node.cell_range(domain);
            if p.is_infinite() {
                return Ok(fv[range].iter().cloned().fold(0.0, f64::max));
            }
            let mass: f64 = wv[range.clone()].iter().sum();
            if mass <= 0.0 {
                return Err(Error::ZeroWeightMass(q.to_string()));
            }
            let num: f64 = range.map(|m| power(fv[m], p) * wv[m]).sum();
            Ok((num / mass).powf(1.0 / p))
        }
    }
}

/// `w(A) = Σ_{cells in A} w · |cell|`; row-major cell indices.
pub fn measure(w: &GridFunction, cells: &[usize]) -> f64 {
    cells.iter().map(|&c| w.values()[c]).sum::<f64>() * w.domain().cell_volume()
}

/// Distinct positive values of `f` in decreasing order with the mass of `{f >= value}`.
fn level_masses(values: &[f64], masses: &[f64]) -> Vec<(f64, f64)> {
    let mut pairs: Vec<(f64, f64)> = values
        .iter()
        .cloned()
        .zip(masses.iter().cloned())
        .filter(|(v, _)| *v > 0.0)
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut cumulative = 0.0;
    for (v, m) in pairs {
        cumulative += m;
        match out.last_mut() {
            Some(last) if last.0 == v => last.1 = cumulative,
            _ => out.push((v, cumulative)),
        }
    }
    out
}

fn cell_masses(f: &GridFunction, v: Option<&GridFunction>) -> Result<Vec<f64>> {
    let vol = f.domain().cell_volume();
    match v {
        None => Ok(vec![vol; f.values().len()]),
        Some(v) => {
            f.same_domain(v)?;
            Ok(v.values().iter().map(|x| x * vol).collect())
        }
    }
}

/// `sup_λ λ μ({f > λ})^{1/p}` for cell values and cell masses.
pub fn weak_norm_raw(values: &[f64], masses: &[f64], p: f64) -> f64 {
    level_masses(values, masses)
        .into_iter()
        .map(|(v, mass)| v * mass.powf(1.0 / p))
        .fold(0.0, f64::max)
}

/// `‖f‖_{L^{p,∞}_w} = sup_λ λ w^p({f > λ})^{1/p}` (`w` as a multiplier).
pub fn weak_norm(f: &GridFunction, p: f64, w: Option<&GridFunction>) -> Result<f64> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidExponent(format!(
            "weak norm needs finite p > 0, got {p}"
        )));
    }
    let masses = match w {
        Some(w) => {
            f.same_domain(w)?;
            let vol = f.domain().cell_volume();
            w.values().iter().map(|x| x.powf(p) * vol).collect()
        }
        None => cell_masses(f, None)?,
    };
    Ok(weak_norm_raw(f.values(), &masses, p))
}

/// `‖f‖_{L^{p,∞}(v)} = sup_λ λ v({f > λ})^{1/p}` (`v` as a measure).
pub fn weak_norm_measure(f: &GridFunction, p: f64, v: Option<&GridFunction>) -> Result<f64> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidExponent(format!(
            "weak norm needs finite p > 0, got {p}"
        )));
    }
    Ok(weak_norm_raw(f.values(), &cell_masses(f, v)?, p))
}

/// `‖f w‖_{L^p}`; `p = ∞` gives the max of `f w`.
pub fn lp_norm(f: &GridFunction, p: f64, w: Option<&GridFunction>) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::InvalidExponent(format!(
            "L^p norm needs p > 0, got {p}"
        )));
    }
    let vals: Vec<f64> = match w {
        Some(w) => {
            f.same_domain(w)?;
            f.values()
                .iter()
                .zip(w.values())
                .map(|(a, b)| a * b)
                .collect()
        }
        None => f.values().to_vec(),
    };
    if p.is_infinite() {
        return Ok(vals.into_iter().fold(0.0, f64::max));
    }
    let s: f64 = vals.iter().map(|&x| power(x, p)).sum::<f64>() * f.domain().cell_volume();
    Ok(s.powf(1.0 / p))
}

/// `‖f‖_{L^p(v)} = (∫ f^p v)^{1/p}` (`v` as a measure).
pub fn lp_norm_measure(f: &GridFunction, p: f64, v: Option<&GridFunction>) -> Result<f64> {
    let masses = cell_masses(f, v)?;
    if p.is_infinite() {
        return Ok(f
            .values()
            .iter()
            .zip(&masses)
            .filter(|(_, m)| **m > 0.0)
            .map(|(x, _)| *x)
            .fold(0.0, f64::max));
    }
    let s: f64 = f
        .values()
        .iter()
        .zip(&masses)
        .map(|(&x, &m)| power(x, p) * m)
        .sum();
    Ok(s.powf(1.0 / p))
}

/// Lorentz quasi-norm `‖f‖_{L^{p,s}(v)} = (p ∫_0^∞ (t v({f>t})^{1/p})^s dt/t)^{1/s}`.
///
/// The factor `p` makes `L^{p,p}(v) = L^p(v)` exactly and tends to 1 as
/// `s → ∞`, where the weak norm is returned. Without it the `L^{p,p}` value
/// would be `p^{-1/p}` times the `L^p` norm.
pub fn lorentz_norm(f: &GridFunction, p: f64, s: f64, v: Option<&GridFunction>) -> Result<f64> {
    if !(p > 0.0 && p.is_finite() && s > 0.0) {
        return Err(Error::InvalidExponent(format!(
            "Lorentz norm needs finite p > 0 and s > 0, got p={p}, s={s}"
        )));
    }
    let masses = cell_masses(f, v)?;
    Ok(lorentz_norm_raw(f.values(), &masses, p, s))
}

pub fn lorentz_norm_raw(values: &[f64], masses: &[f64], p: f64, s: f64) -> f64 {
    if s.is_infinite() {
        return weak_norm_raw(values, masses, p);
    }
    let levels = level_masses(values, masses);
    let mut total = 0.0;
    for (i, &(v, mass)) in levels.iter().enumerate() {
        let next = levels.get(i + 1).map_or(0.0, |x| x.0);
        total += mass.powf(s / p) * (v.powf(s) - next.powf(s));
    }
    (p / s * total).powf(1.0 / s)
}
