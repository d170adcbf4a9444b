//! Muckenhoupt, multilinear and Fujii-Wilson weight characteristics.
//!
//! Every supremum is a full enumeration over the chosen [`CubeScope`].

use std::fmt;
use std::str::FromStr;

use crate::dyadic::{Domain, Node};
use crate::error::{param, Error, Result};
use crate::grid::{conjugate, CellCube, ExponentTuple, GridFunction};

/// Which cubes a supremum ranges over.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum CubeScope {
    /// Shift-0 dyadic cubes of the domain.
    #[default]
    Dyadic,
    /// Every cube with corners on the finest lattice inside `[0,1)^d`.
    AllLattice,
}

impl fmt::Display for CubeScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CubeScope::Dyadic => "dyadic",
            CubeScope::AllLattice => "all",
        })
    }
}

impl FromStr for CubeScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "dyadic" | "dyadic-grid" => Ok(CubeScope::Dyadic),
            "all" | "all-lattice" | "all-lattice-aligned" => Ok(CubeScope::AllLattice),
            other => param(format!("unknown scope {other:?}; expected dyadic or all")),
        }
    }
}

/// Largest number of lattice cubes for the pairwise maximal-function evaluation in `d >= 2`.
const MAX_PAINT_CUBES: usize = 2000;

fn lattice_cube_count(domain: &Domain) -> usize {
    let n = domain.side_cells();
    (1..=n).map(|s| (n - s + 1).pow(domain.dim() as u32)).sum()
}

fn check_scope(domain: &Domain, scope: CubeScope, maximal: bool) -> Result<()> {
    if scope == CubeScope::Dyadic {
        return Ok(());
    }
    let (d, l) = (domain.dim(), domain.max_level());
    let ok = if maximal {
        (d == 1 && l <= 7) || (d >= 2 && lattice_cube_count(domain) <= MAX_PAINT_CUBES)
    } else {
        d == 1 || l <= 4
    };
    if ok {
        Ok(())
    } else {
        Err(Error::ScopeTooExpensive { dim: d, level: l })
    }
}

/// A characteristic together with a cube attaining it.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstantValue {
    pub value: f64,
    pub argmax: CellCube,
}

/// Weights `w_1, ..., w_m` on a common domain.
#[derive(Clone, Debug)]
pub struct WeightTuple {
    weights: Vec<GridFunction>,
}

impl WeightTuple {
    pub fn new(weights: Vec<GridFunction>) -> Result<Self> {
        let first = weights
            .first()
            .ok_or_else(|| Error::InvalidParameter("need at least one weight".into()))?;
        for w in &weights {
            first.same_domain(w)?;
            w.require_weight()?;
        }
        Ok(Self { weights })
    }

    pub fn m(&self) -> usize {
        self.weights.len()
    }

    pub fn domain(&self) -> &Domain {
        self.weights[0].domain()
    }

    pub fn get(&self, j: usize) -> &GridFunction {
        &self.weights[j]
    }

    pub fn weights(&self) -> &[GridFunction] {
        &self.weights
    }

    fn check(&self, pvec: &ExponentTuple) -> Result<()> {
        if pvec.m() != self.m() {
            return Err(Error::DimensionMismatch {
                expected: self.m(),
                got: pvec.m(),
            });
        }
        Ok(())
    }

    /// `w = Π w_j`.
    pub fn product(&self) -> GridFunction {
        let mut w = self.weights[0].clone();
        for wj in &self.weights[1..] {
            w = w.mul(wj).expect("same domain");
        }
        w
    }

    /// `v_j = w_j^{-p_j'}`; needs `p_j > 1`.
    pub fn v_j(&self, pvec: &ExponentTuple, j: usize) -> Result<GridFunction> {
        self.check(pvec)?;
        let c = pvec.conj(j);
        if !c.is_finite() {
            return Err(Error::InvalidExponent(format!(
                "v_{} needs p_{} > 1",
                j + 1,
                j + 1
            )));
        }
        self.weights[j].powf(-c)
    }

    /// `v = w^p`.
    pub fn v(&self, pvec: &ExponentTuple) -> Result<GridFunction> {
        self.check(pvec)?;
        self.product().powf(pvec.p())
    }
}

/// A per-cube statistic of one function.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Stat {
    /// `<f^e>_{1,Q}`.
    Mean(f64),
    /// `max_Q f^e`.
    Max(f64),
}

enum Cubes {
    Dyadic(Domain),
    Lattice(Vec<CellCube>),
}

/// Statistics for every cube of a scope, column per request.
pub(crate) struct Scan {
    cubes: Cubes,
    pub columns: Vec<Vec<f64>>,
}

impl Scan {
    pub fn len(&self) -> usize {
        match &self.cubes {
            Cubes::Dyadic(domain) => domain.node_count(),
            Cubes::Lattice(list) => list.len(),
        }
    }

    pub fn cube(&self, i: usize) -> CellCube {
        match &self.cubes {
            Cubes::Dyadic(domain) => CellCube::from_node(domain, node_at(domain, i)),
            Cubes::Lattice(list) => list[i].clone(),
        }
    }

    /// Largest value of `score(i)` with its cube; the first index wins ties.
    pub fn argmax(&self, score: impl Fn(usize) -> f64) -> ConstantValue {
        let mut best = (f64::NEG_INFINITY, 0);
        for i in 0..self.len() {
            let s = score(i);
            if s > best.0 || (s.is_nan() && !best.0.is_nan()) {
                best = (s, i);
            }
        }
        ConstantValue {
            value: best.0,
            argmax: self.cube(best.1),
        }
    }
}

fn node_at(domain: &Domain, id: usize) -> Node {
    let mut level = 0;
    while domain.level_offset(level + 1) <= id {
        level += 1;
    }
    Node {
        level,
        z: (id - domain.level_offset(level)) as u64,
    }
}

/// Visit every index in `[0, extent)^d` in row-major order.
pub(crate) fn for_each_index(d: usize, extent: usize, mut visit: impl FnMut(&[usize])) {
    if extent == 0 {
        return;
    }
    let mut idx = vec![0usize; d];
    loop {
        visit(&idx);
        let mut axis = d;
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < extent {
                break;
            }
            idx[axis] = 0;
        }
    }
}

/// All lattice cubes of the domain, side ascending, then lower corner row-major.
pub fn lattice_cubes(domain: &Domain) -> Vec<CellCube> {
    let n = domain.side_cells();
    let mut out = Vec::with_capacity(lattice_cube_count(domain));
    for side in 1..=n {
        for_each_index(domain.dim(), n - side + 1, |lo| {
            out.push(CellCube {
                lo: lo.to_vec(),
                side,
            })
        });
    }
    out
}

pub(crate) fn scan(scope: CubeScope, requests: &[(&GridFunction, Stat)]) -> Result<Scan> {
    let domain = *requests[0].0.domain();
    for (f, _) in requests {
        requests[0].0.same_domain(f)?;
    }
    check_scope(&domain, scope, false)?;
    match scope {
        CubeScope::Dyadic => {
            let columns = requests
                .iter()
                .map(|&(f, stat)| match stat {
                    Stat::Mean(e) => {
                        let sums = f.power_sums(e);
                        domain
                            .nodes()
                            .map(|n| sums.get(n) / domain.cells_per_node(n.level) as f64)
                            .collect()
                    }
                    Stat::Max(e) => f.power_maxima(e).data().to_vec(),
                })
                .collect();
            Ok(Scan {
                cubes: Cubes::Dyadic(domain),
                columns,
            })
        }
        CubeScope::AllLattice => {
            let cubes = lattice_cubes(&domain);
            let columns = requests
                .iter()
                .map(|&(f, stat)| match stat {
                    Stat::Mean(e) => {
                        let table = f.power_table(e);
                        cubes
                            .iter()
                            .map(|c| table.sum(c) / c.side.pow(domain.dim() as u32) as f64)
                            .collect()
                    }
                    Stat::Max(e) => lattice_maxima(&domain, f, e),
                })
                .collect();
            Ok(Scan {
                cubes: Cubes::Lattice(cubes),
                columns,
            })
        }
    }
}

/// Maxima of `f^e` over all lattice cubes, in [`lattice_cubes`] order.
fn lattice_maxima(domain: &Domain, f: &GridFunction, e: f64) -> Vec<f64> {
    let d = domain.dim();
    let n = domain.side_cells();
    let mut current: Vec<f64> = f
        .powf(e)
        .map(|g| g.values().to_vec())
        .unwrap_or_else(|_| vec![f64::NAN; n.pow(d as u32)]);
    let mut out = Vec::with_capacity(lattice_cube_count(domain));
    for side in 1..=n {
        if side > 1 {
            // A cube of side s is the union of the 2^d cubes of side s-1 at offsets in {0,1}^d.
            for_each_index(d, n - side + 1, |lo| {
                let here = domain.row_index(lo);
                let mut m = current[here];
                for e in 1..1usize << d {
                    let shifted: Vec<usize> = lo
                        .iter()
                        .enumerate()
                        .map(|(a, &l)| l + ((e >> a) & 1))
                        .collect();
                    m = m.max(current[domain.row_index(&shifted)]);
                }
                current[here] = m;
            });
        }
        for_each_index(d, n - side + 1, |lo| {
            out.push(current[domain.row_index(lo)])
        });
    }
    out
}

/// `[w]_{A_p}`: `sup <w><w^{1-p'}>^{p-1}` for `p > 1`, `sup <w><w^{-1}>_∞` for `p = 1`.
pub fn ap_constant(w: &GridFunction, p: f64, scope: CubeScope) -> Result<ConstantValue> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidExponent(format!(
            "A_p needs 1 <= p < inf, got {p}"
        )));
    }
    w.require_weight()?;
    if p == 1.0 {
        let s = scan(scope, &[(w, Stat::Mean(1.0)), (w, Stat::Max(-1.0))])?;
        return Ok(s.argmax(|i| s.columns[0][i] * s.columns[1][i]));
    }
    let e = 1.0 - conjugate(p);
    let s = scan(scope, &[(w, Stat::Mean(1.0)), (w, Stat::Mean(e))])?;
    Ok(s.argmax(|i| s.columns[0][i] * s.columns[1][i].powf(p - 1.0)))
}

/// `[w⃗, ω]_{p⃗} = sup <ω>_{p,Q} Π <w_j^{-1}>_{p_j',Q}`; `ω` defaults to `w = Π w_j`.
pub fn multilinear_ap(
    weights: &WeightTuple,
    pvec: &ExponentTuple,
    omega: Option<&GridFunction>,
    scope: CubeScope,
) -> Result<ConstantValue> {
    weights.check(pvec)?;
    pvec.require_at_least(1.0, false)?;
    let product;
    let omega = match omega {
        Some(o) => {
            weights.get(0).same_domain(o)?;
            o
        }
        None => {
            product = weights.product();
            &product
        }
    };
    let p = pvec.p();
    let mut requests = vec![(omega, Stat::Mean(p))];
    for j in 0..weights.m() {
        let c = pvec.conj(j);
        requests.push((
            weights.get(j),
            if c.is_infinite() {
                Stat::Max(-1.0)
            } else {
                Stat::Mean(-c)
            },
        ));
    }
    let s = scan(scope, &requests)?;
    let exps: Vec<f64> = (0..weights.m()).map(|j| pvec.conj(j)).collect();
    Ok(s.argmax(|i| {
        let mut v = s.columns[0][i].powf(1.0 / p);
        for (j, &c) in exps.iter().enumerate() {
            let col = s.columns[j + 1][i];
            v *= if c.is_infinite() {
                col
            } else {
                col.powf(1.0 / c)
            };
        }
        v
    }))
}

/// Shape of a Fujii-Wilson-type characteristic:
/// `sup_Q (∫_Q M(h⃗ 1_Q)^power)^{1/power} / Π_k (∫_Q n_k)^{c_k}` where the maximal
/// function takes `Π_j (h_j(Q' ∩ Q)/|Q'|)^{e_j}` over scope cubes `Q'`.
struct FwSpec {
    inner: Vec<(GridFunction, f64)>,
    power: f64,
    norm: Vec<(GridFunction, f64)>,
}

impl FwSpec {
    fn evaluate(&self, scope: CubeScope) -> Result<ConstantValue> {
        let domain = *self.inner[0].0.domain();
        check_scope(&domain, scope, true)?;
        match scope {
            CubeScope::Dyadic => Ok(self.dyadic(&domain)),
            CubeScope::AllLattice if domain.dim() == 1 => Ok(self.lattice_1d(&domain)),
            CubeScope::AllLattice => Ok(self.lattice_paint(&domain)),
        }
    }

    fn finish(&self, integral: f64, norm: f64) -> f64 {
        integral.powf(1.0 / self.power) / norm
    }

    fn dyadic(&self, domain: &Domain) -> ConstantValue {
        let d = domain.dim();
        let l = domain.max_level();
        let inner: Vec<_> = self
            .inner
            .iter()
            .map(|(h, e)| (h.power_sums(1.0), *e))
            .collect();
        let norm: Vec<_> = self
            .norm
            .iter()
            .map(|(h, c)| (h.power_sums(1.0), *c))
            .collect();
        let mut a = vec![0.0; domain.node_count()];
        for node in domain.nodes() {
            let cells = domain.cells_per_node(node.level) as f64;
            a[node.id(domain)] = inner
                .iter()
                .map(|(s, e)| (s.get(node) / cells).powf(*e))
                .product();
        }
        let mut integral = vec![0.0; domain.node_count()];
        let vol = domain.cell_volume();
        let mut path = vec![0usize; l as usize + 1];
        for m in 0..domain.cell_count() {
            let leaf = domain.cell_node(m);
            for level in 0..=l {
                path[level as usize] = leaf.ancestor(d, level).id(domain);
            }
            let mut best = 0.0f64;
            for level in (0..=l as usize).rev() {
                best = best.max(a[path[level]]);
                integral[path[level]] += best.powf(self.power) * vol;
            }
        }
        let mut top = (f64::NEG_INFINITY, Node::ROOT);
        for node in domain.nodes() {
            let n: f64 = norm
                .iter()
                .map(|(s, c)| (s.get(node) * vol).powf(*c))
                .product();
            let v = self.finish(integral[node.id(domain)], n);
            if v > top.0 {
                top = (v, node);
            }
        }
        ConstantValue {
            value: top.0,
            argmax: CellCube::from_node(domain, top.1),
        }
    }

    fn norm_of(
        &self,
        tables: &[(std::sync::Arc<crate::grid::BoxTable>, f64)],
        cube: &CellCube,
        vol: f64,
    ) -> f64 {
        tables
            .iter()
            .map(|(t, c)| (t.sum(cube) * vol).powf(*c))
            .product()
    }

    fn lattice_1d(&self, domain: &Domain) -> ConstantValue {
        let vol = domain.cell_volume();
        let inner: Vec<_> = self
            .inner
            .iter()
            .map(|(h, e)| (h.power_table(1.0), *e))
            .collect();
        let norm: Vec<_> = self
            .norm
            .iter()
            .map(|(h, c)| (h.power_table(1.0), *c))
            .collect();
        let value = |i: usize, j: usize| -> f64 {
            let cube = CellCube {
                lo: vec![i],
                side: j - i,
            };
            inner
                .iter()
                .map(|(t, e)| (t.sum(&cube) / (j - i) as f64).powf(*e))
                .product()
        };
        let mut best = ConstantValue {
            value: f64::NEG_INFINITY,
            argmax: CellCube {
                lo: vec![0],
                side: 1,
            },
        };
        let mut suffix = Vec::new();
        for cube in lattice_cubes(domain) {
            let (a, b) = (cube.lo[0], cube.lo[0] + cube.side);
            let mut max_fn = vec![0.0f64; cube.side];
            for i in a..b {
                suffix.clear();
                suffix.resize(b - i, 0.0);
                let mut run = 0.0f64;
                for x in (i..b).rev() {
                    run = run.max(value(i, x + 1));
                    suffix[x - i] = run;
                }
                for x in i..b {
                    max_fn[x - a] = max_fn[x - a].max(suffix[x - i]);
                }
            }
            let integral: f64 = max_fn.iter().map(|m| m.powf(self.power)).sum::<f64>() * vol;
            let v = self.finish(integral, self.norm_of(&norm, &cube, vol));
            if v > best.value {
                best = ConstantValue {
                    value: v,
                    argmax: cube,
                };
            }
        }
        best
    }

    fn lattice_paint(&self, domain: &Domain) -> ConstantValue {
        let d = domain.dim();
        let vol = domain.cell_volume();
        let inner: Vec<_> = self
            .inner
            .iter()
            .map(|(h, e)| (h.power_table(1.0), *e))
            .collect();
        let norm: Vec<_> = self
            .norm
            .iter()
            .map(|(h, c)| (h.power_table(1.0), *c))
            .collect();
        let cubes = lattice_cubes(domain);
        let mut best = ConstantValue {
            value: f64::NEG_INFINITY,
            argmax: cubes[0].clone(),
        };
        for q in &cubes {
            let side = q.side;
            let mut max_fn = vec![0.0f64; side.pow(d as u32)];
            for r in &cubes {
                let lo: Vec<usize> = q.lo.iter().zip(&r.lo).map(|(a, b)| *a.max(b)).collect();
                let hi: Vec<usize> =
                    q.lo.iter()
                        .zip(&r.lo)
                        .map(|(a, b)| (a + side).min(b + r.side))
                        .collect();
                if lo.iter().zip(&hi).any(|(l, h)| l >= h) {
                    continue;
                }
                let rvol = r.side.pow(d as u32) as f64;
                let val: f64 = inner
                    .iter()
                    .map(|(t, e)| (t.sum_box(&lo, &hi) / rvol).powf(*e))
                    .product();
                let extent: Vec<usize> = lo.iter().zip(&hi).map(|(l, h)| h - l).collect();
                let span = *extent.iter().max().unwrap();
                for_each_index(d, span, |off| {
                    if off.iter().zip(&extent).any(|(o, e)| o >= e) {
                        return;
                    }
                    let local = off
                        .iter()
                        .zip(&lo)
                        .zip(&q.lo)
                        .fold(0, |acc, ((o, l), ql)| acc * side + (o + l - ql));
                    if max_fn[local] < val {
                        max_fn[local] = val;
                    }
                });
            }
            let integral: f64 = max_fn.iter().map(|m| m.powf(self.power)).sum::<f64>() * vol;
            let v = self.finish(integral, self.norm_of(&norm, q, vol));
            if v > best.value {
                best = ConstantValue {
                    value: v,
                    argmax: q.clone(),
                };
            }
        }
        best
    }
}

/// `[w]_FW = sup_Q w(Q)^{-1} ∫_Q M(w 1_Q)`, with `M` over the same scope.
pub fn fw_constant(w: &GridFunction, scope: CubeScope) -> Result<ConstantValue> {
    w.require_weight()?;
    FwSpec {
        inner: vec![(w.clone(), 1.0)],
        power: 1.0,
        norm: vec![(w.clone(), 1.0)],
    }
    .evaluate(scope)
}

fn require_tuple(weights: &WeightTuple, pvec: &ExponentTuple) -> Result<()> {
    weights.check(pvec)?;
    if !pvec.p().is_finite() {
        return Err(Error::InvalidExponent("p must be finite".into()));
    }
    Ok(())
}

/// Multilinear Fujii-Wilson characteristic
/// `sup_Q (∫_Q Π w_j^{p/p_j})^{-1/p} (∫_Q M_{p⃗}(w_j^{1/p_j} 1_Q)^p)^{1/p}`.
pub fn ml_fw_constant(
    weights: &WeightTuple,
    pvec: &ExponentTuple,
    scope: CubeScope,
) -> Result<ConstantValue> {
    require_tuple(weights, pvec)?;
    let p = pvec.p();
    let mut inner = Vec::new();
    let mut g = GridFunction::constant(*weights.domain(), 1.0)?;
    for j in 0..weights.m() {
        let pj = pvec.pj(j);
        if pj.is_finite() {
            inner.push((weights.get(j).clone(), 1.0 / pj));
            g = g.mul(&weights.get(j).powf(p / pj)?)?;
        }
    }
    if inner.is_empty() {
        inner.push((GridFunction::constant(*weights.domain(), 1.0)?, 1.0));
    }
    FwSpec {
        inner,
        power: p,
        norm: vec![(g, 1.0 / p)],
    }
    .evaluate(scope)
}

/// `sup_Q (Π v_j(Q)^{1/p_j})^{-1} (∫_Q M_{p⃗}(v_j^{1/p_j} 1_Q)^p)^{1/p}` with `v_j = w_j^{-p_j'}`.
pub fn fw_prod_constant(
    weights: &WeightTuple,
    pvec: &ExponentTuple,
    scope: CubeScope,
) -> Result<ConstantValue> {
    require_tuple(weights, pvec)?;
    pvec.require_at_least(1.0, true)?;
    let p = pvec.p();
    let mut inner = Vec::new();
    let mut norm = Vec::new();
    for j in 0..weights.m() {
        let pj = pvec.pj(j);
        if pj.is_finite() {
            let vj = weights.v_j(pvec, j)?;
            inner.push((vj.clone(), 1.0 / pj));
            norm.push((vj, 1.0 / pj));
        }
    }
    if inner.is_empty() {
        inner.push((GridFunction::constant(*weights.domain(), 1.0)?, 1.0));
    }
    FwSpec {
        inner,
        power: p,
        norm,
    }
    .evaluate(scope)
}

/// Outcome of the sharp reverse Hölder check.
#[derive(Clone, Debug)]
pub struct ReverseHolderReport {
    pub fw: f64,
    /// `r` with `r' = 2^{d+1} [w]_FW`.
    pub r: f64,
    /// `max_Q <w>_{r,Q} / <w>_{1,Q}`.
    pub max_ratio: f64,
    pub worst: CellCube,
    pub holds: bool,
}

/// Verify `<w>_{r,Q} <= 2 <w>_{1,Q}` on every scope cube with `r' = 2^{d+1} [w]_FW`.
pub fn reverse_holder_check(w: &GridFunction, scope: CubeScope) -> Result<ReverseHolderReport> {
    let fw = fw_constant(w, scope)?.value;
    let r_conj = (1u64 << (w.domain().dim() + 1)) as f64 * fw;
    let r = conjugate(r_conj);
    let s = scan(scope, &[(w, Stat::Mean(r)), (w, Stat::Mean(1.0))])?;
    let best = s.argmax(|i| s.columns[0][i].powf(1.0 / r) / s.columns[1][i]);
    Ok(ReverseHolderReport {
        fw,
        r,
        max_ratio: best.value,
        worst: best.argmax,
        holds: best.value <= 2.0,
    })
}
