//! Sparse operators, dyadic maximal operators and sparse forms.

use crate::error::{param, Error, Result};
use crate::grid::{ExponentTuple, GridFunction};
use crate::sparse::CubeFamily;

/// Positive coefficients `a_Q`, aligned with the members of a [`CubeFamily`].
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientMap {
    values: Vec<f64>,
}

impl CoefficientMap {
    pub fn new(family: &CubeFamily, values: Vec<f64>) -> Result<Self> {
        if values.len() != family.len() {
            return Err(Error::LengthMismatch {
                expected: family.len(),
                got: values.len(),
            });
        }
        if let Some((cell, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::InvalidValue {
                cell,
                value,
                reason: "coefficients must be positive and finite",
            });
        }
        Ok(Self { values })
    }

    /// `a_Q = Π_j <f_j>_{1,Q}`, with zero products clamped to the smallest positive normal.
    pub fn from_averages(family: &CubeFamily, fs: &[GridFunction]) -> Result<Self> {
        let values = product_averages(family, fs)?
            .into_iter()
            .map(|a| a.max(f64::MIN_POSITIVE))
            .collect();
        Self::new(family, values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

fn check_functions(family: &CubeFamily, fs: &[GridFunction]) -> Result<()> {
    if fs.is_empty() {
        return param("need at least one function");
    }
    for f in fs {
        if f.domain() != family.domain() {
            return Err(Error::DomainMismatch);
        }
    }
    Ok(())
}

/// `Π_j <f_j>_{1,Q}` for every member `Q`.
pub fn product_averages(family: &CubeFamily, fs: &[GridFunction]) -> Result<Vec<f64>> {
    check_functions(family, fs)?;
    let pyramids: Vec<_> = fs.iter().map(|f| f.power_sums(1.0)).collect();
    let domain = family.domain();
    Ok(family
        .nodes()
        .iter()
        .map(|&n| {
            let cells = domain.cells_per_node(n.level) as f64;
            pyramids.iter().map(|p| p.get(n) / cells).product()
        })
        .collect())
}

/// Per-node values accumulated from the root down, read off at the finest cells.
fn top_down(
    family: &CubeFamily,
    seed: impl Fn(usize) -> f64,
    combine: impl Fn(f64, f64) -> f64,
) -> Vec<f64> {
    let domain = family.domain();
    let d = domain.dim();
    let mut acc = vec![0.0; domain.node_count()];
    for (i, &n) in family.nodes().iter().enumerate() {
        acc[n.id(domain)] = seed(i);
    }
    for node in domain.nodes().skip(1) {
        let id = node.id(domain);
        let up = acc[node.parent(d).expect("non-root").id(domain)];
        acc[id] = combine(up, acc[id]);
    }
    acc.split_off(domain.level_offset(domain.max_level()))
}

/// `A^q_F(a) = (Σ_Q a_Q^q 1_Q)^{1/q}`, `q = ∞` giving `sup_Q a_Q 1_Q`.
pub fn sparse_q_operator(family: &CubeFamily, a: &CoefficientMap, q: f64) -> Result<GridFunction> {
    if !(q > 0.0) {
        return Err(Error::InvalidExponent(format!(
            "q must be positive, got {q}"
        )));
    }
    if a.values.len() != family.len() {
        return Err(Error::LengthMismatch {
            expected: family.len(),
            got: a.values.len(),
        });
    }
    let morton = if q.is_infinite() {
        top_down(family, |i| a.values[i], f64::max)
    } else if q == 1.0 {
        top_down(family, |i| a.values[i], |x, y| x + y)
    } else {
        top_down(family, |i| a.values[i].powf(q), |x, y| x + y)
            .into_iter()
            .map(|s| s.powf(1.0 / q))
            .collect()
    };
    GridFunction::from_morton(*family.domain(), morton)
}

/// `A_S f⃗ = Σ_Q Π_j <f_j>_{1,Q} 1_Q`.
pub fn sparse_operator(family: &CubeFamily, fs: &[GridFunction]) -> Result<GridFunction> {
    let a = product_averages(family, fs)?;
    GridFunction::from_morton(*family.domain(), top_down(family, |i| a[i], |x, y| x + y))
}

/// `A^q_S f⃗ = (Σ_Q (Π_j <f_j>_{1,Q})^q 1_Q)^{1/q}`.
pub fn sparse_q_averages(family: &CubeFamily, fs: &[GridFunction], q: f64) -> Result<GridFunction> {
    let a = product_averages(family, fs)?;
    if !(q > 0.0) {
        return Err(Error::InvalidExponent(format!(
            "q must be positive, got {q}"
        )));
    }
    let morton = if q.is_infinite() {
        top_down(family, |i| a[i], f64::max)
    } else {
        top_down(family, |i| a[i].powf(q), |x, y| x + y)
            .into_iter()
            .map(|s| s.powf(1.0 / q))
            .collect()
    };
    GridFunction::from_morton(*family.domain(), morton)
}

/// `M^{P,w} f = sup_{Q∈P} <f>^w_{1,Q} 1_Q`; `P` defaults to every dyadic cube.
pub fn maximal(
    f: &GridFunction,
    w: Option<&GridFunction>,
    family: Option<&CubeFamily>,
) -> Result<GridFunction> {
    let domain = *f.domain();
    let all;
    let family = match family {
        Some(fam) => {
            if fam.domain() != &domain {
                return Err(Error::DomainMismatch);
            }
            fam
        }
        None => {
            all = CubeFamily::from_nodes(domain, domain.nodes())?;
            &all
        }
    };
    let averages: Vec<f64> = match w {
        None => {
            let sums = f.power_sums(1.0);
            family
                .nodes()
                .iter()
                .map(|&n| sums.get(n) / domain.cells_per_node(n.level) as f64)
                .collect()
        }
        Some(w) => {
            w.require_weight()?;
            let num = f.mul(w)?.power_sums(1.0);
            let den = w.power_sums(1.0);
            family
                .nodes()
                .iter()
                .map(|&n| num.get(n) / den.get(n))
                .collect()
        }
    };
    GridFunction::from_morton(domain, top_down(family, |i| averages[i], f64::max))
}

/// `M_{p⃗} f⃗ = sup_Q Π_j <f_j>_{p_j,Q} 1_Q` over dyadic cubes.
pub fn multilinear_maximal(fs: &[GridFunction], pvec: &ExponentTuple) -> Result<GridFunction> {
    if fs.len() != pvec.m() {
        return Err(Error::DimensionMismatch {
            expected: pvec.m(),
            got: fs.len(),
        });
    }
    let domain = *fs[0].domain();
    let all = CubeFamily::from_nodes(domain, domain.nodes())?;
    check_functions(&all, fs)?;
    let mut value = vec![1.0; domain.node_count()];
    for (f, &p) in fs.iter().zip(pvec.exponents()) {
        if p.is_infinite() {
            let maxima = f.power_maxima(1.0);
            for (v, m) in value.iter_mut().zip(maxima.data()) {
                *v *= m;
            }
        } else {
            let sums = f.power_sums(p);
            for node in domain.nodes() {
                let mean = sums.get(node) / domain.cells_per_node(node.level) as f64;
                value[node.id(&domain)] *= mean.powf(1.0 / p);
            }
        }
    }
    GridFunction::from_morton(domain, top_down(&all, |i| value[i], f64::max))
}

/// Which aggregation a sparse form uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormKind {
    /// `Σ (Π<f_j>)^p <g>^p |Q|`.
    Ellp,
    /// `Σ (Π<f_j>)^p <g> |Q|`.
    EllpMeasure,
}

/// Sparse form over the members; `p = 1` gives the plain form for either kind.
pub fn sparse_form(
    family: &CubeFamily,
    fs: &[GridFunction],
    g: &GridFunction,
    p: f64,
    kind: FormKind,
) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidExponent(format!(
            "sparse form needs p in (0, 1], got {p}"
        )));
    }
    let a = product_averages(family, fs)?;
    let gavg = product_averages(family, std::slice::from_ref(g))?;
    let domain = family.domain();
    Ok(family
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let vol = domain.cells_per_node(n.level) as f64 * domain.cell_volume();
            let gq = match kind {
                FormKind::Ellp => gavg[i].powf(p),
                FormKind::EllpMeasure => gavg[i],
            };
            a[i].powf(p) * gq * vol
        })
        .sum())
}

/// Both sides of the Carleson-type norm identity for `‖Σ a_Q 1_Q‖_{L^q(v)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct CovSides {
    pub lhs: f64,
    /// Inner factor `v(Q)^{-1} Σ_{Q'⊆Q} a_{Q'} v(Q')`.
    pub rhs_source: f64,
    /// Inner factor `v(Q)^{-1} Σ_{Q'⊆Q} a_{Q'} v(Q) = Σ_{Q'⊆Q} a_{Q'}`.
    pub rhs_printed: f64,
}

pub fn cov_both_sides(
    family: &CubeFamily,
    a: &CoefficientMap,
    q: f64,
    v: &GridFunction,
) -> Result<CovSides> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::InvalidExponent(format!(
            "q must lie in [1, inf), got {q}"
        )));
    }
    v.require_weight()?;
    let domain = *family.domain();
    if v.domain() != &domain {
        return Err(Error::DomainMismatch);
    }
    let sum = sparse_q_operator(family, a, 1.0)?;
    let vol = domain.cell_volume();
    let lhs = sum
        .values()
        .iter()
        .zip(v.values())
        .map(|(s, w)| s.powf(q) * w)
        .sum::<f64>()
        * vol;
    let vsums = v.power_sums(1.0);
    let mass: Vec<f64> = family.nodes().iter().map(|&n| vsums.get(n) * vol).collect();
    let n = family.len();
    let mut weighted: Vec<f64> = (0..n).map(|i| a.values[i] * mass[i]).collect();
    let mut plain: Vec<f64> = a.values.clone();
    for i in (0..n).rev() {
        if let Some(p) = family.tree_parent(i) {
            weighted[p] += weighted[i];
            plain[p] += plain[i];
        }
    }
    let mut source = 0.0;
    let mut printed = 0.0;
    for i in 0..n {
        let am = a.values[i] * mass[i];
        source += (weighted[i] / mass[i]).powf(q - 1.0) * am;
        printed += plain[i].powf(q - 1.0) * am;
    }
    Ok(CovSides {
        lhs: lhs.powf(1.0 / q),
        rhs_source: source.powf(1.0 / q),
        rhs_printed: printed.powf(1.0 / q),
    })
}
