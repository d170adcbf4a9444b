//! Naive evaluators that work from cell coordinates only.
//!
//! Nothing here touches Morton ids, pyramids or box tables: every average is a
//! loop over the cells of a cube, every maximal function a loop over all cubes.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparsedom::dyadic::{Cube, Domain};
use sparsedom::grid::GridFunction;
use sparsedom::sparse::CubeFamily;

/// Axis-aligned cube in cell units.
#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub lo: Vec<usize>,
    pub side: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct Lattice {
    pub d: usize,
    pub n: usize,
}

impl Lattice {
    pub fn of(domain: &Domain) -> Self {
        Self {
            d: domain.dim(),
            n: 1 << domain.max_level(),
        }
    }

    pub fn cells(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    /// Axis 0 varies slowest.
    pub fn coords(&self, row: usize) -> Vec<usize> {
        let mut c = vec![0; self.d];
        let mut r = row;
        for axis in (0..self.d).rev() {
            c[axis] = r % self.n;
            r /= self.n;
        }
        c
    }

    pub fn inside(&self, b: &Block, row: usize) -> bool {
        self.coords(row)
            .iter()
            .zip(&b.lo)
            .all(|(&x, &l)| x >= l && x < l + b.side)
    }

    pub fn rows(&self, b: &Block) -> Vec<usize> {
        (0..self.cells()).filter(|&r| self.inside(b, r)).collect()
    }

    fn corners(&self, side: usize, step: usize) -> Vec<Block> {
        let per_axis = (self.n - side) / step + 1;
        (0..per_axis.pow(self.d as u32))
            .map(|k| {
                let mut lo = vec![0; self.d];
                let mut rest = k;
                for axis in (0..self.d).rev() {
                    lo[axis] = (rest % per_axis) * step;
                    rest /= per_axis;
                }
                Block { lo, side }
            })
            .collect()
    }

    pub fn dyadic(&self) -> Vec<Block> {
        let mut out = Vec::new();
        let mut side = self.n;
        while side >= 1 {
            out.extend(self.corners(side, side));
            side /= 2;
        }
        out
    }

    pub fn all_lattice(&self) -> Vec<Block> {
        (1..=self.n).flat_map(|s| self.corners(s, 1)).collect()
    }

    pub fn block_of(&self, cube: &Cube) -> Block {
        let side = self.n >> cube.level();
        Block {
            lo: cube.index().iter().map(|&k| k as usize * side).collect(),
            side,
        }
    }

    pub fn volume(&self, b: &Block) -> f64 {
        (b.side as f64 / self.n as f64).powi(self.d as i32)
    }
}

pub fn mean(values: &[f64], rows: &[usize], e: f64) -> f64 {
    rows.iter().map(|&r| values[r].powf(e)).sum::<f64>() / rows.len() as f64
}

pub fn blocks_of(lat: &Lattice, family: &CubeFamily) -> Vec<Block> {
    family.cubes().iter().map(|c| lat.block_of(c)).collect()
}

fn product_mean(lat: &Lattice, b: &Block, fs: &[&[f64]]) -> f64 {
    let rows = lat.rows(b);
    fs.iter().map(|f| mean(f, &rows, 1.0)).product()
}

/// `Σ_Q Π<f_j>_Q 1_Q`.
pub fn sparse_op(lat: &Lattice, fam: &[Block], fs: &[&[f64]]) -> Vec<f64> {
    sparse_q(lat, fam, fs, 1.0)
}

/// `(Σ_Q (Π<f_j>_Q)^q 1_Q)^{1/q}`, max for `q = ∞`.
pub fn sparse_q(lat: &Lattice, fam: &[Block], fs: &[&[f64]], q: f64) -> Vec<f64> {
    let coef: Vec<f64> = fam.iter().map(|b| product_mean(lat, b, fs)).collect();
    (0..lat.cells())
        .map(|x| {
            let hits = fam
                .iter()
                .zip(&coef)
                .filter(|(b, _)| lat.inside(b, x))
                .map(|(_, a)| *a);
            if q.is_infinite() {
                hits.fold(0.0, f64::max)
            } else {
                hits.map(|a| a.powf(q)).sum::<f64>().powf(1.0 / q)
            }
        })
        .collect()
}

/// Dyadic maximal function, weighted averages `∫ f w / w(Q)` when `w` is given.
pub fn maximal(lat: &Lattice, f: &[f64], w: Option<&[f64]>) -> Vec<f64> {
    let cubes = lat.dyadic();
    let avg: Vec<f64> = cubes
        .iter()
        .map(|b| {
            let rows = lat.rows(b);
            match w {
                None => mean(f, &rows, 1.0),
                Some(w) => {
                    rows.iter().map(|&r| f[r] * w[r]).sum::<f64>()
                        / rows.iter().map(|&r| w[r]).sum::<f64>()
                }
            }
        })
        .collect();
    (0..lat.cells())
        .map(|x| {
            cubes
                .iter()
                .zip(&avg)
                .filter(|(b, _)| lat.inside(b, x))
                .map(|(_, a)| *a)
                .fold(0.0, f64::max)
        })
        .collect()
}

/// `sup_{Q∋x} Π <f_j>_{p_j,Q}` over dyadic cubes.
pub fn ml_maximal(lat: &Lattice, fs: &[&[f64]], ps: &[f64]) -> Vec<f64> {
    let cubes = lat.dyadic();
    let val: Vec<f64> = cubes
        .iter()
        .map(|b| {
            let rows = lat.rows(b);
            fs.iter()
                .zip(ps)
                .map(|(f, &p)| {
                    if p.is_infinite() {
                        rows.iter().map(|&r| f[r]).fold(0.0, f64::max)
                    } else {
                        mean(f, &rows, p).powf(1.0 / p)
                    }
                })
                .product()
        })
        .collect();
    (0..lat.cells())
        .map(|x| {
            cubes
                .iter()
                .zip(&val)
                .filter(|(b, _)| lat.inside(b, x))
                .map(|(_, a)| *a)
                .fold(0.0, f64::max)
        })
        .collect()
}

/// `Σ_Q (Π<f_j>)^p <g>^{p or 1} |Q|`.
pub fn form(lat: &Lattice, fam: &[Block], fs: &[&[f64]], g: &[f64], p: f64, g_power: bool) -> f64 {
    fam.iter()
        .map(|b| {
            let rows = lat.rows(b);
            let gq = mean(g, &rows, 1.0);
            product_mean(lat, b, fs).powf(p) * if g_power { gq.powf(p) } else { gq } * lat.volume(b)
        })
        .sum()
}

pub fn conj(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// `<w^{-1}>_{p',Q}`, the sup of `w^{-1}` when `p' = ∞`.
fn dual_mean(w: &[f64], rows: &[usize], pc: f64) -> f64 {
    if pc.is_infinite() {
        rows.iter().map(|&r| 1.0 / w[r]).fold(0.0, f64::max)
    } else {
        mean(w, rows, -pc).powf(1.0 / pc)
    }
}

pub fn ap(lat: &Lattice, w: &[f64], p: f64, cubes: &[Block]) -> f64 {
    cubes
        .iter()
        .map(|b| {
            let rows = lat.rows(b);
            let m = mean(w, &rows, 1.0);
            if p == 1.0 {
                m * dual_mean(w, &rows, f64::INFINITY)
            } else {
                m * mean(w, &rows, 1.0 - conj(p)).powf(p - 1.0)
            }
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `sup <ω>_{p,Q} Π <w_j^{-1}>_{p_j',Q}`.
pub fn multilinear_ap(
    lat: &Lattice,
    ws: &[&[f64]],
    ps: &[f64],
    omega: &[f64],
    cubes: &[Block],
) -> f64 {
    let p = 1.0 / ps.iter().map(|x| 1.0 / x).sum::<f64>();
    cubes
        .iter()
        .map(|b| {
            let rows = lat.rows(b);
            let mut v = mean(omega, &rows, p).powf(1.0 / p);
            for (w, &pj) in ws.iter().zip(ps) {
                v *= dual_mean(w, &rows, conj(pj));
            }
            v
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `sup_Q (∫_Q (sup_{R∋x} Π_j (h_j(R∩Q)/|R|)^{e_j})^power)^{1/power} / Π_k (∫_Q n_k)^{c_k}`.
pub fn fw_shape(
    lat: &Lattice,
    inner: &[(&[f64], f64)],
    power: f64,
    norm: &[(&[f64], f64)],
    cubes: &[Block],
) -> f64 {
    let cell = 1.0 / lat.cells() as f64;
    let members: Vec<Vec<bool>> = cubes
        .iter()
        .map(|b| (0..lat.cells()).map(|x| lat.inside(b, x)).collect())
        .collect();
    let mut best = f64::NEG_INFINITY;
    for q in &members {
        let mut mf = vec![0.0f64; lat.cells()];
        for r in &members {
            let count = r.iter().filter(|&&x| x).count() as f64;
            let mut val = 1.0;
            for (h, e) in inner {
                let s: f64 = (0..lat.cells())
                    .filter(|&x| r[x] && q[x])
                    .map(|x| h[x])
                    .sum();
                val *= (s / count).powf(*e);
            }
            for x in 0..lat.cells() {
                if r[x] && q[x] {
                    mf[x] = mf[x].max(val);
                }
            }
        }
        let integral: f64 = (0..lat.cells())
            .filter(|&x| q[x])
            .map(|x| mf[x].powf(power))
            .sum::<f64>()
            * cell;
        let den: f64 = norm
            .iter()
            .map(|(n, c)| {
                ((0..lat.cells())
                    .filter(|&x| q[x])
                    .map(|x| n[x])
                    .sum::<f64>()
                    * cell)
                    .powf(*c)
            })
            .product();
        best = best.max(integral.powf(1.0 / power) / den);
    }
    best
}

pub fn fw(lat: &Lattice, w: &[f64], cubes: &[Block]) -> f64 {
    fw_shape(lat, &[(w, 1.0)], 1.0, &[(w, 1.0)], cubes)
}

pub fn ml_fw(lat: &Lattice, ws: &[&[f64]], ps: &[f64], cubes: &[Block]) -> f64 {
    let p = 1.0 / ps.iter().map(|x| 1.0 / x).sum::<f64>();
    let g: Vec<f64> = (0..lat.cells())
        .map(|x| ws.iter().zip(ps).map(|(w, pj)| w[x].powf(p / pj)).product())
        .collect();
    let inner: Vec<(&[f64], f64)> = ws.iter().zip(ps).map(|(w, pj)| (*w, 1.0 / pj)).collect();
    fw_shape(lat, &inner, p, &[(&g, 1.0 / p)], cubes)
}

pub fn fw_prod(lat: &Lattice, ws: &[&[f64]], ps: &[f64], cubes: &[Block]) -> f64 {
    let p = 1.0 / ps.iter().map(|x| 1.0 / x).sum::<f64>();
    let vs: Vec<Vec<f64>> = ws
        .iter()
        .zip(ps)
        .map(|(w, &pj)| w.iter().map(|x| x.powf(-conj(pj))).collect())
        .collect();
    let pairs: Vec<(&[f64], f64)> = vs
        .iter()
        .zip(ps)
        .map(|(v, pj)| (v.as_slice(), 1.0 / pj))
        .collect();
    fw_shape(lat, &pairs, p, &pairs, cubes)
}

/// `sup_λ λ μ({f > λ})^{1/p}`, scanning `λ` just below each distinct value.
pub fn weak(values: &[f64], masses: &[f64], p: f64) -> f64 {
    values
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&lam| {
            let m: f64 = values
                .iter()
                .zip(masses)
                .filter(|(v, _)| **v >= lam)
                .map(|(_, m)| m)
                .sum();
            lam * m.powf(1.0 / p)
        })
        .fold(0.0, f64::max)
}

pub fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

pub fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| rel(*x, *y))
        .fold(0.0, f64::max)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Positive values with a wide dynamic range.
pub fn positive(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| (rng.gen_range(-2.0..2.0f64)).exp())
        .collect()
}

pub fn function(domain: Domain, values: Vec<f64>) -> GridFunction {
    GridFunction::new(domain, values).unwrap()
}

/// Random dyadic family (not necessarily sparse) of up to `count` distinct cubes.
pub fn random_family(rng: &mut ChaCha8Rng, domain: Domain, count: usize) -> CubeFamily {
    let l = domain.max_level();
    let mut cubes: Vec<Cube> = Vec::new();
    for _ in 0..count {
        let level = rng.gen_range(0..=l);
        let index = (0..domain.dim())
            .map(|_| rng.gen_range(0..1i64 << level))
            .collect();
        let c = Cube::dyadic(level, index).unwrap();
        if !cubes.contains(&c) {
            cubes.push(c);
        }
    }
    CubeFamily::from_cubes(domain, &cubes).unwrap()
}

/// Dyadic `[w]_FW` by direct loops. For `R ⊋ Q` the truncated average `w(Q)/|R|`
/// is beaten by `R = Q`, so only subcubes of `Q` enter `M(w 1_Q)`.
pub fn fw_dyadic(lat: &Lattice, w: &[f64]) -> f64 {
    let cubes = lat.dyadic();
    let rows: Vec<Vec<usize>> = cubes.iter().map(|b| lat.rows(b)).collect();
    let avg: Vec<f64> = rows.iter().map(|r| mean(w, r, 1.0)).collect();
    let mut best = f64::NEG_INFINITY;
    for (q, qrows) in cubes.iter().zip(&rows) {
        let mut mf = vec![0.0f64; lat.cells()];
        for ((r, rrows), a) in cubes.iter().zip(&rows).zip(&avg) {
            if r.side <= q.side
                && (0..lat.d).all(|k| r.lo[k] >= q.lo[k] && r.lo[k] + r.side <= q.lo[k] + q.side)
            {
                for &x in rrows {
                    mf[x] = mf[x].max(*a);
                }
            }
        }
        let num: f64 = qrows.iter().map(|&x| mf[x]).sum();
        let den: f64 = qrows.iter().map(|&x| w[x]).sum();
        best = best.max(num / den);
    }
    best
}
