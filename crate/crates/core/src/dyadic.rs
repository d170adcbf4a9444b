//! Shifted dyadic grids over `[0,1)^d` with exact integer coordinates.
//!
//! A cube of shift `s` (in thirds), level `l` and index `k` is the half-open box
//! with lower corner `s/3 + k 2^-l` and side `2^-l`. All geometry is done in the
//! integer unit `1/(3 * 2^M)` for a suitable `M`, so shifts by thirds and every
//! bisection are exact.
//!
//! Function data and sparse collections live on the shift-0 grid. Internally a
//! shift-0 cube is a [`Node`]: its level and the Morton (bit-interleaved) code of
//! its index, so that children of a node are contiguous and every node covers a
//! contiguous range of finest cells in Morton order.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest supported `d * L`, i.e. at most `2^26` finest cells.
pub const MAX_CELL_BITS: u32 = 26;

/// The base cube `[0,1)^d` discretized down to level `L`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Domain {
    dim: usize,
    max_level: u32,
}

impl Domain {
    pub fn new(dim: usize, max_level: u32) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDomain("dimension must be positive".into()));
        }
        if max_level == 0 {
            return Err(Error::InvalidDomain("max level must be positive".into()));
        }
        if dim as u64 * max_level as u64 > MAX_CELL_BITS as u64 {
            return Err(Error::InvalidDomain(format!(
                "d*L = {} exceeds the supported {}",
                dim as u64 * max_level as u64,
                MAX_CELL_BITS
            )));
        }
        Ok(Self { dim, max_level })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_level(&self) -> u32 {
        self.max_level
    }

    /// Number of finest cells along one axis, `2^L`.
    pub fn side_cells(&self) -> usize {
        1usize << self.max_level
    }

    /// Number of finest cells, `2^(Ld)`.
    pub fn cell_count(&self) -> usize {
        1usize << (self.dim * self.max_level as usize)
    }

    pub fn cell_volume(&self) -> f64 {
        (-((self.dim * self.max_level as usize) as f64)).exp2()
    }

    /// Number of shift-0 cubes at `level`.
    pub fn nodes_at(&self, level: u32) -> usize {
        1usize << (self.dim * level as usize)
    }

    /// Number of finest cells inside a cube of `level`.
    pub fn cells_per_node(&self, level: u32) -> usize {
        1usize << (self.dim * (self.max_level - level) as usize)
    }

    /// Position of the first node of `level` in the flat node numbering.
    pub fn level_offset(&self, level: u32) -> usize {
        let fan = (1usize << self.dim) - 1;
        ((1usize << (self.dim * level as usize)) - 1) / fan
    }

    /// Total number of shift-0 cubes of levels `0..=L`.
    pub fn node_count(&self) -> usize {
        self.level_offset(self.max_level + 1)
    }

    pub fn root(&self) -> Cube {
        Cube::root(self.dim)
    }

    /// All shift-0 cubes, coarse to fine.
    pub fn nodes(&self) -> impl Iterator<Item = Node> + '_ {
        (0..=self.max_level)
            .flat_map(move |level| (0..self.nodes_at(level) as u64).map(move |z| Node { level, z }))
    }

    /// Per-axis coordinates of a row-major cell index (axis 0 slowest).
    pub fn cell_coords(&self, row: usize) -> Vec<usize> {
        let n = self.side_cells();
        let mut coords = vec![0; self.dim];
        let mut rest = row;
        for axis in (0..self.dim).rev() {
            coords[axis] = rest % n;
            rest /= n;
        }
        coords
    }

    pub fn row_index(&self, coords: &[usize]) -> usize {
        let n = self.side_cells();
        coords.iter().fold(0, |acc, &c| acc * n + c)
    }

    /// `perm[m]` is the row-major index of the finest cell with Morton position `m`.
    pub fn morton_to_row(&self) -> Vec<usize> {
        let level = self.max_level;
        (0..self.cell_count() as u64)
            .map(|z| {
                let k = deinterleave(z, self.dim, level);
                let coords: Vec<usize> = k.iter().map(|&c| c as usize).collect();
                self.row_index(&coords)
            })
            .collect()
    }

    /// Morton position of a row-major cell.
    pub fn row_to_morton(&self, row: usize) -> usize {
        let k: Vec<u64> = self.cell_coords(row).iter().map(|&c| c as u64).collect();
        interleave(&k, self.max_level) as usize
    }

    /// True if `cube` is a shift-0 cube of level at most `L` inside `[0,1)^d`.
    pub fn contains_cube(&self, cube: &Cube) -> bool {
        cube.dim() == self.dim
            && cube.is_standard()
            && cube.level <= self.max_level
            && cube
                .index
                .iter()
                .all(|&k| k >= 0 && (k as u64) < (1u64 << cube.level))
    }

    pub fn node_of(&self, cube: &Cube) -> Result<Node> {
        if !self.contains_cube(cube) {
            return Err(Error::InvalidCube(format!(
                "{cube} is not a shift-0 cube of this domain"
            )));
        }
        let k: Vec<u64> = cube.index.iter().map(|&c| c as u64).collect();
        Ok(Node {
            level: cube.level,
            z: interleave(&k, cube.level),
        })
    }

    pub fn cube_of(&self, node: Node) -> Cube {
        let index = deinterleave(node.z, self.dim, node.level)
            .into_iter()
            .map(|c| c as i64)
            .collect();
        Cube {
            shift: vec![0; self.dim],
            level: node.level,
            index,
        }
    }

    /// The finest cell (level `L` node) at Morton position `m`.
    pub fn cell_node(&self, morton: usize) -> Node {
        Node {
            level: self.max_level,
            z: morton as u64,
        }
    }
}

/// A shift-0 dyadic cube in Morton coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Node {
    pub level: u32,
    pub z: u64,
}

impl Node {
    pub const ROOT: Node = Node { level: 0, z: 0 };

    /// Flat index into per-node arrays of `domain`.
    pub fn id(self, domain: &Domain) -> usize {
        domain.level_offset(self.level) + self.z as usize
    }

    pub fn parent(self, dim: usize) -> Option<Node> {
        (self.level > 0).then(|| Node {
            level: self.level - 1,
            z: self.z >> dim,
        })
    }

    pub fn child(self, dim: usize, e: u64) -> Node {
        Node {
            level: self.level + 1,
            z: (self.z << dim) | e,
        }
    }

    pub fn children(self, dim: usize) -> impl Iterator<Item = Node> {
        (0..1u64 << dim).map(move |e| self.child(dim, e))
    }

    /// The ancestor at `level` (`level <= self.level`).
    pub fn ancestor(self, dim: usize, level: u32) -> Node {
        Node {
            level,
            z: self.z >> (dim as u32 * (self.level - level)),
        }
    }

    pub fn contains(self, dim: usize, other: Node) -> bool {
        other.level >= self.level && other.ancestor(dim, self.level) == self
    }

    /// Morton positions of the finest cells inside this cube.
    pub fn cell_range(self, domain: &Domain) -> Range<usize> {
        let width = domain.cells_per_node(self.level);
        let start = self.z as usize * width;
        start..start + width
    }
}

pub(crate) fn interleave(k: &[u64], level: u32) -> u64 {
    let mut z = 0u64;
    for bit in (0..level).rev() {
        for &c in k {
            z = (z << 1) | ((c >> bit) & 1);
        }
    }
    z
}

pub(crate) fn deinterleave(z: u64, dim: usize, level: u32) -> Vec<u64> {
    let mut k = vec![0u64; dim];
    let mut pos = dim as u32 * level;
    for bit in (0..level).rev() {
        for c in k.iter_mut() {
            pos -= 1;
            *c |= ((z >> pos) & 1) << bit;
        }
    }
    k
}

/// A cube of one of the shifted dyadic grids.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cube {
    shift: Vec<u8>,
    level: u32,
    index: Vec<i64>,
}

impl Cube {
    pub fn new(shift: Vec<u8>, level: u32, index: Vec<i64>) -> Result<Self> {
        if shift.is_empty() || shift.len() != index.len() {
            return Err(Error::InvalidCube(format!(
                "shift has {} entries, index has {}",
                shift.len(),
                index.len()
            )));
        }
        if shift.iter().any(|&s| s > 2) {
            return Err(Error::InvalidCube(
                "shift entries must lie in {0,1,2}".into(),
            ));
        }
        if level > 62 {
            return Err(Error::InvalidCube(format!("level {level} is too deep")));
        }
        Ok(Self {
            shift,
            level,
            index,
        })
    }

    /// A cube of the standard (shift-0) grid.
    pub fn dyadic(level: u32, index: Vec<i64>) -> Result<Self> {
        Self::new(vec![0; index.len()], level, index)
    }

    pub fn root(dim: usize) -> Self {
        Self {
            shift: vec![0; dim],
            level: 0,
            index: vec![0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.index.len()
    }

    pub fn shift(&self) -> &[u8] {
        &self.shift
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn index(&self) -> &[i64] {
        &self.index
    }

    pub fn is_standard(&self) -> bool {
        self.shift.iter().all(|&s| s == 0)
    }

    pub fn side(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    pub fn volume(&self) -> f64 {
        (-((self.level as usize * self.dim()) as f64)).exp2()
    }

    /// The `2^d` cubes of the next level partitioning this one, Morton order.
    pub fn children(&self, domain: &Domain) -> Result<Vec<Cube>> {
        if self.level >= domain.max_level() {
            return Err(Error::LevelOverflow(self.level));
        }
        let d = self.dim();
        Ok((0..1u64 << d)
            .map(|e| {
                let index = self
                    .index
                    .iter()
                    .enumerate()
                    .map(|(axis, &k)| 2 * k + ((e >> (d - 1 - axis)) & 1) as i64)
                    .collect();
                Cube {
                    shift: self.shift.clone(),
                    level: self.level + 1,
                    index,
                }
            })
            .collect())
    }

    pub fn parent(&self) -> Result<Cube> {
        if self.level == 0 {
            return Err(Error::RootHasNoParent);
        }
        Ok(Cube {
            shift: self.shift.clone(),
            level: self.level - 1,
            index: self.index.iter().map(|k| k.div_euclid(2)).collect(),
        })
    }

    /// Lower corner and side in units of `1/(3 * 2^unit_level)`; needs `unit_level >= level`.
    pub fn bounds(&self, unit_level: u32) -> (Vec<i64>, i64) {
        debug_assert!(unit_level >= self.level);
        let side = 3i64 << (unit_level - self.level);
        let lo = self
            .shift
            .iter()
            .zip(&self.index)
            .map(|(&s, &k)| ((s as i64) << unit_level) + k * side)
            .collect();
        (lo, side)
    }

    /// True iff `inner` is contained in `self` as half-open boxes.
    pub fn contains(&self, inner: &Cube) -> bool {
        if self.dim() != inner.dim() {
            return false;
        }
        let unit = self.level.max(inner.level);
        let (olo, oside) = self.bounds(unit);
        let (ilo, iside) = inner.bounds(unit);
        olo.iter()
            .zip(&ilo)
            .all(|(&o, &i)| o <= i && i + iside <= o + oside)
    }

    /// Lower corner in real coordinates.
    pub fn lower_corner(&self) -> Vec<f64> {
        self.shift
            .iter()
            .zip(&self.index)
            .map(|(&s, &k)| s as f64 / 3.0 + k as f64 * self.side())
            .collect()
    }
}

impl fmt::Display for Cube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: Vec<String>| v.join(",");
        write!(
            f,
            "s={};l={};k={}",
            join(self.shift.iter().map(|s| s.to_string()).collect()),
            self.level,
            join(self.index.iter().map(|k| k.to_string()).collect())
        )
    }
}

impl FromStr for Cube {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidCube(format!("{msg} in {text:?}"));
        let mut shift = None;
        let mut level = None;
        let mut index = None;
        for part in text.trim().split(';') {
            let (key, value) = part.split_once('=').ok_or_else(|| bad("missing '='"))?;
            let value = value.trim().trim_start_matches('<').trim_end_matches('>');
            match key.trim() {
                "s" => {
                    let s: std::result::Result<Vec<u8>, _> =
                        value.split(',').map(|x| x.trim().parse::<u8>()).collect();
                    shift = Some(s.map_err(|_| bad("bad shift"))?);
                }
                "l" => level = Some(value.trim().parse::<u32>().map_err(|_| bad("bad level"))?),
                "k" => {
                    let k: std::result::Result<Vec<i64>, _> =
                        value.split(',').map(|x| x.trim().parse::<i64>()).collect();
                    index = Some(k.map_err(|_| bad("bad index"))?);
                }
                _ => return Err(bad("unknown key")),
            }
        }
        match (shift, level, index) {
            (Some(s), Some(l), Some(k)) => Cube::new(s, l, k),
            _ => Err(bad("expected s=..;l=..;k=..")),
        }
    }
}

/// An axis-aligned cube with corners on the lattice `Z^d / (3 * 2^L)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeCube {
    lo: Vec<i64>,
    side: i64,
}

impl LatticeCube {
    /// Lower corner and side in units of `1/(3 * 2^L)`.
    pub fn new(lo: Vec<i64>, side: i64) -> Result<Self> {
        if side <= 0 || lo.is_empty() {
            return Err(Error::InvalidParameter(
                "lattice cube needs a positive side".into(),
            ));
        }
        Ok(Self { lo, side })
    }

    /// Smallest lattice cube containing the real cube with lower corner `lo` and side `side`.
    pub fn enclosing(domain: &Domain, lo: &[f64], side: f64) -> Result<Self> {
        if lo.len() != domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                got: lo.len(),
            });
        }
        if !(side > 0.0) || lo.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "cube needs a positive side and finite corner".into(),
            ));
        }
        let unit = 3.0 * domain.side_cells() as f64;
        let lo_u: Vec<i64> = lo.iter().map(|&x| (x * unit).floor() as i64).collect();
        let side_u = lo
            .iter()
            .zip(&lo_u)
            .map(|(&x, &l)| ((x + side) * unit).ceil() as i64 - l)
            .max()
            .unwrap_or(1)
            .max(1);
        Self::new(lo_u, side_u)
    }

    pub fn lo(&self) -> &[i64] {
        &self.lo
    }

    pub fn side(&self) -> i64 {
        self.side
    }
}

/// Minimal-volume shifted dyadic cube containing `q` (3^d lattice theorem).
///
/// Candidates are all cubes of levels `0..=L` in the `3^d` shifted grids. Among
/// covers of minimal volume the lexicographically smallest `(shift, index)` wins.
pub fn lattice_cover(domain: &Domain, q: &LatticeCube) -> Result<Cube> {
    let d = domain.dim();
    if q.lo.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: q.lo.len(),
        });
    }
    let big = 1i64 << domain.max_level();
    let describe = || format!("lo={:?} side={} (units of 1/(3*2^L))", q.lo, q.side);
    if q.lo.iter().any(|&l| l < -big || l + q.side > 4 * big) {
        return Err(Error::NoCoverInWindow(describe()));
    }
    let shifts = 3usize.pow(d as u32);
    for level in (0..=domain.max_level()).rev() {
        let side = 3i64 << (domain.max_level() - level);
        if side < q.side {
            continue;
        }
        'shift: for code in 0..shifts {
            let mut shift = vec![0u8; d];
            let mut rest = code;
            for axis in (0..d).rev() {
                shift[axis] = (rest % 3) as u8;
                rest /= 3;
            }
            let mut index = vec![0i64; d];
            for axis in 0..d {
                let origin = (shift[axis] as i64) * big;
                let k = (q.lo[axis] - origin).div_euclid(side);
                if q.lo[axis] + q.side > origin + (k + 1) * side {
                    continue 'shift;
                }
                index[axis] = k;
            }
            return Cube::new(shift, level, index);
        }
    }
    Err(Error::NoCoverInWindow(describe()))
}
