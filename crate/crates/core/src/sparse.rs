//! Cube families, sparse collections with checked witnesses, and the stopping-time
//! constructions (Calderón-Zygmund, principal cubes, maximal superlevel cubes).

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dyadic::{Cube, Domain, Node};
use crate::error::{param, Error, Result};
use crate::flow::FlowNetwork;
use crate::grid::GridFunction;
use crate::operators::{product_averages, sparse_q_operator, CoefficientMap};

/// A finite set of shift-0 dyadic cubes, sorted coarse to fine.
#[derive(Clone, Debug, PartialEq)]
pub struct CubeFamily {
    domain: Domain,
    nodes: Vec<Node>,
    index: HashMap<Node, usize>,
}

impl CubeFamily {
    pub fn from_nodes(domain: Domain, nodes: impl IntoIterator<Item = Node>) -> Result<Self> {
        let mut nodes: Vec<Node> = nodes.into_iter().collect();
        for n in &nodes {
            if n.level > domain.max_level() || n.z >= domain.nodes_at(n.level) as u64 {
                return Err(Error::InvalidCube(format!("node {n:?} outside the domain")));
            }
        }
        nodes.sort_unstable();
        nodes.dedup();
        let index = nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        Ok(Self {
            domain,
            nodes,
            index,
        })
    }

    pub fn from_cubes(domain: Domain, cubes: &[Cube]) -> Result<Self> {
        let nodes = cubes
            .iter()
            .map(|c| domain.node_of(c))
            .collect::<Result<Vec<_>>>()?;
        Self::from_nodes(domain, nodes)
    }

    /// One cube per line in text form; blank lines and `#` comments are skipped.
    pub fn parse(domain: Domain, text: &str) -> Result<Self> {
        let mut cubes = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cube: Cube = line.parse().map_err(|e: Error| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            cubes.push(cube);
        }
        Self::from_cubes(domain, &cubes)
    }

    pub fn to_text(&self) -> String {
        self.cubes().iter().map(|c| format!("{c}\n")).collect()
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn cubes(&self) -> Vec<Cube> {
        self.nodes.iter().map(|&n| self.domain.cube_of(n)).collect()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn position(&self, node: Node) -> Option<usize> {
        self.index.get(&node).copied()
    }

    pub fn contains(&self, node: Node) -> bool {
        self.index.contains_key(&node)
    }

    /// Deepest member containing `node` (possibly `node` itself).
    pub fn deepest_ancestor(&self, node: Node) -> Option<usize> {
        let d = self.domain.dim();
        (0..=node.level)
            .rev()
            .find_map(|level| self.position(node.ancestor(d, level)))
    }

    /// Deepest member strictly containing member `i`.
    pub fn tree_parent(&self, i: usize) -> Option<usize> {
        let node = self.nodes[i];
        node.parent(self.domain.dim())
            .and_then(|p| self.deepest_ancestor(p))
    }

    /// Members contained in `q` (including `q` if present).
    pub fn restrict(&self, q: Node) -> CubeFamily {
        let d = self.domain.dim();
        Self::from_nodes(
            self.domain,
            self.nodes.iter().copied().filter(|&n| q.contains(d, n)),
        )
        .expect("subset")
    }

    /// For each finest cell (Morton order), the deepest member containing it.
    pub fn owners(&self) -> Vec<Option<usize>> {
        let mut owner = vec![None; self.domain.cell_count()];
        // Coarse to fine, so deeper members overwrite.
        for (i, node) in self.nodes.iter().enumerate() {
            for slot in &mut owner[node.cell_range(&self.domain)] {
                *slot = Some(i);
            }
        }
        owner
    }

    /// `Σ_{Q'⊆Q, Q' member} |Q'| / |Q|` for each member.
    pub fn carleson_ratios(&self) -> Vec<f64> {
        let mut mass: Vec<f64> = self
            .nodes
            .iter()
            .map(|n| self.domain.cells_per_node(n.level) as f64)
            .collect();
        for i in (0..self.len()).rev() {
            if let Some(p) = self.tree_parent(i) {
                mass[p] += mass[i];
            }
        }
        self.nodes
            .iter()
            .zip(mass)
            .map(|(n, m)| m / self.domain.cells_per_node(n.level) as f64)
            .collect()
    }

    /// Largest `η` for which the family is `η`-sparse: `min_Q |Q| / Σ_{Q'⊆Q} |Q'|`.
    pub fn achievable_eta(&self) -> f64 {
        self.carleson_ratios()
            .into_iter()
            .map(|r| 1.0 / r)
            .fold(1.0, f64::min)
    }

    /// `h = Σ_{Q ⊆ Q0} 1_Q` (all members when `q0` is `None`).
    pub fn height_function(&self, q0: Option<Node>) -> Result<GridFunction> {
        let d = self.domain.dim();
        let mut h = vec![0.0; self.domain.cell_count()];
        for &n in &self.nodes {
            if q0.is_none_or(|q| q.contains(d, n)) {
                for c in &mut h[n.cell_range(&self.domain)] {
                    *c += 1.0;
                }
            }
        }
        GridFunction::from_morton(self.domain, h)
    }
}

/// `E_Q` as `(row-major cell, fraction of the cell)` pairs.
pub type WitnessSet = Vec<(usize, f64)>;

/// How the witness sets were obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WitnessKind {
    /// `E_Q = Q` minus the maximal proper members inside `Q`.
    Canonical,
    /// Fractional cell assignment from a max-flow.
    Flow,
}

/// An `η`-sparse family with a checked disjoint witness.
#[derive(Clone, Debug)]
pub struct SparseCollection {
    family: CubeFamily,
    eta: f64,
    kind: WitnessKind,
    witness: Vec<WitnessSet>,
}

const COVER_TOL: f64 = 1e-12;

impl SparseCollection {
    pub fn family(&self) -> &CubeFamily {
        &self.family
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn witness_kind(&self) -> WitnessKind {
        self.kind
    }

    pub fn witness(&self, i: usize) -> &WitnessSet {
        &self.witness[i]
    }

    pub fn nodes(&self) -> &[Node] {
        self.family.nodes()
    }

    pub fn len(&self) -> usize {
        self.family.len()
    }

    pub fn is_empty(&self) -> bool {
        self.family.is_empty()
    }

    pub fn domain(&self) -> &Domain {
        self.family.domain()
    }

    /// `|E_Q| / |Q|` per member.
    pub fn witness_fractions(&self) -> Vec<f64> {
        self.family
            .nodes()
            .iter()
            .zip(&self.witness)
            .map(|(n, e)| {
                e.iter().map(|(_, f)| f).sum::<f64>() / self.domain().cells_per_node(n.level) as f64
            })
            .collect()
    }

    /// Re-check disjointness, containment and the `η` coverage of the witness.
    pub fn check(&self) -> Result<()> {
        let domain = self.domain();
        let mut used = vec![0.0f64; domain.cell_count()];
        for (i, (node, set)) in self.family.nodes().iter().zip(&self.witness).enumerate() {
            let range = node.cell_range(domain);
            let mut total = 0.0;
            for &(row, frac) in set {
                if !range.contains(&domain.row_to_morton(row)) {
                    return param(format!("witness of member {i} leaves its cube"));
                }
                if !(frac > 0.0 && frac <= 1.0 + COVER_TOL) {
                    return param(format!("witness of member {i} has fraction {frac}"));
                }
                used[row] += frac;
                total += frac;
            }
            let need = self.eta * domain.cells_per_node(node.level) as f64;
            if total < need * (1.0 - COVER_TOL) {
                return Err(Error::NotEtaSparse {
                    eta: self.eta,
                    cube: domain.cube_of(*node).to_string(),
                    fraction: total / domain.cells_per_node(node.level) as f64,
                    achievable: self.family.achievable_eta(),
                });
            }
        }
        if let Some(row) = used.iter().position(|&u| u > 1.0 + COVER_TOL) {
            return param(format!("witness sets overlap on cell {row}"));
        }
        Ok(())
    }
}

/// Build the canonical witness and check `|E_Q| >= η|Q|`; fall back to an exact
/// max-flow when the canonical witness is too small.
pub fn verify_sparse(family: &CubeFamily, eta: f64) -> Result<SparseCollection> {
    if !(eta > 0.0 && eta <= 1.0) {
        return param(format!("eta must lie in (0, 1], got {eta}"));
    }
    let domain = *family.domain();
    let owners = family.owners();
    let perm = domain.morton_to_row();
    let mut witness: Vec<WitnessSet> = vec![Vec::new(); family.len()];
    for (m, owner) in owners.iter().enumerate() {
        if let Some(i) = owner {
            witness[*i].push((perm[m], 1.0));
        }
    }
    let canonical = SparseCollection {
        family: family.clone(),
        eta,
        kind: WitnessKind::Canonical,
        witness,
    };
    match canonical.check() {
        Ok(()) => return Ok(canonical),
        Err(Error::NotEtaSparse { .. }) => {}
        Err(e) => return Err(e),
    }
    let achievable = family.achievable_eta();
    let flow = flow_witness(family, &owners, eta)?;
    match flow {
        Some(witness) => {
            let s = SparseCollection {
                family: family.clone(),
                eta,
                kind: WitnessKind::Flow,
                witness,
            };
            s.check()?;
            Ok(s)
        }
        None => {
            let fractions = canonical.witness_fractions();
            let (i, worst) = fractions
                .iter()
                .enumerate()
                .fold(
                    (0, f64::INFINITY),
                    |b, (i, &f)| if f < b.1 { (i, f) } else { b },
                );
            Err(Error::NotEtaSparse {
                eta,
                cube: domain.cube_of(family.nodes()[i]).to_string(),
                fraction: worst,
                achievable,
            })
        }
    }
}

/// Exact feasibility: members demand `η|Q|`, owner classes supply their volume.
fn flow_witness(
    family: &CubeFamily,
    owners: &[Option<usize>],
    eta: f64,
) -> Result<Option<Vec<WitnessSet>>> {
    let domain = *family.domain();
    let n = family.len();
    let d = domain.dim();
    // Cells of each owner class (the class of member i is the set of cells owned by i).
    let mut class_cells: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (m, owner) in owners.iter().enumerate() {
        if let Some(i) = owner {
            class_cells[*i].push(m);
        }
    }
    let source = 2 * n;
    let sink = 2 * n + 1;
    let mut g = FlowNetwork::new(2 * n + 2, 1e-12);
    let mut demand = 0.0;
    for (i, node) in family.nodes().iter().enumerate() {
        let need = eta * domain.cells_per_node(node.level) as f64;
        demand += need;
        g.add_edge(source, i, need);
        g.add_edge(n + i, sink, class_cells[i].len() as f64);
    }
    // Member i can draw from the class of every member inside it.
    let mut links = Vec::new();
    for (i, node) in family.nodes().iter().enumerate() {
        for (k, other) in family.nodes().iter().enumerate() {
            if node.contains(d, *other) && !class_cells[k].is_empty() {
                let cap = class_cells[k].len() as f64;
                let pos = g.add_edge(i, n + k, cap);
                links.push((i, k, pos, cap));
            }
        }
    }
    let total = g.max_flow(source, sink);
    if total < demand * (1.0 - 1e-12) {
        return Ok(None);
    }
    let perm = domain.morton_to_row();
    let mut witness: Vec<WitnessSet> = vec![Vec::new(); n];
    for (i, k, pos, cap) in links {
        let f = g.flow_on(i, pos, cap);
        if f <= 0.0 {
            continue;
        }
        let frac = f / class_cells[k].len() as f64;
        witness[i].extend(class_cells[k].iter().map(|&m| (perm[m], frac)));
    }
    Ok(Some(witness))
}

/// A family containing the root and `count - 1` random cubes, `η`-sparse with the canonical witness.
pub fn random_sparse(
    domain: Domain,
    seed: u64,
    eta: f64,
    count: usize,
) -> Result<SparseCollection> {
    if count == 0 {
        return param("count must be positive");
    }
    if count > domain.node_count() {
        return Err(Error::GeneratorFailure(format!(
            "only {} cubes exist",
            domain.node_count()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = domain.dim();
    let mut chosen: Vec<Node> = vec![Node::ROOT];
    let mut members: HashSet<Node> = HashSet::from([Node::ROOT]);
    let mut owned: HashMap<Node, usize> = HashMap::from([(Node::ROOT, domain.cell_count())]);
    let mut owner = vec![Node::ROOT; domain.cell_count()];
    let attempts = 1000 * count + 10_000;
    for _ in 0..attempts {
        if chosen.len() == count {
            break;
        }
        // Half the draws uniform over levels, half uniform over cubes (deep-biased).
        let level = if rng.gen_bool(0.5) {
            rng.gen_range(1..=domain.max_level())
        } else {
            let id = rng.gen_range(1..domain.node_count());
            (1..=domain.max_level())
                .rev()
                .find(|&l| domain.level_offset(l) <= id)
                .expect("non-root")
        };
        let node = Node {
            level,
            z: rng.gen_range(0..domain.nodes_at(level) as u64),
        };
        if members.contains(&node) {
            continue;
        }
        let ancestor = (0..level)
            .rev()
            .map(|l| node.ancestor(d, l))
            .find(|a| members.contains(a))
            .expect("root");
        let range = node.cell_range(&domain);
        let taken = owner[range.clone()]
            .iter()
            .filter(|&&o| o == ancestor)
            .count();
        let need = |n: Node| eta * domain.cells_per_node(n.level) as f64;
        if (taken as f64) < need(node) || ((owned[&ancestor] - taken) as f64) < need(ancestor) {
            continue;
        }
        for o in &mut owner[range] {
            if *o == ancestor {
                *o = node;
            }
        }
        *owned.get_mut(&ancestor).expect("member") -= taken;
        owned.insert(node, taken);
        members.insert(node);
        chosen.push(node);
    }
    if chosen.len() < count {
        return Err(Error::GeneratorFailure(format!(
            "reached {} of {count} cubes at eta = {eta} within {attempts} attempts",
            chosen.len()
        )));
    }
    let s = verify_sparse(&CubeFamily::from_nodes(domain, chosen)?, eta)?;
    Ok(s)
}

/// Stopping cubes of `M^D f⃗` at the heights `c_0 a^k`, `a = 2^{m(d+1)}`, plus the root.
pub fn sparse_from_maximal(fs: &[GridFunction], eta: f64) -> Result<SparseCollection> {
    let first = fs
        .first()
        .ok_or_else(|| Error::InvalidParameter("need at least one function".into()))?;
    let domain = *first.domain();
    let d = domain.dim();
    let all = CubeFamily::from_nodes(domain, domain.nodes())?;
    let avg = product_averages(&all, fs)?;
    let base = avg[0];
    if !(base > 0.0) {
        return Err(Error::GeneratorFailure(
            "the functions have zero average on the root".into(),
        ));
    }
    let a = ((fs.len() * (d + 1)) as f64).exp2();
    // Largest k with avg > base a^k along each root-to-node path gives the stopping levels.
    let mut nodes = vec![Node::ROOT];
    let mut best_k = vec![0i64; domain.node_count()];
    for node in domain.nodes().skip(1) {
        let id = node.id(&domain);
        let parent_k = best_k[node.parent(d).expect("non-root").id(&domain)];
        let k = if avg[id] > 0.0 {
            ((avg[id] / base).ln() / a.ln()).ceil() as i64 - 1
        } else {
            i64::MIN
        };
        let k = k.max(0);
        if k > parent_k {
            nodes.push(node);
        }
        best_k[id] = k.max(parent_k);
    }
    let family = CubeFamily::from_nodes(domain, nodes)?;
    verify_sparse(&family, eta).map_err(|e| match e {
        Error::NotEtaSparse { achievable, .. } => Error::GeneratorFailure(format!(
            "stopping cubes are only {achievable}-sparse, {eta} requested"
        )),
        other => other,
    })
}

/// One bad part `b_P = (f - <f>_P) 1_P`.
#[derive(Clone, Debug)]
pub struct BadPart {
    pub cube: Cube,
    /// `(row-major cell, signed value)` for every cell of `P`.
    pub values: Vec<(usize, f64)>,
}

/// Calderón-Zygmund decomposition `f = g + Σ_P b_P` at height `λ`.
#[derive(Clone, Debug)]
pub struct CzDecomposition {
    pub height: f64,
    pub good: GridFunction,
    pub bad: Vec<BadPart>,
    /// Row-major cells of `Ω = ∪ P`.
    pub omega: Vec<usize>,
}

impl CzDecomposition {
    pub fn bad_cubes(&self) -> Vec<Cube> {
        self.bad.iter().map(|b| b.cube.clone()).collect()
    }
}

/// Stop at the maximal dyadic cubes with `<f>_{1,Q} > λ`.
pub fn cz_decompose(f: &GridFunction, lambda: f64) -> Result<CzDecomposition> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return param(format!("height must be positive, got {lambda}"));
    }
    let domain = *f.domain();
    let d = domain.dim();
    let root_avg = f.node_mean(1.0, Node::ROOT);
    if root_avg > lambda {
        return Err(Error::RootExceedsHeight {
            average: root_avg,
            height: lambda,
        });
    }
    let perm = domain.morton_to_row();
    let mut good = f.values().to_vec();
    let mut bad = Vec::new();
    let mut omega = Vec::new();
    let mut stack: Vec<Node> = Node::ROOT.children(d).collect();
    if domain.max_level() == 0 {
        stack.clear();
    }
    while let Some(node) = stack.pop() {
        let avg = f.node_mean(1.0, node);
        if avg > lambda {
            let mut values = Vec::new();
            for m in node.cell_range(&domain) {
                let row = perm[m];
                values.push((row, f.values()[row] - avg));
                good[row] = avg;
                omega.push(row);
            }
            bad.push(BadPart {
                cube: domain.cube_of(node),
                values,
            });
        } else if node.level < domain.max_level() {
            stack.extend(node.children(d));
        }
    }
    bad.sort_by(|a, b| a.cube.cmp(&b.cube));
    omega.sort_unstable();
    Ok(CzDecomposition {
        height: lambda,
        good: GridFunction::new(domain, good)?,
        bad,
        omega,
    })
}

/// Principal cubes of `λ_Q = <f v^{-1}>^v_{1,Q} = ∫_Q f / v(Q)` inside `S(Q0)`.
#[derive(Clone, Debug)]
pub struct StoppingFamily {
    pub root: Node,
    /// Members of `E`, coarse to fine.
    pub members: Vec<Node>,
    /// `λ_Q` for every `Q ∈ S(Q0)`.
    pub lambda: HashMap<Node, f64>,
    /// `π(Q)`: smallest member of `E` containing `Q`, for `Q ∈ S(Q0)`.
    pub projection: HashMap<Node, Node>,
    domain: Domain,
}

pub fn principal_cubes(
    f: &GridFunction,
    v: &GridFunction,
    q0: &Cube,
    s: &CubeFamily,
) -> Result<StoppingFamily> {
    f.same_domain(v)?;
    v.require_weight()?;
    let domain = *f.domain();
    let root = domain.node_of(q0)?;
    if !s.contains(root) {
        return param(format!("{q0} is not a member of the collection"));
    }
    let local = s.restrict(root);
    let f_sums = f.power_sums(1.0);
    let v_sums = v.power_sums(1.0);
    let lambda: HashMap<Node, f64> = local
        .nodes()
        .iter()
        .map(|&n| (n, f_sums.get(n) / v_sums.get(n)))
        .collect();
    let mut kids: Vec<Vec<usize>> = vec![Vec::new(); local.len()];
    for i in 1..local.len() {
        kids[local.tree_parent(i).expect("inside the root")].push(i);
    }
    let mut members = vec![root];
    let mut projection = HashMap::new();
    // (member index in `local`, current principal ancestor)
    let mut stack = vec![(0usize, root)];
    projection.insert(root, root);
    while let Some((i, principal)) = stack.pop() {
        for &k in &kids[i] {
            let node = local.nodes()[k];
            let next = if lambda[&node] > 2.0 * lambda[&principal] {
                members.push(node);
                node
            } else {
                principal
            };
            projection.insert(node, next);
            stack.push((k, next));
        }
    }
    members.sort_unstable();
    Ok(StoppingFamily {
        root,
        members,
        lambda,
        projection,
        domain,
    })
}

impl StoppingFamily {
    pub fn members_as_cubes(&self) -> Vec<Cube> {
        self.members
            .iter()
            .map(|&n| self.domain.cube_of(n))
            .collect()
    }

    /// Lacunarity, the pointwise bound `Σ_E λ_Q 1_Q <= 2 sup_E λ_Q 1_Q`, and `λ_Q <= 2 λ_{π(Q)}`.
    pub fn check(&self) -> Result<()> {
        let d = self.domain.dim();
        for &q in &self.members {
            if q == self.root {
                continue;
            }
            let up = (0..q.level)
                .rev()
                .map(|l| q.ancestor(d, l))
                .find(|a| self.members.binary_search(a).is_ok());
            let up = up.expect("root is a member");
            if !(self.lambda[&q] > 2.0 * self.lambda[&up]) {
                return param(format!("lacunarity fails at {}", self.domain.cube_of(q)));
            }
        }
        let mut sum = vec![0.0f64; self.domain.cell_count()];
        let mut sup = vec![0.0f64; self.domain.cell_count()];
        for &q in &self.members {
            for m in q.cell_range(&self.domain) {
                sum[m] += self.lambda[&q];
                sup[m] = sup[m].max(self.lambda[&q]);
            }
        }
        for m in self.root.cell_range(&self.domain) {
            if sum[m] > 2.0 * sup[m] * (1.0 + 1e-12) {
                return param(format!("lacunary sum bound fails at Morton cell {m}"));
            }
        }
        for (q, p) in &self.projection {
            if self.lambda[q] > 2.0 * self.lambda[p] * (1.0 + 1e-12) {
                return param(format!(
                    "projection bound fails at {}",
                    self.domain.cube_of(*q)
                ));
            }
        }
        Ok(())
    }
}

/// Maximal dyadic cubes whose union is `{A^r_F(a) > λ}`.
pub fn superlevel_decomposition(
    family: &CubeFamily,
    a: &CoefficientMap,
    r: f64,
    lambda: f64,
) -> Result<Vec<Cube>> {
    let domain = *family.domain();
    let d = domain.dim();
    let values = sparse_q_operator(family, a, r)?.morton_values();
    let mut full = vec![false; domain.node_count()];
    let leaf = domain.level_offset(domain.max_level());
    for (m, &v) in values.iter().enumerate() {
        full[leaf + m] = v > lambda;
    }
    for level in (0..domain.max_level()).rev() {
        for z in 0..domain.nodes_at(level) as u64 {
            let node = Node { level, z };
            full[node.id(&domain)] = node.children(d).all(|c| full[c.id(&domain)]);
        }
    }
    let mut out = Vec::new();
    for node in domain.nodes() {
        let maximal = full[node.id(&domain)] && node.parent(d).is_none_or(|p| !full[p.id(&domain)]);
        if maximal {
            out.push(domain.cube_of(node));
        }
    }
    Ok(out)
}
