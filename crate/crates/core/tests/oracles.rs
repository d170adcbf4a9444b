mod common;

use common::*;
use rand::Rng;
use sparsedom::dyadic::{lattice_cover, Cube, Domain, LatticeCube, Node};
use sparsedom::grid::{
    average, lorentz_norm, lp_norm, measure, weak_norm, ExponentTuple, GridFunction,
};
use sparsedom::lab::testing_constant;
use sparsedom::operators::{
    maximal, multilinear_maximal, sparse_form, sparse_operator, sparse_q_averages, CoefficientMap,
    FormKind,
};
use sparsedom::sparse::{
    cz_decompose, principal_cubes, superlevel_decomposition, verify_sparse, CubeFamily,
};
use sparsedom::weights::{
    ap_constant, fw_constant, fw_prod_constant, ml_fw_constant, multilinear_ap, CubeScope,
    WeightTuple,
};

const TOL: f64 = 1e-12;

fn domains() -> [Domain; 2] {
    [Domain::new(1, 6).unwrap(), Domain::new(2, 3).unwrap()]
}

#[test]
fn operators_match_naive_loops() {
    for domain in domains() {
        let lat = Lattice::of(&domain);
        let mut r = rng(11);
        for _ in 0..15 {
            let m = r.gen_range(1..=3);
            let count = r.gen_range(1..20);
            let fam = random_family(&mut r, domain, count);
            let raw: Vec<Vec<f64>> = (0..m).map(|_| positive(&mut r, lat.cells())).collect();
            let fs: Vec<GridFunction> = raw.iter().map(|v| function(domain, v.clone())).collect();
            let refs: Vec<&[f64]> = raw.iter().map(Vec::as_slice).collect();
            let blocks = blocks_of(&lat, &fam);

            let got = sparse_operator(&fam, &fs).unwrap();
            assert!(max_rel(got.values(), &sparse_op(&lat, &blocks, &refs)) <= TOL);
            for q in [0.25, 1.0, 3.0, f64::INFINITY] {
                let got = sparse_q_averages(&fam, &fs, q).unwrap();
                assert!(
                    max_rel(got.values(), &sparse_q(&lat, &blocks, &refs, q)) <= TOL,
                    "q={q}"
                );
            }

            let w = positive(&mut r, lat.cells());
            let got = maximal(&fs[0], None, None).unwrap();
            assert!(max_rel(got.values(), &maximal_naive(&lat, &raw[0], None)) <= TOL);
            let got = maximal(&fs[0], Some(&function(domain, w.clone())), None).unwrap();
            assert!(max_rel(got.values(), &maximal_naive(&lat, &raw[0], Some(&w))) <= TOL);

            let ps: Vec<f64> = (0..m)
                .map(|_| {
                    if r.gen_bool(0.2) {
                        f64::INFINITY
                    } else {
                        r.gen_range(0.5..4.0)
                    }
                })
                .collect();
            let got = multilinear_maximal(&fs, &ExponentTuple::new(ps.clone()).unwrap()).unwrap();
            assert!(max_rel(got.values(), &ml_maximal(&lat, &refs, &ps)) <= TOL);

            let g = positive(&mut r, lat.cells());
            let gf = function(domain, g.clone());
            let p = r.gen_range(0.1..=1.0);
            let got = sparse_form(&fam, &fs, &gf, p, FormKind::Ellp).unwrap();
            assert!(rel(got, form(&lat, &blocks, &refs, &g, p, true)) <= TOL);
            let got = sparse_form(&fam, &fs, &gf, p, FormKind::EllpMeasure).unwrap();
            assert!(rel(got, form(&lat, &blocks, &refs, &g, p, false)) <= TOL);
        }
    }
}

fn maximal_naive(lat: &Lattice, f: &[f64], w: Option<&[f64]>) -> Vec<f64> {
    common::maximal(lat, f, w)
}

#[test]
fn form_with_indicator_is_integral_over_the_set() {
    let domain = Domain::new(1, 5).unwrap();
    let mut r = rng(3);
    let fam = random_family(&mut r, domain, 10);
    let fs = vec![
        function(domain, positive(&mut r, 32)),
        function(domain, positive(&mut r, 32)),
    ];
    let e: Vec<f64> = (0..32)
        .map(|_| if r.gen_bool(0.4) { 1.0 } else { 0.0 })
        .collect();
    let a = sparse_operator(&fam, &fs).unwrap();
    let direct: f64 = a.values().iter().zip(&e).map(|(x, y)| x * y).sum::<f64>() / 32.0;
    let form = sparse_form(&fam, &fs, &function(domain, e), 1.0, FormKind::EllpMeasure).unwrap();
    assert!(rel(direct, form) <= TOL);
}

fn weight_tuple(domain: Domain, ws: &[Vec<f64>]) -> WeightTuple {
    WeightTuple::new(
        ws.iter()
            .map(|w| GridFunction::weight(domain, w.clone()).unwrap())
            .collect(),
    )
    .unwrap()
}

#[test]
fn constants_match_naive_loops_in_both_scopes() {
    let cases = [
        (Domain::new(1, 5).unwrap(), CubeScope::Dyadic),
        (Domain::new(2, 3).unwrap(), CubeScope::Dyadic),
        (Domain::new(1, 4).unwrap(), CubeScope::AllLattice),
        (Domain::new(2, 2).unwrap(), CubeScope::AllLattice),
    ];
    let mut r = rng(5);
    for (domain, scope) in cases {
        let lat = Lattice::of(&domain);
        let cubes = match scope {
            CubeScope::Dyadic => lat.dyadic(),
            CubeScope::AllLattice => lat.all_lattice(),
        };
        for _ in 0..4 {
            let w = positive(&mut r, lat.cells());
            let wf = GridFunction::weight(domain, w.clone()).unwrap();
            for p in [1.0, 1.5, 3.0] {
                assert!(
                    rel(
                        ap_constant(&wf, p, scope).unwrap().value,
                        ap(&lat, &w, p, &cubes)
                    ) <= TOL
                );
            }
            assert!(rel(fw_constant(&wf, scope).unwrap().value, fw(&lat, &w, &cubes)) <= TOL);

            let ws = vec![positive(&mut r, lat.cells()), positive(&mut r, lat.cells())];
            let refs: Vec<&[f64]> = ws.iter().map(Vec::as_slice).collect();
            let tuple = weight_tuple(domain, &ws);
            for ps in [vec![2.0, 2.0], vec![1.0, 3.0], vec![1.5, 4.0]] {
                let pvec = ExponentTuple::new(ps.clone()).unwrap();
                let prod: Vec<f64> = (0..lat.cells()).map(|x| ws[0][x] * ws[1][x]).collect();
                let got = multilinear_ap(&tuple, &pvec, None, scope).unwrap().value;
                assert!(
                    rel(got, multilinear_ap_naive(&lat, &refs, &ps, &prod, &cubes)) <= TOL,
                    "{ps:?}"
                );
                let omega = positive(&mut r, lat.cells());
                let got =
                    multilinear_ap(&tuple, &pvec, Some(&function(domain, omega.clone())), scope)
                        .unwrap()
                        .value;
                assert!(rel(got, multilinear_ap_naive(&lat, &refs, &ps, &omega, &cubes)) <= TOL);
                let got = ml_fw_constant(&tuple, &pvec, scope).unwrap().value;
                assert!(
                    rel(got, ml_fw(&lat, &refs, &ps, &cubes)) <= TOL,
                    "mlfw {ps:?}"
                );
                if ps.iter().all(|&x| x > 1.0) {
                    let got = fw_prod_constant(&tuple, &pvec, scope).unwrap().value;
                    assert!(
                        rel(got, fw_prod(&lat, &refs, &ps, &cubes)) <= TOL,
                        "fwprod {ps:?}"
                    );
                }
            }
        }
    }
}

fn multilinear_ap_naive(
    lat: &Lattice,
    ws: &[&[f64]],
    ps: &[f64],
    omega: &[f64],
    cubes: &[Block],
) -> f64 {
    common::multilinear_ap(lat, ws, ps, omega, cubes)
}

#[test]
fn averages_and_measures_by_hand() {
    let d1 = Domain::new(1, 1).unwrap();
    let d2 = Domain::new(1, 2).unwrap();
    let root = Cube::root(1);
    assert_eq!(
        average(&function(d1, vec![1.0, 3.0]), 1.0, &root, None).unwrap(),
        2.0
    );
    let f = function(d2, vec![1.0, 2.0, 3.0, 4.0]);
    let half = Cube::dyadic(1, vec![0]).unwrap();
    assert!(rel(average(&f, 2.0, &half, None).unwrap(), 2.5f64.sqrt()) <= TOL);
    let c = GridFunction::constant(d2, 3.5).unwrap();
    let w = function(d2, vec![1.0, 5.0, 2.0, 0.5]);
    for p in [0.5, 1.0, 2.0, f64::INFINITY] {
        assert!(rel(average(&c, p, &half, Some(&w)).unwrap(), 3.5) <= TOL);
    }
    let w = function(d1, vec![1.0, 3.0]);
    assert_eq!(measure(&w, &[1]), 1.5);
    assert_eq!(measure(&w, &[]), 0.0);
    assert_eq!(
        measure(&GridFunction::constant(d2, 1.0).unwrap(), &[0, 1, 2, 3]),
        1.0
    );
}

#[test]
fn weak_and_lorentz_norms() {
    let d2 = Domain::new(1, 2).unwrap();
    assert!(
        rel(
            weak_norm(&function(d2, vec![4.0, 2.0, 1.0, 1.0]), 1.0, None).unwrap(),
            1.0
        ) <= TOL
    );
    let d1 = Domain::new(1, 1).unwrap();
    assert!(
        rel(
            lorentz_norm(&function(d1, vec![2.0, 1.0]), 1.0, 1.0, None).unwrap(),
            1.5
        ) <= TOL
    );

    let domain = Domain::new(1, 6).unwrap();
    let mut r = rng(9);
    for _ in 0..100 {
        let f = positive(&mut r, 64);
        let w = positive(&mut r, 64);
        let p = r.gen_range(0.3..5.0);
        let ff = function(domain, f.clone());
        let wf = function(domain, w.clone());
        let masses: Vec<f64> = w.iter().map(|x| x.powf(p) / 64.0).collect();
        let weak_w = weak_norm(&ff, p, Some(&wf)).unwrap();
        assert!(rel(weak_w, weak(&f, &masses, p)) <= TOL);
        let strong = lp_norm(&ff, p, Some(&wf)).unwrap();
        assert!(weak_w <= strong * (1.0 + TOL));
        let vp = wf.powf(p).unwrap();
        assert!(rel(lorentz_norm(&ff, p, p, Some(&vp)).unwrap(), strong) <= 1e-10);
    }

    // Indicators: weak = w^p(E)^{1/p}; L^{p,s} = (p/s)^{1/s} w^p(E)^{1/p}.
    let e: Vec<f64> = (0..64)
        .map(|i| if i % 3 == 0 { 1.0 } else { 0.0 })
        .collect();
    let ef = function(domain, e.clone());
    let mass: f64 = e.iter().sum::<f64>() / 64.0;
    for p in [0.5, 1.0, 2.0] {
        assert!(rel(weak_norm(&ef, p, None).unwrap(), mass.powf(1.0 / p)) <= TOL);
        for s in [0.5, 1.0, 4.0] {
            let want = (p / s).powf(1.0 / s) * mass.powf(1.0 / p);
            assert!(rel(lorentz_norm(&ef, p, s, None).unwrap(), want) <= TOL);
        }
    }
}

#[test]
fn constants_by_hand() {
    let d1 = Domain::new(1, 1).unwrap();
    let w = GridFunction::weight(d1, vec![1.0, 3.0]).unwrap();
    assert!(
        rel(
            ap_constant(&w, 2.0, CubeScope::Dyadic).unwrap().value,
            4.0 / 3.0
        ) <= TOL
    );
    let fwv = fw_constant(&w, CubeScope::Dyadic).unwrap();
    assert!(rel(fwv.value, 1.25) <= TOL);
    assert_eq!(fwv.argmax.side, 2);
    for c in [0.1, 10.0] {
        let cw = w.scale(c).unwrap();
        assert!(
            rel(
                ap_constant(&cw, 2.0, CubeScope::Dyadic).unwrap().value,
                4.0 / 3.0
            ) <= 1e-15
        );
    }
    let d3 = Domain::new(2, 2).unwrap();
    let c = GridFunction::constant(d3, 7.0).unwrap();
    for p in [1.0, 2.0, 5.0] {
        assert!(
            rel(
                ap_constant(&c, p, CubeScope::AllLattice).unwrap().value,
                1.0
            ) <= TOL
        );
    }
    assert!(rel(fw_constant(&c, CubeScope::AllLattice).unwrap().value, 1.0) <= TOL);

    // w_1 = (1,2), w_2 = (1,1), p = (2,2): cubes [0,1), [0,1/2), [1/2,1).
    let t = weight_tuple(d1, &[vec![1.0, 2.0], vec![1.0, 1.0]]);
    let pvec = ExponentTuple::new(vec![2.0, 2.0]).unwrap();
    let root = 1.5 * (0.5 * (1.0 + 0.25f64)).sqrt();
    let want = root.max(1.0).max(1.0);
    assert!(
        rel(
            multilinear_ap(&t, &pvec, None, CubeScope::Dyadic)
                .unwrap()
                .value,
            want
        ) <= TOL
    );
}

#[test]
fn fw_is_at_least_one_with_equality_for_cubewise_constants() {
    let domain = Domain::new(1, 6).unwrap();
    let mut r = rng(21);
    for _ in 0..30 {
        let w = GridFunction::weight(domain, positive(&mut r, 64)).unwrap();
        assert!(fw_constant(&w, CubeScope::Dyadic).unwrap().value >= 1.0);
    }
    let w = GridFunction::constant(domain, 2.0).unwrap();
    assert!(rel(fw_constant(&w, CubeScope::Dyadic).unwrap().value, 1.0) <= TOL);
}

#[test]
fn m1_reductions() {
    let domain = Domain::new(1, 5).unwrap();
    let mut r = rng(17);
    for _ in 0..20 {
        let w = GridFunction::weight(domain, positive(&mut r, 32)).unwrap();
        let p = r.gen_range(1.0..5.0);
        let pvec = ExponentTuple::new(vec![p]).unwrap();
        let t = WeightTuple::new(vec![w.clone()]).unwrap();
        let ml = multilinear_ap(&t, &pvec, None, CubeScope::Dyadic)
            .unwrap()
            .value;
        let lin = ap_constant(&w.powf(p).unwrap(), p, CubeScope::Dyadic)
            .unwrap()
            .value
            .powf(1.0 / p);
        assert!(rel(ml, lin) <= 1e-10);
        let mlfw = ml_fw_constant(&t, &pvec, CubeScope::Dyadic).unwrap().value;
        assert!(
            rel(
                mlfw,
                fw_constant(&w, CubeScope::Dyadic)
                    .unwrap()
                    .value
                    .powf(1.0 / p)
            ) <= 1e-10
        );
    }
}

#[test]
fn maximal_of_constant_and_half_indicator() {
    let domain = Domain::new(2, 3).unwrap();
    let c = GridFunction::constant(domain, 2.5).unwrap();
    assert!(maximal(&c, None, None)
        .unwrap()
        .values()
        .iter()
        .all(|&v| rel(v, 2.5) <= TOL));
    let d = Domain::new(1, 2).unwrap();
    let f = function(d, vec![1.0, 1.0, 0.0, 0.0]);
    assert_eq!(
        maximal(&f, None, None).unwrap().values(),
        &[1.0, 1.0, 0.5, 0.5]
    );
}

#[test]
fn sparse_operator_small_cases() {
    let d = Domain::new(1, 1).unwrap();
    let fam = CubeFamily::from_nodes(d, [Node::ROOT, Node { level: 1, z: 0 }]).unwrap();
    let one = GridFunction::constant(d, 1.0).unwrap();
    assert_eq!(
        sparse_operator(&fam, &[one.clone(), one.clone()])
            .unwrap()
            .values(),
        &[2.0, 1.0]
    );
    let root = CubeFamily::from_nodes(d, [Node::ROOT]).unwrap();
    assert_eq!(
        sparse_operator(&root, std::slice::from_ref(&one))
            .unwrap()
            .values(),
        &[1.0, 1.0]
    );
    let f = function(d, vec![3.0, 5.0]);
    for q in [0.25, 1.0, 7.0, f64::INFINITY] {
        assert!(
            max_rel(
                sparse_q_averages(&root, std::slice::from_ref(&f), q)
                    .unwrap()
                    .values(),
                &[4.0, 4.0]
            ) <= TOL
        );
    }
}

#[test]
fn shifted_grid_examples() {
    let d = Domain::new(1, 3).unwrap();
    let third = Cube::new(vec![1], 1, vec![0]).unwrap();
    assert_eq!(third.lower_corner(), vec![1.0 / 3.0]);
    assert_eq!(third.side(), 0.5);
    let kids = third.children(&d).unwrap();
    assert_eq!(kids.len(), 2);
    assert!((kids[1].lower_corner()[0] - 7.0 / 12.0).abs() < 1e-15);
    for k in &kids {
        assert_eq!(&k.parent().unwrap(), &third);
        assert!(third.contains(k));
    }
    assert_eq!(
        Cube::dyadic(1, vec![1]).unwrap().parent().unwrap(),
        Cube::root(1)
    );
    assert_eq!(
        Cube::dyadic(2, vec![1]).unwrap().parent().unwrap(),
        Cube::dyadic(1, vec![0]).unwrap()
    );
    assert!(Cube::root(1).contains(&Cube::dyadic(1, vec![0]).unwrap()));
    assert!(!Cube::dyadic(1, vec![0])
        .unwrap()
        .contains(&Cube::dyadic(1, vec![1]).unwrap()));
    assert!(third.contains(&Cube::dyadic(2, vec![2]).unwrap()));
    let quads = Cube::root(2).children(&Domain::new(2, 1).unwrap()).unwrap();
    assert_eq!(quads.len(), 4);
}

/// Exact rational membership in units of `1/(3·2^L)`.
fn cover_oracle(l: u32, d: usize, lo: &[i64], side: i64) -> (i64, usize) {
    let big = 1i64 << l;
    let mut best: Option<(i64, usize)> = None;
    for level in 0..=l {
        let s = 3i64 << (l - level);
        for code in 0..3usize.pow(d as u32) {
            let mut fits = 0;
            let mut c = code;
            for axis in (0..d).rev() {
                let shift = (c % 3) as i64;
                c /= 3;
                let origin = shift * big;
                let k = (lo[axis] - origin).div_euclid(s);
                if lo[axis] + side <= origin + (k + 1) * s {
                    fits += 1;
                }
            }
            if fits == d && best.is_none_or(|b| s < b.0) {
                best = Some((s, code));
            }
        }
    }
    best.expect("cover exists")
}

#[test]
fn lattice_covers_are_minimal_and_within_six_to_the_d() {
    let d1 = Domain::new(1, 4).unwrap();
    // [0.4, 0.6): units of 1/48.
    let q = LatticeCube::enclosing(&d1, &[0.4], 0.2).unwrap();
    let cover = lattice_cover(&d1, &q).unwrap();
    assert_eq!(cover.shift(), &[1]);
    assert_eq!(cover.side(), 0.5);
    assert!((cover.lower_corner()[0] - 1.0 / 3.0).abs() < 1e-15);
    let dyadic = LatticeCube::new(vec![3 * 16 / 4], 3 * 16 / 4).unwrap();
    let c = lattice_cover(&d1, &dyadic).unwrap();
    assert_eq!(
        (c.shift(), c.level(), c.index()),
        (&[0u8][..], 2, &[1i64][..])
    );

    let mut r = rng(1);
    for trial in 0..1000 {
        let d = if trial % 2 == 0 { 1 } else { 2 };
        let l = 4;
        let domain = Domain::new(d, l).unwrap();
        let unit = 3 * (1i64 << l);
        let side = r.gen_range(1..=unit / 2);
        let lo: Vec<i64> = (0..d).map(|_| r.gen_range(0..=unit - side)).collect();
        let q = LatticeCube::new(lo.clone(), side).unwrap();
        let cover = lattice_cover(&domain, &q).unwrap();
        let (best_side, _) = cover_oracle(l, d, &lo, side);
        let cover_side = 3i64 << (l - cover.level());
        assert_eq!(
            cover_side, best_side,
            "not minimal for lo={lo:?} side={side}"
        );
        assert!(
            (cover_side as f64).powi(d as i32)
                <= 6f64.powi(d as i32) * (side as f64).powi(d as i32)
        );
    }
}

#[test]
fn cz_small_example_and_trivial_height() {
    let d = Domain::new(1, 2).unwrap();
    let f = function(d, vec![0.0, 0.0, 8.0, 0.0]);
    let cz = cz_decompose(&f, 3.0).unwrap();
    assert_eq!(cz.bad_cubes(), vec![Cube::dyadic(1, vec![1]).unwrap()]);
    assert_eq!(cz.good.values(), &[0.0, 0.0, 4.0, 4.0]);
    let g = function(d, vec![1.0, 2.0, 0.5, 3.0]);
    let cz = cz_decompose(&g, 3.0).unwrap();
    assert!(cz.bad.is_empty() && cz.omega.is_empty());
    assert_eq!(cz.good, g);
}

#[test]
fn cz_matches_stopping_time_oracle() {
    let mut r = rng(4);
    for trial in 0..40 {
        let domain = if trial % 2 == 0 {
            Domain::new(1, 6).unwrap()
        } else {
            Domain::new(2, 3).unwrap()
        };
        let lat = Lattice::of(&domain);
        let f = positive(&mut r, lat.cells());
        let root_avg = f.iter().sum::<f64>() / f.len() as f64;
        let lambda = root_avg * r.gen_range(1.0..6.0);
        let cz = cz_decompose(&function(domain, f.clone()), lambda).unwrap();
        // Maximal dyadic cubes with average above λ.
        let cubes = lat.dyadic();
        let above: Vec<&Block> = cubes
            .iter()
            .filter(|b| mean(&f, &lat.rows(b), 1.0) > lambda)
            .collect();
        let maximal: Vec<Block> = above
            .iter()
            .filter(|b| {
                !above.iter().any(|o| {
                    o.side > b.side
                        && (0..lat.d).all(|a| b.lo[a] >= o.lo[a] && b.lo[a] < o.lo[a] + o.side)
                })
            })
            .map(|b| (*b).clone())
            .collect();
        let mut got: Vec<Block> = cz.bad_cubes().iter().map(|c| lat.block_of(c)).collect();
        let key = |b: &Block| (b.side, b.lo.clone());
        got.sort_by_key(key);
        let mut want = maximal;
        want.sort_by_key(key);
        assert_eq!(got, want);
    }
}

#[test]
fn testing_constant_m1_matches_duality() {
    let mut r = rng(8);
    for _ in 0..20 {
        let domain = Domain::new(1, 5).unwrap();
        let lat = Lattice::of(&domain);
        let fam = random_family(&mut r, domain, 8);
        let q0 = fam.cubes()[0].clone();
        let w = positive(&mut r, 32);
        let p = r.gen_range(1.2..4.0);
        let pc = conj(p);
        let t = WeightTuple::new(vec![GridFunction::weight(domain, w.clone()).unwrap()]).unwrap();
        let pvec = ExponentTuple::new(vec![p]).unwrap();
        let out = testing_constant(&fam, &t, &pvec, &q0, 10, 1e-12).unwrap();
        assert!(out.converged && out.iterations == 1);
        // sup_{‖f w‖_p = 1} ∫ A f v = ‖(A v) w^{-1} 1_{Q0}‖_{p'} by self-adjointness.
        let q0b = lat.block_of(&q0);
        let local: Vec<Block> = blocks_of(&lat, &fam)
            .into_iter()
            .filter(|b| {
                (0..lat.d).all(|a| b.lo[a] >= q0b.lo[a] && b.lo[a] + b.side <= q0b.lo[a] + q0b.side)
            })
            .collect();
        let v: Vec<f64> = w.iter().map(|x| x.powf(p)).collect();
        let av = sparse_op(&lat, &local, &[&v]);
        let rows = lat.rows(&q0b);
        let cell = 1.0 / 32.0;
        let dual: f64 = rows
            .iter()
            .map(|&x| (av[x] / w[x]).powf(pc) * cell)
            .sum::<f64>()
            .powf(1.0 / pc);
        let vq: f64 = rows.iter().map(|&x| v[x] * cell).sum();
        assert!(rel(out.value, vq.powf(-1.0 / pc) * dual) <= 1e-10);
    }
}

#[test]
fn testing_constant_single_cube_trivial_weights() {
    let domain = Domain::new(1, 4).unwrap();
    let fam = CubeFamily::from_nodes(domain, [Node::ROOT]).unwrap();
    for m in 1..=3 {
        let t = WeightTuple::new(vec![GridFunction::constant(domain, 1.0).unwrap(); m]).unwrap();
        let pvec = ExponentTuple::new(vec![2.0 * m as f64 + 1.0; m]).unwrap();
        let out = testing_constant(&fam, &t, &pvec, &Cube::root(1), 20, 1e-13).unwrap();
        assert!(out.converged);
        assert!(rel(out.value, 1.0) <= 1e-12, "m={m}: {}", out.value);
    }
}

/// Members by direct recursion: a child joins when its average beats twice its principal ancestor's.
fn principal_oracle(lat: &Lattice, f: &[f64], v: &[f64], tree: &[Block]) -> Vec<Block> {
    let lam = |b: &Block| {
        let rows = lat.rows(b);
        rows.iter().map(|&x| f[x]).sum::<f64>() / rows.iter().map(|&x| v[x]).sum::<f64>()
    };
    let within = |inner: &Block, outer: &Block| {
        inner.side < outer.side
            && (0..lat.d)
                .all(|a| inner.lo[a] >= outer.lo[a] && inner.lo[a] < outer.lo[a] + outer.side)
    };
    let mut members = vec![tree[0].clone()];
    let mut sorted = tree.to_vec();
    sorted.sort_by_key(|c| std::cmp::Reverse(c.side));
    for q in sorted.iter().skip(1) {
        let principal = members
            .iter()
            .filter(|m| within(q, m))
            .min_by_key(|m| m.side)
            .expect("root")
            .clone();
        if lam(q) > 2.0 * lam(&principal) {
            members.push(q.clone());
        }
    }
    members
}

#[test]
fn principal_cubes_match_recursion() {
    let domain = Domain::new(1, 5).unwrap();
    let lat = Lattice::of(&domain);
    let all = CubeFamily::from_nodes(domain, domain.nodes()).unwrap();
    let mut r = rng(31);
    for trial in 0..30 {
        let mut f = positive(&mut r, 32);
        if trial % 3 == 0 {
            f = vec![0.01; 32];
            f[r.gen_range(0..32)] = 100.0;
        }
        let v = positive(&mut r, 32);
        let fam = if trial % 2 == 0 {
            all.clone()
        } else {
            random_family(&mut r, domain, 12)
        };
        let tree: Vec<Block> = std::iter::once(lat.block_of(&Cube::root(1)))
            .chain(blocks_of(&lat, &fam).into_iter().filter(|b| b.side < 32))
            .collect();
        let fam =
            CubeFamily::from_cubes(domain, &[vec![Cube::root(1)], fam.cubes()].concat()).unwrap();
        let st = principal_cubes(
            &function(domain, f.clone()),
            &function(domain, v.clone()),
            &Cube::root(1),
            &fam,
        )
        .unwrap();
        st.check().unwrap();
        let mut got: Vec<Block> = st
            .members_as_cubes()
            .iter()
            .map(|c| lat.block_of(c))
            .collect();
        let mut want = principal_oracle(&lat, &f, &v, &tree);
        let key = |b: &Block| (b.side, b.lo.clone());
        got.sort_by_key(key);
        want.sort_by_key(key);
        assert_eq!(got, want);
    }
    let one = GridFunction::constant(domain, 1.0).unwrap();
    let flat = principal_cubes(&one, &one, &Cube::root(1), &all).unwrap();
    assert_eq!(flat.members_as_cubes(), vec![Cube::root(1)]);
}

#[test]
fn superlevel_union_matches_cellwise_level_set() {
    let domain = Domain::new(1, 5).unwrap();
    let lat = Lattice::of(&domain);
    let mut r = rng(12);
    for _ in 0..30 {
        let fam = random_family(&mut r, domain, 12);
        let a = CoefficientMap::new(&fam, positive(&mut r, fam.len())).unwrap();
        let rr = [1.0, 2.0, f64::INFINITY][r.gen_range(0..3)];
        let blocks = blocks_of(&lat, &fam);
        let values: Vec<f64> = (0..32)
            .map(|x| {
                let hits = blocks
                    .iter()
                    .zip(a.values())
                    .filter(|(b, _)| lat.inside(b, x))
                    .map(|(_, a)| *a);
                if rr.is_infinite() {
                    hits.fold(0.0, f64::max)
                } else {
                    hits.map(|a| a.powf(rr)).sum::<f64>().powf(1.0 / rr)
                }
            })
            .collect();
        let lambda = values.iter().cloned().fold(0.0, f64::max) * r.gen_range(0.1..0.9);
        let cubes = superlevel_decomposition(&fam, &a, rr, lambda).unwrap();
        let mut covered = [0; 32];
        for c in &cubes {
            for x in lat.rows(&lat.block_of(c)) {
                covered[x] += 1;
            }
        }
        for x in 0..32 {
            assert_eq!(covered[x], (values[x] > lambda) as i32, "cell {x}");
        }
    }
    let single = CubeFamily::from_nodes(domain, [Node::ROOT]).unwrap();
    let one = CoefficientMap::new(&single, vec![1.0]).unwrap();
    assert_eq!(
        superlevel_decomposition(&single, &one, 1.0, 0.5).unwrap(),
        vec![Cube::root(1)]
    );
    assert!(superlevel_decomposition(&single, &one, 1.0, 1.0)
        .unwrap()
        .is_empty());
}

#[test]
fn height_function_and_sparse_examples() {
    let domain = Domain::new(1, 4).unwrap();
    let chain = CubeFamily::from_nodes(domain, (0..4).map(|l| Node { level: l, z: 0 })).unwrap();
    assert_eq!(chain.height_function(None).unwrap().values()[0], 4.0);
    let s = verify_sparse(&chain, 0.5).unwrap();
    assert_eq!(s.witness_fractions()[..3], [0.5, 0.5, 0.5]);
    let root = CubeFamily::from_nodes(domain, [Node::ROOT]).unwrap();
    assert!(root
        .height_function(None)
        .unwrap()
        .values()
        .iter()
        .all(|&h| h == 1.0));
    let level: Vec<Node> = (0..4).map(|z| Node { level: 2, z }).collect();
    let disjoint = verify_sparse(&CubeFamily::from_nodes(domain, level).unwrap(), 1.0).unwrap();
    assert!(disjoint.witness_fractions().iter().all(|&f| f == 1.0));
    let full = CubeFamily::from_nodes(domain, domain.nodes()).unwrap();
    assert!(verify_sparse(&full, 0.5).is_err());
}
