//! Exact evaluation of tensor diagram invariants via proper 3-labelings.
//!
//! The invariant of a diagram is the signed sum over all edge labelings by
//! {1,2,3} that are proper at every internal vertex: each labeling
//! contributes the product of `sign(ℓ(v))` over internal vertices (parity of
//! the cyclic permutation of the three labels read clockwise) times the
//! boundary monomial. Crossings contribute two independent strands and are
//! resolved before enumeration.

use crate::algebra::{CoordVar, IntPolynomial, Monomial};
use crate::diagram::{Color, Node, TensorDiagram};
use num_bigint::BigInt;
use num_traits::Zero;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("diagram exceeds the edge limit for evaluation ({0} edges)")]
    ResourceLimit(usize),
    #[error("diagram is not closed")]
    NotClosed,
    #[error("invalid diagram")]
    Invalid,
}

pub const DEFAULT_EDGE_LIMIT: usize = 40;

/// Sign of the three labels read in stored clockwise order: +1 for an even
/// cyclic image of (1,2,3), -1 otherwise.
fn label_sign(a: u8, b: u8, c: u8) -> i8 {
    match (a, b, c) {
        (1, 2, 3) | (2, 3, 1) | (3, 1, 2) => 1,
        _ => -1,
    }
}

pub fn evaluate(d: &TensorDiagram) -> Result<IntPolynomial, EvalError> {
    evaluate_with_limit(d, DEFAULT_EDGE_LIMIT)
}

pub fn evaluate_with_limit(d: &TensorDiagram, limit: usize) -> Result<IntPolynomial, EvalError> {
    let d = d.resolve_crossings();
    if d.edges.len() > limit {
        return Err(EvalError::ResourceLimit(d.edges.len()));
    }
    let n_edges = d.edges.len();
    let n_internal = d.internal.len();

    // Incidence of internal vertices, in rotation order.
    let mut rot_edges: Vec<[usize; 3]> = Vec::with_capacity(n_internal);
    for i in 0..n_internal as u32 {
        let rot = d
            .rotation
            .get(&Node::Internal(i))
            .ok_or(EvalError::Invalid)?;
        if rot.len() != 3 {
            return Err(EvalError::Invalid);
        }
        rot_edges.push([rot[0].edge as usize, rot[1].edge as usize, rot[2].edge as usize]);
    }

    // Choose an edge order that keeps internal vertices saturated early.
    let order = edge_order(&d);

    let mut labels = vec![0u8; n_edges];
    let mut acc = IntPolynomial::zero();
    search(&d, &rot_edges, &order, 0, &mut labels, &mut acc);

    // Each free loop multiplies the invariant by 3.
    if d.free_loops > 0 {
        let factor = BigInt::from(3).pow(d.free_loops);
        acc = acc.scale(&factor);
    }
    Ok(acc)
}

fn edge_order(d: &TensorDiagram) -> Vec<usize> {
    let n_edges = d.edges.len();
    let mut order = Vec::with_capacity(n_edges);
    let mut placed = vec![false; n_edges];
    // Repeatedly pick the edge whose internal endpoints have the most
    // already-placed incident edges.
    for _ in 0..n_edges {
        let mut best: Option<(i32, usize)> = None;
        for e in 0..n_edges {
            if placed[e] {
                continue;
            }
            let mut score = 0;
            for node in d.edges[e] {
                if matches!(node, Node::Internal(_)) {
                    for (f, fe) in d.edges.iter().enumerate() {
                        if placed[f] && fe.contains(&node) {
                            score += 10;
                        }
                    }
                    score += 1;
                }
            }
            if best.map_or(true, |(s, _)| score > s) {
                best = Some((score, e));
            }
        }
        let (_, e) = best.unwrap();
        placed[e] = true;
        order.push(e);
    }
    order
}

fn search(
    d: &TensorDiagram,
    rot_edges: &[[usize; 3]],
    order: &[usize],
    depth: usize,
    labels: &mut Vec<u8>,
    acc: &mut IntPolynomial,
) {
    if depth == order.len() {
        emit(d, rot_edges, labels, acc);
        return;
    }
    let e = order[depth];
    'next_label: for label in 1..=3u8 {
        // Properness at internal endpoints.
        for node in d.edges[e] {
            if let Node::Internal(i) = node {
                for &f in &rot_edges[i as usize] {
                    if f != e && labels[f] == label {
                        continue 'next_label;
                    }
                }
            }
        }
        labels[e] = label;
        search(d, rot_edges, order, depth + 1, labels, acc);
        labels[e] = 0;
    }
}

fn emit(d: &TensorDiagram, rot_edges: &[[usize; 3]], labels: &[u8], acc: &mut IntPolynomial) {
    let mut sign = 1i8;
    for rot in rot_edges {
        sign *= label_sign(labels[rot[0]], labels[rot[1]], labels[rot[2]]);
    }
    let mut exps: Vec<(CoordVar, i64)> = Vec::new();
    for (e, edge) in d.edges.iter().enumerate() {
        for node in edge {
            if let Node::Boundary(v) = node {
                let var = match d.signature.color(*v) {
                    Color::Black => CoordVar::x(labels[e], *v),
                    Color::White => CoordVar::y(labels[e], *v),
                };
                exps.push((var, 1));
            }
        }
    }
    acc.add_term(Monomial::from_exponents(exps), &BigInt::from(sign));
}

/// Scalar invariant of a closed diagram, via the labeling sum.
pub fn evaluate_closed(d: &TensorDiagram) -> Result<BigInt, EvalError> {
    if !d.is_closed() {
        return Err(EvalError::NotClosed);
    }
    let p = evaluate(d)?;
    Ok(p.as_constant().unwrap_or_else(BigInt::zero))
}

/// Independent formula for closed webs: `(-1)^m` times the number of proper
/// 3-colorings of the edges, where `m` is the number of white (equivalently
/// black) vertices.
pub fn closed_sign_times_colorings(d: &TensorDiagram) -> Result<BigInt, EvalError> {
    if !d.is_closed() {
        return Err(EvalError::NotClosed);
    }
    let d = d.resolve_crossings();
    let whites = d.internal.iter().filter(|c| **c == Color::White).count();
    let count = proper_colorings(&d)?;
    let sign = if whites % 2 == 0 { 1 } else { -1 };
    Ok(BigInt::from(sign) * count * BigInt::from(3).pow(d.free_loops))
}

fn proper_colorings(d: &TensorDiagram) -> Result<BigInt, EvalError> {
    if d.edges.len() > DEFAULT_EDGE_LIMIT {
        return Err(EvalError::ResourceLimit(d.edges.len()));
    }
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); d.internal.len()];
    for (e, edge) in d.edges.iter().enumerate() {
        for node in edge {
            if let Node::Internal(i) = node {
                incident[*i as usize].push(e);
            }
        }
    }
    fn rec(incident: &[Vec<usize>], labels: &mut Vec<u8>, e: usize) -> BigInt {
        if e == labels.len() {
            return BigInt::from(1);
        }
        let mut total = BigInt::zero();
        'label: for label in 1..=3u8 {
            for edges in incident {
                if edges.contains(&e) {
                    for &f in edges {
                        if f != e && labels[f] == label {
                            continue 'label;
                        }
                    }
                }
            }
            labels[e] = label;
            total += rec(incident, labels, e + 1);
            labels[e] = 0;
        }
        total
    }
    let mut labels = vec![0u8; d.edges.len()];
    Ok(rec(&incident, &mut labels, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Division;
    use crate::diagram::{EdgeEnd, Signature};
    use num_traits::One;

    fn x(axis: u8, vertex: u32) -> IntPolynomial {
        IntPolynomial::var(CoordVar::x(axis, vertex))
    }

    fn y(axis: u8, vertex: u32) -> IntPolynomial {
        IntPolynomial::var(CoordVar::y(axis, vertex))
    }

    /// det of the 3x3 matrix with columns x(c1), x(c2), x(c3).
    pub fn plucker(c: [u32; 3]) -> IntPolynomial {
        let mut det = IntPolynomial::zero();
        let perms: [([usize; 3], i64); 6] = [
            ([0, 1, 2], 1),
            ([1, 2, 0], 1),
            ([2, 0, 1], 1),
            ([0, 2, 1], -1),
            ([2, 1, 0], -1),
            ([1, 0, 2], -1),
        ];
        for (p, s) in perms {
            let mut term = IntPolynomial::constant(s);
            for (row, col) in p.iter().enumerate() {
                term = term.mul(&x((row + 1) as u8, c[*col]));
            }
            det = det.add(&term);
        }
        det
    }

    fn tripod(n: u32, legs: [u32; 3]) -> TensorDiagram {
        let sig = Signature(vec![Color::Black; n as usize]);
        let mut d = TensorDiagram::new(sig);
        let w = d.add_internal(Color::White);
        let ends: Vec<EdgeEnd> = legs
            .iter()
            .map(|v| EdgeEnd { edge: d.add_edge(w, Node::Boundary(*v)), side: 0 })
            .collect();
        d.set_rotation(w, ends);
        d
    }

    #[test]
    fn single_edge_is_the_pairing() {
        // White 4 to black 2 in signature [bbbw].
        let mut d = TensorDiagram::new(Signature::parse("bbbw").unwrap());
        d.add_edge(Node::Boundary(4), Node::Boundary(2));
        let p = evaluate(&d).unwrap();
        let expect = y(1, 4).mul(&x(1, 2))
            .add(&y(2, 4).mul(&x(2, 2)))
            .add(&y(3, 4).mul(&x(3, 2)));
        assert_eq!(p, expect);
    }

    #[test]
    fn tripod_is_plucker() {
        let d = tripod(3, [1, 2, 3]);
        assert_eq!(evaluate(&d).unwrap(), plucker([1, 2, 3]));
    }

    #[test]
    fn superposition_multiplies() {
        let a = tripod(4, [1, 2, 3]);
        let mut b = TensorDiagram::new(Signature(vec![Color::Black; 4]));
        b.add_edge(Node::Boundary(4), Node::Boundary(2));
        // Make signature [bbbw] for both.
        let sig = Signature::parse("bbbw").unwrap();
        let mut a2 = a.clone();
        a2.signature = sig.clone();
        let mut b2 = b.clone();
        b2.signature = sig;
        let both = a2.superpose(&b2);
        let pa = evaluate(&a2).unwrap();
        let pb = evaluate(&b2).unwrap();
        assert_eq!(evaluate(&both).unwrap(), pa.mul(&pb));
    }

    #[test]
    fn multihomogeneity() {
        let d = tripod(3, [1, 2, 3]);
        let p = evaluate(&d).unwrap();
        let deg = d.multidegree();
        for (m, _) in p.terms() {
            for v in 1..=3u32 {
                let total: i64 = m
                    .exponents()
                    .filter(|(var, _)| var.vertex == v)
                    .map(|(_, e)| e)
                    .sum();
                assert_eq!(total, deg.0[(v - 1) as usize] as i64);
            }
        }
    }

    #[test]
    fn closed_loop_is_three() {
        let mut d = TensorDiagram::new(Signature(vec![]));
        d.free_loops = 1;
        assert_eq!(evaluate_closed(&d).unwrap(), BigInt::from(3));
    }

    #[test]
    fn theta_graph() {
        // Two internal vertices joined by three parallel edges.
        let mut d = TensorDiagram::new(Signature(vec![]));
        let w = d.add_internal(Color::White);
        let b = d.add_internal(Color::Black);
        let e0 = d.add_edge(w, b);
        let e1 = d.add_edge(w, b);
        let e2 = d.add_edge(w, b);
        d.set_rotation(
            w,
            vec![
                EdgeEnd { edge: e0, side: 0 },
                EdgeEnd { edge: e1, side: 0 },
                EdgeEnd { edge: e2, side: 0 },
            ],
        );
        d.set_rotation(
            b,
            vec![
                EdgeEnd { edge: e2, side: 1 },
                EdgeEnd { edge: e1, side: 1 },
                EdgeEnd { edge: e0, side: 1 },
            ],
        );
        assert_eq!(evaluate_closed(&d).unwrap(), BigInt::from(-6));
        assert_eq!(closed_sign_times_colorings(&d).unwrap(), BigInt::from(-6));
    }

    #[test]
    fn cube_skeleton_is_24() {
        // 1-skeleton of the cube: outer square o1..o4, inner square i1..i4,
        // verticals; alternating colors make it bipartite.
        let mut d = TensorDiagram::new(Signature(vec![]));
        let outer: Vec<Node> = (0..4)
            .map(|k| d.add_internal(if k % 2 == 0 { Color::White } else { Color::Black }))
            .collect();
        let inner: Vec<Node> = (0..4)
            .map(|k| d.add_internal(if k % 2 == 0 { Color::Black } else { Color::White }))
            .collect();
        let mut ends: std::collections::BTreeMap<Node, Vec<EdgeEnd>> = Default::default();
        let mut connect = |d: &mut TensorDiagram, ends: &mut std::collections::BTreeMap<Node, Vec<EdgeEnd>>, a: Node, b: Node| {
            let e = d.add_edge(a, b);
            ends.entry(a).or_default().push(EdgeEnd { edge: e, side: 0 });
            ends.entry(b).or_default().push(EdgeEnd { edge: e, side: 1 });
        };
        for k in 0..4 {
            connect(&mut d, &mut ends, outer[k], outer[(k + 1) % 4]);
            connect(&mut d, &mut ends, inner[k], inner[(k + 1) % 4]);
            connect(&mut d, &mut ends, outer[k], inner[k]);
        }
        for (node, list) in ends {
            d.set_rotation(node, list);
        }
        assert_eq!(evaluate_closed(&d).unwrap(), BigInt::from(24));
        assert_eq!(closed_sign_times_colorings(&d).unwrap(), BigInt::from(24));
    }

    #[test]
    fn figure_2d_matches_det_times_pairing() {
        // The type (1,3) diagram: whites w1 (legs 3, 2, b), w2 (legs 1, 2, b),
        // black b (legs 4, w2, w1); signature [bbbw], vertex 4 white.
        let mut d = TensorDiagram::new(Signature::parse("bbbw").unwrap());
        let w1 = d.add_internal(Color::White);
        let w2 = d.add_internal(Color::White);
        let b = d.add_internal(Color::Black);
        let e_b_w1 = d.add_edge(b, w1);
        let e_b_w2 = d.add_edge(b, w2);
        let e_b_4 = d.add_edge(b, Node::Boundary(4));
        let e_w1_3 = d.add_edge(w1, Node::Boundary(3));
        let e_w1_2 = d.add_edge(w1, Node::Boundary(2));
        let e_w2_1 = d.add_edge(w2, Node::Boundary(1));
        let e_w2_2 = d.add_edge(w2, Node::Boundary(2));
        // Clockwise rotations as drawn (vertex 4 on top, 2 at bottom,
        // 1 right, 3 left).
        d.set_rotation(
            w1,
            vec![
                EdgeEnd { edge: e_b_w1, side: 1 },
                EdgeEnd { edge: e_w1_2, side: 0 },
                EdgeEnd { edge: e_w1_3, side: 0 },
            ],
        );
        d.set_rotation(
            w2,
            vec![
                EdgeEnd { edge: e_w2_1, side: 0 },
                EdgeEnd { edge: e_w2_2, side: 0 },
                EdgeEnd { edge: e_b_w2, side: 1 },
            ],
        );
        d.set_rotation(
            b,
            vec![
                EdgeEnd { edge: e_b_4, side: 0 },
                EdgeEnd { edge: e_b_w2, side: 0 },
                EdgeEnd { edge: e_b_w1, side: 0 },
            ],
        );
        let p = evaluate(&d).unwrap();
        let pairing = x(1, 2).mul(&y(1, 4))
            .add(&x(2, 2).mul(&y(2, 4)))
            .add(&x(3, 2).mul(&y(3, 4)));
        let expect = plucker([1, 2, 3]).mul(&pairing);
        assert_eq!(p, expect);
        assert_eq!(d.multidegree().0, vec![1, 2, 1, 1]);
    }

    #[test]
    fn fork_matches_cross_product_substitution() {
        // evaluate(add_fork(tripod, 3)) equals evaluate(tripod) with
        // x(3) := y(3) x y(4) substituted.
        let d = tripod(3, [1, 2, 3]);
        let forked = crate::diagram::add_fork(&d, 3);
        let lhs = evaluate(&forked).unwrap();
        let p = evaluate(&d).unwrap();
        // Substitute x_i(3) -> sum_{j,k} eps(i,j,k) y_j(3) y_k(4).
        let mut rhs = IntPolynomial::zero();
        for (m, c) in p.terms() {
            let mut term = IntPolynomial::constant(c.clone());
            for (var, e) in m.exponents() {
                let factor = if var.vertex == 3 {
                    assert_eq!(var.kind, crate::algebra::VarKind::X);
                    let i = var.axis;
                    let mut sub = IntPolynomial::zero();
                    for (j, k, s) in [(1u8, 2u8, 1i64), (2, 3, 1), (3, 1, 1), (2, 1, -1), (3, 2, -1), (1, 3, -1)] {
                        // eps(i,j,k) nonzero only when {i,j,k} = {1,2,3}.
                        let trio = [i, j, k];
                        let mut sorted = trio;
                        sorted.sort();
                        if sorted == [1, 2, 3] {
                            let sgn = permutation_sign(trio);
                            let _ = s;
                            sub = sub.add(&y(j, 3).mul(&y(k, 4)).scale(&BigInt::from(sgn)));
                        }
                    }
                    sub
                } else {
                    IntPolynomial::var(*var)
                };
                for _ in 0..e {
                    term = term.mul(&factor);
                }
            }
            rhs = rhs.add(&term);
        }
        assert_eq!(lhs, rhs);
        let _ = IntPolynomial::one();
    }

    fn permutation_sign(p: [u8; 3]) -> i64 {
        let mut sign = 1i64;
        let mut p = p;
        for i in 0..3 {
            for j in (i + 1)..3 {
                if p[i] > p[j] {
                    p.swap(i, j);
                    sign = -sign;
                }
            }
        }
        sign
    }

    #[test]
    fn divide_by_evaluation_is_exact() {
        let t = evaluate(&tripod(3, [1, 2, 3])).unwrap();
        let sq = t.mul(&t);
        match sq.divide_exact(&t).unwrap() {
            Division::Exact(r) => assert_eq!(r, t),
            Division::NotDivisible => panic!(),
        }
    }
}
