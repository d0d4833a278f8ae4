//! Signatures, tensor diagrams, and webs.
//!
//! A tensor diagram is a bipartite graph with boundary vertices on a disk,
//! trivalent internal vertices carrying clockwise rotations, and optional
//! 4-valent crossing pseudo-vertices. A [`Web`] is a tensor diagram whose
//! rotation system certifies a planar disk embedding.
//!
//! Clockwise convention: rotations at internal vertices are stored clockwise
//! as drawn in the standard orientation of the disk. Flipping one rotation
//! by an odd permutation negates the invariant of the diagram.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DiagramError {
    #[error("invalid diagram: {0:?}")]
    Invalid(Vec<Violation>),
    #[error("boundary vertex {0} has nonzero degree")]
    DegreeNonZero(u32),
    #[error("diagram has crossings where none are allowed")]
    HasCrossings,
    #[error("malformed diagram JSON: {0}")]
    Json(String),
    #[error("not a disk embedding: Euler count V-E+F = {0}, expected 2")]
    NotPlanar(i64),
    #[error("web requires boundary rotations for every boundary vertex")]
    MissingBoundaryRotation,
}

/// Vertex color. Black boundary vertices carry vectors (`x` variables),
/// white ones covectors (`y` variables).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Color {
    Black,
    White,
}

impl Color {
    pub fn opposite(self) -> Color {
        match self {
            Color::Black => Color::White,
            Color::White => Color::Black,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Color::Black => 'b',
            Color::White => 'w',
        }
    }

    pub fn from_letter(c: char) -> Option<Color> {
        match c {
            'b' => Some(Color::Black),
            'w' => Some(Color::White),
            _ => None,
        }
    }
}

/// Cyclic word of boundary colors, vertex 1 first, clockwise.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Signature(pub Vec<Color>);

impl Signature {
    /// Parse from a string over {b, w}, e.g. `"bbbw"`.
    pub fn parse(s: &str) -> Option<Signature> {
        s.chars().map(Color::from_letter).collect::<Option<Vec<_>>>().map(Signature)
    }

    pub fn len(&self) -> u32 {
        self.0.len() as u32
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Color of boundary vertex `v` (1-based, cyclic).
    pub fn color(&self, v: u32) -> Color {
        let n = self.0.len() as u32;
        self.0[((v - 1) % n) as usize]
    }

    /// Normalize a vertex label into 1..=N.
    pub fn norm(&self, v: i64) -> u32 {
        let n = self.0.len() as i64;
        (((v - 1) % n + n) % n + 1) as u32
    }

    /// Two cyclically adjacent vertices share a color.
    pub fn non_alternating(&self) -> bool {
        let n = self.0.len();
        if n < 2 {
            return true;
        }
        (0..n).any(|i| self.0[i] == self.0[(i + 1) % n])
    }

    /// Type (a, b) = (#white, #black).
    pub fn type_ab(&self) -> (u32, u32) {
        let w = self.0.iter().filter(|c| **c == Color::White).count() as u32;
        (w, self.0.len() as u32 - w)
    }

    pub fn swap_colors(&self) -> Signature {
        Signature(self.0.iter().map(|c| c.opposite()).collect())
    }

    /// Rotate so old vertex `start` becomes vertex 1.
    pub fn rotate(&self, start: u32) -> Signature {
        let n = self.0.len();
        let s = (start as usize - 1) % n;
        Signature(self.0[s..].iter().chain(self.0[..s].iter()).copied().collect())
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.0 {
            write!(f, "{}", c.letter())?;
        }
        Ok(())
    }
}

/// A vertex-like attachment point of an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Boundary(u32),
    Internal(u32),
    Crossing(u32),
}

/// One of the two ends of an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeEnd {
    pub edge: u32,
    pub side: u8,
}

/// Multidegree: boundary degree vector, indexed by boundary vertex.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Multidegree(pub Vec<u32>);

impl fmt::Display for Multidegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|d| d.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EdgeSameColor(u32),
    InternalNotTrivalent(u32),
    CrossingNotQuadrivalent(u32),
    CrossingPairsNotOpposite(u32),
    RotationMismatch(String),
    UnknownBoundaryVertex(u32),
}

/// A drawn tensor diagram.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorDiagram {
    pub signature: Signature,
    /// Color of each internal vertex, indexed by `Node::Internal` payload.
    pub internal: Vec<Color>,
    /// Number of crossings, indexed by `Node::Crossing` payload.
    pub num_crossings: u32,
    /// Edge endpoints; index is the `EdgeEnd::edge` payload.
    pub edges: Vec<[Node; 2]>,
    /// Clockwise rotation at internal vertices (arity 3) and crossings
    /// (arity 4, opposite strands at positions {0,2} and {1,3}).
    pub rotation: BTreeMap<Node, Vec<EdgeEnd>>,
    /// Clockwise order of edge ends at boundary vertices, scanning the disk
    /// interior from the direction of vertex v+1 around to v-1.
    pub boundary_rotation: Option<BTreeMap<u32, Vec<EdgeEnd>>>,
    /// Closed-loop components with no vertices; each contributes a factor 3
    /// to the invariant. Only appears transiently during reduction.
    pub free_loops: u32,
}

impl TensorDiagram {
    pub fn new(signature: Signature) -> Self {
        TensorDiagram {
            signature,
            internal: Vec::new(),
            num_crossings: 0,
            edges: Vec::new(),
            rotation: BTreeMap::new(),
            boundary_rotation: None,
            free_loops: 0,
        }
    }

    pub fn add_internal(&mut self, color: Color) -> Node {
        self.internal.push(color);
        Node::Internal(self.internal.len() as u32 - 1)
    }

    pub fn add_edge(&mut self, a: Node, b: Node) -> u32 {
        self.edges.push([a, b]);
        self.edges.len() as u32 - 1
    }

    pub fn set_rotation(&mut self, v: Node, ends: Vec<EdgeEnd>) {
        self.rotation.insert(v, ends);
    }

    pub fn node_color(&self, n: Node) -> Option<Color> {
        match n {
            Node::Boundary(v) => Some(self.signature.color(v)),
            Node::Internal(i) => Some(self.internal[i as usize]),
            Node::Crossing(_) => None,
        }
    }

    pub fn end_node(&self, end: EdgeEnd) -> Node {
        self.edges[end.edge as usize][end.side as usize]
    }

    pub fn other_end(&self, end: EdgeEnd) -> EdgeEnd {
        EdgeEnd { edge: end.edge, side: 1 - end.side }
    }

    /// All edge ends attached to a node, in edge order.
    pub fn incident_ends(&self, n: Node) -> Vec<EdgeEnd> {
        let mut out = Vec::new();
        for (i, e) in self.edges.iter().enumerate() {
            for side in 0..2u8 {
                if e[side as usize] == n {
                    out.push(EdgeEnd { edge: i as u32, side });
                }
            }
        }
        out
    }

    pub fn degree(&self, n: Node) -> usize {
        self.incident_ends(n).len()
    }

    pub fn multidegree(&self) -> Multidegree {
        let n = self.signature.len();
        let mut deg = vec![0u32; n as usize];
        for e in &self.edges {
            for node in e {
                if let Node::Boundary(v) = node {
                    deg[(*v - 1) as usize] += 1;
                }
            }
        }
        Multidegree(deg)
    }

    /// Check the structural invariants; violations are data, not errors.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.signature.len();
        for e in &self.edges {
            for node in e {
                if let Node::Boundary(v) = node {
                    if *v < 1 || *v > n {
                        out.push(Violation::UnknownBoundaryVertex(*v));
                    }
                }
            }
        }
        if out.iter().any(|v| matches!(v, Violation::UnknownBoundaryVertex(_))) {
            return out;
        }
        // Strand endpoint colors: trace through crossings.
        for (i, _) in self.edges.iter().enumerate() {
            let mut colors = Vec::new();
            for side in 0..2u8 {
                let end = EdgeEnd { edge: i as u32, side };
                if let Some(c) = self.strand_far_color(end) {
                    colors.push(c);
                }
            }
            if colors.len() == 2 && colors[0] == colors[1] {
                out.push(Violation::EdgeSameColor(i as u32));
            }
        }
        for (i, _) in self.internal.iter().enumerate() {
            let node = Node::Internal(i as u32);
            let ends = self.incident_ends(node);
            if ends.len() != 3 {
                out.push(Violation::InternalNotTrivalent(i as u32));
                continue;
            }
            match self.rotation.get(&node) {
                Some(rot) if rot.len() == 3 && same_set(rot, &ends) => {}
                _ => out.push(Violation::RotationMismatch(format!("internal {i}"))),
            }
        }
        for c in 0..self.num_crossings {
            let node = Node::Crossing(c);
            let ends = self.incident_ends(node);
            if ends.len() != 4 {
                out.push(Violation::CrossingNotQuadrivalent(c));
                continue;
            }
            match self.rotation.get(&node) {
                Some(rot) if rot.len() == 4 && same_set(rot, &ends) => {
                    // Opposite strands must sit at positions {0,2} and {1,3};
                    // the two pairs must use disjoint edge ends.
                    let pairs = [[rot[0], rot[2]], [rot[1], rot[3]]];
                    let mut all: Vec<EdgeEnd> = pairs.iter().flatten().copied().collect();
                    all.sort();
                    all.dedup();
                    if all.len() != 4 {
                        out.push(Violation::CrossingPairsNotOpposite(c));
                    }
                }
                _ => out.push(Violation::RotationMismatch(format!("crossing {c}"))),
            }
        }
        if let Some(br) = &self.boundary_rotation {
            for (v, rot) in br {
                let ends = self.incident_ends(Node::Boundary(*v));
                if !same_set(rot, &ends) {
                    out.push(Violation::RotationMismatch(format!("boundary {v}")));
                }
            }
        }
        out
    }

    /// Follow the strand containing `end` through crossings to its real
    /// endpoint; returns the color of that endpoint (None for a closed
    /// strand of crossings).
    pub fn strand_far_color(&self, start: EdgeEnd) -> Option<Color> {
        let mut end = start;
        let mut steps = 0;
        loop {
            let node = self.end_node(end);
            match node {
                Node::Boundary(_) | Node::Internal(_) => return self.node_color(node),
                Node::Crossing(_) => {
                    let rot = self.rotation.get(&node)?;
                    let pos = rot.iter().position(|e| *e == end)?;
                    let opp = rot[(pos + 2) % 4];
                    end = self.other_end(opp);
                    steps += 1;
                    if steps > 4 * self.edges.len() {
                        return None; // closed strand
                    }
                }
            }
        }
    }

    /// Boundary vertices have no incident edges and there are no internal
    /// vertices or crossings.
    pub fn is_closed(&self) -> bool {
        self.signature.is_empty() || self.multidegree().0.iter().all(|d| *d == 0)
    }

    pub fn has_crossings(&self) -> bool {
        self.num_crossings > 0
    }

    /// Replace every crossing by merged pass-through strands, yielding the
    /// abstract underlying diagram (which defines the same invariant).
    pub fn resolve_crossings(&self) -> TensorDiagram {
        if !self.has_crossings() {
            return self.clone();
        }
        let mut out = TensorDiagram::new(self.signature.clone());
        out.internal = self.internal.clone();
        out.free_loops = self.free_loops;
        // Trace each strand once, from real-endpoint ends.
        let mut visited = vec![false; self.edges.len()];
        for (i, e) in self.edges.iter().enumerate() {
            for side in 0..2u8 {
                if visited[i] {
                    break;
                }
                let node = e[side as usize];
                if matches!(node, Node::Crossing(_)) {
                    continue;
                }
                // Walk the strand to the other real endpoint.
                let mut cur = EdgeEnd { edge: i as u32, side: 1 - side };
                visited[i] = true;
                loop {
                    let n = self.end_node(cur);
                    match n {
                        Node::Crossing(_) => {
                            let rot = &self.rotation[&n];
                            let pos = rot.iter().position(|x| *x == cur).unwrap();
                            let opp = rot[(pos + 2) % 4];
                            visited[opp.edge as usize] = true;
                            cur = self.other_end(opp);
                        }
                        _ => {
                            out.add_edge(node, n);
                            break;
                        }
                    }
                }
            }
        }
        // Strands with no real endpoint are closed loops.
        for (i, _) in self.edges.iter().enumerate() {
            if !visited[i] {
                // Mark the whole closed strand visited and add one loop.
                let mut cur = EdgeEnd { edge: i as u32, side: 1 };
                visited[i] = true;
                loop {
                    let n = self.end_node(cur);
                    let rot = &self.rotation[&n];
                    let pos = rot.iter().position(|x| *x == cur).unwrap();
                    let opp = rot[(pos + 2) % 4];
                    if visited[opp.edge as usize] && opp.edge == i as u32 {
                        break;
                    }
                    visited[opp.edge as usize] = true;
                    cur = self.other_end(opp);
                    if cur.edge == i as u32 {
                        break;
                    }
                }
                out.free_loops += 1;
            }
        }
        // Rebuild internal rotations from old edge identities: map each old
        // end at an internal vertex to the new edge touching that vertex in
        // the same strand.
        let mut new_ends_at: BTreeMap<Node, Vec<EdgeEnd>> = BTreeMap::new();
        for (i, e) in out.edges.iter().enumerate() {
            for side in 0..2u8 {
                new_ends_at
                    .entry(e[side as usize])
                    .or_default()
                    .push(EdgeEnd { edge: i as u32, side });
            }
        }
        for (i, _) in self.internal.iter().enumerate() {
            let node = Node::Internal(i as u32);
            let old_rot = &self.rotation[&node];
            let mut avail = new_ends_at.remove(&node).unwrap_or_default();
            let mut new_rot = Vec::new();
            for old_end in old_rot {
                // The strand from this end reaches a real node; find a new
                // edge at `node` whose other endpoint matches it.
                let far = self.strand_far_node(*old_end);
                let pos = avail
                    .iter()
                    .position(|ne| out.end_node(out.other_end(*ne)) == far)
                    .expect("strand endpoint must appear among new edges");
                new_rot.push(avail.remove(pos));
            }
            out.set_rotation(node, new_rot);
        }
        out
    }

    /// The real node at the far end of the strand containing `end`.
    pub fn strand_far_node(&self, start: EdgeEnd) -> Node {
        let mut end = start;
        loop {
            let node = self.end_node(end);
            match node {
                Node::Boundary(_) | Node::Internal(_) => return node,
                Node::Crossing(_) => {
                    let rot = &self.rotation[&node];
                    let pos = rot.iter().position(|e| *e == end).unwrap();
                    let opp = rot[(pos + 2) % 4];
                    end = self.other_end(opp);
                }
            }
        }
    }

    /// Superposition: disjoint union over the same signature, connected only
    /// at boundary vertices.
    pub fn superpose(&self, other: &TensorDiagram) -> TensorDiagram {
        assert_eq!(self.signature, other.signature);
        let mut out = self.clone();
        let ioff = self.internal.len() as u32;
        let coff = self.num_crossings;
        let eoff = self.edges.len() as u32;
        let shift_node = |n: Node| match n {
            Node::Boundary(v) => Node::Boundary(v),
            Node::Internal(i) => Node::Internal(i + ioff),
            Node::Crossing(c) => Node::Crossing(c + coff),
        };
        out.internal.extend(other.internal.iter().copied());
        out.num_crossings += other.num_crossings;
        for e in &other.edges {
            out.edges.push([shift_node(e[0]), shift_node(e[1])]);
        }
        for (n, rot) in &other.rotation {
            out.rotation.insert(
                shift_node(*n),
                rot.iter().map(|e| EdgeEnd { edge: e.edge + eoff, side: e.side }).collect(),
            );
        }
        out.free_loops += other.free_loops;
        // Boundary rotations of a superposition depend on a drawing; drop them.
        out.boundary_rotation = None;
        out
    }
}

fn same_set(a: &[EdgeEnd], b: &[EdgeEnd]) -> bool {
    let mut a: Vec<_> = a.to_vec();
    let mut b: Vec<_> = b.to_vec();
    a.sort();
    b.sort();
    a == b
}

// ---------------------------------------------------------------------------
// Webs

/// A tensor diagram with no crossings whose rotation system is certified to
/// be a planar disk embedding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Web {
    base: TensorDiagram,
}

impl Web {
    /// Validate and wrap. Face-traces the rotation system with a virtual
    /// boundary cycle and checks Euler's relation for the disk.
    pub fn new(base: TensorDiagram) -> Result<Web, DiagramError> {
        if base.has_crossings() {
            return Err(DiagramError::HasCrossings);
        }
        let violations = base.validate();
        if !violations.is_empty() {
            return Err(DiagramError::Invalid(violations));
        }
        if base.boundary_rotation.is_none() && !base.signature.is_empty() {
            return Err(DiagramError::MissingBoundaryRotation);
        }
        let euler = euler_characteristic(&base);
        if euler != 2 {
            return Err(DiagramError::NotPlanar(euler));
        }
        Ok(Web { base })
    }

    pub fn diagram(&self) -> &TensorDiagram {
        &self.base
    }

    pub fn into_diagram(self) -> TensorDiagram {
        self.base
    }

    /// No multiple edges with an internal endpoint, no simple 4-cycles with
    /// all four vertices internal, and no closed-loop components. Multiple
    /// edges between two boundary vertices are allowed: they occur in basis
    /// webs such as powers of a single pairing.
    pub fn non_elliptic(&self) -> bool {
        let d = &self.base;
        if d.free_loops > 0 {
            return false;
        }
        // Multiedges with an internal endpoint.
        let mut seen: BTreeMap<(Node, Node), u32> = BTreeMap::new();
        for e in &d.edges {
            let mut key = [e[0], e[1]];
            key.sort();
            *seen.entry((key[0], key[1])).or_insert(0) += 1;
        }
        for ((a, b), count) in &seen {
            if *count > 1 && (matches!(a, Node::Internal(_)) || matches!(b, Node::Internal(_))) {
                return false;
            }
        }
        // Components with no boundary vertex (closed components).
        if has_closed_component(d) {
            return false;
        }
        // All-internal simple 4-cycles: two same-color internal vertices
        // with two or more distinct common internal neighbors.
        let n = d.internal.len();
        let mut nbrs: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); n];
        for e in &d.edges {
            if let [Node::Internal(i), Node::Internal(j)] = e {
                nbrs[*i as usize].insert(*j);
                nbrs[*j as usize].insert(*i);
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if d.internal[i] == d.internal[j] {
                    let common = nbrs[i].intersection(&nbrs[j]).count();
                    if common >= 2 {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Canonical byte code: equal iff there is an isomorphism fixing every
    /// boundary vertex and preserving colors and all rotations.
    pub fn canonical_code(&self) -> Vec<u8> {
        canonical_code_impl(&self.base)
    }
}

/// V - E + F with the boundary cycle added as real edges, counting the
/// outer face; equals 2 exactly for disk embeddings.
fn euler_characteristic(d: &TensorDiagram) -> i64 {
    // Darts: (edge end considered as arriving at its node). The face
    // permutation walks: cross the edge, then take the next end clockwise
    // at the head.
    let n = d.signature.len() as i64;
    let v = n + d.internal.len() as i64;
    let e = d.edges.len() as i64 + if n > 0 { n } else { 0 };
    if d.edges.is_empty() && d.internal.is_empty() {
        // Just the boundary cycle (or a fully closed, empty diagram).
        return if n > 0 { v - e + 2 } else { 2 };
    }
    // Build full rotations: boundary vertices get [arc to v+1] ++ real ends
    // ++ [arc to v-1]; the arcs are encoded as pseudo edge ends.
    #[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
    enum Dart {
        Real(EdgeEnd),       // this end, oriented toward the node it attaches to
        Arc(u32, bool),      // boundary arc at vertex v; true = the end pointing toward v+1
    }
    let mut rot: HashMap<Node, Vec<Dart>> = HashMap::new();
    for (node, ends) in &d.rotation {
        rot.insert(*node, ends.iter().map(|e| Dart::Real(*e)).collect());
    }
    if n > 0 {
        let br = d.boundary_rotation.as_ref();
        for v in 1..=d.signature.len() as u32 {
            let mut list = vec![Dart::Arc(v, true)];
            if let Some(br) = br {
                if let Some(ends) = br.get(&v) {
                    list.extend(ends.iter().map(|e| Dart::Real(*e)));
                }
            }
            list.push(Dart::Arc(v, false));
            rot.insert(Node::Boundary(v), list);
        }
    }
    let node_of = |dart: Dart| -> Node {
        match dart {
            Dart::Real(end) => d.end_node(end),
            Dart::Arc(v, _) => Node::Boundary(v),
        }
    };
    // The dart "leaves" its node; crossing the edge gives the twin dart at
    // the far node.
    let twin = |dart: Dart| -> Dart {
        match dart {
            Dart::Real(end) => Dart::Real(d.other_end(end)),
            Dart::Arc(v, true) => {
                let w = if v == d.signature.len() as u32 { 1 } else { v + 1 };
                Dart::Arc(w, false)
            }
            Dart::Arc(v, false) => {
                let w = if v == 1 { d.signature.len() as u32 } else { v - 1 };
                Dart::Arc(w, true)
            }
        }
    };
    let mut all_darts: Vec<Dart> = Vec::new();
    for list in rot.values() {
        all_darts.extend(list.iter().copied());
    }
    let next_in_face = |dart: Dart| -> Dart {
        let t = twin(dart);
        let node = node_of(t);
        let list = &rot[&node];
        let pos = list.iter().position(|x| *x == t).unwrap();
        list[(pos + 1) % list.len()]
    };
    let mut seen: std::collections::HashSet<u64> = std::collections::HashSet::new();
    let key = |d: &Dart| -> u64 {
        match d {
            Dart::Real(end) => (end.edge as u64) << 2 | end.side as u64,
            Dart::Arc(v, fw) => (1u64 << 40) | (*v as u64) << 2 | *fw as u64,
        }
    };
    let mut faces = 0i64;
    for &start in &all_darts {
        if seen.contains(&key(&start)) {
            continue;
        }
        faces += 1;
        let mut cur = start;
        loop {
            seen.insert(key(&cur));
            cur = next_in_face(cur);
            if cur == start {
                break;
            }
        }
    }
    // Free loops each add a sphere-like component; exclude them from the
    // Euler count (they are only transient).
    v - e + faces
}

fn has_closed_component(d: &TensorDiagram) -> bool {
    let n = d.internal.len();
    if n == 0 {
        return false;
    }
    let mut touched = vec![false; n];
    let mut queue = VecDeque::new();
    for e in &d.edges {
        if e.iter().any(|x| matches!(x, Node::Boundary(_))) {
            for x in e {
                if let Node::Internal(i) = x {
                    if !touched[*i as usize] {
                        touched[*i as usize] = true;
                        queue.push_back(*i);
                    }
                }
            }
        }
    }
    while let Some(i) = queue.pop_front() {
        for e in &d.edges {
            if e.contains(&Node::Internal(i)) {
                for x in e {
                    if let Node::Internal(j) = x {
                        if !touched[*j as usize] {
                            touched[*j as usize] = true;
                            queue.push_back(*j);
                        }
                    }
                }
            }
        }
    }
    touched.iter().any(|t| !t)
}

/// Canonical code by boundary-anchored traversal. Internal vertices are
/// renamed in first-visit order of a deterministic walk that respects
/// rotations, so the code is invariant under internal relabeling.
fn canonical_code_impl(d: &TensorDiagram) -> Vec<u8> {
    assert!(!d.has_crossings(), "canonical codes apply to crossing-free diagrams");
    let mut name: HashMap<u32, u32> = HashMap::new(); // internal index -> canonical name
    let mut order: Vec<u32> = Vec::new();
    let mut queue: VecDeque<u32> = VecDeque::new();
    let mut enqueue = |i: u32, name: &mut HashMap<u32, u32>, order: &mut Vec<u32>, queue: &mut VecDeque<u32>| {
        if !name.contains_key(&i) {
            let id = order.len() as u32;
            name.insert(i, id);
            order.push(i);
            queue.push_back(i);
        }
    };
    let empty = BTreeMap::new();
    let br = d.boundary_rotation.as_ref().unwrap_or(&empty);
    for v in 1..=d.signature.len() {
        if let Some(ends) = br.get(&(v as u32)) {
            for end in ends {
                if let Node::Internal(i) = d.end_node(d.other_end(*end)) {
                    enqueue(i, &mut name, &mut order, &mut queue);
                }
            }
        }
    }
    while let Some(i) = queue.pop_front() {
        let rot = &d.rotation[&Node::Internal(i)];
        for end in rot {
            if let Node::Internal(j) = d.end_node(d.other_end(*end)) {
                enqueue(j, &mut name, &mut order, &mut queue);
            }
        }
    }
    // Leftover components (no boundary attachment): name by minimizing over
    // start vertices. Rare; webs used as basis keys never have them.
    let mut rest: Vec<u32> = (0..d.internal.len() as u32).filter(|i| !name.contains_key(i)).collect();
    rest.sort();
    for i in rest {
        enqueue(i, &mut name, &mut order, &mut queue);
        while let Some(k) = queue.pop_front() {
            let rot = &d.rotation[&Node::Internal(k)];
            for end in rot {
                if let Node::Internal(j) = d.end_node(d.other_end(*end)) {
                    enqueue(j, &mut name, &mut order, &mut queue);
                }
            }
        }
    }
    let node_name = |n: Node| -> String {
        match n {
            Node::Boundary(v) => format!("b{v}"),
            Node::Internal(i) => format!("v{}", name[&i]),
            Node::Crossing(_) => unreachable!(),
        }
    };
    let mut code = format!("sig:{};loops:{};", d.signature, d.free_loops);
    for v in 1..=d.signature.len() as u32 {
        code.push_str(&format!("B{v}:"));
        if let Some(ends) = br.get(&v) {
            let names: Vec<String> = ends
                .iter()
                .map(|e| node_name(d.end_node(d.other_end(*e))))
                .collect();
            code.push_str(&names.join(","));
        }
        code.push(';');
    }
    for (new_id, old) in order.iter().enumerate() {
        let rot = &d.rotation[&Node::Internal(*old)];
        let names: Vec<String> = rot
            .iter()
            .map(|e| node_name(d.end_node(d.other_end(*e))))
            .collect();
        // Normalize the cyclic rotation to its lexicographically least shift.
        let best = (0..names.len())
            .map(|s| {
                let mut r = names.clone();
                r.rotate_left(s);
                r
            })
            .min()
            .unwrap();
        code.push_str(&format!(
            "v{}={}:{};",
            new_id,
            d.internal[*old as usize].letter(),
            best.join(",")
        ));
    }
    code.into_bytes()
}

// ---------------------------------------------------------------------------
// Unclasping

/// Abstract graph obtained by splitting each boundary vertex into one copy
/// per incident edge.
#[derive(Debug, Clone)]
pub struct Unclasped {
    pub vertices: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Unclasped {
    pub fn is_forest(&self) -> bool {
        // Union-find cycle check.
        let mut parent: Vec<usize> = (0..self.vertices).collect();
        fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (a, b) in &self.edges {
            let ra = find(&mut parent, *a);
            let rb = find(&mut parent, *b);
            if ra == rb {
                return false;
            }
            parent[ra] = rb;
        }
        true
    }

    pub fn is_tree(&self) -> bool {
        self.is_forest() && self.vertices > 0 && self.edges.len() + 1 == self.vertices
    }
}

/// Split boundary vertices per incident edge. Requires a crossing-free
/// diagram.
pub fn unclasp(d: &TensorDiagram) -> Result<Unclasped, DiagramError> {
    if d.has_crossings() {
        return Err(DiagramError::HasCrossings);
    }
    let internal = d.internal.len();
    let mut vertices = internal;
    let mut edges = Vec::new();
    for e in &d.edges {
        let mut ids = [0usize; 2];
        for (k, node) in e.iter().enumerate() {
            ids[k] = match node {
                Node::Internal(i) => *i as usize,
                Node::Boundary(_) => {
                    let id = vertices;
                    vertices += 1;
                    id
                }
                Node::Crossing(_) => unreachable!(),
            };
        }
        edges.push((ids[0], ids[1]));
    }
    // Degree-0 boundary vertices contribute no copies.
    Ok(Unclasped { vertices, edges })
}

/// Predicate pair from the spec: unclasping acyclic / acyclic and connected.
pub fn is_forest_diagram(d: &TensorDiagram) -> Result<bool, DiagramError> {
    Ok(unclasp(d)?.is_forest())
}

pub fn is_tree_diagram(d: &TensorDiagram) -> Result<bool, DiagramError> {
    let u = unclasp(d)?;
    Ok(u.is_forest() && {
        // Connectivity over the unclasped graph.
        if u.vertices == 0 {
            false
        } else {
            u.edges.len() + 1 == u.vertices
        }
    })
}

// ---------------------------------------------------------------------------
// Boundary transforms

/// Replace boundary vertex `p` by two adjacent vertices of the opposite
/// color; every edge at `p` gains a fork vertex of `p`'s color.
///
/// New vertex labels: `p` and `p+1` take the two fresh vertices; boundary
/// labels above `p` shift up by one. Algebraically this realizes the cross
/// product substitution at `p`.
pub fn add_fork(d: &TensorDiagram, p: u32) -> TensorDiagram {
    let n = d.signature.len();
    assert!((1..=n).contains(&p));
    let color = d.signature.color(p);
    let mut sig = d.signature.0.clone();
    sig[(p - 1) as usize] = color.opposite();
    sig.insert(p as usize, color.opposite());
    let mut out = TensorDiagram::new(Signature(sig));
    out.internal = d.internal.clone();
    out.num_crossings = d.num_crossings;
    out.free_loops = d.free_loops;
    let shift = |v: u32| if v > p { v + 1 } else { v };
    let map_node = |node: Node| match node {
        Node::Boundary(v) => Node::Boundary(shift(v)),
        other => other,
    };
    // Copy edges; edge indices are preserved, so rotations carry over.
    for e in &d.edges {
        out.edges.push([map_node(e[0]), map_node(e[1])]);
    }
    for (node, rot) in &d.rotation {
        out.rotation.insert(map_node(*node), rot.clone());
    }
    let mut boundary_rotation: Option<BTreeMap<u32, Vec<EdgeEnd>>> =
        d.boundary_rotation.as_ref().map(|br| {
            br.iter()
                .filter(|(v, _)| **v != p)
                .map(|(v, rot)| (shift(*v), rot.clone()))
                .collect()
        });
    // Edges formerly at p, in boundary-rotation order when available.
    let old_ends: Vec<EdgeEnd> = match &d.boundary_rotation {
        Some(br) => br.get(&p).cloned().unwrap_or_default(),
        None => d.incident_ends(Node::Boundary(p)),
    };
    let pa = Node::Boundary(p);
    let pb = Node::Boundary(p + 1);
    let mut pa_rot = Vec::new();
    let mut pb_rot = Vec::new();
    for end in &old_ends {
        let fork = out.add_internal(color);
        // The old edge end now attaches to the fork vertex.
        out.edges[end.edge as usize][end.side as usize] = fork;
        let ea = out.add_edge(fork, pa);
        let eb = out.add_edge(fork, pb);
        let fork_rot = vec![
            *end,
            EdgeEnd { edge: ea, side: 0 },
            EdgeEnd { edge: eb, side: 0 },
        ];
        out.set_rotation(fork, fork_rot);
        pa_rot.push(EdgeEnd { edge: ea, side: 1 });
        pb_rot.push(EdgeEnd { edge: eb, side: 1 });
    }
    // Fork vertices stack inward: pa sees them first-to-last, pb reversed.
    pb_rot.reverse();
    if let Some(br) = &mut boundary_rotation {
        br.insert(p, pa_rot);
        br.insert(p + 1, pb_rot);
    }
    out.boundary_rotation = boundary_rotation;
    out
}

/// Signature with vertex `p` removed.
pub fn drop_vertex_signature(sig: &Signature, p: u32) -> Signature {
    let mut s = sig.0.clone();
    s.remove((p - 1) as usize);
    Signature(s)
}

/// Lift a diagram over `σ \ p` into `σ` by inserting `p` as an isolated
/// vertex (labels at and above `p` shift up by one).
pub fn lift_diagram(d: &TensorDiagram, sig: &Signature, p: u32) -> TensorDiagram {
    let mut out = d.clone();
    out.signature = sig.clone();
    let shift = |v: u32| if v >= p { v + 1 } else { v };
    for e in &mut out.edges {
        for node in e {
            if let Node::Boundary(v) = node {
                *node = Node::Boundary(shift(*v));
            }
        }
    }
    if let Some(br) = out.boundary_rotation.take() {
        out.boundary_rotation = Some(br.into_iter().map(|(v, r)| (shift(v), r)).collect());
    }
    out
}

/// Drop an isolated boundary vertex `p`, returning the diagram over `σ \ p`.
pub fn drop_isolated(d: &TensorDiagram, p: u32) -> Result<TensorDiagram, DiagramError> {
    if d.degree(Node::Boundary(p)) != 0 {
        return Err(DiagramError::DegreeNonZero(p));
    }
    let mut out = d.clone();
    out.signature = drop_vertex_signature(&d.signature, p);
    let shift = |v: u32| if v > p { v - 1 } else { v };
    for e in &mut out.edges {
        for node in e {
            if let Node::Boundary(v) = node {
                *node = Node::Boundary(shift(*v));
            }
        }
    }
    if let Some(br) = out.boundary_rotation.take() {
        out.boundary_rotation = Some(
            br.into_iter()
                .filter(|(v, _)| *v != p)
                .map(|(v, r)| (shift(v), r))
                .collect(),
        );
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// JSON format

#[derive(Serialize, Deserialize)]
struct InternalDto {
    id: String,
    color: String,
}

#[derive(Serialize, Deserialize)]
struct CrossingDto {
    id: String,
    pairs: [[String; 2]; 2],
}

#[derive(Serialize, Deserialize)]
struct EdgeDto {
    id: String,
    ends: [String; 2],
}

#[derive(Serialize, Deserialize)]
struct DiagramDto {
    signature: String,
    internal: Vec<InternalDto>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    crossings: Vec<CrossingDto>,
    edges: Vec<EdgeDto>,
    rotation: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    boundary_rotation: Option<BTreeMap<String, Vec<String>>>,
}

impl TensorDiagram {
    pub fn to_json(&self) -> serde_json::Value {
        let internal_id = |i: u32| format!("i{}", i + 1);
        let crossing_id = |c: u32| format!("c{}", c + 1);
        let edge_id = |e: u32| format!("e{}", e + 1);
        let node_id = |n: Node| match n {
            Node::Boundary(v) => v.to_string(),
            Node::Internal(i) => internal_id(i),
            Node::Crossing(c) => crossing_id(c),
        };
        let rot_ids = |ends: &[EdgeEnd]| -> Vec<String> {
            ends.iter().map(|e| edge_id(e.edge)).collect()
        };
        let dto = DiagramDto {
            signature: self.signature.to_string(),
            internal: (0..self.internal.len() as u32)
                .map(|i| InternalDto {
                    id: internal_id(i),
                    color: self.internal[i as usize].letter().to_string(),
                })
                .collect(),
            crossings: (0..self.num_crossings)
                .map(|c| {
                    let rot = &self.rotation[&Node::Crossing(c)];
                    CrossingDto {
                        id: crossing_id(c),
                        pairs: [
                            [edge_id(rot[0].edge), edge_id(rot[2].edge)],
                            [edge_id(rot[1].edge), edge_id(rot[3].edge)],
                        ],
                    }
                })
                .collect(),
            edges: (0..self.edges.len() as u32)
                .map(|e| EdgeDto {
                    id: edge_id(e),
                    ends: [
                        node_id(self.edges[e as usize][0]),
                        node_id(self.edges[e as usize][1]),
                    ],
                })
                .collect(),
            rotation: self
                .rotation
                .iter()
                .map(|(n, ends)| (node_id(*n), rot_ids(ends)))
                .collect(),
            boundary_rotation: self.boundary_rotation.as_ref().map(|br| {
                br.iter().map(|(v, ends)| (v.to_string(), rot_ids(ends))).collect()
            }),
        };
        serde_json::to_value(dto).expect("diagram serialization cannot fail")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<TensorDiagram, DiagramError> {
        let dto: DiagramDto =
            serde_json::from_value(value.clone()).map_err(|e| DiagramError::Json(e.to_string()))?;
        let signature =
            Signature::parse(&dto.signature).ok_or_else(|| DiagramError::Json("bad signature".into()))?;
        let mut d = TensorDiagram::new(signature);
        let mut internal_ix: HashMap<String, u32> = HashMap::new();
        for (i, it) in dto.internal.iter().enumerate() {
            let color = it
                .color
                .chars()
                .next()
                .and_then(Color::from_letter)
                .ok_or_else(|| DiagramError::Json(format!("bad color for {}", it.id)))?;
            d.internal.push(color);
            internal_ix.insert(it.id.clone(), i as u32);
        }
        let mut crossing_ix: HashMap<String, u32> = HashMap::new();
        for (c, it) in dto.crossings.iter().enumerate() {
            crossing_ix.insert(it.id.clone(), c as u32);
        }
        d.num_crossings = dto.crossings.len() as u32;
        let mut edge_ix: HashMap<String, u32> = HashMap::new();
        let parse_node = |s: &str,
                          internal_ix: &HashMap<String, u32>,
                          crossing_ix: &HashMap<String, u32>|
         -> Result<Node, DiagramError> {
            if let Ok(v) = s.parse::<u32>() {
                return Ok(Node::Boundary(v));
            }
            if let Some(i) = internal_ix.get(s) {
                return Ok(Node::Internal(*i));
            }
            if let Some(c) = crossing_ix.get(s) {
                return Ok(Node::Crossing(*c));
            }
            Err(DiagramError::Json(format!("unknown node id `{s}`")))
        };
        for (e, it) in dto.edges.iter().enumerate() {
            let a = parse_node(&it.ends[0], &internal_ix, &crossing_ix)?;
            let b = parse_node(&it.ends[1], &internal_ix, &crossing_ix)?;
            d.edges.push([a, b]);
            edge_ix.insert(it.id.clone(), e as u32);
        }
        // Rebuild rotations: edge ids may repeat for self-incident edges;
        // assign ends in order of appearance.
        let resolve_rotation = |node: Node, ids: &[String]| -> Result<Vec<EdgeEnd>, DiagramError> {
            let mut used: BTreeSet<EdgeEnd> = BTreeSet::new();
            let mut out = Vec::new();
            for id in ids {
                let e = *edge_ix
                    .get(id)
                    .ok_or_else(|| DiagramError::Json(format!("unknown edge id `{id}`")))?;
                let mut found = None;
                for side in 0..2u8 {
                    let end = EdgeEnd { edge: e, side };
                    if d.end_node(end) == node && !used.contains(&end) {
                        found = Some(end);
                        break;
                    }
                }
                let end = found.ok_or_else(|| {
                    DiagramError::Json(format!("edge `{id}` not incident to rotation vertex"))
                })?;
                used.insert(end);
                out.push(end);
            }
            Ok(out)
        };
        for (key, ids) in &dto.rotation {
            let node = parse_node(key, &internal_ix, &crossing_ix)?;
            let rot = resolve_rotation(node, ids)?;
            d.rotation.insert(node, rot);
        }
        // Validate crossing pairs against rotation positions.
        for it in &dto.crossings {
            let c = crossing_ix[&it.id];
            let rot = d
                .rotation
                .get(&Node::Crossing(c))
                .ok_or_else(|| DiagramError::Json(format!("crossing {} lacks a rotation", it.id)))?;
            if rot.len() != 4 {
                return Err(DiagramError::Json(format!("crossing {} rotation arity", it.id)));
            }
            let opposite_ok = |x: &str, y: &str, i: usize| -> bool {
                edge_ix.get(x) == Some(&rot[i].edge) && edge_ix.get(y) == Some(&rot[(i + 2) % 4].edge)
            };
            let p = &it.pairs;
            let ok = (opposite_ok(&p[0][0], &p[0][1], 0) || opposite_ok(&p[0][1], &p[0][0], 0))
                && (opposite_ok(&p[1][0], &p[1][1], 1) || opposite_ok(&p[1][1], &p[1][0], 1));
            let ok_swapped = (opposite_ok(&p[1][0], &p[1][1], 0) || opposite_ok(&p[1][1], &p[1][0], 0))
                && (opposite_ok(&p[0][0], &p[0][1], 1) || opposite_ok(&p[0][1], &p[0][0], 1));
            if !(ok || ok_swapped) {
                return Err(DiagramError::Json(format!(
                    "crossing {}: pairs do not match opposite rotation positions",
                    it.id
                )));
            }
        }
        if let Some(br) = &dto.boundary_rotation {
            let mut map = BTreeMap::new();
            for (key, ids) in br {
                let v: u32 = key
                    .parse()
                    .map_err(|_| DiagramError::Json(format!("bad boundary key `{key}`")))?;
                let rot = resolve_rotation(Node::Boundary(v), ids)?;
                map.insert(v, rot);
            }
            d.boundary_rotation = Some(map);
        }
        Ok(d)
    }
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    /// Tripod: white internal vertex joined to black boundary 1, 2, 3.
    pub fn tripod(n: u32, legs: [u32; 3]) -> TensorDiagram {
        let sig = Signature(vec![Color::Black; n as usize]);
        let mut d = TensorDiagram::new(sig);
        let w = d.add_internal(Color::White);
        let e0 = d.add_edge(w, Node::Boundary(legs[0]));
        let e1 = d.add_edge(w, Node::Boundary(legs[1]));
        let e2 = d.add_edge(w, Node::Boundary(legs[2]));
        d.set_rotation(
            w,
            vec![
                EdgeEnd { edge: e0, side: 0 },
                EdgeEnd { edge: e1, side: 0 },
                EdgeEnd { edge: e2, side: 0 },
            ],
        );
        let mut br = BTreeMap::new();
        for (v, e) in legs.iter().zip([e0, e1, e2]) {
            br.insert(*v, vec![EdgeEnd { edge: e, side: 1 }]);
        }
        for v in 1..=n {
            br.entry(v).or_default();
        }
        d.boundary_rotation = Some(br);
        d
    }

    #[test]
    fn tripod_validates() {
        let d = tripod(3, [1, 2, 3]);
        assert!(d.validate().is_empty());
        assert_eq!(d.multidegree(), Multidegree(vec![1, 1, 1]));
        let w = Web::new(d).unwrap();
        assert!(w.non_elliptic());
    }

    #[test]
    fn degree_two_internal_vertex_flagged() {
        let mut d = TensorDiagram::new(Signature::parse("bb").unwrap());
        let w = d.add_internal(Color::White);
        let e0 = d.add_edge(w, Node::Boundary(1));
        let e1 = d.add_edge(w, Node::Boundary(2));
        d.set_rotation(w, vec![EdgeEnd { edge: e0, side: 0 }, EdgeEnd { edge: e1, side: 0 }]);
        let violations = d.validate();
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::InternalNotTrivalent(_))));
    }

    #[test]
    fn canonical_code_ignores_internal_labels() {
        // Two tripods with internal vertices added in different orders,
        // attached the same way.
        let a = tripod(4, [1, 2, 3]);
        let mut b = TensorDiagram::new(Signature(vec![Color::Black; 4]));
        let dummy = b.add_internal(Color::Black); // will be removed logically
        let _ = dummy;
        b.internal.clear();
        let w = b.add_internal(Color::White);
        let e0 = b.add_edge(w, Node::Boundary(1));
        let e1 = b.add_edge(w, Node::Boundary(2));
        let e2 = b.add_edge(w, Node::Boundary(3));
        b.set_rotation(
            w,
            vec![
                EdgeEnd { edge: e0, side: 0 },
                EdgeEnd { edge: e1, side: 0 },
                EdgeEnd { edge: e2, side: 0 },
            ],
        );
        let mut br = BTreeMap::new();
        br.insert(1, vec![EdgeEnd { edge: e0, side: 1 }]);
        br.insert(2, vec![EdgeEnd { edge: e1, side: 1 }]);
        br.insert(3, vec![EdgeEnd { edge: e2, side: 1 }]);
        br.insert(4, vec![]);
        b.boundary_rotation = Some(br);
        let wa = Web::new(a).unwrap();
        let wb = Web::new(b).unwrap();
        assert_eq!(wa.canonical_code(), wb.canonical_code());
    }

    #[test]
    fn canonical_code_distinguishes_legs() {
        let a = Web::new(tripod(4, [1, 2, 3])).unwrap();
        let b = Web::new(tripod(4, [1, 2, 4])).unwrap();
        assert_ne!(a.canonical_code(), b.canonical_code());
    }

    #[test]
    fn unclasp_tripod_is_tree() {
        let d = tripod(3, [1, 2, 3]);
        assert!(is_tree_diagram(&d).unwrap());
        let two = d.superpose(&tripod(3, [1, 2, 3]));
        assert!(is_forest_diagram(&two).unwrap());
        assert!(!is_tree_diagram(&two).unwrap());
    }

    #[test]
    fn drop_and_lift_roundtrip() {
        let d = tripod(4, [1, 2, 3]);
        let dropped = drop_isolated(&d, 4).unwrap();
        assert_eq!(dropped.signature.len(), 3);
        let lifted = lift_diagram(&dropped, &d.signature, 4);
        assert_eq!(lifted.multidegree(), d.multidegree());
        assert!(drop_isolated(&d, 1).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let d = tripod(4, [1, 2, 3]);
        let json = d.to_json();
        let back = TensorDiagram::from_json(&json).unwrap();
        assert_eq!(back.to_json(), json);
        assert!(back.validate().is_empty());
    }

    #[test]
    fn fork_expands_signature() {
        let d = tripod(3, [1, 2, 3]);
        let forked = add_fork(&d, 3);
        assert_eq!(forked.signature.to_string(), "bbww");
        assert!(forked.validate().is_empty());
        assert_eq!(forked.multidegree().0, vec![1, 1, 1, 1]);
        // Forking a degree-0 vertex adds two bare boundary vertices.
        let d = tripod(4, [1, 2, 3]);
        let forked = add_fork(&d, 4);
        assert_eq!(forked.signature.to_string(), "bbbww");
        assert_eq!(forked.multidegree().0, vec![1, 1, 1, 0, 0]);
    }
}
