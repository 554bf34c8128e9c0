//! Bounded-degree graph families and their finite truncations.
//!
//! Vertices are dense indices. The index of a vertex depends only on its
//! position in the untruncated graph, never on the truncation size: lattices
//! are ordered by sup-norm shell and then lexicographically, the half-line by
//! position, trees breadth-first. Growing a truncation therefore appends
//! vertices and keeps every existing index (and every Poisson stream keyed on
//! it) in place. Vertex 0 is always the designated origin.

use alloc::collections::VecDeque;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("adjacency is not symmetric: {from} lists {to} but not vice versa")]
    NonSymmetric { from: usize, to: usize },
    #[error("vertex {0} is adjacent to itself")]
    SelfLoop(usize),
    #[error("vertex {vertex} lists neighbor {neighbor} more than once")]
    DuplicateEdge { vertex: usize, neighbor: usize },
    #[error("vertex {vertex} has degree {degree}, above the declared bound {bound}")]
    DegreeBound { vertex: usize, degree: usize, bound: usize },
    #[error("neighbor {neighbor} of vertex {vertex} is not a vertex")]
    DanglingNeighbor { vertex: usize, neighbor: usize },
    #[error("graph is not connected (vertex {0} unreachable from 0)")]
    Disconnected(usize),
    #[error("graph has no vertices")]
    Empty,
    #[error("unknown vertex {0}")]
    UnknownVertex(usize),
    #[error("invalid truncation: {0}")]
    InvalidTruncation(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// An untruncated graph family.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Family {
    /// The hypercubic lattice Z^d.
    Lattice { dim: u32 },
    /// The half-line N = {0, 1, 2, ...}.
    HalfLine,
    /// The infinite tree in which every vertex has `degree` neighbors.
    RegularTree { degree: u32 },
    /// A finite graph given by adjacency lists.
    Explicit { adjacency: Vec<Vec<usize>>, degree_bound: Option<usize> },
}

/// A family plus the window it is truncated to: box radius for lattices
/// and the half-line, depth for trees, nothing for explicit graphs.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GraphSpec {
    pub family: Family,
    pub truncation: Option<u32>,
}

impl GraphSpec {
    pub fn lattice(dim: u32, radius: u32) -> Self {
        Self { family: Family::Lattice { dim }, truncation: Some(radius) }
    }

    pub fn half_line(length: u32) -> Self {
        Self { family: Family::HalfLine, truncation: Some(length) }
    }

    pub fn regular_tree(degree: u32, depth: u32) -> Self {
        Self { family: Family::RegularTree { degree }, truncation: Some(depth) }
    }

    pub fn explicit(adjacency: Vec<Vec<usize>>) -> Self {
        Self { family: Family::Explicit { adjacency, degree_bound: None }, truncation: None }
    }

    /// Same family, different truncation.
    pub fn with_truncation(&self, truncation: u32) -> Self {
        Self { family: self.family.clone(), truncation: Some(truncation) }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Layout {
    Lattice { dim: usize, radius: i64 },
    HalfLine,
    Tree,
    Explicit,
}

/// A finite, connected, symmetric graph in compressed adjacency form.
///
/// Directed edge `e` runs from the vertex whose adjacency range contains `e`
/// to `targets[e]`; `reverse[e]` is the id of the opposite edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    layout: Layout,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    reverse: Vec<u32>,
    degree_bound: usize,
    boundary: Vec<usize>,
    /// Per-vertex coordinates: `coord_dim` integers each (lattice position,
    /// half-line position, or tree depth).
    coords: Vec<i64>,
    coord_dim: usize,
}

pub fn build_graph(spec: &GraphSpec) -> Result<Graph, GraphError> {
    match (&spec.family, spec.truncation) {
        (Family::Lattice { dim }, Some(radius)) => {
            if *dim == 0 {
                return Err(GraphError::InvalidTruncation("lattice dimension must be positive".into()));
            }
            Ok(build_lattice(*dim as usize, radius as i64))
        }
        (Family::HalfLine, Some(length)) => Ok(build_half_line(length as usize)),
        (Family::RegularTree { degree }, Some(depth)) => {
            if *degree < 2 {
                return Err(GraphError::InvalidTruncation("tree degree must be at least 2".into()));
            }
            Ok(build_tree(*degree as usize, depth as usize))
        }
        (Family::Explicit { adjacency, degree_bound }, None) => {
            build_explicit(adjacency, *degree_bound)
        }
        (Family::Explicit { .. }, Some(_)) => Err(GraphError::InvalidTruncation(
            "explicit graphs take no truncation".into(),
        )),
        (_, None) => Err(GraphError::InvalidTruncation(
            "infinite families need a truncation".into(),
        )),
    }
}

fn shell_cmp(a: &[i64], b: &[i64]) -> Ordering {
    let na = a.iter().map(|v| v.abs()).max().unwrap_or(0);
    let nb = b.iter().map(|v| v.abs()).max().unwrap_or(0);
    na.cmp(&nb).then_with(|| a.cmp(b))
}

fn build_lattice(dim: usize, radius: i64) -> Graph {
    let side = (2 * radius + 1) as usize;
    let count = side.pow(dim as u32);
    let mut coords = Vec::with_capacity(count * dim);
    let mut point = vec![-radius; dim];
    for _ in 0..count {
        coords.extend_from_slice(&point);
        for slot in point.iter_mut().rev() {
            if *slot < radius {
                *slot += 1;
                break;
            }
            *slot = -radius;
        }
    }
    let mut order: Vec<usize> = (0..count).collect();
    order.sort_by(|&i, &j| shell_cmp(&coords[i * dim..(i + 1) * dim], &coords[j * dim..(j + 1) * dim]));
    let mut sorted = Vec::with_capacity(coords.len());
    for &i in &order {
        sorted.extend_from_slice(&coords[i * dim..(i + 1) * dim]);
    }
    let coords = sorted;

    let lookup = |p: &[i64]| -> Option<usize> {
        let (mut lo, mut hi) = (0usize, count);
        while lo < hi {
            let mid = (lo + hi) / 2;
            match shell_cmp(&coords[mid * dim..(mid + 1) * dim], p) {
                Ordering::Less => lo = mid + 1,
                Ordering::Greater => hi = mid,
                Ordering::Equal => return Some(mid),
            }
        }
        None
    };

    let mut adjacency = vec![Vec::new(); count];
    let mut boundary = Vec::new();
    let mut probe = vec![0i64; dim];
    for v in 0..count {
        let here = &coords[v * dim..(v + 1) * dim];
        if here.iter().any(|c| c.abs() == radius) {
            boundary.push(v);
        }
        for axis in 0..dim {
            for step in [-1i64, 1] {
                probe.copy_from_slice(here);
                probe[axis] += step;
                if let Some(w) = lookup(&probe) {
                    adjacency[v].push(w);
                }
            }
        }
    }
    let mut g = from_adjacency(&adjacency, 2 * dim);
    g.layout = Layout::Lattice { dim, radius };
    g.boundary = boundary;
    g.coords = coords;
    g.coord_dim = dim;
    g
}

fn build_half_line(length: usize) -> Graph {
    let adjacency: Vec<Vec<usize>> = (0..=length)
        .map(|v| {
            let mut n = Vec::new();
            if v > 0 {
                n.push(v - 1);
            }
            if v < length {
                n.push(v + 1);
            }
            n
        })
        .collect();
    let mut g = from_adjacency(&adjacency, 2);
    g.layout = Layout::HalfLine;
    g.boundary = vec![length];
    g.coords = (0..=length as i64).collect();
    g.coord_dim = 1;
    g
}

fn build_tree(degree: usize, depth: usize) -> Graph {
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new()];
    let mut depths = vec![0i64];
    let mut level = vec![0usize];
    for d in 0..depth {
        let mut next = Vec::new();
        for &parent in &level {
            let children = if d == 0 { degree } else { degree - 1 };
            for _ in 0..children {
                let child = adjacency.len();
                adjacency.push(vec![parent]);
                adjacency[parent].push(child);
                depths.push(d as i64 + 1);
                next.push(child);
            }
        }
        level = next;
    }
    let mut g = from_adjacency(&adjacency, degree);
    g.layout = Layout::Tree;
    g.boundary = level;
    g.coords = depths;
    g.coord_dim = 1;
    g
}

fn build_explicit(adjacency: &[Vec<usize>], declared: Option<usize>) -> Result<Graph, GraphError> {
    let n = adjacency.len();
    if n == 0 {
        return Err(GraphError::Empty);
    }
    for (v, list) in adjacency.iter().enumerate() {
        for (k, &w) in list.iter().enumerate() {
            if w >= n {
                return Err(GraphError::DanglingNeighbor { vertex: v, neighbor: w });
            }
            if w == v {
                return Err(GraphError::SelfLoop(v));
            }
            if list[..k].contains(&w) {
                return Err(GraphError::DuplicateEdge { vertex: v, neighbor: w });
            }
            if !adjacency[w].contains(&v) {
                return Err(GraphError::NonSymmetric { from: v, to: w });
            }
        }
    }
    let max_degree = adjacency.iter().map(Vec::len).max().unwrap_or(0);
    let bound = declared.unwrap_or(max_degree);
    if let Some((v, list)) = adjacency.iter().enumerate().find(|(_, l)| l.len() > bound) {
        return Err(GraphError::DegreeBound { vertex: v, degree: list.len(), bound });
    }
    let mut g = from_adjacency(adjacency, bound);
    g.layout = Layout::Explicit;
    if let Some(unreached) = g.first_unreachable() {
        return Err(GraphError::Disconnected(unreached));
    }
    Ok(g)
}

fn from_adjacency(adjacency: &[Vec<usize>], degree_bound: usize) -> Graph {
    let mut offsets = Vec::with_capacity(adjacency.len() + 1);
    let mut targets = Vec::new();
    offsets.push(0);
    for list in adjacency {
        targets.extend(list.iter().map(|&w| w as u32));
        offsets.push(targets.len());
    }
    let mut reverse = vec![0u32; targets.len()];
    for v in 0..adjacency.len() {
        for e in offsets[v]..offsets[v + 1] {
            let w = targets[e] as usize;
            let back = (offsets[w]..offsets[w + 1])
                .find(|&f| targets[f] as usize == v)
                .expect("adjacency checked symmetric");
            reverse[e] = back as u32;
        }
    }
    Graph {
        layout: Layout::Explicit,
        offsets,
        targets,
        reverse,
        degree_bound,
        boundary: Vec::new(),
        coords: Vec::new(),
        coord_dim: 0,
    }
}

impl Graph {
    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn origin(&self) -> usize {
        0
    }

    pub fn degree_bound(&self) -> usize {
        self.degree_bound
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.targets[self.offsets[v]..self.offsets[v + 1]].iter().map(|&w| w as usize)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Ids of the directed edges leaving `v`.
    #[inline]
    pub fn out_edges(&self, v: usize) -> core::ops::Range<usize> {
        self.offsets[v]..self.offsets[v + 1]
    }

    #[inline]
    pub fn edge_target(&self, e: usize) -> usize {
        self.targets[e] as usize
    }

    /// Id of the edge pointing the other way.
    #[inline]
    pub fn reverse_edge(&self, e: usize) -> usize {
        self.reverse[e] as usize
    }

    /// Source vertex of a directed edge.
    pub fn edge_source(&self, e: usize) -> usize {
        self.edge_target(self.reverse_edge(e))
    }

    pub fn edge_between(&self, from: usize, to: usize) -> Option<usize> {
        self.out_edges(from).find(|&e| self.edge_target(e) == to)
    }

    /// Vertices that had neighbors removed by the truncation.
    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    /// Lattice dimension, or `None` for other families.
    pub fn lattice_dim(&self) -> Option<usize> {
        match self.layout {
            Layout::Lattice { dim, .. } => Some(dim),
            _ => None,
        }
    }

    /// Box radius of a lattice, length of a half-line.
    pub fn radius(&self) -> Option<usize> {
        match self.layout {
            Layout::Lattice { radius, .. } => Some(radius as usize),
            Layout::HalfLine => Some(self.len() - 1),
            _ => None,
        }
    }

    pub fn is_half_line(&self) -> bool {
        self.layout == Layout::HalfLine
    }

    /// Coordinates of `v`: lattice position, half-line position, or tree depth.
    pub fn coords(&self, v: usize) -> &[i64] {
        &self.coords[v * self.coord_dim..(v + 1) * self.coord_dim]
    }

    /// Vertex at a lattice or half-line position.
    pub fn vertex_at(&self, point: &[i64]) -> Option<usize> {
        match self.layout {
            Layout::Lattice { dim, radius } => {
                if point.len() != dim || point.iter().any(|c| c.abs() > radius) {
                    return None;
                }
                let (mut lo, mut hi) = (0usize, self.len());
                while lo < hi {
                    let mid = (lo + hi) / 2;
                    match shell_cmp(self.coords(mid), point) {
                        Ordering::Less => lo = mid + 1,
                        Ordering::Greater => hi = mid,
                        Ordering::Equal => return Some(mid),
                    }
                }
                None
            }
            Layout::HalfLine => match point {
                [x] if *x >= 0 && (*x as usize) < self.len() => Some(*x as usize),
                _ => None,
            },
            _ => None,
        }
    }

    /// The centered box of radius `r` (sup-norm ball for lattices, `[0, r]`
    /// on the half-line). Its vertices are exactly the indices `0..len`.
    pub fn box_len(&self, r: usize) -> Option<usize> {
        match self.layout {
            Layout::Lattice { dim, radius } if r as i64 <= radius => Some((2 * r + 1).pow(dim as u32)),
            Layout::HalfLine if r < self.len() => Some(r + 1),
            _ => None,
        }
    }

    fn check(&self, v: usize) -> Result<(), GraphError> {
        if v < self.len() {
            Ok(())
        } else {
            Err(GraphError::UnknownVertex(v))
        }
    }

    fn bfs(&self, from: usize, limit: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.len()];
        let mut queue = VecDeque::new();
        dist[from] = 0;
        queue.push_back(from);
        while let Some(v) = queue.pop_front() {
            if dist[v] == limit {
                continue;
            }
            for w in self.neighbors(v) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    fn first_unreachable(&self) -> Option<usize> {
        self.bfs(0, usize::MAX).iter().position(|&d| d == usize::MAX)
    }

    /// Graph distance; the truncated graph is connected so it is finite.
    pub fn distance(&self, x: usize, y: usize) -> Result<usize, GraphError> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.bfs(x, usize::MAX)[y])
    }

    /// All vertices within distance `r` of `x`, in index order.
    pub fn ball(&self, x: usize, r: usize) -> Result<Vec<usize>, GraphError> {
        self.check(x)?;
        Ok(self
            .bfs(x, r)
            .iter()
            .enumerate()
            .filter(|(_, &d)| d <= r)
            .map(|(v, _)| v)
            .collect())
    }

    /// Largest pairwise distance within `set` (0 for sets of size < 2).
    pub fn diameter_of(&self, set: &[usize]) -> Result<usize, GraphError> {
        let mut diam = 0;
        for &x in set {
            self.check(x)?;
            let dist = self.bfs(x, usize::MAX);
            for &y in set {
                self.check(y)?;
                diam = diam.max(dist[y]);
            }
        }
        Ok(diam)
    }
}

/// Box radius large enough that influence from outside the box is unlikely
/// to reach `delta` within `horizon`: the infected region is dominated by a
/// branching process of rate `degree_bound * lambda`.
///
/// `r = diam(delta) + ceil(safety * degree_bound * lambda * horizon)`.
pub fn truncation_radius(
    delta_diameter: usize,
    horizon: f64,
    lambda: f64,
    degree_bound: usize,
    safety: f64,
) -> usize {
    let spread = safety * degree_bound as f64 * lambda * horizon;
    // guard against 30.000000000000004-style round-up
    let spread = libm::ceil(spread - 1e-9).max(0.0);
    delta_diameter + spread as usize
}

/// Parses the adjacency-list text format: one `id: n1 n2 ...` line per
/// vertex, `#` starts a comment, ids must be exactly `0..n`.
pub fn parse_adjacency(text: &str) -> Result<Vec<Vec<usize>>, GraphError> {
    let mut rows: Vec<(usize, usize, Vec<usize>)> = Vec::new();
    for (number, raw) in text.lines().enumerate() {
        let line_no = number + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (head, tail) = line.split_once(':').ok_or_else(|| GraphError::Parse {
            line: line_no,
            message: "expected `id: neighbors`".into(),
        })?;
        let parse = |tok: &str| {
            tok.parse::<usize>().map_err(|_| GraphError::Parse {
                line: line_no,
                message: alloc::format!("not a vertex id: {tok:?}"),
            })
        };
        let id = parse(head.trim())?;
        let neighbors = tail.split_whitespace().map(parse).collect::<Result<Vec<_>, _>>()?;
        rows.push((id, line_no, neighbors));
    }
    let n = rows.len();
    let mut adjacency: Vec<Option<Vec<usize>>> = vec![None; n];
    for (id, line, neighbors) in rows {
        if id >= n {
            return Err(GraphError::Parse {
                line,
                message: alloc::format!("id {id} out of range for {n} vertices"),
            });
        }
        if adjacency[id].is_some() {
            return Err(GraphError::Parse { line, message: alloc::format!("duplicate id {id}") });
        }
        adjacency[id] = Some(neighbors);
    }
    Ok(adjacency.into_iter().map(|row| row.unwrap_or_default()).collect())
}

/// Renders adjacency lists in the format read by [`parse_adjacency`].
pub fn format_adjacency(g: &Graph) -> String {
    let mut out = String::new();
    for v in 0..g.len() {
        out.push_str(&v.to_string());
        out.push(':');
        for w in g.neighbors(v) {
            out.push(' ');
            out.push_str(&w.to_string());
        }
        out.push('\n');
    }
    out
}
