//! Harris's graphical construction.
//!
//! A graphical sample is a family of independent Poisson processes on a
//! time window: recovery marks at rate 1 on every vertex and infection
//! arrows at rate `lambda` on every directed edge. The contact process from
//! any initial state is a deterministic function of the sample, which is
//! what makes coupled runs (different initial sets, truncations, burn-ins or
//! infection rates on one sample) possible.

mod direct;
mod dump;
mod sweep;
mod trajectory;

pub use direct::evolve_direct;
pub use dump::{decode_sample, encode_sample, DumpError};
pub use sweep::{dual_evolve, evolve, reaches, DualSweep, Flip, Sweep};
pub use trajectory::{Configuration, Event, Trajectory};

use alloc::vec::Vec;

use crate::graph::Graph;
use crate::rng::{block_key, mix64, CounterRng};

/// Identifies one Poisson stream of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Recovery marks at a vertex.
    Mark(usize),
    /// Infection arrows along a directed edge id.
    Arrow(usize),
}

/// Read access to the Poisson streams of a graphical sample.
///
/// Forward sweeps walk streams with a cursor; backward sweeps only need
/// "latest point before" queries.
pub trait PoissonSource {
    type Cursor: Copy + core::fmt::Debug;

    fn graph(&self) -> &Graph;

    /// The closed time window `[start, end]` the sample covers.
    fn window(&self) -> (f64, f64);

    /// First point of `stream` strictly after `t` and no later than the
    /// window end.
    fn first_after(&self, stream: Stream, t: f64) -> Option<(f64, Self::Cursor)>;

    /// The point following the one `cursor` refers to.
    fn advance(&self, stream: Stream, cursor: Self::Cursor) -> Option<(f64, Self::Cursor)>;

    /// Last point of `stream` strictly before `t` and no earlier than the
    /// window start.
    fn last_before(&self, stream: Stream, t: f64) -> Option<f64>;

    /// All points of a stream inside the window, increasing.
    fn points(&self, stream: Stream) -> Vec<f64> {
        let (start, _) = self.window();
        let mut out = Vec::new();
        let mut next = self.first_after(stream, start);
        while let Some((t, c)) = next {
            out.push(t);
            next = self.advance(stream, c);
        }
        out
    }
}

const MARK_TAG: u64 = 0x243f_6a88_85a3_08d3;
const ARROW_TAG: u64 = 0x1319_8a2e_0370_7344;

/// A graphical sample generated lazily from a seed.
///
/// Stream points are generated in unit-length time blocks, each from a
/// counter-based generator keyed by `(seed, stream, block)`. Streams are
/// keyed by vertex and vertex pair rather than by edge id, so a sample on a
/// larger truncation or a wider window contains this one: enlarging either
/// extends streams and never resamples them.
#[derive(Debug, Clone)]
pub struct GraphicalSample<'g> {
    graph: &'g Graph,
    start: f64,
    end: f64,
    lambda: f64,
    arrow_rate: f64,
    thinned: bool,
    seed: u64,
}

/// Position inside a seeded stream: the block, the generator counter and
/// the last point produced.
#[derive(Debug, Clone, Copy)]
pub struct SeededCursor {
    key: u64,
    block: i64,
    counter: u64,
    time: f64,
}

impl<'g> GraphicalSample<'g> {
    /// Sample on `[start, end]` with arrows at rate `lambda`.
    pub fn new(graph: &'g Graph, window: (f64, f64), lambda: f64, seed: u64) -> Self {
        assert!(lambda >= 0.0, "negative infection rate");
        assert!(window.0 <= window.1, "empty window");
        Self { graph, start: window.0, end: window.1, lambda, arrow_rate: lambda, thinned: false, seed }
    }

    /// Sample whose arrows are a `lambda / cap` thinning of rate-`cap`
    /// candidate streams. Samples with equal `(seed, cap)` are coupled
    /// across `lambda <= cap`: arrows present at a lower rate are present at
    /// every higher rate, and recovery marks are shared.
    pub fn thinned(graph: &'g Graph, window: (f64, f64), lambda: f64, cap: f64, seed: u64) -> Self {
        assert!(lambda >= 0.0 && lambda <= cap, "thinning needs 0 <= lambda <= cap");
        let mut s = Self::new(graph, window, lambda, seed);
        s.arrow_rate = cap;
        s.thinned = true;
        s
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Key, candidate rate, and whether candidates are thinned.
    fn stream_key(&self, stream: Stream) -> (u64, f64, bool) {
        match stream {
            Stream::Mark(v) => (mix64(self.seed.wrapping_add(mix64(v as u64 ^ MARK_TAG))), 1.0, false),
            Stream::Arrow(e) => {
                let from = self.graph.edge_source(e) as u64;
                let to = self.graph.edge_target(e) as u64;
                let pair = (from << 32) | to;
                (mix64(self.seed.wrapping_add(mix64(pair ^ ARROW_TAG))), self.arrow_rate, self.thinned)
            }
        }
    }


    /// Next point in `block` after the generator position, or `None` when the
    /// block is exhausted.
    #[inline]
    fn next_in_block(&self, rate: f64, thin: bool, cursor: &mut SeededCursor) -> Option<f64> {
        let mut rng = CounterRng::at(cursor.key, cursor.counter);
        let block_end = (cursor.block + 1) as f64;
        loop {
            let t = cursor.time + rng.next_exp(rate);
            if t >= block_end {
                return None;
            }
            cursor.time = t;
            let kept = !thin || rng.next_open01() * self.arrow_rate < self.lambda;
            cursor.counter = rng.counter();
            if kept {
                return Some(t);
            }
        }
    }

    fn rate_of(&self, stream: Stream) -> (f64, bool) {
        match stream {
            Stream::Mark(_) => (1.0, false),
            Stream::Arrow(_) => (self.arrow_rate, self.thinned),
        }
    }

    fn scan_forward(&self, stream: Stream, mut cursor: SeededCursor, after: f64, stream_key: u64) -> Option<(f64, SeededCursor)> {
        let (rate, thin) = self.rate_of(stream);
        if rate <= 0.0 {
            return None;
        }
        loop {
            if cursor.block as f64 > self.end {
                return None;
            }
            match self.next_in_block(rate, thin, &mut cursor) {
                Some(t) if t > self.end => return None,
                Some(t) if t > after => return Some((t, cursor)),
                Some(_) => {}
                None => {
                    let block = cursor.block + 1;
                    cursor = SeededCursor { key: block_key(stream_key, block), block, counter: 0, time: block as f64 };
                }
            }
        }
    }

    fn block_points(&self, key: u64, rate: f64, thin: bool, block: i64, out: &mut Vec<f64>) {
        out.clear();
        let mut cursor = SeededCursor { key: block_key(key, block), block, counter: 0, time: block as f64 };
        while let Some(t) = self.next_in_block(rate, thin, &mut cursor) {
            out.push(t);
        }
    }
}

impl PoissonSource for GraphicalSample<'_> {
    type Cursor = SeededCursor;

    fn graph(&self) -> &Graph {
        self.graph
    }

    fn window(&self) -> (f64, f64) {
        (self.start, self.end)
    }

    fn first_after(&self, stream: Stream, t: f64) -> Option<(f64, SeededCursor)> {
        let (key, _, _) = self.stream_key(stream);
        let block = libm::floor(t) as i64;
        let cursor = SeededCursor { key: block_key(key, block), block, counter: 0, time: block as f64 };
        self.scan_forward(stream, cursor, t, key)
    }

    fn advance(&self, stream: Stream, cursor: SeededCursor) -> Option<(f64, SeededCursor)> {
        // the stream key is only needed when the cursor crosses into a new block
        let mut c = cursor;
        let (rate, thin) = self.rate_of(stream);
        if (c.block as f64) <= self.end {
            if let Some(t) = self.next_in_block(rate, thin, &mut c) {
                return if t > self.end { None } else { Some((t, c)) };
            }
        }
        let (key, _, _) = self.stream_key(stream);
        let block = c.block + 1;
        let next = SeededCursor { key: block_key(key, block), block, counter: 0, time: block as f64 };
        self.scan_forward(stream, next, cursor.time, key)
    }

    fn last_before(&self, stream: Stream, t: f64) -> Option<f64> {
        let (key, rate, thin) = self.stream_key(stream);
        if rate <= 0.0 {
            return None;
        }
        let mut block = libm::floor(t.min(self.end)) as i64;
        let mut buf = Vec::new();
        loop {
            if ((block + 1) as f64) < self.start {
                return None;
            }
            self.block_points(key, rate, thin, block, &mut buf);
            if let Some(&p) = buf.iter().rev().find(|&&p| p < t && p <= self.end) {
                return if p >= self.start { Some(p) } else { None };
            }
            block -= 1;
        }
    }
}

/// A sample given by explicit point lists, for hand-built scenarios and for
/// replaying dumped samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitSample<'g> {
    graph: &'g Graph,
    start: f64,
    end: f64,
    marks: Vec<Vec<f64>>,
    arrows: Vec<Vec<f64>>,
}

impl<'g> ExplicitSample<'g> {
    /// An empty sample: no marks, no arrows.
    pub fn empty(graph: &'g Graph, window: (f64, f64)) -> Self {
        Self {
            graph,
            start: window.0,
            end: window.1,
            marks: alloc::vec![Vec::new(); graph.len()],
            arrows: alloc::vec![Vec::new(); graph.edge_count()],
        }
    }

    /// Adds a recovery mark; panics if it falls outside the window.
    pub fn with_mark(mut self, vertex: usize, t: f64) -> Self {
        assert!(t >= self.start && t <= self.end, "mark outside window");
        insert_sorted(&mut self.marks[vertex], t);
        self
    }

    /// Adds an arrow `from -> to`; panics on a non-edge or a time outside the
    /// window.
    pub fn with_arrow(mut self, from: usize, to: usize, t: f64) -> Self {
        assert!(t >= self.start && t <= self.end, "arrow outside window");
        let e = self.graph.edge_between(from, to).expect("arrow along a non-edge");
        insert_sorted(&mut self.arrows[e], t);
        self
    }

    /// Copies every stream of another source.
    pub fn materialize<S: PoissonSource>(graph: &'g Graph, source: &S) -> Self {
        let (start, end) = source.window();
        Self {
            graph,
            start,
            end,
            marks: (0..graph.len()).map(|v| source.points(Stream::Mark(v))).collect(),
            arrows: (0..graph.edge_count()).map(|e| source.points(Stream::Arrow(e))).collect(),
        }
    }

    pub(crate) fn from_parts(
        graph: &'g Graph,
        window: (f64, f64),
        marks: Vec<Vec<f64>>,
        arrows: Vec<Vec<f64>>,
    ) -> Self {
        Self { graph, start: window.0, end: window.1, marks, arrows }
    }

    pub fn marks(&self, vertex: usize) -> &[f64] {
        &self.marks[vertex]
    }

    pub fn arrows(&self, edge: usize) -> &[f64] {
        &self.arrows[edge]
    }

    fn list(&self, stream: Stream) -> &[f64] {
        match stream {
            Stream::Mark(v) => &self.marks[v],
            Stream::Arrow(e) => &self.arrows[e],
        }
    }
}

fn insert_sorted(list: &mut Vec<f64>, t: f64) {
    let at = list.partition_point(|&p| p < t);
    if list.get(at) != Some(&t) {
        list.insert(at, t);
    }
}

impl PoissonSource for ExplicitSample<'_> {
    type Cursor = usize;

    fn graph(&self) -> &Graph {
        self.graph
    }

    fn window(&self) -> (f64, f64) {
        (self.start, self.end)
    }

    fn first_after(&self, stream: Stream, t: f64) -> Option<(f64, usize)> {
        let list = self.list(stream);
        let i = list.partition_point(|&p| p <= t);
        list.get(i).map(|&p| (p, i))
    }

    fn advance(&self, stream: Stream, cursor: usize) -> Option<(f64, usize)> {
        self.list(stream).get(cursor + 1).map(|&p| (p, cursor + 1))
    }

    fn last_before(&self, stream: Stream, t: f64) -> Option<f64> {
        let list = self.list(stream);
        let i = list.partition_point(|&p| p < t);
        if i == 0 {
            None
        } else {
            Some(list[i - 1])
        }
    }
}
