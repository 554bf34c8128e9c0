use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::trajectory::{Configuration, Event, Trajectory};
use super::{PoissonSource, Stream};
use crate::error::SimError;
use crate::graph::Graph;

/// A state change of a single vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flip {
    pub time: f64,
    pub vertex: usize,
    pub infected: bool,
}

/// A pending stream point. Streams are numbered marks first (`0..V`), then
/// arrows (`V + edge`); ties in time break on that number. Each valid point
/// flips a vertex and retires its stream, so no cursor is kept.
#[derive(Debug, Clone, Copy)]
struct Pending {
    time: f64,
    stream: u32,
    epoch: u32,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    // reversed: BinaryHeap is a max-heap and we want the earliest point
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.stream.cmp(&self.stream))
    }
}

/// Event-driven forward evolution on a graphical sample.
///
/// A recovery mark matters only at an infected vertex and an arrow only
/// along an active edge (infected source, healthy target), so the queue
/// holds exactly those cursors. Every flip of a vertex bumps the epoch of
/// the vertex and of its incident edges; queue entries carrying an old
/// epoch are dropped when they surface.
pub struct Sweep<'s, S: PoissonSource> {
    source: &'s S,
    state: Vec<bool>,
    vertex_epoch: Vec<u32>,
    edge_epoch: Vec<u32>,
    infected: usize,
    queue: BinaryHeap<Pending>,
    now: f64,
}

impl<'s, S: PoissonSource> Sweep<'s, S> {
    /// Starts at time `start` from `initial` (one flag per vertex).
    pub fn new(source: &'s S, initial: &[bool], start: f64) -> Self {
        let g = source.graph();
        let n = g.len();
        assert_eq!(initial.len(), n, "configuration length");
        let mut sweep = Self {
            source,
            state: initial.to_vec(),
            vertex_epoch: vec![0; n],
            edge_epoch: vec![0; g.edge_count()],
            infected: 0,
            queue: BinaryHeap::new(),
            now: start,
        };
        for v in 0..n {
            if !initial[v] {
                continue;
            }
            sweep.infected += 1;
            sweep.push_mark(v, start);
            for e in g.out_edges(v) {
                if !initial[g.edge_target(e)] {
                    sweep.push_arrow(e, start);
                }
            }
        }
        sweep
    }

    pub fn from_set(source: &'s S, set: &[usize], start: f64) -> Self {
        let mut initial = vec![false; source.graph().len()];
        for &v in set {
            initial[v] = true;
        }
        Self::new(source, &initial, start)
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn state(&self) -> &[bool] {
        &self.state
    }

    #[inline]
    pub fn is_infected(&self, v: usize) -> bool {
        self.state[v]
    }

    pub fn infected_count(&self) -> usize {
        self.infected
    }

    pub fn configuration(&self) -> Configuration {
        Configuration { bits: self.state.clone(), time: self.now }
    }

    fn push_mark(&mut self, v: usize, t: f64) {
        let epoch = self.vertex_epoch[v];
        if let Some((time, _)) = self.source.first_after(Stream::Mark(v), t) {
            self.queue.push(Pending { time, stream: v as u32, epoch });
        }
    }

    fn push_arrow(&mut self, e: usize, t: f64) {
        let epoch = self.edge_epoch[e];
        if let Some((time, _)) = self.source.first_after(Stream::Arrow(e), t) {
            let stream = (self.state.len() + e) as u32;
            self.queue.push(Pending { time, stream, epoch });
        }
    }

    fn infect(&mut self, v: usize, t: f64) {
        let g: &Graph = self.source.graph();
        self.state[v] = true;
        self.infected += 1;
        self.vertex_epoch[v] = self.vertex_epoch[v].wrapping_add(1);
        self.push_mark(v, t);
        for e in g.out_edges(v) {
            // edges into v die, edges out of v to healthy targets come alive
            let back = g.reverse_edge(e);
            self.edge_epoch[back] = self.edge_epoch[back].wrapping_add(1);
            self.edge_epoch[e] = self.edge_epoch[e].wrapping_add(1);
            if !self.state[g.edge_target(e)] {
                self.push_arrow(e, t);
            }
        }
    }

    fn recover(&mut self, v: usize, t: f64) {
        let g: &Graph = self.source.graph();
        self.state[v] = false;
        self.infected -= 1;
        self.vertex_epoch[v] = self.vertex_epoch[v].wrapping_add(1);
        for e in g.out_edges(v) {
            let back = g.reverse_edge(e);
            self.edge_epoch[back] = self.edge_epoch[back].wrapping_add(1);
            self.edge_epoch[e] = self.edge_epoch[e].wrapping_add(1);
            if self.state[g.edge_target(e)] {
                self.push_arrow(back, t);
            }
        }
    }

    /// Processes stream points up to `until` and returns the first one that
    /// changes the state. Returns `None` once nothing changes by `until`;
    /// the sweep then sits at `until`.
    pub fn next_flip(&mut self, until: f64) -> Option<Flip> {
        let n = self.state.len();
        while let Some(top) = self.queue.peek() {
            if top.time > until {
                break;
            }
            let p = self.queue.pop().expect("peeked");
            let stream = p.stream as usize;
            if stream < n {
                if self.vertex_epoch[stream] != p.epoch {
                    continue;
                }
                self.recover(stream, p.time);
                self.now = p.time;
                return Some(Flip { time: p.time, vertex: stream, infected: false });
            }
            let e = stream - n;
            if self.edge_epoch[e] != p.epoch {
                continue;
            }
            let to = self.source.graph().edge_target(e);
            self.infect(to, p.time);
            self.now = p.time;
            return Some(Flip { time: p.time, vertex: to, infected: true });
        }
        self.now = self.now.max(until);
        None
    }

    /// Runs to `until`, reporting every flip.
    pub fn run_until(&mut self, until: f64, mut on_flip: impl FnMut(&Flip, &[bool])) {
        while let Some(f) = self.next_flip(until) {
            on_flip(&f, &self.state);
        }
    }

    /// Runs to `until` or extinction, whichever comes first; returns the
    /// extinction time if it happened.
    pub fn run_to_extinction(&mut self, until: f64) -> Option<f64> {
        if self.infected == 0 {
            return Some(self.now);
        }
        while let Some(f) = self.next_flip(until) {
            if self.infected == 0 {
                return Some(f.time);
            }
        }
        None
    }
}

/// Maps vertices to trajectory slots.
pub(crate) struct SlotMap {
    slots: Vec<u32>,
}

impl SlotMap {
    pub(crate) fn new(n: usize, record: &[usize]) -> Result<Self, SimError> {
        let mut slots = vec![u32::MAX; n];
        for (i, &v) in record.iter().enumerate() {
            if v >= n {
                return Err(crate::graph::GraphError::UnknownVertex(v).into());
            }
            slots[v] = i as u32;
        }
        Ok(Self { slots })
    }

    #[inline]
    pub(crate) fn slot(&self, v: usize) -> Option<usize> {
        match self.slots[v] {
            u32::MAX => None,
            s => Some(s as usize),
        }
    }
}

pub(crate) fn check_time<S: PoissonSource>(source: &S, t: f64) -> Result<(), SimError> {
    let (start, end) = source.window();
    if t < start || t > end {
        Err(SimError::OutsideWindow { time: t, start, end })
    } else {
        Ok(())
    }
}

/// Evolves `initial` (tagged at the window start) through the whole sample
/// and records the sites in `record`.
pub fn evolve<S: PoissonSource>(
    source: &S,
    initial: &Configuration,
    record: &[usize],
) -> Result<Trajectory, SimError> {
    let (start, end) = source.window();
    let n = source.graph().len();
    if initial.len() != n {
        return Err(SimError::LengthMismatch { expected: n, found: initial.len() });
    }
    if (initial.time - start).abs() > 1e-12 * (1.0 + start.abs()) {
        return Err(SimError::TimeTagMismatch { expected: start, found: initial.time });
    }
    let slots = SlotMap::new(n, record)?;
    let mut sweep = Sweep::new(source, &initial.bits, start);
    let mut events = Vec::new();
    while let Some(f) = sweep.next_flip(end) {
        if let Some(site) = slots.slot(f.vertex) {
            events.push(Event { time: f.time, site, infected: f.infected });
        }
    }
    Ok(Trajectory {
        delta: record.to_vec(),
        initial: record.iter().map(|&v| initial.bits[v]).collect(),
        events,
        window: (start, end),
        final_config: Some(sweep.configuration()),
    })
}

/// Whether `(to.0, to.1)` is reachable from `(from.0, from.1)` by an active
/// path: forward in time, never across a recovery mark, sideways along
/// arrows.
pub fn reaches<S: PoissonSource>(source: &S, from: (usize, f64), to: (usize, f64)) -> Result<bool, SimError> {
    let n = source.graph().len();
    for v in [from.0, to.0] {
        if v >= n {
            return Err(crate::graph::GraphError::UnknownVertex(v).into());
        }
    }
    check_time(source, from.1)?;
    check_time(source, to.1)?;
    if from.1 > to.1 {
        return Err(SimError::ReversedTimes { from: from.1, to: to.1 });
    }
    let mut sweep = Sweep::from_set(source, &[from.0], from.1);
    while sweep.next_flip(to.1).is_some() {
        if sweep.infected_count() == 0 {
            return Ok(false);
        }
    }
    Ok(sweep.is_infected(to.0))
}

#[derive(Debug, Clone, Copy)]
struct BackPending {
    time: f64,
    stream: u32,
    epoch: u32,
}

impl PartialEq for BackPending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for BackPending {}

impl PartialOrd for BackPending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for BackPending {
    // latest real time first
    fn cmp(&self, other: &Self) -> Ordering {
        self.time.total_cmp(&other.time).then_with(|| other.stream.cmp(&self.stream))
    }
}

/// The dual process: runs backward in real time from a reference time,
/// dying at recovery marks and following arrows against their direction.
pub struct DualSweep<'s, S: PoissonSource> {
    source: &'s S,
    state: Vec<bool>,
    epoch: Vec<u32>,
    occupied: usize,
    queue: BinaryHeap<BackPending>,
    /// Real time the dual currently sits at.
    now: f64,
}

impl<'s, S: PoissonSource> DualSweep<'s, S> {
    pub fn new(source: &'s S, set: &[usize], at: f64) -> Self {
        let n = source.graph().len();
        let mut dual = Self {
            source,
            state: vec![false; n],
            epoch: vec![0; n],
            occupied: 0,
            queue: BinaryHeap::new(),
            now: at,
        };
        for &v in set {
            if !dual.state[v] {
                dual.occupy(v, at);
            }
        }
        dual
    }

    pub fn state(&self) -> &[bool] {
        &self.state
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied
    }

    fn occupy(&mut self, v: usize, t: f64) {
        let g = self.source.graph();
        self.state[v] = true;
        self.occupied += 1;
        self.epoch[v] = self.epoch[v].wrapping_add(1);
        let epoch = self.epoch[v];
        if let Some(time) = self.source.last_before(Stream::Mark(v), t) {
            self.queue.push(BackPending { time, stream: v as u32, epoch });
        }
        let n = g.len() as u32;
        for e in g.out_edges(v) {
            let incoming = g.reverse_edge(e);
            if let Some(time) = self.source.last_before(Stream::Arrow(incoming), t) {
                self.queue.push(BackPending { time, stream: n + incoming as u32, epoch });
            }
        }
    }

    /// Processes points down to real time `until`; returns the next change.
    pub fn next_flip(&mut self, until: f64) -> Option<Flip> {
        let g = self.source.graph();
        let n = g.len();
        while let Some(top) = self.queue.peek() {
            if top.time < until {
                break;
            }
            let p = self.queue.pop().expect("peeked");
            let stream = p.stream as usize;
            if stream < n {
                if !self.state[stream] || self.epoch[stream] != p.epoch {
                    continue;
                }
                self.state[stream] = false;
                self.occupied -= 1;
                self.epoch[stream] = self.epoch[stream].wrapping_add(1);
                self.now = p.time;
                return Some(Flip { time: p.time, vertex: stream, infected: false });
            }
            let e = stream - n;
            // edge e runs w -> y; the dual walks from y to w
            let y = g.edge_target(e);
            if !self.state[y] || self.epoch[y] != p.epoch {
                continue;
            }
            if let Some(time) = self.source.last_before(Stream::Arrow(e), p.time) {
                self.queue.push(BackPending { time, ..p });
            }
            let w = g.edge_source(e);
            if !self.state[w] {
                self.occupy(w, p.time);
                self.now = p.time;
                return Some(Flip { time: p.time, vertex: w, infected: true });
            }
        }
        self.now = self.now.min(until);
        None
    }
}

/// Runs the dual from `set` at real time `at` down to `at - depth`. The
/// returned trajectory covers every vertex and runs on the dual's own clock
/// `u = at - t`, over `[0, depth]`.
pub fn dual_evolve<S: PoissonSource>(
    source: &S,
    set: &[usize],
    at: f64,
    depth: f64,
) -> Result<Trajectory, SimError> {
    let n = source.graph().len();
    let (start, _) = source.window();
    check_time(source, at)?;
    if depth < 0.0 {
        return Err(SimError::ReversedTimes { from: at, to: at - depth });
    }
    if at - depth < start {
        return Err(SimError::WindowUnderflow { needed: at - depth, start });
    }
    for &v in set {
        if v >= n {
            return Err(crate::graph::GraphError::UnknownVertex(v).into());
        }
    }
    let mut dual = DualSweep::new(source, set, at);
    let mut initial = vec![false; n];
    for &v in set {
        initial[v] = true;
    }
    let mut events = Vec::new();
    while let Some(f) = dual.next_flip(at - depth) {
        events.push(Event { time: at - f.time, site: f.vertex, infected: f.infected });
    }
    Ok(Trajectory {
        delta: (0..n).collect(),
        initial,
        events,
        window: (0.0, depth),
        final_config: Some(Configuration { bits: dual.state.clone(), time: depth }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, GraphSpec};
    use crate::graphical::{ExplicitSample, GraphicalSample};

    fn path3() -> Graph {
        build_graph(&GraphSpec::explicit(vec![vec![1], vec![0, 2], vec![1]])).unwrap()
    }

    #[test]
    fn all_healthy_is_absorbing() {
        let g = build_graph(&GraphSpec::lattice(1, 5)).unwrap();
        let s = GraphicalSample::new(&g, (0.0, 20.0), 3.0, 1);
        let t = evolve(&s, &Configuration::zeros(g.len(), 0.0), &[0, 1, 2]).unwrap();
        assert!(t.events.is_empty());
        assert_eq!(t.final_atom(), 0);
    }

    #[test]
    fn single_vertex_dies_at_first_mark() {
        let g = build_graph(&GraphSpec::explicit(vec![vec![]])).unwrap();
        let s = GraphicalSample::new(&g, (0.0, 50.0), 1.0, 8);
        let first = s.first_after(Stream::Mark(0), 0.0).unwrap().0;
        let t = evolve(&s, &Configuration::ones(1, 0.0), &[0]).unwrap();
        assert_eq!(t.events, vec![Event { time: first, site: 0, infected: false }]);
    }

    #[test]
    fn hand_built_path() {
        let g = path3();
        let s = ExplicitSample::empty(&g, (0.0, 3.0)).with_arrow(0, 1, 1.0).with_mark(1, 2.0);
        let t = evolve(&s, &Configuration::from_set(3, &[0], 0.0), &[0, 1, 2]).unwrap();
        assert_eq!(t.atom_at(0.5), 0b001);
        assert_eq!(t.atom_at(1.0), 0b011);
        assert_eq!(t.atom_at(1.99), 0b011);
        assert_eq!(t.atom_at(2.0), 0b001);
        assert!(t.is_consistent());
    }

    #[test]
    fn time_tag_checked() {
        let g = path3();
        let s = ExplicitSample::empty(&g, (1.0, 3.0));
        let err = evolve(&s, &Configuration::zeros(3, 0.0), &[0]).unwrap_err();
        assert!(matches!(err, SimError::TimeTagMismatch { .. }));
        let err = evolve(&s, &Configuration::zeros(2, 1.0), &[0]).unwrap_err();
        assert!(matches!(err, SimError::LengthMismatch { .. }));
    }

    #[test]
    fn reachability_basics() {
        let g = path3();
        let s = ExplicitSample::empty(&g, (0.0, 5.0)).with_mark(0, 0.5).with_arrow(0, 1, 1.0);
        assert!(reaches(&s, (0, 0.2), (0, 0.2)).unwrap());
        // the mark at 0.5 cuts the only route before the arrow fires
        assert!(!reaches(&s, (0, 0.2), (1, 2.0)).unwrap());
        assert!(reaches(&s, (0, 0.7), (1, 2.0)).unwrap());
        assert!(matches!(reaches(&s, (0, 2.0), (1, 1.0)), Err(SimError::ReversedTimes { .. })));
        assert!(matches!(reaches(&s, (0, 2.0), (1, 9.0)), Err(SimError::OutsideWindow { .. })));
    }

    #[test]
    fn dual_hand_built() {
        let g = path3();
        let s = ExplicitSample::empty(&g, (0.0, 3.0)).with_arrow(0, 1, 1.0);
        let d = dual_evolve(&s, &[1], 2.0, 2.0).unwrap();
        assert_eq!(d.atom_at(0.5), 0b010);
        assert_eq!(d.atom_at(1.0), 0b011);
        assert_eq!(d.final_atom(), 0b011);
        let empty = ExplicitSample::empty(&g, (0.0, 3.0));
        let d = dual_evolve(&empty, &[0, 2], 3.0, 3.0).unwrap();
        assert!(d.events.is_empty());
        assert!(matches!(dual_evolve(&empty, &[0], 2.0, 2.5), Err(SimError::WindowUnderflow { .. })));
    }

    #[test]
    fn dual_marks_kill() {
        let g = path3();
        let s = ExplicitSample::empty(&g, (0.0, 3.0)).with_mark(1, 1.5).with_arrow(0, 1, 1.0);
        // backward from (1, 2): the mark at 1.5 kills the dual before the arrow
        let d = dual_evolve(&s, &[1], 2.0, 2.0).unwrap();
        assert_eq!(d.final_atom(), 0);
        assert_eq!(d.events[0].time, 0.5);
    }
}
