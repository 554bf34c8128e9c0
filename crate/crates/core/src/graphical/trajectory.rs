use alloc::vec;
use alloc::vec::Vec;

/// A {0,1} assignment over the vertices of a graph, tagged with a time.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    pub bits: Vec<bool>,
    pub time: f64,
}

impl Configuration {
    pub fn zeros(len: usize, time: f64) -> Self {
        Self { bits: vec![false; len], time }
    }

    pub fn ones(len: usize, time: f64) -> Self {
        Self { bits: vec![true; len], time }
    }

    /// Infected exactly on `set`.
    pub fn from_set(len: usize, set: &[usize], time: f64) -> Self {
        let mut c = Self::zeros(len, time);
        for &v in set {
            c.bits[v] = true;
        }
        c
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn infected(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(v, _)| v)
    }

    pub fn is_all_healthy(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Bit `i` of the result is the state of `sites[i]`.
    pub fn atom(&self, sites: &[usize]) -> u64 {
        sites.iter().enumerate().fold(0, |acc, (i, &v)| acc | (u64::from(self.bits[v]) << i))
    }
}

/// A state change of one observed site. `site` indexes the trajectory's
/// `delta`, not the graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub site: usize,
    pub infected: bool,
}

/// Piecewise-constant record of the process restricted to a finite set of
/// sites over a window.
///
/// States are right-continuous: an event at time `t` is in effect at `t`.
/// Sites are indexed by position in `delta`; configurations of `delta` are
/// encoded as bitmasks ("atoms") with bit `i` for `delta[i]`, so `delta`
/// holds at most 64 sites.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub delta: Vec<usize>,
    pub initial: Vec<bool>,
    pub events: Vec<Event>,
    pub window: (f64, f64),
    /// Full configuration at the window end, when the producer tracked it.
    pub final_config: Option<Configuration>,
}

impl Trajectory {
    pub fn constant(delta: Vec<usize>, initial: Vec<bool>, window: (f64, f64)) -> Self {
        Self { delta, initial, events: Vec::new(), window, final_config: None }
    }

    pub fn initial_atom(&self) -> u64 {
        pack(&self.initial)
    }

    /// State of the observed sites at time `t` (clamped to the window).
    pub fn state_at(&self, t: f64) -> Vec<bool> {
        let mut state = self.initial.clone();
        for e in self.events.iter().take_while(|e| e.time <= t) {
            state[e.site] = e.infected;
        }
        state
    }

    pub fn atom_at(&self, t: f64) -> u64 {
        pack(&self.state_at(t))
    }

    pub fn final_atom(&self) -> u64 {
        self.atom_at(self.window.1)
    }

    /// Atoms at each of the increasing `times`, in one pass.
    pub fn atoms_at(&self, times: &[f64]) -> Vec<u64> {
        let mut atom = self.initial_atom();
        let mut events = self.events.iter().peekable();
        times
            .iter()
            .map(|&t| {
                while let Some(e) = events.next_if(|e| e.time <= t) {
                    atom = apply(atom, e);
                }
                atom
            })
            .collect()
    }

    /// Maximal constant pieces `(from, to, atom)` covering the window.
    pub fn pieces(&self) -> Vec<(f64, f64, u64)> {
        let mut out = Vec::with_capacity(self.events.len() + 1);
        let mut atom = self.initial_atom();
        let mut from = self.window.0;
        for e in &self.events {
            if e.time > from {
                out.push((from, e.time, atom));
                from = e.time;
            }
            atom = apply(atom, e);
        }
        if self.window.1 > from || out.is_empty() {
            out.push((from, self.window.1, atom));
        }
        out
    }

    /// The same record on a sub-window `[from, to]`.
    pub fn restrict(&self, from: f64, to: f64) -> Trajectory {
        let from = from.max(self.window.0);
        let to = to.min(self.window.1);
        Trajectory {
            delta: self.delta.clone(),
            initial: self.state_at(from),
            events: self.events.iter().filter(|e| e.time > from && e.time <= to).copied().collect(),
            window: (from, to),
            // still the configuration at the window end if the end is kept
            final_config: if to == self.window.1 { self.final_config.clone() } else { None },
        }
    }

    /// Checks the structural invariants: events are time-ordered inside the
    /// window and each one flips its site.
    pub fn is_consistent(&self) -> bool {
        let mut state = self.initial.clone();
        let mut last = self.window.0;
        for e in &self.events {
            if e.time < last || e.time > self.window.1 || e.site >= state.len() || state[e.site] == e.infected {
                return false;
            }
            state[e.site] = e.infected;
            last = e.time;
        }
        self.initial.len() == self.delta.len()
    }

    /// First time the observed set is entirely healthy, if it happens.
    pub fn first_all_healthy(&self) -> Option<f64> {
        let mut atom = self.initial_atom();
        if atom == 0 {
            return Some(self.window.0);
        }
        for e in &self.events {
            atom = apply(atom, e);
            if atom == 0 {
                return Some(e.time);
            }
        }
        None
    }
}

#[inline]
pub(crate) fn apply(atom: u64, e: &Event) -> u64 {
    if e.infected {
        atom | (1 << e.site)
    } else {
        atom & !(1 << e.site)
    }
}

pub(crate) fn pack(bits: &[bool]) -> u64 {
    bits.iter().enumerate().fold(0, |acc, (i, &b)| acc | (u64::from(b) << i))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Trajectory {
        Trajectory {
            delta: vec![4, 7],
            initial: vec![true, false],
            events: vec![
                Event { time: 1.0, site: 1, infected: true },
                Event { time: 2.5, site: 0, infected: false },
                Event { time: 4.0, site: 1, infected: false },
            ],
            window: (0.0, 5.0),
            final_config: None,
        }
    }

    #[test]
    fn states_are_right_continuous() {
        let t = sample();
        assert_eq!(t.atom_at(0.5), 0b01);
        assert_eq!(t.atom_at(1.0), 0b11);
        assert_eq!(t.atom_at(3.0), 0b10);
        assert_eq!(t.final_atom(), 0);
        assert_eq!(t.atoms_at(&[0.0, 1.0, 2.4, 2.5, 5.0]), vec![1, 3, 3, 2, 0]);
        assert_eq!(t.first_all_healthy(), Some(4.0));
    }

    #[test]
    fn pieces_cover_window() {
        let p = sample().pieces();
        assert_eq!(p, vec![(0.0, 1.0, 1), (1.0, 2.5, 3), (2.5, 4.0, 2), (4.0, 5.0, 0)]);
    }

    #[test]
    fn restriction() {
        let r = sample().restrict(2.0, 4.5);
        assert_eq!(r.initial, vec![true, true]);
        assert_eq!(r.events.len(), 2);
        assert!(r.is_consistent());
        assert!(sample().is_consistent());
    }

    #[test]
    fn inconsistent_event_detected() {
        let mut t = sample();
        t.events[0].infected = false;
        assert!(!t.is_consistent());
    }
}
