//! Events on the configurations of an observed set, as sets of atoms.
//!
//! An atom is a bitmask with bit `i` for the `i`-th observed site. An event
//! is increasing when it is closed under infecting more sites; that property
//! is checked, not assumed.

use std::collections::BTreeSet;

use contact_core::Trajectory;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest observed set whose atoms are enumerated.
pub const MAX_SITES: usize = 12;

#[derive(Debug, Error, PartialEq)]
pub enum EventError {
    #[error("{0} observed sites exceed the atom cap of {MAX_SITES}")]
    TooManySites(usize),
    #[error("atom {atom:#b} has bits outside the {sites} observed sites")]
    AtomOutOfRange { atom: u64, sites: usize },
    #[error("event is not increasing: contains {atom:#b} but not {missing:#b}")]
    NotIncreasing { atom: u64, missing: u64 },
    #[error("site slot {slot} out of range for {sites} observed sites")]
    SlotOutOfRange { slot: usize, sites: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomEvent {
    sites: usize,
    atoms: BTreeSet<u64>,
}

impl AtomEvent {
    pub fn new(sites: usize, atoms: impl IntoIterator<Item = u64>) -> Result<Self, EventError> {
        if sites > MAX_SITES {
            return Err(EventError::TooManySites(sites));
        }
        let atoms: BTreeSet<u64> = atoms.into_iter().collect();
        if let Some(&atom) = atoms.iter().find(|&&a| a >> sites != 0) {
            return Err(EventError::AtomOutOfRange { atom, sites });
        }
        Ok(Self { sites, atoms })
    }

    /// Builds an event and checks that it is increasing.
    pub fn increasing(sites: usize, atoms: impl IntoIterator<Item = u64>) -> Result<Self, EventError> {
        let e = Self::new(sites, atoms)?;
        e.check_increasing()?;
        Ok(e)
    }

    fn from_predicate(sites: usize, pred: impl Fn(u64) -> bool) -> Result<Self, EventError> {
        if sites > MAX_SITES {
            return Err(EventError::TooManySites(sites));
        }
        Self::new(sites, (0..1u64 << sites).filter(|&a| pred(a)))
    }

    fn mask(sites: usize, slots: &[usize]) -> Result<u64, EventError> {
        slots.iter().try_fold(0u64, |m, &s| {
            if s < sites {
                Ok(m | 1 << s)
            } else {
                Err(EventError::SlotOutOfRange { slot: s, sites })
            }
        })
    }

    /// The sure event.
    pub fn full(sites: usize) -> Result<Self, EventError> {
        Self::from_predicate(sites, |_| true)
    }

    /// Every listed slot infected.
    pub fn all_infected(sites: usize, slots: &[usize]) -> Result<Self, EventError> {
        let m = Self::mask(sites, slots)?;
        Self::from_predicate(sites, |a| a & m == m)
    }

    /// Some listed slot infected.
    pub fn any_infected(sites: usize, slots: &[usize]) -> Result<Self, EventError> {
        let m = Self::mask(sites, slots)?;
        Self::from_predicate(sites, |a| a & m != 0)
    }

    /// Every listed slot healthy (a decreasing event).
    pub fn all_healthy(sites: usize, slots: &[usize]) -> Result<Self, EventError> {
        let m = Self::mask(sites, slots)?;
        Self::from_predicate(sites, |a| a & m == 0)
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn atoms(&self) -> &BTreeSet<u64> {
        &self.atoms
    }

    #[inline]
    pub fn contains(&self, atom: u64) -> bool {
        self.atoms.contains(&atom)
    }

    pub fn check_increasing(&self) -> Result<(), EventError> {
        for &atom in &self.atoms {
            for i in 0..self.sites {
                let up = atom | 1 << i;
                if !self.atoms.contains(&up) {
                    return Err(EventError::NotIncreasing { atom, missing: up });
                }
            }
        }
        Ok(())
    }

    pub fn is_increasing(&self) -> bool {
        self.check_increasing().is_ok()
    }
}

/// An event at one observation time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedEvent {
    pub time: f64,
    pub event: AtomEvent,
}

/// An intersection of single-time events: a multi-time cylinder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    pub label: String,
    pub parts: Vec<TimedEvent>,
}

impl Cylinder {
    pub fn at(label: impl Into<String>, time: f64, event: AtomEvent) -> Self {
        Self { label: label.into(), parts: vec![TimedEvent { time, event }] }
    }

    pub fn and(mut self, time: f64, event: AtomEvent) -> Self {
        self.parts.push(TimedEvent { time, event });
        self
    }

    pub fn is_increasing(&self) -> bool {
        self.parts.iter().all(|p| p.event.is_increasing())
    }

    pub fn holds(&self, traj: &Trajectory) -> bool {
        self.parts.iter().all(|p| p.event.contains(traj.atom_at(p.time)))
    }
}
