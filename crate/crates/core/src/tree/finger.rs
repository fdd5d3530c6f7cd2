use crate::error::{Error, FingerState, Result};

/// Default number of simultaneously registered fingers.
pub const DEFAULT_FINGER_CAPACITY: usize = 4;

/// Handle to a registered finger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FingerId {
    slot: usize,
    generation: u64,
}

#[derive(Debug, Clone)]
enum Entry {
    Free,
    Active(Vec<usize>),
    Detached,
}

/// Root-to-vertex cell paths that are rewritten whenever slots move.
#[derive(Debug, Clone)]
pub struct FingerRegistry {
    entries: Vec<(u64, Entry)>,
    next_generation: u64,
}

impl FingerRegistry {
    pub fn new(capacity: usize) -> Self {
        FingerRegistry { entries: vec![(0, Entry::Free); capacity], next_generation: 1 }
    }

    pub fn capacity(&self) -> usize {
        self.entries.len()
    }

    pub fn active(&self) -> usize {
        self.entries.iter().filter(|(_, e)| matches!(e, Entry::Active(_))).count()
    }

    pub fn register(&mut self, path: Vec<usize>) -> Result<FingerId> {
        let slot = self
            .entries
            .iter()
            .position(|(_, e)| matches!(e, Entry::Free))
            .ok_or(Error::FingerCapacity(self.entries.len()))?;
        let generation = self.next_generation;
        self.next_generation += 1;
        self.entries[slot] = (generation, Entry::Active(path));
        Ok(FingerId { slot, generation })
    }

    fn entry(&self, id: FingerId) -> Result<&Entry> {
        match self.entries.get(id.slot) {
            None => Err(Error::InvalidFinger(FingerState::Unknown)),
            Some((g, _)) if *g != id.generation => Err(Error::InvalidFinger(FingerState::Released)),
            Some((_, e)) => Ok(e),
        }
    }

    pub fn path(&self, id: FingerId) -> Result<&[usize]> {
        match self.entry(id)? {
            Entry::Active(p) => Ok(p),
            Entry::Detached => Err(Error::InvalidFinger(FingerState::Detached)),
            Entry::Free => Err(Error::InvalidFinger(FingerState::Released)),
        }
    }

    pub fn set_path(&mut self, id: FingerId, path: Vec<usize>) -> Result<()> {
        self.path(id)?;
        self.entries[id.slot].1 = Entry::Active(path);
        Ok(())
    }

    /// Frees the slot; a detached finger may be released too.
    pub fn release(&mut self, id: FingerId) -> Result<()> {
        self.entry(id)?;
        if matches!(self.entries[id.slot].1, Entry::Free) {
            return Err(Error::InvalidFinger(FingerState::Released));
        }
        self.entries[id.slot] = (0, Entry::Free);
        Ok(())
    }

    /// Marks every finger whose path runs through `cell` as detached; returns their old paths.
    pub(crate) fn detach_through(&mut self, cell: usize) -> Vec<(usize, Vec<usize>)> {
        let mut out = Vec::new();
        for (k, (_, e)) in self.entries.iter_mut().enumerate() {
            if let Entry::Active(p) = e {
                if p.contains(&cell) {
                    out.push((k, std::mem::take(p)));
                    *e = Entry::Detached;
                }
            }
        }
        out
    }

    pub(crate) fn restore(&mut self, saved: Vec<(usize, Vec<usize>)>) {
        for (k, p) in saved {
            self.entries[k].1 = Entry::Active(p);
        }
    }

    pub(crate) fn remap(&mut self, mut f: impl FnMut(usize) -> usize) {
        for (_, e) in &mut self.entries {
            if let Entry::Active(p) = e {
                for c in p.iter_mut() {
                    *c = f(*c);
                }
            }
        }
    }
}
