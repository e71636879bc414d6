//! Sequential discrete-event engine.
//!
//! Events fire in `(fire_at, seq)` order where `seq` is the insertion
//! counter, so equal timestamps resolve FIFO.

use alloc::collections::BinaryHeap;
use core::cmp::Ordering;

use crate::error::SimError;
use crate::time::SimTime;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventHandle {
    pub fire_at: SimTime,
    pub seq: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EngineStats {
    pub events_fired: u64,
    pub final_time: SimTime,
}

struct Entry<A> {
    handle: EventHandle,
    action: A,
}

impl<A> PartialEq for Entry<A> {
    fn eq(&self, other: &Self) -> bool {
        self.handle == other.handle
    }
}

impl<A> Eq for Entry<A> {}

impl<A> PartialOrd for Entry<A> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<A> Ord for Entry<A> {
    // BinaryHeap is a max-heap; invert so the earliest handle pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.handle.cmp(&self.handle)
    }
}

/// Event queue plus clock. `A` is the action a component interprets when
/// the event fires.
pub struct Engine<A> {
    now: SimTime,
    next_seq: u64,
    fired: u64,
    queue: BinaryHeap<Entry<A>>,
}

impl<A> Default for Engine<A> {
    fn default() -> Self {
        Self::new()
    }
}

impl<A> Engine<A> {
    pub fn new() -> Self {
        Engine {
            now: SimTime::ZERO,
            next_seq: 0,
            fired: 0,
            queue: BinaryHeap::new(),
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    pub fn events_fired(&self) -> u64 {
        self.fired
    }

    pub fn schedule(&mut self, fire_at: SimTime, action: A) -> Result<EventHandle, SimError> {
        if fire_at < self.now {
            return Err(SimError::ScheduleInPast {
                now: self.now,
                requested: fire_at,
            });
        }
        let handle = EventHandle {
            fire_at,
            seq: self.next_seq,
        };
        self.next_seq += 1;
        self.queue.push(Entry { handle, action });
        Ok(handle)
    }

    pub fn schedule_in(&mut self, delay: SimTime, action: A) -> Result<EventHandle, SimError> {
        self.schedule(self.now + delay, action)
    }

    /// Pops the next event due at or before `limit`, advancing the clock to it.
    pub fn pop_due(&mut self, limit: SimTime) -> Option<(EventHandle, A)> {
        if self.queue.peek()?.handle.fire_at > limit {
            return None;
        }
        let Entry { handle, action } = self.queue.pop()?;
        self.now = handle.fire_at;
        self.fired += 1;
        Some((handle, action))
    }

    /// Fires every event with `fire_at ≤ t_end` (including ones scheduled by
    /// handlers), then sets the clock to `t_end`.
    pub fn run_until<F>(&mut self, t_end: SimTime, mut handler: F) -> Result<EngineStats, SimError>
    where
        F: FnMut(&mut Engine<A>, EventHandle, A) -> Result<(), SimError>,
    {
        if t_end < self.now {
            return Err(SimError::RunBackwards {
                now: self.now,
                requested: t_end,
            });
        }
        let start = self.fired;
        while let Some((handle, action)) = self.pop_due(t_end) {
            handler(self, handle, action)?;
        }
        self.now = t_end;
        Ok(EngineStats {
            events_fired: self.fired - start,
            final_time: self.now,
        })
    }

    /// Fires events until the queue is empty; the clock stays at the last event.
    pub fn run_to_completion<F>(&mut self, mut handler: F) -> Result<EngineStats, SimError>
    where
        F: FnMut(&mut Engine<A>, EventHandle, A) -> Result<(), SimError>,
    {
        let start = self.fired;
        while let Some((handle, action)) = self.pop_due(SimTime::MAX) {
            handler(self, handle, action)?;
        }
        Ok(EngineStats {
            events_fired: self.fired - start,
            final_time: self.now,
        })
    }
}
