//! Counting semaphore used to cap in-flight model requests and live Lean
//! processes.

use std::sync::{Condvar, Mutex};

#[derive(Debug)]
pub struct Semaphore {
    state: Mutex<State>,
    cond: Condvar,
}

#[derive(Debug)]
struct State {
    available: usize,
    live: usize,
    peak: usize,
}

impl Semaphore {
    /// A semaphore with `permits` slots. Zero is treated as one.
    pub fn new(permits: usize) -> Self {
        Self {
            state: Mutex::new(State {
                available: permits.max(1),
                live: 0,
                peak: 0,
            }),
            cond: Condvar::new(),
        }
    }

    /// Blocks until a slot is free.
    pub fn acquire(&self) -> Permit<'_> {
        let mut state = self.state.lock().unwrap_or_else(|e| e.into_inner());
        while state.available == 0 {
            state = self.cond.wait(state).unwrap_or_else(|e| e.into_inner());
        }
        state.available -= 1;
        state.live += 1;
        state.peak = state.peak.max(state.live);
        Permit { sem: self }
    }

    /// Highest number of simultaneously held permits observed so far.
    pub fn peak(&self) -> usize {
        self.state.lock().unwrap_or_else(|e| e.into_inner()).peak
    }

    pub fn live(&self) -> usize {
        self.state.lock().unwrap_or_else(|e| e.into_inner()).live
    }

    fn release(&self) {
        let mut state = self.state.lock().unwrap_or_else(|e| e.into_inner());
        state.available += 1;
        state.live -= 1;
        drop(state);
        self.cond.notify_one();
    }
}

/// RAII guard returned by [`Semaphore::acquire`].
#[derive(Debug)]
pub struct Permit<'a> {
    sem: &'a Semaphore,
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        self.sem.release();
    }
}
