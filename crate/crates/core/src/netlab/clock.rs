use std::cell::Cell;
use std::time::{Duration, Instant};

/// Monotonic nanosecond clock shared by every endpoint of a lab.
///
/// Time the host spends past a wait target (preemption, sleep overshoot) is
/// cut out of the lab timeline, so scheduled instants are hit exactly. Work
/// done between waits still advances the clock at wall-clock rate.
#[derive(Debug, Clone)]
pub struct Clock {
    origin: Instant,
    stalled: Cell<u64>,
}

impl Default for Clock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock {
    pub fn new() -> Self {
        Self { origin: Instant::now(), stalled: Cell::new(0) }
    }

    pub fn now_ns(&self) -> u64 {
        self.origin.elapsed().as_nanos() as u64 - self.stalled.get()
    }

    /// Total host time excluded from the timeline so far.
    pub fn stalled_ns(&self) -> u64 {
        self.stalled.get()
    }

    /// Blocks until `ns`. Sleeps while far away, then spins for the final
    /// stretch, since thread sleeps overshoot by tens of microseconds.
    pub fn wait_until(&self, ns: u64) {
        const SPIN_NS: u64 = 200_000;
        if self.now_ns() >= ns {
            return;
        }
        loop {
            let now = self.now_ns();
            if now >= ns {
                self.stalled.set(self.stalled.get() + (now - ns));
                return;
            }
            let left = ns - now;
            if left > SPIN_NS {
                std::thread::sleep(Duration::from_nanos(left - SPIN_NS));
            } else {
                std::hint::spin_loop();
            }
        }
    }
}
