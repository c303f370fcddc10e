//! 64-slot sliding anti-replay window.

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum ReplayError {
    #[error("sequence number {0} already received")]
    Duplicate(u32),
    #[error("sequence number {0} is left of the window")]
    TooOld(u32),
    #[error("sequence number 0 is never sent")]
    Zero,
}

pub const WINDOW_SIZE: u32 = 64;

/// Bit `i` of `bitmap` records whether `highest - i` has been accepted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReplayWindow {
    pub highest_seq: u32,
    pub bitmap: u64,
}

impl ReplayWindow {
    pub fn new() -> Self {
        Self::default()
    }

    /// Checks without recording; callers update only after the ICV verifies.
    pub fn check(&self, seq: u32) -> Result<(), ReplayError> {
        if seq == 0 {
            return Err(ReplayError::Zero);
        }
        if seq > self.highest_seq {
            return Ok(());
        }
        let offset = self.highest_seq - seq;
        if offset >= WINDOW_SIZE {
            return Err(ReplayError::TooOld(seq));
        }
        if self.bitmap & (1 << offset) != 0 {
            return Err(ReplayError::Duplicate(seq));
        }
        Ok(())
    }

    pub fn update(&mut self, seq: u32) {
        if seq > self.highest_seq {
            let shift = seq - self.highest_seq;
            self.bitmap = if shift >= WINDOW_SIZE { 0 } else { self.bitmap << shift };
            self.bitmap |= 1;
            self.highest_seq = seq;
        } else {
            self.bitmap |= 1 << (self.highest_seq - seq);
        }
    }

    pub fn accept(&mut self, seq: u32) -> Result<(), ReplayError> {
        self.check(seq)?;
        self.update(seq);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    /// Reference model: remembers everything and applies the window rule directly.
    fn model_accepts(seen: &HashSet<u32>, highest: u32, seq: u32) -> bool {
        seq != 0 && !seen.contains(&seq) && (seq > highest || highest - seq < WINDOW_SIZE)
    }

    #[test]
    fn basics() {
        let mut w = ReplayWindow::new();
        assert_eq!(w.accept(0), Err(ReplayError::Zero));
        w.accept(1).unwrap();
        assert_eq!(w.accept(1), Err(ReplayError::Duplicate(1)));
        w.accept(100).unwrap();
        w.accept(37).unwrap();
        assert_eq!(w.accept(36), Err(ReplayError::TooOld(36)));
        assert_eq!(w.accept(37), Err(ReplayError::Duplicate(37)));
        w.accept(99).unwrap();
    }

    #[test]
    fn matches_model_on_pseudo_random_schedules() {
        let mut s = 0x1234_5678u32;
        for _ in 0..200 {
            let mut w = ReplayWindow::new();
            let mut seen = HashSet::new();
            let mut highest = 0u32;
            for _ in 0..300 {
                s ^= s << 13;
                s ^= s >> 17;
                s ^= s << 5;
                let seq = (highest + 8).saturating_sub(s % 90);
                let expect = model_accepts(&seen, highest, seq);
                assert_eq!(w.accept(seq).is_ok(), expect, "seq {seq} highest {highest}");
                if expect {
                    seen.insert(seq);
                    highest = highest.max(seq);
                }
            }
        }
    }
}
