use super::Stream;

pub const DEFAULT_CAPACITY: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeviateKind {
    Uniform01,
    StdNormal,
}

/// A refillable block of pre-generated deviates.
///
/// The consumed sequence is the base stream in position order regardless of
/// capacity. A capacity of 1 is one-at-a-time generation.
#[derive(Debug, Clone)]
pub struct DeviateBuffer {
    kind: DeviateKind,
    stream: Stream,
    data: Vec<f64>,
    cursor: usize,
    next_pos: u64,
    refills: u64,
    generated: u64,
}

impl DeviateBuffer {
    /// Creates an empty buffer; the first `next` triggers the first refill.
    pub fn new(kind: DeviateKind, stream: Stream, capacity: usize) -> Self {
        let capacity = capacity.max(1);
        Self {
            kind,
            stream,
            data: vec![0.0; capacity],
            cursor: capacity,
            next_pos: 0,
            refills: 0,
            generated: 0,
        }
    }

    pub fn uniform(seed: u64, capacity: usize) -> Self {
        Self::new(DeviateKind::Uniform01, Stream::new(seed), capacity)
    }

    pub fn normal(seed: u64, capacity: usize) -> Self {
        Self::new(DeviateKind::StdNormal, Stream::new(seed), capacity)
    }

    pub fn kind(&self) -> DeviateKind {
        self.kind
    }
    pub fn capacity(&self) -> usize {
        self.data.len()
    }
    pub fn cursor(&self) -> usize {
        self.cursor
    }
    pub fn refills(&self) -> u64 {
        self.refills
    }
    pub fn remaining(&self) -> usize {
        self.data.len() - self.cursor
    }
    /// Deviates computed so far, including Box–Muller halves thrown away.
    pub fn generated(&self) -> u64 {
        self.generated
    }
    pub fn consumed(&self) -> u64 {
        self.next_pos - self.remaining() as u64
    }

    /// `(generated - consumed) / generated`, or 0 before the first refill.
    pub fn waste_fraction(&self) -> f64 {
        if self.generated == 0 {
            0.0
        } else {
            (self.generated - self.consumed()) as f64 / self.generated as f64
        }
    }

    /// Replaces the whole block with the next `capacity` deviates of the
    /// stream. Unconsumed values are skipped.
    #[inline(never)]
    pub fn refill(&mut self) {
        let start = self.next_pos;
        match self.kind {
            DeviateKind::Uniform01 => {
                self.stream.fill_uniform(start, &mut self.data);
                self.generated += self.data.len() as u64;
            }
            DeviateKind::StdNormal => {
                self.generated += self.stream.fill_normal(start, &mut self.data);
            }
        }
        self.next_pos += self.data.len() as u64;
        self.cursor = 0;
        self.refills += 1;
    }

    #[inline]
    #[allow(clippy::should_implement_trait)]
    pub fn next(&mut self) -> f64 {
        if self.cursor == self.data.len() {
            self.refill();
        }
        let v = self.data[self.cursor];
        self.cursor += 1;
        v
    }

    /// Copies the next `out.len()` deviates, refilling as needed.
    pub fn fill(&mut self, out: &mut [f64]) {
        let mut done = 0;
        while done < out.len() {
            if self.cursor == self.data.len() {
                self.refill();
            }
            let take = (out.len() - done).min(self.data.len() - self.cursor);
            out[done..done + take].copy_from_slice(&self.data[self.cursor..self.cursor + take]);
            self.cursor += take;
            done += take;
        }
    }
}
