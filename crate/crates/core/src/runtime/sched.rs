use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_LAG: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchedulerPolicy {
    RoundRobin,
    Random {
        seed: u64,
    },
    /// Activation counts never drift more than `bound` apart.
    AdversarialLag {
        bound: u32,
        seed: u64,
    },
}

impl SchedulerPolicy {
    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            SchedulerPolicy::RoundRobin => SchedulerPolicy::RoundRobin,
            SchedulerPolicy::Random { .. } => SchedulerPolicy::Random { seed },
            SchedulerPolicy::AdversarialLag { bound, .. } => SchedulerPolicy::AdversarialLag { bound, seed },
        }
    }
}

impl fmt::Display for SchedulerPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchedulerPolicy::RoundRobin => f.write_str("round_robin"),
            SchedulerPolicy::Random { .. } => f.write_str("random"),
            SchedulerPolicy::AdversarialLag { bound, .. } => write!(f, "adversarial:{bound}"),
        }
    }
}

impl FromStr for SchedulerPolicy {
    type Err = String;

    /// Seeds default to 0; use [`SchedulerPolicy::with_seed`].
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "round_robin" | "rr" => Ok(SchedulerPolicy::RoundRobin),
            "random" => Ok(SchedulerPolicy::Random { seed: 0 }),
            "adversarial" | "adversarial_lag" => Ok(SchedulerPolicy::AdversarialLag { bound: DEFAULT_LAG, seed: 0 }),
            _ => {
                let rest = s
                    .strip_prefix("adversarial:")
                    .or_else(|| s.strip_prefix("adversarial_lag:"))
                    .ok_or_else(|| format!("unknown scheduler `{s}`"))?;
                let bound: u32 = rest.parse().map_err(|_| format!("bad lag bound `{rest}`"))?;
                if bound == 0 {
                    return Err("lag bound must be positive".into());
                }
                Ok(SchedulerPolicy::AdversarialLag { bound, seed: 0 })
            }
        }
    }
}

pub(crate) enum Scheduler {
    RoundRobin { next: usize, k: usize },
    Random { rng: ChaCha8Rng, k: usize },
    Lag(LagScheduler),
}

impl Scheduler {
    pub(crate) fn new(policy: SchedulerPolicy, k: usize) -> Self {
        match policy {
            SchedulerPolicy::RoundRobin => Scheduler::RoundRobin { next: 0, k },
            SchedulerPolicy::Random { seed } => Scheduler::Random { rng: ChaCha8Rng::seed_from_u64(seed), k },
            SchedulerPolicy::AdversarialLag { bound, seed } => Scheduler::Lag(LagScheduler::new(k, bound.max(1), seed)),
        }
    }

    pub(crate) fn pick(&mut self) -> usize {
        match self {
            Scheduler::RoundRobin { next, k } => {
                let i = *next;
                *next = (i + 1) % *k;
                i
            }
            Scheduler::Random { rng, k } => rng.gen_range(0..*k),
            Scheduler::Lag(l) => l.pick(),
        }
    }
}

/// Picks among agents whose activation count is below `min + bound`,
/// repeating the previous pick half of the time.
pub(crate) struct LagScheduler {
    rng: ChaCha8Rng,
    bound: usize,
    /// `buckets[d]` holds agents with count `min + d`.
    buckets: VecDeque<Vec<usize>>,
    offset: Vec<usize>,
    slot: Vec<usize>,
    eligible: Vec<usize>,
    eligible_slot: Vec<usize>,
    last: Option<usize>,
}

const NOT_ELIGIBLE: usize = usize::MAX;

impl LagScheduler {
    fn new(k: usize, bound: u32, seed: u64) -> Self {
        let bound = bound as usize;
        let mut buckets: VecDeque<Vec<usize>> = (0..=bound).map(|_| Vec::new()).collect();
        buckets[0] = (0..k).collect();
        LagScheduler {
            rng: ChaCha8Rng::seed_from_u64(seed),
            bound,
            buckets,
            offset: vec![0; k],
            slot: (0..k).collect(),
            eligible: (0..k).collect(),
            eligible_slot: (0..k).collect(),
            last: None,
        }
    }

    fn bucket_remove(&mut self, i: usize) {
        let d = self.offset[i];
        let s = self.slot[i];
        let b = &mut self.buckets[d];
        b.swap_remove(s);
        if s < b.len() {
            let moved = b[s];
            self.slot[moved] = s;
        }
    }

    fn bucket_push(&mut self, i: usize, d: usize) {
        self.offset[i] = d;
        self.slot[i] = self.buckets[d].len();
        self.buckets[d].push(i);
    }

    fn eligible_remove(&mut self, i: usize) {
        let s = self.eligible_slot[i];
        self.eligible.swap_remove(s);
        if s < self.eligible.len() {
            let moved = self.eligible[s];
            self.eligible_slot[moved] = s;
        }
        self.eligible_slot[i] = NOT_ELIGIBLE;
    }

    fn eligible_push(&mut self, i: usize) {
        self.eligible_slot[i] = self.eligible.len();
        self.eligible.push(i);
    }

    fn pick(&mut self) -> usize {
        let i = match self.last {
            Some(l) if self.eligible_slot[l] != NOT_ELIGIBLE && self.rng.gen_bool(0.5) => l,
            _ => self.eligible[self.rng.gen_range(0..self.eligible.len())],
        };
        self.last = Some(i);
        let d = self.offset[i];
        self.bucket_remove(i);
        self.bucket_push(i, d + 1);
        if d + 1 == self.bound {
            self.eligible_remove(i);
        }
        while self.buckets[0].is_empty() {
            self.buckets.pop_front();
            self.buckets.push_back(Vec::new());
            for d in 0..self.buckets.len() {
                for j in 0..self.buckets[d].len() {
                    let a = self.buckets[d][j];
                    self.offset[a] = d;
                }
            }
            let fresh: Vec<usize> = self.buckets[self.bound - 1].clone();
            for a in fresh {
                if self.eligible_slot[a] == NOT_ELIGIBLE {
                    self.eligible_push(a);
                }
            }
        }
        i
    }
}
