use std::time::{Duration, Instant};

use crate::error::{Error, Result};

/// Resource bounds shared by every potentially expensive query.
#[derive(Debug, Clone, Copy)]
pub struct Limits {
    /// Maximum number of automaton transitions a saturation may create.
    pub max_transitions: usize,
    /// Maximum number of explicit positions/configurations an exploration may visit.
    pub max_positions: usize,
    /// Maximum stack height an explicit exploration may build.
    pub max_stack: usize,
    pub timeout: Option<Duration>,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_transitions: 10_000_000,
            max_positions: 5_000_000,
            max_stack: 100_000,
            timeout: Some(Duration::from_secs(60)),
        }
    }
}

impl Limits {
    pub fn unlimited() -> Self {
        Limits {
            max_transitions: usize::MAX,
            max_positions: usize::MAX,
            max_stack: usize::MAX,
            timeout: None,
        }
    }

    pub fn start(&self) -> Budget {
        Budget {
            limits: *self,
            deadline: self.timeout.map(|t| Instant::now() + t),
            ticks: 0,
        }
    }
}

/// Running meter for one query.
#[derive(Debug, Clone)]
pub struct Budget {
    limits: Limits,
    deadline: Option<Instant>,
    ticks: u32,
}

impl Budget {
    pub fn limits(&self) -> &Limits {
        &self.limits
    }

    /// Cheap periodic check of the wall-clock deadline.
    pub fn tick(&mut self) -> Result<()> {
        self.ticks = self.ticks.wrapping_add(1);
        if self.ticks.is_multiple_of(1024) {
            if let Some(d) = self.deadline {
                if Instant::now() > d {
                    return Err(Error::ResourceLimit("wall-clock timeout".into()));
                }
            }
        }
        Ok(())
    }

    pub fn check_transitions(&self, n: usize) -> Result<()> {
        if n > self.limits.max_transitions {
            return Err(Error::ResourceLimit(format!(
                "more than {} saturation transitions",
                self.limits.max_transitions
            )));
        }
        Ok(())
    }

    pub fn check_positions(&self, n: usize) -> Result<()> {
        if n > self.limits.max_positions {
            return Err(Error::ResourceLimit(format!(
                "more than {} explored positions",
                self.limits.max_positions
            )));
        }
        Ok(())
    }

    pub fn check_stack(&self, height: usize) -> Result<()> {
        if height > self.limits.max_stack {
            return Err(Error::ResourceLimit(format!(
                "stack height exceeds {}",
                self.limits.max_stack
            )));
        }
        Ok(())
    }
}
