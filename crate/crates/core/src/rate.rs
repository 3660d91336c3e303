//! Politeness delays between requests to one endpoint.
//!
//! A [`RateLimiter`] is a single serialized gate: callers queue on it and
//! each request after the first waits a delay drawn uniformly from the
//! policy's `[min_delay, max_delay]`. Time is read through a [`Clock`] so
//! tests can run hours of simulated traffic instantly with [`VirtualClock`].

use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub trait Clock: Send + Sync {
    /// Elapsed time since the clock was created.
    fn now(&self) -> Duration;
    fn sleep(&self, d: Duration);
}

#[derive(Debug)]
pub struct SystemClock {
    origin: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        SystemClock {
            origin: Instant::now(),
        }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        SystemClock::new()
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }

    fn sleep(&self, d: Duration) {
        std::thread::sleep(d);
    }
}

/// Clock whose `sleep` advances simulated time without blocking.
#[derive(Debug, Default)]
pub struct VirtualClock {
    now: Mutex<Duration>,
}

impl VirtualClock {
    pub fn new() -> Self {
        VirtualClock::default()
    }

    pub fn advance(&self, d: Duration) {
        *self.now.lock().expect("clock poisoned") += d;
    }
}

impl Clock for VirtualClock {
    fn now(&self) -> Duration {
        *self.now.lock().expect("clock poisoned")
    }

    fn sleep(&self, d: Duration) {
        self.advance(d);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolicyError {
    #[error("min_delay {min:?} exceeds max_delay {max:?}")]
    Inverted { min: Duration, max: Duration },
}

/// Inter-request delay drawn uniformly from `[min_delay, max_delay]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateLimitPolicy {
    #[serde(with = "secs")]
    pub min_delay: Duration,
    #[serde(with = "secs")]
    pub max_delay: Duration,
}

impl RateLimitPolicy {
    pub fn new(min_delay: Duration, max_delay: Duration) -> Result<Self, PolicyError> {
        if min_delay > max_delay {
            return Err(PolicyError::Inverted {
                min: min_delay,
                max: max_delay,
            });
        }
        Ok(RateLimitPolicy {
            min_delay,
            max_delay,
        })
    }

    pub fn fixed(delay: Duration) -> Self {
        RateLimitPolicy {
            min_delay: delay,
            max_delay: delay,
        }
    }

    /// 8–11 s between CDX page requests.
    pub fn cdx_default() -> Self {
        RateLimitPolicy {
            min_delay: Duration::from_secs(8),
            max_delay: Duration::from_secs(11),
        }
    }

    /// One provenance lookup every 15 s.
    pub fn provenance_default() -> Self {
        RateLimitPolicy::fixed(Duration::from_secs(15))
    }

    pub fn unlimited() -> Self {
        RateLimitPolicy::fixed(Duration::ZERO)
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        RateLimitPolicy::new(self.min_delay, self.max_delay).map(|_| ())
    }

    pub fn draw(&self, rng: &mut impl Rng) -> Duration {
        if self.min_delay >= self.max_delay {
            return self.min_delay;
        }
        let lo = self.min_delay.as_secs_f64();
        let hi = self.max_delay.as_secs_f64();
        Duration::from_secs_f64(rng.random_range(lo..=hi)).clamp(self.min_delay, self.max_delay)
    }
}

pub mod secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let v = f64::deserialize(d)?;
        if !v.is_finite() || v < 0.0 {
            return Err(serde::de::Error::custom("delay must be a non-negative number of seconds"));
        }
        Ok(Duration::from_secs_f64(v))
    }
}

struct GateState {
    last: Option<Duration>,
    rng: ChaCha8Rng,
}

/// Serialized politeness gate for one endpoint.
pub struct RateLimiter {
    policy: RateLimitPolicy,
    clock: Arc<dyn Clock>,
    state: Mutex<GateState>,
}

impl std::fmt::Debug for RateLimiter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RateLimiter")
            .field("policy", &self.policy)
            .finish_non_exhaustive()
    }
}

impl RateLimiter {
    pub fn new(policy: RateLimitPolicy, clock: Arc<dyn Clock>, seed: u64) -> Self {
        RateLimiter {
            policy,
            clock,
            state: Mutex::new(GateState {
                last: None,
                rng: ChaCha8Rng::seed_from_u64(seed),
            }),
        }
    }

    pub fn policy(&self) -> RateLimitPolicy {
        self.policy
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    /// Blocks until the next request may be sent and returns the drawn delay
    /// (zero for the first request through the gate).
    pub fn acquire(&self) -> Duration {
        let mut state = self.state.lock().expect("rate gate poisoned");
        let drawn = match state.last {
            None => Duration::ZERO,
            Some(last) => {
                let delay = self.policy.draw(&mut state.rng);
                let ready_at = last + delay;
                let now = self.clock.now();
                if ready_at > now {
                    self.clock.sleep(ready_at - now);
                }
                delay
            }
        };
        state.last = Some(self.clock.now());
        drawn
    }

    /// Draws a delay without passing through the gate (used for retry backoff).
    pub fn draw(&self) -> Duration {
        let mut state = self.state.lock().expect("rate gate poisoned");
        self.policy.draw(&mut state.rng)
    }
}
