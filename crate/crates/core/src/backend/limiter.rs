//! Client-side throttling: a sliding-window rate limiter and a counting
//! semaphore, both blocking. Time is injected through [`Clock`] so the
//! limiter's behavior is testable without real sleeps.

use std::collections::VecDeque;
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

/// Monotonic time source. `now` is measured from an arbitrary origin.
pub trait Clock: Send + Sync {
    fn now(&self) -> Duration;
    fn sleep(&self, duration: Duration);
}

/// Wall-clock implementation used outside tests.
pub struct SystemClock {
    origin: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        SystemClock { origin: Instant::now() }
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

    fn sleep(&self, duration: Duration) {
        std::thread::sleep(duration);
    }
}

/// Virtual clock for tests: `sleep` advances time instead of blocking.
pub struct TestClock {
    now: Mutex<Duration>,
}

impl TestClock {
    pub fn new() -> Self {
        TestClock { now: Mutex::new(Duration::ZERO) }
    }
}

impl Default for TestClock {
    fn default() -> Self {
        TestClock::new()
    }
}

impl Clock for TestClock {
    fn now(&self) -> Duration {
        *self.now.lock().expect("clock poisoned")
    }

    fn sleep(&self, duration: Duration) {
        *self.now.lock().expect("clock poisoned") += duration;
    }
}

/// Admits at most `max_requests` acquisitions in any window of `window`
/// length, blocking callers until a slot frees up.
pub struct RateLimiter {
    clock: Arc<dyn Clock>,
    max_requests: usize,
    window: Duration,
    admitted: Mutex<VecDeque<Duration>>,
}

impl RateLimiter {
    pub fn new(clock: Arc<dyn Clock>, max_requests: usize, window: Duration) -> Self {
        assert!(max_requests > 0, "rate limit must admit at least one request");
        assert!(!window.is_zero(), "rate window must be non-zero");
        RateLimiter {
            clock,
            max_requests,
            window,
            admitted: Mutex::new(VecDeque::new()),
        }
    }

    /// Block until a slot is free, then record and return the admission time.
    pub fn acquire(&self) -> Duration {
        loop {
            let now = self.clock.now();
            let wait = {
                let mut admitted = self.admitted.lock().expect("limiter poisoned");
                while admitted
                    .front()
                    .is_some_and(|t| *t + self.window <= now)
                {
                    admitted.pop_front();
                }
                if admitted.len() < self.max_requests {
                    admitted.push_back(now);
                    return now;
                }
                *admitted.front().expect("window is full") + self.window - now
            };
            self.clock.sleep(wait.max(Duration::from_millis(1)));
        }
    }
}

/// Counting semaphore bounding in-flight work. Permits release on drop.
pub struct Semaphore {
    available: Mutex<usize>,
    freed: Condvar,
}

pub struct Permit<'s> {
    semaphore: &'s Semaphore,
}

impl Semaphore {
    pub fn new(permits: usize) -> Self {
        assert!(permits > 0, "semaphore needs at least one permit");
        Semaphore { available: Mutex::new(permits), freed: Condvar::new() }
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut available = self.available.lock().expect("semaphore poisoned");
        while *available == 0 {
            available = self.freed.wait(available).expect("semaphore poisoned");
        }
        *available -= 1;
        Permit { semaphore: self }
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut available = self.semaphore.available.lock().expect("semaphore poisoned");
        *available += 1;
        self.semaphore.freed.notify_one();
    }
}
