use std::sync::Mutex;
use std::time::{Duration, Instant};

/// Time source for telemetry and retry backoff.
pub trait Clock: Send + Sync {
    /// Seconds since an arbitrary epoch.
    fn now(&self) -> f64;
    fn sleep(&self, seconds: f64);
}

#[derive(Debug)]
pub struct SystemClock {
    start: Instant,
}

impl SystemClock {
    pub fn new() -> SystemClock {
        SystemClock { start: Instant::now() }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        SystemClock::new()
    }
}

impl Clock for SystemClock {
    fn now(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    fn sleep(&self, seconds: f64) {
        if seconds > 0.0 {
            std::thread::sleep(Duration::from_secs_f64(seconds));
        }
    }
}

/// Virtual time: every `now()` advances by `tick`, `sleep` advances instantly.
#[derive(Debug)]
pub struct ManualClock {
    t: Mutex<f64>,
    tick: f64,
}

impl ManualClock {
    pub fn new(tick: f64) -> ManualClock {
        ManualClock {
            t: Mutex::new(0.0),
            tick,
        }
    }
}

impl Clock for ManualClock {
    fn now(&self) -> f64 {
        let mut t = self.t.lock().expect("clock");
        let v = *t;
        *t += self.tick;
        v
    }

    fn sleep(&self, seconds: f64) {
        *self.t.lock().expect("clock") += seconds.max(0.0);
    }
}
