//! Cell counting, retained-memory accounting and progress reporting.

use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

/// Progress sink, called with `(cells_processed, 2·M·N)`.
pub type ProgressFn<'a> = &'a (dyn Fn(u64, u64) + Sync);

/// Shared counters for one alignment job. All updates are atomic so the
/// recursion halves and within-diagonal workers can share one tracker.
pub(crate) struct Tracker<'a> {
    cells: AtomicU64,
    retained: AtomicUsize,
    peak_retained: AtomicUsize,
    backpointers: AtomicUsize,
    peak_backpointers: AtomicUsize,
    budget: u64,
    step: u64,
    last_report: AtomicU64,
    progress: Option<ProgressFn<'a>>,
}

impl<'a> Tracker<'a> {
    pub fn new(budget: u64, progress: Option<ProgressFn<'a>>) -> Self {
        Self {
            cells: AtomicU64::new(0),
            retained: AtomicUsize::new(0),
            peak_retained: AtomicUsize::new(0),
            backpointers: AtomicUsize::new(0),
            peak_backpointers: AtomicUsize::new(0),
            budget,
            step: (budget / 100).max(1),
            last_report: AtomicU64::new(0),
            progress,
        }
    }

    pub fn silent() -> Tracker<'static> {
        Tracker::new(0, None)
    }

    /// Adds evaluated cells and reports progress once at least 1% of the
    /// budget has accumulated since the previous report.
    pub fn add_cells(&self, n: u64) {
        let now = self.cells.fetch_add(n, Ordering::Relaxed) + n;
        let Some(report) = self.progress else { return };
        let last = self.last_report.load(Ordering::Relaxed);
        if now >= last + self.step
            && self
                .last_report
                .compare_exchange(last, now, Ordering::Relaxed, Ordering::Relaxed)
                .is_ok()
        {
            report(now, self.budget);
        }
    }

    pub fn finish(&self) {
        if let Some(report) = self.progress {
            report(self.cells(), self.budget);
        }
    }

    pub fn cells(&self) -> u64 {
        self.cells.load(Ordering::Relaxed)
    }

    pub fn peak_retained(&self) -> usize {
        self.peak_retained.load(Ordering::Relaxed)
    }

    pub fn peak_backpointers(&self) -> usize {
        self.peak_backpointers.load(Ordering::Relaxed)
    }

    /// Registers `n` accumulated/raw DP values as live until the guard drops.
    pub fn reserve(&self, n: usize) -> Reservation<'_, 'a> {
        bump(&self.retained, &self.peak_retained, n);
        Reservation { tracker: self, values: n, backpointers: 0 }
    }

    /// Registers `n` backpointer codes as live until the guard drops.
    pub fn reserve_backpointers(&self, n: usize) -> Reservation<'_, 'a> {
        bump(&self.backpointers, &self.peak_backpointers, n);
        Reservation { tracker: self, values: 0, backpointers: n }
    }
}

fn bump(current: &AtomicUsize, peak: &AtomicUsize, n: usize) {
    let now = current.fetch_add(n, Ordering::Relaxed) + n;
    peak.fetch_max(now, Ordering::Relaxed);
}

pub(crate) struct Reservation<'t, 'a> {
    tracker: &'t Tracker<'a>,
    values: usize,
    backpointers: usize,
}

impl Reservation<'_, '_> {
    /// Releases part of the reservation early.
    pub fn shrink_to(&mut self, values: usize) {
        debug_assert!(values <= self.values);
        self.tracker.retained.fetch_sub(self.values - values, Ordering::Relaxed);
        self.values = values;
    }
}

impl Drop for Reservation<'_, '_> {
    fn drop(&mut self) {
        self.tracker.retained.fetch_sub(self.values, Ordering::Relaxed);
        self.tracker.backpointers.fetch_sub(self.backpointers, Ordering::Relaxed);
    }
}
