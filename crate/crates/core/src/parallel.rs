//! Worker pool for embarrassingly parallel studies.

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "MTDC_STAB_THREADS";

/// Runs `f` on a pool sized by [`THREADS_ENV`] (all cores when unset or
/// invalid).
pub fn install<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    let n = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0);
    match n.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}
