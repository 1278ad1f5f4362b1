//! Worker-count resolution. `QFLUID_THREADS` caps whatever `--jobs` asks for.

pub const THREADS_ENV: &str = "QFLUID_THREADS";

/// Effective worker count: the request (default 1), capped by the
/// environment variable when it holds a positive integer.
pub fn effective_jobs(requested: Option<usize>, env: Option<&str>) -> usize {
    let want = requested.unwrap_or(1).max(1);
    match env.and_then(|v| v.trim().parse::<usize>().ok()).filter(|&c| c > 0) {
        Some(cap) => want.min(cap),
        None => want,
    }
}

/// Reads the environment and sizes the global rayon pool to match.
pub fn configure(requested: Option<usize>) -> usize {
    let env = std::env::var(THREADS_ENV).ok();
    let jobs = effective_jobs(requested, env.as_deref());
    // A second call in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    jobs
}
