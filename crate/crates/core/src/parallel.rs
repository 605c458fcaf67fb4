use std::sync::OnceLock;

use rayon::{ThreadPool, ThreadPoolBuilder};

/// Runs `f` on a pool capped by `OPACK_THREADS` when set, else on rayon's global pool.
pub(crate) fn with_pool<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    static POOL: OnceLock<Option<ThreadPool>> = OnceLock::new();
    let pool = POOL.get_or_init(|| {
        let n: usize = std::env::var("OPACK_THREADS").ok()?.trim().parse().ok()?;
        ThreadPoolBuilder::new().num_threads(n.max(1)).build().ok()
    });
    match pool {
        Some(p) => p.install(f),
        None => f(),
    }
}
