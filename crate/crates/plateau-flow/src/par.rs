//! Deterministic chunked parallelism for per-triangle kernels.
//!
//! Work is split into fixed-size chunks (independent of the worker count), so
//! per-element outputs are bitwise identical for any number of workers; any
//! reductions are performed afterwards in index order by the caller. The
//! worker count comes from `PLATEAU_FLOW_THREADS`, capped by the machine,
//! and defaults to 1.

const CHUNK: usize = 4096;

/// Worker count: `min(PLATEAU_FLOW_THREADS, available parallelism)`, >= 1.
pub fn worker_count() -> usize {
    let requested = std::env::var("PLATEAU_FLOW_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(1)
        .max(1);
    let avail = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    requested.min(avail)
}

/// Apply `kernel(start_index, chunk)` over `out` split into fixed chunks.
pub fn for_chunks<T, F>(out: &mut [T], kernel: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync,
{
    let workers = worker_count();
    if workers <= 1 || out.len() <= CHUNK {
        for (c, chunk) in out.chunks_mut(CHUNK).enumerate() {
            kernel(c * CHUNK, chunk);
        }
        return;
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let chunks: Vec<(usize, &mut [T])> = {
        let mut v = Vec::new();
        for (c, chunk) in out.chunks_mut(CHUNK).enumerate() {
            v.push((c * CHUNK, chunk));
        }
        v
    };
    let chunks = std::sync::Mutex::new(chunks.into_iter().map(Some).collect::<Vec<_>>());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                let job = {
                    let mut guard = chunks.lock().unwrap();
                    if idx >= guard.len() {
                        return;
                    }
                    guard[idx].take()
                };
                match job {
                    Some((start, chunk)) => kernel(start, chunk),
                    None => return,
                }
            });
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunked_fill_matches_serial() {
        let mut a = vec![0.0f64; 10_000];
        for_chunks(&mut a, |start, chunk| {
            for (k, v) in chunk.iter_mut().enumerate() {
                *v = ((start + k) as f64).sin();
            }
        });
        for (i, v) in a.iter().enumerate() {
            assert_eq!(*v, (i as f64).sin());
        }
    }
}
