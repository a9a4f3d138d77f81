//! Deterministic work partitioning.
//!
//! Work is split into fixed consecutive chunks whose boundaries do not
//! depend on the worker count; each chunk is computed by exactly one
//! thread and partial results are combined in chunk order.  Every solver
//! therefore produces bit-identical output for any thread count.

/// Worker count from the `TWOBSDE_THREADS` environment variable; defaults
/// to 1 (fully sequential).
pub fn threads_from_env() -> usize {
    std::env::var("TWOBSDE_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1)
}

/// Split `data` into consecutive chunks of `chunk_len` and run
/// `f(start_index, chunk)` over them on up to `threads` workers.
///
/// `f` must be a pure function of the start index and its chunk, so the
/// outcome is independent of the worker count.
pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk_len: usize, threads: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync,
{
    assert!(chunk_len > 0);
    if threads <= 1 || data.len() <= chunk_len {
        for (ci, chunk) in data.chunks_mut(chunk_len).enumerate() {
            f(ci * chunk_len, chunk);
        }
        return;
    }
    let workers = threads.min(data.len().div_ceil(chunk_len));
    let mut buckets: Vec<Vec<(usize, &mut [T])>> = (0..workers).map(|_| Vec::new()).collect();
    for (ci, chunk) in data.chunks_mut(chunk_len).enumerate() {
        buckets[ci % workers].push((ci * chunk_len, chunk));
    }
    std::thread::scope(|scope| {
        for bucket in buckets {
            let f = &f;
            scope.spawn(move || {
                for (start, chunk) in bucket {
                    f(start, chunk);
                }
            });
        }
    });
}

/// Evaluate `map(chunk_index)` for `n_chunks` chunks on up to `threads`
/// workers and return the results in chunk order.
pub fn map_chunks<R, F>(n_chunks: usize, threads: usize, map: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync,
{
    if threads <= 1 || n_chunks <= 1 {
        return (0..n_chunks).map(map).collect();
    }
    let workers = threads.min(n_chunks);
    let mut out: Vec<Option<R>> = (0..n_chunks).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|t| {
                let map = &map;
                scope.spawn(move || {
                    let mut acc = Vec::new();
                    let mut i = t;
                    while i < n_chunks {
                        acc.push((i, map(i)));
                        i += workers;
                    }
                    acc
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("worker panicked") {
                out[i] = Some(r);
            }
        }
    });
    out.into_iter().map(|r| r.expect("chunk computed")).collect()
}
