use std::ops::Range;

/// Splits `0..n` into `workers` contiguous chunks, runs `job` on each and
/// returns the results in worker order.
///
/// With one worker the job runs on the calling thread, which keeps this usable
/// where threads are unavailable.
pub fn fan_out<T, F>(n: u64, workers: usize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<u64>) -> T + Sync,
{
    let workers = workers.max(1) as u64;
    let chunk = |w: u64| (w * n / workers)..((w + 1) * n / workers);
    if workers == 1 {
        return vec![job(0..n)];
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let job = &job;
                scope.spawn(move || job(chunk(w)))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    })
}
