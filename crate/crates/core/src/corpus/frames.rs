/// Picks `k` key-frame indices out of `n_frames`.
///
/// With enough frames the picks are spread uniformly (`floor(i * n / k)`);
/// shorter clips are looped (`i mod n`).
pub fn sample_frame_indices(n_frames: usize, k: usize) -> crate::Result<Vec<usize>> {
    if n_frames == 0 {
        return Err(crate::Error::invalid("n_frames must be positive"));
    }
    if k == 0 {
        return Err(crate::Error::invalid("k must be positive"));
    }
    Ok(if n_frames >= k {
        (0..k).map(|i| i * n_frames / k).collect()
    } else {
        (0..k).map(|i| i % n_frames).collect()
    })
}
