//! Training order for the unrolled cortical-loop grid.

/// All cells `(instance, layer)` with `instance <= layer`, ordered by
/// ascending `instance + layer` with ties broken by ascending instance.
///
/// Cells with `instance > layer` never train: their feedforward, bias and
/// label tensors are the shared ones, trained through other cells, and their
/// feedback weights stay at initialization.
pub fn ffcl_schedule(unroll: usize, layers: usize) -> Vec<(usize, usize)> {
    let mut cells: Vec<(usize, usize)> = (0..unroll)
        .flat_map(|n| (0..layers).map(move |l| (n, l)))
        .filter(|&(n, l)| n <= l)
        .collect();
    cells.sort_by_key(|&(n, l)| (n + l, n));
    cells
}
