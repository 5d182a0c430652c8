//! Data-parallel helpers with a sequential fallback.
//!
//! Every kernel that fans out over independent rows (determinant strings,
//! RDM index pairs, output subsets) goes through [`map_range`]. With the
//! `parallel` feature the work is distributed by rayon; without it, or when
//! [`Execution::Sequential`] is requested, the same closure runs in a plain
//! loop. Results are always collected in index order, so reductions that
//! follow are bit-identical between the two paths.

/// How a kernel should schedule its independent work items.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Falls back to sequential when the crate is built without `parallel`.
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Evaluate `f(0..n)` and collect the results in order.
pub fn map_range<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Fill `out[i] = f(i)` for every slot.
pub fn fill_indexed<T, F>(exec: Execution, out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        out.par_iter_mut().enumerate().for_each(|(i, slot)| *slot = f(i));
        return;
    }
    let _ = exec;
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = f(i);
    }
}

/// Run `f(chunk_index, chunk)` over consecutive mutable chunks of `out`.
pub fn for_each_chunk_mut<T, F>(exec: Execution, out: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        out.par_chunks_mut(chunk)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
        return;
    }
    let _ = exec;
    for (i, c) in out.chunks_mut(chunk).enumerate() {
        f(i, c);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_paths_agree() {
        let f = |i: usize| (i as f64).sqrt().sin();
        let a = map_range(Execution::Sequential, 1000, f);
        let b = map_range(Execution::Parallel, 1000, f);
        assert_eq!(a, b);

        let mut x = vec![0.0; 37];
        let mut y = vec![0.0; 37];
        fill_indexed(Execution::Sequential, &mut x, f);
        fill_indexed(Execution::Parallel, &mut y, f);
        assert_eq!(x, y);

        let mut z = vec![0usize; 10];
        for_each_chunk_mut(Execution::Parallel, &mut z, 3, |ci, c| {
            for v in c.iter_mut() {
                *v = ci;
            }
        });
        assert_eq!(z, vec![0, 0, 0, 1, 1, 1, 2, 2, 2, 3]);
    }
}
