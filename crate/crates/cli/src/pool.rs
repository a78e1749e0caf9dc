use anyhow::Result;
use rayon::prelude::*;

/// Maps `f` over `items` on `workers` threads; results keep input order.
pub fn run_indexed<T, R, F>(workers: usize, items: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if workers <= 1 {
        return Ok(items.iter().map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    Ok(pool.install(|| items.par_iter().map(f).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let items: Vec<u64> = (0..50).collect();
        let serial = run_indexed(1, &items, |x| x * x).unwrap();
        let parallel = run_indexed(4, &items, |x| x * x).unwrap();
        assert_eq!(serial, parallel);
    }
}
