use anyhow::{bail, Context, Result};

pub const SEED_ENV: &str = "ORTHO_GCONV_SEED";

/// Parses `7`, `0..9` (inclusive) or `1,4,9`; the forms may be mixed.
pub fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    let mut seeds = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = a.trim().parse().with_context(|| format!("bad seed range start in {part:?}"))?;
            let b: u64 = b.trim().parse().with_context(|| format!("bad seed range end in {part:?}"))?;
            if b < a {
                bail!("empty seed range {part:?}");
            }
            seeds.extend(a..=b);
        } else {
            seeds.push(part.parse().with_context(|| format!("bad seed {part:?}"))?);
        }
    }
    if seeds.is_empty() {
        bail!("no seeds in {spec:?}");
    }
    Ok(seeds)
}

/// Seed used when neither the flags nor the config name one.
pub fn default_seed() -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().with_context(|| format!("{SEED_ENV}={v:?} is not an integer")),
        Err(_) => Ok(0),
    }
}

pub fn parse_list<T: std::str::FromStr>(spec: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    spec.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<T>().map_err(|e| anyhow::anyhow!("bad {what} {p:?}: {e}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_are_inclusive() {
        assert_eq!(parse_seeds("0..3").unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(parse_seeds("5").unwrap(), vec![5]);
        assert_eq!(parse_seeds("1,4..5, 9").unwrap(), vec![1, 4, 5, 9]);
    }

    #[test]
    fn malformed_seeds_rejected() {
        assert!(parse_seeds("3..1").is_err());
        assert!(parse_seeds("x").is_err());
        assert!(parse_seeds("").is_err());
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list::<usize>("2,4, 8", "depth").unwrap(), vec![2, 4, 8]);
        assert!(parse_list::<usize>("2,a", "depth").is_err());
    }
}
