use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::GenError;

const BUNDLED_CITIES: &str = include_str!("../../data/cities.txt");
const BUNDLED_MEDIA: &str = include_str!("../../data/media.txt");

/// City and media lists for the `"{City}, ({Media}) --"` prefix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrefixSpec {
    cities: Vec<String>,
    media: Vec<String>,
}

fn parse_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect()
}

impl PrefixSpec {
    pub fn new(cities: Vec<String>, media: Vec<String>) -> Result<Self, GenError> {
        if cities.is_empty() {
            return Err(GenError::EmptyList("city"));
        }
        if media.is_empty() {
            return Err(GenError::EmptyList("media"));
        }
        Ok(Self { cities, media })
    }

    pub fn bundled() -> Self {
        Self::new(parse_list(BUNDLED_CITIES), parse_list(BUNDLED_MEDIA)).expect("bundled lists are nonempty")
    }

    /// One entry per line; blank lines and `#` comments are skipped.
    pub fn from_files(cities: &Path, media: &Path) -> Result<Self, GenError> {
        let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| GenError::Io(format!("{}: {e}", p.display())));
        Self::new(parse_list(&read(cities)?), parse_list(&read(media)?))
    }

    pub fn cities(&self) -> &[String] {
        &self.cities
    }

    pub fn media(&self) -> &[String] {
        &self.media
    }
}

pub fn format_prefix(city: &str, media: &str) -> String {
    format!("{city}, ({media}) --")
}

/// Draws a city and a media name uniformly and fills the template.
pub fn render_prefix<R: Rng + ?Sized>(spec: &PrefixSpec, rng: &mut R) -> String {
    let city = &spec.cities[rng.random_range(0..spec.cities.len())];
    let media = &spec.media[rng.random_range(0..spec.media.len())];
    format_prefix(city, media)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_choice() {
        let spec = PrefixSpec::new(vec!["Seattle".into()], vec!["CNN".into()]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(render_prefix(&spec, &mut rng), "Seattle, (CNN) --");
    }

    #[test]
    fn replay_is_identical() {
        let spec = PrefixSpec::bundled();
        let a: Vec<String> = {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            (0..20).map(|_| render_prefix(&spec, &mut rng)).collect()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let b: Vec<String> = (0..20).map(|_| render_prefix(&spec, &mut rng)).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn two_by_two_is_uniform() {
        let spec = PrefixSpec::new(vec!["A".into(), "B".into()], vec!["X".into(), "Y".into()]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut counts = std::collections::HashMap::new();
        for _ in 0..10_000 {
            *counts.entry(render_prefix(&spec, &mut rng)).or_insert(0u32) += 1;
        }
        assert_eq!(counts.len(), 4);
        for c in counts.values() {
            assert!((*c as f64 / 10_000.0 - 0.25).abs() < 0.02);
        }
    }

    #[test]
    fn empty_lists_rejected() {
        assert_eq!(PrefixSpec::new(vec![], vec!["CNN".into()]), Err(GenError::EmptyList("city")));
        assert_eq!(PrefixSpec::new(vec!["A".into()], vec![]), Err(GenError::EmptyList("media")));
    }
}
