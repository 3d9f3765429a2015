//! On-disk cache of distance-count tables.
//!
//! One file per `(n, provenance)`:
//!
//! ```text
//! n 5 provenance exact
//! 0 0.0000000000000000e0 1
//! 2 1.3862943611198906e0 4
//! ...
//! ```
//!
//! Each body line holds the distance, `log N_d` to 17 significant digits and,
//! for exact tables, the integer count.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::counts::{table_len, DistanceDistribution, Provenance};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct CountsCache {
    dir: PathBuf,
}

impl CountsCache {
    pub fn new(dir: impl AsRef<Path>) -> Self {
        CountsCache { dir: dir.as_ref().to_path_buf() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, n: usize, provenance: Provenance) -> PathBuf {
        self.dir.join(format!("spearman_counts_n{n}_{}.txt", provenance.as_str()))
    }

    /// Returns `None` when no file exists for `(n, provenance)`.
    pub fn load(&self, n: usize, provenance: Provenance) -> Result<Option<DistanceDistribution>> {
        let path = self.path_for(n, provenance);
        match fs::read_to_string(&path) {
            Ok(text) => parse_table(&text, &path).map(Some),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// Writes through a temporary file and a rename so readers never see a
    /// partial table.
    pub fn store(&self, dist: &DistanceDistribution) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir)?;
        let path = self.path_for(dist.n(), dist.provenance());
        let tmp = self.dir.join(format!(
            ".{}.{}.tmp",
            path.file_name().and_then(|s| s.to_str()).unwrap_or("table"),
            std::process::id()
        ));
        {
            let mut file = fs::File::create(&tmp)?;
            file.write_all(format_table(dist).as_bytes())?;
            file.sync_all()?;
        }
        fs::rename(&tmp, &path)?;
        Ok(path)
    }
}

pub fn format_table(dist: &DistanceDistribution) -> String {
    let mut out = format!("n {} provenance {}\n", dist.n(), dist.provenance().as_str());
    for (h, lc) in dist.log_counts().iter().enumerate() {
        let d = dist.distance(h);
        match dist.exact_counts() {
            Some(c) => out.push_str(&format!("{d} {lc:.16e} {}\n", c[h])),
            None => out.push_str(&format!("{d} {lc:.16e}\n")),
        }
    }
    out
}

pub fn parse_table(text: &str, path: &Path) -> Result<DistanceDistribution> {
    let err = |line: usize, message: String| Error::Parse { path: path.to_path_buf(), line, message };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| err(1, "empty cache file".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (n, provenance) = match fields.as_slice() {
        ["n", n, "provenance", p] => {
            let n: usize = n.parse().map_err(|_| err(1, format!("bad item count {n:?}")))?;
            let p = match *p {
                "exact" => Provenance::Exact,
                "approx" => Provenance::Approximate,
                other => return Err(err(1, format!("unknown provenance {other:?}"))),
            };
            (n, p)
        }
        _ => return Err(err(1, format!("malformed header {header:?}"))),
    };
    if n < 2 {
        return Err(err(1, format!("item count {n} below 2")));
    }
    let len = table_len(n);
    let mut log_counts = Vec::with_capacity(len);
    let mut counts = Vec::with_capacity(len);
    for (i, line) in lines {
        let lineno = i + 1;
        let parts: Vec<&str> = line.split_whitespace().collect();
        let expected_d = 2 * log_counts.len() as u64;
        let d: u64 =
            parts.first().and_then(|s| s.parse().ok()).ok_or_else(|| err(lineno, "missing distance".into()))?;
        if d != expected_d {
            return Err(err(lineno, format!("expected distance {expected_d}, found {d}")));
        }
        let lc: f64 = parts
            .get(1)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| err(lineno, "missing or malformed log count".into()))?;
        log_counts.push(lc);
        if provenance == Provenance::Exact {
            let c: u128 = parts
                .get(2)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| err(lineno, "exact table line lacks an integer count".into()))?;
            counts.push(c);
        }
    }
    if log_counts.len() != len {
        return Err(Error::Cache(format!(
            "{}: {} entries, expected {len} for n = {n}",
            path.display(),
            log_counts.len()
        )));
    }
    match provenance {
        Provenance::Exact => {
            let total: u128 = counts.iter().sum();
            let fact: u128 = (1..=n as u128).product();
            if total != fact {
                return Err(Error::Cache(format!("{}: counts sum to {total}, expected {n}! = {fact}", path.display())));
            }
            DistanceDistribution::from_exact(n, counts)
        }
        Provenance::Approximate => DistanceDistribution::from_log_counts(n, log_counts, provenance),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counts::{approx_counts, exact_counts, Normalization, RateModel};

    #[test]
    fn exact_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cache = CountsCache::new(dir.path());
        assert!(cache.load(6, Provenance::Exact).unwrap().is_none());
        let dist = exact_counts(6).unwrap();
        cache.store(&dist).unwrap();
        let back = cache.load(6, Provenance::Exact).unwrap().unwrap();
        assert_eq!(back, dist);
    }

    #[test]
    fn approx_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let cache = CountsCache::new(dir.path());
        let dist = approx_counts(18, &RateModel::PUBLISHED.coefficients(18), Normalization::Unit).unwrap();
        cache.store(&dist).unwrap();
        let back = cache.load(18, Provenance::Approximate).unwrap().unwrap();
        assert_eq!(back.log_counts(), dist.log_counts());
    }

    #[test]
    fn header_format() {
        let text = format_table(&exact_counts(3).unwrap());
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("n 3 provenance exact"));
        assert_eq!(lines.next(), Some("0 0.0000000000000000e0 1"));
        assert_eq!(text.lines().count(), 6);
        assert!(text.contains("4 -inf 0"));
    }

    #[test]
    fn corrupted_tables_are_rejected() {
        let path = Path::new("t.txt");
        let good = format_table(&exact_counts(4).unwrap());
        assert!(parse_table(&good, path).is_ok());
        let truncated: String = good.lines().take(5).map(|l| format!("{l}\n")).collect();
        assert!(matches!(parse_table(&truncated, path), Err(Error::Cache(_))));
        let tampered = good.replacen("\n2 ", "\n4 ", 1);
        assert!(matches!(parse_table(&tampered, path), Err(Error::Parse { line: 3, .. })));
        let wrong_sum = good.replacen(" 3\n", " 4\n", 1);
        assert!(matches!(parse_table(&wrong_sum, path), Err(Error::Cache(_))));
        assert!(parse_table("n x provenance exact\n", path).is_err());
    }
}
