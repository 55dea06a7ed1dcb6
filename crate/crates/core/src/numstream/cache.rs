//! Digit cache files.
//!
//! ```text
//! base=10 spec=champernowne:10
//! 123456789101112...
//! ```
//!
//! The body holds one ASCII character per digit for bases up to 10 and
//! comma-separated decimal integers above that. Whitespace in the body is
//! ignored. Caches only ever grow: an existing prefix is never rewritten.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;

use super::spec::{check_base, RealSpec};
use super::{digits, DigitPrefix};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DigitCache {
    pub base: u32,
    pub spec: String,
    pub digits: Vec<u8>,
}

pub fn header(base: u32, spec: &str) -> String {
    format!("base={base} spec={spec}")
}

pub fn format_digits(digits: &[u8], base: u32) -> String {
    if base <= 10 {
        digits.iter().map(|&d| char::from(b'0' + d)).collect()
    } else {
        let parts: Vec<String> = digits.iter().map(|d| d.to_string()).collect();
        parts.join(",")
    }
}

/// Parses a digit body; `first_line` is used for error positions.
pub fn parse_digits(body: &str, base: u32, first_line: usize) -> Result<Vec<u8>> {
    check_base(base)?;
    let mut out = Vec::new();
    for (offset, line) in body.lines().enumerate() {
        let lineno = first_line + offset;
        if base <= 10 {
            for ch in line.chars().filter(|c| !c.is_whitespace()) {
                let d = ch.to_digit(10).filter(|&d| d < base).ok_or_else(|| {
                    Error::parse(lineno, format!("`{ch}` is not a base-{base} digit"))
                })?;
                out.push(d as u8);
            }
        } else {
            for tok in line.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                let d: u32 = tok.parse().ok().filter(|&d| d < base).ok_or_else(|| {
                    Error::parse(lineno, format!("`{tok}` is not a base-{base} digit"))
                })?;
                out.push(d as u8);
            }
        }
    }
    Ok(out)
}

pub fn parse_header(line: &str) -> Result<(u32, String)> {
    let rest = line
        .trim_end_matches('\r')
        .strip_prefix("base=")
        .ok_or_else(|| Error::parse(1, "expected `base=<b> spec=<spec>`"))?;
    let (base, spec) = rest
        .split_once(" spec=")
        .ok_or_else(|| Error::parse(1, "missing ` spec=`"))?;
    let base: u32 = base
        .parse()
        .map_err(|_| Error::parse(1, format!("bad base `{base}`")))?;
    check_base(base).map_err(|e| Error::parse(1, e.to_string()))?;
    Ok((base, spec.to_string()))
}

pub fn parse_cache(text: &str) -> Result<DigitCache> {
    let (first, body) = text.split_once('\n').unwrap_or((text, ""));
    let (base, spec) = parse_header(first)?;
    let digits = parse_digits(body, base, 2)?;
    Ok(DigitCache { base, spec, digits })
}

pub fn render_cache(cache: &DigitCache) -> String {
    format!(
        "{}\n{}",
        header(cache.base, &cache.spec),
        format_digits(&cache.digits, cache.base)
    )
}

/// Where a `cache_digits` request was answered from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CacheSource {
    Hit,
    Extended,
    Created,
}

/// Returns the first `n` digits of `spec`, serving them from the cache file at
/// `path` when it is long enough and appending to it otherwise.
pub fn cache_digits(
    spec: &RealSpec,
    base: u32,
    n: usize,
    path: &Path,
) -> Result<(DigitPrefix, CacheSource)> {
    let canonical = spec.to_string();
    if path.exists() {
        let text = fs::read_to_string(path)?;
        let cached = parse_cache(&text)?;
        if cached.base != base || cached.spec != canonical {
            return Err(Error::InvalidArgument(format!(
                "cache {} holds `{}` in base {}, not `{canonical}` in base {base}",
                path.display(),
                cached.spec,
                cached.base
            )));
        }
        if cached.digits.len() >= n {
            let prefix = DigitPrefix::new(base, cached.digits[..n].to_vec())?;
            return Ok((prefix, CacheSource::Hit));
        }
        let fresh = digits(spec, base, n)?;
        if fresh.digits()[..cached.digits.len()] != cached.digits[..] {
            return Err(Error::Invariant(format!(
                "cache {} disagrees with regenerated digits",
                path.display()
            )));
        }
        let tail = &fresh.digits()[cached.digits.len()..];
        let mut chunk = String::new();
        if base > 10 && !cached.digits.is_empty() {
            chunk.push(',');
        }
        chunk.push_str(&format_digits(tail, base));
        let mut file = OpenOptions::new().append(true).open(path)?;
        if !text.contains('\n') {
            file.write_all(b"\n")?;
        }
        file.write_all(chunk.as_bytes())?;
        return Ok((fresh, CacheSource::Extended));
    }
    let fresh = digits(spec, base, n)?;
    let rendered = render_cache(&DigitCache {
        base,
        spec: canonical,
        digits: fresh.digits().to_vec(),
    });
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, rendered)?;
    fs::rename(&tmp, path)?;
    Ok((fresh, CacheSource::Created))
}

/// Reads a `DigitFile` source: a cache file when it starts with a `base=`
/// header, otherwise a bare digit body.
pub fn read_digit_file(path: &Path, base: u32) -> Result<Vec<u8>> {
    let text = fs::read_to_string(path)?;
    if text.starts_with("base=") {
        let cached = parse_cache(&text)?;
        if cached.base != base {
            return Err(Error::BaseMismatch {
                source_base: cached.base,
                requested: base,
            });
        }
        Ok(cached.digits)
    } else {
        parse_digits(&text, base, 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_small_and_large_bases() {
        let c = parse_cache("base=10 spec=rat:1/3\n3333\n33").unwrap();
        assert_eq!(c.digits, vec![3; 6]);
        let c = parse_cache("base=16 spec=champernowne:16\n1,2,15,\n10,0").unwrap();
        assert_eq!(c.digits, vec![1, 2, 15, 10, 0]);
        assert_eq!(
            render_cache(&c),
            "base=16 spec=champernowne:16\n1,2,15,10,0"
        );
    }

    #[test]
    fn rejects_malformed() {
        let err = parse_cache("base=2 spec=x\n0102").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        assert!(parse_cache("base=1 spec=x\n").is_err());
        assert!(parse_cache("spec=x base=2\n").is_err());
        assert!(parse_cache("base=12 spec=x\n1,12").is_err());
    }

    #[test]
    fn cache_extends_without_rewriting() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c10.digits");
        let spec = RealSpec::champernowne(10).unwrap();
        let (first, src) = cache_digits(&spec, 10, 50, &path).unwrap();
        assert_eq!(src, CacheSource::Created);
        let before = fs::read(&path).unwrap();
        let (longer, src) = cache_digits(&spec, 10, 120, &path).unwrap();
        assert_eq!(src, CacheSource::Extended);
        let after = fs::read(&path).unwrap();
        assert_eq!(&after[..before.len()], &before[..]);
        assert_eq!(&longer.digits()[..50], first.digits());
        let (again, src) = cache_digits(&spec, 10, 80, &path).unwrap();
        assert_eq!(src, CacheSource::Hit);
        assert_eq!(again.digits(), &longer.digits()[..80]);

        let other = RealSpec::champernowne(2).unwrap();
        assert!(cache_digits(&other, 2, 10, &path).is_err());
    }

    #[test]
    fn large_base_cache_extends_with_separator() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c16.digits");
        let spec = RealSpec::champernowne(16).unwrap();
        cache_digits(&spec, 16, 20, &path).unwrap();
        cache_digits(&spec, 16, 45, &path).unwrap();
        let parsed = parse_cache(&fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(parsed.digits, digits(&spec, 16, 45).unwrap().digits());
    }
}
