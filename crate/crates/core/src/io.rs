//! Flat binary container for symbol tables, with a JSON metadata sidecar.
//!
//! Layout: the magic `RPDOSYM1`, a little-endian `u32` header length, the
//! header as `key=value` lines (`dim`, `n`, `family`, `param.<name>`), then
//! the row-major table as little-endian `f64` (re, im) pairs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbols::{Symbol, SymbolTag};

const MAGIC: &[u8; 8] = b"RPDOSYM1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolMeta {
    pub dim: usize,
    pub n: usize,
    pub entries: usize,
    pub tag: Option<SymbolTag>,
}

impl SymbolMeta {
    pub fn of(s: &Symbol) -> Self {
        SymbolMeta { dim: s.dim(), n: s.n(), entries: s.values().len(), tag: s.tag().cloned() }
    }
}

fn check_key(k: &str) -> Result<()> {
    if k.is_empty() || k.contains(['=', '\n']) {
        return Err(Error::Format(format!("unencodable key {k:?}")));
    }
    Ok(())
}

pub fn to_bytes(s: &Symbol) -> Result<Vec<u8>> {
    let mut header = format!("dim={}\nn={}\n", s.dim(), s.n());
    if let Some(tag) = s.tag() {
        if tag.family.contains('\n') {
            return Err(Error::Format("family name contains a newline".into()));
        }
        header.push_str(&format!("family={}\n", tag.family));
        for (k, v) in &tag.params {
            check_key(k)?;
            // Debug formatting of f64 is shortest-roundtrip
            header.push_str(&format!("param.{k}={v:?}\n"));
        }
    }
    let mut out = Vec::with_capacity(12 + header.len() + 16 * s.values().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    for v in s.values() {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    Ok(out)
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Format(format!("bad value for {key}: {v:?}")))
}

pub fn from_bytes(bytes: &[u8]) -> Result<Symbol> {
    if bytes.len() < 12 || &bytes[..8] != MAGIC {
        return Err(Error::Format("missing container magic".into()));
    }
    let hlen = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let body = bytes.get(12..12 + hlen).ok_or_else(|| Error::Format("truncated header".into()))?;
    let header = std::str::from_utf8(body).map_err(|e| Error::Format(e.to_string()))?;
    let (mut dim, mut n, mut family) = (None, None, None);
    let mut params = BTreeMap::new();
    for line in header.lines() {
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Format(format!("bad header line {line:?}")))?;
        match k {
            "dim" => dim = Some(parse::<usize>(k, v)?),
            "n" => n = Some(parse::<usize>(k, v)?),
            "family" => family = Some(v.to_string()),
            _ => match k.strip_prefix("param.") {
                Some(name) => {
                    params.insert(name.to_string(), parse::<f64>(k, v)?);
                }
                None => return Err(Error::Format(format!("unknown header key {k:?}"))),
            },
        }
    }
    let dim = dim.ok_or_else(|| Error::Format("header lacks dim".into()))?;
    let n = n.ok_or_else(|| Error::Format("header lacks n".into()))?;
    let data = &bytes[12 + hlen..];
    if data.len() % 16 != 0 {
        return Err(Error::Format(format!("payload of {} bytes is not a whole number of entries", data.len())));
    }
    let values: Vec<Complex64> = data
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
            )
        })
        .collect();
    let tag = match family {
        Some(family) => Some(SymbolTag { family, params }),
        None if params.is_empty() => None,
        None => return Err(Error::Format("parameters without a family".into())),
    };
    Symbol::from_table(dim, n, values, tag)
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".json");
    PathBuf::from(p)
}

/// Writes the container at `path` and its metadata at `path.json`.
pub fn write_symbol(path: &Path, s: &Symbol) -> Result<()> {
    fs::write(path, to_bytes(s)?)?;
    let meta = serde_json::to_string_pretty(&SymbolMeta::of(s)).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(sidecar_path(path), meta)?;
    Ok(())
}

pub fn read_symbol(path: &Path) -> Result<Symbol> {
    from_bytes(&fs::read(path)?)
}

pub fn read_meta(path: &Path) -> Result<SymbolMeta> {
    let text = fs::read_to_string(sidecar_path(path))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Symbol {
        let tag = SymbolTag::new("test").with("delta", 0.1).with("third", 1.0 / 3.0).with("tiny", 5e-324);
        Symbol::from_function(|x, xi| Complex64::new(x[0].sin() / 3.0, xi[0] as f64 * 1e-17), 1, 16)
            .unwrap()
            .with_tag(tag)
    }

    #[test]
    fn bit_exact_roundtrip() {
        let s = sample();
        let back = from_bytes(&to_bytes(&s).unwrap()).unwrap();
        assert_eq!(back.tag(), s.tag());
        for (a, b) in s.values().iter().zip(back.values()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn file_and_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sym.bin");
        let s = sample();
        write_symbol(&path, &s).unwrap();
        assert_eq!(read_symbol(&path).unwrap(), s);
        let meta = read_meta(&path).unwrap();
        assert_eq!((meta.dim, meta.n, meta.entries), (1, 16, 256));
    }

    #[test]
    fn corrupt_input() {
        let mut b = to_bytes(&sample()).unwrap();
        assert!(from_bytes(&b[..5]).is_err());
        b.pop();
        assert!(matches!(from_bytes(&b), Err(Error::Format(_))));
        let mut c = to_bytes(&sample()).unwrap();
        c[0] = b'X';
        assert!(from_bytes(&c).is_err());
        let untagged = Symbol::from_table(1, 4, vec![Complex64::new(1.0, 0.0); 16], None).unwrap();
        assert_eq!(from_bytes(&to_bytes(&untagged).unwrap()).unwrap(), untagged);
    }
}
