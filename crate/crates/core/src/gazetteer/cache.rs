//! Binary cache of a built [`GazetteerIndex`].
//!
//! Layout (little endian):
//!
//! ```text
//! magic      8 bytes   b"GEOEVIDX"
//! version    u32       FORMAT_VERSION
//! checksum   64 bytes  ASCII hex SHA-256 of the source dump
//! filter_len u16       length of the feature-class filter string ("" = none)
//! filter     bytes     e.g. "A,P"
//! payload    bincode-encoded GazetteerIndex
//! ```
//!
//! The header alone is enough to decide whether a cache is still valid for a
//! given dump, see [`read_header`].

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{GazetteerError, GazetteerIndex};

pub const MAGIC: &[u8; 8] = b"GEOEVIDX";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheHeader {
    pub format_version: u32,
    pub checksum: String,
    /// Comma-separated feature classes, empty when the index is unfiltered.
    pub filter: String,
}

impl CacheHeader {
    pub fn for_index(index: &GazetteerIndex) -> Self {
        CacheHeader {
            format_version: FORMAT_VERSION,
            checksum: index.checksum().to_string(),
            filter: index.filter().map(|f| f.to_string()).unwrap_or_default(),
        }
    }

    /// True when this cache was built from a dump with `checksum` under `filter`
    /// by the current format version.
    pub fn matches(&self, checksum: &str, filter: &str) -> bool {
        self.format_version == FORMAT_VERSION && self.checksum == checksum && self.filter == filter
    }
}

fn cache_err(msg: impl Into<String>) -> GazetteerError {
    GazetteerError::Cache(msg.into())
}

pub fn write<W: Write>(mut out: W, index: &GazetteerIndex) -> Result<(), GazetteerError> {
    let header = CacheHeader::for_index(index);
    if header.checksum.len() != 64 {
        return Err(cache_err("index checksum is not a SHA-256 hex digest"));
    }
    out.write_all(MAGIC)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    out.write_all(header.checksum.as_bytes())?;
    let filter_len = u16::try_from(header.filter.len()).map_err(|_| cache_err("filter too long"))?;
    out.write_all(&filter_len.to_le_bytes())?;
    out.write_all(header.filter.as_bytes())?;
    bincode::serialize_into(&mut out, index).map_err(|e| cache_err(e.to_string()))?;
    out.flush()?;
    Ok(())
}

pub fn read_header_from<R: Read>(input: &mut R) -> Result<CacheHeader, GazetteerError> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(cache_err("not a gazetteer cache file"));
    }
    let mut word = [0u8; 4];
    input.read_exact(&mut word)?;
    let format_version = u32::from_le_bytes(word);
    let mut checksum = [0u8; 64];
    input.read_exact(&mut checksum)?;
    let mut len = [0u8; 2];
    input.read_exact(&mut len)?;
    let mut filter = vec![0u8; u16::from_le_bytes(len) as usize];
    input.read_exact(&mut filter)?;
    Ok(CacheHeader {
        format_version,
        checksum: String::from_utf8(checksum.to_vec()).map_err(|_| cache_err("corrupt checksum"))?,
        filter: String::from_utf8(filter).map_err(|_| cache_err("corrupt filter"))?,
    })
}

pub fn read<R: Read>(mut input: R) -> Result<GazetteerIndex, GazetteerError> {
    let header = read_header_from(&mut input)?;
    if header.format_version != FORMAT_VERSION {
        return Err(cache_err(format!(
            "cache format version {} (expected {FORMAT_VERSION}); re-run ingest",
            header.format_version
        )));
    }
    let index: GazetteerIndex =
        bincode::deserialize_from(input).map_err(|e| cache_err(e.to_string()))?;
    if index.checksum() != header.checksum {
        return Err(cache_err("header checksum does not match payload"));
    }
    Ok(index)
}

pub fn save(path: &Path, index: &GazetteerIndex) -> Result<(), GazetteerError> {
    write(BufWriter::new(File::create(path)?), index)
}

pub fn load(path: &Path) -> Result<GazetteerIndex, GazetteerError> {
    read(BufReader::new(File::open(path)?))
}

/// Header of the cache at `path`, or `None` when the file does not exist.
pub fn read_header(path: &Path) -> Result<Option<CacheHeader>, GazetteerError> {
    match File::open(path) {
        Ok(f) => read_header_from(&mut BufReader::new(f)).map(Some),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e.into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gazetteer::tests::record;
    use crate::gazetteer::{ingest, FeatureClassFilter};

    #[test]
    fn round_trip_preserves_lookups() {
        let dump = record(1, "Paris", "Lutetia", 48.85, 2.35, 'P', 2_000_000)
            + &record(2, "Paris", "", 33.66, -95.55, 'P', 25_000);
        let filter = FeatureClassFilter::parse_csv("P").unwrap();
        let (index, _) = ingest(dump.as_bytes(), Some(&filter)).unwrap();

        let mut bytes = Vec::new();
        write(&mut bytes, &index).unwrap();
        let header = read_header_from(&mut bytes.as_slice()).unwrap();
        assert!(header.matches(index.checksum(), "P"));
        assert!(!header.matches(index.checksum(), ""));

        let back = read(bytes.as_slice()).unwrap();
        assert_eq!(back.lookup("paris"), index.lookup("paris"));
        assert_eq!(back.lookup("lutetia").len(), 1);
        assert_eq!(back.version(), index.version());
    }

    #[test]
    fn rejects_foreign_files() {
        assert!(read(&b"NOTACACHEFILE"[..]).is_err());
        let mut bytes = Vec::new();
        let (index, _) = ingest(&b""[..], None).unwrap();
        write(&mut bytes, &index).unwrap();
        bytes[8] = 99;
        assert!(read(bytes.as_slice()).is_err());
    }
}
