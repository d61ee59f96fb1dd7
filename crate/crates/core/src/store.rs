//! Bit-exact interchange formats: feature matrices, phone alignments and
//! corpus manifests.
//!
//! Feature files are little-endian:
//!
//! ```text
//! magic "AFPR" | version u16 = 1 | reserved u16 = 0 | n_frames u32 | dim u32
//! | frame_rate f32 | offset f32 | utterance_id_len u16 | utterance_id (UTF-8)
//! | payload f32, row-major
//! ```

use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::{Error, Result};

pub const FEATURE_MAGIC: [u8; 4] = *b"AFPR";
pub const FEATURE_VERSION: u16 = 1;
/// Fixed bytes preceding the utterance id.
pub const FEATURE_HEADER_LEN: usize = 26;

/// Per-utterance frame-by-dimension representation sequence.
///
/// `frame_rate` and `offset` are kept at their 32-bit storage precision so
/// that they round-trip exactly; use [`FeatureMatrix::frame_time`] for
/// frame-centre times in 64-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub utterance_id: String,
    /// Frames per second.
    pub frame_rate: f32,
    /// Time of the first frame centre, in seconds.
    pub offset: f32,
    pub data: Array2<f32>,
}

impl FeatureMatrix {
    pub fn new(
        utterance_id: impl Into<String>,
        frame_rate: f32,
        offset: f32,
        data: Array2<f32>,
    ) -> Result<Self> {
        let m = FeatureMatrix {
            utterance_id: utterance_id.into(),
            frame_rate,
            offset,
            data,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn n_frames(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    /// Centre time of frame `i` in seconds.
    pub fn frame_time(&self, i: usize) -> f64 {
        f64::from(self.offset) + i as f64 / f64::from(self.frame_rate)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.frame_rate.is_finite() && self.frame_rate > 0.0) {
            return Err(Error::invalid(format!(
                "frame_rate must be finite and positive, got {}",
                self.frame_rate
            )));
        }
        if !(self.offset.is_finite() && self.offset >= 0.0) {
            return Err(Error::invalid(format!(
                "offset must be finite and non-negative, got {}",
                self.offset
            )));
        }
        if self.dim() == 0 {
            return Err(Error::Shape("feature dimension must be at least 1".into()));
        }
        if self.utterance_id.len() > u16::MAX as usize {
            return Err(Error::invalid("utterance id longer than 65535 bytes"));
        }
        if u32::try_from(self.n_frames()).is_err() || u32::try_from(self.dim()).is_err() {
            return Err(Error::Shape(
                "matrix too large for the feature format".into(),
            ));
        }
        for ((row, col), v) in self.data.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row, col });
            }
        }
        Ok(())
    }

    /// The matrix widened to 64-bit for computation.
    pub fn to_f64(&self) -> Array2<f64> {
        self.data.mapv(f64::from)
    }
}

pub fn write_features<W: Write>(m: &FeatureMatrix, mut w: W) -> Result<()> {
    m.validate()?;
    let id = m.utterance_id.as_bytes();
    let mut buf = Vec::with_capacity(FEATURE_HEADER_LEN + id.len() + m.data.len() * 4);
    buf.extend_from_slice(&FEATURE_MAGIC);
    buf.extend_from_slice(&FEATURE_VERSION.to_le_bytes());
    buf.extend_from_slice(&0u16.to_le_bytes());
    buf.extend_from_slice(&(m.n_frames() as u32).to_le_bytes());
    buf.extend_from_slice(&(m.dim() as u32).to_le_bytes());
    buf.extend_from_slice(&m.frame_rate.to_le_bytes());
    buf.extend_from_slice(&m.offset.to_le_bytes());
    buf.extend_from_slice(&(id.len() as u16).to_le_bytes());
    buf.extend_from_slice(id);
    for v in m.data.iter() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

pub fn read_features<R: Read>(mut r: R) -> Result<FeatureMatrix> {
    let mut magic = [0u8; 4];
    read_exact_or(&mut r, &mut magic, "feature header")?;
    if magic != FEATURE_MAGIC {
        return Err(Error::BadMagic {
            expected: FEATURE_MAGIC,
            found: magic,
        });
    }
    let mut header = [0u8; FEATURE_HEADER_LEN - 4];
    read_exact_or(&mut r, &mut header, "feature header")?;
    let version = u16::from_le_bytes([header[0], header[1]]);
    if version != FEATURE_VERSION {
        return Err(Error::VersionMismatch {
            expected: FEATURE_VERSION,
            found: version,
        });
    }
    let n_frames = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let frame_rate = f32::from_le_bytes(header[12..16].try_into().unwrap());
    let offset = f32::from_le_bytes(header[16..20].try_into().unwrap());
    let id_len = u16::from_le_bytes([header[20], header[21]]) as usize;

    let mut id = vec![0u8; id_len];
    read_exact_or(&mut r, &mut id, "utterance id")?;
    let utterance_id =
        String::from_utf8(id).map_err(|_| Error::invalid("utterance id is not valid UTF-8"))?;

    let n_values = n_frames
        .checked_mul(dim)
        .ok_or_else(|| Error::Shape("n_frames * dim overflows".into()))?;
    let mut payload = Vec::new();
    r.by_ref()
        .take(n_values as u64 * 4)
        .read_to_end(&mut payload)?;
    if payload.len() < n_values * 4 {
        return Err(Error::Truncated("feature payload"));
    }
    let values: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let data =
        Array2::from_shape_vec((n_frames, dim), values).map_err(|e| Error::Shape(e.to_string()))?;
    FeatureMatrix::new(utterance_id, frame_rate, offset, data)
}

fn read_exact_or<R: Read>(r: &mut R, buf: &mut [u8], what: &'static str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => Error::Truncated(what),
        _ => Error::Io(e),
    })
}

pub fn write_features_file(m: &FeatureMatrix, path: &Path) -> Result<()> {
    write_features(m, BufWriter::new(File::create(path)?))
}

pub fn read_features_file(path: &Path) -> Result<FeatureMatrix> {
    read_features(BufReader::new(File::open(path)?))
}

/// One time-aligned phone; samples are a half-open interval `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub start: u64,
    pub end: u64,
    pub phone: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhoneAlignment {
    pub utterance_id: String,
    pub sample_rate: u32,
    pub segments: Vec<Segment>,
}

impl PhoneAlignment {
    /// The segment containing sample position `pos`, if any.
    pub fn segment_at(&self, pos: f64) -> Option<&Segment> {
        // segments are sorted and disjoint: the candidate is the last one starting at or before pos
        let idx = self.segments.partition_point(|s| (s.start as f64) <= pos);
        let seg = self.segments.get(idx.checked_sub(1)?)?;
        (pos < seg.end as f64).then_some(seg)
    }
}

/// Parses "start end phone" lines (sample indices). Blank lines are skipped.
pub fn read_alignment<R: BufRead>(
    r: R,
    utterance_id: impl Into<String>,
    sample_rate: u32,
) -> Result<PhoneAlignment> {
    if sample_rate == 0 {
        return Err(Error::invalid("sample rate must be positive"));
    }
    let mut rows = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 3 {
            return Err(Error::parse(
                lineno,
                format!("expected \"start end phone\", got {} fields", fields.len()),
            ));
        }
        let start: u64 = fields[0]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("non-integer start {:?}", fields[0])))?;
        let end: u64 = fields[1]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("non-integer end {:?}", fields[1])))?;
        if end <= start {
            return Err(Error::parse(
                lineno,
                format!("segment end {end} is not after start {start}"),
            ));
        }
        rows.push((
            lineno,
            Segment {
                start,
                end,
                phone: fields[2].to_string(),
            },
        ));
    }
    rows.sort_by_key(|(_, s)| (s.start, s.end));
    for pair in rows.windows(2) {
        let (prev, (line, cur)) = (&pair[0].1, &pair[1]);
        if cur.start < prev.end {
            return Err(Error::Overlap {
                line: *line,
                start: cur.start,
                end: cur.end,
                prev_end: prev.end,
            });
        }
    }
    Ok(PhoneAlignment {
        utterance_id: utterance_id.into(),
        sample_rate,
        segments: rows.into_iter().map(|(_, s)| s).collect(),
    })
}

pub fn read_alignment_file(path: &Path, sample_rate: u32) -> Result<PhoneAlignment> {
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_alignment(BufReader::new(File::open(path)?), id, sample_rate)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "validation" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(Error::invalid(format!(
                "unknown split {other:?} (expected train, validation or test)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub utterance_id: String,
    pub feature_path: PathBuf,
    pub alignment_path: PathBuf,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }
}

/// Parses a four-column TSV manifest. Relative paths are resolved against
/// `base_dir`; a first line starting with `utterance_id` is treated as a header.
pub fn read_manifest<R: BufRead>(r: R, base_dir: &Path) -> Result<Manifest> {
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
        if idx == 0 && cols[0] == "utterance_id" {
            continue;
        }
        if cols.len() != 4 {
            return Err(Error::parse(
                lineno,
                format!("expected 4 tab-separated columns, got {}", cols.len()),
            ));
        }
        if !seen.insert(cols[0].to_string()) {
            return Err(Error::parse(
                lineno,
                format!("duplicate utterance id {:?}", cols[0]),
            ));
        }
        let split = cols[3]
            .parse::<Split>()
            .map_err(|e| Error::parse(lineno, e.to_string()))?;
        let resolve = |p: &str| -> Result<PathBuf> {
            let path = base_dir.join(p);
            if path.is_file() {
                Ok(path)
            } else {
                Err(Error::parse(
                    lineno,
                    format!("path {} does not exist", path.display()),
                ))
            }
        };
        entries.push(ManifestEntry {
            utterance_id: cols[0].to_string(),
            feature_path: resolve(cols[1])?,
            alignment_path: resolve(cols[2])?,
            split,
        });
    }
    Ok(Manifest { entries })
}

pub fn read_manifest_file(path: &Path) -> Result<Manifest> {
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    read_manifest(BufReader::new(File::open(path)?), base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn bytes_of(m: &FeatureMatrix) -> Vec<u8> {
        let mut out = Vec::new();
        write_features(m, &mut out).unwrap();
        out
    }

    #[test]
    fn empty_matrix_is_header_only() {
        let m = FeatureMatrix::new("u1", 100.0, 0.0125, Array2::zeros((0, 39))).unwrap();
        assert_eq!(bytes_of(&m).len(), 28);
    }

    #[test]
    fn small_matrix_size() {
        let m =
            FeatureMatrix::new("u1", 100.0, 0.0, array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]).unwrap();
        assert_eq!(bytes_of(&m).len(), 28 + 2 * 3 * 4);
    }

    #[test]
    fn golden_bytes() {
        let m = FeatureMatrix::new("ab", 50.0, 0.01, array![[1.0f32, -2.5]]).unwrap();
        let expected: Vec<u8> = [
            &b"AFPR"[..],
            &[1, 0, 0, 0],
            &[1, 0, 0, 0],
            &[2, 0, 0, 0],
            &[0x00, 0x00, 0x48, 0x42], // 50.0
            &[0x0a, 0xd7, 0x23, 0x3c], // 0.01
            &[2, 0],
            b"ab",
            &[0x00, 0x00, 0x80, 0x3f], // 1.0
            &[0x00, 0x00, 0x20, 0xc0], // -2.5
        ]
        .concat();
        assert_eq!(bytes_of(&m), expected);
        assert_eq!(read_features(&expected[..]).unwrap(), m);
    }

    #[test]
    fn bad_magic() {
        let m = FeatureMatrix::new("u", 100.0, 0.0, array![[1.0f32]]).unwrap();
        let mut b = bytes_of(&m);
        b[0] = b'X';
        assert!(matches!(read_features(&b[..]), Err(Error::BadMagic { .. })));
    }

    #[test]
    fn version_mismatch() {
        let m = FeatureMatrix::new("u", 100.0, 0.0, array![[1.0f32]]).unwrap();
        let mut b = bytes_of(&m);
        b[4] = 2;
        assert!(matches!(
            read_features(&b[..]),
            Err(Error::VersionMismatch { found: 2, .. })
        ));
    }

    #[test]
    fn truncated_payload() {
        let m = FeatureMatrix::new("u", 100.0, 0.0, Array2::ones((3, 4))).unwrap();
        let b = bytes_of(&m);
        let cut = &b[..b.len() - 1];
        assert!(matches!(
            read_features(cut),
            Err(Error::Truncated("feature payload"))
        ));
        assert!(matches!(read_features(&b[..10]), Err(Error::Truncated(_))));
    }

    #[test]
    fn rejects_non_finite() {
        let m = FeatureMatrix {
            utterance_id: "u".into(),
            frame_rate: 100.0,
            offset: 0.0,
            data: array![[1.0, f32::NAN]],
        };
        assert!(matches!(
            write_features(&m, Vec::new()),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
    }

    #[test]
    fn alignment_two_segments() {
        let a = read_alignment("0 1600 a\n1600 3200 b".as_bytes(), "u", 16000).unwrap();
        assert_eq!(a.segments.len(), 2);
        assert_eq!(a.segments[1].phone, "b");
    }

    #[test]
    fn alignment_overlap() {
        let err = read_alignment("0 1600 a\n800 3200 b".as_bytes(), "u", 16000).unwrap_err();
        assert!(matches!(err, Error::Overlap { line: 2, .. }));
    }

    #[test]
    fn alignment_timit_line() {
        let a = read_alignment("0 3050 h#\n".as_bytes(), "u", 16000).unwrap();
        assert_eq!(
            a.segments,
            vec![Segment {
                start: 0,
                end: 3050,
                phone: "h#".into()
            }]
        );
    }

    #[test]
    fn alignment_bad_bounds() {
        assert!(matches!(
            read_alignment("10 10 a".as_bytes(), "u", 16000),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            read_alignment("0 1.5 a".as_bytes(), "u", 16000),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn segment_lookup_is_half_open() {
        let a = read_alignment("0 100 a\n100 200 b\n300 400 c".as_bytes(), "u", 16000).unwrap();
        assert_eq!(a.segment_at(99.9).unwrap().phone, "a");
        assert_eq!(a.segment_at(100.0).unwrap().phone, "b");
        assert!(a.segment_at(250.0).is_none());
        assert!(a.segment_at(400.0).is_none());
    }
}
