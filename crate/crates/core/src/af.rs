//! Articulatory-feature inventory, phone-to-AF maps and frame labeling.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array2, Axis};

use crate::store::{FeatureMatrix, PhoneAlignment};
use crate::{Error, Result};

pub const N_FEATURES: usize = 7;

/// The seven articulatory features and their quantized classes, in canonical order.
pub const STANDARD_INVENTORY: [(&str, &[&str]); N_FEATURES] = [
    (
        "manner",
        &[
            "approximate",
            "retroflex",
            "fricative",
            "nasal",
            "stop",
            "vowel",
            "nil",
        ],
    ),
    (
        "place",
        &[
            "bilabial",
            "labiodental",
            "dental",
            "alveolar",
            "velar",
            "nil",
        ],
    ),
    ("voice", &["+voice", "-voice"]),
    ("high-low", &["high", "mid", "low", "nil"]),
    ("fr-back", &["front", "central", "back", "nil"]),
    ("round", &["+round", "-round", "nil"]),
    ("static", &["static", "dynamic"]),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Feature {
    pub name: String,
    pub classes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AfInventory {
    features: Vec<Feature>,
}

impl Default for AfInventory {
    fn default() -> Self {
        Self::standard()
    }
}

impl AfInventory {
    pub fn standard() -> Self {
        AfInventory {
            features: STANDARD_INVENTORY
                .iter()
                .map(|(name, classes)| Feature {
                    name: name.to_string(),
                    classes: classes.iter().map(|c| c.to_string()).collect(),
                })
                .collect(),
        }
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn class_counts(&self) -> [usize; N_FEATURES] {
        std::array::from_fn(|i| self.features[i].classes.len())
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn class_index(&self, feature: usize, class: &str) -> Option<u8> {
        self.features[feature]
            .classes
            .iter()
            .position(|c| c == class)
            .map(|i| i as u8)
    }

    pub fn class_name(&self, feature: usize, class: u8) -> &str {
        &self.features[feature].classes[class as usize]
    }

    pub fn validate(&self, v: &AfVector) -> Result<()> {
        for (i, (&c, f)) in v.0.iter().zip(&self.features).enumerate() {
            if c as usize >= f.classes.len() {
                return Err(Error::invalid(format!(
                    "class index {c} out of range for feature {} ({} classes)",
                    self.features[i].name,
                    f.classes.len()
                )));
            }
        }
        Ok(())
    }
}

/// One class index per feature, in inventory order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AfVector(pub [u8; N_FEATURES]);

impl AfVector {
    pub fn class(&self, feature: usize) -> u8 {
        self.0[feature]
    }

    pub fn names<'a>(&self, inv: &'a AfInventory) -> Vec<&'a str> {
        (0..N_FEATURES)
            .map(|f| inv.class_name(f, self.0[f]))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AfMap {
    inventory: AfInventory,
    entries: BTreeMap<String, AfVector>,
}

impl AfMap {
    pub fn inventory(&self) -> &AfInventory {
        &self.inventory
    }

    pub fn get(&self, phone: &str) -> Option<AfVector> {
        self.entries.get(phone).copied()
    }

    pub fn phones(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Bundled map for the 39-phone folded TIMIT set.
    pub fn timit39() -> Self {
        load_af_map(TIMIT39_AF_MAP.as_bytes(), &AfInventory::standard())
            .expect("bundled AF map is valid")
    }
}

pub const TIMIT39_AF_MAP: &str = include_str!("../data/timit39_af_map.tsv");

/// Default phones excluded from probe training and testing.
pub const DEFAULT_DROP_LIST: [&str; 3] = ["sil", "h#", "pau"];

const MAP_HEADER: [&str; 8] = [
    "phone", "manner", "place", "voice", "high-low", "fr-back", "round", "static",
];

/// Loads a phone-to-AF TSV. The header must be
/// `phone manner place voice high-low fr-back round static`, optionally
/// followed by a free-text `comment` column. Lines starting with `#` are ignored.
pub fn load_af_map<R: BufRead>(r: R, inventory: &AfInventory) -> Result<AfMap> {
    let mut header: Option<Vec<String>> = None;
    let mut entries = BTreeMap::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
        let Some(head) = &header else {
            let has_comment = cols.len() == MAP_HEADER.len() + 1 && cols[8] == "comment";
            if cols[..cols.len().min(8)] != MAP_HEADER || !(cols.len() == 8 || has_comment) {
                return Err(Error::parse(
                    lineno,
                    format!("expected header {:?}, got {:?}", MAP_HEADER.join(" "), cols),
                ));
            }
            header = Some(cols.iter().map(|s| s.to_string()).collect());
            continue;
        };
        if cols.len() < MAP_HEADER.len() || cols.len() > head.len() {
            return Err(Error::parse(
                lineno,
                format!("expected {} columns, got {}", head.len(), cols.len()),
            ));
        }
        let mut classes = [0u8; N_FEATURES];
        for (f, slot) in classes.iter_mut().enumerate() {
            let feature = inventory
                .feature_index(MAP_HEADER[f + 1])
                .ok_or_else(|| Error::invalid(format!("inventory lacks {}", MAP_HEADER[f + 1])))?;
            *slot = inventory.class_index(feature, cols[f + 1]).ok_or_else(|| {
                Error::parse(
                    lineno,
                    format!(
                        "unknown class {:?} for feature {}",
                        cols[f + 1],
                        MAP_HEADER[f + 1]
                    ),
                )
            })?;
        }
        let phone = cols[0].to_string();
        if entries.insert(phone.clone(), AfVector(classes)).is_some() {
            return Err(Error::parse(lineno, format!("duplicate phone {phone:?}")));
        }
    }
    if header.is_none() {
        return Err(Error::parse(0, "missing header"));
    }
    Ok(AfMap {
        inventory: inventory.clone(),
        entries,
    })
}

pub fn load_af_map_file(path: &Path, inventory: &AfInventory) -> Result<AfMap> {
    load_af_map(BufReader::new(File::open(path)?), inventory)
}

/// Where a labeled row came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameRef {
    /// Index into [`LabeledFrameSet::utterances`].
    pub utterance: u32,
    pub frame: u32,
}

/// Representation frames paired 1:1 with their AF labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFrameSet {
    pub vectors: Array2<f32>,
    pub labels: Vec<AfVector>,
    pub provenance: Vec<FrameRef>,
    pub utterances: Vec<String>,
    /// Phones that were excluded when labeling.
    pub drop_list: Vec<String>,
}

impl LabeledFrameSet {
    pub fn empty(dim: usize, drop_list: Vec<String>) -> Self {
        LabeledFrameSet {
            vectors: Array2::zeros((0, dim)),
            labels: Vec::new(),
            provenance: Vec::new(),
            utterances: Vec::new(),
            drop_list,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    /// Labels of one feature, as class indices.
    pub fn feature_labels(&self, feature: usize) -> Vec<usize> {
        self.labels
            .iter()
            .map(|v| v.class(feature) as usize)
            .collect()
    }

    /// Appends `other`, keeping row order.
    pub fn append(&mut self, other: LabeledFrameSet) -> Result<()> {
        if other.dim() != self.dim() {
            return Err(Error::Shape(format!(
                "cannot concatenate dim {} onto dim {}",
                other.dim(),
                self.dim()
            )));
        }
        let base = self.utterances.len() as u32;
        self.vectors
            .append(Axis(0), other.vectors.view())
            .map_err(|e| Error::Shape(e.to_string()))?;
        self.labels.extend(other.labels);
        self.provenance
            .extend(other.provenance.into_iter().map(|p| FrameRef {
                utterance: p.utterance + base,
                frame: p.frame,
            }));
        self.utterances.extend(other.utterances);
        Ok(())
    }

    /// Keeps at most `cap` rows per utterance, evenly spaced over each
    /// utterance's rows.
    pub fn cap_per_utterance(&self, cap: usize) -> LabeledFrameSet {
        let mut by_utt: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (row, p) in self.provenance.iter().enumerate() {
            by_utt.entry(p.utterance).or_default().push(row);
        }
        let mut keep = Vec::new();
        for rows in by_utt.values() {
            if rows.len() <= cap {
                keep.extend_from_slice(rows);
            } else {
                keep.extend((0..cap).map(|i| rows[i * rows.len() / cap]));
            }
        }
        keep.sort_unstable();
        LabeledFrameSet {
            vectors: self.vectors.select(Axis(0), &keep),
            labels: keep.iter().map(|&r| self.labels[r]).collect(),
            provenance: keep.iter().map(|&r| self.provenance[r]).collect(),
            utterances: self.utterances.clone(),
            drop_list: self.drop_list.clone(),
        }
    }
}

/// How each frame of an utterance was accounted for.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LabelCounts {
    pub kept: usize,
    pub dropped: usize,
    pub out_of_segment: usize,
}

impl LabelCounts {
    pub fn total(&self) -> usize {
        self.kept + self.dropped + self.out_of_segment
    }
}

/// Sample position of a frame centre. Values within 1e-3 samples of an
/// integer snap to it, so that offsets stored as f32 seconds still resolve
/// exact boundary hits with the half-open rule.
fn centre_sample(m: &FeatureMatrix, i: usize, sample_rate: u32) -> f64 {
    let pos = m.frame_time(i) * f64::from(sample_rate);
    let nearest = pos.round();
    if (pos - nearest).abs() < 1e-3 {
        nearest
    } else {
        pos
    }
}

/// Labels the frames of one utterance; may return an empty set.
pub fn label_utterance(
    m: &FeatureMatrix,
    a: &PhoneAlignment,
    map: &AfMap,
    drop_list: &[String],
) -> Result<(LabeledFrameSet, LabelCounts)> {
    if m.utterance_id != a.utterance_id {
        return Err(Error::invalid(format!(
            "feature utterance {:?} does not match alignment {:?}",
            m.utterance_id, a.utterance_id
        )));
    }
    let mut counts = LabelCounts::default();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut unmapped = BTreeSet::new();
    for i in 0..m.n_frames() {
        let Some(seg) = a.segment_at(centre_sample(m, i, a.sample_rate)) else {
            counts.out_of_segment += 1;
            continue;
        };
        if drop_list.contains(&seg.phone) {
            counts.dropped += 1;
            continue;
        }
        match map.get(&seg.phone) {
            Some(v) => {
                counts.kept += 1;
                rows.push(i);
                labels.push(v);
            }
            None => {
                unmapped.insert(seg.phone.clone());
            }
        }
    }
    if !unmapped.is_empty() {
        return Err(Error::UnmappedPhones(unmapped.into_iter().collect()));
    }
    let set = LabeledFrameSet {
        vectors: m.data.select(Axis(0), &rows),
        labels,
        provenance: rows
            .iter()
            .map(|&r| FrameRef {
                utterance: 0,
                frame: r as u32,
            })
            .collect(),
        utterances: vec![m.utterance_id.clone()],
        drop_list: drop_list.to_vec(),
    };
    Ok((set, counts))
}

/// Attaches an AF vector to every frame whose centre falls inside a mapped,
/// non-dropped segment. Errors when no frame survives.
pub fn label_frames(
    m: &FeatureMatrix,
    a: &PhoneAlignment,
    map: &AfMap,
    drop_list: &[String],
) -> Result<(LabeledFrameSet, LabelCounts)> {
    let (set, counts) = label_utterance(m, a, map, drop_list)?;
    if set.is_empty() {
        return Err(Error::Empty(format!(
            "no labeled frames in utterance {:?}",
            m.utterance_id
        )));
    }
    Ok((set, counts))
}

// Labeled-set container: "AFLB" | version u16 | reserved u16 | n_rows u32 |
// dim u32 | n_features u16 | class count u16 per feature | n_utterances u32 |
// (len u16, bytes) per utterance id | n_drop u16 | (len u16, bytes) per drop
// phone | per row: utterance u32, frame u32, labels u8 x n_features |
// vectors f32 row-major. All little-endian.
pub const LABELED_MAGIC: [u8; 4] = *b"AFLB";
pub const LABELED_VERSION: u16 = 1;

pub fn write_labeled<W: Write>(set: &LabeledFrameSet, inventory: &AfInventory, w: W) -> Result<()> {
    let mut w = BufWriter::new(w);
    let n = u32::try_from(set.len()).map_err(|_| Error::Shape("too many rows".into()))?;
    w.write_all(&LABELED_MAGIC)?;
    w.write_all(&LABELED_VERSION.to_le_bytes())?;
    w.write_all(&0u16.to_le_bytes())?;
    w.write_all(&n.to_le_bytes())?;
    w.write_all(&(set.dim() as u32).to_le_bytes())?;
    w.write_all(&(N_FEATURES as u16).to_le_bytes())?;
    for c in inventory.class_counts() {
        w.write_all(&(c as u16).to_le_bytes())?;
    }
    w.write_all(&(set.utterances.len() as u32).to_le_bytes())?;
    for u in &set.utterances {
        write_str(&mut w, u)?;
    }
    w.write_all(&(set.drop_list.len() as u16).to_le_bytes())?;
    for d in &set.drop_list {
        write_str(&mut w, d)?;
    }
    for (p, l) in set.provenance.iter().zip(&set.labels) {
        w.write_all(&p.utterance.to_le_bytes())?;
        w.write_all(&p.frame.to_le_bytes())?;
        w.write_all(&l.0)?;
    }
    for v in set.vectors.iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn write_str<W: Write>(w: &mut W, s: &str) -> Result<()> {
    let len =
        u16::try_from(s.len()).map_err(|_| Error::invalid("string longer than 65535 bytes"))?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

pub(crate) struct LeReader<R> {
    inner: R,
    what: &'static str,
}

impl<R: Read> LeReader<R> {
    pub(crate) fn new(inner: R, what: &'static str) -> Self {
        LeReader { inner, what }
    }

    pub(crate) fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.inner.read_exact(&mut b).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => Error::Truncated(self.what),
            _ => Error::Io(e),
        })?;
        Ok(b)
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes::<1>()?[0])
    }

    pub(crate) fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.bytes()?))
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }

    pub(crate) fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.bytes()?))
    }

    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }

    pub(crate) fn string(&mut self) -> Result<String> {
        let len = self.u16()? as usize;
        let mut b = vec![0u8; len];
        self.inner
            .read_exact(&mut b)
            .map_err(|_| Error::Truncated(self.what))?;
        String::from_utf8(b).map_err(|_| Error::invalid("string is not valid UTF-8"))
    }

    pub(crate) fn header(&mut self, magic: [u8; 4], version: u16) -> Result<()> {
        let found = self.bytes::<4>()?;
        if found != magic {
            return Err(Error::BadMagic {
                expected: magic,
                found,
            });
        }
        let v = self.u16()?;
        if v != version {
            return Err(Error::VersionMismatch {
                expected: version,
                found: v,
            });
        }
        self.u16()?;
        Ok(())
    }
}

pub fn read_labeled<R: Read>(r: R, inventory: &AfInventory) -> Result<LabeledFrameSet> {
    let mut r = LeReader::new(BufReader::new(r), "labeled frame set");
    r.header(LABELED_MAGIC, LABELED_VERSION)?;
    let n = r.u32()? as usize;
    let dim = r.u32()? as usize;
    let n_features = r.u16()? as usize;
    if n_features != N_FEATURES {
        return Err(Error::Shape(format!(
            "file has {n_features} features, inventory has {N_FEATURES}"
        )));
    }
    let counts = inventory.class_counts();
    for (f, &expected) in counts.iter().enumerate() {
        let c = r.u16()? as usize;
        if c != expected {
            return Err(Error::Shape(format!(
                "feature {} has {c} classes in file, {expected} in inventory",
                inventory.features()[f].name
            )));
        }
    }
    let n_utt = r.u32()? as usize;
    let utterances = (0..n_utt).map(|_| r.string()).collect::<Result<Vec<_>>>()?;
    let n_drop = r.u16()? as usize;
    let drop_list = (0..n_drop)
        .map(|_| r.string())
        .collect::<Result<Vec<_>>>()?;
    let mut provenance = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let utterance = r.u32()?;
        let frame = r.u32()?;
        if utterance as usize >= n_utt {
            return Err(Error::Shape(format!(
                "utterance index {utterance} out of range"
            )));
        }
        let l = AfVector(r.bytes()?);
        inventory.validate(&l)?;
        provenance.push(FrameRef { utterance, frame });
        labels.push(l);
    }
    let mut values = Vec::with_capacity(n * dim);
    for _ in 0..n * dim {
        values.push(r.f32()?);
    }
    let vectors =
        Array2::from_shape_vec((n, dim), values).map_err(|e| Error::Shape(e.to_string()))?;
    Ok(LabeledFrameSet {
        vectors,
        labels,
        provenance,
        utterances,
        drop_list,
    })
}

pub fn write_labeled_file(
    set: &LabeledFrameSet,
    inventory: &AfInventory,
    path: &Path,
) -> Result<()> {
    write_labeled(set, inventory, File::create(path)?)
}

pub fn read_labeled_file(path: &Path, inventory: &AfInventory) -> Result<LabeledFrameSet> {
    read_labeled(File::open(path)?, inventory)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::read_alignment;

    const HEADER: &str = "phone\tmanner\tplace\tvoice\thigh-low\tfr-back\tround\tstatic\n";

    fn map_from(rows: &str) -> Result<AfMap> {
        load_af_map(
            format!("{HEADER}{rows}").as_bytes(),
            &AfInventory::standard(),
        )
    }

    fn two_phone_map() -> AfMap {
        map_from(
            "a\tvowel\tnil\t+voice\tlow\tback\t-round\tstatic\n\
             b\tstop\tbilabial\t+voice\tnil\tnil\tnil\tdynamic\n",
        )
        .unwrap()
    }

    #[test]
    fn inventory_class_counts() {
        assert_eq!(
            AfInventory::standard().class_counts(),
            [7, 6, 2, 4, 4, 3, 2]
        );
    }

    #[test]
    fn loads_vowel_row() {
        let map = map_from("i\tvowel\tnil\t+voice\thigh\tfront\t-round\tdynamic\n").unwrap();
        let v = map.get("i").unwrap();
        assert_eq!(
            v.names(map.inventory()),
            vec!["vowel", "nil", "+voice", "high", "front", "-round", "dynamic"]
        );
    }

    #[test]
    fn unknown_class() {
        let err =
            map_from("w\tsemivowel\tbilabial\t+voice\tnil\tnil\t+round\tstatic\n").unwrap_err();
        assert!(err.to_string().contains("semivowel"));
    }

    #[test]
    fn duplicate_phone() {
        let row = "a\tvowel\tnil\t+voice\tlow\tback\t-round\tstatic\n";
        let err = map_from(&format!("{row}{row}")).unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn missing_column() {
        assert!(map_from("a\tvowel\tnil\t+voice\tlow\tback\t-round\n").is_err());
        let bad_header = "phone\tmanner\tplace\n";
        assert!(load_af_map(bad_header.as_bytes(), &AfInventory::standard()).is_err());
    }

    #[test]
    fn bundled_map_covers_timit39() {
        let map = AfMap::timit39();
        assert_eq!(map.len(), 39);
        let iy = map.get("iy").unwrap();
        assert_eq!(
            iy.names(map.inventory()),
            vec!["vowel", "nil", "+voice", "high", "front", "-round", "dynamic"]
        );
        let sil = map.get("sil").unwrap();
        assert_eq!(sil.names(map.inventory())[..2], ["nil", "nil"]);
        assert_eq!(sil.names(map.inventory())[6], "static");
    }

    #[test]
    fn first_frame_in_first_segment() {
        let a = read_alignment("0 1600 a\n1600 3200 b".as_bytes(), "u", 16000).unwrap();
        let m = FeatureMatrix::new("u", 100.0, 0.0125, Array2::zeros((30, 2))).unwrap();
        let (set, counts) = label_frames(&m, &a, &two_phone_map(), &[]).unwrap();
        assert_eq!(set.labels[0], two_phone_map().get("a").unwrap());
        // centres 0.0125 + i/100; only i <= 18 fall before 0.2 s
        assert_eq!(counts.total(), 30);
        assert_eq!(counts.kept, 19);
        assert_eq!(counts.out_of_segment, 11);
    }

    #[test]
    fn boundary_centre_goes_to_later_segment() {
        let a = read_alignment("0 160 a\n160 320 b".as_bytes(), "u", 16000).unwrap();
        let m = FeatureMatrix::new("u", 100.0, 0.0, Array2::zeros((3, 1))).unwrap();
        let (set, _) = label_frames(&m, &a, &two_phone_map(), &[]).unwrap();
        // frame 1 centre is exactly sample 160
        assert_eq!(set.labels[1], two_phone_map().get("b").unwrap());
        // 0.005 is inexact in f32; frame 1 centre still resolves to sample 240
        let m = FeatureMatrix::new("u", 100.0, 0.005, Array2::zeros((2, 1))).unwrap();
        let a = read_alignment("0 240 a\n240 320 b".as_bytes(), "u", 16000).unwrap();
        let (set, _) = label_frames(&m, &a, &two_phone_map(), &[]).unwrap();
        assert_eq!(set.labels[1], two_phone_map().get("b").unwrap());
    }

    #[test]
    fn fifty_hz_frames_split_evenly() {
        let a = read_alignment("0 1600 a\n1600 3200 b".as_bytes(), "u", 16000).unwrap();
        let m = FeatureMatrix::new("u", 50.0, 0.01, Array2::zeros((10, 4))).unwrap();
        let (set, counts) = label_frames(&m, &a, &two_phone_map(), &[]).unwrap();
        let map = two_phone_map();
        let n_a = set
            .labels
            .iter()
            .filter(|&&l| l == map.get("a").unwrap())
            .count();
        assert_eq!((n_a, set.len() - n_a), (5, 5));
        assert_eq!(counts.kept, 10);
    }

    #[test]
    fn drop_list_and_unmapped() {
        let a = read_alignment(
            "0 1600 sil\n1600 3200 a\n3200 4800 zz".as_bytes(),
            "u",
            16000,
        )
        .unwrap();
        let m = FeatureMatrix::new("u", 100.0, 0.005, Array2::zeros((40, 1))).unwrap();
        let err = label_frames(&m, &a, &two_phone_map(), &["sil".into()]).unwrap_err();
        assert!(matches!(err, Error::UnmappedPhones(ref p) if p == &["zz".to_string()]));

        let m = FeatureMatrix::new("u", 100.0, 0.005, Array2::zeros((20, 1))).unwrap();
        let (_, counts) = label_frames(&m, &a, &two_phone_map(), &["sil".into()]).unwrap();
        assert_eq!(
            counts,
            LabelCounts {
                kept: 10,
                dropped: 10,
                out_of_segment: 0
            }
        );
    }

    #[test]
    fn all_dropped_is_an_error() {
        let a = read_alignment("0 1600 sil".as_bytes(), "u", 16000).unwrap();
        let m = FeatureMatrix::new("u", 100.0, 0.005, Array2::zeros((5, 1))).unwrap();
        assert!(matches!(
            label_frames(&m, &a, &two_phone_map(), &["sil".into()]),
            Err(Error::Empty(_))
        ));
    }

    #[test]
    fn labeled_round_trip() {
        let a = read_alignment("0 1600 a\n1600 3200 b".as_bytes(), "u", 16000).unwrap();
        let data = Array2::from_shape_fn((20, 3), |(i, j)| (i * 3 + j) as f32 * 0.5);
        let m = FeatureMatrix::new("u", 100.0, 0.005, data).unwrap();
        let (mut set, _) = label_frames(&m, &a, &two_phone_map(), &["sil".into()]).unwrap();
        let (second, _) = label_frames(&m, &a, &two_phone_map(), &["sil".into()]).unwrap();
        set.append(second).unwrap();
        assert_eq!(set.provenance[25].utterance, 1);
        let inv = AfInventory::standard();
        let mut buf = Vec::new();
        write_labeled(&set, &inv, &mut buf).unwrap();
        assert_eq!(read_labeled(&buf[..], &inv).unwrap(), set);
    }

    #[test]
    fn cap_per_utterance_is_even() {
        let a = read_alignment("0 3200 a".as_bytes(), "u", 16000).unwrap();
        let m = FeatureMatrix::new("u", 100.0, 0.005, Array2::zeros((20, 1))).unwrap();
        let (set, _) = label_frames(&m, &a, &two_phone_map(), &[]).unwrap();
        let capped = set.cap_per_utterance(4);
        let frames: Vec<u32> = capped.provenance.iter().map(|p| p.frame).collect();
        assert_eq!(frames, vec![0, 5, 10, 15]);
    }
}
