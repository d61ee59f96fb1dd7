use afprobe_core::af::{
    label_utterance, load_af_map, AfInventory, AfMap, AfVector, DEFAULT_DROP_LIST,
};
use afprobe_core::store::{read_alignment, FeatureMatrix};
use ndarray::Array2;
use proptest::prelude::*;

const HEADER: &str = "phone\tmanner\tplace\tvoice\thigh-low\tfr-back\tround\tstatic\n";
const ROWS: [&str; 4] = [
    "aa\tvowel\tnil\t+voice\tlow\tback\t-round\tstatic\n",
    "s\tfricative\talveolar\t-voice\tnil\tnil\tnil\tstatic\n",
    "m\tnasal\tbilabial\t+voice\tnil\tnil\tnil\tstatic\n",
    "sil\tnil\tnil\t-voice\tnil\tnil\tnil\tstatic\n",
];

fn map(order: &[usize]) -> AfMap {
    let mut text = HEADER.to_string();
    for &i in order {
        text.push_str(ROWS[i]);
    }
    load_af_map(text.as_bytes(), &AfInventory::standard()).unwrap()
}

fn drop_list() -> Vec<String> {
    DEFAULT_DROP_LIST.iter().map(|s| s.to_string()).collect()
}

#[test]
fn vowel_row_maps_to_its_vector() {
    let text = format!("{HEADER}i\tvowel\tnil\t+voice\thigh\tfront\t-round\tdynamic\n");
    let m = load_af_map(text.as_bytes(), &AfInventory::standard()).unwrap();
    let inv = AfInventory::standard();
    assert_eq!(
        m.get("i").unwrap().names(&inv),
        ["vowel", "nil", "+voice", "high", "front", "-round", "dynamic"]
    );
}

#[test]
fn shipped_map_covers_folded_timit() {
    let m = AfMap::timit39();
    assert_eq!(m.len(), 39);
    for phone in m.phones() {
        m.inventory().validate(&m.get(phone).unwrap()).unwrap();
    }
    let inv = AfInventory::standard();
    assert_eq!(
        m.get("sil").unwrap().names(&inv),
        ["nil", "nil", "-voice", "nil", "nil", "nil", "static"]
    );
}

fn utterance(bounds: &[(u64, usize)], frames: usize) -> (FeatureMatrix, String) {
    let mut text = String::new();
    let mut start = 0;
    for &(len, phone) in bounds {
        let name = ROWS[phone].split('\t').next().unwrap();
        text.push_str(&format!("{start} {} {name}\n", start + len));
        start += len;
    }
    let m = FeatureMatrix::new("u", 100.0, 0.0125, Array2::zeros((frames, 2))).unwrap();
    (m, text)
}

proptest! {
    #[test]
    fn every_frame_is_accounted_for(
        bounds in proptest::collection::vec((1u64..2000, 0usize..4), 1..8),
        frames in 1usize..120,
    ) {
        let (m, text) = utterance(&bounds, frames);
        let a = read_alignment(text.as_bytes(), "u", 16000).unwrap();
        let (set, counts) = label_utterance(&m, &a, &map(&[0, 1, 2, 3]), &drop_list()).unwrap();
        prop_assert_eq!(counts.kept + counts.dropped + counts.out_of_segment, frames);
        prop_assert_eq!(set.len(), counts.kept);
        // provenance frames increase, so labels follow segment order
        let idx: Vec<u32> = set.provenance.iter().map(|p| p.frame).collect();
        prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
        for (p, label) in set.provenance.iter().zip(&set.labels) {
            let pos = (0.0125f32 as f64 + p.frame as f64 / 100.0) * 16000.0;
            let seg = a.segment_at(pos.round()).unwrap();
            prop_assert_eq!(Some(*label), map(&[0, 1, 2, 3]).get(&seg.phone));
        }
    }

    #[test]
    fn map_row_order_is_irrelevant(
        bounds in proptest::collection::vec((1u64..2000, 0usize..4), 1..8),
        frames in 1usize..120,
    ) {
        let (m, text) = utterance(&bounds, frames);
        let a = read_alignment(text.as_bytes(), "u", 16000).unwrap();
        let one = label_utterance(&m, &a, &map(&[0, 1, 2, 3]), &drop_list()).unwrap();
        let two = label_utterance(&m, &a, &map(&[3, 1, 0, 2]), &drop_list()).unwrap();
        prop_assert_eq!(one, two);
    }
}

#[test]
fn unmapped_phones_are_all_listed() {
    let (m, _) = utterance(&[], 10);
    let a = read_alignment("0 800 zz\n800 1600 qq\n".as_bytes(), "u", 16000).unwrap();
    let err = label_utterance(&m, &a, &map(&[0]), &[])
        .unwrap_err()
        .to_string();
    assert!(err.contains("zz") && err.contains("qq"), "{err}");
}

#[test]
fn dropped_phone_needs_no_map_entry() {
    let (m, _) = utterance(&[], 10);
    let a = read_alignment("0 800 h#\n800 1600 aa\n".as_bytes(), "u", 16000).unwrap();
    let (set, counts) = label_utterance(&m, &a, &map(&[0]), &drop_list()).unwrap();
    assert_eq!(
        (counts.kept, counts.dropped, counts.out_of_segment),
        (5, 4, 1)
    );
    assert!(set
        .labels
        .iter()
        .all(|l| *l == map(&[0]).get("aa").unwrap()));
    let _: &AfVector = &set.labels[0];
}
