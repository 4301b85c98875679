mod common;

use bugrank::corpus::{Comment, Corpus};
use bugrank::features::{
    build_features, decode_embeddings, encode_embeddings, hashed_tfidf_embed, load_embeddings, save_embeddings,
    EmbeddingTable, FeatureError, FieldSpec, HashedTfidf, Precomputed, EMBEDDING_MAGIC,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_table(n: usize, dim: usize, rng: &mut ChaCha8Rng) -> EmbeddingTable {
    let mut ids: Vec<u64> = (0..n).map(|_| rng.gen()).collect();
    ids.sort_unstable();
    ids.dedup();
    let data = (0..ids.len() * dim).map(|_| rng.gen_range(-10.0f32..10.0)).collect();
    EmbeddingTable::new(ids, dim, data).unwrap()
}

fn raw_file(count: u32, dim: u32, records: &[(u64, Vec<f32>)]) -> Vec<u8> {
    let mut buf = EMBEDDING_MAGIC.to_vec();
    buf.extend_from_slice(&count.to_le_bytes());
    buf.extend_from_slice(&dim.to_le_bytes());
    for (id, row) in records {
        buf.extend_from_slice(&id.to_le_bytes());
        for x in row {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    buf
}

proptest! {
    #[test]
    fn embedding_file_round_trip_is_bit_exact(seed in any::<u64>(), n in 0usize..20, dim in 1usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table = random_table(n, dim, &mut rng);
        let back = decode_embeddings(&encode_embeddings(&table)).unwrap();
        prop_assert_eq!(back.ids.clone(), table.ids.clone());
        let bits = |t: &EmbeddingTable| t.data.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back), bits(&table));
    }
}

#[test]
fn save_load_reorders_to_expected_ids() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let table = random_table(10, 6, &mut rng);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.bin");
    save_embeddings(&path, &table).unwrap();
    let mut want = table.ids.clone();
    want.reverse();
    let loaded = load_embeddings(&path, &want).unwrap();
    assert_eq!(loaded.ids, want);
    assert_eq!(loaded.row(0), table.row(table.len() - 1));

    let mut missing = want.clone();
    missing.push(12345);
    assert!(matches!(load_embeddings(&path, &missing), Err(FeatureError::MissingId(12345))));
}

#[test]
fn header_dim_disagreeing_with_rows_is_rejected() {
    let bytes = raw_file(1, 768, &[(7, vec![0.5; 512])]);
    assert!(matches!(decode_embeddings(&bytes), Err(FeatureError::DimMismatch { .. })));
}

#[test]
fn corruption_and_bad_magic() {
    let good = raw_file(2, 3, &[(1, vec![1.0, 2.0, 3.0]), (2, vec![4.0, 5.0, 6.0])]);
    assert_eq!(decode_embeddings(&good).unwrap().ids, vec![1, 2]);
    let mut flipped = good.clone();
    flipped[20] ^= 0x10;
    assert!(matches!(decode_embeddings(&flipped), Err(FeatureError::ChecksumFailure)));
    let mut magic = good.clone();
    magic[0] = b'X';
    assert!(matches!(decode_embeddings(&magic), Err(FeatureError::BadMagic)));
    let dup = raw_file(2, 1, &[(9, vec![1.0]), (9, vec![2.0])]);
    assert!(matches!(decode_embeddings(&dup), Err(FeatureError::DuplicateId(9))));
}

#[test]
fn three_bug_fixture_at_full_width() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let table = random_table(3, 768, &mut rng);
    let bytes = encode_embeddings(&table);
    assert_eq!(bytes.len(), 6 + 4 + 4 + 3 * (8 + 768 * 4) + 4);
    let back = decode_embeddings(&bytes).unwrap();
    assert_eq!((back.len(), back.dim), (3, 768));
}

const WORDS_A: &[&str] = &["screen", "freeze", "login", "display", "panel", "brightness", "monitor", "resolution"];
const WORDS_B: &[&str] = &["audio", "sound", "speaker", "volume", "mixer", "headphone", "microphone", "codec"];

#[test]
fn disjoint_documents_are_nearly_orthogonal() {
    let a = WORDS_A.join(" ");
    let b = WORDS_B.join(" ");
    let corpus = [a.as_str(), b.as_str(), "unrelated filler text"];
    let mut below = 0;
    for seed in 0..100u64 {
        let m = HashedTfidf::fit(&corpus, 256, seed).unwrap();
        let (u, v) = (m.embed_text(&a), m.embed_text(&b));
        let cos: f64 = u.iter().zip(&v).map(|(x, y)| x * y).sum();
        if cos < 0.2 {
            below += 1;
        }
    }
    assert!(below >= 99, "{below} of 100 seeds below 0.2");
}

#[test]
fn tfidf_basics() {
    let corpus = ["crash on boot", "wifi drops"];
    assert_eq!(hashed_tfidf_embed(&corpus, 64, "").unwrap(), vec![0.0; 64]);
    assert_eq!(
        hashed_tfidf_embed(&corpus, 64, "crash on boot").unwrap(),
        hashed_tfidf_embed(&corpus, 64, "crash on boot").unwrap()
    );
}

fn small_corpus() -> Corpus {
    let t = common::ts(2017, 2, 1);
    let mut records = Vec::new();
    for (k, text) in ["sound stops after suspend", "screen flickers on login", "printer queue stuck"].iter().enumerate() {
        let mut r = common::record(10 + k as u64, t, &["p"]);
        r.description = format!("{text} see https://launchpad.net/bugs/{k}");
        r.comments = vec![
            Comment { ts: t, text: format!("confirmed {text}") },
            Comment { ts: common::ts(2019, 1, 1), text: "late follow up".into() },
        ];
        records.push(r);
    }
    Corpus::new(records, "small").unwrap()
}

#[test]
fn concatenation_prefix_and_widths() {
    let corpus = small_corpus();
    let ids: Vec<u64> = corpus.records().iter().map(|r| r.id).collect();
    let texts: Vec<String> = corpus.records().iter().map(|r| r.description.clone()).collect();
    let desc = HashedTfidf::fit(&texts, 100, 3).unwrap();
    let comm = HashedTfidf::fit(&texts, 24, 4).unwrap();
    let end = common::ts(2018, 6, 30);
    let both = build_features(&corpus, &ids, &desc, &comm, FieldSpec::Both, end).unwrap();
    let only_desc = build_features(&corpus, &ids, &desc, &comm, FieldSpec::Description, end).unwrap();
    let only_comm = build_features(&corpus, &ids, &desc, &comm, FieldSpec::Comments, end).unwrap();
    assert_eq!((both.dim, only_desc.dim, only_comm.dim), (124, 100, 24));
    for i in 0..ids.len() {
        assert_eq!(&both.row(i)[..100], only_desc.row(i));
        assert_eq!(&both.row(i)[100..], only_comm.row(i));
    }
    assert_eq!(both.node_ids, ids);
    assert!(matches!(
        build_features(&corpus, &[999], &desc, &comm, FieldSpec::Both, end),
        Err(FeatureError::UnknownNode(999))
    ));
}

#[test]
fn precomputed_widths_concatenate() {
    let corpus = small_corpus();
    let ids: Vec<u64> = corpus.records().iter().map(|r| r.id).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let data = (0..ids.len() * 768).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
    let table = EmbeddingTable::new(ids.clone(), 768, data).unwrap();
    let p = Precomputed::new("fixture", &table);
    let m = build_features(&corpus, &ids, &p, &p, FieldSpec::Both, common::ts(2018, 1, 1)).unwrap();
    assert_eq!(m.dim, 1536);
    assert_eq!(m.row(1)[0], f64::from(table.row(1)[0]));
}

#[test]
fn comment_outside_window_changes_only_comment_block() {
    let t = common::ts(2017, 3, 1);
    let mut inside = common::record(1, t, &["p"]);
    inside.comments = vec![Comment { ts: t, text: "crash".into() }];
    let mut outside = common::record(2, t, &["p"]);
    outside.description = inside.description.clone();
    outside.comments = vec![Comment { ts: common::ts(2019, 3, 1), text: "crash".into() }];
    let corpus = Corpus::new(vec![inside, outside], "w").unwrap();
    let provider = HashedTfidf::fit(&["crash", "bug 1 description"], 16, 0).unwrap();
    let m = build_features(&corpus, &[1, 2], &provider, &provider, FieldSpec::Both, common::ts(2018, 6, 30)).unwrap();
    assert_eq!(m.row(0)[..16], m.row(1)[..16]);
    assert_ne!(m.row(0)[16..], m.row(1)[16..]);
    assert!(m.row(1)[16..].iter().all(|&x| x == 0.0));
}
