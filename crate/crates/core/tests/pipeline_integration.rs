//! Cross-module pipeline checks: stage composition against hand-pipelined
//! text, transliterated artifacts, and adapter-vs-metric consistency.

mod common;

use std::collections::HashMap;

use mnmt_core::corpus::{pair_corpora, LineCorpus};
use mnmt_core::lang::{parse_language_tag, LanguageTag, Script};
use mnmt_core::metrics::corpus_bleu;
use mnmt_core::normalize::{
    lowercase_english, minimize_whitespace, normalize_line, tokenize, NormalizationRuleSet,
};
use mnmt_core::pipeline::{
    evaluate, prepare, preprocess_corpus, IdentityAdapter, LookupAdapter, Order, PipelineConfig,
    Translator,
};
use mnmt_core::subword::{debinarize, BinarizedCorpus};
use mnmt_core::translit::{transliterate_line, MapRegistry};
use mnmt_core::Error;

fn tag(code: &str) -> LanguageTag {
    parse_language_tag(code).unwrap()
}

#[test]
fn prepare_matches_hand_pipelined_stages_on_toy_corpus() {
    // ten lines with punctuation, stray whitespace, uppercase and Devanagari
    let en_lines: Vec<String> = vec![
        "The Quick  BROWN fox, runs.".into(),
        "Rivers flow; mountains stand.".into(),
        "A stitch in time saves nine!".into(),
        "What is this…".into(),
        "Numbers 3.14 and 2.71 stay.".into(),
        "Hello,   world.".into(),
        "Short one".into(),
        "UPPER and lower Case".into(),
        "pack my box with jugs".into(),
        "the final line ends here.".into(),
    ];
    let hi_lines: Vec<String> = vec![
        "क्या यह ठीक है|".into(),
        "नदी बहती  है।".into(),
        "समय पर काम करो!".into(),
        "यह क्या है…".into(),
        "अंक १२३ यहाँ हैं।".into(),
        "नमस्ते,   दुनिया।".into(),
        "छोटा वाक्य".into(),
        "ऊपर और नीचे".into(),
        "मेरा घर दूर है।".into(),
        "अंतिम पंक्ति यहाँ।".into(),
    ];
    let pair = pair_corpora(
        LineCorpus::new(en_lines.clone(), tag("EN")),
        LineCorpus::new(hi_lines.clone(), tag("HI")),
    )
    .unwrap();

    let dir = tempfile::tempdir().unwrap();
    let mut config = PipelineConfig::new(tag("EN"), vec![tag("HI")], Order::FromCommon);
    config.bpe_operations = 5;
    let registry = MapRegistry::builtin();
    let prep = prepare(&config, std::slice::from_ref(&pair), dir.path(), registry).unwrap();

    // hand-pipeline each side: tokenize, lowercase (EN only), normalize,
    // minimize whitespace, then replay the learned merges via the oracle
    let hand = |lines: &[String], code: &str| -> Vec<String> {
        let lang = tag(code);
        let rules = NormalizationRuleSet::for_language(lang);
        lines
            .iter()
            .map(|l| {
                let mut s = tokenize(l, lang);
                if code == "EN" {
                    s = lowercase_english(&s);
                }
                s = normalize_line(&s, &rules);
                s = minimize_whitespace(&s);
                common::bpe_apply_replay(&s, &prep.model.merges)
            })
            .collect()
    };
    let expected_src = hand(&en_lines, "EN");
    let expected_tgt = hand(&hi_lines, "HI");

    let src_bin = BinarizedCorpus::from_bytes(
        &std::fs::read(prep.run_dir.join("bin/EN-HI.src.bin")).unwrap(),
    )
    .unwrap();
    let tgt_bin = BinarizedCorpus::from_bytes(
        &std::fs::read(prep.run_dir.join("bin/EN-HI.tgt.bin")).unwrap(),
    )
    .unwrap();
    assert_eq!(debinarize(&src_bin, &prep.vocab).unwrap(), expected_src);
    assert_eq!(debinarize(&tgt_bin, &prep.vocab).unwrap(), expected_tgt);
}

#[test]
fn translit_prepare_leaves_no_covered_indic_codepoints() {
    let en: Vec<String> = (0..40).map(|i| format!("some english line {i} here")).collect();
    let hi: Vec<String> = (0..40)
        .map(|i| format!("नमस्ते दुनिया {} की कीमत है।", i % 7))
        .collect();
    let pair = pair_corpora(
        LineCorpus::new(en, tag("EN")),
        LineCorpus::new(hi, tag("HI")),
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut config = PipelineConfig::new(tag("EN"), vec![tag("HI")], Order::FromCommon);
    config.bpe_operations = 10;
    config.is_translit = true;
    let registry = MapRegistry::builtin();
    let prep = prepare(&config, &[pair], dir.path(), registry).unwrap();

    let map = registry.get(tag("HI")).unwrap();
    for name in ["merges.bpe", "dict.txt"] {
        let text = std::fs::read_to_string(prep.run_dir.join(name)).unwrap();
        for c in text.chars() {
            if Script::Devanagari.contains(c) {
                assert!(
                    !map.entries.contains_key(&c),
                    "covered codepoint {c:?} survived into {name}"
                );
            }
        }
    }
    assert_eq!(prep.manifest.get("bleu_space"), Some("itrans"));
    assert!(prep.manifest.get("map_hash.HI").is_some());
}

#[test]
fn evaluate_identity_adapter_scores_source_against_reference() {
    let src: Vec<String> = (0..30).map(|i| format!("left tokens {i} here now")).collect();
    let tgt: Vec<String> = (0..30)
        .map(|i| {
            if i % 4 == 0 {
                format!("left tokens {i} here now")
            } else {
                format!("right words {i} there then")
            }
        })
        .collect();
    let pair = pair_corpora(
        LineCorpus::new(src, tag("EN")),
        LineCorpus::new(tgt, tag("HI")),
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut config = PipelineConfig::new(tag("EN"), vec![tag("HI")], Order::FromCommon);
    config.bpe_operations = 8;
    let registry = MapRegistry::builtin();
    let prep = prepare(&config, std::slice::from_ref(&pair), dir.path(), registry).unwrap();

    let score = evaluate(&IdentityAdapter, &pair, &prep, registry).unwrap();

    // independent route: BLEU of the preprocessed source against the
    // preprocessed reference (identity adapter passes BPE text through,
    // decoding undoes the segmentation)
    let src_pre = preprocess_corpus(&pair.src, false, registry).unwrap();
    let tgt_pre = preprocess_corpus(&pair.tgt, false, registry).unwrap();
    let direct = corpus_bleu(&src_pre.lines, &tgt_pre.lines).unwrap();
    assert!((score - direct).abs() < 1e-9, "evaluate {score} vs direct {direct}");
    assert!(score > 0.0 && score < 100.0);
}

#[test]
fn evaluate_rejects_wrong_line_count_adapter() {
    struct Truncating;
    impl Translator for Truncating {
        fn translate(
            &self,
            lines: &[String],
            _: LanguageTag,
            _: LanguageTag,
        ) -> mnmt_core::Result<Vec<String>> {
            Ok(lines[..lines.len() - 1].to_vec())
        }
    }
    let lines: Vec<String> = (0..10).map(|i| format!("line number {i} text")).collect();
    let pair = pair_corpora(
        LineCorpus::new(lines.clone(), tag("EN")),
        LineCorpus::new(lines, tag("HI")),
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut config = PipelineConfig::new(tag("EN"), vec![tag("HI")], Order::FromCommon);
    config.bpe_operations = 4;
    let registry = MapRegistry::builtin();
    let prep = prepare(&config, std::slice::from_ref(&pair), dir.path(), registry).unwrap();
    match evaluate(&Truncating, &pair, &prep, registry) {
        Err(Error::Adapter { reason, .. }) => assert!(reason.contains("line count")),
        other => panic!("expected adapter error, got {other:?}"),
    }
}

#[test]
fn lookup_adapter_on_flores_sized_devtest_scores_100() {
    // 1012 lines, the devtest size used for evaluation
    let n = 1012;
    let src: Vec<String> = (0..n).map(|i| format!("source sentence {i} with words")).collect();
    let tgt: Vec<String> = (0..n).map(|i| format!("target sentence {i} with words")).collect();
    let pair = pair_corpora(
        LineCorpus::new(src, tag("EN")),
        LineCorpus::new(tgt, tag("HI")),
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut config = PipelineConfig::new(tag("EN"), vec![tag("HI")], Order::FromCommon);
    config.bpe_operations = 12;
    let registry = MapRegistry::builtin();
    let prep = prepare(&config, std::slice::from_ref(&pair), dir.path(), registry).unwrap();

    let src_pre = preprocess_corpus(&pair.src, false, registry).unwrap();
    let src_bpe = mnmt_core::subword::bpe_apply_corpus(&src_pre, &prep.model);
    let tgt_pre = preprocess_corpus(&pair.tgt, false, registry).unwrap();
    let table: HashMap<String, String> =
        src_bpe.lines.into_iter().zip(tgt_pre.lines).collect();
    let score = evaluate(&LookupAdapter::new(table), &pair, &prep, registry).unwrap();
    assert_eq!(score, 100.0);
}

#[test]
fn transliterated_evaluation_is_in_itrans_space() {
    // hypothesis and reference both transliterate, so an adapter that emits
    // ITRANS text of the reference scores 100
    let src: Vec<String> = (0..20).map(|i| format!("english words {i} in this line")).collect();
    let tgt: Vec<String> =
        (0..20).map(|i| format!("नमस्ते दुनिया {} की कीमत है।", i % 5)).collect();
    let pair = pair_corpora(
        LineCorpus::new(src, tag("EN")),
        LineCorpus::new(tgt, tag("HI")),
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut config = PipelineConfig::new(tag("EN"), vec![tag("HI")], Order::FromCommon);
    config.bpe_operations = 10;
    config.is_translit = true;
    let registry = MapRegistry::builtin();
    let prep = prepare(&config, std::slice::from_ref(&pair), dir.path(), registry).unwrap();

    let src_pre = preprocess_corpus(&pair.src, true, registry).unwrap();
    let src_bpe = mnmt_core::subword::bpe_apply_corpus(&src_pre, &prep.model);
    let tgt_pre = preprocess_corpus(&pair.tgt, true, registry).unwrap();
    assert!(tgt_pre.lines.iter().all(|l| l.chars().all(|c| c.is_ascii() || !Script::Devanagari.contains(c))));
    let table: HashMap<String, String> =
        src_bpe.lines.into_iter().zip(tgt_pre.lines).collect();
    let score = evaluate(&LookupAdapter::new(table), &pair, &prep, registry).unwrap();
    assert_eq!(score, 100.0);
}

#[test]
fn evaluate_rejects_changed_transliteration_maps() {
    let src: Vec<String> = (0..8).map(|i| format!("english words {i} in a line")).collect();
    let tgt: Vec<String> = (0..8).map(|i| format!("नमस्ते दुनिया {i} की कीमत")).collect();
    let pair = pair_corpora(
        LineCorpus::new(src, tag("EN")),
        LineCorpus::new(tgt, tag("HI")),
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut config = PipelineConfig::new(tag("EN"), vec![tag("HI")], Order::FromCommon);
    config.bpe_operations = 6;
    config.is_translit = true;
    let prep =
        prepare(&config, std::slice::from_ref(&pair), dir.path(), MapRegistry::builtin()).unwrap();

    // a registry whose HI map differs from the one recorded in the manifest
    let maps = tempfile::tempdir().unwrap();
    std::fs::write(maps.path().join("HI.map"), "#itrans-map v2 lang=HI\n0905\tzz\tIND_VOWEL\n")
        .unwrap();
    let other = MapRegistry::from_dir(maps.path()).unwrap();
    match evaluate(&IdentityAdapter, &pair, &prep, &other) {
        Err(Error::Config(msg)) => assert!(msg.contains("differs"), "{msg}"),
        other => panic!("expected config error on map mismatch, got {other:?}"),
    }
}

#[test]
fn transliterate_line_composes_with_masking() {
    // a mixed line: mapped Devanagari turns into ITRANS, embedded English
    // masks into the Thai block
    let map = MapRegistry::builtin().get(tag("HI")).unwrap();
    let out = transliterate_line("अx", &map);
    let masked_x = char::from_u32('x' as u32 + 0x0DC0).unwrap();
    assert_eq!(out, format!("a{masked_x}"));
}
