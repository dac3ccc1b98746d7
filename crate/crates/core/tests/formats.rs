use proptest::prelude::*;
use raloop::cayley_oracle::{materialize, CayleyTable, FormatError, LoopDefect};
use raloop::classification::{build_canonical, build_row, CanonicalType, Params, RowSpec};
use raloop::document::{PresentationDoc, SpecDoc, SpecKind};

fn params() -> impl Strategy<Value = Params> {
    (1u32..=3, 1u32..=3, 1u32..=3, 1u32..=3).prop_map(|(m1, m2, m3, k)| Params { m1, m2, m3, k })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn presentation_documents_round_trip(row in 1u32..=54, p in params()) {
        let spec = RowSpec::new(row).unwrap();
        let p = if spec.starred { Params { m1: 1, ..p } } else { p };
        let l = build_row(&spec, &p).unwrap();
        let doc = PresentationDoc::from_loop(&l).unwrap();
        let text = doc.to_text();
        let back = PresentationDoc::parse(&text).unwrap();
        prop_assert_eq!(back.to_text(), text);
        prop_assert_eq!(back.to_loop().unwrap(), l);
    }

    #[test]
    fn spec_documents_round_trip(id in 1u32..=54, p in params(), row in any::<bool>()) {
        let kind = if row { SpecKind::Row } else { SpecKind::Type };
        let params = [("m1", p.m1), ("k", p.k)].into_iter().map(|(n, v)| (n.to_string(), v)).collect();
        let doc = SpecDoc { kind, id, params };
        let text = doc.to_text();
        let back = SpecDoc::parse(&text).unwrap();
        prop_assert_eq!(back.to_text(), text);
        prop_assert_eq!(back, doc);
    }

    #[test]
    fn shuffled_tables_round_trip(seed in any::<u64>(), id in prop::sample::select(vec![1u32, 2, 3, 4])) {
        use rand::{seq::SliceRandom, SeedableRng};
        let l = build_canonical(&CanonicalType::new(id).unwrap(), &Params::default()).unwrap();
        let t = materialize(&l).unwrap().0;
        let mut perm: Vec<usize> = (1..t.n()).collect();
        perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        perm.insert(0, 0);
        let shuffled = t.relabel(&perm);
        let text = shuffled.to_text();
        let back = CayleyTable::parse(&text).unwrap();
        prop_assert_eq!(back.to_text(), text);
        prop_assert_eq!(back, shuffled);
    }

    #[test]
    fn transposed_entries_are_rejected(row in 1usize..16, a in 0usize..16, b in 0usize..16) {
        prop_assume!(a != b);
        let l = build_canonical(&CanonicalType::new(1).unwrap(), &Params::default()).unwrap();
        let t = materialize(&l).unwrap().0;
        let mut broken = t.clone();
        let (va, vb) = (t.mul(row, a), t.mul(row, b));
        broken.set(row, a, vb);
        broken.set(row, b, va);
        let err = CayleyTable::parse(&broken.to_text()).unwrap_err();
        let is_defect = matches!(err, FormatError::Defect(_));
        prop_assert!(is_defect);
        prop_assert!(err.to_string().contains("cell ("));
    }
}

#[test]
fn presentation_document_text() {
    let l = build_row(&RowSpec::new(6).unwrap(), &Params::default()).unwrap();
    let text = PresentationDoc::from_loop(&l).unwrap().to_text();
    assert_eq!(
        text,
        "factor_orders = [2, 0]\nfactor_names = [\"t1\", \"w\"]\nt1_index = 0\nm1 = 1\nx_sq = [0, 0]\ny_sq = [0, 0]\ng0 = [1, 1]\n"
    );
}

#[test]
fn truncated_table_names_the_line() {
    let err = CayleyTable::parse("cayley 1\n3\n0 1 2\n1 2 0\n").unwrap_err();
    assert_eq!(err.to_string(), "line 5: missing row 2 of 3");
    let err = CayleyTable::parse("cayley 1\n2\n0 1\n1 1\n").unwrap_err();
    assert!(matches!(err, FormatError::Defect(LoopDefect::RowRepeat { .. } | LoopDefect::ColumnRepeat { .. })));
}
