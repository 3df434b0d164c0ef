use group_kit::{merge_groups, Group, IdSet, OverlapError};
use proptest::prelude::*;

fn g(id: u64, members: &[u32]) -> Group<IdSet> {
    Group {
        id,
        members: members.to_vec(),
        info: members.iter().copied().collect(),
    }
}

#[test]
fn merge_concatenates_and_shifts_ranks() {
    let m = merge_groups(g(0, &[10, 11]), g(1, &[12, 13]), 0).unwrap();
    assert_eq!(m.members, vec![10, 11, 12, 13]);
    assert_eq!(m.master(), Some(10));
    assert_eq!(m.rank_of(12), Some(2));
    assert_eq!(m.info.to_vec(), vec![10, 11, 12, 13]);
    let views = m.views();
    assert!(views
        .iter()
        .all(|v| v.master == 10 && v.size == 4 && v.id == 0));
    assert_eq!(views[3].rank, 3);
}

#[test]
fn merge_with_empty_is_identity() {
    let a = g(4, &[1, 2, 3]);
    assert_eq!(merge_groups(a.clone(), g(9, &[]), 7).unwrap(), a);
}

#[test]
fn overlap_is_rejected() {
    let err = merge_groups(g(0, &[1, 2]), g(1, &[2, 3]), 0).unwrap_err();
    assert_eq!(err, OverlapError { shared: vec![2] });
}

proptest! {
    #[test]
    fn merging_is_associative_on_members(
        sizes in proptest::collection::vec(0usize..6, 3),
    ) {
        let mut next = 0u32;
        let mut parts = Vec::new();
        for (i, s) in sizes.iter().enumerate() {
            let m: Vec<u32> = (next..next + *s as u32).collect();
            next += *s as u32;
            parts.push(g(i as u64, &m));
        }
        let left = merge_groups(merge_groups(parts[0].clone(), parts[1].clone(), 0).unwrap(), parts[2].clone(), 0).unwrap();
        let right = merge_groups(parts[0].clone(), merge_groups(parts[1].clone(), parts[2].clone(), 0).unwrap(), 0).unwrap();
        let mut a = left.members.clone();
        let mut b = right.members.clone();
        a.sort();
        b.sort();
        prop_assert_eq!(a, b);
        prop_assert_eq!(left.info, right.info);
    }
}

proptest! {
    #[test]
    fn idset_rank_and_slices(ids in proptest::collection::btree_set(0u32..5000, 0..200), lo in 0usize..200, len in 0usize..200) {
        let s: IdSet = ids.iter().copied().collect();
        let v: Vec<u32> = ids.iter().copied().collect();
        for (k, id) in v.iter().enumerate() {
            prop_assert_eq!(s.rank(*id), Some(k as u32));
        }
        prop_assert_eq!(s.rank(5001), None);
        let hi = (lo + len).min(v.len());
        let want: Vec<u32> = v.get(lo.min(v.len())..hi.max(lo.min(v.len()))).unwrap_or(&[]).to_vec();
        prop_assert_eq!(s.slice_ranks(lo, lo + len).to_vec(), want);
    }
}

proptest! {
    #[test]
    fn idset_ranges_roundtrip(ranges in proptest::collection::vec((0u32..3000, 0u32..300), 0..12), singles in proptest::collection::vec(0u32..4000, 0..40)) {
        let mut s = IdSet::new();
        let mut want = std::collections::BTreeSet::new();
        for (lo, len) in ranges {
            s.insert_range(lo, lo + len);
            want.extend(lo..lo + len);
        }
        for id in singles {
            s.insert(id);
            want.insert(id);
        }
        prop_assert_eq!(s.to_vec(), want.iter().copied().collect::<Vec<_>>());
        let bytes = s.encode(radio_core::wire::Writer::new()).finish();
        let mut r = radio_core::wire::Reader::new(&bytes);
        let back = IdSet::decode(&mut r).unwrap();
        prop_assert!(r.is_empty());
        prop_assert_eq!(back.to_vec(), s.to_vec());
    }
}

proptest! {
    #[test]
    fn idset_rank_and_len_agree(ids in proptest::collection::btree_set(0u32..3000, 0..300), probe in 0u32..3100) {
        let s: IdSet = ids.iter().copied().collect();
        prop_assert_eq!(s.rank_and_len(probe), (s.rank(probe), s.len()));
    }
}
