use det_protocols::{det_census, det_leader_election, detcensus_round, detle_round, Pairing};
use group_kit::{Group, IdSet, ProtocolError};
use radio_core::{ModelKind, RunConfig};

fn cfg() -> RunConfig {
    RunConfig::default()
}

#[test]
fn detle_two_singletons_merge_in_two_slots() {
    let r = detle_round(2, &[0, 1], ModelKind::SenderCD, &cfg()).unwrap();
    assert_eq!(
        r.pairings[0].1,
        Pairing::Merged {
            partner: 1,
            partner_master: 1
        }
    );
    assert_eq!(
        r.pairings[1].1,
        Pairing::Merged {
            partner: 0,
            partner_master: 0
        }
    );
    assert_eq!(r.metrics.slot_count, 2);
}

#[test]
fn detle_groups_alone_in_their_intervals_meet_at_the_top() {
    let r = detle_round(4, &[0, 3], ModelKind::SenderCD, &cfg()).unwrap();
    assert!(r
        .pairings
        .iter()
        .all(|(_, p)| matches!(p, Pairing::Merged { .. })));
}

#[test]
fn detle_lone_promoted_group_terminates() {
    let r = detle_round(16, &[1, 2, 9], ModelKind::SenderCD, &cfg()).unwrap();
    assert_eq!(
        r.pairings[0].1,
        Pairing::Merged {
            partner: 2,
            partner_master: 1
        }
    );
    assert_eq!(
        r.pairings[1].1,
        Pairing::Merged {
            partner: 1,
            partner_master: 0
        }
    );
    assert_eq!(r.pairings[2].1, Pairing::Terminated);
}

#[test]
fn detle_needs_two_groups() {
    let err = detle_round(16, &[4], ModelKind::SenderCD, &cfg()).unwrap_err();
    assert!(matches!(err, ProtocolError::PreconditionViolated(_)));
}

#[test]
fn two_devices_elect_cheaply() {
    let r = det_leader_election(2, &[0, 1], false, ModelKind::SenderCD, &cfg()).unwrap();
    assert_eq!(r.leaders.len(), 1);
    assert!(r.metrics.max_energy <= 4);
}

#[test]
fn lone_device_elects_itself() {
    for pre in [false, true] {
        let r = det_leader_election(16, &[3], pre, ModelKind::SenderCD, &cfg()).unwrap();
        assert_eq!(r.leaders, vec![3]);
        assert_eq!(r.outcomes[0].1.heard, Some(3));
    }
}

#[test]
fn strong_cd_works_and_weaker_models_are_rejected() {
    let r = det_leader_election(32, &[1, 7, 30], true, ModelKind::StrongCD, &cfg()).unwrap();
    assert_eq!(r.leaders.len(), 1);
    for m in [ModelKind::ReceiverCD, ModelKind::NoCD] {
        assert!(matches!(
            det_leader_election(32, &[1], true, m, &cfg()),
            Err(ProtocolError::PreconditionViolated(_))
        ));
        assert!(matches!(
            det_census(32, &[1], m, &cfg()),
            Err(ProtocolError::PreconditionViolated(_))
        ));
    }
}

#[test]
fn empty_input_is_an_error() {
    assert_eq!(
        det_leader_election(8, &[], false, ModelKind::SenderCD, &cfg()).unwrap_err(),
        ProtocolError::NoActiveDevices
    );
    assert_eq!(
        det_census(8, &[], ModelKind::SenderCD, &cfg()).unwrap_err(),
        ProtocolError::NoActiveDevices
    );
}

fn group(id: u64, members: std::ops::Range<u32>) -> Group<IdSet> {
    Group {
        id,
        info: members.clone().collect(),
        members: members.collect(),
    }
}

#[test]
fn single_group_stops_after_the_probe() {
    let r = detcensus_round(64, 3, &[group(17, 0..4)], ModelKind::SenderCD, &cfg()).unwrap();
    assert_eq!(r.leader_group, vec![0, 1, 2, 3]);
    assert_eq!(r.info.to_vec(), vec![0, 1, 2, 3]);
    assert_eq!(r.metrics.slot_count, 1);
    assert!(r.metrics.ledgers.iter().all(|l| l.energy() == 1));
}

#[test]
fn two_groups_in_two_ids_merge_with_rank_shift() {
    let r = detcensus_round(
        2,
        3,
        &[group(1, 10..12), group(0, 20..22)],
        ModelKind::SenderCD,
        &cfg(),
    )
    .unwrap();
    assert_eq!(r.leader_group, vec![20, 21, 10, 11]);
    assert_eq!(r.info.to_vec(), vec![10, 11, 20, 21]);
    assert_eq!(r.metrics.slot_count, 3);
}

#[test]
fn full_census_over_256() {
    let active: Vec<u32> = (0..256).collect();
    let r = det_census(256, &active, ModelKind::SenderCD, &cfg()).unwrap();
    assert_eq!(r.census.unwrap().to_vec(), active);
    assert_eq!(r.announcers.len(), 1);
}

#[test]
fn census_over_eight() {
    let all: Vec<u32> = (0..8).collect();
    assert_eq!(
        det_census(8, &all, ModelKind::SenderCD, &cfg())
            .unwrap()
            .census
            .unwrap()
            .to_vec(),
        all
    );
    assert_eq!(
        det_census(8, &[5], ModelKind::SenderCD, &cfg())
            .unwrap()
            .census
            .unwrap()
            .to_vec(),
        vec![5]
    );
}
