use std::collections::HashSet;

/// An ordered list of devices; position is rank, `members[0]` is the master.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group<I> {
    pub id: u64,
    pub members: Vec<u32>,
    /// Information pooled at the master.
    pub info: I,
}

/// What one member knows about its own group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GroupView {
    pub id: u64,
    pub size: u32,
    pub rank: u32,
    pub master: u32,
}

impl GroupView {
    pub fn singleton(id: u64, device: u32) -> Self {
        GroupView {
            id,
            size: 1,
            rank: 0,
            master: device,
        }
    }

    pub fn is_master(&self) -> bool {
        self.rank == 0
    }
}

impl<I> Group<I> {
    pub fn singleton(id: u64, device: u32, info: I) -> Self {
        Group {
            id,
            members: vec![device],
            info,
        }
    }

    pub fn master(&self) -> Option<u32> {
        self.members.first().copied()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn rank_of(&self, device: u32) -> Option<u32> {
        self.members
            .iter()
            .position(|&d| d == device)
            .map(|r| r as u32)
    }

    /// Local views of every member, in rank order.
    pub fn views(&self) -> Vec<GroupView> {
        let master = self.members.first().copied().unwrap_or(0);
        let size = self.members.len() as u32;
        (0..size)
            .map(|rank| GroupView {
                id: self.id,
                size,
                rank,
                master,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("groups share {} device(s), first {}", .shared.len(), .shared[0])]
pub struct OverlapError {
    pub shared: Vec<u32>,
}

/// Concatenate `a` then `b`: the master of `a` stays master and members of `b`
/// move up by `|a|` ranks. An empty side leaves the other unchanged.
pub fn merge_groups<I: crate::Info>(
    a: Group<I>,
    b: Group<I>,
    new_id: u64,
) -> Result<Group<I>, OverlapError> {
    let seen: HashSet<u32> = a.members.iter().copied().collect();
    let shared: Vec<u32> = b
        .members
        .iter()
        .copied()
        .filter(|d| seen.contains(d))
        .collect();
    if !shared.is_empty() {
        return Err(OverlapError { shared });
    }
    if b.members.is_empty() {
        return Ok(a);
    }
    if a.members.is_empty() {
        return Ok(b);
    }
    let mut members = a.members;
    members.extend(b.members);
    let mut info = a.info;
    info.merge(b.info);
    Ok(Group {
        id: new_id,
        members,
        info,
    })
}
