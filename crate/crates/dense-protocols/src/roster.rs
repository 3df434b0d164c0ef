//! Membership lists carried by dense groups.
//!
//! Ranks always follow ascending device ID. While `DenseAlgo_i` runs its
//! recursive calls a group is made of the `r`-th subgroups of several larger
//! groups; [`Roster::Slice`] records that so a listener can rebuild the member
//! list of the next subgroup, or of the full groups once the calls are over.

use group_kit::{IdSet, Info};
use radio_core::wire::{Reader, Truncated, Writer};

const MAX_DEPTH: u32 = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Roster {
    Set(IdSet),
    Union(Vec<Roster>),
    /// Subgroup `r` (from 1) of `j` equal slices in rank order; the remainder belongs to none.
    Slice {
        r: u32,
        j: u32,
        of: Box<Roster>,
    },
}

impl Default for Roster {
    fn default() -> Self {
        Roster::Set(IdSet::new())
    }
}

impl Roster {
    pub fn members(&self) -> IdSet {
        match self {
            Roster::Set(s) => s.clone(),
            Roster::Union(v) => {
                let mut out = IdSet::new();
                for x in v {
                    out.union_with(&x.members());
                }
                out
            }
            Roster::Slice { r, j, of } => {
                let all = of.members();
                let q = all.len() / *j as usize;
                all.slice_ranks((*r as usize - 1) * q, *r as usize * q)
            }
        }
    }

    /// Replace the outermost slices by the groups they were cut from.
    pub fn unslice(self) -> Roster {
        match self {
            Roster::Slice { of, .. } => *of,
            Roster::Union(v) => {
                v.into_iter()
                    .map(Roster::unslice)
                    .fold(Roster::default(), |mut acc, x| {
                        acc.merge(x);
                        acc
                    })
            }
            s => s,
        }
    }

    /// Point the outermost slices at subgroup `r`.
    pub fn reslice(self, r: u32) -> Roster {
        match self {
            Roster::Slice { j, of, .. } => Roster::Slice { r, j, of },
            Roster::Union(v) => Roster::Union(v.into_iter().map(|x| x.reslice(r)).collect()),
            s => s,
        }
    }

    fn decode_at(r: &mut Reader<'_>, depth: u32) -> Result<Roster, Truncated> {
        if depth > MAX_DEPTH {
            return Err(Truncated);
        }
        match r.u8()? {
            0 => Ok(Roster::Set(IdSet::decode(r)?)),
            1 => {
                let n = r.var()?;
                let mut v = Vec::new();
                for _ in 0..n {
                    v.push(Roster::decode_at(r, depth + 1)?);
                }
                Ok(Roster::Union(v))
            }
            2 => {
                let (rr, j) = (r.var()? as u32, r.var()? as u32);
                if rr == 0 || rr > j {
                    return Err(Truncated);
                }
                Ok(Roster::Slice {
                    r: rr,
                    j,
                    of: Box::new(Roster::decode_at(r, depth + 1)?),
                })
            }
            _ => Err(Truncated),
        }
    }
}

impl Info for Roster {
    fn encode(&self, w: Writer) -> Writer {
        match self {
            Roster::Set(s) => s.encode(w.u8(0)),
            Roster::Union(v) => v
                .iter()
                .fold(w.u8(1).var(v.len() as u64), |w, x| x.encode(w)),
            Roster::Slice { r, j, of } => of.encode(w.u8(2).var(*r as u64).var(*j as u64)),
        }
    }

    fn decode(r: &mut Reader<'_>) -> Result<Roster, Truncated> {
        Roster::decode_at(r, 0)
    }

    fn merge(&mut self, other: Roster) {
        let this = std::mem::take(self);
        *self = match (this, other) {
            (Roster::Set(mut a), Roster::Set(b)) => {
                a.union_with(&b);
                Roster::Set(a)
            }
            (Roster::Set(a), x) if a.is_empty() => x,
            (x, Roster::Set(b)) if b.is_empty() => x,
            (Roster::Union(mut a), Roster::Union(b)) => {
                a.extend(b);
                Roster::Union(a)
            }
            (Roster::Union(mut a), x) => {
                a.push(x);
                Roster::Union(a)
            }
            (x, Roster::Union(mut b)) => {
                b.insert(0, x);
                Roster::Union(b)
            }
            (x, y) => Roster::Union(vec![x, y]),
        };
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[u32]) -> Roster {
        Roster::Set(v.iter().copied().collect())
    }

    #[test]
    fn slices_and_back() {
        let g = set(&[3, 5, 7, 9, 11]);
        let s2 = Roster::Slice {
            r: 2,
            j: 2,
            of: Box::new(g.clone()),
        };
        assert_eq!(s2.members().to_vec(), vec![7, 9]);
        let mut u = Roster::Slice {
            r: 1,
            j: 2,
            of: Box::new(set(&[20, 21])),
        };
        u.merge(s2.clone());
        assert_eq!(u.members().to_vec(), vec![7, 9, 20]);
        assert_eq!(u.clone().reslice(2).members().to_vec(), vec![7, 9, 21]);
        assert_eq!(
            u.clone().unslice().members().to_vec(),
            vec![3, 5, 7, 9, 11, 20, 21]
        );
        let bytes = u.encode(Writer::new()).finish();
        assert_eq!(Roster::decode(&mut Reader::new(&bytes)).unwrap(), u);
    }
}
