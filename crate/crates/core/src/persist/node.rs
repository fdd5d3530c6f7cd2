use crate::tree::Payload;

/// Upper time bound of a rectangle nothing has been placed above yet.
pub const OPEN: u64 = u64::MAX;

/// A space-time rectangle: cells `space_lo..=space_hi`, versions `time_lo..time_hi`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StNode {
    pub space_lo: u32,
    pub space_hi: u32,
    pub time_lo: u64,
    pub time_hi: u64,
    pub is_full: bool,
    /// Value of the cell at `time_lo` (leaves only).
    pub boundary_value: i64,
    /// The single write inside the rectangle (leaves only).
    pub point: Option<(u64, i64)>,
}

impl StNode {
    pub fn open(space_lo: usize, space_hi: usize, time_lo: u64) -> Self {
        StNode {
            space_lo: space_lo as u32,
            space_hi: space_hi as u32,
            time_lo,
            time_hi: OPEN,
            ..StNode::default()
        }
    }

    pub fn is_open(&self) -> bool {
        self.time_hi == OPEN
    }

    pub fn contains(&self, cell: usize, version: u64) -> bool {
        (self.space_lo as usize..=self.space_hi as usize).contains(&cell) && self.time_lo <= version && version < self.time_hi
    }

    pub fn width(&self) -> usize {
        (self.space_hi - self.space_lo) as usize + 1
    }

    /// Value at `version`, for a leaf containing it.
    pub fn value_at(&self, version: u64) -> i64 {
        match self.point {
            Some((v, x)) if v <= version => x,
            _ => self.boundary_value,
        }
    }
}

const ENCODED_LEN: usize = 4 + 4 + 8 + 8 + 1 + 8 + 1 + 8 + 8;

impl Payload for StNode {
    fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(ENCODED_LEN);
        out.extend_from_slice(&self.space_lo.to_be_bytes());
        out.extend_from_slice(&self.space_hi.to_be_bytes());
        out.extend_from_slice(&self.time_lo.to_be_bytes());
        out.extend_from_slice(&self.time_hi.to_be_bytes());
        out.push(self.is_full as u8);
        out.extend_from_slice(&self.boundary_value.to_be_bytes());
        let (has, (v, x)) = match self.point {
            Some(p) => (1, p),
            None => (0, (0, 0)),
        };
        out.push(has);
        out.extend_from_slice(&v.to_be_bytes());
        out.extend_from_slice(&x.to_be_bytes());
        out
    }

    fn from_bytes(bytes: &[u8]) -> Option<Self> {
        if bytes.len() != ENCODED_LEN {
            return None;
        }
        let u32_at = |i: usize| u32::from_be_bytes(bytes[i..i + 4].try_into().unwrap());
        let u64_at = |i: usize| u64::from_be_bytes(bytes[i..i + 8].try_into().unwrap());
        let flag = |i: usize| match bytes[i] {
            0 => Some(false),
            1 => Some(true),
            _ => None,
        };
        let point = flag(33)?.then(|| (u64_at(34), u64_at(42) as i64));
        Some(StNode {
            space_lo: u32_at(0),
            space_hi: u32_at(4),
            time_lo: u64_at(8),
            time_hi: u64_at(16),
            is_full: flag(24)?,
            boundary_value: u64_at(25) as i64,
            point,
        })
    }
}
