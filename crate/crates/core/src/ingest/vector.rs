use std::fmt;

/// Width of the canonical probe-request vector in bits.
pub const VECTOR_BITS: usize = 1784;
/// Width of the canonical probe-request vector in bytes.
pub const VECTOR_BYTES: usize = VECTOR_BITS / 8;

/// Fixed-width bit layout of one probe request.
///
/// Bits are numbered from 0 and stored most-significant-bit first within
/// each byte, so bit `j` lives in byte `j / 8` under mask `0x80 >> (j % 8)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ProbeBits([u8; VECTOR_BYTES]);

impl ProbeBits {
    pub fn zeroed() -> Self {
        ProbeBits([0u8; VECTOR_BYTES])
    }

    pub fn from_bytes(bytes: [u8; VECTOR_BYTES]) -> Self {
        ProbeBits(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; VECTOR_BYTES] {
        &self.0
    }

    pub fn as_bytes_mut(&mut self) -> &mut [u8; VECTOR_BYTES] {
        &mut self.0
    }

    pub fn bit(&self, index: usize) -> bool {
        self.0[index / 8] & (0x80 >> (index % 8)) != 0
    }

    pub fn set_bit(&mut self, index: usize, value: bool) {
        let mask = 0x80u8 >> (index % 8);
        if value {
            self.0[index / 8] |= mask;
        } else {
            self.0[index / 8] &= !mask;
        }
    }

    pub fn flip_bit(&mut self, index: usize) {
        self.0[index / 8] ^= 0x80 >> (index % 8);
    }

    /// Number of set bits in `[start, start + len)`.
    ///
    /// Panics if the range extends past [`VECTOR_BITS`].
    pub fn count_ones(&self, start: usize, len: usize) -> u32 {
        let end = start + len;
        assert!(end <= VECTOR_BITS, "bit range {start}..{end} out of bounds");
        let mut count = 0;
        let mut pos = start;
        while pos < end {
            let offset = pos % 8;
            let take = (8 - offset).min(end - pos);
            let mask = ((0xFFu16 >> offset) & (0xFFu16 << (8 - offset - take))) as u8;
            count += (self.0[pos / 8] & mask).count_ones();
            pos += take;
        }
        count
    }

    pub fn count_all(&self) -> u32 {
        self.0.iter().map(|b| b.count_ones()).sum()
    }
}

impl Default for ProbeBits {
    fn default() -> Self {
        Self::zeroed()
    }
}

impl fmt::Debug for ProbeBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let used = self.0.iter().rposition(|&b| b != 0).map_or(0, |i| i + 1);
        write!(f, "ProbeBits({}", hex::encode(&self.0[..used]))?;
        if used < VECTOR_BYTES {
            write!(f, " +{} zero bytes", VECTOR_BYTES - used)?;
        }
        write!(f, ")")
    }
}

/// A dissected probe request together with its ground-truth device label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeVector {
    pub bits: ProbeBits,
    pub device_label: String,
    pub channel: u8,
    pub source_frame_index: usize,
}

impl ProbeVector {
    pub fn new(bits: ProbeBits, device_label: impl Into<String>, channel: u8) -> Self {
        ProbeVector {
            bits,
            device_label: device_label.into(),
            channel,
            source_frame_index: 0,
        }
    }

    pub fn with_frame_index(mut self, index: usize) -> Self {
        self.source_frame_index = index;
        self
    }
}
