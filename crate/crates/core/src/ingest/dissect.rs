//! Probe-request dissection into the canonical 1784-bit layout.
//!
//! Byte layout of the produced vector:
//!
//! | bytes     | bits        | content                                       |
//! |-----------|-------------|-----------------------------------------------|
//! | 0         | 0..8        | HT Capabilities length                        |
//! | 1..27     | 8..216      | HT Capabilities payload (26 bytes)            |
//! | 27        | 216..224    | Extended Capabilities length                  |
//! | 28..41    | 224..328    | Extended Capabilities payload (13 bytes)      |
//! | 41..223   | 328..1784   | raw Vendor Specific TLVs (id, len, payload)   |
//!
//! Element id bytes are dropped for HT and Extended Capabilities but kept in
//! the vendor region. Short segments are zero padded, long ones truncated.

use log::warn;
use thiserror::Error;

use super::vector::{ProbeBits, VECTOR_BYTES};

pub const MGMT_HEADER_LEN: usize = 24;

pub const ELEMENT_HT_CAPABILITIES: u8 = 45;
pub const ELEMENT_EXT_CAPABILITIES: u8 = 127;
pub const ELEMENT_VENDOR_SPECIFIC: u8 = 221;

pub const HT_LEN_BYTE: usize = 0;
pub const HT_PAYLOAD: std::ops::Range<usize> = 1..27;
pub const EXT_LEN_BYTE: usize = 27;
pub const EXT_PAYLOAD: std::ops::Range<usize> = 28..41;
pub const VENDOR_REGION: std::ops::Range<usize> = 41..VECTOR_BYTES;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DissectError {
    #[error("frame is {len} bytes, shorter than the {MGMT_HEADER_LEN}-byte management header")]
    TooShort { len: usize },
    #[error("frame control {frame_control:#06x} is not a probe request")]
    NotProbeRequest { frame_control: u16 },
    #[error("element {element_id} at offset {offset} declares {declared} bytes but only {remaining} remain")]
    MalformedElement {
        element_id: u8,
        offset: usize,
        declared: usize,
        remaining: usize,
    },
}

/// Returns true when the frame control field marks a probe request
/// (protocol version 0, type 0 management, subtype 4).
pub fn is_probe_request(frame: &[u8]) -> bool {
    frame
        .first()
        .is_some_and(|&fc| fc & 0x03 == 0 && fc & 0x0C == 0 && fc >> 4 == 4)
}

/// One tagged parameter borrowed from a frame body.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Element<'a> {
    pub id: u8,
    pub offset: usize,
    /// The complete TLV including the id and length bytes.
    pub raw: &'a [u8],
}

impl<'a> Element<'a> {
    pub fn payload(&self) -> &'a [u8] {
        &self.raw[2..]
    }
}

/// Walks the tagged parameters that follow the management header.
/// `base` is the frame offset of `body`, used only for error reporting.
pub fn elements(body: &[u8], base: usize) -> Result<Vec<Element<'_>>, DissectError> {
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < body.len() {
        let id = body[pos];
        if pos + 2 > body.len() {
            return Err(DissectError::MalformedElement {
                element_id: id,
                offset: base + pos,
                declared: 0,
                remaining: body.len() - pos - 1,
            });
        }
        let declared = body[pos + 1] as usize;
        let remaining = body.len() - pos - 2;
        if declared > remaining {
            return Err(DissectError::MalformedElement {
                element_id: id,
                offset: base + pos,
                declared,
                remaining,
            });
        }
        out.push(Element {
            id,
            offset: base + pos,
            raw: &body[pos..pos + 2 + declared],
        });
        pos += 2 + declared;
    }
    Ok(out)
}

/// Maps a probe-request frame (starting at the frame control field) to its
/// canonical bit vector.
pub fn dissect(frame: &[u8]) -> Result<ProbeBits, DissectError> {
    if frame.len() < MGMT_HEADER_LEN {
        return Err(DissectError::TooShort { len: frame.len() });
    }
    if !is_probe_request(frame) {
        return Err(DissectError::NotProbeRequest {
            frame_control: u16::from_le_bytes([frame[0], frame[1]]),
        });
    }

    let mut bits = ProbeBits::zeroed();
    let out = bits.as_bytes_mut();
    let mut seen_ht = false;
    let mut seen_ext = false;
    let mut vendor_pos = VENDOR_REGION.start;

    for element in elements(&frame[MGMT_HEADER_LEN..], MGMT_HEADER_LEN)? {
        match element.id {
            ELEMENT_HT_CAPABILITIES => {
                if seen_ht {
                    warn!(
                        "duplicate HT Capabilities at offset {}; keeping the first",
                        element.offset
                    );
                    continue;
                }
                seen_ht = true;
                write_segment(out, HT_LEN_BYTE, HT_PAYLOAD, element.payload(), "HT Capabilities");
            }
            ELEMENT_EXT_CAPABILITIES => {
                if seen_ext {
                    warn!(
                        "duplicate Extended Capabilities at offset {}; keeping the first",
                        element.offset
                    );
                    continue;
                }
                seen_ext = true;
                write_segment(
                    out,
                    EXT_LEN_BYTE,
                    EXT_PAYLOAD,
                    element.payload(),
                    "Extended Capabilities",
                );
            }
            ELEMENT_VENDOR_SPECIFIC => {
                let room = VENDOR_REGION.end - vendor_pos;
                let take = element.raw.len().min(room);
                if take < element.raw.len() {
                    warn!(
                        "vendor region full: truncating element at offset {} from {} to {} bytes",
                        element.offset,
                        element.raw.len(),
                        take
                    );
                }
                out[vendor_pos..vendor_pos + take].copy_from_slice(&element.raw[..take]);
                vendor_pos += take;
            }
            _ => {}
        }
    }
    Ok(bits)
}

fn write_segment(
    out: &mut [u8; VECTOR_BYTES],
    len_byte: usize,
    region: std::ops::Range<usize>,
    payload: &[u8],
    name: &str,
) {
    out[len_byte] = payload.len() as u8;
    let take = payload.len().min(region.len());
    if take < payload.len() {
        warn!("{name} payload of {} bytes truncated to {take}", payload.len());
    }
    out[region.start..region.start + take].copy_from_slice(&payload[..take]);
}
