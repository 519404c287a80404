//! Capture ingestion: pcap reading, probe-request dissection and the
//! probe-vector dataset format.

mod capture;
mod dataset;
mod dissect;
mod vector;

pub use capture::{channel_from_freq, load_capture, read_capture, CapturedFrame, LabelMap, MacAddr, RawCapture};
pub use dataset::{
    load_vectors, read_vectors, save_vectors, write_vectors, DatasetError, DATASET_MAGIC, DATASET_VERSION,
};
pub use dissect::{
    dissect, elements, is_probe_request, DissectError, Element, ELEMENT_EXT_CAPABILITIES, ELEMENT_HT_CAPABILITIES,
    ELEMENT_VENDOR_SPECIFIC, EXT_LEN_BYTE, EXT_PAYLOAD, HT_LEN_BYTE, HT_PAYLOAD, MGMT_HEADER_LEN, VENDOR_REGION,
};
pub use vector::{ProbeBits, ProbeVector, VECTOR_BITS, VECTOR_BYTES};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed capture {path}: {source}")]
    Capture {
        path: String,
        #[source]
        source: pcap_file::PcapError,
    },
    #[error("unsupported link type {0}; expected raw 802.11 or radiotap")]
    UnsupportedLinkType(String),
    #[error("record {record} refers to unknown pcapng interface {interface_id}")]
    UnknownInterface { record: usize, interface_id: u32 },
    #[error("probe request in record {record} has no device label")]
    UnlabeledFrame { record: usize },
    #[error("frame {frame}: {source}")]
    Dissect {
        frame: usize,
        #[source]
        source: DissectError,
    },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// Dissects every frame of a capture, preserving order.
pub fn export_vectors(capture: &RawCapture) -> Result<Vec<ProbeVector>, IngestError> {
    capture
        .frames
        .iter()
        .enumerate()
        .map(|(i, frame)| {
            let bits = dissect(&frame.payload).map_err(|source| IngestError::Dissect { frame: i, source })?;
            Ok(ProbeVector::new(bits, frame.device_label.clone(), frame.channel).with_frame_index(i))
        })
        .collect()
}
