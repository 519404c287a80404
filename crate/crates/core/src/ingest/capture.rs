//! Reading probe requests out of pcap / pcapng capture files.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use log::{debug, warn};
use pcap_file::pcap::PcapReader;
use pcap_file::pcapng::{Block, PcapNgReader};
use pcap_file::DataLink;

use super::dissect::{is_probe_request, MGMT_HEADER_LEN};
use super::IngestError;

pub type MacAddr = [u8; 6];

/// One probe request as captured, before dissection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapturedFrame {
    /// 802.11 frame starting at the frame control field, FCS stripped.
    pub payload: Vec<u8>,
    pub timestamp_us: u64,
    /// 2.4 GHz channel number, 0 when unknown.
    pub channel: u8,
    pub device_label: String,
    /// Index of the record inside its capture file.
    pub record_index: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawCapture {
    pub frames: Vec<CapturedFrame>,
}

impl RawCapture {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn extend(&mut self, other: RawCapture) {
        self.frames.extend(other.frames);
    }
}

/// Resolves device labels for captured frames.
///
/// The public datasets are organised one capture file per device, so the
/// usual setup is a single file-wide label. Per-MAC labels take precedence
/// when present.
#[derive(Debug, Clone, Default)]
pub struct LabelMap {
    pub file_label: Option<String>,
    pub by_mac: HashMap<MacAddr, String>,
    /// Channel used when the capture carries no radiotap channel field.
    pub default_channel: Option<u8>,
}

impl LabelMap {
    pub fn for_file(label: impl Into<String>) -> Self {
        LabelMap {
            file_label: Some(label.into()),
            ..Default::default()
        }
    }

    pub fn with_mac(mut self, mac: MacAddr, label: impl Into<String>) -> Self {
        self.by_mac.insert(mac, label.into());
        self
    }

    pub fn with_channel(mut self, channel: u8) -> Self {
        self.default_channel = Some(channel);
        self
    }

    fn resolve(&self, source: Option<MacAddr>) -> Option<&str> {
        source
            .and_then(|mac| self.by_mac.get(&mac))
            .or(self.file_label.as_ref())
            .map(String::as_str)
    }
}

/// Maps a 2.4 GHz centre frequency to its channel number.
pub fn channel_from_freq(freq_mhz: u16) -> Option<u8> {
    match freq_mhz {
        2484 => Some(14),
        2412..=2472 if (freq_mhz - 2407) % 5 == 0 => Some(((freq_mhz - 2407) / 5) as u8),
        _ => None,
    }
}

pub fn load_capture(path: &Path, labels: &LabelMap) -> Result<RawCapture, IngestError> {
    let file = File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_capture(BufReader::new(file), labels).map_err(|e| match e {
        IngestError::Capture { source, .. } => IngestError::Capture {
            path: path.display().to_string(),
            source,
        },
        other => other,
    })
}

const PCAPNG_MAGIC: [u8; 4] = [0x0A, 0x0D, 0x0D, 0x0A];

/// Reads a classic pcap (or pcapng) stream and keeps only probe requests, in
/// capture order.
pub fn read_capture<R: Read>(mut reader: R, labels: &LabelMap) -> Result<RawCapture, IngestError> {
    let mut head = [0u8; 4];
    let mut filled = 0;
    while filled < 4 {
        let n = reader.read(&mut head[filled..]).map_err(|source| IngestError::Io {
            path: "<stream>".into(),
            source,
        })?;
        if n == 0 {
            break;
        }
        filled += n;
    }
    if filled == 0 {
        return Err(capture_err(pcap_file::PcapError::IncompleteBuffer));
    }
    let chained = (&head[..filled]).chain(reader);

    let mut capture = RawCapture::default();
    if head == PCAPNG_MAGIC {
        let mut ng = PcapNgReader::new(chained).map_err(capture_err)?;
        let mut links: Vec<DataLink> = Vec::new();
        let mut record = 0;
        while let Some(block) = ng.next_block() {
            match block.map_err(capture_err)? {
                Block::SectionHeader(_) => links.clear(),
                Block::InterfaceDescription(idb) => links.push(idb.linktype),
                Block::EnhancedPacket(epb) => {
                    let link = *links
                        .get(epb.interface_id as usize)
                        .ok_or(IngestError::UnknownInterface {
                            record,
                            interface_id: epb.interface_id,
                        })?;
                    let ts = epb.timestamp.as_micros() as u64;
                    push_record(&mut capture, link, &epb.data, ts, record, labels)?;
                    record += 1;
                }
                _ => {}
            }
        }
    } else {
        let mut pcap = PcapReader::new(chained).map_err(capture_err)?;
        let link = pcap.header().datalink;
        let mut record = 0;
        while let Some(packet) = pcap.next_packet() {
            let packet = packet.map_err(capture_err)?;
            let ts = packet.timestamp.as_micros() as u64;
            push_record(&mut capture, link, &packet.data, ts, record, labels)?;
            record += 1;
        }
    }
    Ok(capture)
}

fn capture_err(source: pcap_file::PcapError) -> IngestError {
    IngestError::Capture {
        path: "<stream>".into(),
        source,
    }
}

fn push_record(
    capture: &mut RawCapture,
    link: DataLink,
    data: &[u8],
    timestamp_us: u64,
    record: usize,
    labels: &LabelMap,
) -> Result<(), IngestError> {
    let (frame, channel) = match link {
        DataLink::IEEE802_11 => (data, None),
        DataLink::IEEE802_11_RADIOTAP => match strip_radiotap(data) {
            Some(v) => v,
            None => {
                warn!("record {record}: unreadable radiotap header, skipped");
                return Ok(());
            }
        },
        other => return Err(IngestError::UnsupportedLinkType(format!("{other:?}"))),
    };

    if !is_probe_request(frame) {
        return Ok(());
    }
    if frame.len() < MGMT_HEADER_LEN {
        warn!(
            "record {record}: truncated probe request ({} bytes), skipped",
            frame.len()
        );
        return Ok(());
    }

    let source: Option<MacAddr> = frame[10..16].try_into().ok();
    let label = labels.resolve(source).ok_or(IngestError::UnlabeledFrame { record })?;
    let channel = channel.or(labels.default_channel).unwrap_or(0);
    debug!("record {record}: probe request from {label} on channel {channel}");

    capture.frames.push(CapturedFrame {
        payload: frame.to_vec(),
        timestamp_us,
        channel,
        device_label: label.to_owned(),
        record_index: record,
    });
    Ok(())
}

/// Returns the 802.11 frame behind a radiotap header (FCS removed when the
/// flags field says one is present) and the channel, if declared.
fn strip_radiotap(data: &[u8]) -> Option<(&[u8], Option<u8>)> {
    if data.len() < 4 {
        return None;
    }
    let header_len = u16::from_le_bytes([data[2], data[3]]) as usize;
    if header_len > data.len() {
        return None;
    }
    let (channel, has_fcs) = match radiotap::Radiotap::from_bytes(data) {
        Ok(rt) => {
            let channel = rt
                .channel
                .and_then(|c| channel_from_freq(c.freq))
                .or_else(|| rt.xchannel.map(|x| x.channel));
            (channel, rt.flags.is_some_and(|f| f.fcs))
        }
        // unknown or vendor fields; the declared length still lets us skip it
        Err(_) => (None, false),
    };
    let mut frame = &data[header_len..];
    if has_fcs && frame.len() >= 4 {
        frame = &frame[..frame.len() - 4];
    }
    Some((frame, channel))
}
