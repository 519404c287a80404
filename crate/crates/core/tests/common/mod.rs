//! Fixture builders shared by the integration tests: hand-built 802.11
//! frames, pcap files and synthetic multi-device datasets.
#![allow(dead_code)]

use std::fs::File;
use std::path::Path;
use std::time::Duration;

use pcap_file::pcap::{PcapHeader, PcapPacket, PcapWriter};
use pcap_file::DataLink;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use probefp::ingest::{dissect, ProbeVector};

pub const HT_CAPABILITIES: u8 = 45;
pub const EXT_CAPABILITIES: u8 = 127;
pub const VENDOR_SPECIFIC: u8 = 221;

fn mgmt_header(frame_control: u8, src: [u8; 6]) -> Vec<u8> {
    let mut frame = vec![0u8; 24];
    frame[0] = frame_control;
    frame[4..10].fill(0xFF);
    frame[10..16].copy_from_slice(&src);
    frame[16..22].fill(0xFF);
    frame
}

/// Probe request (type 0, subtype 4) with the given tagged elements.
pub fn probe_request(src: [u8; 6], elements: &[(u8, &[u8])]) -> Vec<u8> {
    let mut frame = mgmt_header(0x40, src);
    for (id, payload) in elements {
        frame.push(*id);
        frame.push(payload.len() as u8);
        frame.extend_from_slice(payload);
    }
    frame
}

/// Beacon (type 0, subtype 8) carrying an SSID element.
pub fn beacon(src: [u8; 6]) -> Vec<u8> {
    let mut frame = mgmt_header(0x80, src);
    frame.extend_from_slice(&[0u8; 12]);
    frame.extend_from_slice(&[0, 4, b't', b'e', b's', b't']);
    frame
}

/// Prepends a radiotap header with Flags and Channel fields; appends a dummy
/// FCS when `fcs` is set.
pub fn radiotap(frame: &[u8], freq_mhz: u16, fcs: bool) -> Vec<u8> {
    let mut out = vec![0u8, 0, 14, 0];
    out.extend_from_slice(&((1u32 << 1) | (1u32 << 3)).to_le_bytes());
    out.push(if fcs { 0x10 } else { 0 });
    out.push(0); // align channel to 2 bytes
    out.extend_from_slice(&freq_mhz.to_le_bytes());
    out.extend_from_slice(&0x00a0u16.to_le_bytes());
    out.extend_from_slice(frame);
    if fcs {
        out.extend_from_slice(&[0xDE, 0xAD, 0xBE, 0xEF]);
    }
    out
}

pub fn write_pcap(path: &Path, datalink: DataLink, frames: &[Vec<u8>]) {
    let header = PcapHeader {
        datalink,
        ..Default::default()
    };
    let mut w = PcapWriter::with_header(File::create(path).unwrap(), header).unwrap();
    for (i, f) in frames.iter().enumerate() {
        let packet = PcapPacket::new(Duration::from_millis(i as u64 * 100), f.len() as u32, f);
        w.write_packet(&packet).unwrap();
    }
}

/// Probe requests of one synthetic device: fixed HT / Extended Capabilities
/// and vendor OUI per device, randomised MAC and a varying vendor byte per
/// frame.
pub fn device_frames(device: usize, count: usize, seed: u64) -> Vec<Vec<u8>> {
    let mut profile = ChaCha8Rng::seed_from_u64(1000 + device as u64);
    let ht: Vec<u8> = (0..26).map(|_| profile.random()).collect();
    let ext_len = profile.random_range(3..=10);
    let ext: Vec<u8> = (0..ext_len).map(|_| profile.random()).collect();
    let oui: [u8; 3] = profile.random();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (device as u64).wrapping_mul(0x9E37_79B9));
    (0..count)
        .map(|_| {
            let mut mac: [u8; 6] = rng.random();
            mac[0] = (mac[0] & 0xFC) | 0x02;
            let vendor = [oui[0], oui[1], oui[2], 0x04, rng.random()];
            probe_request(
                mac,
                &[
                    (HT_CAPABILITIES, &ht),
                    (EXT_CAPABILITIES, &ext),
                    (VENDOR_SPECIFIC, &vendor),
                ],
            )
        })
        .collect()
}

/// Dissected vectors of `devices` synthetic devices, `per_device` each,
/// device-major order.
pub fn synthetic_vectors(devices: usize, per_device: usize, seed: u64) -> Vec<ProbeVector> {
    let mut out = Vec::new();
    for d in 0..devices {
        for frame in device_frames(d, per_device, seed) {
            out.push(ProbeVector::new(dissect(&frame).unwrap(), format!("dev-{d:02}"), 6));
        }
    }
    out
}
