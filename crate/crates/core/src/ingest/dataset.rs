//! Binary dataset file holding dissected probe vectors.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! header (16 bytes): magic "PRBVECS\0" | version u16 | reserved u16 | count u32
//! record:            label_len u16 | label (UTF-8) | channel u8 | 223 vector bytes
//! ```

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::vector::{ProbeBits, ProbeVector, VECTOR_BYTES};

pub const DATASET_MAGIC: [u8; 8] = *b"PRBVECS\0";
pub const DATASET_VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset i/o: {0}")]
    Io(#[from] io::Error),
    #[error("not a probe-vector dataset (bad magic)")]
    BadMagic,
    #[error("unsupported dataset version {found}, expected {expected}")]
    Version { found: u16, expected: u16 },
    #[error("dataset truncated in record {record}")]
    Truncated { record: usize },
    #[error("record {record}: label is not valid UTF-8")]
    Label { record: usize },
    #[error("label of {0} bytes exceeds the 65535-byte limit")]
    LabelTooLong(usize),
    #[error("{0} records exceed the format's u32 count")]
    TooManyRecords(usize),
}

pub fn write_vectors<W: Write>(mut w: W, vectors: &[ProbeVector]) -> Result<(), DatasetError> {
    let count = u32::try_from(vectors.len()).map_err(|_| DatasetError::TooManyRecords(vectors.len()))?;
    w.write_all(&DATASET_MAGIC)?;
    w.write_all(&DATASET_VERSION.to_le_bytes())?;
    w.write_all(&0u16.to_le_bytes())?;
    w.write_all(&count.to_le_bytes())?;
    for v in vectors {
        let label = v.device_label.as_bytes();
        let len = u16::try_from(label.len()).map_err(|_| DatasetError::LabelTooLong(label.len()))?;
        w.write_all(&len.to_le_bytes())?;
        w.write_all(label)?;
        w.write_all(&[v.channel])?;
        w.write_all(v.bits.as_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_vectors<R: Read>(mut r: R) -> Result<Vec<ProbeVector>, DatasetError> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => DatasetError::BadMagic,
        _ => DatasetError::Io(e),
    })?;
    if header[..8] != DATASET_MAGIC {
        return Err(DatasetError::BadMagic);
    }
    let version = u16::from_le_bytes([header[8], header[9]]);
    if version != DATASET_VERSION {
        return Err(DatasetError::Version {
            found: version,
            expected: DATASET_VERSION,
        });
    }
    let count = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;

    let mut vectors = Vec::with_capacity(count.min(1 << 20));
    for record in 0..count {
        let truncated = |e: io::Error| match e.kind() {
            io::ErrorKind::UnexpectedEof => DatasetError::Truncated { record },
            _ => DatasetError::Io(e),
        };
        let mut len = [0u8; 2];
        r.read_exact(&mut len).map_err(truncated)?;
        let mut label = vec![0u8; u16::from_le_bytes(len) as usize];
        r.read_exact(&mut label).map_err(truncated)?;
        let label = String::from_utf8(label).map_err(|_| DatasetError::Label { record })?;
        let mut channel = [0u8; 1];
        r.read_exact(&mut channel).map_err(truncated)?;
        let mut bytes = [0u8; VECTOR_BYTES];
        r.read_exact(&mut bytes).map_err(truncated)?;
        vectors.push(ProbeVector::new(ProbeBits::from_bytes(bytes), label, channel[0]).with_frame_index(record));
    }
    Ok(vectors)
}

pub fn save_vectors(path: &Path, vectors: &[ProbeVector]) -> Result<(), DatasetError> {
    write_vectors(BufWriter::new(File::create(path)?), vectors)
}

pub fn load_vectors(path: &Path) -> Result<Vec<ProbeVector>, DatasetError> {
    read_vectors(BufReader::new(File::open(path)?))
}
