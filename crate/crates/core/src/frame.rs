//! Binary snapshot files.
//!
//! Layout, all little-endian:
//!
//! | offset | size | field                                   |
//! |-------:|-----:|-----------------------------------------|
//! | 0      | 8    | magic `NLSEFRM\0`                       |
//! | 8      | 4    | format version (u32)                    |
//! | 12     | 1    | precision: 4 = single, 8 = double       |
//! | 13     | 1    | dimension                               |
//! | 14     | 2    | zero padding                            |
//! | 16     | 24   | nx, ny, nz (u64)                        |
//! | 40     | 40   | h, k, a, s, time (f64)                  |
//! | 80     | 8    | step count (u64)                        |
//! | 88     |      | real block, then imaginary block        |
//!
//! Payload values are in grid order (`x` fastest) at the run's precision.

use std::path::Path;

use crate::error::{Error, Result};
use crate::field::{ComplexField, GridSpec, Precision, Real};

pub const MAGIC: [u8; 8] = *b"NLSEFRM\0";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 88;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameHeader {
    pub precision: Precision,
    pub dim: usize,
    pub counts: [usize; 3],
    pub h: f64,
    pub k_dt: f64,
    pub a: f64,
    pub s: f64,
    pub time: f64,
    pub step_count: u64,
}

impl FrameHeader {
    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid described by the header, with its origin at zero.
    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(&self.counts[..self.dim], self.h, &[0.0; 3][..self.dim])
            .map_err(|e| Error::Frame(format!("header describes an invalid grid: {e}")))
    }

    fn encode(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.push(self.precision.byte_width() as u8);
        out.push(self.dim as u8);
        out.extend_from_slice(&[0, 0]);
        for n in self.counts {
            out.extend_from_slice(&(n as u64).to_le_bytes());
        }
        for x in [self.h, self.k_dt, self.a, self.s, self.time] {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out.extend_from_slice(&self.step_count.to_le_bytes());
    }

    fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Frame(format!("file is {} bytes, shorter than the {HEADER_LEN}-byte header", bytes.len())));
        }
        if bytes[..8] != MAGIC {
            return Err(Error::Frame("bad magic; not a frame file".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let version = u32_at(8);
        if version != FORMAT_VERSION {
            return Err(Error::Frame(format!("unsupported format version {version}")));
        }
        let precision = match bytes[12] {
            4 => Precision::Single,
            8 => Precision::Double,
            other => return Err(Error::Frame(format!("unknown precision byte {other}"))),
        };
        let dim = bytes[13] as usize;
        if !(1..=3).contains(&dim) {
            return Err(Error::Frame(format!("dimension {dim} out of range")));
        }
        let mut counts = [0usize; 3];
        for (axis, n) in counts.iter_mut().enumerate() {
            *n = usize::try_from(u64_at(16 + 8 * axis)).map_err(|_| Error::Frame("point count overflows".into()))?;
        }
        Ok(FrameHeader {
            precision,
            dim,
            counts,
            h: f64_at(40),
            k_dt: f64_at(48),
            a: f64_at(56),
            s: f64_at(64),
            time: f64_at(72),
            step_count: u64_at(80),
        })
    }
}

/// Payload in whichever precision the file was written with.
#[derive(Debug, Clone, PartialEq)]
pub enum FrameData {
    Single(ComplexField<f32>),
    Double(ComplexField<f64>),
}

impl FrameData {
    /// Values widened to double precision.
    pub fn to_f64(&self) -> ComplexField<f64> {
        match self {
            FrameData::Single(f) => f.cast(),
            FrameData::Double(f) => f.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub header: FrameHeader,
    pub data: FrameData,
}

/// Wraps a typed field in [`FrameData`].
pub trait IntoFrameData: Real {
    fn into_frame_data(field: ComplexField<Self>) -> FrameData;
}

impl IntoFrameData for f32 {
    fn into_frame_data(field: ComplexField<f32>) -> FrameData {
        FrameData::Single(field)
    }
}

impl IntoFrameData for f64 {
    fn into_frame_data(field: ComplexField<f64>) -> FrameData {
        FrameData::Double(field)
    }
}

/// Equation metadata stored next to a snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameMeta {
    pub k_dt: f64,
    pub a: f64,
    pub s: f64,
    pub time: f64,
    pub step_count: u64,
}

impl Frame {
    pub fn new<T: IntoFrameData>(field: &ComplexField<T>, meta: FrameMeta) -> Self {
        let g = field.grid();
        Frame {
            header: FrameHeader {
                precision: T::PRECISION,
                dim: g.dim(),
                counts: g.counts(),
                h: g.h(),
                k_dt: meta.k_dt,
                a: meta.a,
                s: meta.s,
                time: meta.time,
                step_count: meta.step_count,
            },
            data: T::into_frame_data(field.clone()),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let n = self.header.len();
        let mut out = Vec::with_capacity(HEADER_LEN + 2 * n * self.header.precision.byte_width());
        self.header.encode(&mut out);
        fn blocks<T: Real>(f: &ComplexField<T>, out: &mut Vec<u8>) {
            for &v in f.re.iter().chain(&f.im) {
                v.write_le(out);
            }
        }
        match &self.data {
            FrameData::Single(f) => blocks(f, &mut out),
            FrameData::Double(f) => blocks(f, &mut out),
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let header = FrameHeader::decode(bytes)?;
        let grid = header.grid()?;
        let width = header.precision.byte_width();
        let n = header.len();
        let expected = HEADER_LEN + 2 * n * width;
        if bytes.len() != expected {
            return Err(Error::Frame(format!(
                "payload length mismatch: header implies {expected} bytes, file has {}",
                bytes.len()
            )));
        }
        fn blocks<T: Real>(grid: GridSpec, payload: &[u8], n: usize, width: usize) -> Result<ComplexField<T>> {
            let mut values = payload.chunks_exact(width).map(T::read_le);
            let re: Vec<T> = values.by_ref().take(n).collect();
            let im: Vec<T> = values.collect();
            ComplexField::from_parts(grid, re, im)
        }
        let payload = &bytes[HEADER_LEN..];
        let data = match header.precision {
            Precision::Single => FrameData::Single(blocks(grid, payload, n, width)?),
            Precision::Double => FrameData::Double(blocks(grid, payload, n, width)?),
        };
        Ok(Frame { header, data })
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode())?;
        Ok(())
    }

    pub fn read_from(path: &Path) -> Result<Self> {
        Self::decode(&std::fs::read(path)?)
    }
}

/// File name of frame number `index`.
pub fn frame_file_name(index: usize) -> String {
    format!("frame_{index:05}.bin")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Frame {
        let g = GridSpec::two_d(5, 4, 0.25, [0.0; 2]).unwrap();
        let field = ComplexField::<f64>::from_fn(g, |x, y, _| (x + 10.0 * y, -x * y));
        let meta = FrameMeta { k_dt: 0.01, a: 1.0, s: -1.0, time: 0.3, step_count: 30 };
        Frame::new(&field, meta)
    }

    #[test]
    fn header_layout() {
        let bytes = sample().encode();
        assert_eq!(bytes.len(), HEADER_LEN + 2 * 20 * 8);
        assert_eq!(&bytes[..8], b"NLSEFRM\0");
        assert_eq!(bytes[12], 8);
        assert_eq!(bytes[13], 2);
        assert_eq!(u64::from_le_bytes(bytes[16..24].try_into().unwrap()), 5);
        assert_eq!(u64::from_le_bytes(bytes[24..32].try_into().unwrap()), 4);
        assert_eq!(u64::from_le_bytes(bytes[32..40].try_into().unwrap()), 1);
        assert_eq!(f64::from_le_bytes(bytes[72..80].try_into().unwrap()), 0.3);
        assert_eq!(u64::from_le_bytes(bytes[80..88].try_into().unwrap()), 30);
        // Point (1, 1) is index 6; its real part opens the real block at 88 + 6*8.
        assert_eq!(f64::from_le_bytes(bytes[136..144].try_into().unwrap()), 0.25 + 2.5);
    }

    #[test]
    fn decode_inverts_encode() {
        let frame = sample();
        assert_eq!(Frame::decode(&frame.encode()).unwrap(), frame);
    }

    #[test]
    fn truncated_and_corrupt_files_are_rejected() {
        let bytes = sample().encode();
        assert!(Frame::decode(&bytes[..40]).is_err());
        assert!(Frame::decode(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(Frame::decode(&bad).is_err());
        let mut bad = bytes;
        bad[12] = 3;
        assert!(Frame::decode(&bad).is_err());
    }

    #[test]
    fn file_names_sort() {
        assert_eq!(frame_file_name(0), "frame_00000.bin");
        assert_eq!(frame_file_name(12), "frame_00012.bin");
    }
}
