//! LSDF latent files.
//!
//! Layout (little-endian):
//!
//! | offset | size | field                         |
//! |--------|------|-------------------------------|
//! | 0      | 4    | magic `b"LSDF"`               |
//! | 4      | 4    | u32 version (= 1)             |
//! | 8      | 4    | u32 space (0=Z, 1=W, 2=WPlus) |
//! | 12     | 4    | u32 layers (1 unless WPlus)   |
//! | 16     | 4    | u32 dim                       |
//! | 20     | 8    | u64 count                     |
//! | 28     | ...  | count·layers·dim f32          |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{LatentCode, Space};

pub const MAGIC: [u8; 4] = *b"LSDF";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 28;

/// Shape shared by every code in a file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatentLayout {
    pub space: Space,
    pub layers: usize,
    pub dim: usize,
}

impl LatentLayout {
    pub fn of(code: &LatentCode) -> Self {
        Self { space: code.space(), layers: code.layers(), dim: code.dim() }
    }

    /// Layout of a non-empty, homogeneous list of codes.
    pub fn infer(codes: &[LatentCode]) -> Result<Self> {
        let first = codes
            .first()
            .ok_or_else(|| Error::validation("cannot infer a layout from zero codes"))?;
        let layout = Self::of(first);
        layout.check_all(codes)?;
        Ok(layout)
    }

    fn check_all(&self, codes: &[LatentCode]) -> Result<()> {
        for (i, c) in codes.iter().enumerate() {
            let other = Self::of(c);
            if other != *self {
                return Err(Error::validation(format!(
                    "code {i} is {}x{} in {}, expected {}x{} in {}",
                    other.layers, other.dim, other.space, self.layers, self.dim, self.space
                )));
            }
        }
        Ok(())
    }

    fn row_len(&self) -> usize {
        self.layers * self.dim
    }
}

pub fn write_latents<W: Write>(mut w: W, layout: &LatentLayout, codes: &[LatentCode]) -> Result<()> {
    if layout.dim == 0 || layout.layers == 0 {
        return Err(Error::validation("layout dim and layers must be >= 1"));
    }
    if layout.space != Space::WPlus && layout.layers != 1 {
        return Err(Error::validation("only WPlus codes may have more than one layer"));
    }
    layout.check_all(codes)?;
    let dim = u32::try_from(layout.dim).map_err(|_| Error::validation("dim exceeds u32"))?;
    let layers = u32::try_from(layout.layers).map_err(|_| Error::validation("layers exceed u32"))?;

    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(&MAGIC);
    header.extend_from_slice(&VERSION.to_le_bytes());
    header.extend_from_slice(&layout.space.code().to_le_bytes());
    header.extend_from_slice(&layers.to_le_bytes());
    header.extend_from_slice(&dim.to_le_bytes());
    header.extend_from_slice(&(codes.len() as u64).to_le_bytes());
    w.write_all(&header)?;

    let mut row = Vec::with_capacity(layout.row_len() * 4);
    for (i, code) in codes.iter().enumerate() {
        row.clear();
        for &v in code.values() {
            let f = v as f32;
            if !f.is_finite() {
                return Err(Error::validation(format!(
                    "code {i} entry {v} is not representable as a finite f32"
                )));
            }
            row.extend_from_slice(&f.to_le_bytes());
        }
        w.write_all(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `codes` (non-empty, one shared layout) to `path`.
pub fn write_latents_file(path: impl AsRef<Path>, codes: &[LatentCode]) -> Result<()> {
    let layout = LatentLayout::infer(codes)?;
    write_latents_file_as(path, &layout, codes)
}

pub fn write_latents_file_as(
    path: impl AsRef<Path>,
    layout: &LatentLayout,
    codes: &[LatentCode],
) -> Result<()> {
    let file = File::create(path)?;
    write_latents(BufWriter::new(file), layout, codes)
}

fn u32_at(bytes: &[u8], offset: usize) -> u32 {
    u32::from_le_bytes(bytes[offset..offset + 4].try_into().expect("4-byte slice"))
}

fn format_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Format { offset: offset as u64, message: message.into() }
}

/// Parses an in-memory LSDF image.
pub fn parse_latents(bytes: &[u8]) -> Result<(LatentLayout, Vec<LatentCode>)> {
    if bytes.len() < HEADER_LEN {
        return Err(format_err(
            bytes.len(),
            format!("header truncated ({} of {HEADER_LEN} bytes)", bytes.len()),
        ));
    }
    if bytes[..4] != MAGIC {
        return Err(format_err(0, "bad magic, expected \"LSDF\""));
    }
    let version = u32_at(bytes, 4);
    if version != VERSION {
        return Err(format_err(4, format!("unsupported version {version}")));
    }
    let space = Space::from_code(u32_at(bytes, 8))
        .ok_or_else(|| format_err(8, format!("unknown space tag {}", u32_at(bytes, 8))))?;
    let layers = u32_at(bytes, 12) as usize;
    if layers == 0 || (space != Space::WPlus && layers != 1) {
        return Err(format_err(12, format!("invalid layer count {layers} for space {space}")));
    }
    let dim = u32_at(bytes, 16) as usize;
    if dim == 0 {
        return Err(format_err(16, "dim must be >= 1"));
    }
    let count = u64::from_le_bytes(bytes[20..28].try_into().expect("8-byte slice"));

    let layout = LatentLayout { space, layers, dim };
    let row_bytes = layout.row_len() * 4;
    let payload = (count as u128) * (row_bytes as u128);
    let available = (bytes.len() - HEADER_LEN) as u128;
    if payload > available {
        let full_rows = available / row_bytes as u128;
        return Err(format_err(
            bytes.len(),
            format!(
                "payload truncated: header declares {count} codes, file ends inside code {full_rows}"
            ),
        ));
    }
    if payload < available {
        return Err(format_err(
            HEADER_LEN + payload as usize,
            format!("{} trailing bytes after payload", available - payload),
        ));
    }

    let mut codes = Vec::with_capacity(count as usize);
    for (i, row) in bytes[HEADER_LEN..].chunks_exact(row_bytes).enumerate() {
        let mut values = Vec::with_capacity(layout.row_len());
        for (j, b) in row.chunks_exact(4).enumerate() {
            let f = f32::from_le_bytes(b.try_into().expect("4-byte chunk"));
            if !f.is_finite() {
                return Err(format_err(
                    HEADER_LEN + i * row_bytes + j * 4,
                    format!("non-finite value {f} in code {i}"),
                ));
            }
            values.push(f as f64);
        }
        let code = match space {
            Space::WPlus => LatentCode::layered(layers, values)?,
            s => LatentCode::new(s, values)?,
        };
        codes.push(code);
    }
    Ok((layout, codes))
}

pub fn read_latents<R: Read>(mut r: R) -> Result<Vec<LatentCode>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    parse_latents(&bytes).map(|(_, codes)| codes)
}

pub fn read_latents_file(path: impl AsRef<Path>) -> Result<Vec<LatentCode>> {
    read_latents(BufReader::new(File::open(path)?))
}

/// Reads a file and also returns its header layout (useful when the file is empty).
pub fn read_latents_file_with_layout(
    path: impl AsRef<Path>,
) -> Result<(LatentLayout, Vec<LatentCode>)> {
    let bytes = std::fs::read(path)?;
    parse_latents(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn encode(codes: &[LatentCode]) -> Vec<u8> {
        let mut buf = Vec::new();
        write_latents(&mut buf, &LatentLayout::infer(codes).unwrap(), codes).unwrap();
        buf
    }

    #[test]
    fn two_codes_of_dim_four() {
        let codes = vec![
            LatentCode::z(vec![1.0, 2.0, 3.0, 4.0]).unwrap(),
            LatentCode::z(vec![-1.0, 0.5, 0.25, 0.0]).unwrap(),
        ];
        let bytes = encode(&codes);
        assert_eq!(bytes.len(), HEADER_LEN + 8 * 4);
        let back = read_latents(&bytes[..]).unwrap();
        assert_eq!(back, codes);
    }

    #[test]
    fn empty_file_reads_as_empty_list() {
        let layout = LatentLayout { space: Space::Z, layers: 1, dim: 4 };
        let mut buf = Vec::new();
        write_latents(&mut buf, &layout, &[]).unwrap();
        assert_eq!(buf.len(), HEADER_LEN);
        let (l, codes) = parse_latents(&buf).unwrap();
        assert_eq!(l, layout);
        assert!(codes.is_empty());
    }

    #[test]
    fn truncated_mid_row_reports_offset() {
        let codes: Vec<_> =
            (0..3).map(|i| LatentCode::z(vec![i as f64; 4]).unwrap()).collect();
        let bytes = encode(&codes);
        // Cut one and a half rows into the payload.
        let cut = HEADER_LEN + 16 + 8;
        match parse_latents(&bytes[..cut]) {
            Err(Error::Format { offset, message }) => {
                assert_eq!(offset, cut as u64);
                assert!(message.contains("code 1"), "{message}");
            }
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn header_faults() {
        let codes = vec![LatentCode::z(vec![1.0; 2]).unwrap()];
        let good = encode(&codes);

        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(matches!(parse_latents(&bad_magic), Err(Error::Format { offset: 0, .. })));

        let mut bad_version = good.clone();
        bad_version[4] = 2;
        assert!(matches!(parse_latents(&bad_version), Err(Error::Format { offset: 4, .. })));

        assert!(matches!(parse_latents(&good[..10]), Err(Error::Format { offset: 10, .. })));

        let mut nan = good.clone();
        nan[HEADER_LEN + 4..HEADER_LEN + 8].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(
            parse_latents(&nan),
            Err(Error::Format { offset, .. }) if offset == (HEADER_LEN + 4) as u64
        ));

        let mut trailing = good.clone();
        trailing.push(0);
        assert!(parse_latents(&trailing).is_err());
    }

    #[test]
    fn mixed_dims_are_rejected() {
        let codes = vec![
            LatentCode::z(vec![0.0; 4]).unwrap(),
            LatentCode::z(vec![0.0; 8]).unwrap(),
        ];
        assert!(LatentLayout::infer(&codes).is_err());
        let layout = LatentLayout { space: Space::Z, layers: 1, dim: 4 };
        assert!(write_latents(Vec::new(), &layout, &codes).is_err());
    }

    #[test]
    fn wplus_header_records_layers() {
        let code = LatentCode::layered(18, vec![0.125; 18 * 512]).unwrap();
        let bytes = encode(std::slice::from_ref(&code));
        assert_eq!(u32_at(&bytes, 8), 2);
        assert_eq!(u32_at(&bytes, 12), 18);
        assert_eq!(u32_at(&bytes, 16), 512);
        assert_eq!(read_latents(&bytes[..]).unwrap(), vec![code]);
    }

    #[test]
    fn hundred_random_codes_round_trip() {
        let mut rng = crate::rng::seeded_rng(5);
        let codes: Vec<_> = (0..100)
            .map(|_| LatentCode::z(crate::linalg::gaussian_vector(&mut rng, 16)).unwrap().quantized())
            .collect();
        assert_eq!(read_latents(&encode(&codes)[..]).unwrap(), codes);
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            rows in prop::collection::vec(prop::collection::vec(any::<f32>().prop_filter("finite", |f| f.is_finite()), 5), 1..20)
        ) {
            let codes: Vec<_> = rows
                .iter()
                .map(|r| LatentCode::z(r.iter().map(|&f| f as f64).collect()).unwrap())
                .collect();
            let bytes = encode(&codes);
            let back = read_latents(&bytes[..]).unwrap();
            for (a, b) in codes.iter().zip(&back) {
                for (x, y) in a.values().iter().zip(b.values()) {
                    prop_assert_eq!(x.to_bits(), y.to_bits());
                }
            }
            prop_assert_eq!(encode(&back), bytes);
        }
    }
}
