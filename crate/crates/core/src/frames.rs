//! Binary frame files.
//!
//! Layout: 8-byte magic, `u32` LE pixel count `M`, `u64` LE frame count,
//! then each frame as `ceil(M / 8)` bytes with pixel `i` at byte `i / 8`,
//! bit `i % 8` (bit 0 least significant) and zero padding. The side-info
//! companion uses the same header under its own magic and stores, per
//! frame, a `u32` LE photon number followed by the status bitmap.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use crate::bits::PixelBits;
use crate::error::{Error, ParseError, Result};
use crate::simulator::{FrameBatch, SideInfo};

pub const FRAME_MAGIC: &[u8; 8] = b"QRNGFRM1";
pub const SIDE_MAGIC: &[u8; 8] = b"QRNGSIDE";

const HEADER_LEN: usize = 8 + 4 + 8;

fn row_bytes(pixels: usize) -> usize {
    pixels.div_ceil(8)
}

fn pack(bits: &PixelBits, out: &mut Vec<u8>) {
    let n = row_bytes(bits.len());
    out.extend(bits.words().iter().flat_map(|w| w.to_le_bytes()).take(n));
}

fn unpack(bytes: &[u8], pixels: usize, frame: u64) -> Result<PixelBits, ParseError> {
    let mut words = vec![0u64; pixels.div_ceil(64)];
    for (i, &b) in bytes.iter().enumerate() {
        words[i / 8] |= (b as u64) << (8 * (i % 8));
    }
    if !pixels.is_multiple_of(64) {
        let last = words.len() - 1;
        if words[last] >> (pixels % 64) != 0 {
            return Err(ParseError::Padding { frame });
        }
    }
    Ok(PixelBits::from_words(pixels, words))
}

fn header(magic: &[u8; 8], pixels: usize, count: usize) -> Result<Vec<u8>> {
    let m = u32::try_from(pixels)
        .map_err(|_| Error::Parameter(format!("{pixels} pixels do not fit the file header")))?;
    let mut out = Vec::with_capacity(HEADER_LEN);
    out.extend_from_slice(magic);
    out.extend_from_slice(&m.to_le_bytes());
    out.extend_from_slice(&(count as u64).to_le_bytes());
    Ok(out)
}

/// Frame file contents for `batch`.
pub fn encode_frames(batch: &FrameBatch) -> Result<Vec<u8>> {
    let mut out = header(FRAME_MAGIC, batch.pixels(), batch.len())?;
    out.reserve(batch.len() * row_bytes(batch.pixels()));
    for f in batch.frames() {
        pack(f, &mut out);
    }
    Ok(out)
}

/// Side-info file contents, or an error when the batch carries none.
pub fn encode_side_info(batch: &FrameBatch) -> Result<Vec<u8>> {
    let side = batch
        .side_info()
        .ok_or_else(|| Error::Parameter("batch has no side information".into()))?;
    let mut out = header(SIDE_MAGIC, batch.pixels(), side.len())?;
    for rec in side {
        out.extend_from_slice(&rec.photons.to_le_bytes());
        pack(&rec.status, &mut out);
    }
    Ok(out)
}

/// Parses the header and returns `(M, count, payload)`.
fn split_header<'a>(bytes: &'a [u8], magic: &[u8; 8]) -> Result<(u32, u64, &'a [u8]), ParseError> {
    if bytes.len() < 8 || &bytes[..8] != magic {
        let found = &bytes[..bytes.len().min(8)];
        return Err(ParseError::BadMagic {
            expected: String::from_utf8_lossy(magic).into_owned(),
            found: String::from_utf8_lossy(found).into_owned(),
        });
    }
    if bytes.len() < HEADER_LEN {
        return Err(ParseError::TruncatedHeader);
    }
    let m = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    let count = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes"));
    Ok((m, count, &bytes[HEADER_LEN..]))
}

fn check_payload(payload: &[u8], count: u64, record: usize) -> Result<(), ParseError> {
    let expected = count.checked_mul(record as u64).unwrap_or(u64::MAX);
    let found = payload.len() as u64;
    if found < expected {
        return Err(ParseError::TruncatedPayload { expected, found });
    }
    if found > expected {
        return Err(ParseError::TrailingBytes);
    }
    Ok(())
}

/// Decodes a frame file into `(M, frames)`.
pub fn decode_frames(bytes: &[u8]) -> Result<(usize, Vec<PixelBits>), ParseError> {
    let (m, count, payload) = split_header(bytes, FRAME_MAGIC)?;
    let pixels = m as usize;
    let row = row_bytes(pixels);
    check_payload(payload, count, row)?;
    let frames = if row == 0 {
        vec![PixelBits::zeros(0); count as usize]
    } else {
        payload
            .chunks_exact(row)
            .enumerate()
            .map(|(i, c)| unpack(c, pixels, i as u64))
            .collect::<Result<_, _>>()?
    };
    Ok((pixels, frames))
}

/// Decodes a side-info file into `(M, records)`.
pub fn decode_side_info(bytes: &[u8]) -> Result<(usize, Vec<SideInfo>), ParseError> {
    let (m, count, payload) = split_header(bytes, SIDE_MAGIC)?;
    let pixels = m as usize;
    let row = 4 + row_bytes(pixels);
    check_payload(payload, count, row)?;
    let records = payload
        .chunks_exact(row)
        .enumerate()
        .map(|(i, c)| {
            let photons = u32::from_le_bytes(c[..4].try_into().expect("4 bytes"));
            let status = unpack(&c[4..], pixels, i as u64)?;
            Ok(SideInfo { photons, status })
        })
        .collect::<Result<_, ParseError>>()?;
    Ok((pixels, records))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = io::BufWriter::new(fs::File::create(path)?);
    f.write_all(bytes)?;
    f.flush()?;
    Ok(())
}

pub fn write_frames(batch: &FrameBatch, path: &Path) -> Result<()> {
    write_bytes(path, &encode_frames(batch)?)
}

pub fn write_side_info(batch: &FrameBatch, path: &Path) -> Result<()> {
    write_bytes(path, &encode_side_info(batch)?)
}

pub fn read_frames(path: &Path) -> Result<FrameBatch> {
    let (pixels, frames) = decode_frames(&fs::read(path)?)?;
    FrameBatch::new(pixels, frames, None)
}

/// Reads a frame file together with its side-info companion.
pub fn read_frames_with_side_info(frames: &Path, side: &Path) -> Result<FrameBatch> {
    let (pixels, frames) = decode_frames(&fs::read(frames)?)?;
    let (side_pixels, records) = decode_side_info(&fs::read(side)?)?;
    if side_pixels != pixels {
        return Err(ParseError::PixelMismatch {
            frames: pixels as u32,
            side: side_pixels as u32,
        }
        .into());
    }
    FrameBatch::new(pixels, frames, Some(records))
}
