//! The `.smc` container.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "SMC1"
//! 4       1     version (1)
//! 5       2     width, big-endian
//! 7       2     height, big-endian
//! 9       4     symbol_count, big-endian
//! 13      n     payload, n = ceil(symbol_count / 2), packed nibbles
//! ```

use super::alphabet::SymbolString;
use super::packing::{pack, unpack};
use super::CodecError;

pub const CONTAINER_MAGIC: [u8; 4] = *b"SMC1";
pub const CONTAINER_VERSION: u8 = 1;
pub const CONTAINER_HEADER_LEN: usize = 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContainerHeader {
    pub version: u8,
    pub width: u16,
    pub height: u16,
    pub symbol_count: u32,
}

impl ContainerHeader {
    pub fn payload_len(&self) -> usize {
        (self.symbol_count as usize).div_ceil(2)
    }

    /// Parses and validates the 13-byte header. Returns the header and the
    /// remaining bytes.
    pub fn parse(bytes: &[u8]) -> Result<(Self, &[u8]), CodecError> {
        let magic_len = bytes.len().min(4);
        if bytes[..magic_len] != CONTAINER_MAGIC[..magic_len] {
            return Err(CodecError::BadMagic {
                found: bytes[..magic_len].to_vec(),
            });
        }
        let mut cursor = Cursor { bytes, pos: 0 };
        cursor.take(4, "magic")?;
        let version = cursor.take(1, "version")?[0];
        if version != CONTAINER_VERSION {
            return Err(CodecError::UnsupportedVersion(version));
        }
        let width = u16::from_be_bytes(cursor.take(2, "width")?.try_into().unwrap());
        let height = u16::from_be_bytes(cursor.take(2, "height")?.try_into().unwrap());
        let symbol_count = u32::from_be_bytes(cursor.take(4, "symbol_count")?.try_into().unwrap());
        if width == 0 {
            return Err(CodecError::ZeroDimension { field: "width" });
        }
        if height == 0 {
            return Err(CodecError::ZeroDimension { field: "height" });
        }
        let header = ContainerHeader {
            version,
            width,
            height,
            symbol_count,
        };
        Ok((header, &bytes[cursor.pos..]))
    }

    fn write(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&CONTAINER_MAGIC);
        out.push(self.version);
        out.extend_from_slice(&self.width.to_be_bytes());
        out.extend_from_slice(&self.height.to_be_bytes());
        out.extend_from_slice(&self.symbol_count.to_be_bytes());
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, field: &'static str) -> Result<&'a [u8], CodecError> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(CodecError::Truncated { field });
        }
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }
}

/// A decoded container: image dimensions plus the symbol payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticContainer {
    pub width: u16,
    pub height: u16,
    pub symbols: SymbolString,
}

impl SemanticContainer {
    pub fn new(symbols: SymbolString, width: u32, height: u32) -> Result<Self, CodecError> {
        let width = checked_dim("width", width)?;
        let height = checked_dim("height", height)?;
        if symbols.len() as u64 > u32::MAX as u64 {
            return Err(CodecError::DimensionOverflow {
                field: "symbol_count",
                value: symbols.len() as u64,
                max: u32::MAX as u64,
            });
        }
        Ok(Self { width, height, symbols })
    }

    pub fn header(&self) -> ContainerHeader {
        ContainerHeader {
            version: CONTAINER_VERSION,
            width: self.width,
            height: self.height,
            symbol_count: self.symbols.len() as u32,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(CONTAINER_HEADER_LEN + self.symbols.len().div_ceil(2));
        self.header().write(&mut out);
        out.extend_from_slice(&pack(&self.symbols));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        let (header, payload) = ContainerHeader::parse(bytes)?;
        let expected = header.payload_len();
        if payload.len() < expected {
            return Err(CodecError::Truncated { field: "payload" });
        }
        if payload.len() > expected {
            return Err(CodecError::LengthMismatch {
                symbols: header.symbol_count as u64,
                expected: expected as u64,
                actual: payload.len() as u64,
            });
        }
        let symbols = unpack(payload, header.symbol_count as u64)?;
        Ok(Self {
            width: header.width,
            height: header.height,
            symbols,
        })
    }

    pub fn pixels(&self) -> u64 {
        self.width as u64 * self.height as u64
    }
}

fn checked_dim(field: &'static str, value: u32) -> Result<u16, CodecError> {
    if value == 0 {
        return Err(CodecError::ZeroDimension { field });
    }
    u16::try_from(value).map_err(|_| CodecError::DimensionOverflow {
        field,
        value: value as u64,
        max: u16::MAX as u64,
    })
}

pub fn encode_container(s: &SymbolString, width: u32, height: u32) -> Result<Vec<u8>, CodecError> {
    Ok(SemanticContainer::new(s.clone(), width, height)?.to_bytes())
}

pub fn decode_container(bytes: &[u8]) -> Result<(SymbolString, u32, u32), CodecError> {
    let c = SemanticContainer::from_bytes(bytes)?;
    Ok((c.symbols, c.width as u32, c.height as u32))
}
