use super::alphabet::{Symbol, SymbolString};
use super::CodecError;

/// Two symbols per byte, first symbol in the high nibble. An odd trailing
/// symbol is padded with a zero low nibble.
pub fn pack(s: &SymbolString) -> Vec<u8> {
    s.as_slice()
        .chunks(2)
        .map(|pair| {
            let hi = pair[0].index() << 4;
            let lo = pair.get(1).map_or(0, |s| s.index());
            hi | lo
        })
        .collect()
}

/// Inverse of [`pack`]. `bytes` must be exactly `ceil(symbol_count / 2)` long;
/// the padding nibble of an odd count is ignored.
pub fn unpack(bytes: &[u8], symbol_count: u64) -> Result<SymbolString, CodecError> {
    let expected = symbol_count.div_ceil(2);
    if bytes.len() as u64 != expected {
        return Err(CodecError::LengthMismatch {
            symbols: symbol_count,
            expected,
            actual: bytes.len() as u64,
        });
    }
    let mut out = Vec::with_capacity(symbol_count as usize);
    for &b in bytes {
        out.push(Symbol::from_nibble(b >> 4));
        out.push(Symbol::from_nibble(b));
    }
    out.truncate(symbol_count as usize);
    Ok(out.into())
}
