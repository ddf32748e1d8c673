//! TCP frame layout.
//!
//! ```text
//! +---------+---------+---------+-----------+-------------------+
//! | src u32 | dst u32 | tag u32 | len u32   | payload (len B)   |
//! +---------+---------+---------+-----------+-------------------+
//! ```
//!
//! All header fields are little-endian.

use std::io::{self, Read, Write};

use super::{Frame, TransportError};

pub const HEADER_LEN: usize = 16;

/// Tag reserved for the connection handshake; never delivered to receivers.
pub const HELLO_TAG: u32 = u32::MAX;

pub fn encode_frame(frame: &Frame) -> Result<Vec<u8>, TransportError> {
    let len = u32::try_from(frame.payload.len())
        .map_err(|_| TransportError::Protocol(format!("payload of {} bytes too large", frame.payload.len())))?;
    let mut buf = Vec::with_capacity(HEADER_LEN + frame.payload.len());
    for field in [to_u32(frame.src)?, to_u32(frame.dst)?, frame.tag, len] {
        buf.extend_from_slice(&field.to_le_bytes());
    }
    buf.extend_from_slice(&frame.payload);
    Ok(buf)
}

pub fn write_frame<W: Write>(writer: &mut W, frame: &Frame) -> Result<(), TransportError> {
    writer.write_all(&encode_frame(frame)?)?;
    Ok(())
}

/// Reads one frame. `Ok(None)` on a clean end of stream at a frame boundary.
pub fn read_frame<R: Read>(reader: &mut R) -> io::Result<Option<Frame>> {
    let mut header = [0u8; HEADER_LEN];
    let mut filled = 0;
    while filled < HEADER_LEN {
        match reader.read(&mut header[filled..]) {
            Ok(0) if filled == 0 => return Ok(None),
            Ok(0) => return Err(io::ErrorKind::UnexpectedEof.into()),
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    let field = |i: usize| u32::from_le_bytes(header[i * 4..i * 4 + 4].try_into().unwrap());
    let mut payload = vec![0u8; field(3) as usize];
    reader.read_exact(&mut payload)?;
    Ok(Some(Frame {
        src: field(0) as usize,
        dst: field(1) as usize,
        tag: field(2),
        payload,
    }))
}

fn to_u32(rank: usize) -> Result<u32, TransportError> {
    u32::try_from(rank).map_err(|_| TransportError::Protocol(format!("rank {rank} exceeds u32")))
}
