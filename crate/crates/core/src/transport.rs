//! Framed, RC4-encrypted image transmission over reliable byte streams.
//!
//! One frame carries one image:
//!
//! ```text
//! offset  size  field
//!      0     4  magic "SVIP" (0x53 0x56 0x49 0x50)
//!      4     1  version (1)
//!      5     1  channels: 1 = grayscale, 3 = RGB
//!      6     2  width,  big-endian
//!      8     2  height, big-endian
//!     10     4  CRC-32 of the plaintext payload, big-endian
//!     14     …  payload: width·height·channels pixel bytes, RC4-encrypted
//! ```
//!
//! The 14-byte header is sent in the clear; only the pixel payload is
//! encrypted, with a fresh RC4 state per frame so the keystream position
//! never depends on earlier frames. Pixels are row-major, RGB interleaved
//! per pixel for color. The checksum is computed before encryption, so a
//! receiver that decrypts with the wrong key sees a checksum mismatch —
//! indistinguishable from corruption, by design.
//!
//! Because every frame restarts the keystream from the same key, two
//! frames encrypted under one key reuse keystream bytes. That mirrors the
//! modeled hardware and keeps framing deterministic; it is also exactly
//! why this protocol must not be used where confidentiality matters.

use std::io::{self, Read, Write};
use std::sync::{Arc, Condvar, Mutex};

use thiserror::Error;

use crate::imaging::{Image, ImageError, ImagePlane, RgbImage, MAX_DIMENSION};
use crate::rc4::{Key, Rc4State};

/// First four bytes of every frame.
pub const FRAME_MAGIC: [u8; 4] = *b"SVIP";

/// Current wire protocol version.
pub const PROTOCOL_VERSION: u8 = 1;

/// Size of the clear header that precedes each payload.
pub const HEADER_LEN: usize = 14;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("bad frame magic {found:02X?}")]
    BadMagic { found: [u8; 4] },
    #[error("unsupported protocol version {found}, expected {PROTOCOL_VERSION}")]
    Version { found: u8 },
    #[error("invalid channel count {found}, expected 1 or 3")]
    Channels { found: u8 },
    #[error("frame declares empty image {width}x{height}")]
    EmptyImage { width: u16, height: u16 },
    #[error("image {width}x{height} exceeds the {max}x{max} frame limit")]
    TooLarge { width: u32, height: u32, max: u32 },
    #[error("frame truncated: expected {expected} bytes, got {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("payload checksum mismatch: wrong key or corrupted data")]
    Integrity,
    #[error("channel failed after {written} bytes written: {source}")]
    Send { written: usize, source: io::Error },
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Image(#[from] ImageError),
}

/// CRC-32 (the ubiquitous reflected variant used by zlib and Ethernet)
/// over `data`.
pub fn crc32(data: &[u8]) -> u32 {
    const TABLE: [u32; 256] = crc32_table();
    let mut crc = 0xFFFF_FFFFu32;
    for &b in data {
        crc = (crc >> 8) ^ TABLE[((crc ^ b as u32) & 0xFF) as usize];
    }
    !crc
}

const fn crc32_table() -> [u32; 256] {
    let mut table = [0u32; 256];
    let mut i = 0;
    while i < 256 {
        let mut crc = i as u32;
        let mut bit = 0;
        while bit < 8 {
            crc = if crc & 1 != 0 {
                (crc >> 1) ^ 0xEDB8_8320
            } else {
                crc >> 1
            };
            bit += 1;
        }
        table[i] = crc;
        i += 1;
    }
    table
}

/// The clear portion of a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameHeader {
    pub channels: u8,
    pub width: u16,
    pub height: u16,
    /// CRC-32 of the plaintext payload.
    pub checksum: u32,
}

impl FrameHeader {
    pub fn payload_len(&self) -> usize {
        self.width as usize * self.height as usize * self.channels as usize
    }

    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[0..4].copy_from_slice(&FRAME_MAGIC);
        out[4] = PROTOCOL_VERSION;
        out[5] = self.channels;
        out[6..8].copy_from_slice(&self.width.to_be_bytes());
        out[8..10].copy_from_slice(&self.height.to_be_bytes());
        out[10..14].copy_from_slice(&self.checksum.to_be_bytes());
        out
    }

    /// Validates and decodes a header. Magic is checked first, then
    /// version, channels and dimensions, so nothing downstream runs on a
    /// stream that is not ours.
    pub fn parse(bytes: &[u8; HEADER_LEN]) -> Result<Self, TransportError> {
        if bytes[0..4] != FRAME_MAGIC {
            return Err(TransportError::BadMagic {
                found: [bytes[0], bytes[1], bytes[2], bytes[3]],
            });
        }
        if bytes[4] != PROTOCOL_VERSION {
            return Err(TransportError::Version { found: bytes[4] });
        }
        let channels = bytes[5];
        if channels != 1 && channels != 3 {
            return Err(TransportError::Channels { found: channels });
        }
        let width = u16::from_be_bytes([bytes[6], bytes[7]]);
        let height = u16::from_be_bytes([bytes[8], bytes[9]]);
        if width == 0 || height == 0 {
            return Err(TransportError::EmptyImage { width, height });
        }
        if width as u32 > MAX_DIMENSION || height as u32 > MAX_DIMENSION {
            return Err(TransportError::TooLarge {
                width: width as u32,
                height: height as u32,
                max: MAX_DIMENSION,
            });
        }
        let checksum = u32::from_be_bytes([bytes[10], bytes[11], bytes[12], bytes[13]]);
        Ok(Self {
            channels,
            width,
            height,
            checksum,
        })
    }
}

fn check_dimensions(image: &Image) -> Result<(u16, u16), TransportError> {
    let (w, h) = (image.width(), image.height());
    if w > MAX_DIMENSION || h > MAX_DIMENSION {
        return Err(TransportError::TooLarge {
            width: w,
            height: h,
            max: MAX_DIMENSION,
        });
    }
    Ok((w as u16, h as u16))
}

/// Serializes one image into a complete frame: clear header, then the
/// pixel payload encrypted with a fresh RC4 state derived from `key`.
pub fn encode_frame(image: &Image, key: &Key) -> Result<Vec<u8>, TransportError> {
    let (width, height) = check_dimensions(image)?;
    let mut payload = match image {
        Image::Gray(plane) => plane.pixels().to_vec(),
        Image::Rgb(rgb) => rgb.interleave(),
    };
    let header = FrameHeader {
        channels: image.channels(),
        width,
        height,
        checksum: crc32(&payload),
    };
    Rc4State::new(key).apply_in_place(&mut payload);

    let mut frame = Vec::with_capacity(HEADER_LEN + payload.len());
    frame.extend_from_slice(&header.to_bytes());
    frame.extend_from_slice(&payload);
    Ok(frame)
}

fn rebuild_image(header: &FrameHeader, payload: Vec<u8>) -> Result<Image, TransportError> {
    let (w, h) = (header.width as u32, header.height as u32);
    if header.channels == 1 {
        Ok(Image::Gray(ImagePlane::new(w, h, payload)?))
    } else {
        Ok(Image::Rgb(RgbImage::from_interleaved(w, h, &payload)?))
    }
}

fn decode_frame_inner(bytes: &[u8], key: &Key, verify: bool) -> Result<Image, TransportError> {
    if bytes.len() < HEADER_LEN {
        return Err(TransportError::Truncated {
            expected: HEADER_LEN,
            actual: bytes.len(),
        });
    }
    let mut head = [0u8; HEADER_LEN];
    head.copy_from_slice(&bytes[..HEADER_LEN]);
    let header = FrameHeader::parse(&head)?;
    let expected = HEADER_LEN + header.payload_len();
    if bytes.len() < expected {
        return Err(TransportError::Truncated {
            expected,
            actual: bytes.len(),
        });
    }
    let mut payload = bytes[HEADER_LEN..expected].to_vec();
    Rc4State::new(key).apply_in_place(&mut payload);
    if verify && crc32(&payload) != header.checksum {
        return Err(TransportError::Integrity);
    }
    rebuild_image(&header, payload)
}

/// Decodes the frame at the start of `bytes`; trailing bytes are ignored.
/// Inverse of [`encode_frame`] under the same key.
pub fn decode_frame(bytes: &[u8], key: &Key) -> Result<Image, TransportError> {
    decode_frame_inner(bytes, key, true)
}

/// [`decode_frame`] without the checksum check: a wrong key yields noise
/// pixels instead of an error. Useful for looking at what an
/// eavesdropper (or a mis-keyed receiver) would see.
pub fn decode_frame_unverified(bytes: &[u8], key: &Key) -> Result<Image, TransportError> {
    decode_frame_inner(bytes, key, false)
}

struct CountingWriter<'a, W: Write> {
    inner: &'a mut W,
    written: usize,
}

impl<W: Write> Write for CountingWriter<'_, W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.written += n;
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

/// Writes one complete frame to the endpoint and flushes it. Frames may
/// be sent back to back on one connection; each is independent.
///
/// A channel failure reports how many bytes made it out.
pub fn send_image<W: Write>(
    endpoint: &mut W,
    image: &Image,
    key: &Key,
) -> Result<(), TransportError> {
    let frame = encode_frame(image, key)?;
    let mut w = CountingWriter {
        inner: endpoint,
        written: 0,
    };
    w.write_all(&frame)
        .and_then(|()| w.flush())
        .map_err(|source| TransportError::Send {
            written: w.written,
            source,
        })
}

/// Reads until `buf` is full or EOF; returns the number of bytes read.
fn read_fully<R: Read>(reader: &mut R, buf: &mut [u8]) -> Result<usize, TransportError> {
    let mut filled = 0;
    while filled < buf.len() {
        match reader.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(TransportError::Io(e)),
        }
    }
    Ok(filled)
}

fn recv_image_inner<R: Read>(
    endpoint: &mut R,
    key: &Key,
    verify: bool,
) -> Result<Option<Image>, TransportError> {
    let mut head = [0u8; HEADER_LEN];
    let got = read_fully(endpoint, &mut head)?;
    if got == 0 {
        return Ok(None); // clean end of stream at a frame boundary
    }
    if got < HEADER_LEN {
        return Err(TransportError::Truncated {
            expected: HEADER_LEN,
            actual: got,
        });
    }
    let header = FrameHeader::parse(&head)?;
    let expected = header.payload_len();

    // Grow the buffer with the data rather than trusting the declared
    // length, so a lying header cannot force a huge allocation.
    let mut payload = Vec::with_capacity(expected.min(1 << 20));
    endpoint
        .take(expected as u64)
        .read_to_end(&mut payload)
        .map_err(TransportError::Io)?;
    if payload.len() < expected {
        return Err(TransportError::Truncated {
            expected,
            actual: payload.len(),
        });
    }

    Rc4State::new(key).apply_in_place(&mut payload);
    if verify && crc32(&payload) != header.checksum {
        return Err(TransportError::Integrity);
    }
    rebuild_image(&header, payload).map(Some)
}

/// Reads one frame from the endpoint and decodes it, leaving the stream
/// positioned at the next frame boundary.
///
/// Returns `Ok(None)` when the stream ends cleanly before a header —
/// distinct from `Err(Truncated)`, which means the stream died mid-frame.
pub fn recv_image<R: Read>(endpoint: &mut R, key: &Key) -> Result<Option<Image>, TransportError> {
    recv_image_inner(endpoint, key, true)
}

/// [`recv_image`] without the checksum check; see
/// [`decode_frame_unverified`].
pub fn recv_image_unverified<R: Read>(
    endpoint: &mut R,
    key: &Key,
) -> Result<Option<Image>, TransportError> {
    recv_image_inner(endpoint, key, false)
}

struct PipeShared {
    state: Mutex<PipeState>,
    readable: Condvar,
    writable: Condvar,
}

struct PipeState {
    buf: std::collections::VecDeque<u8>,
    writer_closed: bool,
    reader_closed: bool,
}

/// Write end of an in-memory loopback channel.
pub struct LoopbackWriter {
    shared: Arc<PipeShared>,
    capacity: usize,
}

/// Read end of an in-memory loopback channel.
pub struct LoopbackReader {
    shared: Arc<PipeShared>,
}

/// A bounded in-process byte channel: everything written to the
/// [`LoopbackWriter`] comes out of the [`LoopbackReader`] in order.
///
/// The small buffer forces data across in arbitrary chunks, which makes
/// it a good stand-in for a real serial link in tests: the receiver gets
/// no message-boundary hints. Dropping the writer ends the stream;
/// dropping the reader makes further writes fail like a broken pipe.
pub fn loopback(capacity: usize) -> (LoopbackWriter, LoopbackReader) {
    assert!(capacity > 0, "loopback capacity must be positive");
    let shared = Arc::new(PipeShared {
        state: Mutex::new(PipeState {
            buf: std::collections::VecDeque::new(),
            writer_closed: false,
            reader_closed: false,
        }),
        readable: Condvar::new(),
        writable: Condvar::new(),
    });
    (
        LoopbackWriter {
            shared: Arc::clone(&shared),
            capacity,
        },
        LoopbackReader { shared },
    )
}

impl Write for LoopbackWriter {
    fn write(&mut self, data: &[u8]) -> io::Result<usize> {
        if data.is_empty() {
            return Ok(0);
        }
        let mut state = self.shared.state.lock().unwrap();
        loop {
            if state.reader_closed {
                return Err(io::Error::new(
                    io::ErrorKind::BrokenPipe,
                    "loopback reader dropped",
                ));
            }
            let room = self.capacity - state.buf.len();
            if room > 0 {
                let n = room.min(data.len());
                state.buf.extend(&data[..n]);
                self.shared.readable.notify_one();
                return Ok(n);
            }
            state = self.shared.writable.wait(state).unwrap();
        }
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

impl Drop for LoopbackWriter {
    fn drop(&mut self) {
        let mut state = self.shared.state.lock().unwrap();
        state.writer_closed = true;
        self.shared.readable.notify_all();
    }
}

impl Read for LoopbackReader {
    fn read(&mut self, out: &mut [u8]) -> io::Result<usize> {
        if out.is_empty() {
            return Ok(0);
        }
        let mut state = self.shared.state.lock().unwrap();
        loop {
            if !state.buf.is_empty() {
                let n = out.len().min(state.buf.len());
                for slot in out[..n].iter_mut() {
                    *slot = state.buf.pop_front().expect("checked nonempty");
                }
                self.shared.writable.notify_one();
                return Ok(n);
            }
            if state.writer_closed {
                return Ok(0);
            }
            state = self.shared.readable.wait(state).unwrap();
        }
    }
}

impl Drop for LoopbackReader {
    fn drop(&mut self) {
        let mut state = self.shared.state.lock().unwrap();
        state.reader_closed = true;
        self.shared.writable.notify_all();
    }
}
