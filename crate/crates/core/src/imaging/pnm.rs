//! Binary PGM (`P5`) and PPM (`P6`) reading and writing.
//!
//! Only maxval-255 binary variants are handled: one byte per sample, so a
//! save/load cycle reproduces pixel data byte-for-byte. Header comments
//! (`#` to end of line) are skipped wherever whitespace may appear.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::{Image, ImageError, ImagePlane, RgbImage, MAX_DIMENSION};

#[derive(Debug, Error)]
pub enum PnmError {
    #[error("i/o: {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("i/o: {0}")]
    Stream(#[from] io::Error),
    #[error("bad magic {found:?}, expected \"P5\" or \"P6\"")]
    BadMagic { found: String },
    #[error("invalid {field} token {token:?}")]
    BadToken { field: &'static str, token: String },
    #[error("header ended before {field}")]
    MissingField { field: &'static str },
    #[error("unsupported maxval {maxval}, only 255 is accepted")]
    UnsupportedMaxval { maxval: u32 },
    #[error("declared size {width}x{height} exceeds the {max}x{max} limit")]
    TooLarge { width: u32, height: u32, max: u32 },
    #[error("payload truncated: expected {expected} bytes, got {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error(transparent)]
    Image(#[from] ImageError),
}

/// Reads one PGM/PPM image from a byte stream.
///
/// `P5` yields [`Image::Gray`], `P6` yields [`Image::Rgb`]. The reader is
/// left positioned just past the pixel payload; trailing bytes are not
/// consumed.
pub fn read_image<R: BufRead>(reader: &mut R) -> Result<Image, PnmError> {
    let mut magic = [0u8; 2];
    read_fully(reader, &mut magic).map_err(|_| PnmError::MissingField { field: "magic" })?;
    let channels: usize = match &magic {
        b"P5" => 1,
        b"P6" => 3,
        other => {
            return Err(PnmError::BadMagic {
                found: String::from_utf8_lossy(other).into_owned(),
            })
        }
    };

    let width = header_number(reader, "width")?;
    let height = header_number(reader, "height")?;
    let maxval = header_number(reader, "maxval")?;
    if maxval != 255 {
        return Err(PnmError::UnsupportedMaxval { maxval });
    }
    if width == 0 || height == 0 {
        return Err(ImageError::ZeroDimension { width, height }.into());
    }
    if width > MAX_DIMENSION || height > MAX_DIMENSION {
        return Err(PnmError::TooLarge {
            width,
            height,
            max: MAX_DIMENSION,
        });
    }

    let expected = width as usize * height as usize * channels;
    let mut payload = vec![0u8; expected];
    let actual = read_fully(reader, &mut payload)?;
    if actual < expected {
        return Err(PnmError::Truncated { expected, actual });
    }

    if channels == 1 {
        Ok(Image::Gray(ImagePlane::new(width, height, payload)?))
    } else {
        Ok(Image::Rgb(RgbImage::from_interleaved(width, height, &payload)?))
    }
}

/// Writes `image` as binary PGM (gray) or PPM (color).
pub fn write_image<W: Write>(writer: &mut W, image: &Image) -> Result<(), PnmError> {
    match image {
        Image::Gray(plane) => {
            write!(writer, "P5\n{} {}\n255\n", plane.width(), plane.height())?;
            writer.write_all(plane.pixels())?;
        }
        Image::Rgb(rgb) => {
            write!(writer, "P6\n{} {}\n255\n", rgb.width(), rgb.height())?;
            writer.write_all(&rgb.interleave())?;
        }
    }
    writer.flush()?;
    Ok(())
}

/// Loads a PGM/PPM file. Errors carry the offending path.
pub fn load_image<P: AsRef<Path>>(path: P) -> Result<Image, PnmError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| PnmError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = BufReader::new(file);
    match read_image(&mut reader) {
        Err(PnmError::Stream(source)) => Err(PnmError::Io {
            path: path.to_path_buf(),
            source,
        }),
        other => other,
    }
}

/// Saves an image next to its final name and renames into place, so a
/// failed save never leaves a partial file at `path`.
pub fn save_image<P: AsRef<Path>>(path: P, image: &Image) -> Result<(), PnmError> {
    let path = path.as_ref();
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);

    let write_to_tmp = || -> Result<(), PnmError> {
        let file = File::create(&tmp).map_err(|source| PnmError::Io {
            path: tmp.clone(),
            source,
        })?;
        let mut writer = BufWriter::new(file);
        match write_image(&mut writer, image) {
            Err(PnmError::Stream(source)) => Err(PnmError::Io {
                path: tmp.clone(),
                source,
            }),
            other => other,
        }
    };

    write_to_tmp().inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })?;
    std::fs::rename(&tmp, path).map_err(|source| {
        let _ = std::fs::remove_file(&tmp);
        PnmError::Io {
            path: path.to_path_buf(),
            source,
        }
    })
}

/// Reads until `buf` is full or EOF; returns the number of bytes read.
fn read_fully<R: Read>(reader: &mut R, buf: &mut [u8]) -> Result<usize, PnmError> {
    let mut filled = 0;
    while filled < buf.len() {
        match reader.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(PnmError::Stream(e)),
        }
    }
    Ok(filled)
}

/// Parses the next decimal header field, skipping whitespace and `#`
/// comment lines. Consumes exactly one whitespace byte after the token,
/// as the PNM grammar requires before binary payload.
fn header_number<R: BufRead>(reader: &mut R, field: &'static str) -> Result<u32, PnmError> {
    // Skip whitespace and comments.
    loop {
        match peek_byte(reader)? {
            None => return Err(PnmError::MissingField { field }),
            Some(b'#') => {
                consume_line(reader)?;
            }
            Some(b) if b.is_ascii_whitespace() => {
                consume_one(reader)?;
            }
            Some(_) => break,
        }
    }

    let mut token = Vec::new();
    loop {
        match peek_byte(reader)? {
            None => break, // EOF terminates the token; acceptable for the last field
            Some(b) if b.is_ascii_whitespace() => {
                consume_one(reader)?; // the single separator byte
                break;
            }
            Some(b) => {
                token.push(b);
                consume_one(reader)?;
                if token.len() > 16 {
                    break; // no legitimate field is this long
                }
            }
        }
    }
    if token.is_empty() {
        return Err(PnmError::MissingField { field });
    }

    let text = String::from_utf8_lossy(&token).into_owned();
    text.parse::<u32>().map_err(|_| PnmError::BadToken { field, token: text })
}

fn peek_byte<R: BufRead>(reader: &mut R) -> Result<Option<u8>, PnmError> {
    loop {
        return match reader.fill_buf() {
            Ok([]) => Ok(None),
            Ok(buf) => Ok(Some(buf[0])),
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(e) => Err(PnmError::Stream(e)),
        };
    }
}

fn consume_one<R: BufRead>(reader: &mut R) -> Result<(), PnmError> {
    reader.consume(1);
    Ok(())
}

fn consume_line<R: BufRead>(reader: &mut R) -> Result<(), PnmError> {
    let mut scratch = Vec::new();
    reader.read_until(b'\n', &mut scratch)?;
    Ok(())
}
