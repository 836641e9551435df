//! Binary image container: header plus raw text and data segments.
//!
//! On-disk layout: magic `SV8M`, then six little-endian u32 header fields
//! `{version, entry, text_base, text_len_bytes, data_base, data_len_bytes}`,
//! then the raw segments. Segment contents are target memory bytes, i.e.
//! big-endian words.

use sha2::{Digest, Sha256};
use std::path::Path;
use thiserror::Error;

pub const IMAGE_MAGIC: [u8; 4] = *b"SV8M";
pub const IMAGE_VERSION: u32 = 1;

/// Default segment bases used by the assembler.
pub const DEFAULT_TEXT_BASE: u32 = 0x0000_1000;
pub const DEFAULT_DATA_BASE: u32 = 0x0010_0000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    pub version: u32,
    pub entry: u32,
    pub text_base: u32,
    pub data_base: u32,
    /// Encoded instruction words.
    pub text: Vec<u32>,
    pub data: Vec<u8>,
}

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("bad magic {0:02x?}, expected `SV8M`")]
    BadMagic([u8; 4]),
    #[error("unsupported image version {0}")]
    UnsupportedVersion(u32),
    #[error("truncated image: expected {expected} bytes, got {got}")]
    Truncated { expected: usize, got: usize },
    #[error("text length {0} is not a multiple of 4")]
    BadTextLength(u32),
    #[error("segment bases misaligned (text {text_base:#x}, data {data_base:#x})")]
    Misaligned { text_base: u32, data_base: u32 },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl BinaryImage {
    pub fn text_len_bytes(&self) -> u32 {
        (self.text.len() * 4) as u32
    }

    /// End of the text segment (exclusive).
    pub fn text_end(&self) -> u32 {
        self.text_base + self.text_len_bytes()
    }

    pub fn data_end(&self) -> u32 {
        self.data_base + self.data.len() as u32
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(28 + self.text.len() * 4 + self.data.len());
        out.extend_from_slice(&IMAGE_MAGIC);
        for field in [
            self.version,
            self.entry,
            self.text_base,
            self.text_len_bytes(),
            self.data_base,
            self.data.len() as u32,
        ] {
            out.extend_from_slice(&field.to_le_bytes());
        }
        for word in &self.text {
            out.extend_from_slice(&word.to_be_bytes());
        }
        out.extend_from_slice(&self.data);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<BinaryImage, ImageError> {
        if bytes.len() < 28 {
            return Err(ImageError::Truncated {
                expected: 28,
                got: bytes.len(),
            });
        }
        let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
        if magic != IMAGE_MAGIC {
            return Err(ImageError::BadMagic(magic));
        }
        let field = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap());
        let version = field(0);
        if version != IMAGE_VERSION {
            return Err(ImageError::UnsupportedVersion(version));
        }
        let entry = field(1);
        let text_base = field(2);
        let text_len = field(3);
        let data_base = field(4);
        let data_len = field(5);
        if text_len % 4 != 0 {
            return Err(ImageError::BadTextLength(text_len));
        }
        if text_base % 4 != 0 || data_base % 4 != 0 {
            return Err(ImageError::Misaligned {
                text_base,
                data_base,
            });
        }
        let expected = 28 + text_len as usize + data_len as usize;
        if bytes.len() != expected {
            return Err(ImageError::Truncated {
                expected,
                got: bytes.len(),
            });
        }
        let text = bytes[28..28 + text_len as usize]
            .chunks_exact(4)
            .map(|c| u32::from_be_bytes(c.try_into().unwrap()))
            .collect();
        let data = bytes[28 + text_len as usize..expected].to_vec();
        Ok(BinaryImage {
            version,
            entry,
            text_base,
            data_base,
            text,
            data,
        })
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<(), ImageError> {
        Ok(std::fs::write(path, self.to_bytes())?)
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<BinaryImage, ImageError> {
        BinaryImage::from_bytes(&std::fs::read(path)?)
    }

    /// SHA-256 of the serialized image, lowercase hex. Measurement tables key
    /// their rows on this hash.
    pub fn content_hash(&self) -> String {
        let digest = Sha256::digest(self.to_bytes());
        let mut out = String::with_capacity(64);
        for byte in digest {
            use std::fmt::Write;
            let _ = write!(out, "{byte:02x}");
        }
        out
    }
}
