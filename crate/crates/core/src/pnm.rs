//! Minimal netpbm support: PGM (P2/P5) in and out, binary PPM (P6) out.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// A decoded grayscale image; `data` is row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub data: Vec<u16>,
}

/// Reads a P2 or P5 file. 16-bit P5 samples are big-endian.
pub fn read_pgm(path: &Path) -> Result<Pgm> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pgm(&bytes)
}

pub fn parse_pgm(bytes: &[u8]) -> Result<Pgm> {
    let mut cursor = HeaderCursor { bytes, pos: 0 };
    let magic = cursor.token()?;
    let binary = match magic.as_str() {
        "P2" => false,
        "P5" => true,
        other => return Err(Error::malformed("pgm", format!("unsupported magic {other:?}"))),
    };
    let width = cursor.number()?;
    let height = cursor.number()?;
    let maxval = cursor.number()?;
    if width == 0 || height == 0 {
        return Err(Error::malformed("pgm", "zero-sized image"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::malformed("pgm", format!("maxval {maxval} out of range")));
    }
    let maxval = maxval as u16;
    let count = width * height;
    let data = if binary {
        // exactly one whitespace byte separates the header from the raster
        let start = cursor.pos + 1;
        let wide = maxval > 255;
        let need = count * if wide { 2 } else { 1 };
        let raster = bytes
            .get(start..start + need)
            .ok_or_else(|| Error::malformed("pgm", "raster is truncated"))?;
        if wide {
            raster
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]))
                .collect()
        } else {
            raster.iter().map(|&b| b as u16).collect()
        }
    } else {
        let mut data = Vec::with_capacity(count);
        for _ in 0..count {
            data.push(cursor.number()? as u16);
        }
        data
    };
    if let Some(bad) = data.iter().find(|&&v| v > maxval) {
        return Err(Error::malformed("pgm", format!("sample {bad} exceeds maxval {maxval}")));
    }
    Ok(Pgm {
        width,
        height,
        maxval,
        data,
    })
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn token(&mut self) -> Result<String> {
        loop {
            match self.bytes.get(self.pos) {
                Some(b'#') => {
                    while self.bytes.get(self.pos).is_some_and(|&b| b != b'\n') {
                        self.pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => self.pos += 1,
                Some(_) => break,
                None => return Err(Error::malformed("pgm", "unexpected end of file")),
            }
        }
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| !b.is_ascii_whitespace() && *b != b'#')
        {
            self.pos += 1;
        }
        Ok(String::from_utf8_lossy(&self.bytes[start..self.pos]).into_owned())
    }

    fn number(&mut self) -> Result<usize> {
        let tok = self.token()?;
        tok.parse()
            .map_err(|_| Error::malformed("pgm", format!("expected a number, found {tok:?}")))
    }
}

/// Writes a binary PGM (P5). Uses two bytes per sample when `maxval > 255`.
pub fn write_pgm(path: &Path, img: &Pgm) -> Result<()> {
    let mut out = format!("P5\n{} {}\n{}\n", img.width, img.height, img.maxval).into_bytes();
    if img.maxval > 255 {
        for v in &img.data {
            out.extend_from_slice(&v.to_be_bytes());
        }
    } else {
        out.extend(img.data.iter().map(|&v| v as u8));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Writes an 8-bit binary PPM (P6) from row-major RGB triples.
pub fn write_ppm(path: &Path, width: usize, height: usize, rgb: &[[u8; 3]]) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    for px in rgb {
        out.extend_from_slice(px);
    }
    file.write_all(&out).map_err(|e| Error::io(path, e))
}
