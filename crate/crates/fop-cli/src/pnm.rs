//! Netpbm readers and writers.
//!
//! Binary images travel as PBM (P1 ascii or P4 raw; on-pixels are PBM
//! black), grayscale as PGM (P2 or P5) with `maxval = gray_levels - 1`.
//! Writers emit the raw formats; 16-bit PGM samples are big-endian per the
//! format. Round trips are bit-exact.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use fop_core::image::{BinaryImage, GrayImage};

pub enum PnmImage {
    Binary(BinaryImage),
    Gray(GrayImage),
}

struct Header {
    magic: u8,
    width: usize,
    height: usize,
    maxval: usize,
    data_offset: usize,
}

/// Reads the ascii header: magic, dimensions and (for PGM) maxval, skipping
/// `#` comments. Returns the offset of the first data byte.
fn parse_header(bytes: &[u8], path: &Path) -> Result<Header> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        bail!("{}: not a netpbm file", path.display());
    }
    let magic = bytes[1];
    let wants = match magic {
        b'1' | b'4' => 2,
        b'2' | b'5' => 3,
        b'3' | b'6' => bail!("{}: color PPM is not supported", path.display()),
        other => bail!("{}: unknown netpbm magic P{}", path.display(), other as char),
    };

    let mut fields = [0usize; 3];
    let mut found = 0;
    let mut pos = 2;
    while found < wants {
        // Skip whitespace and comments.
        while pos < bytes.len() {
            match bytes[pos] {
                b' ' | b'\t' | b'\r' | b'\n' => pos += 1,
                b'#' => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            bail!("{}: truncated header", path.display());
        }
        let text = std::str::from_utf8(&bytes[start..pos]).unwrap();
        fields[found] = text.parse().context("header field")?;
        found += 1;
    }
    let data_offset = match magic {
        // Raw formats: exactly one whitespace byte after the header.
        b'4' | b'5' => {
            if pos >= bytes.len() {
                bail!("{}: missing pixel data", path.display());
            }
            pos + 1
        }
        _ => pos,
    };
    Ok(Header {
        magic,
        width: fields[0],
        height: fields[1],
        maxval: if wants == 3 { fields[2] } else { 1 },
        data_offset,
    })
}

pub fn read_pbm(path: &Path) -> Result<BinaryImage> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let h = parse_header(&bytes, path)?;
    if h.magic != b'1' && h.magic != b'4' {
        bail!("{}: expected PBM (P1/P4), found P{}", path.display(), h.magic as char);
    }
    let (w, n) = (h.width, h.height);
    let mut bits = Vec::with_capacity(w * n);
    match h.magic {
        b'1' => {
            for &b in &bytes[h.data_offset..] {
                match b {
                    b'0' => bits.push(0),
                    b'1' => bits.push(1),
                    b' ' | b'\t' | b'\r' | b'\n' => {}
                    b'#' => bail!("{}: comments after the header are not supported", path.display()),
                    other => bail!("{}: unexpected byte {:#x} in P1 data", path.display(), other),
                }
            }
            if bits.len() != w * n {
                bail!("{}: expected {} pixels, found {}", path.display(), w * n, bits.len());
            }
        }
        _ => {
            let row_bytes = w.div_ceil(8);
            let need = row_bytes * n;
            let data = &bytes[h.data_offset..];
            if data.len() < need {
                bail!("{}: truncated P4 data", path.display());
            }
            for row in 0..n {
                for col in 0..w {
                    let byte = data[row * row_bytes + col / 8];
                    bits.push((byte >> (7 - col % 8)) & 1);
                }
            }
        }
    }
    BinaryImage::from_bits(n, w, bits).map_err(Into::into)
}

pub fn write_pbm(path: &Path, img: &BinaryImage) -> Result<()> {
    let (n, w) = (img.rows(), img.cols());
    let row_bytes = w.div_ceil(8);
    let mut out = Vec::with_capacity(32 + row_bytes * n);
    write!(out, "P4\n{} {}\n", w, n)?;
    for row in 0..n {
        let mut packed = vec![0u8; row_bytes];
        for col in 0..w {
            if img.get(row, col) {
                packed[col / 8] |= 1 << (7 - col % 8);
            }
        }
        out.extend_from_slice(&packed);
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let h = parse_header(&bytes, path)?;
    if h.magic != b'2' && h.magic != b'5' {
        bail!("{}: expected PGM (P2/P5), found P{}", path.display(), h.magic as char);
    }
    if h.maxval == 0 || h.maxval > 65535 {
        bail!("{}: unsupported maxval {}", path.display(), h.maxval);
    }
    let (w, n) = (h.width, h.height);
    let mut pixels = Vec::with_capacity(w * n);
    match h.magic {
        b'2' => {
            let text = std::str::from_utf8(&bytes[h.data_offset..])
                .with_context(|| format!("{}: P2 data is not ascii", path.display()))?;
            for token in text.split_ascii_whitespace() {
                pixels.push(token.parse::<u16>().context("P2 sample")?);
            }
            if pixels.len() != w * n {
                bail!("{}: expected {} samples, found {}", path.display(), w * n, pixels.len());
            }
        }
        _ => {
            let data = &bytes[h.data_offset..];
            if h.maxval < 256 {
                if data.len() < w * n {
                    bail!("{}: truncated P5 data", path.display());
                }
                pixels.extend(data[..w * n].iter().map(|&b| b as u16));
            } else {
                if data.len() < 2 * w * n {
                    bail!("{}: truncated 16-bit P5 data", path.display());
                }
                for pair in data[..2 * w * n].chunks_exact(2) {
                    pixels.push(u16::from_be_bytes([pair[0], pair[1]]));
                }
            }
        }
    }
    GrayImage::from_pixels(n, w, h.maxval + 1, pixels).map_err(Into::into)
}

pub fn write_pgm(path: &Path, img: &GrayImage) -> Result<()> {
    let (n, w) = (img.rows(), img.cols());
    let maxval = img.gray_levels() - 1;
    if maxval == 0 {
        bail!("cannot write a PGM with maxval 0");
    }
    let mut out = Vec::new();
    write!(out, "P5\n{} {}\n{}\n", w, n, maxval)?;
    if maxval < 256 {
        out.extend(img.pixels().iter().map(|&p| p as u8));
    } else {
        for &p in img.pixels() {
            out.extend_from_slice(&p.to_be_bytes());
        }
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// Reads either format, dispatching on the magic number.
pub fn read_pnm(path: &Path) -> Result<PnmImage> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let h = parse_header(&bytes, path)?;
    match h.magic {
        b'1' | b'4' => read_pbm(path).map(PnmImage::Binary),
        _ => read_pgm(path).map(PnmImage::Gray),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn pbm_round_trip_is_bit_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("img.pbm");
        // Width not a multiple of 8 exercises row padding.
        let img = BinaryImage::from_fn(5, 11, |i, j| (i * 11 + j) % 3 == 0).unwrap();
        write_pbm(&path, &img).unwrap();
        assert_eq!(read_pbm(&path).unwrap(), img);
    }

    #[test]
    fn reads_ascii_pbm_with_comments() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("img.pbm");
        fs::write(&path, "P1\n# a comment\n3 2\n0 1 0\n1 1 0\n").unwrap();
        let img = read_pbm(&path).unwrap();
        assert_eq!((img.rows(), img.cols()), (2, 3));
        assert!(img.get(0, 1) && img.get(1, 0) && img.get(1, 1));
        assert_eq!(img.on_count(), 3);
    }

    #[test]
    fn pgm_round_trip_both_depths() {
        let dir = tempdir().unwrap();
        for levels in [256usize, 65536] {
            let path = dir.path().join(format!("img{levels}.pgm"));
            let img = GrayImage::from_pixels(
                3,
                4,
                levels,
                (0..12).map(|i| (i * (levels as u64 - 1) as usize / 11) as u16).collect(),
            )
            .unwrap();
            write_pgm(&path, &img).unwrap();
            assert_eq!(read_pgm(&path).unwrap(), img);
        }
    }

    #[test]
    fn reads_ascii_pgm() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        fs::write(&path, "P2\n2 2\n255\n0 128\n255 7\n").unwrap();
        let img = read_pgm(&path).unwrap();
        assert_eq!(img.gray_levels(), 256);
        assert_eq!(img.get(1, 0), 255);
        assert_eq!(img.get(1, 1), 7);
    }

    #[test]
    fn rejects_malformed_files() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad");
        fs::write(&path, "P4\n8 4\n\u{1}").unwrap();
        assert!(read_pbm(&path).is_err());
        fs::write(&path, "P7\n").unwrap();
        assert!(read_pnm(&path).is_err());
        fs::write(&path, "P2\n2 2\n255\n0 1 2\n").unwrap();
        assert!(read_pgm(&path).is_err());
        fs::write(&path, "P5\n2 2\n70000\n").unwrap();
        assert!(read_pgm(&path).is_err());
    }

    #[test]
    fn auto_dispatch_matches_magic() {
        let dir = tempdir().unwrap();
        let b = dir.path().join("b.pbm");
        write_pbm(&b, &BinaryImage::zeros(2, 2).unwrap()).unwrap();
        assert!(matches!(read_pnm(&b).unwrap(), PnmImage::Binary(_)));
        let g = dir.path().join("g.pgm");
        write_pgm(&g, &GrayImage::zeros(2, 2, 256).unwrap()).unwrap();
        assert!(matches!(read_pnm(&g).unwrap(), PnmImage::Gray(_)));
    }
}
