//! File formats: CSV matrices (row per line, locale-independent decimal
//! point, optional `# n=<n>` header) and PGM images (P2 ASCII and P5 binary,
//! maxval up to 65535), with pixel values mapped to `[0, 1]`.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Reads a CSV matrix: one row per line, comma-separated, `#`-prefixed lines
/// ignored.
pub fn read_csv_matrix(path: &Path) -> Result<DenseMatrix<f64>> {
    let text = fs::read_to_string(path)?;
    parse_csv_matrix(&text)
}

pub fn parse_csv_matrix(text: &str) -> Result<DenseMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut row = Vec::new();
        for field in line.split(',') {
            let field = field.trim();
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                msg: format!("invalid number {field:?}"),
            })?;
            row.push(v);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("expected {} fields, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 0,
            msg: "no data rows".into(),
        });
    }
    let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    Ok(DenseMatrix::from_rows(&refs))
}

/// Writes a CSV matrix with a `# n=<rows>` header. `f64` values print in
/// shortest round-trip form, so read-back is lossless.
pub fn write_csv_matrix(path: &Path, m: &DenseMatrix<f64>) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("# n={}\n", m.rows()));
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            if c > 0 {
                out.push(',');
            }
            out.push_str(&format!("{}", m.get(r, c)));
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// A grayscale image as a matrix of intensities in `[0, 1]`.
pub struct PgmImage {
    pub pixels: DenseMatrix<f64>,
    pub maxval: u32,
}

/// Reads a PGM image (P2 or P5, maxval <= 65535), mapping samples to `[0, 1]`.
pub fn read_pgm(path: &Path) -> Result<PgmImage> {
    let bytes = fs::read(path)?;
    parse_pgm(&bytes)
}

pub fn parse_pgm(bytes: &[u8]) -> Result<PgmImage> {
    let mut pos = 0usize;
    let mut tokens: Vec<(usize, String)> = Vec::new(); // header tokens
    // Tokenize the header: magic, width, height, maxval; '#' starts a comment.
    while tokens.len() < 4 {
        if pos >= bytes.len() {
            return Err(Error::Parse {
                line: 0,
                msg: "truncated PGM header".into(),
            });
        }
        let b = bytes[pos];
        if b == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
        } else if b.is_ascii_whitespace() {
            pos += 1;
        } else {
            let start = pos;
            while pos < bytes.len()
                && !bytes[pos].is_ascii_whitespace()
                && bytes[pos] != b'#'
            {
                pos += 1;
            }
            tokens.push((start, String::from_utf8_lossy(&bytes[start..pos]).into_owned()));
        }
    }
    let magic = tokens[0].1.as_str();
    if magic != "P2" && magic != "P5" {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unsupported PGM magic {magic:?}"),
        });
    }
    let parse_dim = |s: &str| -> Result<usize> {
        s.parse().map_err(|_| Error::Parse {
            line: 1,
            msg: format!("invalid PGM dimension {s:?}"),
        })
    };
    let width = parse_dim(&tokens[1].1)?;
    let height = parse_dim(&tokens[2].1)?;
    let maxval: u32 = tokens[3].1.parse().map_err(|_| Error::Parse {
        line: 1,
        msg: format!("invalid PGM maxval {:?}", tokens[3].1),
    })?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Parse {
            line: 1,
            msg: format!("PGM maxval {maxval} out of range"),
        });
    }
    let count = width * height;
    let mut samples = Vec::with_capacity(count);
    if magic == "P2" {
        let text = String::from_utf8_lossy(&bytes[pos..]);
        for tok in text.split_ascii_whitespace() {
            if samples.len() == count {
                break;
            }
            let v: u32 = tok.parse().map_err(|_| Error::Parse {
                line: 0,
                msg: format!("invalid PGM sample {tok:?}"),
            })?;
            samples.push(v);
        }
    } else {
        // One whitespace byte separates the header from binary data.
        pos += 1;
        if maxval < 256 {
            for &b in bytes[pos..].iter().take(count) {
                samples.push(b as u32);
            }
        } else {
            // Two bytes per sample, big-endian.
            let data = &bytes[pos..];
            for i in 0..count.min(data.len() / 2) {
                samples.push(((data[2 * i] as u32) << 8) | data[2 * i + 1] as u32);
            }
        }
    }
    if samples.len() != count {
        return Err(Error::Parse {
            line: 0,
            msg: format!("expected {count} PGM samples, found {}", samples.len()),
        });
    }
    let scale = 1.0 / maxval as f64;
    let pixels = DenseMatrix::from_fn(height, width, |r, c| samples[r * width + c] as f64 * scale);
    Ok(PgmImage { pixels, maxval })
}

/// Writes a `[0, 1]`-valued matrix as a binary (P5) PGM with maxval 255;
/// values are clamped before quantization.
pub fn write_pgm(path: &Path, pixels: &DenseMatrix<f64>) -> Result<()> {
    let (height, width) = pixels.shape();
    let mut out = Vec::with_capacity(32 + width * height);
    write!(out, "P5\n{width} {height}\n255\n")?;
    for r in 0..height {
        for c in 0..width {
            let v = pixels.get(r, c).clamp(0.0, 1.0);
            out.push((v * 255.0).round() as u8);
        }
    }
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let dir = std::env::temp_dir().join("stiefel_jd_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("m.csv");
        let m = DenseMatrix::from_rows(&[
            &[1.5, -2.25, 3.0e-17],
            &[0.1 + 0.2, 4.0, -5.5],
        ]);
        write_csv_matrix(&path, &m).unwrap();
        let back = read_csv_matrix(&path).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn csv_rejects_ragged_and_garbage() {
        assert!(matches!(
            parse_csv_matrix("1,2\n3\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_csv_matrix("1,x\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(parse_csv_matrix("# only a comment\n").is_err());
    }

    #[test]
    fn csv_accepts_header_comment() {
        let m = parse_csv_matrix("# n=2\n1,2\n3,4\n").unwrap();
        assert_eq!(m.shape(), (2, 2));
        assert_eq!(m.get(1, 0), 3.0);
    }

    #[test]
    fn pgm_ascii_parse() {
        let text = b"P2\n# comment\n3 2\n255\n0 128 255\n64 32 16\n";
        let img = parse_pgm(text).unwrap();
        assert_eq!(img.pixels.shape(), (2, 3));
        assert_eq!(img.pixels.get(0, 2), 1.0);
        assert!((img.pixels.get(0, 1) - 128.0 / 255.0).abs() < 1e-12);
    }

    #[test]
    fn pgm_binary_round_trip() {
        let dir = std::env::temp_dir().join("stiefel_jd_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("img.pgm");
        let m = DenseMatrix::from_fn(4, 5, |r, c| ((r * 5 + c) as f64) / 19.0);
        write_pgm(&path, &m).unwrap();
        let back = read_pgm(&path).unwrap();
        assert_eq!(back.pixels.shape(), (4, 5));
        for r in 0..4 {
            for c in 0..5 {
                assert!((back.pixels.get(r, c) - m.get(r, c)).abs() <= 0.5 / 255.0);
            }
        }
    }

    #[test]
    fn pgm_sixteen_bit() {
        let mut bytes = b"P5\n2 1\n65535\n".to_vec();
        bytes.extend_from_slice(&[0xFF, 0xFF, 0x00, 0x01]);
        let img = parse_pgm(&bytes).unwrap();
        assert_eq!(img.maxval, 65535);
        assert_eq!(img.pixels.get(0, 0), 1.0);
        assert!((img.pixels.get(0, 1) - 1.0 / 65535.0).abs() < 1e-12);
    }

    #[test]
    fn pgm_rejects_bad_magic() {
        assert!(parse_pgm(b"P6\n1 1\n255\n\x00").is_err());
    }
}
