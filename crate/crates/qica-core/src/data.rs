//! Synthetic generators and matrix file I/O.
//!
//! Generators are deterministic functions of (parameters, seed). Matrices
//! are filled entry by entry in row-major order from a single ChaCha8
//! stream; standard-normal variates use the rand_distr ziggurat sampler, so
//! a seed pins the exact matrix within a build.
//!
//! Two file formats are supported:
//! - CSV: numeric-only, comma-separated, no quoting, one row per line,
//!   values emitted with 17 significant digits so a round trip is exact;
//! - f64 binary: magic `QIMATRIX`, then row and column counts as
//!   little-endian u64, then the entries row-major as little-endian f64.
//!   Round trips are bit-exact.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, SampleRng};

const MAGIC: &[u8; 8] = b"QIMATRIX";

/// Two paired views plus a record of where they came from.
#[derive(Debug, Clone)]
pub struct DatasetPair {
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub provenance: String,
}

/// Standard-normal matrix, filled row-major from the given stream.
pub fn standard_normal_matrix(rows: usize, cols: usize, rng: &mut SampleRng) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = rng.sample(StandardNormal);
        }
    }
    m
}

/// Low-rank test matrix `Z * B` with Z (rows x rank) and B (rank x cols)
/// standard normal; Z is drawn first.
pub fn gen_lowrank(rows: usize, cols: usize, rank: usize, seed: u64) -> Result<DMatrix<f64>> {
    if rows == 0 || cols == 0 || rank == 0 {
        return Err(Error::invalid("dimensions must be positive"));
    }
    if rank > rows.min(cols) {
        return Err(Error::invalid(format!(
            "rank {rank} exceeds min(rows, cols) = {}",
            rows.min(cols)
        )));
    }
    let mut rng = rng_from_seed(seed);
    let z = standard_normal_matrix(rows, rank, &mut rng);
    let b = standard_normal_matrix(rank, cols, &mut rng);
    Ok(z * b)
}

/// Paired views from the probabilistic-CCA generative model:
/// `X = Z B1 + 0.5 E1`, `Y = Z B2 + 0.5 E2`, all factors standard normal,
/// drawn in the order Z, B1, B2, E1, E2.
pub fn gen_pcca(n: usize, d1: usize, d2: usize, k: usize, seed: u64) -> Result<DatasetPair> {
    if n < 2 {
        return Err(Error::invalid("need at least 2 samples"));
    }
    if d1 == 0 || d2 == 0 || k == 0 {
        return Err(Error::invalid("dimensions must be positive"));
    }
    if k > d1.min(d2) {
        return Err(Error::invalid(format!(
            "latent dimension {k} exceeds min(d1, d2) = {}",
            d1.min(d2)
        )));
    }
    let mut rng = rng_from_seed(seed);
    let z = standard_normal_matrix(n, k, &mut rng);
    let b1 = standard_normal_matrix(k, d1, &mut rng);
    let b2 = standard_normal_matrix(k, d2, &mut rng);
    let e1 = standard_normal_matrix(n, d1, &mut rng);
    let e2 = standard_normal_matrix(n, d2, &mut rng);
    Ok(DatasetPair {
        x: &z * b1 + e1 * 0.5,
        y: &z * b2 + e2 * 0.5,
        provenance: format!("pcca(n={n}, d1={d1}, d2={d2}, k={k}, seed={seed})"),
    })
}

/// On-disk matrix encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    F64Binary,
}

impl MatrixFormat {
    /// `.csv` means CSV; anything else is treated as the binary format.
    pub fn from_path(path: &Path) -> MatrixFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => MatrixFormat::Csv,
            _ => MatrixFormat::F64Binary,
        }
    }
}

pub fn save_matrix(m: &DMatrix<f64>, path: &Path, format: MatrixFormat) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    match format {
        MatrixFormat::Csv => {
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    if j > 0 {
                        out.write_all(b",")?;
                    }
                    write!(out, "{:.16e}", m[(i, j)])?;
                }
                out.write_all(b"\n")?;
            }
        }
        MatrixFormat::F64Binary => {
            out.write_all(MAGIC)?;
            out.write_all(&(m.nrows() as u64).to_le_bytes())?;
            out.write_all(&(m.ncols() as u64).to_le_bytes())?;
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    out.write_all(&m[(i, j)].to_le_bytes())?;
                }
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn load_matrix(path: &Path, format: MatrixFormat) -> Result<DMatrix<f64>> {
    match format {
        MatrixFormat::Csv => load_csv(path),
        MatrixFormat::F64Binary => load_binary(path),
    }
}

fn load_csv(path: &Path) -> Result<DMatrix<f64>> {
    let reader = BufReader::new(File::open(path)?);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut ncols = 0usize;
    for (line_idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue; // tolerate a trailing blank line
        }
        let row_no = line_idx + 1;
        let mut row = Vec::with_capacity(ncols);
        for (col_idx, token) in line.split(',').enumerate() {
            let value: f64 = token.trim().parse().map_err(|_| Error::Parse {
                row: row_no,
                col: col_idx + 1,
                message: format!("not a number: {:?}", token.trim()),
            })?;
            row.push(value);
        }
        if rows.is_empty() {
            ncols = row.len();
        } else if row.len() != ncols {
            return Err(Error::Parse {
                row: row_no,
                col: row.len().min(ncols) + 1,
                message: format!("expected {ncols} columns, found {}", row.len()),
            });
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Format("CSV file holds no rows".into()));
    }
    let nrows = rows.len();
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn load_binary(path: &Path) -> Result<DMatrix<f64>> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    reader
        .read_exact(&mut magic)
        .map_err(|_| Error::Format("file too short for a header".into()))?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic bytes; not a matrix file".into()));
    }
    let mut word = [0u8; 8];
    reader
        .read_exact(&mut word)
        .map_err(|_| Error::Format("missing row count".into()))?;
    let nrows = u64::from_le_bytes(word) as usize;
    reader
        .read_exact(&mut word)
        .map_err(|_| Error::Format("missing column count".into()))?;
    let ncols = u64::from_le_bytes(word) as usize;
    let count = nrows
        .checked_mul(ncols)
        .ok_or_else(|| Error::Format("dimension overflow".into()))?;
    let mut values = Vec::with_capacity(count);
    let mut buf = [0u8; 8];
    for _ in 0..count {
        reader
            .read_exact(&mut buf)
            .map_err(|_| Error::Format(format!("expected {count} values, file is short")))?;
        values.push(f64::from_le_bytes(buf));
    }
    if reader.read(&mut buf)? != 0 {
        return Err(Error::Format("trailing bytes after matrix data".into()));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| values[i * ncols + j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cca::cca;
    use crate::linalg::{center_columns, svd};

    #[test]
    fn lowrank_has_requested_rank() {
        let m = gen_lowrank(200, 150, 20, 4).unwrap();
        assert_eq!(m.nrows(), 200);
        let f = svd(&m).unwrap();
        assert_eq!(f.rank(), 20);
        // svd() truncates at 1e-10 * sigma_max; check the sharper 1e-8 gap
        assert!(f.sigma[19] > 1e-8 * f.sigma[0]);
    }

    #[test]
    fn rank_one_rows_are_dependent() {
        let m = gen_lowrank(10, 6, 1, 9).unwrap();
        let base = m.row(0);
        for i in 1..10 {
            let scale = m[(i, 0)] / m[(0, 0)];
            for j in 0..6 {
                assert!((m[(i, j)] - scale * base[j]).abs() < 1e-9 * m[(i, j)].abs().max(1.0));
            }
        }
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(gen_lowrank(30, 20, 5, 7).unwrap(), gen_lowrank(30, 20, 5, 7).unwrap());
        let a = gen_pcca(40, 8, 6, 3, 11).unwrap();
        let b = gen_pcca(40, 8, 6, 3, 11).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.y, b.y);
        assert_ne!(a.x, gen_pcca(40, 8, 6, 3, 12).unwrap().x);
    }

    #[test]
    fn pcca_shapes_and_provenance() {
        let pair = gen_pcca(25, 8, 5, 3, 2).unwrap();
        assert_eq!((pair.x.nrows(), pair.x.ncols()), (25, 8));
        assert_eq!((pair.y.nrows(), pair.y.ncols()), (25, 5));
        assert!(pair.provenance.contains("seed=2"));
        assert!(matches!(gen_pcca(25, 4, 5, 5, 2), Err(Error::InvalidInput(_))));
        assert!(matches!(gen_lowrank(5, 5, 9, 2), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn pcca_latents_show_up_in_exact_cca() {
        let pair = gen_pcca(5000, 64, 64, 10, 31).unwrap();
        let (xc, _) = center_columns(&pair.x).unwrap();
        let (yc, _) = center_columns(&pair.y).unwrap();
        let model = cca(&xc, &yc, 11).unwrap();
        for kk in 0..10 {
            assert!(model.correlations[kk] > 0.5, "component {kk} weak");
        }
        // the 11th pair falls off a cliff
        assert!(model.correlations[10] < 0.2);
    }

    #[test]
    fn normal_sampler_sanity() {
        let mut rng = rng_from_seed(13);
        let m = standard_normal_matrix(400, 300, &mut rng);
        let count = (400 * 300) as f64;
        let mean: f64 = m.iter().sum::<f64>() / count;
        assert!(mean.abs() < 5.0 / count.sqrt());
        let var: f64 = m.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (count - 1.0);
        assert!((var - 1.0).abs() < 0.1);
    }

    #[test]
    fn csv_basics() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        std::fs::write(&path, "1,2\n3,4\n").unwrap();
        let m = load_matrix(&path, MatrixFormat::Csv).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt.csv");
        let m = gen_lowrank(20, 10, 5, 3).unwrap();
        save_matrix(&m, &path, MatrixFormat::Csv).unwrap();
        let back = load_matrix(&path, MatrixFormat::Csv).unwrap();
        assert_eq!(m, back); // 17 significant digits round-trip f64 exactly
    }

    #[test]
    fn csv_errors_name_row_and_column() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "1,2\n3,oops\n").unwrap();
        match load_matrix(&path, MatrixFormat::Csv) {
            Err(Error::Parse { row, col, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(col, 2);
            }
            other => panic!("expected a parse error, got {other:?}"),
        }
        std::fs::write(&path, "1,2\n3\n").unwrap();
        match load_matrix(&path, MatrixFormat::Csv) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 2),
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn binary_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.qim");
        let mut rng = rng_from_seed(17);
        let m = standard_normal_matrix(100, 50, &mut rng);
        save_matrix(&m, &path, MatrixFormat::F64Binary).unwrap();
        let back = load_matrix(&path, MatrixFormat::F64Binary).unwrap();
        assert_eq!(m.as_slice(), back.as_slice());
    }

    #[test]
    fn binary_header_is_checked() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.qim");
        std::fs::write(&path, b"NOTRIGHT").unwrap();
        assert!(matches!(
            load_matrix(&path, MatrixFormat::F64Binary),
            Err(Error::Format(_))
        ));
        // truncated body
        let m = DMatrix::from_element(4, 4, 1.5);
        save_matrix(&m, &path, MatrixFormat::F64Binary).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
        assert!(matches!(
            load_matrix(&path, MatrixFormat::F64Binary),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(MatrixFormat::from_path(Path::new("a.csv")), MatrixFormat::Csv);
        assert_eq!(MatrixFormat::from_path(Path::new("a.CSV")), MatrixFormat::Csv);
        assert_eq!(
            MatrixFormat::from_path(Path::new("a.qim")),
            MatrixFormat::F64Binary
        );
        assert_eq!(MatrixFormat::from_path(Path::new("a")), MatrixFormat::F64Binary);
    }
}
