//! Timing sweeps over doubling dimensions.
//!
//! Each sweep generates a fresh matrix (or view pair) per dimension with a
//! per-dimension seed of `seed + index`, times the sketched algorithm (and
//! the exact one when `--with-exact` is set) averaged over `repeats` runs,
//! and writes one CSV row per dimension, smallest first. Sketch time is
//! reported separately from the total.

use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde_json::json;

use qica_core::{
    center_columns, gen_lowrank, gen_pcca, qisvd_from_sketch, rng_from_seed, MatrixStore,
    QiccaParams, QisvdOptions,
};

use crate::output::{resolve_out, write_csv, write_record, Record};
use crate::SweepCommand;

/// Parses "min..max" into a doubling sequence: min, 2*min, ..., <= max.
fn parse_dims(spec: &str) -> Result<Vec<usize>> {
    let (lo, hi) = spec
        .split_once("..")
        .with_context(|| format!("--dims wants min..max, got {spec:?}"))?;
    let lo: usize = lo.trim().parse().context("--dims minimum")?;
    let hi: usize = hi.trim().parse().context("--dims maximum")?;
    if lo == 0 || hi < lo {
        bail!("--dims needs 1 <= min <= max, got {spec:?}");
    }
    let mut dims = Vec::new();
    let mut d = lo;
    while d <= hi {
        dims.push(d);
        match d.checked_mul(2) {
            Some(next) => d = next,
            None => break,
        }
    }
    Ok(dims)
}

pub(crate) fn run(which: SweepCommand) -> Result<()> {
    match which {
        SweepCommand::Qisvd {
            dims,
            rows,
            rank,
            k,
            p,
            repeats,
            seed,
            with_exact,
            out,
            report,
        } => {
            if repeats == 0 {
                bail!("--repeats must be at least 1");
            }
            let dims = parse_dims(&dims)?;
            let p = p.unwrap_or(((1.5 * k as f64).ceil() as usize).max(1));
            let out = resolve_out(out, "sweep-qisvd.csv");
            let mut rows_csv = Vec::with_capacity(dims.len());
            for (idx, &dim) in dims.iter().enumerate() {
                let r = rank.min(rows).min(dim);
                let x = gen_lowrank(rows, dim, r, seed + idx as u64)?;
                let t = Instant::now();
                let store = MatrixStore::new(x.clone())?;
                let store_s = t.elapsed().as_secs_f64();
                let mut rng = rng_from_seed(seed + idx as u64);
                let mut sketch_s = 0.0;
                let mut solve_s = 0.0;
                let opts = QisvdOptions::default();
                for _ in 0..repeats {
                    let t = Instant::now();
                    let sketch = store.matrix_sampling(p, &mut rng)?;
                    sketch_s += t.elapsed().as_secs_f64();
                    let t = Instant::now();
                    let _ = qisvd_from_sketch(&store, &sketch, k.min(p), &opts)?;
                    solve_s += t.elapsed().as_secs_f64();
                }
                sketch_s /= repeats as f64;
                solve_s /= repeats as f64;
                let exact_s = if with_exact {
                    let mut total = 0.0;
                    for _ in 0..repeats {
                        let t = Instant::now();
                        let _ = qica_core::svd(&x)?;
                        total += t.elapsed().as_secs_f64();
                    }
                    Some(total / repeats as f64)
                } else {
                    None
                };
                let exact_cell = exact_s.map(|s| s.to_string()).unwrap_or_default();
                rows_csv.push(format!(
                    "{dim},{store_s},{sketch_s},{solve_s},{},{exact_cell}",
                    sketch_s + solve_s
                ));
                println!(
                    "sweep qisvd dim={dim}: sketch {sketch_s:.4} s, total {:.4} s{}",
                    sketch_s + solve_s,
                    exact_s
                        .map(|s| format!(", exact {s:.4} s"))
                        .unwrap_or_default()
                );
            }
            write_csv(
                &out,
                "dim,store_s,sketch_s,solve_s,qisvd_total_s,exact_svd_s",
                &rows_csv,
            )?;
            let report = resolve_out(report, "sweep-qisvd.json");
            write_record(
                &report,
                &Record::new(
                    "sweep-qisvd",
                    json!({
                        "dims": dims, "rows": rows, "rank": rank, "k": k, "p": p,
                        "repeats": repeats, "seed": seed, "with_exact": with_exact,
                        "out": out.display().to_string(),
                    }),
                    json!({"rows_written": rows_csv.len()}),
                    json!({}),
                ),
            )?;
            println!("sweep qisvd: {} rows -> {}", rows_csv.len(), out.display());
        }
        SweepCommand::Qicca {
            dims,
            n,
            latent,
            k,
            repeats,
            seed,
            with_exact,
            out,
            report,
        } => {
            if repeats == 0 {
                bail!("--repeats must be at least 1");
            }
            let dims = parse_dims(&dims)?;
            let out = resolve_out(out, "sweep-qicca.csv");
            let mut rows_csv = Vec::with_capacity(dims.len());
            for (idx, &dim) in dims.iter().enumerate() {
                let pair = gen_pcca(n, dim, dim, latent.min(dim), seed + idx as u64)?;
                let (xc, _) = center_columns(&pair.x)?;
                let (yc, _) = center_columns(&pair.y)?;
                let mut params = QiccaParams::with_defaults(k, dim, dim);
                params.k = k.min(params.l1.min(params.l2));
                let t = Instant::now();
                let store_xt = MatrixStore::new(xc.transpose())?;
                let store_yt = MatrixStore::new(yc.transpose())?;
                let store_s = t.elapsed().as_secs_f64();
                let mut qicca_s = 0.0;
                for rep in 0..repeats {
                    let t = Instant::now();
                    let _ = qica_core::qicca(
                        &store_xt,
                        &store_yt,
                        &params,
                        seed + idx as u64 + 1000 * rep as u64,
                    )?;
                    qicca_s += t.elapsed().as_secs_f64();
                }
                qicca_s /= repeats as f64;
                let exact_s = if with_exact {
                    let mut total = 0.0;
                    for _ in 0..repeats {
                        let t = Instant::now();
                        let _ = qica_core::cca(&xc, &yc, params.k)?;
                        total += t.elapsed().as_secs_f64();
                    }
                    Some(total / repeats as f64)
                } else {
                    None
                };
                let exact_cell = exact_s.map(|s| s.to_string()).unwrap_or_default();
                rows_csv.push(format!("{dim},{store_s},{qicca_s},{exact_cell}"));
                println!(
                    "sweep qicca dim={dim}: qicca {qicca_s:.4} s{}",
                    exact_s
                        .map(|s| format!(", exact {s:.4} s"))
                        .unwrap_or_default()
                );
            }
            write_csv(&out, "dim,store_s,qicca_s,cca_s", &rows_csv)?;
            let report = resolve_out(report, "sweep-qicca.json");
            write_record(
                &report,
                &Record::new(
                    "sweep-qicca",
                    json!({
                        "dims": dims, "n": n, "latent": latent, "k": k,
                        "repeats": repeats, "seed": seed, "with_exact": with_exact,
                        "out": out.display().to_string(),
                    }),
                    json!({"rows_written": rows_csv.len()}),
                    json!({}),
                ),
            )?;
            println!("sweep qicca: {} rows -> {}", rows_csv.len(), out.display());
        }
    }
    Ok(())
}
