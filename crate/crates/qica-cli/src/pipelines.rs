//! Command implementations: load, compute, and write one JSON record each.

use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use nalgebra::{DMatrix, DVector};
use serde_json::json;

use qica_core::{
    apply_centering, canonical_variates, center_columns, gen_lowrank, gen_pcca, load_matrix,
    materialize, mean_auc, qisvd_from_sketch, recovery_score, sum_correlations, FeatureMap,
    MatrixFormat, MatrixStore, QiCcaModel, QiccaParams, QisvdOptions, SavedQiccaModel,
};

use crate::output::{resolve_out, save_matrix_atomic, write_atomic, write_csv, write_record, Record};
use crate::{CcaArgs, EvalCommand, ExpandArgs, GenCommand, QiccaArgs, QisvdArgs, SvdArgs};

fn load(path: &Path) -> Result<DMatrix<f64>> {
    load_matrix(path, MatrixFormat::from_path(path))
        .with_context(|| format!("loading {}", path.display()))
}

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn ceil_scale(factor: f64, n: usize) -> usize {
    ((factor * n as f64).ceil() as usize).max(1)
}

pub(crate) fn gen(which: GenCommand) -> Result<()> {
    match which {
        GenCommand::Lowrank {
            rows,
            cols,
            rank,
            seed,
            out,
            report,
        } => {
            let t0 = Instant::now();
            let m = gen_lowrank(rows, cols, rank, seed)?;
            let gen_s = secs(t0);
            save_matrix_atomic(&m, &out)?;
            let report = resolve_out(report, "gen-lowrank.json");
            write_record(
                &report,
                &Record::new(
                    "gen-lowrank",
                    json!({
                        "rows": rows, "cols": cols, "rank": rank, "seed": seed,
                        "out": path_str(&out),
                    }),
                    json!({"rows": m.nrows(), "cols": m.ncols()}),
                    json!({"gen_s": gen_s}),
                ),
            )?;
            println!(
                "gen lowrank: {rows}x{cols} rank {rank} seed {seed} -> {}",
                out.display()
            );
        }
        GenCommand::Pcca {
            n,
            d1,
            d2,
            k,
            seed,
            out_x,
            out_y,
            report,
        } => {
            let t0 = Instant::now();
            let pair = gen_pcca(n, d1, d2, k, seed)?;
            let gen_s = secs(t0);
            save_matrix_atomic(&pair.x, &out_x)?;
            save_matrix_atomic(&pair.y, &out_y)?;
            let report = resolve_out(report, "gen-pcca.json");
            write_record(
                &report,
                &Record::new(
                    "gen-pcca",
                    json!({
                        "n": n, "d1": d1, "d2": d2, "k": k, "seed": seed,
                        "out_x": path_str(&out_x), "out_y": path_str(&out_y),
                    }),
                    json!({"provenance": pair.provenance}),
                    json!({"gen_s": gen_s}),
                ),
            )?;
            println!(
                "gen pcca: n={n} d1={d1} d2={d2} k={k} seed {seed} -> {}, {}",
                out_x.display(),
                out_y.display()
            );
        }
    }
    Ok(())
}

pub(crate) fn svd(args: SvdArgs) -> Result<()> {
    let t0 = Instant::now();
    let mut m = load(&args.input)?;
    let load_s = secs(t0);
    if args.centering {
        m = center_columns(&m)?.0;
    }
    let t = Instant::now();
    let f = qica_core::svd(&m)?;
    let svd_s = secs(t);
    let k_actual = args.k.min(f.rank());
    let v = f.v.columns(0, k_actual).into_owned();
    let recovery = recovery_score(&m, &v)?;
    if let Some(path) = &args.save_v {
        save_matrix_atomic(&v, path)?;
    }
    let sigma: Vec<f64> = (0..k_actual).map(|i| f.sigma[i]).collect();
    let out = resolve_out(args.out, "svd-result.json");
    write_record(
        &out,
        &Record::new(
            "svd",
            json!({
                "input": path_str(&args.input), "k": args.k,
                "centering": args.centering,
                "save_v": args.save_v.as_deref().map(path_str),
            }),
            json!({
                "k_actual": k_actual,
                "rank": f.rank(),
                "recovery": recovery,
                "sigma": sigma,
            }),
            json!({"load_s": load_s, "svd_s": svd_s}),
        ),
    )?;
    println!("svd: k_actual={k_actual} recovery={recovery:.6} ({svd_s:.3} s) -> {}", out.display());
    Ok(())
}

/// Eq.-style recovery that tolerates a non-orthonormal V, used for the
/// ablation path: 1 - ||X - X V V^T||_F^2 / ||X||_F^2.
fn residual_recovery(x: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    let xv = x * v;
    let resid = x - xv * v.transpose();
    let num: f64 = resid.iter().map(|a| a * a).sum();
    let den: f64 = x.iter().map(|a| a * a).sum();
    1.0 - num / den
}

pub(crate) fn qisvd(args: QisvdArgs) -> Result<()> {
    let t0 = Instant::now();
    let mut m = load(&args.input)?;
    let load_s = secs(t0);
    if args.centering {
        m = center_columns(&m)?.0;
    }
    let p = args.p.unwrap_or_else(|| ceil_scale(1.5, args.k));
    let orthonormalize = !args.no_orthonormalize;

    let t = Instant::now();
    let store = MatrixStore::new(m)?;
    let store_s = secs(t);
    let mut rng = qica_core::rng_from_seed(args.seed);
    let t = Instant::now();
    let sketch = store.matrix_sampling(p, &mut rng)?;
    let sketch_s = secs(t);
    let t = Instant::now();
    let desc = qisvd_from_sketch(&store, &sketch, args.k, &QisvdOptions { orthonormalize })?;
    let solve_s = secs(t);

    let t = Instant::now();
    let v = materialize(&desc, &store)?;
    let recovery = if orthonormalize {
        recovery_score(store.data(), &v)?
    } else {
        residual_recovery(store.data(), &v)
    };
    let metrics_s = secs(t);
    if let Some(path) = &args.save_v {
        save_matrix_atomic(&v, path)?;
    }
    let out = resolve_out(args.out, "qisvd-result.json");
    write_record(
        &out,
        &Record::new(
            "qisvd",
            json!({
                "input": path_str(&args.input), "k": args.k, "p": p,
                "seed": args.seed, "centering": args.centering,
                "orthonormalize": orthonormalize,
                "save_v": args.save_v.as_deref().map(path_str),
            }),
            json!({"k_actual": desc.k_actual(), "recovery": recovery}),
            json!({
                "load_s": load_s, "store_s": store_s,
                "sketch_s": sketch_s, "solve_s": solve_s,
                "qisvd_total_s": sketch_s + solve_s,
                "metrics_s": metrics_s,
            }),
        ),
    )?;
    println!(
        "qisvd: k_actual={} p={p} recovery={recovery:.6} (sketch {sketch_s:.3} s, total {:.3} s) -> {}",
        desc.k_actual(),
        sketch_s + solve_s,
        out.display()
    );
    Ok(())
}

pub(crate) fn cca(args: CcaArgs) -> Result<()> {
    if args.eval_x.is_some() != args.eval_y.is_some() {
        bail!("--eval-x and --eval-y must be given together");
    }
    let t0 = Instant::now();
    let x = load(&args.x)?;
    let y = load(&args.y)?;
    let load_s = secs(t0);
    let centering = !args.no_centering;
    let (xc, mean_x) = prepare(x, centering)?;
    let (yc, mean_y) = prepare(y, centering)?;

    let t = Instant::now();
    let model = qica_core::cca(&xc, &yc, args.k)?;
    let cca_s = secs(t);

    let t = Instant::now();
    let cx = canonical_variates(&xc, &model.w_x)?;
    let cy = canonical_variates(&yc, &model.w_y)?;
    let train = sum_correlations(&cx, &cy, model.k_actual)?;
    let mut results = json!({
        "k_actual": model.k_actual,
        "correlations": model.correlations,
        "sum_correlations_train": train.sum,
    });
    if let (Some(ex), Some(ey)) = (&args.eval_x, &args.eval_y) {
        let tx = centered_heldout(&load(ex)?, mean_x.as_ref())?;
        let ty = centered_heldout(&load(ey)?, mean_y.as_ref())?;
        let tcx = canonical_variates(&tx, &model.w_x)?;
        let tcy = canonical_variates(&ty, &model.w_y)?;
        let test = sum_correlations(&tcx, &tcy, model.k_actual)?;
        results["sum_correlations_test"] = test.sum.into();
        results["mean_auc_test"] = mean_auc(&tcx, &tcy)?.into();
    }
    let eval_s = secs(t);

    let out = resolve_out(args.out, "cca-result.json");
    write_record(
        &out,
        &Record::new(
            "cca",
            json!({
                "x": path_str(&args.x), "y": path_str(&args.y), "k": args.k,
                "centering": centering,
                "eval_x": args.eval_x.as_deref().map(path_str),
                "eval_y": args.eval_y.as_deref().map(path_str),
            }),
            results,
            json!({"load_s": load_s, "cca_s": cca_s, "eval_s": eval_s}),
        ),
    )?;
    println!(
        "cca: k_actual={} sum_corr_train={:.4} ({cca_s:.3} s) -> {}",
        model.k_actual,
        train.sum,
        out.display()
    );
    Ok(())
}

fn prepare(m: DMatrix<f64>, centering: bool) -> Result<(DMatrix<f64>, Option<DVector<f64>>)> {
    if centering {
        let (c, means) = center_columns(&m)?;
        Ok((c, Some(means)))
    } else {
        Ok((m, None))
    }
}

fn centered_heldout(m: &DMatrix<f64>, means: Option<&DVector<f64>>) -> Result<DMatrix<f64>> {
    match means {
        Some(mu) => Ok(apply_centering(m, mu)?),
        None => Ok(m.clone()),
    }
}

pub(crate) fn qicca(args: QiccaArgs) -> Result<()> {
    if args.eval_x.is_some() != args.eval_y.is_some() {
        bail!("--eval-x and --eval-y must be given together");
    }
    let t0 = Instant::now();
    let x_raw = load(&args.x)?;
    let y_raw = load(&args.y)?;
    let load_s = secs(t0);

    let cap = args.cap.unwrap_or(qica_core::features::DEFAULT_COLUMN_CAP);
    let t = Instant::now();
    let (map_x, map_y, x_exp, y_exp) = if args.second_order {
        let map_x = FeatureMap::with_options(x_raw.ncols(), args.include_squares, cap)?;
        let map_y = FeatureMap::with_options(y_raw.ncols(), args.include_squares, cap)?;
        let xe = map_x.expand(&x_raw)?;
        let ye = map_y.expand(&y_raw)?;
        (Some(map_x), Some(map_y), xe, ye)
    } else {
        (None, None, x_raw, y_raw)
    };
    let expand_s = secs(t);

    let centering = !args.no_centering;
    let (xc, mean_x) = prepare(x_exp, centering)?;
    let (yc, mean_y) = prepare(y_exp, centering)?;
    let (d1, d2) = (xc.ncols(), yc.ncols());

    // Shared default L = ceil(0.5 * max(D1, D2)); for expanded pipelines it
    // is capped at 256 so the small cross-SVD stays desk-sized.
    let default_l = if args.second_order {
        ceil_scale(0.5, d1.max(d2)).min(256)
    } else {
        ceil_scale(0.5, d1.max(d2))
    };
    let l1 = args.l1.or(args.l).unwrap_or(default_l);
    let l2 = args.l2.or(args.l).unwrap_or(default_l);
    let p1 = args.p1.or(args.p).unwrap_or_else(|| ceil_scale(1.5, l1));
    let p2 = args.p2.or(args.p).unwrap_or_else(|| ceil_scale(1.5, l2));
    let params = QiccaParams {
        k: args.k,
        l1,
        l2,
        p1,
        p2,
        orthonormalize: !args.no_orthonormalize,
    };

    let t = Instant::now();
    let store_xt = MatrixStore::new(xc.transpose())?;
    let store_yt = MatrixStore::new(yc.transpose())?;
    let store_s = secs(t);

    let t = Instant::now();
    let model = qica_core::qicca(&store_xt, &store_yt, &params, args.seed)?;
    let qicca_s = secs(t);

    let t = Instant::now();
    let cx = qica_core::variates_from_description(&xc, &model.desc_x)?;
    let cy = qica_core::variates_from_description(&yc, &model.desc_y)?;
    let train = sum_correlations(&cx, &cy, model.k_actual)?;
    let mut results = json!({
        "k_actual": model.k_actual,
        "correlations": model.correlations,
        "raw_correlations": model.raw_correlations,
        "sum_correlations_train": train.sum,
    });
    if let (Some(ex), Some(ey)) = (&args.eval_x, &args.eval_y) {
        let (tcx, tcy) = heldout_variates(
            &load(ex)?,
            &load(ey)?,
            map_x.as_ref(),
            map_y.as_ref(),
            mean_x.as_ref(),
            mean_y.as_ref(),
            &model,
        )?;
        let test = sum_correlations(&tcx, &tcy, model.k_actual)?;
        results["sum_correlations_test"] = test.sum.into();
        results["mean_auc_test"] = mean_auc(&tcx, &tcy)?.into();
    }
    let eval_s = secs(t);

    if let Some(path) = &args.model {
        let saved = SavedQiccaModel::from_model(
            &model,
            &params,
            args.seed,
            mean_x.as_ref().map(|m| m.iter().copied().collect()),
            mean_y.as_ref().map(|m| m.iter().copied().collect()),
        );
        let mut text = saved.to_json();
        text.push('\n');
        write_atomic(path, text.as_bytes())?;
    }

    let out = resolve_out(args.out, "qicca-result.json");
    write_record(
        &out,
        &Record::new(
            "qicca",
            json!({
                "x": path_str(&args.x), "y": path_str(&args.y),
                "k": args.k, "l1": l1, "l2": l2, "p1": p1, "p2": p2,
                "seed": args.seed, "centering": centering,
                "orthonormalize": params.orthonormalize,
                "second_order": args.second_order,
                "include_squares": args.include_squares,
                "d1": d1, "d2": d2,
                "model": args.model.as_deref().map(path_str),
                "eval_x": args.eval_x.as_deref().map(path_str),
                "eval_y": args.eval_y.as_deref().map(path_str),
            }),
            results,
            json!({
                "load_s": load_s, "expand_s": expand_s, "store_s": store_s,
                "qicca_s": qicca_s, "eval_s": eval_s,
            }),
        ),
    )?;
    println!(
        "qicca: k_actual={} l=({l1},{l2}) p=({p1},{p2}) sum_corr_train={:.4} ({qicca_s:.3} s) -> {}",
        model.k_actual,
        train.sum,
        out.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn heldout_variates(
    tx_raw: &DMatrix<f64>,
    ty_raw: &DMatrix<f64>,
    map_x: Option<&FeatureMap>,
    map_y: Option<&FeatureMap>,
    mean_x: Option<&DVector<f64>>,
    mean_y: Option<&DVector<f64>>,
    model: &QiCcaModel,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let tx = match map_x {
        Some(map) => map.expand(tx_raw)?,
        None => tx_raw.clone(),
    };
    let ty = match map_y {
        Some(map) => map.expand(ty_raw)?,
        None => ty_raw.clone(),
    };
    let tx = centered_heldout(&tx, mean_x)?;
    let ty = centered_heldout(&ty, mean_y)?;
    let tcx = qica_core::variates_from_description(&tx, &model.desc_x)?;
    let tcy = qica_core::variates_from_description(&ty, &model.desc_y)?;
    Ok((tcx, tcy))
}

pub(crate) fn expand(args: ExpandArgs) -> Result<()> {
    let t0 = Instant::now();
    let m = load(&args.input)?;
    let load_s = secs(t0);
    let cap = args.cap.unwrap_or(qica_core::features::DEFAULT_COLUMN_CAP);
    let map = FeatureMap::with_options(m.ncols(), args.include_squares, cap)?;
    let t = Instant::now();
    let expanded = map.expand(&m)?;
    let expand_s = secs(t);
    save_matrix_atomic(&expanded, &args.out)?;
    let report = resolve_out(args.report, "expand.json");
    write_record(
        &report,
        &Record::new(
            "expand",
            json!({
                "input": path_str(&args.input), "out": path_str(&args.out),
                "include_squares": args.include_squares, "cap": cap,
            }),
            json!({
                "input_dim": map.input_dim(),
                "output_dim": map.output_dim(),
                "rows": expanded.nrows(),
            }),
            json!({"load_s": load_s, "expand_s": expand_s}),
        ),
    )?;
    println!(
        "expand: {} -> {} columns -> {}",
        map.input_dim(),
        map.output_dim(),
        args.out.display()
    );
    Ok(())
}

pub(crate) fn eval(which: EvalCommand) -> Result<()> {
    match which {
        EvalCommand::Recovery { x, v, out } => {
            let xm = load(&x)?;
            let vm = load(&v)?;
            let t = Instant::now();
            let value = recovery_score(&xm, &vm)?;
            let report = qica_core::EvalReport {
                metric_name: "recovery".into(),
                value,
                k: vm.ncols(),
                n_samples: xm.nrows(),
                parameters: json!({"x": path_str(&x), "v": path_str(&v)}),
            };
            let out = resolve_out(out, "eval-recovery.json");
            write_record(
                &out,
                &Record::new(
                    "eval-recovery",
                    report.parameters.clone(),
                    serde_json::to_value(&report)?,
                    json!({"eval_s": secs(t)}),
                ),
            )?;
            println!("eval recovery: {value:.6} -> {}", out.display());
        }
        EvalCommand::Corr { cx, cy, k, out, csv } => {
            let a = load(&cx)?;
            let b = load(&cy)?;
            let k = k.unwrap_or(a.ncols());
            let t = Instant::now();
            let sum = sum_correlations(&a, &b, k)?;
            let eval_s = secs(t);
            if let Some(csv_path) = &csv {
                let rows: Vec<String> = sum
                    .per_component
                    .iter()
                    .enumerate()
                    .map(|(i, c)| format!("{},{}", i + 1, c))
                    .collect();
                write_csv(csv_path, "component,correlation", &rows)?;
            }
            let out = resolve_out(out, "eval-corr.json");
            write_record(
                &out,
                &Record::new(
                    "eval-corr",
                    json!({
                        "cx": path_str(&cx), "cy": path_str(&cy), "k": k,
                        "csv": csv.as_deref().map(path_str),
                    }),
                    serde_json::to_value(&sum)?,
                    json!({"eval_s": eval_s}),
                ),
            )?;
            println!("eval corr: sum={:.4} over k={k} -> {}", sum.sum, out.display());
        }
        EvalCommand::Auc { cx, cy, out } => {
            let a = load(&cx)?;
            let b = load(&cy)?;
            let t = Instant::now();
            let value = mean_auc(&a, &b)?;
            let report = qica_core::EvalReport {
                metric_name: "mean_auc".into(),
                value,
                k: a.ncols(),
                n_samples: a.nrows(),
                parameters: json!({"cx": path_str(&cx), "cy": path_str(&cy)}),
            };
            let out = resolve_out(out, "eval-auc.json");
            write_record(
                &out,
                &Record::new(
                    "eval-auc",
                    report.parameters.clone(),
                    serde_json::to_value(&report)?,
                    json!({"eval_s": secs(t)}),
                ),
            )?;
            println!("eval auc: {value:.6} -> {}", out.display());
        }
    }
    Ok(())
}
