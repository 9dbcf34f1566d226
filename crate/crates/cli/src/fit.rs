use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use serde_json::{json, Value};

use vg_core::estimation::{density_overlay_table, fit_normal, fit_series, ReturnSeries, VgFit};

use crate::args::FitArgs;
use crate::CliError;

/// Reads one numeric column, addressed by header name or zero-based index.
fn read_column(path: &Path, column: &str) -> Result<Vec<f64>, CliError> {
    let file = File::open(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader.headers()?.clone();
    let idx = headers
        .iter()
        .position(|h| h == column)
        .or_else(|| column.parse::<usize>().ok().filter(|&i| i < headers.len()))
        .ok_or_else(|| {
            CliError::Usage(format!(
                "column `{column}` not found; available: {}",
                headers.iter().collect::<Vec<_>>().join(", ")
            ))
        })?;
    let mut out = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let field = record.get(idx).unwrap_or("");
        let value = field.parse::<f64>().map_err(|_| {
            // header is line 1
            CliError::Usage(format!("line {}: `{field}` is not a number", row + 2))
        })?;
        out.push(value);
    }
    Ok(out)
}

fn annualized(fit: Option<&VgFit>, normal: (f64, f64), periods: f64) -> Value {
    // X over `periods` observation periods: theta, drift and the mean scale
    // with time, sigma with its square root, kappa inversely
    let root = periods.sqrt();
    json!({
        "periods_per_year": periods,
        "vg": fit.map(|f| json!({
            "theta": f.theta * periods,
            "sigma": f.sigma * root,
            "kappa": f.kappa / periods,
            "drift": f.drift * periods,
        })),
        "normal": { "mu": normal.0 * periods, "sigma": normal.1 * root },
    })
}

pub fn fit(a: &FitArgs) -> Result<(), CliError> {
    if let Some(f) = a.annualize {
        if !(f > 0.0 && f.is_finite()) {
            return Err(CliError::Usage(format!("--annualize must be > 0, got {f}")));
        }
    }
    let raw = read_column(&a.input, &a.column)?;
    let series = if a.prices {
        ReturnSeries::from_prices(&raw, a.period_label.clone())?
    } else {
        ReturnSeries::new(raw, a.period_label.clone())?
    };
    let (moments, vg) = fit_series(&series)?;
    let normal = fit_normal(&moments)?;
    let (vg, fallback) = match vg {
        Ok(f) => (Some(f), Value::Null),
        Err(e) => {
            eprintln!("vgprice: {e}; reporting the normal fit only");
            (None, json!({ "model": "normal", "reason": e.to_string() }))
        }
    };
    let mut record = json!({
        "command": "fit",
        "input": a.input.display().to_string(),
        "column": a.column,
        "series": if a.prices { "prices" } else { "returns" },
        "period_label": series.period_label,
        "n_observations": series.len(),
        "moments": moments,
        "vg": vg,
        "normal": { "mu": normal.0, "sigma": normal.1 },
        "fallback": fallback,
        "notes": [
            "parameters are per observation period",
            "the fitted VG law is drift + X_1; drift is a free location parameter",
        ],
    });
    if let Some(f) = a.annualize {
        record["annualized"] = annualized(vg.as_ref(), normal, f);
    }

    if let Some(path) = &a.density_out {
        let overlay = density_overlay_table(&series, a.bins)?;
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(File::create(path)?);
        w.write_record(["bin_center", "hist_density", "vg_density", "normal_density"])?;
        for row in &overlay.rows {
            w.write_record([
                row.bin_center.to_string(),
                row.hist_density.to_string(),
                row.vg_density.map(|v| v.to_string()).unwrap_or_default(),
                row.normal_density.to_string(),
            ])?;
        }
        w.flush()?;
        record["density_table"] = json!({ "path": path.display().to_string(), "bins": a.bins });
    }

    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, &record).map_err(|e| CliError::Usage(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}
