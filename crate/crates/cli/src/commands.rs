use std::fs::File;
use std::io::{self, Write};
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Value};

use vg_core::lattice::{binomial_bs_price, LatticeConfig, PentanomialLattice};
use vg_core::pide_fd::{p3_curve as p3_points, price_fd, GridConfig, UnitCumulants};
use vg_core::reference::{quadrature_european_price, QuadratureConfig};
use vg_core::vg_model::martingale_correction;
use vg_core::{ExerciseStyle, OptionKind, OptionSpec, VgParams};

use crate::args::{Kind, Method, ModelArgs, P3Args, PriceArgs, Style, TableArgs, Which};
use crate::CliError;

const TABLE_STRIKE: f64 = 40.0;
const TABLE_SPOTS: [f64; 5] = [36.0, 38.0, 40.0, 42.0, 44.0];
const TABLE_BS_SIGMA: f64 = 0.2;

fn params(m: &ModelArgs) -> Result<VgParams, CliError> {
    Ok(VgParams::new(m.theta, m.sigma, m.kappa, m.rate)?)
}

fn spec(a: &PriceArgs) -> Result<OptionSpec, CliError> {
    let kind = match a.kind {
        Kind::Call => OptionKind::Call,
        Kind::Put => OptionKind::Put,
    };
    let style = match a.style {
        Style::Eu => ExerciseStyle::European,
        Style::Am => ExerciseStyle::American,
    };
    Ok(OptionSpec::new(a.s0, a.strike, a.maturity, kind, style)?)
}

fn emit_json(v: &Value) -> Result<(), CliError> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v).map_err(|e| CliError::Usage(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

pub fn price(a: &PriceArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let spec = spec(a)?;
    let p = params(&a.model)?;
    let omega = martingale_correction(&p)?;
    let (price, method, metadata) = match a.method {
        Method::Tree => {
            let lattice = PentanomialLattice::for_option(&spec, &p, &LatticeConfig::new(a.steps))?;
            let price = lattice.price(&spec)?;
            let meta = json!({
                "n_steps": lattice.n_steps,
                "dt": lattice.dt,
                "alpha": lattice.step.alpha,
                "b": lattice.drift,
                "u": lattice.step.u,
                "d": lattice.step.d,
                "probabilities": lattice.probabilities.0,
                "martingale_residual": lattice.martingale_residual(),
            });
            (price, "tree", meta)
        }
        Method::Fd => {
            let grid = match (a.fd_x_min, a.fd_x_max, a.fd_nodes) {
                (Some(lo), Some(hi), Some(n)) => GridConfig::new(lo, hi, n, a.steps, spec.maturity)?,
                _ => GridConfig::centered(&spec, &p, a.steps, a.fd_h, a.fd_width_sd)?,
            };
            let r = price_fd(&spec, &p, &grid)?;
            for w in &r.warnings {
                eprintln!("vgprice: warning: {w}");
            }
            let meta = json!({
                "grid": r.grid,
                "coefficients": r.coefficients,
                "boundary_leak": r.boundary_leak,
                "warnings": r.warnings,
            });
            (r.price, "fd", meta)
        }
        Method::Quad => {
            let q = QuadratureConfig {
                half_width_sd: a.quad_width_sd,
                abs_tol: a.quad_tol,
                split_at_zero: !a.quad_no_split,
            };
            let price = quadrature_european_price(&spec, &p, &q)?;
            (price, "quad", json!(q))
        }
    };
    let mut record = json!({
        "command": "price",
        "method": method,
        "inputs": { "option": spec, "params": p },
        "price": price,
        "omega": omega,
        "metadata": metadata,
    });
    if a.timing {
        record["wall_time_ms"] = json!(start.elapsed().as_secs_f64() * 1e3);
    }
    emit_json(&record)
}

fn csv_writer(output: &Option<std::path::PathBuf>) -> Result<csv::Writer<Box<dyn Write>>, CliError> {
    let sink: Box<dyn Write> = match output {
        Some(path) => Box::new(File::create(path)?),
        None => Box::new(io::stdout()),
    };
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink))
}

fn fmt4(x: f64) -> String {
    format!("{x:.4}")
}

pub fn table(a: &TableArgs) -> Result<(), CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.threads)
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let p = VgParams::reference();
    let cfg = LatticeConfig::new(a.steps);
    let quad = QuadratureConfig::default();

    let (header, mut rows): (Vec<&str>, Vec<(f64, f64, Vec<f64>)>) = match a.which {
        Which::European => {
            let rows = pool.install(|| {
                TABLE_SPOTS
                    .par_iter()
                    .map(|&s0| -> Result<_, CliError> {
                        let call = OptionSpec::european(s0, TABLE_STRIKE, 1.0, OptionKind::Call)?;
                        let put = call.with_kind(OptionKind::Put);
                        let tree = |s: &OptionSpec| PentanomialLattice::for_option(s, &p, &cfg)?.price(s);
                        Ok((
                            s0,
                            1.0,
                            vec![
                                quadrature_european_price(&call, &p, &quad)?,
                                tree(&call)?,
                                quadrature_european_price(&put, &p, &quad)?,
                                tree(&put)?,
                            ],
                        ))
                    })
                    .collect::<Result<Vec<_>, _>>()
            })?;
            (vec!["S0", "quad_call", "tree_call", "quad_put", "tree_put"], rows)
        }
        Which::American => {
            let cases: Vec<(f64, f64)> = TABLE_SPOTS
                .iter()
                .flat_map(|&s0| [(s0, 1.0), (s0, 2.0)])
                .collect();
            let rows = pool.install(|| {
                cases
                    .par_iter()
                    .map(|&(s0, t)| -> Result<_, CliError> {
                        let am = OptionSpec::american(s0, TABLE_STRIKE, t, OptionKind::Put)?;
                        let eu = am.with_style(ExerciseStyle::European);
                        let tree = |s: &OptionSpec| PentanomialLattice::for_option(s, &p, &cfg)?.price(s);
                        Ok((
                            s0,
                            t,
                            vec![
                                binomial_bs_price(&eu, TABLE_BS_SIGMA, p.r, a.steps)?,
                                tree(&eu)?,
                                binomial_bs_price(&am, TABLE_BS_SIGMA, p.r, a.steps)?,
                                tree(&am)?,
                            ],
                        ))
                    })
                    .collect::<Result<Vec<_>, _>>()
            })?;
            (vec!["S0", "T", "bs_eu_put", "vg_eu_put", "bs_am_put", "vg_am_put"], rows)
        }
    };
    rows.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));

    let mut w = csv_writer(&a.output)?;
    w.write_record(&header)?;
    for (s0, t, values) in rows {
        let mut record = vec![format!("{s0}")];
        if a.which == Which::American {
            record.push(format!("{t}"));
        }
        record.extend(values.into_iter().map(fmt4));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn p3_curve(a: &P3Args) -> Result<(), CliError> {
    if !(a.kbar_min > 0.0) || !(a.kbar_max >= a.kbar_min) || !a.kbar_max.is_finite() {
        return Err(CliError::Usage(format!(
            "need 0 < kbar-min <= kbar-max, got [{}, {}]",
            a.kbar_min, a.kbar_max
        )));
    }
    if a.points == 0 {
        return Err(CliError::Usage("--points must be >= 1".into()));
    }
    let c2 = match a.c2 {
        Some(c2) => c2,
        None => UnitCumulants::from_params(&VgParams::reference())?.ct2,
    };
    let grid: Vec<f64> = if a.points == 1 {
        vec![a.kbar_min]
    } else {
        let step = (a.kbar_max - a.kbar_min) / (a.points - 1) as f64;
        (0..a.points).map(|i| a.kbar_min + step * i as f64).collect()
    };
    let points = p3_points(&grid, c2, a.dt)?;
    let mut w = csv_writer(&None)?;
    w.write_record(["kbar", "p3_mm", "p3_pde"])?;
    for pt in points {
        w.write_record([pt.kbar.to_string(), pt.p3_mm.to_string(), pt.p3_pde.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
