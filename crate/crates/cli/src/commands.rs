use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::json;
use tunnelvision_core::green::{self, find_quantizable, quantization_sum, quotient_green, ConfigurationRecord};
use tunnelvision_core::groups::{cloud_to_csv, enumerate_group, limit_set_sample, orbit_cloud, regular_polygon, side_pairing_generators};
use tunnelvision_core::measure::harmonic_measure;
use tunnelvision_core::tunnel::{almost_kahler_verdict, axis_profile, dogbone_experiment, GridSpec, SYMMETRY_SEED};
use tunnelvision_core::{Complex64, H3Point, PlanarDomain, QuadratureConfig};

use crate::manifest::OutputDir;
use crate::{CloudKind, Command, GreenMode, Status};

fn load_domain(path: &Path) -> Result<PlanarDomain> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    PlanarDomain::from_json_str(&text).with_context(|| format!("in {}", path.display()))
}

fn point(v: &[f64]) -> Result<H3Point> {
    match v {
        [x, y, z] => Ok(H3Point::new(*x, *y, *z)?),
        _ => bail!("expected three coordinates, got {}", v.len()),
    }
}

/// Runs one command; returns its status and the RNG seed it used, if any.
pub fn dispatch(cmd: &Command, quad: &QuadratureConfig, out: &mut OutputDir) -> Result<(Status, Option<u64>)> {
    match cmd {
        Command::Dogbone { eps } => {
            let (report, profile) = dogbone_experiment(*eps, quad)?;
            out.write_json("report.json", &report)?;
            out.write("axis_profile.csv", &profile.to_csv())?;
            let ok = report.conclusive && report.critical_points.len() >= 2;
            println!(
                "f(0,0,{eps}) = {:.16e}, f(0,0,1) = {:.16e}, {} critical points",
                report.f_at_eps.value,
                report.f_at_one.value,
                report.critical_points.len()
            );
            Ok((if ok { Status::Done } else { Status::Inconclusive }, Some(SYMMETRY_SEED)))
        }
        Command::Measure { domain, point: p } => {
            let d = load_domain(domain)?;
            let p = point(p)?;
            let m = harmonic_measure(&d, &p, quad)?;
            println!("{:.16e} ± {:.16e}", m.value, m.error);
            out.write_json("measure.json", &json!({"point": p, "value": m.value, "error": m.error, "mass": m.mass}))?;
            Ok((Status::Done, None))
        }
        Command::Profile { domain, zmin, zmax, samples } => {
            let d = load_domain(domain)?;
            let profile = axis_profile(&d, *zmin, *zmax, *samples, quad)?;
            out.write("axis_profile.csv", &profile.to_csv())?;
            Ok((Status::Done, None))
        }
        Command::Critical { domain, grid } => {
            let d = load_domain(domain)?;
            let verdict = almost_kahler_verdict(&d, &GridSpec::for_domain(&d, *grid), quad)?;
            out.write_json("verdict.json", &verdict)?;
            println!("{:?}: {} critical point(s)", verdict.status, verdict.reports.len());
            let conclusive = verdict.reports.iter().all(|r| r.conclusive);
            Ok((if conclusive { Status::Done } else { Status::Inconclusive }, Some(SYMMETRY_SEED)))
        }
        Command::Polygon { genus } => {
            let p = regular_polygon(*genus)?;
            out.write_json("polygon.json", &p)?;
            println!("r = {:.16e}", p.euclidean_inradius);
            Ok((Status::Done, None))
        }
        Command::Group { genus, depth, kind } => {
            match kind {
                CloudKind::Orbit => {
                    let en = enumerate_group(&side_pairing_generators(*genus)?, *depth)?;
                    let base = disk_origin();
                    out.write("orbit.csv", &cloud_to_csv(&orbit_cloud(&en.elements, &base)))?;
                }
                CloudKind::Limitset => {
                    let pts = limit_set_sample(*genus, *depth)?;
                    let mut s = String::from("re,im\n");
                    for p in pts {
                        let _ = writeln!(s, "{:.16e},{:.16e}", p.re, p.im);
                    }
                    out.write("limitset.csv", &s)?;
                }
            }
            Ok((Status::Done, None))
        }
        Command::Green { mode } => {
            let value = match mode {
                GreenMode::Flux { pole, radius, nodes } => {
                    let f = green::green_flux(&point(pole)?, *radius, *nodes)?;
                    json!({"mode": "flux", "radius": radius, "value": f.value, "resolution_error": f.resolution_error})
                }
                GreenMode::Eval { pole, q } => {
                    let v = green::h3_green(&point(pole)?, &point(q)?)?;
                    json!({"mode": "eval", "value": v})
                }
                GreenMode::Quotient { genus, shells, pole, q } => {
                    let en = enumerate_group(&side_pairing_generators(*genus)?, *shells)?;
                    let s = quotient_green(&en, &point(pole)?, &point(q)?, *shells)?;
                    json!({"mode": "quotient", "genus": genus, "value": s.partial_sum, "series": s})
                }
            };
            out.write_json("green.json", &value)?;
            Ok((Status::Done, None))
        }
        Command::Quantize { domain, k, ell } => {
            let d = load_domain(domain)?;
            let conf = find_quantizable(&d, *k, *ell, quad)?;
            let q = quantization_sum(&d, &conf, quad)?;
            out.write_json("configuration.json", &ConfigurationRecord::new(&conf, &q))?;
            println!("sum = {:.16e}", q.sum);
            Ok((if q.is_quantizable { Status::Done } else { Status::Inconclusive }, None))
        }
        Command::Replay { .. } => unreachable!("handled before dispatch"),
    }
}

fn disk_origin() -> tunnelvision_core::DiskPoint {
    tunnelvision_core::DiskPoint::new(Complex64::new(0.0, 0.0)).expect("origin lies in the disk")
}
