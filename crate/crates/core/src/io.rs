//! CSV and JSON-lines exports. Floats are written with 17 significant digits
//! so every value reads back bit-exactly.

use std::io::{BufRead, Write};
use std::sync::Arc;

use num_complex::Complex64;

use crate::detectors::{DetectionDistribution, EventRecord};
use crate::error::{Error, Result};
use crate::flux::FluxField;
use crate::kspace::{Channel, Epsilon, HyperplaneGrid, Lambda};
use crate::localization::{DensityField, ProjectionField};
use crate::states::PhotonAmplitude;

pub const AMPLITUDE_HEADER: &str = "k1,k2,k3_or_k0,lambda,epsilon,re,im";
pub const PROJECTION_HEADER: &str = "x1,x2,x3_or_t,lambda,epsilon,re,im";
pub const DENSITY_HEADER: &str = "x1,x2,x3_or_t,density";
pub const FLUX_HEADER: &str = "t,x1,x2,x3,epsilon,J0,J1,J2,J3";
pub const DISTRIBUTION_HEADER: &str =
    "pixel_i1,pixel_i2,pixel_i3,center_coord1,center_coord2,center_coord3,probability";

/// Formats a float for CSV output.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn eps_code(e: Epsilon) -> i8 {
    match e {
        Epsilon::Plus => 1,
        Epsilon::Minus => -1,
    }
}

fn join3(v: [f64; 3]) -> String {
    format!("{},{},{}", fmt_f64(v[0]), fmt_f64(v[1]), fmt_f64(v[2]))
}

/// One row per lattice mode and channel, skipping nothing.
pub fn write_amplitude_csv<W: Write>(mut w: W, psi: &PhotonAmplitude) -> Result<()> {
    let grid = psi.grid();
    writeln!(w, "{AMPLITUDE_HEADER}")?;
    for c in Channel::ALL {
        let a = psi.channel(c);
        for (idx, v) in a.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{}",
                join3(grid.k_on_plane(idx)),
                c.lambda.number(),
                eps_code(c.epsilon),
                fmt_f64(v.re),
                fmt_f64(v.im)
            )?;
        }
    }
    Ok(())
}

fn parse_field<T: std::str::FromStr>(s: &str, line: usize, what: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad {what} `{s}`"),
    })
}

fn lattice_index(grid: &HyperplaneGrid, k: [f64; 3], line: usize) -> Result<usize> {
    let g = grid.geometry();
    let mut q = [0usize; 3];
    for a in 0..3 {
        let m = ((k[a] - g.k_center[a]) / g.dk[a]).round() as i64;
        q[a] = m.rem_euclid(g.dims[a] as i64) as usize;
        if (g.k_component(a, q[a]) - k[a]).abs() > 1e-9 * g.dk[a] {
            return Err(Error::Parse {
                line,
                msg: format!("k = {k:?} is not a lattice point of the grid"),
            });
        }
    }
    Ok(g.join(q))
}

/// Reads an amplitude written by [`write_amplitude_csv`] back onto `grid`.
/// Modes absent from the file are zero.
pub fn read_amplitude_csv<R: BufRead>(
    r: R,
    grid: Arc<HyperplaneGrid>,
    reference_axis: [f64; 3],
) -> Result<PhotonAmplitude> {
    let mut channels: [Vec<Complex64>; 4] =
        std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); grid.len()]);
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = n + 1;
        if n == 0 {
            if line.trim() != AMPLITUDE_HEADER {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected header `{AMPLITUDE_HEADER}`"),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected 7 fields, found {}", f.len()),
            });
        }
        let k = [
            parse_field(f[0], lineno, "k1")?,
            parse_field(f[1], lineno, "k2")?,
            parse_field(f[2], lineno, "k3_or_k0")?,
        ];
        let lambda =
            Lambda::try_from(parse_field::<u8>(f[3], lineno, "lambda")?).map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("lambda must be 1 or 2, found {}", f[3]),
            })?;
        let epsilon = match parse_field::<i8>(f[4], lineno, "epsilon")? {
            1 => Epsilon::Plus,
            -1 => Epsilon::Minus,
            e => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("epsilon must be 1 or -1, found {e}"),
                })
            }
        };
        let value = Complex64::new(parse_field(f[5], lineno, "re")?, parse_field(f[6], lineno, "im")?);
        let idx = lattice_index(&grid, k, lineno)?;
        channels[Channel::new(lambda, epsilon).index()][idx] = value;
    }
    PhotonAmplitude::from_channels(grid, reference_axis, channels)
}

pub fn write_projection_csv<W: Write>(mut w: W, field: &ProjectionField) -> Result<()> {
    writeln!(w, "{PROJECTION_HEADER}")?;
    for c in Channel::ALL {
        for (idx, v) in field.channel(c).iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{}",
                join3(field.grid.y_on_plane(idx)),
                c.lambda.number(),
                eps_code(c.epsilon),
                fmt_f64(v.re),
                fmt_f64(v.im)
            )?;
        }
    }
    Ok(())
}

pub fn write_density_csv<W: Write>(mut w: W, density: &DensityField) -> Result<()> {
    writeln!(w, "{DENSITY_HEADER}")?;
    for (idx, v) in density.values.iter().enumerate() {
        writeln!(w, "{},{}", join3(density.grid.y_on_plane(idx)), fmt_f64(*v))?;
    }
    Ok(())
}

/// Real parts of the flux components; for `phi = psi` the imaginary parts
/// vanish.
pub fn write_flux_csv<W: Write>(mut w: W, flux: &FluxField) -> Result<()> {
    writeln!(w, "{FLUX_HEADER}")?;
    for (x, v) in flux.events.iter().zip(&flux.values) {
        for e in Epsilon::BOTH {
            let j = v[e.index()];
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                fmt_f64(x[0]),
                fmt_f64(x[1]),
                fmt_f64(x[2]),
                fmt_f64(x[3]),
                eps_code(e),
                fmt_f64(j[0].re),
                fmt_f64(j[1].re),
                fmt_f64(j[2].re),
                fmt_f64(j[3].re)
            )?;
        }
    }
    Ok(())
}

pub fn write_distribution_csv<W: Write>(mut w: W, dist: &DetectionDistribution) -> Result<()> {
    writeln!(w, "{DISTRIBUTION_HEADER}")?;
    for (p, prob) in dist.probabilities.iter().enumerate() {
        let id = dist.array.pixel_id(p);
        writeln!(
            w,
            "{},{},{},{},{}",
            id[0],
            id[1],
            id[2],
            join3(dist.array.pixel_center(id)),
            fmt_f64(*prob)
        )?;
    }
    Ok(())
}

/// One JSON object per line: `{"pixel":[..],"center":[..],"draw":n}`.
pub fn write_events_jsonl<W: Write>(mut w: W, events: &[EventRecord]) -> Result<()> {
    for e in events {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_events_jsonl<R: BufRead>(r: R) -> Result<Vec<EventRecord>> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: n + 1,
            msg: e.to_string(),
        })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detectors::{detection_probabilities, sample_events, DetectorArraySpec};
    use crate::kspace::GridSpec;
    use crate::localization::spacelike_density;
    use crate::spacetime::Hyperplane;
    use crate::states::{make_gaussian_packet, PacketSpec};

    fn packet() -> PhotonAmplitude {
        let g = Arc::new(
            GridSpec::from_k_spacing(Hyperplane::timelike(0.5), [16, 16, 16], [0.25; 3])
                .with_k_center([0.0, 0.0, 6.0])
                .build()
                .unwrap(),
        );
        make_gaussian_packet(
            &PacketSpec::new([0.1, 0.0, 6.0], [0.2; 3], Lambda::One, Epsilon::Plus),
            &g,
        )
        .unwrap()
    }

    #[test]
    fn amplitude_round_trip_is_bit_exact() {
        let psi = packet();
        let mut buf = Vec::new();
        write_amplitude_csv(&mut buf, &psi).unwrap();
        let back = read_amplitude_csv(buf.as_slice(), psi.grid().clone(), psi.reference_axis()).unwrap();
        for c in Channel::ALL {
            let (a, b) = (psi.channel(c), back.channel(c));
            assert!(a
                .iter()
                .zip(b)
                .all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()));
        }
    }

    #[test]
    fn amplitude_import_rejects_off_lattice_k() {
        let psi = packet();
        let text = format!("{AMPLITUDE_HEADER}\n0.1,0,6,1,1,1,0\n");
        let err = read_amplitude_csv(text.as_bytes(), psi.grid().clone(), [1.0, 0.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn density_rows_follow_grid_order() {
        let g = Arc::new(
            GridSpec::new(Hyperplane::spacelike(0.0), [4, 4, 4], [1.0; 3])
                .build()
                .unwrap(),
        );
        let d = DensityField {
            grid: g.clone(),
            values: (0..64).map(|i| i as f64).collect(),
        };
        let mut buf = Vec::new();
        write_density_csv(&mut buf, &d).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], DENSITY_HEADER);
        assert_eq!(lines.len(), 65);
        let last: Vec<f64> = lines[64].split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(last[3], 63.0);
        assert_eq!(&last[..3], &g.y_on_plane(63));
        let _ = spacelike_density;
    }

    #[test]
    fn events_round_trip() {
        let psi = packet();
        let dist =
            detection_probabilities(&psi, &DetectorArraySpec::covering(psi.grid(), [2, 2, 2]).unwrap())
                .unwrap();
        let events = sample_events(&dist, 50, 3).unwrap();
        let mut buf = Vec::new();
        write_events_jsonl(&mut buf, &events).unwrap();
        let first = std::str::from_utf8(&buf)
            .unwrap()
            .lines()
            .next()
            .unwrap()
            .to_string();
        assert!(
            first.starts_with("{\"pixel\":[")
                && first.contains("\"center\":[")
                && first.contains("\"draw\":0")
        );
        assert_eq!(read_events_jsonl(buf.as_slice()).unwrap(), events);
    }
}
