//! Trajectory files: one `#`-prefixed JSON header line, then CSV with one row per node.

use super::lattice::LatticeSpec;
use super::trajectory::{InitJson, Trajectory};
use crate::error::{Error, Result};
use crate::exterior::ChartSpec;
use crate::models::ModelJson;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

pub const TRAJECTORY_FORMAT_MAJOR: u32 = 1;
const MAGIC: &str = "# pataplectic-trajectory ";

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryMeta {
    pub format_version: String,
    pub model: ModelJson,
    pub lattice: LatticeSpec,
    /// Initial data, when known, so the run can be repeated on refined lattices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<InitJson>,
}

/// Column names: coordinates, fields, first momenta, `eps`, then degree-2 momenta.
pub fn columns(chart: &ChartSpec) -> Vec<String> {
    let (n, k) = (chart.n(), chart.k());
    let mut cols: Vec<String> = (0..n).map(|a| chart.name(chart.x(a))).collect();
    cols.extend((0..k).map(|i| chart.name(chart.y(i))));
    for i in 0..k {
        for a in 0..n {
            cols.push(chart.name(chart.p1(a, i).expect("Weyl momenta")));
        }
    }
    cols.push(chart.name(chart.eps()));
    for (mi, m) in chart.momenta().iter().enumerate() {
        if m.degree() == 2 {
            cols.push(chart.name(chart.momentum_sym(mi)));
        }
    }
    cols
}

pub fn write_trajectory<W: Write>(
    out: W,
    traj: &Trajectory,
    chart: &ChartSpec,
    model: &ModelJson,
    init: Option<&InitJson>,
) -> Result<()> {
    let io = |e: std::io::Error| Error::Input(format!("write failed: {e}"));
    let mut out = std::io::BufWriter::new(out);
    let meta = TrajectoryMeta {
        format_version: format!("{TRAJECTORY_FORMAT_MAJOR}.0"),
        model: model.clone(),
        lattice: traj.lattice.clone(),
        init: init.cloned(),
    };
    let header = serde_json::to_string(&meta).map_err(|e| Error::Input(e.to_string()))?;
    writeln!(out, "{MAGIC}{header}").map_err(io)?;
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Input(format!("write failed: {e}"));
    w.write_record(columns(chart)).map_err(csv_err)?;
    let l = &traj.lattice;
    let (n, k) = (traj.n, traj.k);
    for node in 0..l.n_nodes() {
        let (t, s) = (node / l.ns(), node % l.ns());
        let mut row: Vec<String> = l.coords(t, s).iter().map(|v| v.to_string()).collect();
        row.extend(traj.y_at(node).iter().map(|v| v.to_string()));
        row.extend(
            traj.p[node * n * k..(node + 1) * n * k]
                .iter()
                .map(|v| v.to_string()),
        );
        row.push(traj.eps[node].to_string());
        row.extend(
            traj.p2[node * traj.n2..(node + 1) * traj.n2]
                .iter()
                .map(|v| v.to_string()),
        );
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(io)?;
    Ok(())
}

/// Parse a trajectory file, checking the format version and the column layout.
pub fn read_trajectory<R: BufRead>(
    mut input: R,
    chart_of: impl Fn(&ModelJson) -> Result<ChartSpec>,
) -> Result<(TrajectoryMeta, Trajectory)> {
    let mut first = String::new();
    input
        .read_line(&mut first)
        .map_err(|e| Error::Input(format!("read failed: {e}")))?;
    let json = first.strip_prefix(MAGIC).ok_or_else(|| {
        Error::Input("not a pataplectic trajectory file (missing header line)".into())
    })?;
    let meta: TrajectoryMeta =
        serde_json::from_str(json.trim()).map_err(|e| Error::Input(format!("header: {e}")))?;
    let major: u32 = meta
        .format_version
        .split('.')
        .next()
        .and_then(|m| m.parse().ok())
        .ok_or_else(|| {
            Error::Input(format!(
                "format_version '{}' is malformed",
                meta.format_version
            ))
        })?;
    if major != TRAJECTORY_FORMAT_MAJOR {
        return Err(Error::Input(format!(
            "format_version {} is not supported (expected major {TRAJECTORY_FORMAT_MAJOR})",
            meta.format_version
        )));
    }
    let chart = chart_of(&meta.model)?;
    meta.lattice.validate(chart.n())?;
    let mut rd = csv::Reader::from_reader(input);
    let want = columns(&chart);
    let got: Vec<String> = rd
        .headers()
        .map_err(|e| Error::Input(format!("csv header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    if got != want {
        return Err(Error::Input(format!(
            "columns {got:?} do not match the model (expected {want:?})"
        )));
    }
    let mut traj = Trajectory::zeros(meta.lattice.clone(), &chart);
    let (n, k, n2) = (traj.n, traj.k, traj.n2);
    let mut count = 0;
    for (node, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| Error::Input(format!("row {}: {e}", node + 1)))?;
        if node >= traj.lattice.n_nodes() {
            return Err(Error::Input("more rows than lattice nodes".into()));
        }
        let vals: Vec<f64> = rec
            .iter()
            .enumerate()
            .map(|(c, s)| {
                s.trim().parse::<f64>().map_err(|_| {
                    Error::Input(format!(
                        "row {}, column {}: '{s}' is not a number",
                        node + 1,
                        want[c]
                    ))
                })
            })
            .collect::<Result<_>>()?;
        let mut j = n;
        traj.y[node * k..(node + 1) * k].copy_from_slice(&vals[j..j + k]);
        j += k;
        traj.p[node * n * k..(node + 1) * n * k].copy_from_slice(&vals[j..j + n * k]);
        j += n * k;
        traj.eps[node] = vals[j];
        j += 1;
        traj.p2[node * n2..(node + 1) * n2].copy_from_slice(&vals[j..j + n2]);
        count += 1;
    }
    if count != traj.lattice.n_nodes() {
        return Err(Error::Input(format!(
            "{count} rows for {} lattice nodes",
            traj.lattice.n_nodes()
        )));
    }
    Ok((meta, traj))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{solve_dw_scalar, InitData};
    use crate::models::Model;

    #[test]
    fn round_trip_is_bit_exact() {
        let mj = ModelJson {
            preset: Some("klein_gordon".into()),
            mass: Some(1.0),
            ..Default::default()
        };
        let m = Model::from_json(&mj).unwrap();
        let l = LatticeSpec::periodic(5, 0.1, &[(8, 0.7)]);
        let init = InitData {
            y: vec![m.chart().parse("sin(x2)/3").unwrap()],
            dt_y: None,
        };
        let t = solve_dw_scalar(&m, &l, &init).unwrap();
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &t, m.chart(), &mj, None).unwrap();
        let (meta, back) =
            read_trajectory(&buf[..], |j| Ok(Model::from_json(j)?.chart().clone())).unwrap();
        assert_eq!(back, t);
        assert_eq!(meta.format_version, "1.0");
        let bad = String::from_utf8(buf)
            .unwrap()
            .replacen("\"1.0\"", "\"2.0\"", 1);
        assert!(
            read_trajectory(bad.as_bytes(), |j| Ok(Model::from_json(j)?.chart().clone())).is_err()
        );
    }
}
