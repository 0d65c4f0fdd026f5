//! CSV and SVG writers. Output depends only on the data: floats use Rust's
//! shortest round-trip formatting, lines end in `\n`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::crossbar::{Crossbar, ProgramEvent};
use crate::device::{conductance, DeviceParams, MetastateTable};
use crate::error::{Error, Result};
use crate::experiment::{LabeledTrace, SweepResult, Variant};
use crate::synapse::MetaState;

pub const TRACES_CSV: &str = "traces.csv";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const SIZES_CSV: &str = "size_sweep.csv";
pub const CF_GRID_CSV: &str = "cf_grid.csv";
pub const METASTATE_CSV: &str = "metastate_table.csv";
pub const EVENTS_CSV: &str = "events.csv";
pub const CROSSBAR_CSV: &str = "crossbar_state.csv";
pub const ACCURACY_SVG: &str = "accuracy.svg";
pub const SIZES_SVG: &str = "size_sweep.svg";
pub const CF_GRID_SVG: &str = "cf_grid.svg";

fn meta_label(m: MetaState) -> String {
    format!("{}/{}", m.efficacy().label(), m.metalevel())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

fn write_rows<I>(path: &Path, header: &[&str], rows: I) -> Result<PathBuf>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv_writer(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn write_traces(traces: &[LabeledTrace], path: &Path) -> Result<PathBuf> {
    let rows = traces.iter().flat_map(|t| {
        let label = t.realization.label();
        t.trace
            .learning
            .iter()
            .zip(&t.trace.mean)
            .enumerate()
            .map(move |(i, (l, m))| {
                vec![
                    label.clone(),
                    t.seed.to_string(),
                    (i + 1).to_string(),
                    l.to_string(),
                    m.to_string(),
                ]
            })
    });
    write_rows(
        path,
        &["model", "seed", "pattern_index", "learning_acc", "mean_acc"],
        rows,
    )
}

pub fn write_summary(result: &SweepResult, path: &Path) -> Result<PathBuf> {
    let rows = result.summary.iter().map(|s| {
        vec![
            s.realization.label(),
            s.crossing_mean.to_string(),
            s.crossing_std.to_string(),
            s.ratio_vs_binary.map(|r| r.to_string()).unwrap_or_default(),
        ]
    });
    write_rows(
        path,
        &["model", "crossing_mean", "crossing_std", "ratio_vs_binary"],
        rows,
    )
}

pub fn write_sizes(result: &SweepResult, path: &Path) -> Result<PathBuf> {
    let rows = result.sizes.iter().map(|r| {
        vec![
            r.realization.label(),
            r.n.to_string(),
            r.learning_at_end.to_string(),
            r.mean_at_end.to_string(),
        ]
    });
    write_rows(
        path,
        &["model", "n", "learning_acc_at_end", "mean_acc_at_end"],
        rows,
    )
}

pub fn write_cf_grid(result: &SweepResult, path: &Path) -> Result<PathBuf> {
    let rows = result.cells.iter().map(|c| {
        vec![
            c.connectivity.to_string(),
            c.activity.to_string(),
            c.mean_at_end.map(|m| m.to_string()).unwrap_or_default(),
            u8::from(c.is_valid()).to_string(),
        ]
    });
    write_rows(
        path,
        &["connectivity", "activity", "mean_acc_at_100", "valid_flag"],
        rows,
    )
}

pub fn write_metastate_table(
    table: &MetastateTable,
    params: &DeviceParams,
    path: &Path,
) -> Result<PathBuf> {
    let rows = table.plateaus().iter().map(|&(m, x)| {
        vec![
            m.efficacy().label().to_string(),
            m.metalevel().to_string(),
            x.to_string(),
            conductance(x, params).to_string(),
        ]
    });
    write_rows(
        path,
        &["efficacy", "metalevel", "x_plateau", "conductance_S"],
        rows,
    )
}

pub fn write_events(events: &[ProgramEvent], path: &Path) -> Result<PathBuf> {
    let rows = events.iter().map(|e| {
        vec![
            e.step.to_string(),
            e.phase.label().to_string(),
            e.row.to_string(),
            e.col.to_string(),
            e.x_before.to_string(),
            e.x_after.to_string(),
            meta_label(e.meta_before),
            meta_label(e.meta_after),
        ]
    });
    write_rows(
        path,
        &[
            "step",
            "phase",
            "row",
            "col",
            "x_before",
            "x_after",
            "meta_before",
            "meta_after",
        ],
        rows,
    )
}

/// Every crosspoint with its state; efficacy and metalevel are empty for
/// pruned devices.
pub fn write_crossbar_state(xb: &Crossbar, path: &Path) -> Result<PathBuf> {
    let rows = (0..xb.n_in()).flat_map(|r| {
        (0..xb.n_out()).map(move |c| {
            let connected = xb.is_connected(r, c);
            let (efficacy, metalevel) = if connected {
                let m = xb.metastate(r, c);
                (m.efficacy().value().to_string(), m.metalevel().to_string())
            } else {
                (String::new(), String::new())
            };
            vec![
                r.to_string(),
                c.to_string(),
                u8::from(connected).to_string(),
                xb.device(r, c).x.to_string(),
                efficacy,
                metalevel,
            ]
        })
    });
    write_rows(
        path,
        &["row", "col", "connected_flag", "x", "efficacy", "metalevel"],
        rows,
    )
}

const PALETTE: &[&str] = &[
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];
const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 50.0;

/// Named series of `(x, y)` points, y in [0, 1].
pub type Series = (String, Vec<(f64, f64)>);

pub fn line_plot_svg(
    title: &str,
    x_label: &str,
    series: &[Series],
    threshold: Option<f64>,
) -> String {
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, pts) in series {
        for &(x, _) in pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
        }
    }
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - y * (H - 2.0 * PAD);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{title}</text>"#,
        W / 2.0
    );
    let _ = writeln!(
        s,
        r#"<polyline points="{},{} {},{} {},{}" fill="none" stroke="black"/>"#,
        PAD,
        PAD,
        PAD,
        H - PAD,
        W - PAD,
        H - PAD
    );
    for tick in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end" font-size="10">{tick}</text>"#,
            PAD - 4.0,
            sy(tick) + 3.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{x_label}</text>"#,
        W / 2.0,
        H - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="10">{x0}</text><text x="{}" y="{}" text-anchor="end" font-size="10">{x1}</text>"#,
        PAD,
        H - PAD + 14.0,
        W - PAD,
        H - PAD + 14.0
    );
    if let Some(t) = threshold {
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="gray" stroke-dasharray="4 4"/>"#,
            PAD,
            W - PAD,
            y = sy(t)
        );
    }
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y.clamp(0.0, 1.0))))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            points.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="11" fill="{color}">{name}</text>"#,
            W - PAD - 120.0,
            PAD + 14.0 * (i as f64 + 1.0)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Grey-scale heatmap; `None` cells are hatched out in red.
pub fn heatmap_svg(
    title: &str,
    rows: &[f64],
    cols: &[f64],
    value: impl Fn(usize, usize) -> Option<f64>,
) -> String {
    let cell_w = (W - 2.0 * PAD) / cols.len().max(1) as f64;
    let cell_h = (H - 2.0 * PAD) / rows.len().max(1) as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{title}</text>"#,
        W / 2.0
    );
    for (i, r) in rows.iter().enumerate() {
        let y = PAD + i as f64 * cell_h;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end" font-size="10">C={r}</text>"#,
            PAD - 4.0,
            y + cell_h / 2.0
        );
        for (j, _) in cols.iter().enumerate() {
            let x = PAD + j as f64 * cell_w;
            match value(i, j) {
                Some(v) => {
                    let level = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
                    let _ = writeln!(
                        s,
                        r#"<rect x="{x:.2}" y="{y:.2}" width="{cell_w:.2}" height="{cell_h:.2}" fill="rgb({level},{level},{level})"/><text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="10" fill="{}">{v:.3}</text>"#,
                        x + cell_w / 2.0,
                        y + cell_h / 2.0,
                        if level > 128 { "black" } else { "white" }
                    );
                }
                None => {
                    let _ = writeln!(
                        s,
                        r#"<rect x="{x:.2}" y="{y:.2}" width="{cell_w:.2}" height="{cell_h:.2}" fill="none" stroke="red"/>"#
                    );
                }
            }
        }
    }
    for (j, c) in cols.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{}" text-anchor="middle" font-size="10">f={c}</text>"#,
            PAD + (j as f64 + 0.5) * cell_w,
            H - PAD + 14.0
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Seed-averaged mean-accuracy curve per realization, in first-seen order.
pub fn mean_curves(traces: &[LabeledTrace]) -> Vec<Series> {
    let mut out: Vec<(String, Vec<f64>, usize)> = Vec::new();
    for t in traces {
        let label = t.realization.label();
        let slot = match out.iter().position(|(l, _, _)| *l == label) {
            Some(i) => i,
            None => {
                out.push((label, vec![0.0; t.trace.mean.len()], 0));
                out.len() - 1
            }
        };
        let (_, sum, count) = &mut out[slot];
        for (acc, m) in sum.iter_mut().zip(&t.trace.mean) {
            *acc += m;
        }
        *count += 1;
    }
    out.into_iter()
        .map(|(label, sum, count)| {
            let pts = sum
                .iter()
                .enumerate()
                .map(|(i, s)| ((i + 1) as f64, s / count as f64))
                .collect();
            (label, pts)
        })
        .collect()
}

fn write_text(path: &Path, text: &str) -> Result<PathBuf> {
    fs::write(path, text).map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

/// Writes every artifact for `result` into `dir` and returns the paths.
pub fn write_outputs(result: &SweepResult, dir: &Path, svg: bool) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut files = vec![write_traces(&result.traces, &dir.join(TRACES_CSV))?];
    match result.variant {
        Variant::CompareModels => {
            files.push(write_summary(result, &dir.join(SUMMARY_CSV))?);
            if svg {
                let plot = line_plot_svg(
                    "mean accuracy",
                    "patterns presented",
                    &mean_curves(&result.traces),
                    Some(result.mean_threshold),
                );
                files.push(write_text(&dir.join(ACCURACY_SVG), &plot)?);
            }
        }
        Variant::SweepSize => {
            files.push(write_sizes(result, &dir.join(SIZES_CSV))?);
            if svg {
                let series: Vec<Series> = vec![
                    (
                        "learning".into(),
                        result
                            .sizes
                            .iter()
                            .map(|r| (r.n as f64, r.learning_at_end))
                            .collect(),
                    ),
                    (
                        "mean".into(),
                        result
                            .sizes
                            .iter()
                            .map(|r| (r.n as f64, r.mean_at_end))
                            .collect(),
                    ),
                ];
                let plot = line_plot_svg("accuracy after the last pattern", "N", &series, None);
                files.push(write_text(&dir.join(SIZES_SVG), &plot)?);
            }
        }
        Variant::SweepCf => {
            files.push(write_cf_grid(result, &dir.join(CF_GRID_CSV))?);
            if svg {
                let mut cs: Vec<f64> = Vec::new();
                let mut fs_: Vec<f64> = Vec::new();
                for c in &result.cells {
                    if !cs.contains(&c.connectivity) {
                        cs.push(c.connectivity);
                    }
                    if !fs_.contains(&c.activity) {
                        fs_.push(c.activity);
                    }
                }
                let plot =
                    heatmap_svg("mean accuracy after the last pattern", &cs, &fs_, |i, j| {
                        result.cell(cs[i], fs_[j]).and_then(|c| c.mean_at_end)
                    });
                files.push(write_text(&dir.join(CF_GRID_SVG), &plot)?);
            }
        }
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::calibrate_metastate_table;

    #[test]
    fn metastate_csv_schema() {
        let params = DeviceParams::default();
        let table = calibrate_metastate_table(&params, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = write_metastate_table(&table, &params, &dir.path().join(METASTATE_CSV)).unwrap();
        let text = fs::read_to_string(p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "efficacy,metalevel,x_plateau,conductance_S");
        assert_eq!(lines.len(), 7);
        assert!(lines[1].starts_with("low,2,"));
        assert!(!text.contains('\r'));
    }

    #[test]
    fn svg_is_well_formed() {
        let s = line_plot_svg(
            "t",
            "x",
            &[("a".into(), vec![(1.0, 0.5), (2.0, 0.9)])],
            Some(0.75),
        );
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert_eq!(s.matches("<polyline").count(), 2);
        let h = heatmap_svg("t", &[0.1, 0.2], &[0.3], |i, _| (i == 0).then_some(0.5));
        assert_eq!(h.matches("<rect").count(), 3);
    }
}
