//! Minimal SVG line plots for precision/recall curves and parameter
//! sweeps over stats CSV files.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

/// Render one or more `recall,precision` CSV files into a single SVG.
pub fn plot_pr(inputs: &[&Path], out: &Path) -> Result<()> {
    let mut series = Vec::new();
    for path in inputs {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        let curve = crate::pipeline::parse_pr_csv(&bytes)
            .with_context(|| format!("parsing {}", path.display()))?;
        series.push(Series {
            label: path
                .file_stem()
                .map(|s| s.to_string_lossy().to_string())
                .unwrap_or_default(),
            points: curve,
        });
    }
    if series.is_empty() {
        bail!("no PR curves to plot");
    }
    let svg = render(&series, ("recall", 0.0, 1.0), ("precision", 0.0, 1.0))?;
    std::fs::write(out, svg).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}

/// Render a parameter sweep: one stats CSV per run, a chosen numeric
/// column on the x axis and the five statistics as separate lines.
pub fn plot_sweep(inputs: &[&Path], x_column: &str, out: &Path) -> Result<()> {
    const METRICS: [&str; 5] = ["nn", "tier1", "tier2", "e_measure", "dcg"];
    let mut rows: Vec<(f64, Vec<f64>)> = Vec::new();
    for path in inputs {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        let mut lines = text.lines();
        let header: Vec<&str> = lines
            .next()
            .with_context(|| format!("{} is empty", path.display()))?
            .split(',')
            .collect();
        let x_idx = header
            .iter()
            .position(|h| *h == x_column)
            .with_context(|| format!("{} has no column {x_column:?}", path.display()))?;
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let x: f64 = fields[x_idx]
                .parse()
                .with_context(|| format!("non-numeric {x_column} in {}", path.display()))?;
            let mut metrics = Vec::new();
            for m in METRICS {
                let idx = header
                    .iter()
                    .position(|h| *h == m)
                    .with_context(|| format!("{} has no column {m:?}", path.display()))?;
                metrics.push(fields[idx].parse()?);
            }
            rows.push((x, metrics));
        }
    }
    if rows.is_empty() {
        bail!("no stats rows to plot");
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));

    let x_min = rows.first().unwrap().0;
    let x_max = rows.last().unwrap().0.max(x_min + 1e-9);
    let series: Vec<Series> = METRICS
        .iter()
        .enumerate()
        .map(|(mi, name)| Series {
            label: name.to_string(),
            points: rows.iter().map(|(x, m)| (*x, m[mi])).collect(),
        })
        .collect();
    let svg = render(&series, (x_column, x_min, x_max), ("score", 0.0, 1.0))?;
    std::fs::write(out, svg).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}

fn render(
    series: &[Series],
    (x_label, x_min, x_max): (&str, f64, f64),
    (y_label, y_min, y_max): (&str, f64, f64),
) -> Result<String> {
    let to_x = |x: f64| MARGIN + (x - x_min) / (x_max - x_min) * (WIDTH - 2.0 * MARGIN);
    let to_y = |y: f64| HEIGHT - MARGIN - (y - y_min) / (y_max - y_min) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    writeln!(
        svg,
        r##"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"##
    )?;
    writeln!(svg, r##"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"##)?;

    // grid and axis labels at fifths
    for i in 0..=5 {
        let f = i as f64 / 5.0;
        let gx = to_x(x_min + f * (x_max - x_min));
        let gy = to_y(y_min + f * (y_max - y_min));
        writeln!(
            svg,
            r##"<line x1="{gx:.1}" y1="{:.1}" x2="{gx:.1}" y2="{:.1}" stroke="#dddddd"/>"##,
            to_y(y_min),
            to_y(y_max)
        )?;
        writeln!(
            svg,
            r##"<line x1="{:.1}" y1="{gy:.1}" x2="{:.1}" y2="{gy:.1}" stroke="#dddddd"/>"##,
            to_x(x_min),
            to_x(x_max)
        )?;
        writeln!(
            svg,
            r##"<text x="{gx:.1}" y="{:.1}" text-anchor="middle">{:.2}</text>"##,
            HEIGHT - MARGIN + 18.0,
            x_min + f * (x_max - x_min)
        )?;
        writeln!(
            svg,
            r##"<text x="{:.1}" y="{gy:.1}" text-anchor="end" dominant-baseline="middle">{:.2}</text>"##,
            MARGIN - 8.0,
            y_min + f * (y_max - y_min)
        )?;
    }
    writeln!(
        svg,
        r##"<text x="{:.1}" y="{:.1}" text-anchor="middle">{x_label}</text>"##,
        WIDTH / 2.0,
        HEIGHT - 12.0
    )?;
    writeln!(
        svg,
        r##"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">{y_label}</text>"##,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    )?;

    for (si, s) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let path: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", to_x(x), to_y(y.clamp(y_min, y_max))))
            .collect();
        writeln!(
            svg,
            r##"<polyline fill="none" stroke="{color}" stroke-width="1.8" points="{}"/>"##,
            path.join(" ")
        )?;
        for &(x, y) in &s.points {
            writeln!(
                svg,
                r##"<circle cx="{:.2}" cy="{:.2}" r="2.4" fill="{color}"/>"##,
                to_x(x),
                to_y(y.clamp(y_min, y_max))
            )?;
        }
        let ly = MARGIN + 16.0 * si as f64;
        writeln!(
            svg,
            r##"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="1.8"/>"##,
            WIDTH - MARGIN - 110.0,
            WIDTH - MARGIN - 86.0
        )?;
        writeln!(
            svg,
            r##"<text x="{:.1}" y="{:.1}">{}</text>"##,
            WIDTH - MARGIN - 80.0,
            ly + 4.0,
            s.label
        )?;
    }
    writeln!(svg, "</svg>")?;
    Ok(svg)
}
