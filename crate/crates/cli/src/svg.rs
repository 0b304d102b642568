//! Minimal static SVG line charts for averaged simulation output.
//!
//! The renderer is deliberately dependency-free: an averaged CSV has at most
//! a handful of series and a few thousand rounds, so writing the markup by
//! hand keeps the output byte-stable across environments.

use std::fs;
use std::path::Path;

use crate::commands::CliError;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 20.0;
const MARGIN_BOTTOM: f64 = 45.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

struct Chart {
    labels: Vec<String>,
    rounds: Vec<f64>,
    series: Vec<Vec<f64>>,
}

fn parse_csv(path: &Path) -> Result<Chart, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("{}: {}", path.display(), e)))?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| CliError::Parse(format!("{}: no header row", path.display())))?;
    let labels: Vec<String> = header.split(',').skip(1).map(str::to_string).collect();
    if labels.is_empty() {
        return Err(CliError::Parse(format!(
            "{}: header has no series columns",
            path.display()
        )));
    }
    let mut rounds = Vec::new();
    let mut series = vec![Vec::new(); labels.len()];
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != labels.len() + 1 {
            return Err(CliError::Parse(format!(
                "{}: line {} has {} fields, expected {}",
                path.display(),
                i + 1,
                fields.len(),
                labels.len() + 1
            )));
        }
        let mut parsed = fields.iter().map(|f| {
            f.trim().parse::<f64>().map_err(|_| {
                CliError::Parse(format!(
                    "{}: line {}: unparsable number {:?}",
                    path.display(),
                    i + 1,
                    f
                ))
            })
        });
        rounds.push(parsed.next().unwrap()?);
        for s in series.iter_mut() {
            s.push(parsed.next().unwrap()?);
        }
    }
    if rounds.is_empty() {
        return Err(CliError::Parse(format!(
            "{}: no data rows",
            path.display()
        )));
    }
    Ok(Chart {
        labels,
        rounds,
        series,
    })
}

/// Round a raw interval up to a 1/2/5 x 10^k tick step.
fn nice_step(span: f64, target_ticks: usize) -> f64 {
    let raw = span / target_ticks.max(1) as f64;
    if raw <= 0.0 || !raw.is_finite() {
        return 1.0;
    }
    let mag = 10f64.powf(raw.log10().floor());
    let frac = raw / mag;
    let nice = if frac <= 1.0 {
        1.0
    } else if frac <= 2.0 {
        2.0
    } else if frac <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn fmt_tick(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e7 {
        format!("{}", v as i64)
    } else {
        format!("{:.4}", v)
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    }
}

pub fn render(input: &Path, output: &Path) -> Result<(), CliError> {
    let chart = parse_csv(input)?;
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;

    let x_min = chart.rounds.first().copied().unwrap();
    let x_max = chart.rounds.last().copied().unwrap().max(x_min + 1.0);
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in &chart.series {
        for &v in s {
            y_min = y_min.min(v);
            y_max = y_max.max(v);
        }
    }
    if !y_min.is_finite() || !y_max.is_finite() {
        return Err(CliError::Parse("series contain no finite values".into()));
    }
    if y_max - y_min < 1e-12 {
        y_min -= 0.5;
        y_max += 0.5;
    }
    let pad = 0.05 * (y_max - y_min);
    let y_min = (y_min - pad).max(0.0f64.min(y_min));
    let y_max = y_max + pad;

    let sx = |x: f64| MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |y: f64| MARGIN_TOP + (1.0 - (y - y_min) / (y_max - y_min)) * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"12\">\n",
        w = WIDTH,
        h = HEIGHT
    ));
    svg.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>\n",
        WIDTH, HEIGHT
    ));

    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{l}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{l}\" y1=\"{t}\" x2=\"{l}\" y2=\"{b}\" stroke=\"black\"/>\n",
        l = MARGIN_LEFT,
        r = MARGIN_LEFT + plot_w,
        t = MARGIN_TOP,
        b = MARGIN_TOP + plot_h
    ));

    // X ticks.
    let x_step = nice_step(x_max - x_min, 6);
    let mut x = (x_min / x_step).ceil() * x_step;
    while x <= x_max + 1e-9 {
        let px = sx(x);
        svg.push_str(&format!(
            "<line x1=\"{px:.2}\" y1=\"{b}\" x2=\"{px:.2}\" y2=\"{b2}\" stroke=\"black\"/>\n\
             <text x=\"{px:.2}\" y=\"{ty}\" text-anchor=\"middle\">{}</text>\n",
            fmt_tick(x),
            b = MARGIN_TOP + plot_h,
            b2 = MARGIN_TOP + plot_h + 5.0,
            ty = MARGIN_TOP + plot_h + 18.0,
        ));
        x += x_step;
    }
    // Y ticks.
    let y_step = nice_step(y_max - y_min, 6);
    let mut y = (y_min / y_step).ceil() * y_step;
    while y <= y_max + 1e-9 {
        let py = sy(y);
        svg.push_str(&format!(
            "<line x1=\"{l2}\" y1=\"{py:.2}\" x2=\"{l}\" y2=\"{py:.2}\" stroke=\"black\"/>\n\
             <line x1=\"{l}\" y1=\"{py:.2}\" x2=\"{r}\" y2=\"{py:.2}\" stroke=\"#dddddd\"/>\n\
             <text x=\"{tx}\" y=\"{ty:.2}\" text-anchor=\"end\">{}</text>\n",
            fmt_tick(y),
            l = MARGIN_LEFT,
            l2 = MARGIN_LEFT - 5.0,
            r = MARGIN_LEFT + plot_w,
            tx = MARGIN_LEFT - 8.0,
            ty = py + 4.0,
        ));
        y += y_step;
    }

    // Axis labels.
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">round</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 8.0
    ));
    svg.push_str(&format!(
        "<text x=\"14\" y=\"{:.2}\" text-anchor=\"middle\" \
         transform=\"rotate(-90 14 {:.2})\">mean reward</text>\n",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    ));

    // One polyline per series, thinned to at most ~1600 points.
    let stride = (chart.rounds.len() / 1600).max(1);
    for (si, s) in chart.series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let mut points = String::new();
        for t in (0..chart.rounds.len()).step_by(stride) {
            points.push_str(&format!("{:.2},{:.2} ", sx(chart.rounds[t]), sy(s[t])));
        }
        let last = chart.rounds.len() - 1;
        if last % stride != 0 {
            points.push_str(&format!("{:.2},{:.2} ", sx(chart.rounds[last]), sy(s[last])));
        }
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            color,
            points.trim_end()
        ));
    }

    // Legend.
    for (si, label) in chart.labels.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let ly = MARGIN_TOP + 14.0 + 18.0 * si as f64;
        svg.push_str(&format!(
            "<line x1=\"{x1}\" y1=\"{ly:.2}\" x2=\"{x2}\" y2=\"{ly:.2}\" \
             stroke=\"{color}\" stroke-width=\"2\"/>\n\
             <text x=\"{tx}\" y=\"{ty:.2}\">{label}</text>\n",
            x1 = MARGIN_LEFT + plot_w + 10.0,
            x2 = MARGIN_LEFT + plot_w + 30.0,
            tx = MARGIN_LEFT + plot_w + 36.0,
            ty = ly + 4.0,
            label = xml_escape(label),
        ));
    }

    svg.push_str("</svg>\n");
    fs::write(output, svg)?;
    println!("wrote {}", output.display());
    Ok(())
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nice_step_examples() {
        assert_eq!(nice_step(10.0, 5), 2.0);
        assert_eq!(nice_step(1.0, 6), 0.2);
        assert_eq!(nice_step(7000.0, 6), 2000.0);
    }

    #[test]
    fn render_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("avg.csv");
        std::fs::write(
            &csv,
            "# seed=0 config={}\nround,a,b\n1,0.1,0.2\n2,0.15,0.25\n3,0.2,0.3\n",
        )
        .unwrap();
        let out = dir.path().join("plot.svg");
        render(&csv, &out).unwrap();
        let svg = std::fs::read_to_string(&out).unwrap();
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains(">a</text>"));
    }

    #[test]
    fn render_rejects_empty() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("empty.csv");
        std::fs::write(&csv, "# comment\nround,a\n").unwrap();
        let err = render(&csv, &dir.path().join("x.svg")).unwrap_err();
        assert!(matches!(err, CliError::Parse(_)));
    }
}
