//! Log-log decay plots rendered straight from study CSVs to standalone SVG.

use std::fmt::Write as _;

use crate::error::CliError;

/// Study CSVs that carry a decay in `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Voronovskaya,
    SemigroupRate,
    FvVoronovskaya,
    FvSemigroup,
}

impl PlotKind {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "voronovskaya" => PlotKind::Voronovskaya,
            "semigroup-rate" => PlotKind::SemigroupRate,
            "fv-voronovskaya" => PlotKind::FvVoronovskaya,
            "fv-semigroup" => PlotKind::FvSemigroup,
            other => {
                return Err(CliError::Schema(format!(
                    "no decay plot for kind `{other}`; expected voronovskaya, semigroup-rate, fv-voronovskaya or fv-semigroup"
                )))
            }
        })
    }

    fn value_column(self) -> &'static str {
        match self {
            PlotKind::Voronovskaya | PlotKind::FvVoronovskaya => "residual",
            PlotKind::SemigroupRate | PlotKind::FvSemigroup => "error",
        }
    }

    fn title(self) -> &'static str {
        match self {
            PlotKind::Voronovskaya => "Voronovskaya residual",
            PlotKind::SemigroupRate => "semigroup error",
            PlotKind::FvVoronovskaya => "measure-valued Voronovskaya residual",
            PlotKind::FvSemigroup => "measure-valued semigroup error",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Series {
    label: String,
    dashed: bool,
    points: Vec<(f64, f64)>,
    /// Per-point annotations (the dimension `d_n` for measure-valued studies).
    notes: Vec<String>,
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize, CliError> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::Schema(format!("missing column `{name}`")))
}

fn field(rec: &csv::StringRecord, i: usize, line: usize) -> Result<f64, CliError> {
    let s = rec.get(i).unwrap_or("");
    s.parse()
        .map_err(|_| CliError::Schema(format!("row {line}: `{s}` is not a number")))
}

fn read_series(csv_text: &str, kind: PlotKind) -> Result<Vec<Series>, CliError> {
    let mut reader = csv::ReaderBuilder::new().from_reader(csv_text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| CliError::Schema(e.to_string()))?
        .clone();
    if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
        return Err(CliError::Schema("empty CSV".into()));
    }
    let n_col = column(&headers, "n")?;
    let y_col = column(&headers, kind.value_column())?;
    let bound_col = headers.iter().position(|h| h == "bound");
    let t_col = matches!(kind, PlotKind::SemigroupRate | PlotKind::FvSemigroup)
        .then(|| column(&headers, "t"))
        .transpose()?;
    let d_col = (kind == PlotKind::FvVoronovskaya)
        .then(|| column(&headers, "d_n"))
        .transpose()?;

    let mut series: Vec<Series> = Vec::new();
    let mut rows = 0;
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Schema(e.to_string()))?;
        rows += 1;
        let n = field(&rec, n_col, line + 2)?;
        let y = field(&rec, y_col, line + 2)?;
        let group = match t_col {
            Some(i) => format!("t = {}", rec.get(i).unwrap_or("")),
            None => kind.value_column().to_string(),
        };
        let idx = match series.iter().position(|s| s.label == group) {
            Some(i) => i,
            None => {
                series.push(Series {
                    label: group.clone(),
                    dashed: false,
                    points: Vec::new(),
                    notes: Vec::new(),
                });
                series.len() - 1
            }
        };
        series[idx].points.push((n, y));
        if let Some(i) = d_col {
            series[idx]
                .notes
                .push(format!("d={}", rec.get(i).unwrap_or("")));
        }
        if let Some(b) = bound_col
            .and_then(|i| rec.get(i))
            .and_then(|s| s.parse::<f64>().ok())
        {
            let label = format!("bound ({group})");
            match series.iter_mut().find(|s| s.label == label) {
                Some(s) => s.points.push((n, b)),
                None => series.push(Series {
                    label,
                    dashed: true,
                    points: vec![(n, b)],
                    notes: Vec::new(),
                }),
            }
        }
    }
    if rows == 0 {
        return Err(CliError::Schema("CSV has a header but no rows".into()));
    }
    Ok(series)
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

fn positive(p: &(f64, f64)) -> bool {
    p.0 > 0.0 && p.1 > 0.0 && p.0.is_finite() && p.1.is_finite()
}

/// Renders the SVG for a study CSV. Pure function of the CSV text.
pub fn render(csv_text: &str, kind: PlotKind) -> Result<String, CliError> {
    let mut series = read_series(csv_text, kind)?;
    for s in &mut series {
        let keep: Vec<bool> = s.points.iter().map(positive).collect();
        let mut k = keep.iter();
        s.points.retain(|_| *k.next().unwrap());
        if !s.notes.is_empty() {
            let mut k = keep.iter();
            s.notes.retain(|_| *k.next().unwrap());
        }
    }
    series.retain(|s| !s.points.is_empty());
    let anchor = *series
        .iter()
        .find(|s| !s.dashed)
        .and_then(|s| s.points.first())
        .ok_or_else(|| CliError::Schema("no positive values to plot on log axes".into()))?;

    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, 0f64, f64::INFINITY, 0f64);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    // reference slope -1/2 through the first data point
    let reference = |n: f64| anchor.1 * (n / anchor.0).powf(-0.5);
    y0 = y0.min(reference(x1));
    y1 = y1.max(reference(x0));
    let (lx0, mut lx1) = (x0.log10().floor(), x1.log10().ceil());
    let (ly0, mut ly1) = (y0.log10().floor(), y1.log10().ceil());
    if lx1 <= lx0 {
        lx1 = lx0 + 1.0;
    }
    if ly1 <= ly0 {
        ly1 = ly0 + 1.0;
    }
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x.log10() - lx0) / (lx1 - lx0) * pw;
    let py = |y: f64| TOP + (ly1 - y.log10()) / (ly1 - ly0) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + pw / 2.0,
        kind.title()
    );
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for k in lx0 as i32..=lx1 as i32 {
        let x = px(10f64.powi(k));
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{k}</text>"##,
            TOP + ph,
            TOP + ph + 16.0
        );
    }
    for k in ly0 as i32..=ly1 as i32 {
        let y = py(10f64.powi(k));
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{k}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">n</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 16.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        kind.value_column()
    );

    let mut legend = Vec::new();
    let _ = writeln!(
        svg,
        r##"<line class="reference" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#777" stroke-dasharray="2 4"/>"##,
        px(x0),
        py(reference(x0)),
        px(x1),
        py(reference(x1))
    );
    legend.push(("slope -1/2".to_string(), "#777", true));
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let dash = if s.dashed {
            r#" stroke-dasharray="6 3""#
        } else {
            ""
        };
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}"{dash}/>"#,
            pts.join(" ")
        );
        for (j, &(x, y)) in s.points.iter().enumerate() {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                px(x),
                py(y)
            );
            if let Some(note) = s.notes.get(j) {
                let _ = writeln!(
                    svg,
                    r#"<text class="annotation" x="{:.2}" y="{:.2}">{note}</text>"#,
                    px(x) + 5.0,
                    py(y) - 6.0
                );
            }
        }
        legend.push((s.label.clone(), color, s.dashed));
    }
    for (i, (label, color, dashed)) in legend.iter().enumerate() {
        let y = TOP + 12.0 + 18.0 * i as f64;
        let x = WIDTH - RIGHT + 12.0;
        let dash = if *dashed {
            r#" stroke-dasharray="6 3""#
        } else {
            ""
        };
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}"{dash}/><text x="{:.2}" y="{:.2}">{label}</text>"#,
            x + 20.0,
            x + 26.0,
            y + 4.0
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const VOR: &str =
        "n,residual,bound,pass\n20,1e-2,2e-1,true\n80,5e-3,1e-1,true\n320,2.5e-3,5e-2,true\n";

    #[test]
    fn voronovskaya_has_reference_line() {
        let svg = render(VOR, PlotKind::Voronovskaya).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains(r#"class="reference""#));
        assert!(svg.contains("slope -1/2"));
        assert_eq!(svg.matches("<circle").count(), 6);
    }

    #[test]
    fn empty_inputs_fail() {
        assert!(matches!(
            render("", PlotKind::Voronovskaya),
            Err(CliError::Schema(_))
        ));
        assert!(matches!(
            render("n,residual,bound,pass\n", PlotKind::Voronovskaya),
            Err(CliError::Schema(_))
        ));
    }

    #[test]
    fn wrong_schema_fails() {
        let err = render(
            "n,t,error,bound,ratio\n10,1,0.1,0.2,0.5\n",
            PlotKind::Voronovskaya,
        )
        .unwrap_err();
        assert!(err.to_string().contains("residual"));
        assert!(PlotKind::parse("moments").is_err());
    }

    #[test]
    fn fv_points_are_annotated() {
        let csv = "n,d_n,residual,fitted_exponent\n512,2,1e-3,-0.9\n19683,3,4e-5,-0.9\n";
        let svg = render(csv, PlotKind::FvVoronovskaya).unwrap();
        assert!(svg.contains(">d=2</text>"));
        assert!(svg.contains(">d=3</text>"));
    }

    #[test]
    fn semigroup_groups_by_t() {
        let csv = "n,t,error,bound,ratio\n25,0.25,1e-3,1e-2,0.1\n50,0.25,5e-4,7e-3,0.07\n25,1,2e-3,2e-2,0.1\n50,1,1e-3,1e-2,0.1\n";
        let svg = render(csv, PlotKind::SemigroupRate).unwrap();
        assert!(svg.contains(">t = 0.25</text>"));
        assert!(svg.contains(">t = 1</text>"));
        assert_eq!(render(csv, PlotKind::SemigroupRate).unwrap(), svg);
    }
}
