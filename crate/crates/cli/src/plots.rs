//! Figure rendering: turns the bundle's figure CSVs into self-contained SVG
//! line charts (recursive-stability paths with bands, the unit circle of
//! companion roots, impulse responses, variance shares, and historical
//! contributions). The csv format is a passthrough that only validates the
//! artifacts exist and are non-empty.

use crate::{CliError, Result};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotFormat {
    Csv,
    Svg,
}

const FIGURES: [&str; 5] = [
    "fig2_cusum.csv",
    "fig3_roots.csv",
    "fig4_irf.csv",
    "fig5_fevd.csv",
    "fig5_hd.csv",
];

const PALETTE: [&str; 6] = ["#2f6db3", "#c43d3d", "#3a9a5c", "#8a5fb0", "#6b6b6b", "#b07c3a"];

/// Renders (or validates) every figure artifact in a bundle directory.
/// Returns the paths produced (svg) or verified (csv).
pub fn render_bundle(dir: &Path, format: PlotFormat) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(CliError::MissingArtifact(format!(
            "bundle directory {}",
            dir.display()
        )));
    }
    let mut out = Vec::new();
    for name in FIGURES {
        let path = dir.join(name);
        let table = read_table(&path)?;
        match format {
            PlotFormat::Csv => out.push(path),
            PlotFormat::Svg => {
                let svg = match name {
                    "fig2_cusum.csv" => plot_cusum(&table),
                    "fig3_roots.csv" => plot_roots(&table),
                    "fig4_irf.csv" => plot_irf(&table),
                    "fig5_fevd.csv" => plot_fevd(&table),
                    _ => plot_hd(&table),
                };
                let svg_path = dir.join(name.replace(".csv", ".svg"));
                crate::report::write_file(&svg_path, svg.as_bytes())?;
                out.push(svg_path);
            }
        }
    }
    Ok(out)
}

struct CsvTable {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    fn col(&self, name: &str) -> usize {
        self.columns
            .iter()
            .position(|c| c == name)
            .unwrap_or_else(|| panic!("figure csv lacks column {name}"))
    }

    fn num(&self, row: &[String], name: &str) -> f64 {
        row[self.col(name)].parse().unwrap_or(f64::NAN)
    }

    /// Distinct values of a column, first-appearance order.
    fn levels(&self, name: &str) -> Vec<String> {
        let i = self.col(name);
        let mut seen = Vec::new();
        for r in &self.rows {
            if !seen.contains(&r[i]) {
                seen.push(r[i].clone());
            }
        }
        seen
    }
}

fn read_table(path: &Path) -> Result<CsvTable> {
    if !path.exists() {
        return Err(CliError::MissingArtifact(path.display().to_string()));
    }
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::MissingArtifact(format!("{}: {e}", path.display())))?;
    let columns: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::MissingArtifact(format!("{}: {e}", path.display())))?
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| CliError::MissingArtifact(format!("{}: {e}", path.display())))?;
        rows.push(rec.iter().map(|s| s.to_string()).collect());
    }
    if rows.is_empty() {
        return Err(CliError::MissingArtifact(format!(
            "{} has no data rows",
            path.display()
        )));
    }
    Ok(CsvTable { columns, rows })
}

struct Svg {
    width: f64,
    height: f64,
    body: String,
}

impl Svg {
    fn new(width: f64, height: f64) -> Self {
        Svg { width, height, body: String::new() }
    }

    fn polyline(&mut self, pts: &[(f64, f64)], stroke: &str, width: f64, dashed: bool) {
        if pts.len() < 2 {
            return;
        }
        let mut d = String::new();
        for (i, (x, y)) in pts.iter().enumerate() {
            if i > 0 {
                d.push(' ');
            }
            d.push_str(&format!("{x:.2},{y:.2}"));
        }
        let dash = if dashed { " stroke-dasharray=\"5 4\"" } else { "" };
        self.body.push_str(&format!(
            "<polyline points=\"{d}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"{width}\"{dash}/>\n"
        ));
    }

    fn circle(&mut self, cx: f64, cy: f64, r: f64, stroke: &str, fill: &str) {
        self.body.push_str(&format!(
            "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"{r:.2}\" stroke=\"{stroke}\" fill=\"{fill}\"/>\n"
        ));
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, stroke: &str) {
        self.body.push_str(&format!(
            "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{w:.2}\" height=\"{h:.2}\" fill=\"none\" stroke=\"{stroke}\"/>\n"
        ));
    }

    fn text(&mut self, x: f64, y: f64, size: f64, anchor: &str, s: &str) {
        let escaped = s.replace('&', "&amp;").replace('<', "&lt;");
        self.body.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{y:.2}\" font-size=\"{size}\" font-family=\"sans-serif\" text-anchor=\"{anchor}\" fill=\"#222\">{escaped}</text>\n"
        ));
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.width, self.height, self.width, self.height, self.body
        )
    }
}

/// Pixel box of one panel plus the data window it displays.
struct Panel {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
}

impl Panel {
    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let sx = if self.xmax > self.xmin {
            (x - self.xmin) / (self.xmax - self.xmin)
        } else {
            0.5
        };
        let sy = if self.ymax > self.ymin {
            (y - self.ymin) / (self.ymax - self.ymin)
        } else {
            0.5
        };
        (self.x0 + sx * self.w, self.y0 + self.h - sy * self.h)
    }

    fn frame(&self, svg: &mut Svg, title: &str) {
        svg.rect(self.x0, self.y0, self.w, self.h, "#999");
        svg.text(self.x0 + self.w / 2.0, self.y0 - 6.0, 12.0, "middle", title);
        svg.text(
            self.x0 - 4.0,
            self.y0 + self.h,
            9.0,
            "end",
            &format!("{:.3}", self.ymin),
        );
        svg.text(self.x0 - 4.0, self.y0 + 9.0, 9.0, "end", &format!("{:.3}", self.ymax));
        svg.text(
            self.x0,
            self.y0 + self.h + 12.0,
            9.0,
            "start",
            &format!("{:.0}", self.xmin),
        );
        svg.text(
            self.x0 + self.w,
            self.y0 + self.h + 12.0,
            9.0,
            "end",
            &format!("{:.0}", self.xmax),
        );
        if self.ymin < 0.0 && self.ymax > 0.0 {
            let (zx0, zy) = self.map(self.xmin, 0.0);
            let (zx1, _) = self.map(self.xmax, 0.0);
            svg.polyline(&[(zx0, zy), (zx1, zy)], "#ccc", 0.8, false);
        }
    }
}

struct LineData {
    label: String,
    points: Vec<(f64, f64)>,
    dashed: bool,
}

fn window(lines: &[LineData]) -> (f64, f64, f64, f64) {
    let mut xmin = f64::INFINITY;
    let mut xmax = f64::NEG_INFINITY;
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for l in lines {
        for &(x, y) in &l.points {
            if x.is_finite() {
                xmin = xmin.min(x);
                xmax = xmax.max(x);
            }
            if y.is_finite() {
                ymin = ymin.min(y);
                ymax = ymax.max(y);
            }
        }
    }
    if !ymin.is_finite() {
        (0.0, 1.0, 0.0, 1.0)
    } else {
        let pad = 0.05 * (ymax - ymin).max(1e-12);
        (xmin, xmax, ymin - pad, ymax + pad)
    }
}

fn draw_panel(svg: &mut Svg, panel: &Panel, title: &str, lines: &[LineData]) {
    panel.frame(svg, title);
    for (i, l) in lines.iter().enumerate() {
        let pts: Vec<(f64, f64)> = l.points.iter().map(|&(x, y)| panel.map(x, y)).collect();
        svg.polyline(&pts, PALETTE[i % PALETTE.len()], 1.4, l.dashed);
    }
    // Legend along the bottom edge.
    let mut lx = panel.x0 + 4.0;
    for (i, l) in lines.iter().enumerate() {
        if l.label.is_empty() {
            continue;
        }
        let y = panel.y0 + panel.h - 6.0 - 11.0 * i as f64;
        svg.polyline(&[(lx, y - 3.0), (lx + 14.0, y - 3.0)], PALETTE[i % PALETTE.len()], 1.6, l.dashed);
        svg.text(lx + 18.0, y, 9.0, "start", &l.label);
        lx = panel.x0 + 4.0;
    }
}

fn grid_panels(
    svg_w: f64,
    rows: usize,
    cols: usize,
    per_panel: &[(String, Vec<LineData>)],
) -> Svg {
    let margin = 46.0;
    let gap = 34.0;
    let panel_w = (svg_w - margin - 16.0 - gap * (cols as f64 - 1.0)) / cols as f64;
    let panel_h = 180.0;
    let svg_h = 30.0 + rows as f64 * (panel_h + gap) + 10.0;
    let mut svg = Svg::new(svg_w, svg_h);
    for (idx, (title, lines)) in per_panel.iter().enumerate() {
        let (r, c) = (idx / cols, idx % cols);
        let (xmin, xmax, ymin, ymax) = window(lines);
        let panel = Panel {
            x0: margin + c as f64 * (panel_w + gap),
            y0: 30.0 + r as f64 * (panel_h + gap),
            w: panel_w,
            h: panel_h,
            xmin,
            xmax,
            ymin,
            ymax,
        };
        draw_panel(&mut svg, &panel, title, lines);
    }
    svg
}

fn plot_cusum(t: &CsvTable) -> String {
    let mut panels = Vec::new();
    for kind in t.levels("kind") {
        let mut stat = Vec::new();
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        let ki = t.col("kind");
        for r in &t.rows {
            if r[ki] != kind {
                continue;
            }
            let x = t.num(r, "observation");
            stat.push((x, t.num(r, "statistic")));
            lower.push((x, t.num(r, "lower")));
            upper.push((x, t.num(r, "upper")));
        }
        panels.push((
            kind.clone(),
            vec![
                LineData { label: kind.clone(), points: stat, dashed: false },
                LineData { label: "5% band".into(), points: lower, dashed: true },
                LineData { label: String::new(), points: upper, dashed: true },
            ],
        ));
    }
    grid_panels(900.0, 1, panels.len().max(1), &panels).finish()
}

fn plot_roots(t: &CsvTable) -> String {
    let size = 420.0;
    let mut svg = Svg::new(size, size);
    let panel = Panel {
        x0: 40.0,
        y0: 30.0,
        w: size - 70.0,
        h: size - 70.0,
        xmin: -1.3,
        xmax: 1.3,
        ymin: -1.3,
        ymax: 1.3,
    };
    panel.frame(&mut svg, "inverse roots of the companion polynomial");
    // Unit circle as a polyline.
    let circle: Vec<(f64, f64)> = (0..=144)
        .map(|i| {
            let a = i as f64 * std::f64::consts::TAU / 144.0;
            panel.map(a.cos(), a.sin())
        })
        .collect();
    svg.polyline(&circle, "#888", 1.0, false);
    for r in &t.rows {
        let (cx, cy) = panel.map(t.num(r, "real"), t.num(r, "imaginary"));
        svg.circle(cx, cy, 3.4, "#2f6db3", "#2f6db3");
    }
    svg.finish()
}

fn plot_irf(t: &CsvTable) -> String {
    let shocks = t.levels("shock");
    let variables = t.levels("variable");
    let (si, vi) = (t.col("shock"), t.col("variable"));
    let mut panels = Vec::new();
    for shock in &shocks {
        for var in &variables {
            let mut resp = Vec::new();
            let mut lo = Vec::new();
            let mut hi = Vec::new();
            for r in &t.rows {
                if &r[si] != shock || &r[vi] != var {
                    continue;
                }
                let h = t.num(r, "horizon");
                resp.push((h, t.num(r, "response")));
                lo.push((h, t.num(r, "lower")));
                hi.push((h, t.num(r, "upper")));
            }
            panels.push((
                format!("{var} to {shock}"),
                vec![
                    LineData { label: "response".into(), points: resp, dashed: false },
                    LineData { label: "2 s.e.".into(), points: lo, dashed: true },
                    LineData { label: String::new(), points: hi, dashed: true },
                ],
            ));
        }
    }
    grid_panels(920.0, shocks.len(), variables.len().max(1), &panels).finish()
}

fn plot_fevd(t: &CsvTable) -> String {
    let variables = t.levels("variable");
    let shocks = t.levels("shock");
    let (vi, si) = (t.col("variable"), t.col("shock"));
    let mut panels = Vec::new();
    for var in &variables {
        let mut lines = Vec::new();
        for shock in &shocks {
            let mut pts = Vec::new();
            for r in &t.rows {
                if &r[vi] != var || &r[si] != shock {
                    continue;
                }
                pts.push((t.num(r, "horizon"), t.num(r, "share")));
            }
            lines.push(LineData { label: format!("{shock} shock"), points: pts, dashed: false });
        }
        panels.push((format!("variance shares of {var}"), lines));
    }
    grid_panels(900.0, 1, panels.len().max(1), &panels).finish()
}

fn plot_hd(t: &CsvTable) -> String {
    let variables = t.levels("variable");
    let components = t.levels("component");
    let (vi, ci) = (t.col("variable"), t.col("component"));
    let mut panels = Vec::new();
    for var in &variables {
        let mut lines = Vec::new();
        for comp in &components {
            let mut pts = Vec::new();
            let mut idx = 0.0;
            for r in &t.rows {
                if &r[vi] != var || &r[ci] != comp {
                    continue;
                }
                pts.push((idx, t.num(r, "value")));
                idx += 1.0;
            }
            let dashed = comp == "baseline";
            lines.push(LineData { label: comp.clone(), points: pts, dashed });
        }
        panels.push((format!("decomposition of {var}"), lines));
    }
    grid_panels(940.0, panels.len(), 1, &panels).finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_figures(dir: &Path) {
        let mut f = std::fs::File::create(dir.join("fig2_cusum.csv")).unwrap();
        writeln!(f, "kind,observation,date,statistic,lower,upper").unwrap();
        for i in 1..=20 {
            writeln!(f, "cusum,{i},1992M{:02},{},{},{}", i.min(12), i as f64 * 0.1, -5.0, 5.0).unwrap();
            writeln!(f, "cusumq,{i},1992M{:02},{},{},{}", i.min(12), i as f64 / 20.0, -0.2, 1.2).unwrap();
        }
        let mut f = std::fs::File::create(dir.join("fig3_roots.csv")).unwrap();
        writeln!(f, "index,real,imaginary,modulus").unwrap();
        writeln!(f, "1,0.9,0.1,0.905539").unwrap();
        writeln!(f, "2,0.3,-0.2,0.360555").unwrap();
        let mut f = std::fs::File::create(dir.join("fig4_irf.csv")).unwrap();
        writeln!(f, "method,shock,variable,horizon,response,lower,upper").unwrap();
        for shock in ["a", "b"] {
            for var in ["a", "b"] {
                for h in 0..=8 {
                    let v = 0.5_f64 * 0.8_f64.powi(h);
                    writeln!(f, "cholesky,{shock},{var},{h},{v},{},{}", v - 0.1, v + 0.1).unwrap();
                }
            }
        }
        let mut f = std::fs::File::create(dir.join("fig5_fevd.csv")).unwrap();
        writeln!(f, "variable,horizon,shock,share").unwrap();
        for h in 1..=8 {
            writeln!(f, "a,{h},a,0.8").unwrap();
            writeln!(f, "a,{h},b,0.2").unwrap();
        }
        let mut f = std::fs::File::create(dir.join("fig5_hd.csv")).unwrap();
        writeln!(f, "variable,component,date,value").unwrap();
        for i in 0..10 {
            writeln!(f, "a,observed,1993M{:02},{}", i % 12 + 1, i as f64).unwrap();
            writeln!(f, "a,baseline,1993M{:02},{}", i % 12 + 1, i as f64 * 0.9).unwrap();
            writeln!(f, "a,shock:a,1993M{:02},{}", i % 12 + 1, i as f64 * 0.1).unwrap();
        }
    }

    #[test]
    fn renders_svg_for_every_figure() {
        let tmp = tempfile::tempdir().unwrap();
        write_figures(tmp.path());
        let out = render_bundle(tmp.path(), PlotFormat::Svg).unwrap();
        assert_eq!(out.len(), 5);
        for p in &out {
            let text = std::fs::read_to_string(p).unwrap();
            assert!(text.starts_with("<svg"), "{p:?}");
            assert!(text.contains("polyline") || text.contains("circle"));
        }
    }

    #[test]
    fn csv_format_is_a_validation_passthrough() {
        let tmp = tempfile::tempdir().unwrap();
        write_figures(tmp.path());
        let out = render_bundle(tmp.path(), PlotFormat::Csv).unwrap();
        assert!(out.iter().all(|p| p.extension().unwrap() == "csv"));
    }

    #[test]
    fn missing_or_empty_artifacts_are_errors() {
        let tmp = tempfile::tempdir().unwrap();
        let err = render_bundle(tmp.path(), PlotFormat::Svg).unwrap_err();
        assert!(matches!(err, CliError::MissingArtifact(_)));

        write_figures(tmp.path());
        std::fs::write(tmp.path().join("fig3_roots.csv"), "index,real,imaginary,modulus\n")
            .unwrap();
        let err = render_bundle(tmp.path(), PlotFormat::Svg).unwrap_err();
        assert!(matches!(err, CliError::MissingArtifact(_)));

        let err = render_bundle(&tmp.path().join("nope"), PlotFormat::Csv).unwrap_err();
        assert!(matches!(err, CliError::MissingArtifact(_)));
    }
}
