//! Static SVG output: trajectory overlays with feature markers and objective scatters.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::linkage::Vec2;
use crate::moo::{knee_points, Individual, ParetoArchive};
use crate::trajectory::{find_feature_points, Trajectory};

const W: f64 = 640.0;
const H: f64 = 480.0;
const PAD: f64 = 48.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

/// A polyline to draw.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<Vec2>,
    pub closed: bool,
}

impl Series {
    pub fn from_trajectory(label: &str, t: &Trajectory) -> Self {
        Self {
            label: label.into(),
            points: t.points.clone(),
            closed: t.closed,
        }
    }
}

struct Frame {
    x0: f64,
    y0: f64,
    s: f64,
    sy: f64,
}

impl Frame {
    /// Maps data bounds into the canvas; `equal` keeps a common scale on both axes.
    fn fit(points: impl Iterator<Item = Vec2>, equal: bool) -> Self {
        let (mut lo, mut hi) = (Vec2::repeat(f64::INFINITY), Vec2::repeat(f64::NEG_INFINITY));
        for p in points {
            lo = lo.inf(&p);
            hi = hi.sup(&p);
        }
        if !lo.x.is_finite() {
            lo = Vec2::zeros();
            hi = Vec2::repeat(1.0);
        }
        let span = (hi - lo).map(|v| if v > 0.0 { v } else { 1.0 });
        let sx = (W - 2.0 * PAD) / span.x;
        let sy = (H - 2.0 * PAD) / span.y;
        let (sx, sy) = if equal {
            (sx.min(sy), sx.min(sy))
        } else {
            (sx, sy)
        };
        Self {
            x0: lo.x,
            y0: lo.y,
            s: sx,
            sy,
        }
    }

    fn map(&self, p: Vec2) -> (f64, f64) {
        (
            PAD + (p.x - self.x0) * self.s,
            H - PAD - (p.y - self.y0) * self.sy,
        )
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Polylines on a common equal-aspect frame plus labelled point markers.
pub fn trajectory_svg(series: &[Series], markers: &[(String, Vec2)], title: &str) -> String {
    let frame = Frame::fit(
        series
            .iter()
            .flat_map(|s| s.points.iter().copied())
            .chain(markers.iter().map(|m| m.1)),
        true,
    );
    let mut out = String::new();
    header(&mut out, title);
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|p| {
                let (x, y) = frame.map(*p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let tag = if s.closed { "polygon" } else { "polyline" };
        let _ = writeln!(
            out,
            r#"<{tag} points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            W - PAD - 120.0,
            PAD + 16.0 * k as f64,
            escape(&s.label)
        );
    }
    for (label, p) in markers {
        let (x, y) = frame.map(*p);
        let _ = writeln!(
            out,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="3.5" fill="black"/>"#
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            x + 5.0,
            y - 5.0,
            escape(label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Bench trajectory with its feature points, optionally over a target curve.
pub fn overlay_svg(bt: &Trajectory, target: Option<&Trajectory>, title: &str) -> Result<String> {
    let fp = find_feature_points(bt)?;
    let mut series = vec![Series::from_trajectory("BT", bt)];
    if let Some(t) = target {
        series.push(Series::from_trajectory("target", t));
    }
    let markers: Vec<(String, Vec2)> = fp
        .labelled()
        .into_iter()
        .map(|(l, i)| (l.to_string(), bt.points[i]))
        .collect();
    Ok(trajectory_svg(&series, &markers, title))
}

/// Oblique projection used for three or more objectives.
fn project(o: &[f64], lo: &[f64], span: &[f64]) -> Vec2 {
    let n = |k: usize| (o[k] - lo[k]) / span[k];
    match o.len() {
        1 => Vec2::new(n(0), 0.0),
        2 => Vec2::new(n(0), n(1)),
        _ => Vec2::new(n(0) + 0.5 * n(2), n(1) + 0.35 * n(2)),
    }
}

/// Objective scatter: whole population in grey, rank-0 members in colour, knee ringed.
pub fn scatter_svg(population: &[Individual], title: &str) -> Result<String> {
    let live: Vec<&Individual> = population.iter().filter(|i| !i.is_penalized()).collect();
    if live.is_empty() {
        return Err(Error::EmptyArchive);
    }
    let m = live[0].objectives.len();
    let lo: Vec<f64> = (0..m)
        .map(|k| {
            live.iter()
                .map(|i| i.objectives[k])
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let span: Vec<f64> = (0..m)
        .map(|k| {
            let hi = live
                .iter()
                .map(|i| i.objectives[k])
                .fold(f64::NEG_INFINITY, f64::max);
            if hi > lo[k] {
                hi - lo[k]
            } else {
                1.0
            }
        })
        .collect();
    let pts: Vec<Vec2> = live
        .iter()
        .map(|i| project(&i.objectives, &lo, &span))
        .collect();
    let frame = Frame::fit(pts.iter().copied(), false);
    let front: Vec<usize> = (0..live.len()).filter(|&k| live[k].rank == 0).collect();
    let knee = knee_points(
        &front
            .iter()
            .map(|&k| live[k].objectives.clone())
            .collect::<Vec<_>>(),
        1,
    )
    .ok()
    .and_then(|v| v.first().map(|&j| front[j]));

    let mut out = String::new();
    header(&mut out, title);
    let axis = |k: usize| {
        if k < m {
            format!("f[{k}] {:.3}…{:.3}", lo[k], lo[k] + span[k])
        } else {
            String::new()
        }
    };
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        W / 2.0,
        H - 12.0,
        escape(&axis(0))
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(&axis(1))
    );
    if m > 2 {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="40">{}</text>"#,
            PAD,
            escape(&format!("oblique axis: {}", axis(2)))
        );
    }
    for (k, p) in pts.iter().enumerate() {
        let (x, y) = frame.map(*p);
        let (fill, r) = if live[k].rank == 0 {
            (COLORS[0], 3.5)
        } else {
            ("#bbbbbb", 2.5)
        };
        let _ = writeln!(
            out,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r}" fill="{fill}"/>"#
        );
    }
    if let Some(k) = knee {
        let (x, y) = frame.map(pts[k]);
        let _ = writeln!(
            out,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="8" fill="none" stroke="{}" stroke-width="2"/>"#,
            COLORS[1]
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" fill="{}">knee</text>"#,
            x + 10.0,
            y - 8.0,
            COLORS[1]
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Scatter of an archive's population (rank-0 set when the population is absent).
pub fn front_svg(archive: &ParetoArchive, title: &str) -> String {
    let members = if archive.population.is_empty() {
        &archive.individuals
    } else {
        &archive.population
    };
    scatter_svg(members, title).unwrap_or_else(|_| {
        let mut out = String::new();
        header(
            &mut out,
            &format!("{title} (no kinematically valid members)"),
        );
        out.push_str("</svg>\n");
        out
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moo::Evaluated;
    use crate::target::{cycloid_bt_target, CycloidSpec};

    #[test]
    fn overlay_has_markers() {
        let t = cycloid_bt_target(&CycloidSpec::default(), 360).unwrap();
        let svg = overlay_svg(&t, Some(&t), "cycloid").unwrap();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains(">t1<") && svg.contains(">t5<"));
        assert_eq!(svg, overlay_svg(&t, Some(&t), "cycloid").unwrap());
    }

    #[test]
    fn scatter_marks_knee() {
        let mut pop: Vec<Individual> = [[0.0, 1.0], [0.2, 0.2], [1.0, 0.0], [1.0, 1.0]]
            .iter()
            .map(|o| Individual::new(o.to_vec(), Evaluated::new(o.to_vec(), vec![0.0])))
            .collect();
        pop[3].rank = 1;
        let svg = scatter_svg(&pop, "front").unwrap();
        assert!(svg.contains("knee"));
        assert_eq!(scatter_svg(&[], "x"), Err(Error::EmptyArchive));
    }
}
