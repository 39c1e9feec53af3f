//! Polar overlay of a laser scan and a predicted obstacle scan.

use std::f64::consts::TAU;
use std::fmt::Write as _;

const SIZE: f64 = 640.0;
const MARGIN: f64 = 40.0;

pub struct PolarPlot<'a> {
    pub laser: &'a [f64],
    pub prediction: Option<&'a [f64]>,
    /// Field of view in radians; rays are spread as the scanner spreads them.
    pub fov: f64,
    pub max_range: f64,
}

fn ray_angle(i: usize, n: usize, fov: f64) -> f64 {
    if fov >= TAU {
        -TAU / 2.0 + i as f64 * TAU / n as f64
    } else if n == 1 {
        0.0
    } else {
        -fov / 2.0 + i as f64 * fov / (n - 1) as f64
    }
}

/// Ring spacing giving three to eight rings up to `extent`.
fn ring_step(extent: f64) -> f64 {
    [0.5, 1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .find(|s| extent / s <= 8.0)
        .unwrap_or(10.0)
}

impl PolarPlot<'_> {
    pub fn render(&self) -> String {
        let c = SIZE / 2.0;
        let extent = self
            .laser
            .iter()
            .chain(self.prediction.unwrap_or(&[]))
            .fold(0.0_f64, |m, &v| m.max(v.min(self.max_range)))
            .max(1.0);
        let scale = (c - MARGIN) / extent;
        // Heading points up; counter-clockwise rays go to the left.
        let point = |i: usize, n: usize, r: f64| {
            let a = ray_angle(i, n, self.fov);
            let r = r.clamp(0.0, self.max_range) * scale;
            (c - r * a.sin(), c - r * a.cos())
        };
        let polyline = |values: &[f64], id: &str, color: &str| {
            let pts: Vec<String> = values
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let (x, y) = point(i, values.len(), v);
                    format!("{x:.2},{y:.2}")
                })
                .collect();
            format!(
                "<polyline id=\"{id}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                pts.join(" ")
            )
        };

        let mut s = String::new();
        let _ = writeln!(
            s,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">"
        );
        let _ = writeln!(s, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
        let _ = writeln!(s, "<g id=\"rings\" stroke=\"#ccc\" fill=\"none\">");
        let step = ring_step(extent);
        let mut r = step;
        while r <= extent + 1e-9 {
            let _ = writeln!(s, "<circle cx=\"{c}\" cy=\"{c}\" r=\"{:.2}\"/>", r * scale);
            let _ = writeln!(
                s,
                "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" fill=\"#888\" stroke=\"none\">{r} m</text>",
                c + 3.0,
                c - r * scale - 2.0
            );
            r += step;
        }
        let _ = writeln!(s, "</g>");
        if self.fov < TAU {
            for a in [-self.fov / 2.0, self.fov / 2.0] {
                let (x, y) = (c - extent * scale * a.sin(), c - extent * scale * a.cos());
                let _ = writeln!(
                    s,
                    "<line class=\"fov\" x1=\"{c}\" y1=\"{c}\" x2=\"{x:.2}\" y2=\"{y:.2}\" stroke=\"#ddd\"/>"
                );
            }
        }
        s.push_str(&polyline(self.laser, "laser", "#d62728"));
        if let Some(p) = self.prediction {
            s.push_str(&polyline(p, "prediction", "#1f77b4"));
        }
        let _ = writeln!(
            s,
            "<circle id=\"robot\" cx=\"{c}\" cy=\"{c}\" r=\"4\" fill=\"black\"/>"
        );
        let _ = writeln!(s, "<g id=\"legend\" font-size=\"12\">");
        let _ = writeln!(
            s,
            "<text x=\"10\" y=\"18\" fill=\"#d62728\">laser scan</text>"
        );
        if self.prediction.is_some() {
            let _ = writeln!(
                s,
                "<text x=\"10\" y=\"34\" fill=\"#1f77b4\">predicted obstacle distance</text>"
            );
        }
        let _ = writeln!(s, "</g>");
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn points(svg: &str, id: &str) -> Vec<(f64, f64)> {
        let tag = format!("id=\"{id}\"");
        let line = svg.lines().find(|l| l.contains(&tag)).unwrap();
        let start = line.find("points=\"").unwrap() + 8;
        let end = line[start..].find('"').unwrap() + start;
        line[start..end]
            .split(' ')
            .map(|p| {
                let (x, y) = p.split_once(',').unwrap();
                (x.parse().unwrap(), y.parse().unwrap())
            })
            .collect()
    }

    #[test]
    fn one_vertex_per_reading() {
        let laser = vec![5.0; 128];
        let pred = vec![3.0; 128];
        let svg = PolarPlot {
            laser: &laser,
            prediction: Some(&pred),
            fov: FRAC_PI_2,
            max_range: 30.0,
        }
        .render();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(points(&svg, "laser").len(), 128);
        assert_eq!(points(&svg, "prediction").len(), 128);
        assert_eq!(svg.matches("class=\"fov\"").count(), 2);
    }

    #[test]
    fn centre_ray_points_up() {
        let laser = vec![2.0, 4.0, 2.0];
        let svg = PolarPlot {
            laser: &laser,
            prediction: None,
            fov: FRAC_PI_2,
            max_range: 30.0,
        }
        .render();
        let pts = points(&svg, "laser");
        assert!((pts[1].0 - SIZE / 2.0).abs() < 1e-9);
        assert!(pts[1].1 < SIZE / 2.0);
        // First ray is the clockwise edge, drawn to the right.
        assert!(pts[0].0 > SIZE / 2.0);
        assert!(!svg.contains("id=\"prediction\""));
    }
}
