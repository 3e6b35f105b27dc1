//! Minimal static SVG line plots: one polyline per selected series, axes
//! with tick labels, and a legend. No styling knobs beyond a title; the
//! output is deterministic for a given trajectory.

use thiserror::Error;

use crate::sim::Trajectory;

#[derive(Debug, Error)]
pub enum SvgError {
    #[error("trajectory lacks series `{0}`")]
    MissingSeries(String),
    #[error("nothing to plot")]
    Empty,
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 784.0;
const TOP: f64 = 32.0;
const BOTTOM: f64 = 440.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f",
];

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if !(1e-3..1e4).contains(&a) {
        return format!("{v:.2e}");
    }
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

/// Render the named series of a trajectory as an SVG document.
pub fn line_plot(
    traj: &Trajectory,
    vars: &[String],
    title: &str,
) -> Result<String, SvgError> {
    if vars.is_empty() || traj.times.is_empty() {
        return Err(SvgError::Empty);
    }
    let mut series = Vec::new();
    for v in vars {
        let s = traj
            .series(v)
            .ok_or_else(|| SvgError::MissingSeries(v.clone()))?;
        series.push((v.as_str(), s));
    }

    let t0 = traj.times[0];
    let t1 = *traj.times.last().unwrap();
    let t_span = if t1 > t0 { t1 - t0 } else { 1.0 };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (_, s) in &series {
        for v in *s {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 1.0 };
    let (lo, hi) = (lo - pad, hi + pad);

    let sx = |t: f64| LEFT + (t - t0) / t_span * (RIGHT - LEFT);
    let sy = |v: f64| BOTTOM - (v - lo) / (hi - lo) * (BOTTOM - TOP);

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    out.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        (LEFT + RIGHT) / 2.0,
        escape(title)
    ));

    // Axes with five ticks per side.
    out.push_str(&format!(
        "<line x1=\"{LEFT}\" y1=\"{BOTTOM}\" x2=\"{RIGHT}\" y2=\"{BOTTOM}\" stroke=\"black\"/>\n"
    ));
    out.push_str(&format!(
        "<line x1=\"{LEFT}\" y1=\"{TOP}\" x2=\"{LEFT}\" y2=\"{BOTTOM}\" stroke=\"black\"/>\n"
    ));
    for i in 0..=4 {
        let frac = f64::from(i) / 4.0;
        let x = LEFT + frac * (RIGHT - LEFT);
        out.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{BOTTOM}\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"black\"/>\n",
            BOTTOM + 5.0
        ));
        out.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            BOTTOM + 18.0,
            tick_label(t0 + frac * t_span)
        ));
        let y = BOTTOM - frac * (BOTTOM - TOP);
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y:.2}\" x2=\"{LEFT}\" y2=\"{y:.2}\" stroke=\"black\"/>\n",
            LEFT - 5.0
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>\n",
            LEFT - 8.0,
            y + 4.0,
            tick_label(lo + frac * (hi - lo))
        ));
    }
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">t</text>\n",
        (LEFT + RIGHT) / 2.0,
        HEIGHT - 6.0
    ));

    for (k, (name, s)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let points: Vec<String> = traj
            .times
            .iter()
            .zip(*s)
            .map(|(t, v)| format!("{:.2},{:.2}", sx(*t), sy(*v)))
            .collect();
        out.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            points.join(" ")
        ));
        let ly = TOP + 14.0 + 16.0 * k as f64;
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{ly:.2}\" x2=\"{}\" y2=\"{ly:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            RIGHT - 96.0,
            RIGHT - 72.0
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{:.2}\">{}</text>\n",
            RIGHT - 66.0,
            ly + 4.0,
            escape(name)
        ));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Trajectory {
        Trajectory {
            names: vec!["a".into(), "b".into()],
            times: vec![0.0, 1.0, 2.0],
            values: vec![vec![0.0, 1.0, 0.5], vec![2.0, 2.0, 2.0]],
            event_marks: Vec::new(),
        }
    }

    #[test]
    fn plot_has_one_polyline_per_series_and_a_legend() {
        let svg = line_plot(&toy(), &["a".to_string(), "b".to_string()], "toy").unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert!(svg.contains(">a</text>"));
        assert!(svg.contains(">b</text>"));
        assert!(svg.contains(">toy</text>"));
        // Deterministic output.
        assert_eq!(
            svg,
            line_plot(&toy(), &["a".to_string(), "b".to_string()], "toy").unwrap()
        );
    }

    #[test]
    fn plot_coordinates_stay_inside_the_canvas() {
        let svg = line_plot(&toy(), &["a".to_string()], "").unwrap();
        let points = svg
            .split("points=\"")
            .nth(1)
            .unwrap()
            .split('"')
            .next()
            .unwrap();
        for pair in points.split(' ') {
            let (x, y) = pair.split_once(',').unwrap();
            let x: f64 = x.parse().unwrap();
            let y: f64 = y.parse().unwrap();
            assert!((0.0..=WIDTH).contains(&x));
            assert!((0.0..=HEIGHT).contains(&y));
        }
    }

    #[test]
    fn missing_series_and_titles_are_handled() {
        assert!(matches!(
            line_plot(&toy(), &["zz".to_string()], ""),
            Err(SvgError::MissingSeries(_))
        ));
        assert!(matches!(line_plot(&toy(), &[], ""), Err(SvgError::Empty)));
        let svg = line_plot(&toy(), &["a".to_string()], "a < b & c").unwrap();
        assert!(svg.contains("a &lt; b &amp; c"));
    }
}
