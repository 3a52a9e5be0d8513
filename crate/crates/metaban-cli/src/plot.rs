//! Self-contained SVG line plots (mean curve plus +-1 std band per series).
//! CSV is the canonical output; these are a convenience, written directly
//! with fixed-precision formatting so identical inputs give identical bytes.

pub struct Series {
    pub label: String,
    /// Mean value per round (index 0 is round 1).
    pub mean: Vec<f64>,
    /// Sample standard deviation per round.
    pub std: Vec<f64>,
}

const WIDTH: f64 = 660.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 34.0;
const MARGIN_B: f64 = 46.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

/// Round a raw tick step to 1/2/5 x 10^k.
fn nice_step(raw: f64) -> f64 {
    if raw <= 0.0 {
        return 1.0;
    }
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let step = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    step * mag
}

pub fn render_regret_plot(series: &[Series], title: &str) -> String {
    let rounds = series.iter().map(|s| s.mean.len()).max().unwrap_or(0);
    let x_max = rounds.max(1) as f64;
    let mut y_max = 0.0f64;
    for s in series {
        for (m, sd) in s.mean.iter().zip(s.std.iter()) {
            y_max = y_max.max(m + sd);
        }
    }
    if y_max <= 0.0 {
        y_max = 1.0;
    }
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = move |t: f64| MARGIN_L + t / x_max * plot_w;
    let sy = move |v: f64| MARGIN_T + (1.0 - v / y_max) * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"20\" font-size=\"14\">{}</text>\n",
        fmt(MARGIN_L),
        title
    ));

    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        fmt(MARGIN_L),
        fmt(HEIGHT - MARGIN_B),
        fmt(WIDTH - MARGIN_R),
        fmt(HEIGHT - MARGIN_B)
    ));
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        fmt(MARGIN_L),
        fmt(MARGIN_T),
        fmt(MARGIN_L),
        fmt(HEIGHT - MARGIN_B)
    ));

    // Ticks (about five per axis).
    let x_step = nice_step(x_max / 5.0);
    let mut tick = x_step;
    while tick <= x_max + 1e-9 {
        let x = sx(tick);
        svg.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n\
             <text x=\"{0}\" y=\"{3}\" text-anchor=\"middle\">{4}</text>\n",
            fmt(x),
            fmt(HEIGHT - MARGIN_B),
            fmt(HEIGHT - MARGIN_B + 5.0),
            fmt(HEIGHT - MARGIN_B + 20.0),
            tick as u64
        ));
        tick += x_step;
    }
    let y_step = nice_step(y_max / 5.0);
    let mut tick = 0.0;
    while tick <= y_max + 1e-9 {
        let y = sy(tick);
        svg.push_str(&format!(
            "<line x1=\"{1}\" y1=\"{0}\" x2=\"{2}\" y2=\"{0}\" stroke=\"black\"/>\n\
             <text x=\"{3}\" y=\"{4}\" text-anchor=\"end\">{5}</text>\n",
            fmt(y),
            fmt(MARGIN_L - 5.0),
            fmt(MARGIN_L),
            fmt(MARGIN_L - 8.0),
            fmt(y + 4.0),
            fmt(tick)
        ));
        tick += y_step;
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">round</text>\n",
        fmt(MARGIN_L + plot_w / 2.0),
        fmt(HEIGHT - 8.0)
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{}\" transform=\"rotate(-90 16 {})\" text-anchor=\"middle\">\
         cumulative regret</text>\n",
        fmt(MARGIN_T + plot_h / 2.0),
        fmt(MARGIN_T + plot_h / 2.0)
    ));

    // Bands then lines, so every line stays visible.
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if s.mean.is_empty() {
            continue;
        }
        let mut band = String::from("<polygon points=\"");
        for (t, (m, sd)) in s.mean.iter().zip(s.std.iter()).enumerate() {
            band.push_str(&format!("{},{} ", fmt(sx((t + 1) as f64)), fmt(sy(m + sd))));
        }
        for (t, (m, sd)) in s.mean.iter().zip(s.std.iter()).enumerate().rev() {
            band.push_str(&format!(
                "{},{} ",
                fmt(sx((t + 1) as f64)),
                fmt(sy((m - sd).max(0.0)))
            ));
        }
        band.push_str(&format!(
            "\" fill=\"{color}\" fill-opacity=\"0.18\" stroke=\"none\"/>\n"
        ));
        svg.push_str(&band);
    }
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if s.mean.is_empty() {
            continue;
        }
        let mut line = String::from("<polyline points=\"");
        for (t, m) in s.mean.iter().enumerate() {
            line.push_str(&format!("{},{} ", fmt(sx((t + 1) as f64)), fmt(sy(*m))));
        }
        line.push_str(&format!(
            "\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n"
        ));
        svg.push_str(&line);
        let ly = MARGIN_T + 14.0 * i as f64 + 10.0;
        svg.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{color}\" \
             stroke-width=\"3\"/>\n<text x=\"{3}\" y=\"{4}\">{5}</text>\n",
            fmt(MARGIN_L + 8.0),
            fmt(ly),
            fmt(MARGIN_L + 28.0),
            fmt(MARGIN_L + 34.0),
            fmt(ly + 4.0),
            s.label
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_wellformed_svg() {
        let s = vec![
            Series {
                label: "a".into(),
                mean: vec![0.5, 1.0, 1.4],
                std: vec![0.1, 0.2, 0.2],
            },
            Series {
                label: "b".into(),
                mean: vec![1.0, 2.0, 3.0],
                std: vec![0.0, 0.0, 0.0],
            },
        ];
        let svg = render_regret_plot(&s, "test");
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("<polygon").count(), 2);
        // Deterministic output.
        assert_eq!(svg, render_regret_plot(&s, "test"));
    }

    #[test]
    fn nice_steps_are_125() {
        assert_eq!(nice_step(0.7), 1.0);
        assert_eq!(nice_step(1.3), 2.0);
        assert_eq!(nice_step(3.9), 5.0);
        assert_eq!(nice_step(7.0), 10.0);
        assert_eq!(nice_step(34.0), 50.0);
    }
}
