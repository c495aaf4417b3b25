//! Static SVG rendering of the planar dynamical system: distinguished
//! curves, stationary points with their classifications, the separatrices
//! when they are obtainable, and a fan of sample orbits.
//!
//! Everything is drawn with fixed-precision pixel coordinates from
//! deterministic seeds, so identical settings produce identical bytes.

use std::fmt::Write as _;

use henon_core::phase::{a0_location, apriori_box, m0_location};
use henon_core::{
    geometry, integrate_phase, stable_manifold_a0, stationary_points, unstable_manifold_o,
    PhaseConfig, PhasePoint, PhaseStops, PhaseTrajectory, ProblemParams,
};

use crate::report::fmt_f64;

const W: f64 = 880.0;
const H: f64 = 640.0;
const ML: f64 = 62.0;
const MR: f64 = 22.0;
const MT: f64 = 46.0;
const MB: f64 = 52.0;

struct Frame {
    x_min: f64,
    x_max: f64,
    z_min: f64,
    z_max: f64,
}

impl Frame {
    fn sx(&self, x: f64) -> f64 {
        ML + (x - self.x_min) / (self.x_max - self.x_min) * (W - ML - MR)
    }

    fn sy(&self, z: f64) -> f64 {
        MT + (self.z_max - z) / (self.z_max - self.z_min) * (H - MT - MB)
    }

    fn contains(&self, x: f64, z: f64) -> bool {
        x.is_finite()
            && z.is_finite()
            && x >= self.x_min
            && x <= self.x_max
            && z >= self.z_min
            && z <= self.z_max
    }
}

pub struct Portrait {
    pub svg: String,
    /// Key-value notes for the run summary (separatrix availability).
    pub notes: Vec<(String, String)>,
}

/// Multi-segment path through the in-frame points; out-of-frame stretches
/// break the polyline instead of being drawn clipped to the border.
fn path_d(frame: &Frame, points: impl IntoIterator<Item = (f64, f64)>) -> String {
    let mut d = String::new();
    let mut pen_down = false;
    for (x, z) in points {
        if !frame.contains(x, z) {
            pen_down = false;
            continue;
        }
        let cmd = if pen_down { 'L' } else { 'M' };
        let _ = write!(d, "{cmd}{:.2} {:.2}", frame.sx(x), frame.sy(z));
        pen_down = true;
    }
    d
}

fn traj_points(traj: &PhaseTrajectory) -> Vec<(f64, f64)> {
    traj.points.iter().map(|p| (p.x, p.z)).collect()
}

fn tick_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let n = raw / mag;
    let m = if n < 1.5 {
        1.0
    } else if n < 3.5 {
        2.0
    } else if n < 7.5 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

pub fn render(params: &ProblemParams, fan: usize) -> Portrait {
    let (bx, bz) = apriori_box(params);
    let frame = Frame {
        x_min: -0.6 * bx,
        x_max: 1.35 * bx,
        z_min: -0.12 * bz,
        z_max: 1.3 * bz,
    };
    let geo = geometry(params);
    let points = stationary_points(params);
    let config = PhaseConfig::default();
    let mut notes = Vec::new();

    let mut svg = String::with_capacity(64 * 1024);
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"Inter, Helvetica, Arial, sans-serif\">"
    );
    let _ = writeln!(svg, "<rect width=\"{W}\" height=\"{H}\" fill=\"#ffffff\"/>");
    let (pw, ph) = (W - ML - MR, H - MT - MB);
    let _ = writeln!(
        svg,
        "<defs><clipPath id=\"plot\"><rect x=\"{ML}\" y=\"{MT}\" width=\"{pw}\" height=\"{ph}\"/></clipPath></defs>"
    );
    let _ = writeln!(
        svg,
        "<rect x=\"{ML}\" y=\"{MT}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"#c8c8c8\"/>"
    );

    // Title line with the parameters and the two critical exponents.
    let title = format!(
        "operator={}  lambda={}  Lambda={}  N={}  p={}  a={}   (p_serrin={}, p_pseudo={})",
        params.variant.as_str(),
        fmt_f64(params.lambda),
        fmt_f64(params.big_lambda),
        params.dim,
        fmt_f64(params.p),
        fmt_f64(params.a),
        fmt_f64(params.exponents.p_serrin),
        fmt_f64(params.exponents.p_pseudo),
    );
    let _ = writeln!(
        svg,
        "<text x=\"{ML}\" y=\"28\" font-size=\"15\" fill=\"#222\">{title}</text>"
    );

    // Axes and ticks.
    let _ = writeln!(
        svg,
        "<g clip-path=\"url(#plot)\"><line x1=\"{:.2}\" y1=\"{MT}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#999\"/><line x1=\"{ML}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#999\"/></g>",
        frame.sx(0.0),
        frame.sx(0.0),
        MT + ph,
        frame.sy(0.0),
        ML + pw,
        frame.sy(0.0),
    );
    let xs = tick_step(frame.x_max - frame.x_min);
    let mut x = (frame.x_min / xs).ceil() * xs;
    while x <= frame.x_max {
        let px = frame.sx(x);
        let _ = writeln!(
            svg,
            "<line x1=\"{px:.2}\" y1=\"{:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"#c8c8c8\"/><text x=\"{px:.2}\" y=\"{:.2}\" font-size=\"12\" fill=\"#555\" text-anchor=\"middle\">{}</text>",
            MT + ph,
            MT + ph + 6.0,
            MT + ph + 20.0,
            tick_label(x)
        );
        x += xs;
    }
    let zs = tick_step(frame.z_max - frame.z_min);
    let mut z = (frame.z_min / zs).ceil() * zs;
    while z <= frame.z_max {
        let py = frame.sy(z);
        let _ = writeln!(
            svg,
            "<line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{ML}\" y2=\"{py:.2}\" stroke=\"#c8c8c8\"/><text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" fill=\"#555\" text-anchor=\"end\">{}</text>",
            ML - 6.0,
            ML - 9.0,
            py + 4.0,
            tick_label(z)
        );
        z += zs;
    }
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"13\" fill=\"#333\" text-anchor=\"middle\">x</text><text x=\"16\" y=\"{:.2}\" font-size=\"13\" fill=\"#333\">z</text>",
        ML + pw / 2.0,
        H - 12.0,
        MT + ph / 2.0,
    );

    // A-priori confinement box.
    let _ = writeln!(
        svg,
        "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"#e0a800\" stroke-dasharray=\"8 4\" clip-path=\"url(#plot)\"/>",
        frame.sx(0.0),
        frame.sy(bz),
        frame.sx(bx) - frame.sx(0.0),
        frame.sy(0.0) - frame.sy(bz),
    );

    // Distinguished curves: the xdot = 0 parabola of the lower branch, the
    // zdot = 0 vertical, and the branch-switching line with its tangency
    // point P.
    let n_curve = 240;
    let pi1: Vec<(f64, f64)> = (0..=n_curve)
        .map(|i| {
            let x = frame.x_min + (frame.x_max - frame.x_min) * i as f64 / n_curve as f64;
            (x, geo.pi1(x))
        })
        .collect();
    let _ = writeln!(
        svg,
        "<path d=\"{}\" fill=\"none\" stroke=\"#2ca02c\" stroke-width=\"1.4\"/>",
        path_d(&frame, pi1)
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{:.2}\" y1=\"{MT}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#17becf\" stroke-dasharray=\"2 3\" clip-path=\"url(#plot)\"/>",
        frame.sx(geo.pi2_x),
        frame.sx(geo.pi2_x),
        MT + ph,
    );
    let ell: Vec<(f64, f64)> = (0..=n_curve)
        .map(|i| {
            let x = frame.x_min + (frame.x_max - frame.x_min) * i as f64 / n_curve as f64;
            (x, geo.ell(x))
        })
        .collect();
    let _ = writeln!(
        svg,
        "<path d=\"{}\" fill=\"none\" stroke=\"#9467bd\" stroke-dasharray=\"6 3\"/>",
        path_d(&frame, ell)
    );
    if frame.contains(geo.p_point.0, geo.p_point.1) {
        let _ = writeln!(
            svg,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"#9467bd\"/><text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" fill=\"#9467bd\">P</text>",
            frame.sx(geo.p_point.0),
            frame.sy(geo.p_point.1),
            frame.sx(geo.p_point.0) + 6.0,
            frame.sy(geo.p_point.1) - 6.0,
        );
    }

    // Sample orbit fan: deterministic seeds on two rings around the interior
    // stationary point (frame center when it lies below the axis), each
    // integrated both ways.
    let (m0x, m0z) = m0_location(params);
    let (cx, cz) = if m0z > 0.0 {
        (m0x, m0z)
    } else {
        (0.5 * bx, 0.5 * bz)
    };
    let stops = PhaseStops {
        x_hi: Some(frame.x_max + 0.3),
        x_lo: Some(frame.x_min - 0.3),
        a0_ball: None,
        m0_ball: None,
        section_x: None,
    };
    let _ = writeln!(svg, "<g clip-path=\"url(#plot)\" fill=\"none\" stroke=\"#9a9a9a\" stroke-width=\"1\" opacity=\"0.8\">");
    for i in 0..fan {
        let ang = std::f64::consts::TAU * (i as f64 + 0.5) / fan as f64;
        let ring = if i % 2 == 0 { 0.45 } else { 0.85 };
        let seed_x = cx * (1.0 + 0.75 * ring * ang.cos());
        let seed_z = cz * (1.0 + 0.90 * ring * ang.sin());
        if seed_x <= 1e-6 || seed_z <= 1e-9 {
            continue;
        }
        let seed = PhasePoint {
            x: seed_x,
            z: seed_z,
            t: 0.0,
        };
        for backward in [false, true] {
            let dur = if backward { 10.0 } else { 16.0 };
            let traj = integrate_phase(params, seed, dur, backward, &stops, &config);
            let _ = writeln!(svg, "<path d=\"{}\"/>", path_d(&frame, traj_points(&traj)));
        }
    }
    let _ = writeln!(svg, "</g>");

    // Separatrices: the orbit leaving O along its unstable direction and,
    // when it is numerically obtainable, the orbit entering A0 along its
    // stable direction.
    match unstable_manifold_o(params, &config) {
        Ok(traj) => {
            let _ = writeln!(
                svg,
                "<path id=\"gamma\" d=\"{}\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\" clip-path=\"url(#plot)\"/>",
                path_d(&frame, traj_points(&traj))
            );
            notes.push((
                "gamma".into(),
                format!("drawn: termination {:?}", traj.termination),
            ));
        }
        Err(e) => notes.push(("gamma".into(), format!("unavailable: {e}"))),
    }
    match stable_manifold_a0(params, &config) {
        Ok(traj) => {
            let _ = writeln!(
                svg,
                "<path id=\"upsilon\" d=\"{}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" clip-path=\"url(#plot)\"/>",
                path_d(&frame, traj_points(&traj))
            );
            notes.push((
                "upsilon".into(),
                format!("drawn: termination {:?}", traj.termination),
            ));
        }
        Err(e) => notes.push(("upsilon".into(), format!("unavailable: {e}"))),
    }

    // Stationary points with their classifications.
    let a0 = a0_location(params);
    for sp in &points {
        let (x, z) = sp.location;
        if !frame.contains(x, z) {
            continue;
        }
        let label = format!("{:?} ({:?})", sp.name, sp.classification);
        // Keep the A0 label clear of the O label along the x axis.
        let below = z == 0.0 && (x - a0.0).abs() < 1e-12;
        let (dx, dy) = if below { (-8.0, 22.0) } else { (7.0, -8.0) };
        let _ = writeln!(
            svg,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"#073642\"/><text x=\"{:.2}\" y=\"{:.2}\" font-size=\"13\" fill=\"#073642\">{label}</text>",
            frame.sx(x),
            frame.sy(z),
            frame.sx(x) + dx,
            frame.sy(z) + dy,
        );
    }

    // Legend.
    let legend: [(&str, &str, &str); 7] = [
        ("#2ca02c", "", "pi1: xdot = 0 (lower branch)"),
        ("#17becf", "2 3", "pi2: zdot = 0"),
        ("#9467bd", "6 3", "ell: branch switch"),
        ("#e0a800", "8 4", "a-priori box"),
        ("#d62728", "", "Gamma: unstable orbit of O"),
        ("#1f77b4", "", "Upsilon: stable orbit of A0"),
        ("#9a9a9a", "", "sample orbits"),
    ];
    let lx = W - MR - 235.0;
    let mut ly = MT + 14.0;
    let _ = writeln!(
        svg,
        "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"229\" height=\"{}\" fill=\"#ffffff\" opacity=\"0.88\" stroke=\"#d8d8d8\"/>",
        lx - 6.0,
        ly - 12.0,
        legend.len() * 18 + 8
    );
    for (color, dash, text) in legend {
        let dash_attr = if dash.is_empty() {
            String::new()
        } else {
            format!(" stroke-dasharray=\"{dash}\"")
        };
        let _ = writeln!(
            svg,
            "<line x1=\"{lx:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{color}\" stroke-width=\"2\"{dash_attr}/><text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" fill=\"#333\">{text}</text>",
            lx + 26.0,
            lx + 32.0,
            ly + 4.0,
        );
        ly += 18.0;
    }

    svg.push_str("</svg>\n");
    Portrait { svg, notes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use henon_core::OperatorVariant;

    fn c1(p: f64) -> ProblemParams {
        ProblemParams::new(OperatorVariant::Plus, 1.0, 1.5, 4, p, 0.0).unwrap()
    }

    #[test]
    fn portrait_is_deterministic_and_labels_regimes() {
        let a = render(&c1(4.0), 6);
        let b = render(&c1(4.0), 6);
        assert_eq!(a.svg, b.svg);
        assert!(a.svg.contains("Source"), "M0 should be a source at p=4");
        assert!(a.svg.contains("Saddle"));
        // The stable orbit of A0 spirals into M0 backward in this regime, so
        // it is reported unavailable rather than drawn.
        assert!(a
            .notes
            .iter()
            .any(|(k, v)| k == "upsilon" && v.starts_with("unavailable")));

        let sink = render(&c1(6.0), 6);
        assert!(sink.svg.contains("Sink"));
        assert!(sink.svg.contains("id=\"upsilon\""));

        let center = render(&c1(5.0), 6);
        assert!(center.svg.contains("Center"));
    }

    #[test]
    fn tick_labels_are_trimmed() {
        assert_eq!(tick_label(0.30000000000000004), "0.3");
        assert_eq!(tick_label(-0.0001), "0");
        assert_eq!(tick_label(2.0), "2");
    }
}
