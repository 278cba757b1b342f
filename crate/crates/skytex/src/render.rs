//! Static SVG renders of fields and binned reconstructions.
//!
//! Components are drawn in the rotated basis `(𝒳, 𝒴, 𝒵)`. Every color uses
//! one fixed diverging scale on `[−1, 1]`: −1 is blue `#3b4cc0`, 0 is light
//! grey `#f2f2f2`, +1 is red `#b40426`, linear in RGB between them. Values
//! outside the range are clamped.
//!
//! * `quiver`: one arrow per ion (or bin) along the in-plane components
//!   `(𝒳, 𝒴)`, colored by `𝒵`, with a dot of the same color at its base.
//! * `heatmap-x|y|z`: one disk per ion (or annular sector per bin) colored
//!   by that component. Empty bins are white.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use skytex_core::measurement::BinnedField;
use skytex_core::spin::lab_to_rotated;
use skytex_core::{BlochField, IonCrystal, Vec3};

/// What to draw.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum Style {
    /// Arrows.
    Quiver,
    /// `𝒳` component.
    #[value(name = "heatmap-x")]
    HeatmapX,
    /// `𝒴` component.
    #[value(name = "heatmap-y")]
    HeatmapY,
    /// `𝒵` component.
    #[value(name = "heatmap-z")]
    HeatmapZ,
}

impl Style {
    /// All styles.
    pub const ALL: [Style; 4] = [Style::Quiver, Style::HeatmapX, Style::HeatmapY, Style::HeatmapZ];

    /// File-name stem.
    pub fn name(self) -> &'static str {
        match self {
            Style::Quiver => "quiver",
            Style::HeatmapX => "heatmap-x",
            Style::HeatmapY => "heatmap-y",
            Style::HeatmapZ => "heatmap-z",
        }
    }

    fn axis(self) -> Option<usize> {
        match self {
            Style::Quiver => None,
            Style::HeatmapX => Some(0),
            Style::HeatmapY => Some(1),
            Style::HeatmapZ => Some(2),
        }
    }
}

const LOW: [f64; 3] = [59.0, 76.0, 192.0];
const MID: [f64; 3] = [242.0, 242.0, 242.0];
const HIGH: [f64; 3] = [180.0, 4.0, 38.0];

/// Color of `v` on the fixed `[−1, 1]` scale, as `#rrggbb`.
pub fn color(v: f64) -> String {
    let v = if v.is_nan() { 0.0 } else { v.clamp(-1.0, 1.0) };
    let (a, b, t) = if v < 0.0 { (MID, LOW, -v) } else { (MID, HIGH, v) };
    let c: Vec<u8> = (0..3).map(|i| (a[i] + (b[i] - a[i]) * t).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Rotated-basis component `axis` of every reconstructed bin.
pub fn binned_component(binned: &BinnedField, axis: usize) -> Vec<Option<f64>> {
    binned.bins().iter().map(|b| b.u.map(|u| lab_to_rotated(u).to_array()[axis])).collect()
}

const SIZE: f64 = 600.0;
const CENTER: f64 = 280.0;
const PLOT_RADIUS: f64 = 250.0;

struct Canvas {
    body: String,
    scale: f64,
}

impl Canvas {
    fn new(radius: f64) -> Self {
        Canvas { body: String::new(), scale: PLOT_RADIUS / radius.max(f64::MIN_POSITIVE) }
    }

    fn at(&self, x: f64, y: f64) -> (f64, f64) {
        (CENTER + x * self.scale, CENTER - y * self.scale)
    }

    fn arrow(&mut self, base: (f64, f64), dir: (f64, f64), length_px: f64, fill: &str) {
        let (x, y) = self.at(base.0, base.1);
        let _ = writeln!(self.body, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.00" fill="{fill}"/>"#);
        let (dx, dy) = (dir.0 * length_px, -dir.1 * length_px);
        let len = dx.hypot(dy);
        if len < 0.5 {
            return;
        }
        let (x0, y0, x1, y1) = (x - 0.5 * dx, y - 0.5 * dy, x + 0.5 * dx, y + 0.5 * dy);
        let (ux, uy) = (dx / len, dy / len);
        let head = (0.35 * len).min(6.0);
        let (bx, by) = (x1 - ux * head, y1 - uy * head);
        let (px, py) = (-uy * 0.5 * head, ux * 0.5 * head);
        let _ = writeln!(
            self.body,
            r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{bx:.2}" y2="{by:.2}" stroke="{fill}" stroke-width="1.60"/>"#
        );
        let _ = writeln!(
            self.body,
            r##"<polygon points="{x1:.2},{y1:.2} {:.2},{:.2} {:.2},{:.2}" fill="{fill}" stroke="#333333" stroke-width="0.30"/>"##,
            bx + px,
            by + py,
            bx - px,
            by - py
        );
    }

    fn finish(self, title: &str, label: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
        );
        let _ = writeln!(s, r##"<rect width="{SIZE}" height="{SIZE}" fill="#ffffff"/>"##);
        let _ = writeln!(
            s,
            r##"<circle cx="{CENTER}" cy="{CENTER}" r="{PLOT_RADIUS}" fill="none" stroke="#999999" stroke-width="0.50"/>"##
        );
        let _ = writeln!(s, r#"<text x="20" y="580" font-family="sans-serif" font-size="14">{title}</text>"#);
        s.push_str(&self.body);
        // Color bar: 40 steps from +1 (top) to −1 (bottom).
        let (x, top, h) = (555.0, 40.0, 440.0);
        for k in 0..40 {
            let v = 1.0 - (k as f64 + 0.5) / 20.0;
            let _ = writeln!(
                s,
                r#"<rect x="{x}" y="{:.2}" width="16" height="{:.2}" fill="{}"/>"#,
                top + k as f64 * h / 40.0,
                h / 40.0 + 0.1,
                color(v)
            );
        }
        for (v, y) in [("+1", top), ("0", top + 0.5 * h), ("-1", top + h)] {
            let _ =
                writeln!(s, r#"<text x="575" y="{:.2}" font-family="sans-serif" font-size="11">{v}</text>"#, y + 4.0);
        }
        let _ = writeln!(s, r#"<text x="555" y="28" font-family="sans-serif" font-size="12">{label}</text>"#);
        s.push_str("</svg>\n");
        s
    }
}

fn label(style: Style) -> &'static str {
    match style {
        Style::Quiver | Style::HeatmapZ => "𝒵",
        Style::HeatmapX => "𝒳",
        Style::HeatmapY => "𝒴",
    }
}

/// Renders a per-ion field.
pub fn render_field(crystal: &IonCrystal, field: &BlochField, style: Style) -> String {
    let mut c = Canvas::new(crystal.radius());
    let rot: Vec<Vec3> = field.lab_vectors().into_iter().map(lab_to_rotated).collect();
    let spacing_px = crystal.spacing() * c.scale;
    for (ion, u) in crystal.ions().iter().zip(&rot) {
        let (x, y) = ion.xy();
        match style.axis() {
            None => {
                let len = (0.9 * spacing_px).min(40.0);
                c.arrow((x, y), (u.x, u.y), len, &color(u.z));
            }
            Some(a) => {
                let (px, py) = c.at(x, y);
                let r = (0.45 * spacing_px).clamp(1.0, 30.0);
                let _ = writeln!(
                    c.body,
                    r#"<circle cx="{px:.2}" cy="{py:.2}" r="{r:.2}" fill="{}"/>"#,
                    color(u.to_array()[a])
                );
            }
        }
    }
    c.finish(&format!("{} · {} ions", style.name(), crystal.len()), label(style))
}

/// Renders a binned reconstruction.
pub fn render_binned(binned: &BinnedField, style: Style) -> String {
    let mut c = Canvas::new(binned.radius());
    let g = binned.grid();
    let dr = binned.radius() / g.n_radial as f64;
    let dphi = TAU / g.n_azimuthal as f64;
    for (k, bin) in binned.bins().iter().enumerate() {
        let (ring, sector) = (k / g.n_azimuthal, k % g.n_azimuthal);
        let rot = bin.u.map(lab_to_rotated);
        match style.axis() {
            Some(a) => {
                let (r0, r1) = (ring as f64 * dr, (ring + 1) as f64 * dr);
                let (a0, a1) = (sector as f64 * dphi, (sector + 1) as f64 * dphi);
                let mut pts = Vec::new();
                for i in 0..=8 {
                    let t = a0 + (a1 - a0) * i as f64 / 8.0;
                    pts.push(c.at(r1 * t.cos(), r1 * t.sin()));
                }
                for i in (0..=8).rev() {
                    let t = a0 + (a1 - a0) * i as f64 / 8.0;
                    pts.push(c.at(r0 * t.cos(), r0 * t.sin()));
                }
                let pts: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let fill = rot.map_or_else(|| "#ffffff".to_string(), |u| color(u.to_array()[a]));
                let _ = writeln!(
                    c.body,
                    r##"<polygon points="{}" fill="{fill}" stroke="#cccccc" stroke-width="0.30"/>"##,
                    pts.join(" ")
                );
            }
            None => {
                if let Some(u) = rot {
                    let (x, y) = (bin.r_center * bin.phi_center.cos(), bin.r_center * bin.phi_center.sin());
                    let size = dr.min(bin.r_center * dphi) * c.scale;
                    c.arrow((x, y), (u.x, u.y), (0.9 * size).min(40.0), &color(u.z));
                }
            }
        }
    }
    c.finish(&format!("{} · {} bins", style.name(), g.len()), label(style))
}

#[cfg(test)]
mod tests {
    use super::*;
    use skytex_core::dynamics::closed_form_at_angle;
    use skytex_core::measurement::{bin_field, BinGrid};
    use skytex_core::spin::rotated_to_lab;
    use skytex_core::{generate_crystal, Basis};
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn scale_endpoints() {
        assert_eq!(color(-1.0), "#3b4cc0");
        assert_eq!(color(0.0), "#f2f2f2");
        assert_eq!(color(1.0), "#b40426");
        assert_eq!(color(7.0), color(1.0));
    }

    #[test]
    fn uniform_up_field_draws_one_hue() {
        let c = generate_crystal(24.0, 150.0).unwrap();
        let f = BlochField::uniform(c.len(), rotated_to_lab(Vec3::Z), Basis::Lab).unwrap();
        let svg = render_field(&c, &f, Style::Quiver);
        let fills: std::collections::BTreeSet<&str> = svg
            .match_indices(r#"<circle cx"#)
            .map(|(i, _)| {
                let s = &svg[i..];
                let k = s.find("fill=\"").unwrap() + 6;
                &s[k..k + 7]
            })
            .filter(|f| f.starts_with('#'))
            .collect();
        assert_eq!(fills.len(), 1);
        assert!(fills.contains(color(1.0).as_str()));
        assert!(!svg.contains("<line"), "no in-plane arrows expected");
    }

    #[test]
    fn skyrmion_projections_are_dipoles() {
        let c = generate_crystal(24.0, 150.0).unwrap();
        let f = closed_form_at_angle(&c, FRAC_PI_2, PI);
        let b = bin_field(&c, &f, BinGrid::default()).unwrap();
        let na = b.grid().n_azimuthal;
        for axis in [0, 1] {
            let v = binned_component(&b, axis);
            // Ring 0 holds only the centre ion, which has no partner.
            for (k, x) in v.iter().enumerate().skip(na) {
                let opposite = (k / na) * na + (k % na + na / 2) % na;
                match (x, v[opposite]) {
                    (Some(a), Some(b)) => assert!((a + b).abs() < 1e-6, "bin {k}: {a} vs {b}"),
                    (None, None) => {}
                    other => panic!("bin {k}: occupancy differs {other:?}"),
                }
            }
        }
    }

    #[test]
    fn render_is_deterministic_and_self_contained() {
        let c = generate_crystal(24.0, 150.0).unwrap();
        let f = closed_form_at_angle(&c, FRAC_PI_2, PI);
        let b = bin_field(&c, &f, BinGrid::default()).unwrap();
        for s in Style::ALL {
            let a = render_binned(&b, s);
            assert_eq!(a, render_binned(&b, s));
            assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
            assert!(!a.contains("href"));
        }
    }
}
