use std::f64::consts::PI;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::contour_bd::ContourEnsemble;
use crate::disagreement::DisagreementLoop;
use crate::error::Result;
use crate::geometry::{arrangement_faces, BoundaryPiece, ConvexDomain, Point, PolygonalConfiguration, Segment};
use crate::gibbs::ColouredConfiguration;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvgStyle {
    /// Canvas width in pixels; the height follows the domain's aspect.
    pub width: f64,
    pub stroke_width: f64,
    pub black: String,
    pub edge: String,
    pub positive: String,
    pub negative: String,
}

impl Default for SvgStyle {
    fn default() -> Self {
        SvgStyle {
            width: 600.0,
            stroke_width: 1.5,
            black: "#222222".into(),
            edge: "#000000".into(),
            positive: "#c0392b".into(),
            negative: "#2471a3".into(),
        }
    }
}

/// Something that can be drawn in a domain.
#[derive(Debug, Clone, Copy)]
pub enum Figure<'a> {
    /// Edges only.
    Configuration(&'a PolygonalConfiguration),
    /// Black faces filled, edges stroked.
    Coloured(&'a ColouredConfiguration),
    /// Contours stroked, regions of odd nesting depth filled.
    Ensemble(&'a ContourEnsemble),
    /// Positive and negative parts in their own colours.
    Loop(&'a DisagreementLoop),
}

struct Canvas {
    min: Point,
    max_y: f64,
    scale: f64,
}

impl Canvas {
    fn px(&self, p: Point) -> (f64, f64) {
        ((p.x - self.min.x) * self.scale, (self.max_y - p.y) * self.scale)
    }

    fn pt(&self, p: Point) -> String {
        let (x, y) = self.px(p);
        format!("{x:.3},{y:.3}")
    }
}

fn domain_element(c: &Canvas, d: &ConvexDomain, attrs: &str) -> String {
    match d {
        ConvexDomain::Disk { center, radius } => {
            let (x, y) = c.px(*center);
            format!("<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"{:.3}\" {attrs}/>", radius * c.scale)
        }
        ConvexDomain::Polygon(v) => {
            let pts: Vec<String> = v.iter().map(|&p| c.pt(p)).collect();
            format!("<polygon points=\"{}\" {attrs}/>", pts.join(" "))
        }
    }
}

fn segments_path(c: &Canvas, segs: &[Segment]) -> String {
    let mut d = String::new();
    for s in segs {
        let _ = write!(d, "M{}L{}", c.pt(s.a), c.pt(s.b));
    }
    d
}

fn piece_path(c: &Canvas, piece: &BoundaryPiece, d: &mut String) {
    match *piece {
        BoundaryPiece::Line { b, .. } => {
            let _ = write!(d, "L{}", c.pt(b));
        }
        BoundaryPiece::Arc { a, b, center, radius, ccw } => {
            let ang = |p: Point| (p.y - center.y).atan2(p.x - center.x);
            let mut span = if ccw { ang(b) - ang(a) } else { ang(a) - ang(b) };
            if span <= 0.0 {
                span += 2.0 * PI;
            }
            let r = radius * c.scale;
            // the vertical flip turns counterclockwise into the positive SVG sweep
            let _ = write!(d, "A{r:.3},{r:.3} 0 {} {} {}", u8::from(span > PI), u8::from(ccw), c.pt(b));
        }
    }
}

/// Renders a figure in its domain. Output depends only on the inputs.
pub fn export_svg(domain: &ConvexDomain, figure: Figure<'_>, style: &SvgStyle) -> Result<String> {
    domain.validate()?;
    let bb = domain.bbox();
    let scale = style.width / bb.width();
    let height = bb.height() * scale;
    let c = Canvas { min: bb.min, max_y: bb.max.y, scale };
    let sw = style.stroke_width;
    let mut body = String::new();
    let edges = |segs: &[Segment], colour: &str| {
        format!(
            "<path d=\"{}\" fill=\"none\" stroke=\"{colour}\" stroke-width=\"{sw}\" stroke-linecap=\"round\"/>\n",
            segments_path(&c, segs)
        )
    };
    match figure {
        Figure::Configuration(cfg) => body.push_str(&edges(&cfg.edges, &style.edge)),
        Figure::Coloured(cfg) => {
            if cfg.base.is_empty() {
                if cfg.is_black(0) {
                    body.push_str(&domain_element(&c, domain, &format!("fill=\"{}\"", style.black)));
                    body.push('\n');
                }
            } else {
                let arr = arrangement_faces(&cfg.base, domain)?;
                for face in arr.faces.iter().filter(|f| cfg.is_black(f.parity)) {
                    let mut d = String::new();
                    for cyc in &face.cycles {
                        if let Some(first) = cyc.pieces.first() {
                            let _ = write!(d, "M{}", c.pt(first.start()));
                            for p in &cyc.pieces {
                                piece_path(&c, p, &mut d);
                            }
                            d.push('Z');
                        }
                    }
                    let _ = writeln!(body, "<path d=\"{d}\" fill=\"{}\" fill-rule=\"evenodd\"/>", style.black);
                }
                body.push_str(&edges(&cfg.base.edges, &style.edge));
            }
        }
        Figure::Ensemble(e) => {
            if !e.is_empty() {
                let mut d = String::new();
                for ct in &e.contours {
                    let v = ct.vertices();
                    let _ = write!(d, "M{}", c.pt(v[0]));
                    for &p in &v[1..] {
                        let _ = write!(d, "L{}", c.pt(p));
                    }
                    d.push('Z');
                }
                let _ = writeln!(
                    body,
                    "<path d=\"{d}\" fill=\"{}\" fill-rule=\"evenodd\" stroke=\"{}\" stroke-width=\"{sw}\"/>",
                    style.black, style.edge
                );
            }
        }
        Figure::Loop(l) => {
            body.push_str(&edges(&l.positive, &style.positive));
            body.push_str(&edges(&l.negative, &style.negative));
        }
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.3}\" height=\"{height:.3}\" viewBox=\"0 0 {:.3} {height:.3}\">",
        style.width, style.width
    );
    out.push_str(&domain_element(&c, domain, "fill=\"#ffffff\" stroke=\"#888888\" stroke-width=\"1\""));
    out.push('\n');
    out.push_str(&body);
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::Contour;

    fn square_contour() -> Contour {
        let v = vec![Point::new(-0.5, -0.5), Point::new(0.5, -0.5), Point::new(0.5, 0.5), Point::new(-0.5, 0.5)];
        Contour::new(v, None).unwrap()
    }

    #[test]
    fn empty_figure_is_the_domain_alone() {
        let d = ConvexDomain::square(1.0).unwrap();
        let s = export_svg(&d, Figure::Ensemble(&ContourEnsemble::default()), &SvgStyle::default()).unwrap();
        assert_eq!(s.matches("<polygon").count(), 1);
        assert!(!s.contains("<path"));
        let disk = ConvexDomain::disk(Point::ORIGIN, 1.0).unwrap();
        let s =
            export_svg(&disk, Figure::Configuration(&PolygonalConfiguration::empty()), &SvgStyle::default()).unwrap();
        assert!(s.contains("<circle"));
    }

    #[test]
    fn square_contour_gives_one_filled_square() {
        let d = ConvexDomain::square(1.0).unwrap();
        let cfg = ContourEnsemble::new(vec![square_contour()]).unwrap().to_configuration();
        let col = ColouredConfiguration::new(cfg, true);
        let s = export_svg(&d, Figure::Coloured(&col), &SvgStyle::default()).unwrap();
        let fills: Vec<&str> = s.lines().filter(|l| l.contains("fill-rule")).collect();
        assert_eq!(fills.len(), 1);
        assert_eq!(fills[0].matches('M').count(), 1);
        assert_eq!(fills[0].matches('L').count(), 4);
        // the opposite colouring fills the frame with a hole
        let s = export_svg(&d, Figure::Coloured(&col.flipped()), &SvgStyle::default()).unwrap();
        let fills: Vec<&str> = s.lines().filter(|l| l.contains("fill-rule")).collect();
        assert_eq!(fills[0].matches('M').count(), 2);
    }

    #[test]
    fn output_is_byte_identical() {
        let d = ConvexDomain::disk(Point::ORIGIN, 1.0).unwrap();
        let e = ContourEnsemble::new(vec![square_contour()]).unwrap();
        let col = ColouredConfiguration::new(e.to_configuration(), false);
        let st = SvgStyle::default();
        assert_eq!(
            export_svg(&d, Figure::Coloured(&col), &st).unwrap(),
            export_svg(&d, Figure::Coloured(&col), &st).unwrap()
        );
        assert!(export_svg(&d, Figure::Coloured(&col), &st).unwrap().contains('A'));
    }
}
