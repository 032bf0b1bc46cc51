//! Colourings, black areas, Hamiltonians and boundary-condition predicates.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::geometry::{arrangement_faces, ConvexDomain, Point, PolygonalConfiguration};

/// Smallest vertex angle accepted by [`phi_energy`].
pub const MIN_VERTEX_ANGLE: f64 = 1e-12;

/// A configuration with one of its two parity colourings. With `flip` unset
/// the reference face (the one touching the boundary just after boundary
/// parameter 0) is black.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ColouredConfiguration {
    pub base: PolygonalConfiguration,
    pub flip: bool,
}

impl ColouredConfiguration {
    pub fn new(base: PolygonalConfiguration, flip: bool) -> Self {
        ColouredConfiguration { base, flip }
    }

    /// Colouring whose reference face has the given colour.
    pub fn with_outer(base: PolygonalConfiguration, outer: Colour) -> Self {
        ColouredConfiguration { base, flip: outer == Colour::White }
    }

    pub fn flipped(&self) -> Self {
        ColouredConfiguration { base: self.base.clone(), flip: !self.flip }
    }

    pub fn outer_colour(&self) -> Colour {
        if self.flip {
            Colour::White
        } else {
            Colour::Black
        }
    }

    /// Whether a face of the given crossing parity is black.
    pub fn is_black(&self, parity: u8) -> bool {
        (parity & 1 == 0) != self.flip
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Colour {
    Black,
    White,
}

/// Boundary regime of a chain or predicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    #[default]
    None,
    Empty,
    Black,
    White,
}

impl FromStr for BoundaryCondition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(BoundaryCondition::None),
            "empty" => Ok(BoundaryCondition::Empty),
            "black" => Ok(BoundaryCondition::Black),
            "white" => Ok(BoundaryCondition::White),
            other => param(format!("unknown boundary condition '{other}'")),
        }
    }
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BoundaryCondition::None => "none",
            BoundaryCondition::Empty => "empty",
            BoundaryCondition::Black => "black",
            BoundaryCondition::White => "white",
        };
        f.write_str(s)
    }
}

/// Area and length couplings of a Gibbs modification together with the
/// auxiliary rates of the filtered dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha: f64,
    pub beta: f64,
    pub a: f64,
    pub b: f64,
}

impl ModelParams {
    pub fn new(alpha: f64, beta: f64, a: f64, b: f64) -> Result<Self> {
        let p = ModelParams { alpha, beta, a, b };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let ModelParams { alpha, beta, a, b } = *self;
        if ![alpha, beta, a, b].iter().all(|x| x.is_finite()) {
            return param("model parameters must be finite");
        }
        if a < 0.0 || b < 0.0 || alpha + a < 0.0 || beta + b < 0.0 {
            return param(format!(
                "need a >= 0, b >= 0, alpha + a >= 0, beta + b >= 0; got alpha={alpha}, beta={beta}, a={a}, b={b}"
            ));
        }
        Ok(())
    }
}

/// Total area of black faces.
pub fn black_area(cfg: &ColouredConfiguration, domain: &ConvexDomain) -> Result<f64> {
    if cfg.base.is_empty() {
        return Ok(if cfg.flip { 0.0 } else { domain.area() });
    }
    let arr = arrangement_faces(&cfg.base, domain)?;
    Ok(arr.faces.iter().filter(|f| cfg.is_black(f.parity)).map(|f| f.area).sum())
}

/// `alpha A(black) + beta length`.
pub fn hamiltonian(cfg: &ColouredConfiguration, params: &ModelParams, domain: &ConvexDomain) -> Result<f64> {
    let area = if params.alpha == 0.0 { 0.0 } else { black_area(cfg, domain)? };
    Ok(params.alpha * area + params.beta * cfg.base.total_length())
}

/// Contour energy: twice the length plus the log edge lengths minus the log
/// sines of the vertex angles.
pub fn phi_energy(vertices: &[Point]) -> Result<f64> {
    let n = vertices.len();
    if n < 3 {
        return Err(Error::Singular(format!("a contour needs at least 3 vertices, got {n}")));
    }
    let mut e = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let len = a.dist(b);
        if !(len > 0.0) {
            return Err(Error::Singular(format!("edge {i} has zero length")));
        }
        e += 2.0 * len + len.ln();
    }
    for i in 0..n {
        let x = vertices[i];
        let u = vertices[(i + n - 1) % n] - x;
        let w = vertices[(i + 1) % n] - x;
        let s = u.cross(w).abs() / (u.norm() * w.norm());
        let angle = s.clamp(0.0, 1.0).asin();
        if !(angle >= MIN_VERTEX_ANGLE) {
            return Err(Error::Singular(format!("vertex {i} has a degenerate angle")));
        }
        e -= s.ln();
    }
    Ok(e)
}

/// Empty boundary: no vertex on the boundary. Black or white: additionally
/// the outer face has that colour.
pub fn boundary_condition(cfg: &ColouredConfiguration, domain: &ConvexDomain, bd: BoundaryCondition) -> bool {
    let clear = !cfg.base.touches_boundary(domain);
    match bd {
        BoundaryCondition::None => true,
        BoundaryCondition::Empty => clear,
        BoundaryCondition::Black => clear && cfg.outer_colour() == Colour::Black,
        BoundaryCondition::White => clear && cfg.outer_colour() == Colour::White,
    }
}
