//! Homography algebra on the normalized image plane.
//!
//! The plane is `[-1, 1]²` with `+x` to the right and `+y` downward, so a
//! raster row index grows with `y`. A [`Homography`] stores only the eight
//! free entries of a 3×3 matrix whose bottom-right entry is fixed at 1.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest homogeneous `w` (and bottom-right matrix entry) treated as finite.
pub const W_EPS: f64 = 1e-8;
/// Determinants at or below this magnitude are singular.
pub const DET_EPS: f64 = 1e-12;
/// Minimum absolute quad area, in normalized units².
pub const AREA_MIN: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousPoint {
    pub x: f64,
    pub y: f64,
    pub w: f64,
}

impl HomogeneousPoint {
    pub fn dehomogenize(self) -> Result<Point> {
        if !(self.w.abs() > W_EPS) {
            return Err(Error::PointAtInfinity { w: self.w });
        }
        Ok(Point::new(self.x / self.w, self.y / self.w))
    }
}

/// Corners of the full source frame, in the order every [`Quad`] follows:
/// top-left, top-right, bottom-right, bottom-left.
pub const CANONICAL_CORNERS: [Point; 4] = [
    Point::new(-1.0, -1.0),
    Point::new(1.0, -1.0),
    Point::new(1.0, 1.0),
    Point::new(-1.0, 1.0),
];

/// A projective transform `[[θ1,θ2,θ3],[θ4,θ5,θ6],[θ7,θ8,1]]`.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 8]", into = "[f64; 8]")]
pub struct Homography {
    theta: [f64; 8],
}

impl fmt::Debug for Homography {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Homography").field(&self.theta).finish()
    }
}

impl fmt::Display for Homography {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.theta.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

impl TryFrom<[f64; 8]> for Homography {
    type Error = Error;

    fn try_from(theta: [f64; 8]) -> Result<Self> {
        Homography::from_theta(theta)
    }
}

impl From<Homography> for [f64; 8] {
    fn from(h: Homography) -> Self {
        h.theta
    }
}

impl Default for Homography {
    fn default() -> Self {
        Homography::IDENTITY
    }
}

impl Homography {
    pub const IDENTITY: Homography = Homography {
        theta: [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
    };

    pub fn from_theta(theta: [f64; 8]) -> Result<Self> {
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::Degenerate("non-finite matrix entry"));
        }
        Ok(Homography { theta })
    }

    /// Builds from a full 3×3 matrix, dividing through by its bottom-right entry.
    pub fn from_matrix(m: [[f64; 3]; 3]) -> Result<Self> {
        let s = m[2][2];
        if !(s.abs() >= W_EPS) {
            return Err(Error::NearDegenerate { value: s });
        }
        Homography::from_theta([
            m[0][0] / s,
            m[0][1] / s,
            m[0][2] / s,
            m[1][0] / s,
            m[1][1] / s,
            m[1][2] / s,
            m[2][0] / s,
            m[2][1] / s,
        ])
    }

    pub fn theta(&self) -> [f64; 8] {
        self.theta
    }

    pub fn matrix(&self) -> [[f64; 3]; 3] {
        let t = &self.theta;
        [[t[0], t[1], t[2]], [t[3], t[4], t[5]], [t[6], t[7], 1.0]]
    }

    pub fn scale(cx: f64, cy: f64) -> Result<Self> {
        if cx == 0.0 || cy == 0.0 {
            return Err(Error::Degenerate("zero scale factor"));
        }
        Homography::from_theta([cx, 0.0, 0.0, 0.0, cy, 0.0, 0.0, 0.0])
    }

    pub fn shear(sx: f64, sy: f64) -> Result<Self> {
        if (sx * sy - 1.0).abs() <= DET_EPS {
            return Err(Error::Degenerate("shear with sx·sy = 1 is singular"));
        }
        Homography::from_theta([1.0, sx, 0.0, sy, 1.0, 0.0, 0.0, 0.0])
    }

    /// Rotation with `sin α` above the diagonal and `-sin α` below it.
    pub fn rotate(alpha: f64) -> Result<Self> {
        let (s, c) = alpha.sin_cos();
        Homography::from_theta([c, s, 0.0, -s, c, 0.0, 0.0, 0.0])
    }

    pub fn perspective(px: f64, py: f64) -> Result<Self> {
        Homography::from_theta([1.0, 0.0, 0.0, 0.0, 1.0, 0.0, px, py])
    }

    pub fn translate(tx: f64, ty: f64) -> Result<Self> {
        Homography::from_theta([1.0, 0.0, tx, 0.0, 1.0, ty, 0.0, 0.0])
    }

    /// Matrix product `self · rhs`: applies `rhs` first, then `self`.
    pub fn compose(&self, rhs: &Homography) -> Result<Self> {
        let a = self.matrix();
        let b = rhs.matrix();
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
            }
        }
        Homography::from_matrix(m)
    }

    pub fn determinant(&self) -> f64 {
        let m = self.matrix();
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Inverse via the adjugate, renormalized to a unit bottom-right entry.
    pub fn invert(&self) -> Result<Self> {
        let det = self.determinant();
        if !(det.abs() > DET_EPS) {
            return Err(Error::Singular { det });
        }
        let m = self.matrix();
        let cof = |r0: usize, r1: usize, c0: usize, c1: usize| {
            m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]
        };
        let adj = [
            [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
            [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
            [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
        ];
        // adj / det, then divided by its own (2,2): the det cancels.
        Homography::from_matrix(adj)
    }

    #[inline]
    pub fn apply_homogeneous(&self, p: Point) -> HomogeneousPoint {
        let t = &self.theta;
        HomogeneousPoint {
            x: t[0] * p.x + t[1] * p.y + t[2],
            y: t[3] * p.x + t[4] * p.y + t[5],
            w: t[6] * p.x + t[7] * p.y + 1.0,
        }
    }

    pub fn apply(&self, p: Point) -> Result<Point> {
        self.apply_homogeneous(p).dehomogenize()
    }

    /// Image of [`CANONICAL_CORNERS`].
    pub fn to_quad(&self) -> Result<Quad> {
        let mut vertices = [Point::default(); 4];
        for (v, c) in vertices.iter_mut().zip(CANONICAL_CORNERS) {
            *v = self
                .apply(c)
                .map_err(|_| Error::Degenerate("quad vertex at infinity"))?;
        }
        Ok(Quad { vertices })
    }

    /// Homogeneous `w` at each canonical corner.
    pub fn corner_weights(&self) -> [f64; 4] {
        CANONICAL_CORNERS.map(|c| self.apply_homogeneous(c).w)
    }

    /// The unique homography taking each canonical corner onto the
    /// corresponding vertex of `quad`.
    pub fn from_quad(quad: &Quad) -> Result<Self> {
        match quad.validate() {
            QuadValidity::Valid => {}
            other => return Err(Error::InvalidQuad(other)),
        }
        // Per correspondence (u, v) -> (x, y):
        //   θ1 u + θ2 v + θ3 - θ7 u x - θ8 v x = x
        //   θ4 u + θ5 v + θ6 - θ7 u y - θ8 v y = y
        let mut a = [[0.0f64; 9]; 8];
        for (k, (src, dst)) in CANONICAL_CORNERS.iter().zip(&quad.vertices).enumerate() {
            let (u, v, x, y) = (src.x, src.y, dst.x, dst.y);
            a[2 * k] = [u, v, 1.0, 0.0, 0.0, 0.0, -u * x, -v * x, x];
            a[2 * k + 1] = [0.0, 0.0, 0.0, u, v, 1.0, -u * y, -v * y, y];
        }
        let theta = solve_augmented(a).ok_or(Error::Degenerate("singular correspondence system"))?;
        Homography::from_theta(theta)
    }
}

/// Gaussian elimination with partial pivoting on an 8×9 augmented system.
fn solve_augmented(mut a: [[f64; 9]; 8]) -> Option<[f64; 8]> {
    const N: usize = 8;
    for col in 0..N {
        let pivot = (col..N).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if !(a[pivot][col].abs() > DET_EPS) {
            return None;
        }
        a.swap(col, pivot);
        for row in col + 1..N {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                let pivot_row = a[col];
                for (v, p) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                    *v -= f * p;
                }
            }
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let mut s = a[row][N];
        for k in row + 1..N {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadValidity {
    Valid,
    NonConvex,
    Degenerate,
}

/// Four vertices ordered like [`CANONICAL_CORNERS`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quad {
    pub vertices: [Point; 4],
}

impl Quad {
    pub const CANONICAL: Quad = Quad {
        vertices: CANONICAL_CORNERS,
    };

    pub fn new(vertices: [Point; 4]) -> Self {
        Quad { vertices }
    }

    pub fn from_coords(c: [f64; 8]) -> Self {
        Quad {
            vertices: [
                Point::new(c[0], c[1]),
                Point::new(c[2], c[3]),
                Point::new(c[4], c[5]),
                Point::new(c[6], c[7]),
            ],
        }
    }

    pub fn coords(&self) -> [f64; 8] {
        let v = &self.vertices;
        [v[0].x, v[0].y, v[1].x, v[1].y, v[2].x, v[2].y, v[3].x, v[3].y]
    }

    /// Shoelace area; positive for the winding of [`CANONICAL_CORNERS`].
    pub fn signed_area(&self) -> f64 {
        polygon_signed_area(&self.vertices)
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn validate(&self) -> QuadValidity {
        let v = &self.vertices;
        if v.iter().any(|p| !p.is_finite()) || self.area() <= AREA_MIN {
            return QuadValidity::Degenerate;
        }
        let mut pos = 0;
        let mut neg = 0;
        for i in 0..4 {
            let a = v[i];
            let b = v[(i + 1) % 4];
            let c = v[(i + 2) % 4];
            let cross = (b.x - a.x) * (c.y - b.y) - (b.y - a.y) * (c.x - b.x);
            if cross > 0.0 {
                pos += 1;
            } else if cross < 0.0 {
                neg += 1;
            }
        }
        if pos == 4 || neg == 4 {
            QuadValidity::Valid
        } else {
            QuadValidity::NonConvex
        }
    }

    pub fn is_valid(&self) -> bool {
        self.validate() == QuadValidity::Valid
    }
}

pub(crate) fn polygon_signed_area(pts: &[Point]) -> f64 {
    let n = pts.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        s += a.x * b.y - b.x * a.y;
    }
    0.5 * s
}
