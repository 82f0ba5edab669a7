//! Target functions `f = |f|e^{iφ}` and the discretized domains they are tabulated over.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{AmplitudeVector, Real};

/// Discretized domain. Points are enumerated in a fixed order; that order is the state index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum Domain {
    /// Integers `lo..=hi`.
    Interval1d { lo: i64, hi: i64 },
    /// Midpoints of `n` cells of width `δ = 1/n` covering `[-1/2, 1/2]`;
    /// with `half` only the `n/2` positive ones.
    Scaled1d { n: usize, half: bool },
    /// Nonnegative lattice `[0, side-1]^3` without the origin, `x0` slowest.
    Grid3d { side: usize },
    /// Midpoints of an `nx × ny` grid over `[x0,x1) × [y0,y1)`, `x` slowest.
    Grid2d {
        nx: usize,
        ny: usize,
        x0: f64,
        x1: f64,
        y0: f64,
        y1: f64,
    },
}

/// Coordinates of one domain point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Point<T> {
    Int(i64),
    Real(T),
    Plane(T, T),
    Lattice([i64; 3]),
}

impl<T: Real> Point<T> {
    /// One-dimensional coordinate, if the point has one.
    pub fn coordinate(&self) -> Option<T> {
        match *self {
            Point::Int(x) => T::from_i64(x),
            Point::Real(x) => Some(x),
            _ => None,
        }
    }

    /// Euclidean length of the coordinate vector.
    pub fn radius(&self) -> T {
        match *self {
            Point::Int(x) => T::lit(x.unsigned_abs() as f64),
            Point::Real(x) => x.abs(),
            Point::Plane(x, y) => x.hypot(y),
            Point::Lattice(v) => {
                let s: i64 = v.iter().map(|c| c * c).sum();
                T::lit(s as f64).sqrt()
            }
        }
    }
}

impl Domain {
    /// Domain of the (unscaled) interval `[1, N]`.
    pub fn interval(n: i64) -> Self {
        Domain::Interval1d { lo: 1, hi: n }
    }

    pub fn scaled(n: usize) -> Self {
        Domain::Scaled1d { n, half: false }
    }

    pub fn scaled_half(n: usize) -> Self {
        Domain::Scaled1d { n, half: true }
    }

    /// Grid used by the two-dimensional mesh example, `[0,1] × [-4,4]`.
    pub fn mesh2d(nx: usize, ny: usize) -> Self {
        Domain::Grid2d {
            nx,
            ny,
            x0: 0.0,
            x1: 1.0,
            y0: -4.0,
            y1: 4.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Domain::Interval1d { lo, hi } => hi > lo,
            Domain::Scaled1d { n, .. } => n >= 2 && n % 2 == 0,
            Domain::Grid3d { side } => side >= 2,
            Domain::Grid2d {
                nx,
                ny,
                x0,
                x1,
                y0,
                y1,
            } => nx * ny > 1 && x1 > x0 && y1 > y0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Precondition(format!("invalid domain {self:?}")))
        }
    }

    pub fn size(&self) -> usize {
        match *self {
            Domain::Interval1d { lo, hi } => (hi - lo + 1).max(0) as usize,
            Domain::Scaled1d { n, half } => {
                if half {
                    n / 2
                } else {
                    n
                }
            }
            Domain::Grid3d { side } => side * side * side - 1,
            Domain::Grid2d { nx, ny, .. } => nx * ny,
        }
    }

    /// Grid spacing of scaled domains.
    pub fn delta(&self) -> Option<f64> {
        match *self {
            Domain::Scaled1d { n, .. } => Some(1.0 / n as f64),
            _ => None,
        }
    }

    pub fn point<T: Real>(&self, i: usize) -> Point<T> {
        match *self {
            Domain::Interval1d { lo, .. } => Point::Int(lo + i as i64),
            Domain::Scaled1d { n, half } => {
                let k = if half { i + n / 2 } else { i };
                let x = (T::lit(k as f64) + T::lit(0.5)) / T::lit(n as f64) - T::lit(0.5);
                Point::Real(x)
            }
            Domain::Grid3d { side } => {
                let j = i + 1;
                Point::Lattice([
                    (j / (side * side)) as i64,
                    ((j / side) % side) as i64,
                    (j % side) as i64,
                ])
            }
            Domain::Grid2d {
                ny,
                nx,
                x0,
                x1,
                y0,
                y1,
            } => {
                let (ix, iy) = (i / ny, i % ny);
                let x = x0 + (x1 - x0) * (ix as f64 + 0.5) / nx as f64;
                let y = y0 + (y1 - y0) * (iy as f64 + 0.5) / ny as f64;
                Point::Plane(T::lit(x), T::lit(y))
            }
        }
    }

    pub fn points<T: Real>(&self) -> Vec<Point<T>> {
        (0..self.size()).map(|i| self.point(i)).collect()
    }
}

/// Magnitudes and phases given pointwise by index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct TableTarget<T> {
    pub magnitudes: Vec<T>,
    pub phases: Vec<T>,
}

/// Header line of the table text format.
pub const TABLE_HEADER: &str = "# qrs-target v1";

impl<T: Real> TableTarget<T> {
    /// Parses `index, magnitude[, phase]` rows after the version header.
    /// Indices must cover `0..len` exactly once, in any order.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == TABLE_HEADER => {}
            _ => return Err(Error::Parse(format!("missing header `{TABLE_HEADER}`"))),
        }
        let body: String = lines.collect::<Vec<_>>().join("\n");
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(body.as_bytes());
        let mut rows: Vec<(usize, T, T)> = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            if rec.len() == 1 && rec[0].is_empty() {
                continue;
            }
            if rec.len() < 2 || rec.len() > 3 {
                return Err(Error::Parse(format!("expected 2 or 3 fields, got {}", rec.len())));
            }
            let idx: usize = rec[0]
                .parse()
                .map_err(|_| Error::Parse(format!("bad index `{}`", &rec[0])))?;
            let num = |s: &str| -> Result<T> {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .map(T::lit)
                    .ok_or_else(|| Error::Parse(format!("bad number `{s}`")))
            };
            let mag = num(&rec[1])?;
            if mag < T::zero() {
                return Err(Error::Parse(format!("negative magnitude at index {idx}")));
            }
            let phase = if rec.len() == 3 { num(&rec[2])? } else { T::zero() };
            rows.push((idx, mag, phase));
        }
        rows.sort_by_key(|r| r.0);
        for (pos, r) in rows.iter().enumerate() {
            if r.0 != pos {
                return Err(Error::Parse(format!(
                    "indices must cover 0..{} exactly once",
                    rows.len()
                )));
            }
        }
        if rows.len() < 2 {
            return Err(Error::Parse("table needs at least two rows".into()));
        }
        Ok(Self {
            magnitudes: rows.iter().map(|r| r.1).collect(),
            phases: rows.iter().map(|r| r.2).collect(),
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{TABLE_HEADER}\n");
        for (i, (m, p)) in self.magnitudes.iter().zip(&self.phases).enumerate() {
            out.push_str(&format!("{i}, {m}, {p}\n"));
        }
        out
    }

    /// Domain the table is indexed over.
    pub fn domain(&self) -> Domain {
        Domain::Interval1d {
            lo: 0,
            hi: self.magnitudes.len() as i64 - 1,
        }
    }
}

/// Catalog of target functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", bound = "T: Real")]
pub enum TargetSpec<T> {
    /// `1/|x|^β`.
    PowerLaw { beta: T },
    /// `exp(-(x-a)²/σ²)`.
    Gaussian { sigma: T, center: T },
    /// `tanh(x)`, stored as magnitude and sign phase.
    Tanh,
    /// `exp(-β|x|)`.
    Exponential { beta: T },
    /// The oscillatory two-dimensional example `f(x, y)`.
    Mesh2d,
    /// Values read from a table.
    Table(TableTarget<T>),
}

impl<T: Real> TargetSpec<T> {
    pub fn name(&self) -> &'static str {
        match self {
            TargetSpec::PowerLaw { .. } => "powerLaw",
            TargetSpec::Gaussian { .. } => "gaussian",
            TargetSpec::Tanh => "tanh",
            TargetSpec::Exponential { .. } => "exponential",
            TargetSpec::Mesh2d => "mesh2d",
            TargetSpec::Table(_) => "customTable",
        }
    }

    /// `(|f|, φ)` at domain point `p` with index `index`.
    pub fn polar(&self, index: usize, p: &Point<T>) -> Result<(T, T)> {
        let undefined = || Error::Domain(format!("{} undefined at {p:?}", self.name()));
        let real_coord = || p.coordinate().ok_or_else(undefined);
        let (mag, phase) = match self {
            TargetSpec::PowerLaw { beta } => {
                if matches!(p, Point::Plane(..)) {
                    return Err(undefined());
                }
                let r = p.radius();
                if r == T::zero() {
                    return Err(undefined());
                }
                (r.powf(-*beta), T::zero())
            }
            TargetSpec::Gaussian { sigma, center } => {
                let z = (real_coord()? - *center) / *sigma;
                ((-z * z).exp(), T::zero())
            }
            TargetSpec::Tanh => {
                let x = real_coord()?;
                let t = x.tanh();
                (t.abs(), if t < T::zero() { T::PI() } else { T::zero() })
            }
            TargetSpec::Exponential { beta } => ((-*beta * real_coord()?.abs()).exp(), T::zero()),
            TargetSpec::Mesh2d => match *p {
                Point::Plane(x, y) => (mesh2d_eval(x, y)?, T::zero()),
                _ => return Err(undefined()),
            },
            TargetSpec::Table(t) => {
                let m = *t.magnitudes.get(index).ok_or_else(undefined)?;
                (m, t.phases[index])
            }
        };
        if !mag.is_finite() || mag < T::zero() {
            return Err(Error::Domain(format!("non-finite magnitude at {p:?}")));
        }
        Ok((mag, phase))
    }

    pub fn magnitude(&self, index: usize, p: &Point<T>) -> Result<T> {
        self.polar(index, p).map(|v| v.0)
    }
}

/// `(|f(x)|, φ(x))` for every point of `d`.
pub fn tabulate_polar<T: Real>(t: &TargetSpec<T>, d: &Domain) -> Result<Vec<(T, T)>> {
    d.validate()?;
    let vals = (0..d.size())
        .map(|i| t.polar(i, &d.point(i)))
        .collect::<Result<Vec<_>>>()?;
    if vals.iter().all(|v| v.0 == T::zero()) {
        return Err(Error::DegenerateInput(format!(
            "{} vanishes on the whole domain",
            t.name()
        )));
    }
    Ok(vals)
}

/// Unnormalized amplitudes `|f(x)|e^{iφ(x)}`.
pub fn tabulate<T: Real>(t: &TargetSpec<T>, d: &Domain) -> Result<AmplitudeVector<T>> {
    Ok(AmplitudeVector::from_polar(tabulate_polar(t, d)?))
}

/// `N_f² = Σ_x |f(x)|²`.
pub fn norm_squared<T: Real>(t: &TargetSpec<T>, d: &Domain) -> Result<T> {
    Ok(tabulate_polar(t, d)?.iter().map(|v| v.0 * v.0).sum())
}

/// The oscillatory example on `[0,1] × [-4,4]`.
pub fn mesh2d_eval<T: Real>(x: T, y: T) -> Result<T> {
    let inside = x >= T::zero() && x <= T::one() && y >= T::lit(-4.0) && y <= T::lit(4.0);
    if !inside {
        return Err(Error::Domain(format!("({x}, {y}) outside [0,1]×[-4,4]")));
    }
    let one = T::one();
    let s = x * x + y * x;
    let a = (-x * y + y.sin()).exp() * (x * (one - x).powi(4)).sin();
    let b = (T::lit(9.0) * s).sin() / T::lit(9.0);
    let c = (T::lit(16.0) * s).sin() / T::lit(16.0);
    Ok((a + b + c).abs())
}

/// Extends a half-domain state (`x > 0`) to the symmetric domain.
/// `odd` applies a sign flip on the negative side, as for `tanh`.
pub fn sign_extend<T: Real>(half: &AmplitudeVector<T>, odd: bool) -> AmplitudeVector<T> {
    let s = T::one() / T::lit(2.0).sqrt();
    let sign = if odd { -s } else { s };
    let mut entries: Vec<Complex<T>> = half.entries().iter().rev().map(|c| c * sign).collect();
    entries.extend(half.entries().iter().map(|c| c * s));
    AmplitudeVector::new(entries)
}
