//! Reference functions `g ≥ |f|` built from disjoint pieces, and the two-stage
//! preparation of `ψ_g` (coarse state over pieces, then each piece's profile).

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{pow2, AmplitudeVector, Real};
use crate::targets::{mesh2d_eval, Domain, Point, TargetSpec};

/// Subdomain covered by one piece.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase", bound = "T: Real")]
pub enum Region<T> {
    /// Half-open range of domain indices.
    #[serde(rename_all = "camelCase")]
    Indices { start: usize, end: usize },
    /// Coordinate interval on a one-dimensional domain.
    #[serde(rename_all = "camelCase")]
    Interval {
        lo: T,
        hi: T,
        lo_closed: bool,
        hi_closed: bool,
    },
    /// Lattice points with `lo ≤ max_i |x_i| < hi`.
    #[serde(rename_all = "camelCase")]
    Shell { lo: i64, hi: i64 },
    /// Rectangle `[x0,x1) × [y0,y1)`; the flags close the upper edges.
    #[serde(rename_all = "camelCase")]
    Cell {
        x0: T,
        x1: T,
        y0: T,
        y1: T,
        x_closed: bool,
        y_closed: bool,
    },
}

impl<T: Real> Region<T> {
    /// Closed-open interval `[lo, hi)`.
    pub fn half_open(lo: T, hi: T) -> Self {
        Region::Interval {
            lo,
            hi,
            lo_closed: true,
            hi_closed: false,
        }
    }

    pub fn contains(&self, index: usize, p: &Point<T>) -> bool {
        match *self {
            Region::Indices { start, end } => index >= start && index < end,
            Region::Interval {
                lo,
                hi,
                lo_closed,
                hi_closed,
            } => match p.coordinate() {
                Some(x) => {
                    let above = if lo_closed { x >= lo } else { x > lo };
                    let below = if hi_closed { x <= hi } else { x < hi };
                    above && below
                }
                None => false,
            },
            Region::Shell { lo, hi } => match *p {
                Point::Lattice(v) => {
                    let m = v.iter().map(|c| c.abs()).max().unwrap_or(0);
                    m >= lo && m < hi
                }
                _ => false,
            },
            Region::Cell {
                x0,
                x1,
                y0,
                y1,
                x_closed,
                y_closed,
            } => match *p {
                Point::Plane(x, y) => {
                    let in_x = x >= x0 && (x < x1 || (x_closed && x <= x1));
                    let in_y = y >= y0 && (y < y1 || (y_closed && y <= y1));
                    in_x && in_y
                }
                _ => false,
            },
        }
    }
}

/// Profile of a piece on its subdomain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "camelCase", bound = "T: Real")]
pub enum PieceKind<T> {
    Constant { level: T },
    /// `scale · exp(-rate · |x − origin|)`.
    Exponential { scale: T, rate: T, origin: T },
}

impl<T: Real> PieceKind<T> {
    pub fn value(&self, p: &Point<T>) -> T {
        match *self {
            PieceKind::Constant { level } => level,
            PieceKind::Exponential {
                scale,
                rate,
                origin,
            } => {
                let dist = match p.coordinate() {
                    Some(x) => (x - origin).abs(),
                    None => (p.radius() - origin).abs(),
                };
                scale * (-rate * dist).exp()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ReferencePiece<T> {
    pub range: Region<T>,
    #[serde(flatten)]
    pub kind: PieceKind<T>,
}

/// `g = Σ_μ g_μ` over pairwise disjoint subdomains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent, bound = "T: Real")]
pub struct ReferenceSpec<T> {
    pub pieces: Vec<ReferencePiece<T>>,
}

/// Which piece owns each domain point, and `g` there.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment<T> {
    pub piece: Vec<usize>,
    pub value: Vec<T>,
}

impl<T: Real> ReferenceSpec<T> {
    pub fn new(pieces: Vec<ReferencePiece<T>>) -> Self {
        Self { pieces }
    }

    /// A single constant piece over the whole domain.
    pub fn constant(level: T, d: &Domain) -> Self {
        Self::new(vec![ReferencePiece {
            range: Region::Indices {
                start: 0,
                end: d.size(),
            },
            kind: PieceKind::Constant { level },
        }])
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    /// Maps every point to its unique piece. Fails on uncovered or doubly covered points
    /// and on non-positive reference values.
    pub fn assign(&self, d: &Domain) -> Result<Assignment<T>> {
        if self.pieces.is_empty() {
            return Err(Error::DegenerateInput("reference has no pieces".into()));
        }
        d.validate()?;
        let n = d.size();
        let mut piece = Vec::with_capacity(n);
        let mut value = Vec::with_capacity(n);
        for i in 0..n {
            let p = d.point::<T>(i);
            let mut owner = None;
            for (mu, pc) in self.pieces.iter().enumerate() {
                if pc.range.contains(i, &p) {
                    if owner.is_some() {
                        return Err(Error::Precondition(format!(
                            "point {i} lies in two pieces"
                        )));
                    }
                    owner = Some(mu);
                }
            }
            let mu = owner
                .ok_or_else(|| Error::Precondition(format!("point {i} ({p:?}) is not covered")))?;
            let g = self.pieces[mu].kind.value(&p);
            if !(g > T::zero()) || !g.is_finite() {
                return Err(Error::Precondition(format!(
                    "reference value {g} at point {i} is not positive"
                )));
            }
            piece.push(mu);
            value.push(g);
        }
        Ok(Assignment { piece, value })
    }

    /// `N_g² = Σ_x g(x)²`.
    pub fn norm_squared(&self, d: &Domain) -> Result<T> {
        Ok(self.assign(d)?.value.iter().map(|g| *g * *g).sum())
    }
}

/// Outcome of a dominance check.
#[derive(Clone, Debug, PartialEq)]
pub enum Dominance<T> {
    Ok,
    Violation { index: usize, f: T, g: T },
}

impl<T> Dominance<T> {
    pub fn is_ok(&self) -> bool {
        matches!(self, Dominance::Ok)
    }
}

/// Checks `g(x) ≥ |f(x)|` at every point, reporting the first violation.
pub fn validate_dominance<T: Real>(
    g: &ReferenceSpec<T>,
    f: &TargetSpec<T>,
    d: &Domain,
) -> Result<Dominance<T>> {
    let a = g.assign(d)?;
    for (i, gv) in a.value.iter().enumerate() {
        let fv = f.magnitude(i, &d.point(i))?;
        if fv > *gv {
            return Ok(Dominance::Violation {
                index: i,
                f: fv,
                g: *gv,
            });
        }
    }
    Ok(Dominance::Ok)
}

/// Amplitudes of the coarse state over pieces, `c_μ = N_{g_μ}` (unnormalized).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CoarseState<T> {
    pub coefficients: Vec<T>,
}

impl<T: Real> CoarseState<T> {
    pub fn norm_squared(&self) -> T {
        self.coefficients.iter().map(|c| *c * *c).sum()
    }

    /// Angles of the R_Y ladder: rotation `k` splits piece `k` off the remaining weight.
    pub fn ladder_angles(&self) -> Vec<T> {
        let two = T::lit(2.0);
        let mut rest = self.norm_squared();
        let mut out = Vec::new();
        for c in self.coefficients.iter().take(self.coefficients.len().saturating_sub(1)) {
            let ratio = if rest > T::zero() {
                (*c / rest.sqrt()).min(T::one())
            } else {
                T::zero()
            };
            out.push(two * ratio.asin());
            rest -= *c * *c;
            rest = rest.max(T::zero());
        }
        out
    }

    /// Normalized amplitudes produced by a ladder of R_Y angles.
    pub fn from_ladder(angles: &[T]) -> Vec<T> {
        let two = T::lit(2.0);
        let mut carry = T::one();
        let mut out = Vec::with_capacity(angles.len() + 1);
        for a in angles {
            out.push(carry * (*a / two).sin());
            carry = carry * (*a / two).cos();
        }
        out.push(carry);
        out
    }
}

/// `c_μ = (Σ_{x∈D_μ} g_μ(x)²)^{1/2}` for each piece.
pub fn coarse_coefficients<T: Real>(g: &ReferenceSpec<T>, d: &Domain) -> Result<CoarseState<T>> {
    let a = g.assign(d)?;
    let mut sq = vec![T::zero(); g.len()];
    for (mu, v) in a.piece.iter().zip(&a.value) {
        sq[*mu] += *v * *v;
    }
    if let Some(mu) = sq.iter().position(|s| *s == T::zero()) {
        return Err(Error::DegenerateInput(format!("piece {} is empty", mu + 1)));
    }
    Ok(CoarseState {
        coefficients: sq.into_iter().map(|s| s.sqrt()).collect(),
    })
}

/// Prepares `ψ_g` as the coarse state followed by each piece's own normalized profile.
/// With `keep_label` the result is `ψ'_g`, indexed by `μ·N + x`; otherwise the label
/// register is uncomputed and the result is indexed by `x`.
pub fn build_reference_state<T: Real>(
    g: &ReferenceSpec<T>,
    d: &Domain,
    keep_label: bool,
) -> Result<AmplitudeVector<T>> {
    let a = g.assign(d)?;
    let coarse = coarse_coefficients(g, d)?;
    let ng = coarse.norm_squared().sqrt();
    let n = d.size();
    let dim = if keep_label { g.len() * n } else { n };
    let mut out = vec![Complex::new(T::zero(), T::zero()); dim];
    for (x, (mu, v)) in a.piece.iter().zip(&a.value).enumerate() {
        let c = coarse.coefficients[*mu];
        let amp = (c / ng) * (*v / c);
        let slot = if keep_label { mu * n + x } else { x };
        out[slot] = Complex::new(amp, T::zero());
    }
    Ok(AmplitudeVector::new(out))
}

/// Power-law ziggurat: piece `μ = 1..n` is `2^{-β(μ-1)}` on `[2^{μ-1}, 2^μ)`.
pub fn design_ziggurat_powerlaw<T: Real>(beta: T, n: u32) -> ReferenceSpec<T> {
    ReferenceSpec::new(
        (1..=n as i32)
            .map(|mu| ReferencePiece {
                range: Region::half_open(pow2(mu - 1), pow2(mu)),
                kind: PieceKind::Constant {
                    level: T::lit(2.0).powf(-beta * T::lit((mu - 1) as f64)),
                },
            })
            .collect(),
    )
}

/// Three-dimensional ziggurat over max-norm shells `2^{μ-1} ≤ max|x_i| < 2^μ`, `μ = 1..l`.
pub fn design_ziggurat_powerlaw_3d<T: Real>(beta: T, l: u32) -> ReferenceSpec<T> {
    ReferenceSpec::new(
        (1..=l)
            .map(|mu| ReferencePiece {
                range: Region::Shell {
                    lo: 1 << (mu - 1),
                    hi: 1 << mu,
                },
                kind: PieceKind::Constant {
                    level: T::lit(2.0).powf(-beta * T::lit((mu - 1) as f64)),
                },
            })
            .collect(),
    )
}

/// Where the exponential tails of the Gaussian reference are anchored.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum TailAnchor {
    /// `exp(-|x|/σ)`, dropping from 1 to `e^{-1}` at `|x| = σ`.
    #[default]
    Origin,
    /// `exp(-(|x|-σ)/σ)`, continuous with the core level.
    Boundary,
}

/// Core `1` on `|x| ≤ σ` with exponential tails outside.
pub fn design_gaussian_reference<T: Real>(
    sigma: T,
    d: &Domain,
    anchor: TailAnchor,
) -> Result<ReferenceSpec<T>> {
    let delta = match *d {
        Domain::Scaled1d { n, half: false } => T::lit(1.0 / n as f64),
        _ => {
            return Err(Error::Precondition(
                "the Gaussian reference needs a full scaled domain".into(),
            ))
        }
    };
    let half = T::lit(0.5);
    if sigma <= delta {
        return Err(Error::Regime(format!(
            "σ = {sigma} is not above the grid spacing {delta}; prepare the few supported points directly"
        )));
    }
    if sigma >= half {
        return Err(Error::Regime(format!("σ = {sigma} leaves no tails inside [-1/2, 1/2]")));
    }
    let rate = T::one() / sigma;
    let (left_origin, right_origin) = match anchor {
        TailAnchor::Origin => (T::zero(), T::zero()),
        TailAnchor::Boundary => (-sigma, sigma),
    };
    Ok(ReferenceSpec::new(vec![
        ReferencePiece {
            range: Region::Interval {
                lo: -half,
                hi: -sigma,
                lo_closed: true,
                hi_closed: false,
            },
            kind: PieceKind::Exponential {
                scale: T::one(),
                rate,
                origin: left_origin,
            },
        },
        ReferencePiece {
            range: Region::Interval {
                lo: -sigma,
                hi: sigma,
                lo_closed: true,
                hi_closed: true,
            },
            kind: PieceKind::Constant { level: T::one() },
        },
        ReferencePiece {
            range: Region::Interval {
                lo: sigma,
                hi: half,
                lo_closed: false,
                hi_closed: true,
            },
            kind: PieceKind::Exponential {
                scale: T::one(),
                rate,
                origin: right_origin,
            },
        },
    ]))
}

/// Three-level ziggurat: `1` on `|x| ≤ w`, `tail` elsewhere in `[-1/2, 1/2]`.
pub fn design_gaussian_ziggurat<T: Real>(w: T, tail: T) -> ReferenceSpec<T> {
    let half = T::lit(0.5);
    ReferenceSpec::new(vec![
        ReferencePiece {
            range: Region::Interval {
                lo: -half,
                hi: -w,
                lo_closed: true,
                hi_closed: false,
            },
            kind: PieceKind::Constant { level: tail },
        },
        ReferencePiece {
            range: Region::Interval {
                lo: -w,
                hi: w,
                lo_closed: true,
                hi_closed: true,
            },
            kind: PieceKind::Constant { level: T::one() },
        },
        ReferencePiece {
            range: Region::Interval {
                lo: w,
                hi: half,
                lo_closed: false,
                hi_closed: true,
            },
            kind: PieceKind::Constant { level: tail },
        },
    ])
}

/// Two exponential pieces reproducing `exp(-β|x|)` on the scaled domain.
pub fn design_exponential_reference<T: Real>(beta: T) -> ReferenceSpec<T> {
    let half = T::lit(0.5);
    let kind = PieceKind::Exponential {
        scale: T::one(),
        rate: beta,
        origin: T::zero(),
    };
    ReferenceSpec::new(vec![
        ReferencePiece {
            range: Region::half_open(-half, T::zero()),
            kind: kind.clone(),
        },
        ReferencePiece {
            range: Region::Interval {
                lo: T::zero(),
                hi: half,
                lo_closed: true,
                hi_closed: true,
            },
            kind,
        },
    ])
}

/// Uniform mesh of `k` index cells; each level is the exact maximum of `|f|` over the
/// points of the cell.
pub fn design_mesh1d<T: Real>(f: &TargetSpec<T>, d: &Domain, k: usize) -> Result<ReferenceSpec<T>> {
    let n = d.size();
    if k == 0 || k > n {
        return Err(Error::Precondition(format!("need 1 ≤ K ≤ {n}, got {k}")));
    }
    let mut pieces = Vec::with_capacity(k);
    for c in 0..k {
        let (start, end) = (c * n / k, (c + 1) * n / k);
        let mut level = T::zero();
        for i in start..end {
            level = level.max(f.magnitude(i, &d.point(i))?);
        }
        if level == T::zero() {
            return Err(Error::DegenerateInput(format!("|f| vanishes on cell {c}")));
        }
        pieces.push(ReferencePiece {
            range: Region::Indices { start, end },
            kind: PieceKind::Constant { level },
        });
    }
    Ok(ReferenceSpec::new(pieces))
}

/// Samples per cell axis when estimating mesh cell maxima.
pub const MESH_SAMPLES: usize = 64;
/// Multiplicative margin applied to sampled mesh maxima.
pub const MESH_SAFETY: f64 = 1.1;

/// Cell counts `(⌈5n/4⌉, 2n)` of the two-dimensional mesh.
pub fn mesh2d_shape(n: usize) -> (usize, usize) {
    ((5 * n).div_ceil(4), 2 * n)
}

/// Cell ziggurat over `[0,1] × [-4,4]` for the two-dimensional example target.
pub fn design_mesh2d<T: Real>(n: usize) -> Result<ReferenceSpec<T>> {
    if n == 0 {
        return Err(Error::Precondition("mesh resolution must be ≥ 1".into()));
    }
    let (nx, ny) = mesh2d_shape(n);
    let cells: Vec<(usize, usize)> = (0..nx).flat_map(|i| (0..ny).map(move |j| (i, j))).collect();
    let pieces = cells
        .par_iter()
        .map(|&(i, j)| {
            let x0 = i as f64 / nx as f64;
            let x1 = (i + 1) as f64 / nx as f64;
            let y0 = -4.0 + 8.0 * j as f64 / ny as f64;
            let y1 = -4.0 + 8.0 * (j + 1) as f64 / ny as f64;
            let mut peak = T::zero();
            let last = (MESH_SAMPLES - 1) as f64;
            for a in 0..MESH_SAMPLES {
                let x = x0 + (x1 - x0) * a as f64 / last;
                for b in 0..MESH_SAMPLES {
                    let y = y0 + (y1 - y0) * b as f64 / last;
                    peak = peak.max(mesh2d_eval(T::lit(x), T::lit(y))?);
                }
            }
            Ok(ReferencePiece {
                range: Region::Cell {
                    x0: T::lit(x0),
                    x1: T::lit(x1),
                    y0: T::lit(y0),
                    y1: T::lit(y1),
                    x_closed: i + 1 == nx,
                    y_closed: j + 1 == ny,
                },
                kind: PieceKind::Constant {
                    level: peak * T::lit(MESH_SAFETY),
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReferenceSpec::new(pieces))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn dominance_examples() {
        let d = Domain::scaled(256);
        let gauss = TargetSpec::Gaussian {
            sigma: 0.125,
            center: 0.0,
        };
        let one = ReferenceSpec::constant(1.0, &d);
        assert!(validate_dominance(&one, &gauss, &d).unwrap().is_ok());
        let reference = design_gaussian_reference(0.125, &d, TailAnchor::Origin).unwrap();
        assert!(validate_dominance(&reference, &gauss, &d).unwrap().is_ok());

        let di = Domain::interval(16);
        let half = ReferenceSpec::constant(0.5, &di);
        match validate_dominance(&half, &TargetSpec::PowerLaw { beta: 1.0 }, &di).unwrap() {
            Dominance::Violation { index, .. } => assert_eq!(index, 0),
            Dominance::Ok => panic!("expected violation"),
        }
    }

    #[test]
    fn extended_ziggurat_amplitudes() {
        // β = 1/2 on [1, 7]: amplitude 2^{-(μ-1)/2}/√N_g with N_g² = 3.
        let d = Domain::Interval1d { lo: 1, hi: 7 };
        let g = design_ziggurat_powerlaw(0.5, 3);
        let psi = build_reference_state(&g, &d, false).unwrap();
        for (i, c) in psi.entries().iter().enumerate() {
            let x = (i + 1) as f64;
            let mu = x.log2().floor() + 1.0;
            assert_relative_eq!(c.re, 2f64.powf(-(mu - 1.0) / 2.0) / 3f64.sqrt(), epsilon = 1e-15);
        }
        let coarse = coarse_coefficients(&g, &d).unwrap();
        for c in &coarse.coefficients {
            assert_relative_eq!(*c, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn single_piece_is_uniform() {
        let d = Domain::interval(8);
        let psi = build_reference_state(&ReferenceSpec::constant(0.3, &d), &d, false).unwrap();
        for c in psi.entries() {
            assert_relative_eq!(c.re, 1.0 / 8f64.sqrt(), epsilon = 1e-15);
        }
        let coarse = coarse_coefficients(&ReferenceSpec::constant(0.3f64, &d), &d).unwrap();
        assert_relative_eq!(coarse.coefficients[0], 0.3 * 8f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn two_piece_exponential_matches_tabulation() {
        let d = Domain::Interval1d { lo: 0, hi: 15 };
        let g = ReferenceSpec::new(vec![
            ReferencePiece {
                range: Region::Indices { start: 0, end: 8 },
                kind: PieceKind::Constant { level: 1.0 },
            },
            ReferencePiece {
                range: Region::Indices { start: 8, end: 16 },
                kind: PieceKind::Exponential {
                    scale: 1.0,
                    rate: 1.0,
                    origin: 0.0,
                },
            },
        ]);
        let psi = build_reference_state(&g, &d, false).unwrap();
        let raw: Vec<f64> = (0..16).map(|x| if x < 8 { 1.0 } else { (-(x as f64)).exp() }).collect();
        let oracle = AmplitudeVector::from_real(raw).normalize().unwrap();
        assert!(psi.distance(&oracle).unwrap() < 1e-15);
    }

    #[test]
    fn labeled_state_marginalizes_to_unlabeled() {
        let d = Domain::interval(40);
        let g = design_ziggurat_powerlaw(1.0, 6);
        let plain = build_reference_state(&g, &d, false).unwrap();
        let labeled = build_reference_state(&g, &d, true).unwrap();
        assert_eq!(labeled.dim(), 6 * 40);
        for x in 0..40 {
            let s: f64 = (0..6).map(|mu| labeled.entries()[mu * 40 + x].norm_sqr()).sum();
            assert_relative_eq!(s, plain.entries()[x].norm_sqr(), epsilon = 1e-15);
        }
    }

    #[test]
    fn power_law_coarse_pattern() {
        let d = Domain::Interval1d { lo: 1, hi: 15 };
        let g = design_ziggurat_powerlaw(1.0, 4);
        match &g.pieces[3].kind {
            PieceKind::Constant { level } => assert_eq!(*level, 0.125),
            _ => unreachable!(),
        }
        assert_eq!(g.pieces[3].range, Region::half_open(8.0, 16.0));
        let c = coarse_coefficients(&g, &d).unwrap();
        for (mu, v) in c.coefficients.iter().enumerate() {
            assert_relative_eq!(*v, 2f64.powf(mu as f64 * (1.0 - 2.0) / 2.0), epsilon = 1e-15);
        }
        let uniform = coarse_coefficients(&design_ziggurat_powerlaw(0.0, 4), &d).unwrap();
        for (mu, v) in uniform.coefficients.iter().enumerate() {
            assert_relative_eq!(*v, 2f64.powf(mu as f64 / 2.0), epsilon = 1e-15);
        }
    }

    #[test]
    fn ladder_reconstructs_coarse_state() {
        let d = Domain::interval(1000);
        let c = coarse_coefficients(&design_ziggurat_powerlaw(1.0f64, 10), &d).unwrap();
        let norm = c.norm_squared().sqrt();
        let rebuilt = CoarseState::from_ladder(&c.ladder_angles());
        for (a, b) in rebuilt.iter().zip(&c.coefficients) {
            assert_relative_eq!(*a, b / norm, epsilon = 1e-14);
        }
    }

    #[test]
    fn gaussian_reference_shapes() {
        let d = Domain::scaled(1024);
        let g = design_gaussian_reference(0.125, &d, TailAnchor::Origin).unwrap();
        assert_eq!(g.len(), 3);
        let a = g.assign(&d).unwrap();
        for i in 0..d.size() {
            let x = d.point::<f64>(i).coordinate().unwrap();
            let expect = if x.abs() <= 0.125 { 1.0 } else { (-x.abs() / 0.125).exp() };
            assert_relative_eq!(a.value[i], expect, epsilon = 1e-15);
        }
        let b = design_gaussian_reference(0.125, &d, TailAnchor::Boundary).unwrap();
        let ab = b.assign(&d).unwrap();
        let edge = (0..d.size())
            .find(|&i| d.point::<f64>(i).coordinate().unwrap() > 0.125)
            .unwrap();
        assert!(ab.value[edge] > 0.99);
        assert!(matches!(
            design_gaussian_reference(1.0 / 2048.0, &d, TailAnchor::Origin),
            Err(Error::Regime(_))
        ));
    }

    #[test]
    fn alternative_gaussian_ziggurat_dominates() {
        let d = Domain::scaled(1024);
        let f = TargetSpec::Gaussian {
            sigma: 0.125,
            center: 0.0,
        };
        let g = design_gaussian_ziggurat(0.25, 2f64.powi(-5));
        assert!(validate_dominance(&g, &f, &d).unwrap().is_ok());
    }

    #[test]
    fn mesh_cell_counts() {
        assert_eq!(design_mesh2d::<f64>(3).unwrap().len(), 24);
        assert_eq!(design_mesh2d::<f64>(1).unwrap().len(), 4);
        assert_eq!(mesh2d_shape(3), (4, 6));
    }

    #[test]
    fn mesh_dominates_on_dense_grid() {
        let g = design_mesh2d::<f64>(3).unwrap();
        let d = Domain::mesh2d(300, 300);
        assert!(validate_dominance(&g, &TargetSpec::Mesh2d, &d).unwrap().is_ok());
    }

    #[test]
    fn json_round_trip() {
        let d = Domain::scaled(64);
        for g in [
            design_gaussian_reference(0.125, &d, TailAnchor::Origin).unwrap(),
            design_ziggurat_powerlaw(1.0 / 3.0, 5),
            design_ziggurat_powerlaw_3d(1.0, 3),
            design_mesh2d(1).unwrap(),
            ReferenceSpec::constant(0.1 + 0.2, &d),
        ] {
            let text = serde_json::to_string(&g).unwrap();
            let back: ReferenceSpec<f64> = serde_json::from_str(&text).unwrap();
            assert_eq!(back, g);
        }
        let text = serde_json::to_string(&design_ziggurat_powerlaw(1.0, 1)).unwrap();
        assert!(text.starts_with("[{\"range\""));
        assert!(text.contains("\"kind\":\"constant\""));
        assert!(text.contains("\"params\":{\"level\":1.0}"));
    }

    #[test]
    fn uncovered_points_are_rejected() {
        let d = Domain::interval(20);
        assert!(matches!(
            design_ziggurat_powerlaw::<f64>(1.0, 3).assign(&d),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            coarse_coefficients(&design_ziggurat_powerlaw::<f64>(1.0, 6), &Domain::interval(20)),
            Err(Error::DegenerateInput(_))
        ));
    }
}
