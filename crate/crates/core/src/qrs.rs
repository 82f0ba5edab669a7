//! Planning and amplitude-level simulation of quantum rejection sampling.
//!
//! Registers holding `f̃(x)`, `g̃(x)` are modeled by the quantized values they would contain.
//! The sampling register is never materialized: for each `x` only the number `A(x)` of
//! accepted `m ∈ [1, M]` is computed, which fixes the post-selected amplitude `g(x)·A(x)/M`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{ceil_log2, next_pow2_at_least, quantize, AmplitudeVector, Real};
use crate::refdesign::{validate_dominance, Dominance, ReferenceSpec};
use crate::targets::{tabulate, tabulate_polar, Domain, Point, TargetSpec};

/// Parameters of one rejection-sampling run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", bound = "T: Real")]
pub struct SamplingPlan<T> {
    /// Sampling dimension, a power of two.
    pub m: u64,
    /// Target accuracy of the prepared state.
    pub epsilon: T,
    /// Additive budget for each evaluated ratio `f̃/g̃`.
    pub epsilon_tilde: T,
    /// Fractional bits used for the ratio.
    pub bits: u32,
    /// Amplification rounds from the ideal norms.
    pub rounds: u32,
}

impl<T: Real> SamplingPlan<T> {
    /// Plan from explicit parameters; `bits` is derived from `ε̃`.
    pub fn from_parts(m: u64, epsilon: T, epsilon_tilde: T, rounds: u32) -> Result<Self> {
        if m == 0 || !m.is_power_of_two() {
            return Err(Error::Precondition(format!("M = {m} is not a power of two")));
        }
        if !(epsilon_tilde > T::zero()) {
            return Err(Error::Precondition("ε̃ must be positive".into()));
        }
        Ok(Self {
            m,
            epsilon,
            epsilon_tilde,
            bits: bits_for(epsilon_tilde.to_f64_lossy()),
            rounds,
        })
    }

    /// Checks `M ≥ max{2N_g/(εN_f), max_x 2g(x)/f(x)}` over points with `f > 0`.
    pub fn satisfies_bound(&self, f: &TargetSpec<T>, g: &ReferenceSpec<T>, d: &Domain) -> Result<bool> {
        let b = sampling_bound(f, g, d, self.epsilon)?;
        Ok(self.m as f64 >= b.required)
    }
}

fn bits_for(epsilon_tilde: f64) -> u32 {
    ceil_log2(1.0 / epsilon_tilde).max(1) as u32
}

struct Bound<T> {
    required: f64,
    nf: T,
    ng: T,
    min_ratio: T,
}

fn sampling_bound<T: Real>(f: &TargetSpec<T>, g: &ReferenceSpec<T>, d: &Domain, eps: T) -> Result<Bound<T>> {
    if let Dominance::Violation { index, f: fv, g: gv } = validate_dominance(g, f, d)? {
        return Err(Error::Precondition(format!(
            "g does not dominate f at point {index}: {fv} > {gv}"
        )));
    }
    let fv = tabulate_polar(f, d)?;
    let gv = g.assign(d)?.value;
    let nf = fv.iter().map(|v| v.0 * v.0).sum::<T>().sqrt();
    let ng = gv.iter().map(|v| *v * *v).sum::<T>().sqrt();
    let min_ratio = fv
        .iter()
        .zip(&gv)
        .filter(|(fx, _)| fx.0 > T::zero())
        .map(|(fx, gx)| fx.0 / *gx)
        .fold(T::infinity(), |a, b| a.min(b));
    let two = T::lit(2.0);
    let required = (two * ng / (eps * nf)).max(two / min_ratio);
    Ok(Bound {
        required: required.to_f64_lossy(),
        nf,
        ng,
        min_ratio,
    })
}

/// Smallest power-of-two `M` meeting the sampling-dimension bound, with the matching
/// ratio budget `ε̃ = min{εN_f/(2N_g), min_x f/(2g)}` and `b = ⌈log₂ 1/ε̃⌉`.
pub fn choose_m<T: Real>(
    f: &TargetSpec<T>,
    g: &ReferenceSpec<T>,
    d: &Domain,
    epsilon: T,
) -> Result<SamplingPlan<T>> {
    if !(epsilon > T::zero() && epsilon < T::one()) {
        return Err(Error::Domain(format!("ε = {epsilon} must lie in (0, 1)")));
    }
    let b = sampling_bound(f, g, d, epsilon)?;
    let two = T::lit(2.0);
    let epsilon_tilde = (epsilon * b.nf / (two * b.ng)).min(b.min_ratio / two);
    Ok(SamplingPlan {
        m: next_pow2_at_least(b.required)?,
        epsilon,
        epsilon_tilde,
        bits: bits_for(epsilon_tilde.to_f64_lossy()),
        rounds: rounds(b.nf, b.ng)?,
    })
}

/// `R = ⌈π/(4·arcsin(N_f/N_g)) − 1/2⌉`.
pub fn rounds<T: Real>(nf: T, ng: T) -> Result<u32> {
    if !(nf > T::zero()) || nf > ng * (T::one() + T::lit(1e-12)) {
        return Err(Error::Precondition(format!("need 0 < N_f ≤ N_g, got {nf}, {ng}")));
    }
    rounds_from_probability((nf / ng).min(T::one()).powi(2))
}

/// Rounds for a pre-amplification success probability `p0`.
pub fn rounds_from_probability<T: Real>(p0: T) -> Result<u32> {
    if !(p0 > T::zero() && p0 <= T::one()) {
        return Err(Error::Precondition(format!("p0 = {p0} outside (0, 1]")));
    }
    let theta = p0.sqrt().asin();
    let r = (T::FRAC_PI_4() / theta - T::lit(0.5)).ceil();
    Ok(r.max(T::zero()).to_f64_lossy() as u32)
}

/// `P_succ = N_f²/N_g²`.
pub fn success_probability<T: Real>(f: &TargetSpec<T>, g: &ReferenceSpec<T>, d: &Domain) -> Result<T> {
    let b = sampling_bound(f, g, d, T::lit(0.5))?;
    Ok((b.nf / b.ng).powi(2))
}

/// `sin²((2r+1)θ)` for `r = 0..=R`, `θ = arcsin √p0`.
pub fn amplify_trace<T: Real>(p0: T, r: u32) -> Result<Vec<T>> {
    if !(p0 > T::zero() && p0 <= T::one()) {
        return Err(Error::Precondition(format!("p0 = {p0} outside (0, 1]")));
    }
    let theta = p0.sqrt().asin();
    Ok((0..=r)
        .map(|k| (T::lit((2 * k + 1) as f64) * theta).sin().powi(2))
        .collect())
}

/// Inputs a clause sees at one domain point.
#[derive(Clone, Copy, Debug)]
pub struct ClausePoint<T> {
    pub point: Point<T>,
    pub f: T,
    pub g: T,
}

type Predicate = dyn Fn(f64, f64, u64, u64) -> bool + Send + Sync;

/// User-supplied acceptance predicate `(f̃, g̃, m, M) ↦ accept`, where `f̃`, `g̃` are the
/// values quantized to the plan's bit count.
#[derive(Clone)]
pub struct CustomClause {
    pub name: String,
    accepts: Arc<Predicate>,
}

impl CustomClause {
    pub fn new(name: impl Into<String>, accepts: impl Fn(f64, f64, u64, u64) -> bool + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            accepts: Arc::new(accepts),
        }
    }
}

impl fmt::Debug for CustomClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomClause({})", self.name)
    }
}

/// Comparator acceptance condition. Accepted `m` must form a prefix `1..=A(x)` of `[1, M]`.
#[derive(Clone, Debug)]
pub enum ClauseSpec {
    /// `m ≤ M·r̃` with `r̃` the ratio `f/g` floored to `b` bits.
    Standard,
    /// `m·x ≤ M·2^{μ-1}` for `1/x` against its ziggurat on `[1, N]`.
    InversePowerLaw1d,
    /// `m²(x₀²+x₁²+x₂²) ≤ M²·2^{2(μ-1)}` for `1/|x|` against its shell ziggurat.
    InversePowerLaw3d,
    /// `t̃(1 − m/2M) − m/2M ≥ 1` with `t̃ = e^{2|x|}` floored to `b` bits, for `tanh` against `g = 1/2`.
    Tanh,
    Custom(CustomClause),
}

fn bit_length(v: u64) -> u32 {
    64 - v.leading_zeros()
}

fn isqrt(v: u128) -> u128 {
    let mut r = (v as f64).sqrt() as u128;
    while r * r > v {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= v {
        r += 1;
    }
    r
}

impl ClauseSpec {
    pub fn name(&self) -> &str {
        match self {
            ClauseSpec::Standard => "standard",
            ClauseSpec::InversePowerLaw1d => "inversePowerLaw1d",
            ClauseSpec::InversePowerLaw3d => "inversePowerLaw3d",
            ClauseSpec::Tanh => "tanh",
            ClauseSpec::Custom(c) => &c.name,
        }
    }

    /// Parses the names used on the command line.
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "standard" => ClauseSpec::Standard,
            "inversePowerLaw1d" => ClauseSpec::InversePowerLaw1d,
            "inversePowerLaw3d" => ClauseSpec::InversePowerLaw3d,
            "tanh" => ClauseSpec::Tanh,
            other => return Err(Error::Parse(format!("unknown clause `{other}`"))),
        })
    }

    fn shape_error<T: Real>(&self, p: &Point<T>) -> Error {
        Error::ClauseShape(format!("{} clause cannot evaluate point {p:?}", self.name()))
    }

    /// Whether sample `m` is accepted at `cp`.
    pub fn accepts<T: Real>(&self, cp: &ClausePoint<T>, m: u64, big_m: u64, bits: u32) -> Result<bool> {
        match self {
            ClauseSpec::Standard => {
                let r = quantize(cp.f / cp.g, bits)?.value;
                Ok(T::lit(m as f64) <= T::lit(big_m as f64) * r)
            }
            ClauseSpec::InversePowerLaw1d => match cp.point {
                Point::Int(x) if x >= 1 => {
                    let mu = bit_length(x as u64);
                    Ok(m as u128 * x as u128 <= (big_m as u128) << (mu - 1))
                }
                _ => Err(self.shape_error(&cp.point)),
            },
            ClauseSpec::InversePowerLaw3d => {
                let (s, rhs) = self.shell_terms(&cp.point, big_m)?;
                Ok((m as u128) * (m as u128) * s <= rhs)
            }
            ClauseSpec::Tanh => {
                let (k, scale) = self.tanh_terms(&cp.point, bits)?;
                let (m2, bm2) = (m as u128, 2 * big_m as u128);
                Ok(m2 <= bm2 && k * (bm2 - m2) >= m2 * scale + bm2 * scale)
            }
            ClauseSpec::Custom(c) => {
                let ft = quantize(cp.f, bits)?.value.to_f64_lossy();
                let gt = quantize(cp.g, bits)?.value.to_f64_lossy();
                Ok((c.accepts)(ft, gt, m, big_m))
            }
        }
    }

    fn shell_terms<T: Real>(&self, p: &Point<T>, big_m: u64) -> Result<(u128, u128)> {
        match *p {
            Point::Lattice(v) => {
                let norm = v.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0);
                if norm == 0 {
                    return Err(self.shape_error(p));
                }
                let mu = bit_length(norm);
                let s: u128 = v.iter().map(|c| (c.unsigned_abs() as u128).pow(2)).sum();
                let rhs = ((big_m as u128) << (mu - 1))
                    .checked_pow(2)
                    .ok_or_else(|| Error::Numerical("3D clause overflows 128 bits".into()))?;
                Ok((s, rhs))
            }
            _ => Err(self.shape_error(p)),
        }
    }

    fn tanh_terms<T: Real>(&self, p: &Point<T>, bits: u32) -> Result<(u128, u128)> {
        let x = p.coordinate().ok_or_else(|| self.shape_error(p))?.to_f64_lossy();
        if bits > 60 {
            return Err(Error::Numerical("tanh clause supports at most 60 bits".into()));
        }
        let scale = 1u128 << bits;
        let k = ((2.0 * x.abs()).exp() * scale as f64).floor() as u128;
        Ok((k, scale))
    }

    /// `A(x)`: the number of accepted samples, assuming the threshold shape.
    pub fn count<T: Real>(&self, cp: &ClausePoint<T>, big_m: u64, bits: u32) -> Result<u64> {
        if cp.f == T::zero() {
            return Ok(0);
        }
        match self {
            ClauseSpec::Standard => {
                let r = quantize(cp.f / cp.g, bits)?.value;
                let a = (T::lit(big_m as f64) * r).floor().to_f64_lossy();
                Ok((a.max(0.0) as u64).min(big_m))
            }
            ClauseSpec::InversePowerLaw1d => match cp.point {
                Point::Int(x) if x >= 1 => {
                    let mu = bit_length(x as u64);
                    let a = ((big_m as u128) << (mu - 1)) / x as u128;
                    Ok(a.min(big_m as u128) as u64)
                }
                _ => Err(self.shape_error(&cp.point)),
            },
            ClauseSpec::InversePowerLaw3d => {
                let (s, rhs) = self.shell_terms(&cp.point, big_m)?;
                Ok(isqrt(rhs / s).min(big_m as u128) as u64)
            }
            _ => {
                // Largest accepted m by bisection over the threshold.
                if !self.accepts(cp, 1, big_m, bits)? {
                    return Ok(0);
                }
                let (mut lo, mut hi) = (1u64, big_m);
                while lo < hi {
                    let mid = lo + (hi - lo).div_ceil(2);
                    if self.accepts(cp, mid, big_m, bits)? {
                        lo = mid;
                    } else {
                        hi = mid - 1;
                    }
                }
                Ok(lo)
            }
        }
    }
}

/// Result of checking a clause against the ideal ratio.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClauseReport {
    /// `max_x |A(x) − M·f(x)/g(x)|`.
    pub max_error: f64,
    /// `M·ε̃ + 1`.
    pub bound: f64,
    pub pass: bool,
    /// Index attaining the maximum error.
    pub worst_index: usize,
}

/// Exhaustive scans of the sampling register are only done below this many `(x, m)` pairs;
/// above it the threshold shape is checked on a stride plus the neighborhood of `A(x)`.
const EXHAUSTIVE_PAIRS: u64 = 1 << 26;

/// Verifies the threshold shape of `clause` and bounds its ratio error.
pub fn validate_clause<T: Real>(
    clause: &ClauseSpec,
    f: &TargetSpec<T>,
    g: &ReferenceSpec<T>,
    d: &Domain,
    plan: &SamplingPlan<T>,
) -> Result<ClauseReport> {
    let fv = tabulate_polar(f, d)?;
    let gv = g.assign(d)?.value;
    let big_m = plan.m;
    let exhaustive = (d.size() as u64).saturating_mul(big_m) <= EXHAUSTIVE_PAIRS;
    let mut worst = (0.0f64, 0usize);
    for (i, (fx, gx)) in fv.iter().zip(&gv).enumerate() {
        let cp = ClausePoint {
            point: d.point(i),
            f: fx.0,
            g: *gx,
        };
        let a = clause.count(&cp, big_m, plan.bits)?;
        if fx.0 > T::zero() {
            let probe: Vec<u64> = if exhaustive {
                (1..=big_m).collect()
            } else {
                let stride = (big_m / 4096).max(1);
                let mut v: Vec<u64> = (1..=big_m).step_by(stride as usize).collect();
                v.extend([a.saturating_sub(1), a, a + 1, big_m]);
                v.retain(|m| (1..=big_m).contains(m));
                v
            };
            for m in probe {
                if clause.accepts(&cp, m, big_m, plan.bits)? != (m <= a) {
                    return Err(Error::ClauseShape(format!(
                        "{} clause at point {i}: acceptance at m = {m} breaks the threshold A = {a}",
                        clause.name()
                    )));
                }
            }
        }
        let ideal = big_m as f64 * (fx.0 / *gx).to_f64_lossy();
        let err = (a as f64 - ideal).abs();
        if err > worst.0 {
            worst = (err, i);
        }
    }
    let bound = big_m as f64 * plan.epsilon_tilde.to_f64_lossy() + 1.0;
    Ok(ClauseReport {
        max_error: worst.0,
        bound,
        pass: worst.0 <= bound,
        worst_index: worst.1,
    })
}

/// Outcome of a simulated preparation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", bound = "T: Real")]
pub struct PreparedState<T> {
    pub output: AmplitudeVector<T>,
    /// Success probability before amplification.
    pub p0: T,
    /// Success probability after `rounds` amplification steps.
    pub p_r: T,
    pub dist: T,
    /// Rounds used (ideal norms).
    pub rounds: u32,
    /// Rounds a quantized-norm planner would use.
    pub rounds_quantized: u32,
    /// Sampling dimension, absent for the rotation variant.
    pub m: Option<u64>,
    /// Points whose rotation ratio was clamped to 1.
    pub clamped: usize,
    /// Good-branch amplitudes `g(x)A(x)/(M·N_g)` with phases.
    #[serde(skip)]
    pub good: Vec<Complex<T>>,
    /// Bad-branch weights `(g(x)/N_g)·√(1 − (A/M)²)`.
    #[serde(skip)]
    pub bad: Vec<T>,
}

/// JSON summary of a prepared state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreparedSummary {
    pub p0: f64,
    #[serde(rename = "pR")]
    pub p_r: f64,
    #[serde(rename = "R")]
    pub rounds: u32,
    #[serde(rename = "M")]
    pub m: Option<u64>,
    pub dist: f64,
    /// First 16 amplitudes as `[re, im]`.
    #[serde(rename = "topAmplitudes")]
    pub top_amplitudes: Vec<[f64; 2]>,
}

impl<T: Real> PreparedState<T> {
    pub fn summary(&self) -> PreparedSummary {
        PreparedSummary {
            p0: self.p0.to_f64_lossy(),
            p_r: self.p_r.to_f64_lossy(),
            rounds: self.rounds,
            m: self.m,
            dist: self.dist.to_f64_lossy(),
            top_amplitudes: self
                .output
                .entries()
                .iter()
                .take(16)
                .map(|c| [c.re.to_f64_lossy(), c.im.to_f64_lossy()])
                .collect(),
        }
    }

    /// `arcsin √p0`.
    pub fn theta(&self) -> T {
        self.p0.sqrt().asin()
    }

    /// Runs amplitude amplification explicitly on the flag qubit's two branches.
    pub fn amplify(&self, r: u32) -> Result<Vec<AmplificationRound<T>>> {
        amplify_branches(&self.good, &self.bad, r)
    }
}

/// State of the explicit amplification after one more round.
#[derive(Clone, Debug, PartialEq)]
pub struct AmplificationRound<T> {
    pub probability: T,
    /// Normalized good branch.
    pub good: AmplitudeVector<T>,
}

/// Applies `((2|ψ⟩⟨ψ| − I)·S_good)^r` to `ψ = good ⊕ bad` for `r = 0..=rounds`.
pub fn amplify_branches<T: Real>(good: &[Complex<T>], bad: &[T], rounds: u32) -> Result<Vec<AmplificationRound<T>>> {
    if good.len() != bad.len() {
        return Err(Error::Shape(format!("{} good vs {} bad entries", good.len(), bad.len())));
    }
    let zero = Complex::new(T::zero(), T::zero());
    let init: Vec<Complex<T>> = good
        .iter()
        .copied()
        .chain(bad.iter().map(|b| Complex::new(*b, T::zero())))
        .collect();
    let n = good.len();
    let mut state = init.clone();
    let mut out = Vec::with_capacity(rounds as usize + 1);
    let two = T::lit(2.0);
    for r in 0..=rounds {
        let g = AmplitudeVector::new(state[..n].to_vec());
        let probability = g.norm_sqr();
        out.push(AmplificationRound {
            probability,
            good: g.normalize()?,
        });
        if r == rounds {
            break;
        }
        for c in state[..n].iter_mut() {
            *c = -*c;
        }
        let overlap = init
            .iter()
            .zip(&state)
            .fold(zero, |acc, (a, s)| acc + a.conj() * s);
        for (s, a) in state.iter_mut().zip(&init) {
            *s = *a * overlap * two - *s;
        }
    }
    Ok(out)
}

fn finish<T: Real>(
    f: &TargetSpec<T>,
    d: &Domain,
    gv: &[T],
    ratio: Vec<T>,
    phases: &[T],
    rounds: u32,
    m: Option<u64>,
    clamped: usize,
) -> Result<PreparedState<T>> {
    if ratio.iter().all(|a| *a == T::zero()) {
        return Err(Error::DegenerateOutput("A(x) = 0 at every point".into()));
    }
    let ng = gv.iter().map(|v| *v * *v).sum::<T>().sqrt();
    let fbar: Vec<Complex<T>> = gv
        .iter()
        .zip(&ratio)
        .zip(phases)
        .map(|((g, a), ph)| Complex::from_polar(*g * *a, *ph))
        .collect();
    let good: Vec<Complex<T>> = fbar.iter().map(|c| c / ng).collect();
    let bad: Vec<T> = gv
        .iter()
        .zip(&ratio)
        .map(|(g, a)| *g / ng * (T::one() - *a * *a).max(T::zero()).sqrt())
        .collect();
    let output = AmplitudeVector::new(fbar).normalize()?;
    let ideal = tabulate(f, d)?.normalize()?;
    let dist = output.distance(&ideal)?;
    let p0 = good.iter().map(|c| c.norm_sqr()).sum::<T>().min(T::one());
    let theta = p0.sqrt().asin();
    let p_r = (T::lit((2 * rounds + 1) as f64) * theta).sin().powi(2);
    Ok(PreparedState {
        output,
        p0,
        p_r,
        dist,
        rounds,
        rounds_quantized: rounds_from_probability(p0)?,
        m,
        clamped,
        good,
        bad,
    })
}

/// Simulates the comparator-based preparation under `plan`.
pub fn simulate<T: Real>(
    f: &TargetSpec<T>,
    g: &ReferenceSpec<T>,
    d: &Domain,
    plan: &SamplingPlan<T>,
    clause: &ClauseSpec,
) -> Result<PreparedState<T>> {
    let fv = tabulate_polar(f, d)?;
    let gv = g.assign(d)?.value;
    let big_m = T::lit(plan.m as f64);
    let mut ratio = Vec::with_capacity(fv.len());
    for (i, (fx, gx)) in fv.iter().zip(&gv).enumerate() {
        let cp = ClausePoint {
            point: d.point(i),
            f: fx.0,
            g: *gx,
        };
        let a = clause.count(&cp, plan.m, plan.bits)?;
        ratio.push(T::lit(a as f64) / big_m);
    }
    let phases: Vec<T> = fv.iter().map(|v| v.1).collect();
    finish(f, d, &gv, ratio, &phases, plan.rounds, Some(plan.m), 0)
}

/// Chooses `M` for accuracy `ε` and simulates with `clause`.
pub fn prepare<T: Real>(
    f: &TargetSpec<T>,
    g: &ReferenceSpec<T>,
    d: &Domain,
    epsilon: T,
    clause: &ClauseSpec,
) -> Result<(SamplingPlan<T>, PreparedState<T>)> {
    let plan = choose_m(f, g, d, epsilon)?;
    let state = simulate(f, g, d, &plan, clause)?;
    Ok((plan, state))
}

/// Variant replacing the comparator by a controlled rotation through the angle
/// `arcsin(f/g)` floored to `b_delta` bits.
pub fn simulate_rotation_variant<T: Real>(
    f: &TargetSpec<T>,
    g: &ReferenceSpec<T>,
    d: &Domain,
    b_delta: u32,
) -> Result<PreparedState<T>> {
    if let Dominance::Violation { index, .. } = validate_dominance(g, f, d)? {
        return Err(Error::Precondition(format!("g does not dominate f at point {index}")));
    }
    let fv = tabulate_polar(f, d)?;
    let gv = g.assign(d)?.value;
    let mut clamped = 0;
    let mut ratio = Vec::with_capacity(fv.len());
    for (fx, gx) in fv.iter().zip(&gv) {
        let mut r = fx.0 / *gx;
        if r > T::one() {
            clamped += 1;
            r = T::one();
        }
        let angle = quantize(r.asin(), b_delta)?.value;
        ratio.push(angle.sin());
    }
    let nf = fv.iter().map(|v| v.0 * v.0).sum::<T>().sqrt();
    let ng = gv.iter().map(|v| *v * *v).sum::<T>().sqrt();
    let phases: Vec<T> = fv.iter().map(|v| v.1).collect();
    finish(f, d, &gv, ratio, &phases, rounds(nf, ng)?, None, clamped)
}

/// Sampling plan with `M = max{4/ε, 2e^{12}}` and `ε̃ = min{ε/4, e^{-12}/2}`, as used for
/// Gaussians with `σ = 2^{-3}` on `[-1/2, 1/2]`.
pub fn gaussian_plan<T: Real>(epsilon: T, nf_over_ng: T) -> Result<SamplingPlan<T>> {
    let e12 = T::lit(12.0).exp();
    let m = next_pow2_at_least((T::lit(4.0) / epsilon).max(T::lit(2.0) * e12).to_f64_lossy())?;
    let et = (epsilon / T::lit(4.0)).min(T::one() / (T::lit(2.0) * e12));
    SamplingPlan::from_parts(m, epsilon, et, rounds(nf_over_ng, T::one())?)
}

/// Sampling plan with `M = max{4/ε, N}` and `ε̃ = min{ε/4, 1/N}` for `tanh` against `g = 1/2`.
pub fn tanh_plan<T: Real>(epsilon: T, n: usize, nf_over_ng: T) -> Result<SamplingPlan<T>> {
    let m = next_pow2_at_least((T::lit(4.0) / epsilon).max(T::lit(n as f64)).to_f64_lossy())?;
    let et = (epsilon / T::lit(4.0)).min(T::one() / T::lit(n as f64));
    SamplingPlan::from_parts(m, epsilon, et, rounds(nf_over_ng, T::one())?)
}

/// Ideal ratio `M·f/g` floored, for reference.
pub fn ideal_acceptance<T: Real>(f: T, g: T, big_m: u64) -> u64 {
    (T::lit(big_m as f64) * f / g).floor().to_f64_lossy().max(0.0) as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refdesign::{design_gaussian_reference, design_ziggurat_powerlaw, TailAnchor};
    use approx::assert_relative_eq;

    #[test]
    fn choose_m_equal_functions() {
        let d = Domain::scaled(64);
        let f = TargetSpec::Exponential { beta: 0.0 };
        let g = ReferenceSpec::constant(1.0, &d);
        let plan = choose_m(&f, &g, &d, 0.01).unwrap();
        assert_eq!(plan.m, 256);
        assert_eq!(plan.rounds, 0);
        assert_relative_eq!(plan.epsilon_tilde, 0.005);
        assert_eq!(plan.bits, 8);
    }

    #[test]
    fn choose_m_rejects_non_dominating_reference() {
        let d = Domain::interval(8);
        let g = ReferenceSpec::constant(0.5, &d);
        let f = TargetSpec::PowerLaw { beta: 1.0 };
        assert!(matches!(choose_m(&f, &g, &d, 0.01), Err(Error::Precondition(_))));
        assert!(matches!(choose_m(&f, &g, &d, 1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn rounds_examples() {
        assert_eq!(rounds(1.0, 1.0).unwrap(), 0);
        assert_eq!(rounds(0.5, 1.0).unwrap(), 1);
        assert_eq!(rounds_from_probability(0.529).unwrap(), 1);
        assert!(matches!(rounds(2.0, 1.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn trace_examples() {
        assert_eq!(amplify_trace(1.0, 0).unwrap().len(), 1);
        assert_relative_eq!(amplify_trace(1.0, 0).unwrap()[0], 1.0);
        let t = amplify_trace(0.25, 1).unwrap();
        assert_relative_eq!(t[0], 0.25, epsilon = 1e-15);
        assert_relative_eq!(t[1], 1.0, epsilon = 1e-15);
        let t = amplify_trace(0.529f64, 1).unwrap();
        assert_relative_eq!(t[1], (3.0 * 0.529f64.sqrt().asin()).sin().powi(2), epsilon = 1e-15);
    }

    #[test]
    fn equal_functions_simulate_exactly() {
        let d = Domain::interval(10);
        let f = TargetSpec::Exponential { beta: 0.0 };
        let g = ReferenceSpec::constant(1.0, &d);
        let plan = SamplingPlan::from_parts(16, 0.1, 0.05, 0).unwrap();
        let s = simulate(&f, &g, &d, &plan, &ClauseSpec::Standard).unwrap();
        assert_relative_eq!(s.p0, 1.0, epsilon = 1e-15);
        assert!(s.dist < 1e-15);
    }

    #[test]
    fn inverse_power_law_clause_run() {
        let d = Domain::interval(7);
        let f = TargetSpec::PowerLaw { beta: 1.0 };
        let g = design_ziggurat_powerlaw(1.0, 3);
        let mut plan = choose_m(&f, &g, &d, 0.01).unwrap();
        plan.m = plan.m.max(1 << 12);
        let s = simulate(&f, &g, &d, &plan, &ClauseSpec::InversePowerLaw1d).unwrap();
        assert!(s.dist <= 0.01, "dist {}", s.dist);
        let std = simulate(&f, &g, &d, &plan, &ClauseSpec::Standard).unwrap();
        assert!(std.dist <= 0.01);
    }

    #[test]
    fn clause_counts_agree_with_closed_forms() {
        let d = Domain::interval(255);
        let f = TargetSpec::PowerLaw { beta: 1.0 };
        let g = design_ziggurat_powerlaw(1.0, 8);
        let plan = SamplingPlan::from_parts(1 << 10, 0.01, 1.0 / 1024.0, 1).unwrap();
        let r = validate_clause(&ClauseSpec::InversePowerLaw1d, &f, &g, &d, &plan).unwrap();
        assert!(r.pass && r.max_error < 1.0);
    }

    #[test]
    fn custom_clause_threshold_violation_detected() {
        let d = Domain::interval(4);
        let f = TargetSpec::PowerLaw { beta: 1.0 };
        let g = design_ziggurat_powerlaw(1.0, 3);
        let plan = SamplingPlan::from_parts(64, 0.1, 0.01, 1).unwrap();
        let odd = ClauseSpec::Custom(CustomClause::new("odd", |_, _, m, _| m % 2 == 1));
        assert!(matches!(
            validate_clause(&odd, &f, &g, &d, &plan),
            Err(Error::ClauseShape(_))
        ));
        let std_like = ClauseSpec::Custom(CustomClause::new("ratio", |ft, gt, m, mm| {
            (m as f64) * gt <= (mm as f64) * ft
        }));
        let r = validate_clause(&std_like, &f, &g, &d, &plan).unwrap();
        assert!(r.pass);
    }

    #[test]
    fn zero_target_points_are_rejected_outright() {
        let d = Domain::Interval1d { lo: 0, hi: 3 };
        let f = TargetSpec::Table(crate::targets::TableTarget {
            magnitudes: vec![0.0, 0.0, 0.0, 0.0],
            phases: vec![0.0; 4],
        });
        let g = ReferenceSpec::constant(1.0, &d);
        let plan = SamplingPlan::from_parts(8, 0.1, 0.1, 1).unwrap();
        assert!(simulate(&f, &g, &d, &plan, &ClauseSpec::Standard).is_err());
        let f = TargetSpec::Table(crate::targets::TableTarget {
            magnitudes: vec![0.0, 1.0, 0.0, 0.5],
            phases: vec![0.0; 4],
        });
        let plan = choose_m(&f, &g, &d, 0.1).unwrap();
        let s = simulate(&f, &g, &d, &plan, &ClauseSpec::Standard).unwrap();
        assert_eq!(s.output.entries()[0].norm(), 0.0);
        assert!(s.dist <= 0.1);
    }

    #[test]
    fn single_point_acceptance_is_degenerate() {
        let d = Domain::interval(4);
        let f = TargetSpec::PowerLaw { beta: 1.0 };
        let g = ReferenceSpec::constant(1.0, &d);
        let plan = SamplingPlan::from_parts(1, 0.5, 0.5, 0).unwrap();
        // M = 1, b = 1: only x = 1 is accepted.
        let s = simulate(&f, &g, &d, &plan, &ClauseSpec::Standard).unwrap();
        assert_eq!(s.output.entries()[0].re, 1.0);
    }

    #[test]
    fn explicit_amplification_matches_trace() {
        let d = Domain::scaled(256);
        let f = TargetSpec::Gaussian {
            sigma: 0.125f64,
            center: 0.0,
        };
        let g = design_gaussian_reference(0.125, &d, TailAnchor::Origin).unwrap();
        let (plan, s) = prepare(&f, &g, &d, 1e-3, &ClauseSpec::Standard).unwrap();
        let rounds = s.amplify(3).unwrap();
        let trace = amplify_trace(s.p0, 3).unwrap();
        for (r, t) in rounds.iter().zip(&trace) {
            assert_relative_eq!(r.probability, *t, epsilon = 1e-12);
            let neg = AmplitudeVector::new(s.output.entries().iter().map(|c| -c).collect());
            let d: f64 = r.good.distance(&s.output).unwrap().min(r.good.distance(&neg).unwrap());
            assert!(d < 1e-12, "{d}");
        }
        assert_relative_eq!(trace[plan.rounds as usize], s.p_r, epsilon = 1e-12);
    }

    #[test]
    fn rotation_variant_identity() {
        let d = Domain::interval(6);
        let f = TargetSpec::Exponential { beta: 0.0 };
        let s = simulate_rotation_variant(&f, &ReferenceSpec::constant(1.0, &d), &d, 10).unwrap();
        assert!(s.dist < 1e-15);
        assert_eq!(s.m, None);
    }

    #[test]
    fn closed_form_plans_meet_bound() {
        let d = Domain::scaled(1 << 12);
        let f = TargetSpec::Gaussian {
            sigma: 0.125,
            center: 0.0,
        };
        let g = design_gaussian_reference(0.125, &d, TailAnchor::Origin).unwrap();
        let p: f64 = success_probability(&f, &g, &d).unwrap();
        for eps in [1e-3, 1e-6] {
            let plan = gaussian_plan(eps, p.sqrt()).unwrap();
            assert!(plan.satisfies_bound(&f, &g, &d).unwrap());
        }
        let n = 1 << 10;
        let d = Domain::scaled(n);
        let g = ReferenceSpec::constant(0.5, &d);
        let p: f64 = success_probability(&TargetSpec::Tanh, &g, &d).unwrap();
        for eps in [1e-4, 1e-6] {
            let plan = tanh_plan(eps, n, p.sqrt()).unwrap();
            assert!(plan.satisfies_bound(&TargetSpec::Tanh, &g, &d).unwrap());
        }
        // On the midpoint grid min|x| = δ/2, so max 2g/f ≈ 2N and M = N is short by 2.
        let plan = tanh_plan(1e-2, n, p.sqrt()).unwrap();
        assert_eq!(plan.m, n as u64);
        assert!(!plan.satisfies_bound(&TargetSpec::Tanh, &g, &d).unwrap());
    }

    #[test]
    fn summary_json_shape() {
        let d = Domain::interval(40);
        let f = TargetSpec::PowerLaw { beta: 1.0 };
        let g = design_ziggurat_powerlaw(1.0, 6);
        let (_, s) = prepare(&f, &g, &d, 0.01, &ClauseSpec::Standard).unwrap();
        let v = serde_json::to_value(s.summary()).unwrap();
        for key in ["p0", "pR", "R", "M", "dist", "topAmplitudes"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["topAmplitudes"].as_array().unwrap().len(), 16);
    }

    #[test]
    fn isqrt_exact() {
        for v in [0u128, 1, 3, 4, 15, 16, 17, (1 << 80) - 1, 1 << 80] {
            let r = isqrt(v);
            assert!(r * r <= v && (r + 1) * (r + 1) > v);
        }
    }
}
