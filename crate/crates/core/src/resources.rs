//! Toffoli-count models for the QRS circuits and the LKS baseline.
//!
//! Register sizes follow the domain `{1, …, N}`: a size-`N` instance uses `n = ⌊log₂N⌋ + 1`
//! qubits, so the crossover scan at `N = 2^p` evaluates both methods at `n = p + 1`.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{ceil_log2, next_pow2_at_least};

/// Single-call Toffoli counts of the QRS subroutines.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubroutineCounts {
    #[serde(rename = "PREP_g")]
    pub prep_g: u64,
    #[serde(rename = "U_f")]
    pub u_f: u64,
    #[serde(rename = "U_g")]
    pub u_g: u64,
    #[serde(rename = "Comp")]
    pub comp: u64,
    #[serde(rename = "USP")]
    pub usp: u64,
    #[serde(rename = "PHASE")]
    pub phase: u64,
}

impl SubroutineCounts {
    /// Calls per subroutine with `R` amplification rounds.
    pub fn multiplicities(r: u64) -> Self {
        Self {
            prep_g: 1 + 2 * r,
            u_f: 2 + 2 * r,
            u_g: 2 + 2 * r,
            comp: 1 + 2 * r,
            usp: 2 + 4 * r,
            phase: 1,
        }
    }

    pub fn dot(&self, other: &Self) -> u64 {
        self.prep_g * other.prep_g
            + self.u_f * other.u_f
            + self.u_g * other.u_g
            + self.comp * other.comp
            + self.usp * other.usp
            + self.phase * other.phase
    }
}

/// Parameters behind a cost report. Unused entries stay `None`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CostParams {
    pub n: u32,
    pub l: Option<u32>,
    pub b: Option<u32>,
    pub b_m: Option<u32>,
    pub b_delta: Option<u32>,
    pub b_qrom: Option<u32>,
    pub k: Option<u32>,
    pub eps: f64,
    pub eps_prime: Option<f64>,
    pub r: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CostReport {
    pub target_kind: String,
    pub per_subroutine: SubroutineCounts,
    pub multiplicities: SubroutineCounts,
    pub total: u64,
    pub params: CostParams,
    /// Coarse-rotation part of `PREP_g`.
    pub prep_c: Option<u64>,
    /// Piece-selection part of `PREP_g`.
    pub mu_select: Option<u64>,
}

impl CostReport {
    fn new(kind: &str, per: SubroutineCounts, params: CostParams) -> Self {
        let mult = SubroutineCounts::multiplicities(params.r);
        Self {
            target_kind: kind.to_string(),
            per_subroutine: per,
            multiplicities: mult,
            total: per.dot(&mult),
            params,
            prep_c: None,
            mu_select: None,
        }
    }
}

/// `Σ count × multiplicity`, recomputed from the report's rounds.
pub fn total_qrs_cost(report: &CostReport) -> u64 {
    report
        .per_subroutine
        .dot(&SubroutineCounts::multiplicities(report.params.r))
}

fn clog2(x: f64) -> u32 {
    ceil_log2(x).max(0) as u32
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("ε = {eps} must lie in (0, 1)")))
    }
}

/// Qubits for a domain of size `N`.
pub fn register_bits(n_points: u64) -> u32 {
    64 - n_points.leading_zeros()
}

/// `1/x` prepared from the dyadic ziggurat, one set of coarse rotations per piece.
pub fn cost_powerlaw_1d(n: u32, b_m: u32, eps_prime: f64) -> Result<CostReport> {
    if n < 2 {
        return Err(Error::Precondition("n must be ≥ 2".into()));
    }
    check_eps(eps_prime)?;
    let (nn, bm) = (n as u64, b_m as u64);
    let prep_c = (1 + 2 * (nn - 1)) * clog2(1.0 / eps_prime) as u64;
    let select = 2 * nn - 3;
    let per = SubroutineCounts {
        prep_g: prep_c + select,
        u_g: 2 * bm * nn - bm.max(nn),
        comp: bm + nn,
        ..Default::default()
    };
    let mut rep = CostReport::new(
        "inverse1d",
        per,
        CostParams {
            n,
            b_m: Some(b_m),
            eps: eps_prime,
            eps_prime: Some(eps_prime),
            r: 1,
            ..Default::default()
        },
    );
    rep.prep_c = Some(prep_c);
    rep.mu_select = Some(select);
    Ok(rep)
}

/// `1/|x|` on an `L³` grid, `L = 2^l`.
pub fn cost_powerlaw_3d(l: u32, b_m: u32) -> Result<CostReport> {
    if l < 1 {
        return Err(Error::Precondition("l must be ≥ 1".into()));
    }
    let (ll, bm) = (l as u64, b_m as u64);
    let prep_c = ll - 1;
    let select = 6 * ll - 3;
    let per = SubroutineCounts {
        prep_g: prep_c + select,
        u_g: 3 * ll * ll - ll - 1 + 2 * bm * bm - bm + 2 * (2 * bm) * (2 * ll + 2)
            - (2 * bm).max(2 * ll + 2),
        comp: bm + 2 * ll + 2,
        ..Default::default()
    };
    let mut rep = CostReport::new(
        "inverse3d",
        per,
        CostParams {
            n: 3 * l,
            l: Some(l),
            b_m: Some(b_m),
            r: 1,
            ..Default::default()
        },
    );
    rep.prep_c = Some(prep_c);
    rep.mu_select = Some(select);
    Ok(rep)
}

/// Which printed form of the Gaussian `U_f` QROM term to use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum GaussianUfForm {
    /// `(k−1)[(2^{⌈2(n−1)/k⌉}−1) + (2^{⌊2n/k⌋}−1)]`, scanned over `k ≥ 2` (it vanishes at `k = 1`).
    #[default]
    Table,
    /// `(k−1)(2^{⌈2(n−1)/k⌉}−1) + (2^{⌊2(n−1)/k⌋}−1)`, scanned over `k ≥ 1`.
    Text,
}

fn pow2_sat(e: u64) -> u128 {
    if e >= 127 {
        u128::MAX
    } else {
        1u128 << e
    }
}

fn gaussian_uf(n: u64, k: u64, b: u64, form: GaussianUfForm) -> u64 {
    let m = n - 1;
    let (k, b) = (k as u128, b as u128);
    let up = pow2_sat((2 * m).div_ceil(k as u64)) - 1;
    let qrom = match form {
        GaussianUfForm::Table => (k - 1).saturating_mul(up.saturating_add(pow2_sat(2 * n / k as u64) - 1)),
        GaussianUfForm::Text => (k - 1).saturating_mul(up).saturating_add(pow2_sat(2 * m / k as u64) - 1),
    };
    let m = m as u128;
    let total = (2 * m * m - m).saturating_add(qrom).saturating_add(2 * (k - 1) * b * b - (k - 1) * b);
    total.min(u64::MAX as u128) as u64
}

/// Gaussian of width `2^{-3}` on `n` qubits.
pub fn cost_gaussian(n: u32, eps: f64) -> Result<CostReport> {
    cost_gaussian_with(n, eps, GaussianUfForm::Table)
}

pub fn cost_gaussian_with(n: u32, eps: f64, form: GaussianUfForm) -> Result<CostReport> {
    if n < 2 {
        return Err(Error::Precondition("n must be ≥ 2".into()));
    }
    check_eps(eps)?;
    let m = next_pow2_at_least((4.0 / eps).max(2.0 * 12f64.exp()))?;
    let b_m = clog2(m as f64);
    let eps_t = (eps / 4.0).min((-12f64).exp() / 2.0);
    let b = b_m.min(clog2(1.0 / eps_t));
    let k_lo = match form {
        GaussianUfForm::Table => 2,
        GaussianUfForm::Text => 1,
    };
    let nn = n as u64;
    let (u_f, k) = (k_lo..=(2 * (nn - 1)).max(k_lo))
        .map(|k| (gaussian_uf(nn, k, b as u64, form), k))
        .min()
        .expect("non-empty k range");
    let per = SubroutineCounts {
        prep_g: clog2(8.0 / eps) as u64,
        u_f,
        comp: 2 * (2 * b_m as u64 - 1),
        ..Default::default()
    };
    Ok(CostReport::new(
        "gaussian",
        per,
        CostParams {
            n,
            b: Some(b),
            b_m: Some(b_m),
            k: Some(k as u32),
            eps,
            r: 1,
            ..Default::default()
        },
    ))
}

fn tanh_uf(n: u32, k: u32, b_delta: u64) -> (u64, u32) {
    let bq = n.div_ceil(k);
    let kk = k as u64;
    let sq = 2 * (b_delta + 2) * (b_delta + 2);
    let u_f = kk * ((1u64 << bq) - 2) + (kk - 1) * (sq - b_delta - 2) + (sq - (b_delta + 2)) + (b_delta + 1);
    (u_f, bq)
}

/// `tanh(x)` on `n` qubits, `k` scanned over `[1, n]` unless fixed.
pub fn cost_tanh(n: u32, eps: f64) -> Result<CostReport> {
    cost_tanh_with(n, eps, None)
}

pub fn cost_tanh_with(n: u32, eps: f64, k: Option<u32>) -> Result<CostReport> {
    if n < 2 {
        return Err(Error::Precondition("n must be ≥ 2".into()));
    }
    check_eps(eps)?;
    if let Some(k) = k {
        if k < 1 || k > n {
            return Err(Error::Precondition(format!("k = {k} outside [1, {n}]")));
        }
    }
    let eps_t = (eps / 4.0).min(2f64.powi(-(n as i32)));
    let b_delta = clog2(1.0 / eps_t);
    let ks: Vec<u32> = k.map_or_else(|| (1..=n).collect(), |k| vec![k]);
    let (u_f, kb, bq) = ks
        .into_iter()
        .map(|k| {
            let (u, bq) = tanh_uf(n, k, b_delta as u64);
            (u, k, bq)
        })
        .min()
        .expect("non-empty k range");
    let per = SubroutineCounts {
        u_f,
        comp: 1,
        ..Default::default()
    };
    Ok(CostReport::new(
        "tanh",
        per,
        CostParams {
            n,
            b_delta: Some(b_delta),
            b_qrom: Some(bq),
            k: Some(kb),
            eps,
            r: 1,
            ..Default::default()
        },
    ))
}

/// Product-state preparation of `e^{-βx}`: `n` rotations of `⌈log₂(2πn/ε)⌉` bits.
pub fn cost_exponential(n: u32, eps: f64) -> Result<u64> {
    if n < 1 {
        return Err(Error::Precondition("n must be ≥ 1".into()));
    }
    check_eps(eps)?;
    Ok(n as u64 * clog2(2.0 * PI * n as f64 / eps) as u64)
}

/// QROM splitting factors of one LKS stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LksStage {
    pub k: u32,
    pub lambda: u64,
    pub lambda_prime: u64,
    pub cost: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LksParams {
    pub n: u32,
    pub b: u32,
    pub stages: Vec<LksStage>,
}

impl LksParams {
    pub fn total(&self) -> u64 {
        self.stages.iter().map(|s| s.cost).sum()
    }
}

fn floor_ceil(x: f64) -> [u64; 2] {
    [(x.floor() as u64).max(1), (x.ceil() as u64).max(1)]
}

/// LKS stages for `n` qubits with `b`-bit angles.
pub fn lks_params(n: u32, b: u32) -> LksParams {
    let bb = b as u64;
    let stages = (0..n)
        .map(|k| {
            let size = 1u64 << k;
            let (qrom, lambda) = floor_ceil((size as f64 / b as f64).sqrt())
                .into_iter()
                .map(|l| (size.div_ceil(l) + bb * (l - 1), l))
                .min()
                .expect("two candidates");
            let (unload, lambda_prime) = floor_ceil((size as f64).sqrt())
                .into_iter()
                .map(|l| (size.div_ceil(l) + (l - 1), l))
                .min()
                .expect("two candidates");
            LksStage {
                k,
                lambda,
                lambda_prime,
                cost: qrom + unload + bb.saturating_sub(2),
            }
        })
        .collect();
    LksParams { n, b, stages }
}

/// Angle bits `b = ⌈log₂(2πn/ε)⌉` of the LKS rotations.
pub fn lks_bits(n: u32, eps: f64) -> Result<u32> {
    if n < 1 {
        return Err(Error::Precondition("n must be ≥ 1".into()));
    }
    check_eps(eps)?;
    Ok(clog2(2.0 * PI * n as f64 / eps))
}

/// LKS cost with `b` from [`lks_bits`].
pub fn cost_lks(n: u32, eps: f64) -> Result<u64> {
    Ok(lks_params(n, lks_bits(n, eps)?).total())
}

/// Example targets with crossover support.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum TargetKind {
    Inverse1d,
    Inverse3d,
    Gaussian,
    Tanh,
}

impl TargetKind {
    pub const ALL: [TargetKind; 4] = [Self::Inverse1d, Self::Inverse3d, Self::Gaussian, Self::Tanh];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Inverse1d => "inverse1d",
            Self::Inverse3d => "inverse3d",
            Self::Gaussian => "gaussian",
            Self::Tanh => "tanh",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parse(format!("unknown target kind {s}")))
    }
}

/// Levels whose `N_f²` is summed point by point.
const EXACT_3D_LEVELS: u32 = 7;

/// `N_g/N_f` of the 3D ziggurat for `1/|x|` on `[0, 2^l)³ \ {0}`.
///
/// `N_g² = 7(2^l − 1)` exactly. `N_f²` is summed directly up to [`EXACT_3D_LEVELS`]; beyond,
/// its level increments follow `d_{l+1} = 2d_l − c` with `c` fitted on the last exact levels.
pub fn powerlaw3d_norm_ratio(l: u32) -> f64 {
    static NF2: OnceLock<Vec<f64>> = OnceLock::new();
    let nf2 = NF2.get_or_init(|| {
        (1..=EXACT_3D_LEVELS)
            .into_par_iter()
            .map(|l| {
                let side = 1i64 << l;
                let mut nf = 0.0;
                for x in 0..side {
                    for y in 0..side {
                        for z in 0..side {
                            if x + y + z > 0 {
                                nf += 1.0 / (x * x + y * y + z * z) as f64;
                            }
                        }
                    }
                }
                nf
            })
            .collect()
    });
    let l = l.max(1);
    let exact = EXACT_3D_LEVELS as usize;
    let nf = if l as usize <= exact {
        nf2[l as usize - 1]
    } else {
        let d_last = nf2[exact - 1] - nf2[exact - 2];
        let c = 2.0 * (nf2[exact - 2] - nf2[exact - 3]) - d_last;
        let (mut nf, mut d) = (nf2[exact - 1], d_last);
        for _ in EXACT_3D_LEVELS..l {
            d = 2.0 * d - c;
            nf += d;
        }
        nf
    };
    let ng = 7.0 * (2f64.powi(l as i32) - 1.0);
    (ng / nf).sqrt()
}

/// QRS cost of the example target on an `n`-qubit register at accuracy `ε`.
pub fn qrs_cost(kind: TargetKind, n: u32, eps: f64) -> Result<CostReport> {
    check_eps(eps)?;
    match kind {
        TargetKind::Inverse1d => {
            let big_n = 2f64.powi(n as i32);
            let ng2: f64 = (0..n).map(|mu| 2f64.powi(-(mu as i32))).sum();
            let nf2 = PI * PI / 6.0 - 1.0 / big_n;
            let m = next_pow2_at_least((2.0 * (ng2 / nf2).sqrt() / eps).max(4.0))?;
            let r_tot = 3.0 * (2 * n - 1) as f64;
            let mut rep = cost_powerlaw_1d(n, clog2(m as f64), eps / r_tot)?;
            rep.params.eps = eps;
            Ok(rep)
        }
        TargetKind::Inverse3d => {
            let l = n.div_ceil(3);
            let m = next_pow2_at_least((2.0 * powerlaw3d_norm_ratio(l) / eps).max(4.0 * 3f64.sqrt()))?;
            let mut rep = cost_powerlaw_3d(l, clog2(m as f64))?;
            rep.params.eps = eps;
            Ok(rep)
        }
        TargetKind::Gaussian => cost_gaussian(n, eps),
        TargetKind::Tanh => cost_tanh(n, eps),
    }
}

/// Lower and upper exponents of the crossover scan over `N = 2^p`.
pub const CROSSOVER_RANGE: (u32, u32) = (2, 30);

/// Smallest `N = 2^p` where the QRS total does not exceed the LKS cost.
pub fn crossover(kind: TargetKind, eps: f64) -> Result<u64> {
    let (lo, hi) = CROSSOVER_RANGE;
    for p in lo..=hi {
        let n = p + 1;
        if qrs_cost(kind, n, eps)?.total <= cost_lks(n, eps)? {
            return Ok(1u64 << p);
        }
    }
    Err(Error::NoCrossover { lo, hi })
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    cov / var
}

/// One row of a cost sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub method: String,
    #[serde(rename = "targetKind")]
    pub target_kind: String,
    #[serde(rename = "N")]
    pub n_points: u64,
    pub eps: f64,
    pub toffoli: u64,
    pub k_opt: Option<u32>,
    #[serde(rename = "R")]
    pub r: Option<u64>,
}

/// QRS and LKS rows for every `(N = 2^p, ε)` pair.
pub fn sweep(kind: TargetKind, exponents: &[u32], eps: &[f64]) -> Result<Vec<CostRow>> {
    let pairs: Vec<(u32, f64)> = exponents.iter().flat_map(|p| eps.iter().map(move |e| (*p, *e))).collect();
    let rows: Result<Vec<[CostRow; 2]>> = pairs
        .par_iter()
        .map(|&(p, e)| {
            let n = p + 1;
            let rep = qrs_cost(kind, n, e)?;
            Ok([
                CostRow {
                    method: "qrs".into(),
                    target_kind: kind.name().into(),
                    n_points: 1 << p,
                    eps: e,
                    toffoli: rep.total,
                    k_opt: rep.params.k,
                    r: Some(rep.params.r),
                },
                CostRow {
                    method: "lks".into(),
                    target_kind: kind.name().into(),
                    n_points: 1 << p,
                    eps: e,
                    toffoli: cost_lks(n, e)?,
                    k_opt: None,
                    r: None,
                },
            ])
        })
        .collect();
    Ok(rows?.into_iter().flatten().collect())
}

/// CSV with header `method,targetKind,N,eps,toffoli,k_opt,R`.
pub fn write_csv<W: Write>(rows: &[CostRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
    }
    out.flush().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(())
}
