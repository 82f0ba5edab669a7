//! Acceptance criteria 1–9. Prints one PASS/FAIL line per criterion and exits non-zero if
//! any criterion fails.

use std::f64::consts::{FRAC_PI_4, LN_2};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex;
use qrs_core::blockenc::{self, BlockModel, CubeGrid, MatrixSpec, ToeplitzSymbol};
use qrs_core::numerics::AmplitudeVector;
use qrs_core::qrs::{self, ClausePoint, ClauseSpec};
use qrs_core::refdesign::{self, ReferenceSpec, TailAnchor};
use qrs_core::resources::{self, TargetKind};
use qrs_core::targets::{Domain, TargetSpec};

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: u32, name: &str, elapsed: Duration, out: Result<Outcome, String>) -> bool {
    let (pass, detail) = match out {
        Ok(o) => (o.pass, o.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    println!(
        "criterion {id} [{}] {name}: {detail} ({:.2} s)",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    pass
}

struct Case {
    label: &'static str,
    f: TargetSpec<f64>,
    g: ReferenceSpec<f64>,
    d: Domain,
}

const N: usize = 1 << 10;
const EPS: f64 = 1e-4;

fn catalog() -> Result<Vec<Case>, String> {
    let int = Domain::interval(N as i64);
    let mut cases: Vec<Case> = [0.5, 1.0, 2.0]
        .into_iter()
        .map(|beta| Case {
            label: match beta {
                b if b == 0.5 => "powerLaw β=1/2",
                b if b == 1.0 => "powerLaw β=1",
                _ => "powerLaw β=2",
            },
            f: TargetSpec::PowerLaw { beta },
            g: refdesign::design_ziggurat_powerlaw(beta, 11),
            d: int.clone(),
        })
        .collect();
    cases.push(Case {
        label: "powerLaw 3D l=4",
        f: TargetSpec::PowerLaw { beta: 1.0 },
        g: refdesign::design_ziggurat_powerlaw_3d(1.0, 4),
        d: Domain::Grid3d { side: 16 },
    });
    let sc = Domain::scaled(N);
    cases.push(Case {
        label: "gaussian σ=2^-3",
        f: TargetSpec::Gaussian { sigma: 0.125, center: 0.0 },
        g: refdesign::design_gaussian_reference(0.125, &sc, TailAnchor::Origin).map_err(|e| e.to_string())?,
        d: sc.clone(),
    });
    cases.push(Case {
        label: "tanh",
        f: TargetSpec::Tanh,
        g: ReferenceSpec::constant(0.5, &sc),
        d: sc.clone(),
    });
    cases.push(Case {
        label: "exponential β=1",
        f: TargetSpec::Exponential { beta: 1.0 },
        g: refdesign::design_exponential_reference(1.0),
        d: sc,
    });
    Ok(cases)
}

fn oracle(f: &TargetSpec<f64>, d: &Domain) -> Result<AmplitudeVector<f64>, String> {
    let v: Vec<Complex<f64>> = d
        .points::<f64>()
        .iter()
        .enumerate()
        .map(|(i, p)| f.polar(i, p).map(|(r, ph)| Complex::from_polar(r, ph)))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let n = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    Ok(AmplitudeVector::new(v.into_iter().map(|c| c / n).collect()))
}

fn criterion1() -> Result<Outcome, String> {
    let mut fails = Vec::new();
    let mut worst: f64 = 0.0;
    for c in catalog()? {
        let t = Instant::now();
        let (_, s) = qrs::prepare(&c.f, &c.g, &c.d, EPS, &ClauseSpec::Standard).map_err(|e| e.to_string())?;
        let dist = s.output.distance(&oracle(&c.f, &c.d)?).map_err(|e| e.to_string())?;
        let secs = t.elapsed().as_secs_f64();
        worst = worst.max(dist);
        if dist > EPS || secs >= 1.0 {
            fails.push(format!("{} dist {dist:.2e} in {secs:.2} s", c.label));
        }
    }
    Ok(Outcome {
        pass: fails.is_empty(),
        detail: if fails.is_empty() {
            format!("7 targets, max dist {worst:.2e} ≤ {EPS:e}")
        } else {
            fails.join("; ")
        },
    })
}

fn criterion2() -> Result<Outcome, String> {
    let e = |x: qrs_core::error::Error| x.to_string();
    let dg = Domain::scaled(1 << 20);
    let sigma = 2f64.powi(-6);
    let fg = TargetSpec::Gaussian { sigma, center: 0.0 };
    let gg = refdesign::design_gaussian_reference(sigma, &dg, TailAnchor::Origin).map_err(e)?;
    let p_gauss: f64 = qrs::success_probability(&fg, &gg, &dg).map_err(e)?;

    let dt = Domain::scaled(N);
    let p_tanh: f64 = qrs::success_probability(&TargetSpec::Tanh, &ReferenceSpec::constant(0.5, &dt), &dt).map_err(e)?;

    let di = Domain::interval(N as i64);
    let half = TargetSpec::PowerLaw { beta: 0.5 };
    let g_half = refdesign::design_ziggurat_powerlaw(0.5, 11);
    let p_half: f64 = qrs::success_probability(&half, &g_half, &di).map_err(e)?;
    let r_half = qrs::choose_m(&half, &g_half, &di, EPS).map_err(e)?.rounds;
    let one = TargetSpec::PowerLaw { beta: 1.0 };
    let p_one: f64 = qrs::success_probability(&one, &refdesign::design_ziggurat_powerlaw(1.0, 11), &di).map_err(e)?;

    let checks = [
        ("gaussian", (p_gauss - 0.529).abs() <= 0.02, format!("{p_gauss:.4} vs 0.529±0.02")),
        ("tanh", (p_tanh - 0.704).abs() <= 0.01, format!("{p_tanh:.4} vs 0.704±0.01")),
        ("β=1/2", p_half >= LN_2 && r_half == 1, format!("{p_half:.4} ≥ ln2, R={r_half}")),
        ("β=1", p_one >= 0.5, format!("{p_one:.4} ≥ 0.5")),
    ];
    Ok(Outcome {
        pass: checks.iter().all(|c| c.1),
        detail: checks
            .iter()
            .map(|(n, ok, d)| format!("{n} {d} {}", if *ok { "ok" } else { "MISS" }))
            .collect::<Vec<_>>()
            .join("; "),
    })
}

fn criterion3() -> Result<Outcome, String> {
    let mut fails = Vec::new();
    let mut runs = 0;
    for c in catalog()? {
        let (plan, s) = qrs::prepare(&c.f, &c.g, &c.d, EPS, &ClauseSpec::Standard).map_err(|e| e.to_string())?;
        runs += 1;
        let theta = s.theta();
        if theta <= FRAC_PI_4 && s.p_r < (2.0 * theta).cos().powi(2) {
            fails.push(format!("{} pR {:.4} < cos²2θ", c.label, s.p_r));
        }
        let rounds = s.amplify(plan.rounds.max(3)).map_err(|e| e.to_string())?;
        let neg = AmplitudeVector::new(s.output.entries().iter().map(|z| -z).collect());
        for (r, step) in rounds.iter().enumerate() {
            let d = step
                .good
                .distance(&s.output)
                .map_err(|e| e.to_string())?
                .min(step.good.distance(&neg).map_err(|e| e.to_string())?);
            if d >= 1e-12 {
                fails.push(format!("{} round {r} drift {d:.1e}", c.label));
            }
        }
    }
    Ok(Outcome {
        pass: fails.is_empty(),
        detail: if fails.is_empty() {
            format!("{runs} runs, post-selected state fixed to 1e-12 over all rounds")
        } else {
            fails.join("; ")
        },
    })
}

/// Largest integer `≤ v` with a tie guard; `None` when `v` sits within `tol` of an integer.
fn guarded_floor(v: f64, tol: f64) -> Option<u64> {
    let r = v.round();
    if r != 0.0 && (v - r).abs() < tol {
        None
    } else {
        Some(v.floor() as u64)
    }
}

fn criterion4() -> Result<Outcome, String> {
    let e = |x: qrs_core::error::Error| x.to_string();
    let ms: Vec<u64> = (0..=12).map(|k| 1u64 << k).collect();
    let mut mismatches = Vec::new();
    let mut checked = 0u64;

    // 1/x against its ziggurat: exact integer comparison m·g ≤ M·f over rationals.
    let d1 = Domain::interval(255);
    for i in 0..d1.size() {
        let p = d1.point::<f64>(i);
        let x = (i + 1) as u64;
        let mu = 64 - x.leading_zeros();
        let cp = ClausePoint { point: p, f: 1.0 / x as f64, g: 2f64.powi(-(mu as i32 - 1)) };
        for &big_m in &ms {
            for m in 1..=big_m {
                let exact = num_rational::Ratio::new(m, 1) <= num_rational::Ratio::new(big_m << (mu - 1), x);
                if ClauseSpec::InversePowerLaw1d.accepts(&cp, m, big_m, 40).map_err(e)? != exact {
                    mismatches.push(format!("1D x={x} M={big_m} m={m}"));
                }
                checked += 1;
            }
        }
    }

    // 1/|x| against the shell ziggurat: m ≤ M·2^{μ-1}/|x| decided in floating point away from ties.
    let d3 = Domain::Grid3d { side: 6 };
    for i in 0..d3.size() {
        let p = d3.point::<f64>(i);
        let r = p.radius();
        let mu = match p {
            qrs_core::targets::Point::Lattice(v) => 64 - (v.iter().map(|c| c.unsigned_abs()).max().unwrap()).leading_zeros(),
            _ => unreachable!(),
        };
        let cp = ClausePoint { point: p, f: 1.0 / r, g: 2f64.powi(-(mu as i32 - 1)) };
        for &big_m in &ms {
            let ideal = big_m as f64 * 2f64.powi(mu as i32 - 1) / r;
            let Some(a) = guarded_floor(ideal, 1e-9) else {
                // Exact integer ratio: the squared comparison is an exact tie at m = ideal.
                let a = ideal.round() as u64;
                for m in 1..=big_m {
                    if ClauseSpec::InversePowerLaw3d.accepts(&cp, m, big_m, 40).map_err(e)? != (m <= a) {
                        mismatches.push(format!("3D tie i={i} M={big_m} m={m}"));
                    }
                }
                continue;
            };
            for m in 1..=big_m {
                if ClauseSpec::InversePowerLaw3d.accepts(&cp, m, big_m, 40).map_err(e)? != (m <= a) {
                    mismatches.push(format!("3D i={i} M={big_m} m={m}"));
                }
                checked += 1;
            }
        }
    }

    // tanh against g = 1/2: exact set m ≤ 2M·tanh|x|; the clause and the standard form
    // run at 52 bits, below which the two can only disagree at near-ties.
    let dt = Domain::scaled(256);
    let bits = 52;
    let mut ties = 0;
    for i in 0..dt.size() {
        let p = dt.point::<f64>(i);
        let x = p.coordinate().unwrap();
        let cp = ClausePoint { point: p, f: x.tanh().abs(), g: 0.5 };
        for &big_m in &ms {
            let Some(a) = guarded_floor(2.0 * big_m as f64 * x.tanh().abs(), 1e-6) else {
                ties += 1;
                continue;
            };
            for m in 1..=big_m {
                let exact = m <= a;
                let tanh = ClauseSpec::Tanh.accepts(&cp, m, big_m, bits).map_err(e)?;
                let std = ClauseSpec::Standard.accepts(&cp, m, big_m, bits).map_err(e)?;
                if tanh != exact || std != exact {
                    mismatches.push(format!("tanh i={i} M={big_m} m={m}"));
                }
                checked += 1;
            }
        }
    }
    Ok(Outcome {
        pass: mismatches.is_empty() && ties == 0,
        detail: if mismatches.is_empty() {
            format!("{checked} (x, M, m) triples identical, {ties} tanh near-ties")
        } else {
            format!("{} mismatches, first {}", mismatches.len(), mismatches[0])
        },
    })
}

fn criterion5() -> Result<Outcome, String> {
    let e = |x: qrs_core::error::Error| x.to_string();
    let d = Domain::mesh2d(300, 300);
    let f = TargetSpec::Mesh2d;
    let mut ps = Vec::new();
    let mut cells3 = 0;
    for n in 1..=6 {
        let g = refdesign::design_mesh2d::<f64>(n).map_err(e)?;
        if n == 3 {
            cells3 = g.len();
        }
        ps.push(qrs::success_probability(&f, &g, &d).map_err(e)?);
    }
    let monotone = ps.windows(2).all(|w| w[1] >= w[0]);
    let p3 = ps[2];
    Ok(Outcome {
        pass: cells3 == 24 && p3 >= 0.25 && monotone,
        detail: format!(
            "{cells3} cells, P(3) = {p3:.4} (need ≥ 0.25), P(1..6) = [{}] {}",
            ps.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>().join(", "),
            if monotone { "nondecreasing" } else { "NOT monotone" }
        ),
    })
}

fn criterion6() -> Result<Outcome, String> {
    let e = |x: qrs_core::error::Error| x.to_string();
    let eps = 1e-6;
    let mut lines = Vec::new();
    let mut pass = true;
    let toe = MatrixSpec::toeplitz1d(64, |d| Complex::new(1.0 / (1.0 + d.abs() as f64), 0.0)).map_err(e)?;
    let grid = CubeGrid::new(1, 64).map_err(e)?;
    // Dyadic ziggurat over the shift, 2^{-k} on 2^k ≤ 1+|δ| < 2^{k+1}.
    let zig = ToeplitzSymbol::from_fn(grid, |d| {
        let k = 63 - (1 + d[0].unsigned_abs()).leading_zeros();
        Complex::new(2f64.powi(-(k as i32)), 0.0)
    });
    let mut cases: Vec<(String, BlockModel<f64>, &MatrixSpec<f64>)> = vec![
        ("toeplitz lcuImplicit".into(), BlockModel::LcuImplicit, &toe),
        ("toeplitz lcuExplicit".into(), BlockModel::LcuExplicit { reference: zig }, &toe),
    ];
    let coul = MatrixSpec::coulomb3d(2).map_err(e)?;
    for m in blockenc::coulomb_models(&coul).map_err(e)? {
        cases.push((format!("coulomb {}", m.name()), m, &coul));
    }
    for (label, model, a) in cases {
        let r = blockenc::build(&model, a, eps).map_err(e)?;
        let err = blockenc::verify(&r, a).map_err(e)?;
        let ok = err <= eps / r.alpha && r.identity_error <= 1e-10;
        pass &= ok;
        lines.push(format!("{label} {err:.1e}/{:.1e}{}", eps / r.alpha, if ok { "" } else { " MISS" }));
    }
    Ok(Outcome { pass, detail: lines.join("; ") })
}

fn criterion7() -> Result<Outcome, String> {
    let a = blockenc::coulomb_alphas(5).map_err(|e| e.to_string())?;
    let c = 2f64.powi(5);
    let within = |v: f64, target: f64, tol: f64| (v / target - 1.0).abs() <= tol;
    let r = [
        ("α_f/N^⅓", a.alpha_f / c, 112.0, 0.15),
        ("α_zig/N^⅓", a.alpha_zig / c, 94.5, 0.15),
        ("α_rc/N^⅓", a.alpha_rc / c, 56.0, 0.20),
        ("α_c/N^⅔", a.alpha_c / (c * c), 56f64.sqrt(), 0.20),
    ];
    let order = a.alpha_rc < a.alpha_zig && a.alpha_zig < a.alpha_f;
    Ok(Outcome {
        pass: order && r.iter().all(|(_, v, t, tol)| within(*v, *t, *tol)),
        detail: format!(
            "{}; ordering α_rc < α_zig < α_f {}",
            r.iter().map(|(n, v, t, _)| format!("{n} {v:.2} vs {t:.2}")).collect::<Vec<_>>().join(", "),
            if order { "holds" } else { "BROKEN" }
        ),
    })
}

fn criterion8() -> Result<Outcome, String> {
    let cases = [
        (TargetKind::Inverse1d, 1e-3, 1e4),
        (TargetKind::Inverse1d, 1e-9, 3.3e4),
        (TargetKind::Inverse3d, 1e-3, 1.6e4),
        (TargetKind::Gaussian, 1e-9, 1e6),
        (TargetKind::Tanh, 1e-9, 5.2e5),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, eps, quoted) in cases {
        let n = resources::crossover(k, eps).map_err(|e| e.to_string())? as f64;
        let ok = n / quoted <= 2.0 && quoted / n <= 2.0;
        pass &= ok;
        parts.push(format!("{} ε={eps:e} N*={n} vs {quoted:e}{}", k.name(), if ok { "" } else { " MISS" }));
    }
    Ok(Outcome { pass, detail: parts.join("; ") })
}

fn criterion9() -> Result<Outcome, String> {
    let e = |x: qrs_core::error::Error| x.to_string();
    let ps: Vec<u32> = (10..=30).collect();
    let xs: Vec<f64> = ps.iter().map(|p| 2f64.powi(*p as i32)).collect();
    let mut pass = true;
    let (mut qmax, mut lmin, mut lmax) = (f64::MIN, f64::MAX, f64::MIN);
    for eps in [1e-3, 1e-6, 1e-9] {
        let lks: Vec<f64> = ps.iter().map(|p| resources::cost_lks(p + 1, eps).map(|v| v as f64)).collect::<Result<_, _>>().map_err(e)?;
        let sl = resources::loglog_slope(&xs, &lks);
        lmin = lmin.min(sl);
        lmax = lmax.max(sl);
        pass &= (0.4..=0.6).contains(&sl);
        for k in TargetKind::ALL {
            let q: Vec<f64> = ps
                .iter()
                .map(|p| resources::qrs_cost(k, p + 1, eps).map(|r| r.total as f64))
                .collect::<Result<_, _>>()
                .map_err(e)?;
            let s = resources::loglog_slope(&xs, &q);
            qmax = qmax.max(s);
            pass &= s < 0.2;
        }
    }
    Ok(Outcome {
        pass,
        detail: format!("QRS slopes ≤ {qmax:.3} (< 0.2), LKS slopes in [{lmin:.3}, {lmax:.3}] (⊂ [0.4, 0.6])"),
    })
}

type Criterion = (u32, &'static str, fn() -> Result<Outcome, String>, f64);

fn main() -> ExitCode {
    // Budgets in seconds; missing a budget fails the criterion.
    let all: [Criterion; 9] = [
        (1, "state-preparation correctness", criterion1, 7.0),
        (2, "success probabilities", criterion2, 5.0),
        (3, "amplification invariants", criterion3, f64::INFINITY),
        (4, "clause equivalence", criterion4, f64::INFINITY),
        (5, "mesh demo", criterion5, 10.0),
        (6, "block-encoding verification", criterion6, 30.0),
        (7, "Coulomb rescaling factors", criterion7, f64::INFINITY),
        (8, "crossovers vs LKS", criterion8, 60.0),
        (9, "scaling slopes", criterion9, f64::INFINITY),
    ];
    let mut failed = 0;
    for (id, name, run, budget) in all {
        let t = Instant::now();
        let mut out = run();
        let el = t.elapsed();
        if let Ok(o) = &mut out {
            if el.as_secs_f64() >= budget {
                o.pass = false;
                o.detail.push_str(&format!("; over the {budget} s budget"));
            }
        }
        if !report(id, name, el, out) {
            failed += 1;
        }
    }
    println!("acceptance: {} of 9 criteria pass", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

