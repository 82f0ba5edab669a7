use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex;
use qrs_core::blockenc::{self, BlockModel, CubeGrid, MatrixSpec, RealMatrix, ToeplitzSymbol, ZigguratPartition};
use qrs_core::qrs::{self, ClauseSpec};
use qrs_core::refdesign::{self, ReferenceSpec, TailAnchor};
use qrs_core::resources::{self, GaussianUfForm, TargetKind};
use qrs_core::targets::{Domain, TableTarget, TargetSpec};
use qrs_core::Error;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::{Anchor, BlockArgs, CliError, CompareArgs, EstimateArgs, Format, MeshArgs, OutputArgs, PrepareArgs, UfForm};

/// Largest register simulated amplitude by amplitude.
const MAX_SIM_QUBITS: u32 = 24;

type CliResult<T> = Result<T, CliError>;

fn emit(out: &OutputArgs, body: Value, csv: impl FnOnce() -> CliResult<Vec<Vec<String>>>) -> CliResult<()> {
    let bytes = match out.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&body).map_err(|e| CliError::invalid("serialization_error", e.to_string()))?;
            s.push('\n');
            s.into_bytes()
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in csv()? {
                w.write_record(&row).map_err(|e| CliError::invalid("serialization_error", e.to_string()))?;
            }
            w.into_inner().map_err(|e| CliError::invalid("serialization_error", e.to_string()))?
        }
    };
    match &out.output {
        Some(path) => fs::write(path, bytes)?,
        None => std::io::stdout().write_all(&bytes)?,
    }
    Ok(())
}

fn to_value<S: serde::Serialize>(v: &S) -> CliResult<Value> {
    serde_json::to_value(v).map_err(|e| CliError::invalid("serialization_error", e.to_string()))
}

fn strings<const K: usize>(cells: [&dyn ToString; K]) -> Vec<String> {
    cells.iter().map(|c| c.to_string()).collect()
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

struct Instance {
    name: String,
    f: TargetSpec<f64>,
    g: ReferenceSpec<f64>,
    d: Domain,
    rearranged: Option<ClauseSpec>,
}

fn instance(a: &PrepareArgs) -> CliResult<Instance> {
    if a.n < 1 || a.n > MAX_SIM_QUBITS {
        return Err(CliError::invalid(
            "invalid_arguments",
            format!("--n must lie in [1, {MAX_SIM_QUBITS}], got {}", a.n),
        ));
    }
    let size = 1usize << a.n;
    let name = a.target.clone();
    let inst = match a.target.as_str() {
        "powerlaw1d" => {
            let beta = a.beta.unwrap_or(1.0);
            Instance {
                f: TargetSpec::PowerLaw { beta },
                g: refdesign::design_ziggurat_powerlaw(beta, a.n + 1),
                d: Domain::interval(size as i64),
                rearranged: (beta == 1.0).then_some(ClauseSpec::InversePowerLaw1d),
                name,
            }
        }
        "powerlaw3d" => {
            let beta = a.beta.unwrap_or(1.0);
            let l = a.n.div_ceil(3);
            Instance {
                f: TargetSpec::PowerLaw { beta },
                g: refdesign::design_ziggurat_powerlaw_3d(beta, l),
                d: Domain::Grid3d { side: 1 << l },
                rearranged: (beta == 1.0).then_some(ClauseSpec::InversePowerLaw3d),
                name,
            }
        }
        "gaussian" => {
            let d = Domain::scaled(size);
            let anchor = match a.anchor {
                Anchor::Origin => TailAnchor::Origin,
                Anchor::Boundary => TailAnchor::Boundary,
            };
            Instance {
                f: TargetSpec::Gaussian { sigma: a.sigma, center: 0.0 },
                g: refdesign::design_gaussian_reference(a.sigma, &d, anchor)?,
                d,
                rearranged: None,
                name,
            }
        }
        "tanh" => {
            let d = Domain::scaled(size);
            Instance {
                f: TargetSpec::Tanh,
                g: ReferenceSpec::constant(0.5, &d),
                d,
                rearranged: Some(ClauseSpec::Tanh),
                name,
            }
        }
        "exponential" => {
            let beta = a.beta.unwrap_or(1.0);
            Instance {
                f: TargetSpec::Exponential { beta },
                g: refdesign::design_exponential_reference(beta),
                d: Domain::scaled(size),
                rearranged: None,
                name,
            }
        }
        "mesh2d" => Instance {
            f: TargetSpec::Mesh2d,
            g: refdesign::design_mesh2d(a.mesh)?,
            d: Domain::mesh2d(a.grid, a.grid),
            rearranged: None,
            name,
        },
        path if Path::new(path).is_file() => {
            let table = TableTarget::<f64>::parse(&fs::read_to_string(path)?)?;
            let d = table.domain();
            let peak = table.magnitudes.iter().copied().fold(0.0, f64::max);
            let f = TargetSpec::Table(table);
            let g = match a.pieces {
                Some(k) => refdesign::design_mesh1d(&f, &d, k)?,
                None => ReferenceSpec::constant(peak, &d),
            };
            Instance {
                f,
                g,
                d,
                rearranged: None,
                name: "customTable".into(),
            }
        }
        other => {
            return Err(CliError::invalid(
                "unknown_target",
                format!("`{other}` is neither a catalog target nor a readable table file"),
            ))
        }
    };
    Ok(inst)
}

enum Mode {
    Clause(ClauseSpec),
    Rotation,
}

fn mode(a: &PrepareArgs, inst: &Instance) -> CliResult<Mode> {
    Ok(match a.clause.as_str() {
        "rotation" => Mode::Rotation,
        "rearranged" => Mode::Clause(inst.rearranged.clone().ok_or_else(|| {
            CliError::from(Error::Precondition(format!("no rearranged clause for target `{}`", inst.name)))
        })?),
        other => Mode::Clause(
            ClauseSpec::from_name(other).map_err(|e| CliError::invalid("invalid_arguments", e.to_string()))?,
        ),
    })
}

pub fn plan(a: &PrepareArgs) -> CliResult<()> {
    let inst = instance(a)?;
    let plan = qrs::choose_m(&inst.f, &inst.g, &inst.d, a.eps)?;
    let p0 = qrs::success_probability(&inst.f, &inst.g, &inst.d)?;
    let body = json!({
        "command": "plan",
        "target": inst.name,
        "domain": to_value(&inst.d)?,
        "N": inst.d.size(),
        "eps": a.eps,
        "plan": to_value(&plan)?,
        "p0": p0,
        "referencePieces": inst.g.len(),
    });
    emit(&a.out, body, || {
        Ok(vec![
            strings([&"target", &"N", &"eps", &"M", &"bits", &"epsTilde", &"R", &"p0"]),
            strings([&inst.name, &inst.d.size(), &a.eps, &plan.m, &plan.bits, &plan.epsilon_tilde, &plan.rounds, &p0]),
        ])
    })
}

pub fn prepare(a: &PrepareArgs) -> CliResult<()> {
    let inst = instance(a)?;
    let (clause, plan, state) = match mode(a, &inst)? {
        Mode::Clause(c) => {
            let (plan, state) = qrs::prepare(&inst.f, &inst.g, &inst.d, a.eps, &c)?;
            (c.name().to_string(), Some(plan), state)
        }
        Mode::Rotation => {
            let bits = match a.angle_bits {
                Some(b) => b,
                None => qrs::choose_m(&inst.f, &inst.g, &inst.d, a.eps)?.bits,
            };
            let state = qrs::simulate_rotation_variant(&inst.f, &inst.g, &inst.d, bits)?;
            ("rotation".to_string(), None, state)
        }
    };
    let mut summary = to_value(&state.summary())?;
    summary["roundsQuantized"] = json!(state.rounds_quantized);
    summary["clamped"] = json!(state.clamped);
    let amplitudes: Vec<[f64; 2]> = state.output.entries().iter().map(|c| [c.re, c.im]).collect();
    let mut body = json!({
        "command": "prepare",
        "target": inst.name,
        "domain": to_value(&inst.d)?,
        "N": inst.d.size(),
        "eps": a.eps,
        "clause": clause,
        "plan": match &plan { Some(p) => to_value(p)?, None => Value::Null },
        "state": summary,
    });
    if a.full {
        body["amplitudes"] = json!(amplitudes);
    }
    emit(&a.out, body, || {
        let mut rows = vec![strings([&"index", &"re", &"im"])];
        rows.extend(amplitudes.iter().enumerate().map(|(i, c)| strings([&i, &c[0], &c[1]])));
        Ok(rows)
    })
}

fn dyadic_level(delta: i64) -> f64 {
    let k = 63 - (1 + delta.unsigned_abs()).leading_zeros();
    2f64.powi(-(k as i32))
}

struct MatrixCase {
    label: String,
    a: MatrixSpec<f64>,
    models: Vec<BlockModel<f64>>,
    closed: Option<blockenc::CoulombAlphas>,
}

fn matrix_case(a: &BlockArgs) -> CliResult<MatrixCase> {
    match a.matrix.as_str() {
        "coulomb3d" => {
            let m = MatrixSpec::coulomb3d(a.nu)?;
            let closed = if a.nu >= 2 { Some(blockenc::coulomb_alphas(a.nu)?) } else { None };
            Ok(MatrixCase {
                label: "coulomb3d".into(),
                models: blockenc::coulomb_models(&m)?,
                a: m,
                closed,
            })
        }
        "toeplitz1d" => {
            let n = a.size;
            let m = MatrixSpec::toeplitz1d(n, |d| Complex::new(1.0 / (1.0 + d.abs() as f64), 0.0))?;
            let grid = CubeGrid::new(1, n)?;
            let reference = ToeplitzSymbol::from_fn(grid, |d| Complex::new(dyadic_level(d[0]), 0.0));
            let g = RealMatrix::from_fn(n, |i, j| dyadic_level(j as i64 - i as i64));
            Ok(MatrixCase {
                label: "toeplitz1d".into(),
                models: vec![
                    BlockModel::LcuImplicit,
                    BlockModel::LcuExplicit { reference },
                    BlockModel::Ziggurat {
                        partition: ZigguratPartition::single(&m)?,
                    },
                    BlockModel::RowColumn { g: g.clone() },
                    BlockModel::Column { g },
                ],
                a: m,
                closed: None,
            })
        }
        path if Path::new(path).is_file() => {
            let m: MatrixSpec<f64> = serde_json::from_str(&fs::read_to_string(path)?)
                .map_err(|e| CliError::from(Error::Parse(e.to_string())))?;
            let abs = m.abs();
            let mut models = Vec::new();
            if let MatrixSpec::Toeplitz { symbol } = &m {
                let reference = ToeplitzSymbol {
                    grid: symbol.grid,
                    values: symbol.values.iter().map(|v| Complex::new(v.norm(), 0.0)).collect(),
                };
                models.push(BlockModel::LcuImplicit);
                models.push(BlockModel::LcuExplicit { reference });
            }
            models.push(BlockModel::Ziggurat {
                partition: ZigguratPartition::single(&m)?,
            });
            models.push(BlockModel::RowColumn { g: abs.clone() });
            models.push(BlockModel::Column { g: abs });
            Ok(MatrixCase {
                label: "file".into(),
                a: m,
                models,
                closed: None,
            })
        }
        other => Err(CliError::invalid(
            "unknown_matrix",
            format!("`{other}` is neither coulomb3d, toeplitz1d nor a readable matrix file"),
        )),
    }
}

pub fn blockencode(a: &BlockArgs) -> CliResult<()> {
    let case = matrix_case(a)?;
    let selected: Vec<BlockModel<f64>> = if a.closed_form_only {
        Vec::new()
    } else if a.model == "all" {
        case.models.clone()
    } else {
        let m: Vec<_> = case.models.iter().filter(|m| m.name() == a.model).cloned().collect();
        if m.is_empty() {
            return Err(CliError::invalid(
                "invalid_arguments",
                format!("model `{}` is not available for {}", a.model, case.label),
            ));
        }
        m
    };
    let built: Vec<blockenc::BlockEncodingResult<f64>> = selected
        .par_iter()
        .map(|m| blockenc::build(m, &case.a, a.eps))
        .collect::<Result<_, _>>()?;
    if let Some(prefix) = &a.export {
        for r in &built {
            let base = prefix.to_string_lossy();
            let mut f = fs::File::create(format!("{base}.{}.bin", r.model))?;
            r.effective.write_le_bytes(&mut f)?;
            fs::write(format!("{base}.{}.json", r.model), to_value(&r.sidecar())?.to_string())?;
        }
    }
    let models: Vec<Value> = built
        .iter()
        .map(|r| {
            let bound = a.eps / r.alpha;
            json!({
                "model": r.model,
                "alpha": r.alpha,
                "opError": r.op_error,
                "identityError": r.identity_error,
                "bound": bound,
                "withinBound": r.op_error <= bound,
                "M": r.m,
                "bits": r.bits,
            })
        })
        .collect();
    let ordering = case.closed.as_ref().map(|c| c.alpha_rc < c.alpha_zig && c.alpha_zig < c.alpha_f);
    let body = json!({
        "command": "blockencode",
        "matrix": case.label,
        "nu": (case.label == "coulomb3d").then_some(a.nu),
        "N": case.a.dim(),
        "eps": a.eps,
        "closedForm": match &case.closed { Some(c) => to_value(c)?, None => Value::Null },
        "closedFormOrdering": ordering,
        "models": models,
    });
    emit(&a.out, body, || {
        let mut rows = vec![strings([&"model", &"alpha", &"opError", &"identityError", &"bound", &"M", &"bits"])];
        for r in &built {
            rows.push(strings([&r.model, &r.alpha, &r.op_error, &r.identity_error, &(a.eps / r.alpha), &opt(r.m), &opt(r.bits)]));
        }
        Ok(rows)
    })
}

pub fn estimate(a: &EstimateArgs) -> CliResult<()> {
    if a.size < 2 {
        return Err(CliError::invalid("invalid_arguments", "--size must be ≥ 2"));
    }
    let n = resources::register_bits(a.size);
    let (report, qrs_total) = match a.target.as_str() {
        "exponential" => (None, resources::cost_exponential(n, a.eps)?),
        "gaussian" => {
            let form = match a.uf_form {
                UfForm::Table => GaussianUfForm::Table,
                UfForm::Text => GaussianUfForm::Text,
            };
            let r = resources::cost_gaussian_with(n, a.eps, form)?;
            let t = r.total;
            (Some(r), t)
        }
        "tanh" => {
            let r = resources::cost_tanh_with(n, a.eps, a.k)?;
            let t = r.total;
            (Some(r), t)
        }
        other => {
            let kind = TargetKind::from_name(other)
                .map_err(|_| CliError::invalid("unknown_target", format!("no cost model for `{other}`")))?;
            let r = resources::qrs_cost(kind, n, a.eps)?;
            let t = r.total;
            (Some(r), t)
        }
    };
    let b = resources::lks_bits(n, a.eps)?;
    let lks = resources::lks_params(n, b);
    let lks_total = lks.total();
    let body = json!({
        "command": "estimate",
        "target": a.target,
        "N": a.size,
        "n": n,
        "eps": a.eps,
        "qrs": match &report { Some(r) => to_value(r)?, None => Value::Null },
        "qrsTotal": qrs_total,
        "lks": { "b": b, "total": lks_total, "stages": to_value(&lks.stages)? },
        "lksOverQrs": lks_total as f64 / qrs_total as f64,
    });
    emit(&a.out, body, || {
        let k = report.as_ref().and_then(|r| r.params.k);
        let r = report.as_ref().map(|r| r.params.r);
        Ok(vec![
            strings([&"method", &"targetKind", &"N", &"eps", &"toffoli", &"k_opt", &"R"]),
            strings([&"qrs", &a.target, &a.size, &a.eps, &qrs_total, &opt(k), &opt(r)]),
            strings([&"lks", &a.target, &a.size, &a.eps, &lks_total, &"", &""]),
        ])
    })
}

pub fn compare(a: &CompareArgs) -> CliResult<()> {
    let kinds: Vec<TargetKind> = if a.target == "all" {
        TargetKind::ALL.to_vec()
    } else {
        vec![TargetKind::from_name(&a.target)
            .map_err(|_| CliError::invalid("unknown_target", format!("no comparison model for `{}`", a.target)))?]
    };
    if a.p_min < 1 || a.p_min > a.p_max || a.p_max > 62 {
        return Err(CliError::invalid(
            "invalid_arguments",
            format!("need 1 ≤ p-min ≤ p-max ≤ 62, got {}..{}", a.p_min, a.p_max),
        ));
    }
    let exps: Vec<u32> = (a.p_min..=a.p_max).collect();
    let jobs: Vec<(TargetKind, f64)> = kinds.iter().flat_map(|k| a.eps.iter().map(move |e| (*k, *e))).collect();
    let results: Vec<(TargetKind, f64, Option<u64>, Vec<resources::CostRow>)> = jobs
        .par_iter()
        .map(|&(kind, eps)| {
            let cross = match resources::crossover(kind, eps) {
                Ok(n) => Some(n),
                Err(Error::NoCrossover { .. }) => None,
                Err(e) => return Err(e),
            };
            let rows = resources::sweep(kind, &exps, &[eps])?;
            Ok((kind, eps, cross, rows))
        })
        .collect::<Result<_, Error>>()?;
    let mut entries = Vec::new();
    for (kind, eps, cross, rows) in &results {
        let slope = |method: &str| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = rows
                .iter()
                .filter(|r| r.method == method)
                .map(|r| (r.n_points as f64, r.toffoli as f64))
                .unzip();
            (xs.len() >= 2).then(|| resources::loglog_slope(&xs, &ys))
        };
        entries.push(json!({
            "target": kind.name(),
            "eps": eps,
            "crossoverN": cross,
            "qrsSlope": slope("qrs"),
            "lksSlope": slope("lks"),
            "rows": to_value(rows)?,
        }));
    }
    let body = json!({
        "command": "compare",
        "pRange": [a.p_min, a.p_max],
        "crossoverRange": [resources::CROSSOVER_RANGE.0, resources::CROSSOVER_RANGE.1],
        "results": entries,
    });
    emit(&a.out, body, || {
        let mut rows = vec![strings([&"method", &"targetKind", &"N", &"eps", &"toffoli", &"k_opt", &"R"])];
        for (_, _, _, rs) in &results {
            for r in rs {
                rows.push(strings([&r.method, &r.target_kind, &r.n_points, &r.eps, &r.toffoli, &opt(r.k_opt), &opt(r.r)]));
            }
        }
        Ok(rows)
    })
}

/// Success-probability threshold tracked by the mesh demo.
const MESH_THRESHOLD: f64 = 0.25;

pub fn mesh_demo(a: &MeshArgs) -> CliResult<()> {
    if a.levels < 1 || a.grid < 2 {
        return Err(CliError::invalid("invalid_arguments", "--levels must be ≥ 1 and --grid ≥ 2"));
    }
    let d = Domain::mesh2d(a.grid, a.grid);
    let f = TargetSpec::Mesh2d;
    let levels: Vec<(usize, usize, f64, u32)> = (1..=a.levels)
        .into_par_iter()
        .map(|n| {
            let g = refdesign::design_mesh2d::<f64>(n)?;
            let p = qrs::success_probability(&f, &g, &d)?;
            Ok((n, g.len(), p, qrs::rounds_from_probability(p)?))
        })
        .collect::<Result<_, Error>>()?;
    let first = levels.iter().find(|l| l.2 >= MESH_THRESHOLD).map(|l| l.0);
    let monotone = levels.windows(2).all(|w| w[1].2 >= w[0].2);
    let body = json!({
        "command": "mesh-demo",
        "grid": a.grid,
        "threshold": MESH_THRESHOLD,
        "levels": levels.iter().map(|(n, c, p, r)| json!({ "n": n, "cells": c, "pSucc": p, "R": r })).collect::<Vec<_>>(),
        "firstAboveThreshold": first,
        "nondecreasing": monotone,
    });
    emit(&a.out, body, || {
        let mut rows = vec![strings([&"n", &"cells", &"pSucc", &"R"])];
        rows.extend(levels.iter().map(|(n, c, p, r)| strings([n, c, p, r])));
        Ok(rows)
    })
}
