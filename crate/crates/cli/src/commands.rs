use std::fmt;

use clap::ValueEnum;
use hermitia::connection::Kind;
use hermitia::curvature::CurvatureSet;
use hermitia::flow::{self, FlowConfig, Snapshot};
use hermitia::forms::{bundle_identity_suite, identity_suite, ConnectionJet, IdentityReport};
use hermitia::hopf::{oracle_suite, BismutRicciForm};
use hermitia::metric::{format_torus_metric, ingest_torus_metric, MetricField};
use hermitia::positivity::{
    chern_second_samples, griffiths_sample, hopf_checklist, p_positivity_relative, vanishing_hypothesis_report, Hypothesis,
    Sign, HYPOTHESIS_DISCLAIMER,
};
use hermitia::sampling::{annulus_point, rng, torus_point};
use hermitia::structure::classify_field;
use hermitia::Error;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::report::{self, Report};
use crate::{Builtin, CheckArgs, Command, ConnectionArg, CurvatureArgs, FlowArgs, Format, MetricArgs, PointArgs, Suite, VerifyArgs, What};

const DEFAULT_SAMPLES: usize = 10;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
}

impl CliError {
    /// 2 for configuration problems, 3 for domain and runtime failures.
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(Error::Parse { .. } | Error::Hermitian { .. }) => 2,
            CliError::Core(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type Out = Result<(Report, Format), CliError>;

pub fn dispatch(cmd: &Command) -> Out {
    match cmd {
        Command::Curvature(a) => curvature(a).map(|r| (r, Format::Json)),
        Command::Check(a) => check(a).map(|r| (r, Format::Json)),
        Command::Verify(a) => verify(a).map(|r| (r, Format::Json)),
        Command::Flow(a) => flow_cmd(a).map(|r| (r, Format::Csv)),
    }
}

struct Resolved {
    field: MetricField,
    builtin: Option<Builtin>,
    echo: Value,
}

fn resolve_metric(m: &MetricArgs) -> Result<Resolved, CliError> {
    match (m.metric, &m.metric_file) {
        (Some(_), Some(_)) => Err(CliError::Usage("give either --metric or --metric-file, not both".into())),
        (None, None) => Err(CliError::Usage("a metric source is required: --metric flat|hopf or --metric-file PATH".into())),
        (Some(b), None) => {
            let n = m.dim.unwrap_or(2);
            if n == 0 {
                return Err(CliError::Usage("--dim must be at least 1".into()));
            }
            let field = match b {
                Builtin::Flat => MetricField::flat(n),
                Builtin::Hopf => MetricField::hopf(n),
            };
            let name = if b == Builtin::Flat { "flat" } else { "hopf" };
            Ok(Resolved { field, builtin: Some(b), echo: json!({ "metric": name, "dim": n }) })
        }
        (None, Some(path)) => {
            let field = ingest_torus_metric(path).map_err(|e| match e {
                Error::Positivity { .. } => CliError::Core(e),
                other => CliError::Usage(format!("cannot read {}: {other}", path.display())),
            })?;
            if let Some(d) = m.dim {
                if d != field.n() {
                    return Err(CliError::Usage(format!("--dim {d} disagrees with the file's n = {}", field.n())));
                }
            }
            Ok(Resolved { echo: json!({ "metric_file": path.display().to_string(), "dim": field.n() }), field, builtin: None })
        }
    }
}

fn parse_point(text: &str, n: usize) -> Result<Vec<Complex64>, CliError> {
    let vals = text
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("bad coordinate {s:?} in --point {text}"))))
        .collect::<Result<Vec<f64>, _>>()?;
    if vals.len() != 2 * n {
        return Err(CliError::Usage(format!("--point needs {} reals for n = {n}, got {}", 2 * n, vals.len())));
    }
    Ok(vals.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect())
}

fn resolve_points(p: &PointArgs, r: &Resolved) -> Result<Vec<Vec<Complex64>>, CliError> {
    let n = r.field.n();
    if !p.point.is_empty() {
        if p.sample.is_some() {
            return Err(CliError::Usage("give either --point or --sample, not both".into()));
        }
        return p.point.iter().map(|s| parse_point(s, n)).collect();
    }
    Ok(sample_points(r, p.sample.unwrap_or(DEFAULT_SAMPLES), p.seed))
}

fn sample_points(r: &Resolved, count: usize, seed: u64) -> Vec<Vec<Complex64>> {
    let mut g = rng(seed);
    let n = r.field.n();
    (0..count)
        .map(|_| if r.builtin == Some(Builtin::Hopf) { annulus_point(&mut g, n, 1.0, 2.0) } else { torus_point(&mut g, n) })
        .collect()
}

fn kind(c: ConnectionArg) -> Kind {
    match c {
        ConnectionArg::LeviCivita => Kind::LeviCivita,
        ConnectionArg::Induced => Kind::Induced,
        ConnectionArg::Chern => Kind::Chern,
        ConnectionArg::Bismut => Kind::Bismut,
    }
}

fn with(mut base: Value, extra: Value) -> Value {
    if let (Value::Object(b), Value::Object(e)) = (&mut base, extra) {
        b.extend(e);
    }
    base
}

fn curvature(a: &CurvatureArgs) -> Result<Report, CliError> {
    let r = resolve_metric(&a.metric)?;
    let pts = resolve_points(&a.points, &r)?;
    let k = kind(a.connection);
    let what = a.what;
    let wants = |w: What| what == w || what == What::All;
    let mut entries = Vec::new();
    let mut rows = Vec::new();
    for (p, z) in pts.iter().enumerate() {
        let mj = r.field.metric_jet(z, 2)?;
        let set = CurvatureSet::new(&mj)?;
        let mut e = serde_json::Map::new();
        e.insert("point".into(), report::point(z));
        if wants(What::Tensor) {
            e.insert("tensor".into(), report::tensor(set.tensor(k)));
            report::tensor_rows(&mut rows, p, &format!("{}-tensor", k.name()), set.tensor(k));
        }
        let mut mat = |name: String, m: DMatrix<Complex64>| {
            report::matrix_rows(&mut rows, p, &name, &m);
            e.insert(name, report::matrix(&m));
        };
        if wants(What::Ricci1) {
            mat(format!("{}-first", k.name()), set.first(k));
        }
        if wants(What::Ricci2) {
            mat(format!("{}-second", k.name()), set.second(k));
        }
        if what == What::HermitianRicci {
            mat("hermitian".into(), set.hermitian_ricci());
        }
        if what == What::ComplexifiedRicci {
            mat("complexified".into(), set.complexified_ricci());
        }
        if wants(What::RicciVariants) {
            for (name, m) in set.ricci_variants() {
                if !(what == What::All && name.starts_with(k.name())) {
                    mat(name.to_string(), m);
                }
            }
        }
        if wants(What::Scalars) {
            let mut s = serde_json::Map::new();
            for (name, v) in set.scalars().values() {
                s.insert(name.into(), report::cx(v));
                rows.push(vec![p.to_string(), name.into(), String::new(), v.re.to_string(), v.im.to_string()]);
            }
            e.insert("scalars".into(), Value::Object(s));
        }
        entries.push(Value::Object(e));
    }
    let what_name = what.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    Ok(Report {
        command: "curvature",
        config: with(r.echo, json!({ "connection": k.name(), "what": what_name, "points": pts.len(), "seed": a.points.seed })),
        seed: Some(a.points.seed),
        passed: None,
        result: json!({ "points": entries }),
        header: vec!["point", "quantity", "index", "re", "im"],
        rows,
    })
}

struct SignTrack {
    name: &'static str,
    low: Vec<f64>,
    high: Vec<f64>,
    witness: Vec<Option<Vec<Complex64>>>,
}

fn check(a: &CheckArgs) -> Result<Report, CliError> {
    let r = resolve_metric(&a.metric)?;
    let pts = resolve_points(&a.points, &r)?;
    let n = r.field.n();
    let tol = a.tol;
    let seed = a.points.seed;
    let cls = classify_field(&r.field, &pts, tol)?;

    let names = ["chern-second", "chern-first", "hermitian-ricci", "bismut-first", "bismut-second"];
    let mut tracks: Vec<SignTrack> = names
        .iter()
        .map(|&name| SignTrack { name, low: vec![f64::INFINITY; n], high: vec![f64::NEG_INFINITY; n], witness: vec![None; n] })
        .collect();
    let mut griffiths_min = f64::INFINITY;
    let mut griffiths_witness = Value::Null;
    for (idx, z) in pts.iter().enumerate() {
        let mj = r.field.metric_jet(z, 2)?;
        let set = CurvatureSet::new(&mj)?;
        let h = mj.h0();
        let mats = [set.second(Kind::Chern), set.first(Kind::Chern), set.hermitian_ricci(), set.first(Kind::Bismut), set.second(Kind::Bismut)];
        for (t, m) in tracks.iter_mut().zip(&mats) {
            let rep = p_positivity_relative(m, &h, z.clone(), tol)?;
            for p in 1..=n {
                if rep.lowest_sum(p) < t.low[p - 1] {
                    t.low[p - 1] = rep.lowest_sum(p);
                    t.witness[p - 1] = Some(z.clone());
                }
                t.high[p - 1] = t.high[p - 1].max(rep.highest_sum(p));
            }
        }
        let g = griffiths_sample(&set.chern, a.trials, seed.wrapping_add(idx as u64));
        if g.minimum < griffiths_min {
            griffiths_min = g.minimum;
            griffiths_witness = json!({ "point": report::point(z), "u": report::point(&g.witness.0), "v": report::point(&g.witness.1) });
        }
    }

    let mut rows = vec![
        vec!["kahler".to_string(), cls.kahler.to_string()],
        vec!["balanced".to_string(), cls.balanced.to_string()],
        vec!["skt".to_string(), cls.skt.to_string()],
        vec!["max_kahler_defect".to_string(), cls.max_kahler_defect.to_string()],
        vec!["max_balanced_defect".to_string(), cls.max_balanced_defect.to_string()],
        vec!["max_skt_defect".to_string(), cls.max_skt_defect.to_string()],
    ];
    let mut positivity = serde_json::Map::new();
    for t in &tracks {
        let per_p: Vec<Value> = (1..=n)
            .map(|p| {
                let sign = Sign::from_range(t.low[p - 1], t.high[p - 1], tol);
                rows.push(vec![format!("{}.p{p}", t.name), sign.to_string()]);
                json!({
                    "p": p,
                    "verdict": sign.to_string(),
                    "lowest_sum": t.low[p - 1],
                    "highest_sum": t.high[p - 1],
                    "lowest_at": t.witness[p - 1].as_deref().map(report::point),
                })
            })
            .collect();
        positivity.insert(t.name.into(), Value::Array(per_p));
    }
    rows.push(vec!["griffiths_minimum".into(), griffiths_min.to_string()]);

    let samples = chern_second_samples(&r.field, &pts)?;
    let hypotheses: Vec<Value> = [Hypothesis::NoHolomorphicVectorFields, Hypothesis::NoHolomorphicForms]
        .into_iter()
        .map(|h| {
            let rep = vanishing_hypothesis_report(&samples, h, Some(seed), tol)?;
            rows.push(vec![format!("hypothesis:{}", h.describe()), rep.holds.to_string()]);
            Ok(json!({ "hypothesis": h.describe(), "holds": rep.holds, "summary": rep.summary() }))
        })
        .collect::<Result<_, Error>>()?;

    let mut result = json!({
        "samples": pts.len(),
        "kahler": cls.kahler,
        "balanced": cls.balanced,
        "skt": cls.skt,
        "max_kahler_defect": cls.max_kahler_defect,
        "max_balanced_defect": cls.max_balanced_defect,
        "max_skt_defect": cls.max_skt_defect,
        "positivity": positivity,
        "griffiths": { "minimum": griffiths_min, "trials_per_point": a.trials, "witness": griffiths_witness },
        "hypotheses": hypotheses,
        "disclaimer": HYPOTHESIS_DISCLAIMER,
    });
    if r.builtin == Some(Builtin::Hopf) && n >= 2 {
        let list = hopf_checklist(n, pts.len(), seed)?;
        let lines: Vec<Value> = list
            .lines()
            .into_iter()
            .map(|(text, ok)| {
                rows.push(vec![format!("hopf:{text}"), ok.to_string()]);
                json!({ "clause": text, "holds": ok })
            })
            .collect();
        result["hopf_checklist"] = json!({ "passes": list.passes(), "clauses": lines });
    }
    Ok(Report {
        command: "check",
        config: with(r.echo, json!({ "points": pts.len(), "tol": tol, "trials": a.trials, "seed": seed })),
        seed: Some(seed),
        passed: None,
        result,
        header: vec!["quantity", "value"],
        rows,
    })
}

fn residual_table(label: &str, rep: &IdentityReport, tol: f64, rows: &mut Vec<Vec<String>>) -> Value {
    Value::Array(
        rep.residuals
            .iter()
            .map(|(name, v)| {
                rows.push(vec![format!("{label}:{name}"), v.to_string(), (*v <= tol).to_string()]);
                json!({ "identity": name, "residual": v, "pass": *v <= tol })
            })
            .collect(),
    )
}

fn verify(a: &VerifyArgs) -> Result<Report, CliError> {
    let seed = a.points.seed;
    let mut rows = Vec::new();
    match a.suite {
        Suite::Appendix => {
            let r = resolve_metric(&a.metric)?;
            let tol = a.tol.unwrap_or(1e-9);
            let n = r.field.n();
            let z = match a.points.point.first() {
                Some(s) => parse_point(s, n)?,
                None => sample_points(&r, 1, seed).remove(0),
            };
            let mj = r.field.metric_jet(&z, 2)?;
            let scalar = identity_suite(&mj, a.trials, seed)?;
            let conn = ConnectionJet::random_unitary(n, 2, 2, 0.5, &mut rng(seed.wrapping_add(1)));
            let bundle = bundle_identity_suite(&mj, &conn, a.trials, seed.wrapping_add(2))?;
            let passed = scalar.passes(tol) && bundle.passes(tol);
            let result = json!({
                "point": report::point(&z),
                "forms_tested": scalar.forms_tested + bundle.forms_tested,
                "scalar_identities": residual_table("scalar", &scalar, tol, &mut rows),
                "bundle_identities": residual_table("bundle", &bundle, tol, &mut rows),
                "bundle_rank": 2,
                "max_residual": scalar.max_residual().max(bundle.max_residual()),
            });
            Ok(Report {
                command: "verify",
                config: with(r.echo, json!({ "suite": "appendix", "trials": a.trials, "tol": tol, "seed": seed })),
                seed: Some(seed),
                passed: Some(passed),
                result,
                header: vec!["identity", "residual", "pass"],
                rows,
            })
        }
        Suite::HopfOracle => {
            if a.metric.metric_file.is_some() || a.metric.metric.is_some_and(|m| m != Builtin::Hopf) {
                return Err(CliError::Usage("the hopf-oracle suite only runs on the Hopf metric".into()));
            }
            let n = a.metric.dim.unwrap_or(2);
            if n < 1 {
                return Err(CliError::Usage("--dim must be at least 1".into()));
            }
            let tol = a.tol.unwrap_or(1e-10);
            let s = oracle_suite(n, a.oracle_points, seed)?;
            let form = s.matched_form(tol);
            let passed = s.max_residual() <= tol && form.is_some();
            let table: Vec<Value> = s
                .residuals
                .iter()
                .map(|(name, v)| {
                    rows.push(vec![name.to_string(), v.to_string(), (*v <= tol).to_string()]);
                    json!({ "quantity": name, "residual": v, "pass": *v <= tol })
                })
                .collect();
            rows.push(vec!["bismut-ricci-printed".into(), s.bismut_ricci_printed.to_string(), (s.bismut_ricci_printed <= tol).to_string()]);
            rows.push(vec![
                "bismut-ricci-corrected".into(),
                s.bismut_ricci_corrected.to_string(),
                (s.bismut_ricci_corrected <= tol).to_string(),
            ]);
            let matched = match form {
                Some(BismutRicciForm::Printed) => json!("printed"),
                Some(BismutRicciForm::Corrected) => json!("corrected"),
                None => Value::Null,
            };
            Ok(Report {
                command: "verify",
                config: json!({ "suite": "hopf-oracle", "dim": n, "points": a.oracle_points, "tol": tol, "seed": seed }),
                seed: Some(seed),
                passed: Some(passed),
                result: json!({
                    "points": s.points,
                    "residuals": table,
                    "bismut_ricci": {
                        "printed_residual": s.bismut_ricci_printed,
                        "corrected_residual": s.bismut_ricci_corrected,
                        "matched": matched,
                    },
                    "max_residual": s.max_residual(),
                }),
                header: vec!["quantity", "residual", "pass"],
                rows,
            })
        }
    }
}

fn snapshot_json(s: &Snapshot) -> Value {
    json!({
        "step": s.step,
        "t": s.t,
        "kahler_defect": s.kahler_defect,
        "kahler_defect_stencil": s.kahler_defect_stencil,
        "min_eig": s.min_eig,
        "max_eig": s.max_eig,
        "einstein_residual": s.einstein_residual,
        "wall_seconds": s.wall_seconds,
    })
}

fn flow_cmd(a: &FlowArgs) -> Result<Report, CliError> {
    if !(a.horizon >= 0.0) || !a.horizon.is_finite() {
        return Err(CliError::Usage(format!("--T must be finite and nonnegative, got {}", a.horizon)));
    }
    if a.hopf_ode {
        return hopf_ode(a);
    }
    let r = resolve_metric(&a.metric)?;
    if let Some(dt) = a.dt {
        if !(dt > 0.0) {
            return Err(CliError::Usage(format!("--dt must be positive, got {dt}")));
        }
    }
    let config = FlowConfig { dt: a.dt, cadence: a.cadence.max(1) };
    let progress = a.progress;
    let out = flow::run_observed(&r.field, a.mu, a.horizon, a.grid, config, |s| {
        if progress {
            eprintln!("{}", flow::diagnostics_row(s));
        }
    })?;
    let state = &out.final_state;
    if let Some(path) = &a.dump {
        std::fs::write(path, flow::grid_csv(state)).map_err(Error::from)?;
    }
    let mut fit_terms = None;
    if let Some(path) = &a.fit {
        let terms = flow::fit_fourier(state, 1e-14);
        std::fs::write(path, format_torus_metric(state.n, &terms)).map_err(Error::from)?;
        fit_terms = Some(terms.len());
    }
    let max_defect = out.snapshots.iter().map(|s| s.kahler_defect).fold(0.0, f64::max);
    let rows = out
        .snapshots
        .iter()
        .map(|s| flow::diagnostics_row(s).split(',').map(str::to_string).collect())
        .collect();
    let origin = state.metric_at(0);
    Ok(Report {
        command: "flow",
        config: with(
            r.echo,
            json!({ "mode": "grid", "grid": a.grid, "mu": a.mu, "T": a.horizon, "dt": a.dt, "cadence": config.cadence }),
        ),
        seed: None,
        passed: None,
        result: json!({
            "mode": "grid",
            "n": state.n,
            "grid": state.grid,
            "dt": out.dt,
            "steps": state.steps,
            "t": state.t,
            "max_kahler_defect": max_defect,
            "final_metric_at_origin": report::matrix(&origin),
            "snapshots": out.snapshots.iter().map(snapshot_json).collect::<Vec<_>>(),
            "dump": a.dump.as_ref().map(|p| p.display().to_string()),
            "fit": a.fit.as_ref().map(|p| p.display().to_string()),
            "fit_terms": fit_terms,
        }),
        header: flow::DIAGNOSTICS_HEADER.split(',').collect(),
        rows,
    })
}

fn hopf_ode(a: &FlowArgs) -> Result<Report, CliError> {
    if a.metric.metric_file.is_some() || a.metric.metric.is_some_and(|m| m != Builtin::Hopf) {
        return Err(CliError::Usage("--hopf-ode integrates multiples of the Hopf metric only".into()));
    }
    let n = a.metric.dim.unwrap_or(2);
    if n == 0 {
        return Err(CliError::Usage("--dim must be at least 1".into()));
    }
    let steps = a.steps.max(1);
    let k = (n as f64 - 1.0) / 4.0;
    let mut rows = Vec::new();
    let mut series = Vec::new();
    let mut last = None;
    for i in 0..=steps {
        let t = a.horizon * i as f64 / steps as f64;
        let s = flow::hopf_self_similar(n, a.c0, a.mu, t)?;
        let coeff = k - a.mu * s.c;
        rows.push(vec![t.to_string(), s.c.to_string(), coeff.to_string()]);
        series.push(json!({ "t": t, "c": s.c, "einstein_coefficient": coeff }));
        last = Some(s);
    }
    let last = last.expect("at least one row");
    Ok(Report {
        command: "flow",
        config: json!({ "mode": "hopf-ode", "dim": n, "mu": a.mu, "c0": a.c0, "T": a.horizon, "steps": steps }),
        seed: None,
        passed: None,
        result: json!({
            "mode": "hopf-ode",
            "equation": "dc/dt = mu*c - (n-1)/4, h(t) = c(t)*4/|z|^2*delta",
            "series": series,
            "final_c": last.c,
            "extinction_time": last.extinction,
        }),
        header: vec!["t", "c", "einstein_coefficient"],
        rows,
    })
}
