use std::path::Path;
use std::sync::Arc;

use ahdiag_core::ahsys::{
    check_approx_intertwining, doubling_map, dynamics, gendiag_check, villadsen1, villadsen2_skeleton, FiniteSystemPair, GenDiagSystem,
    IntertwiningVerdict, Verdict,
};
use ahdiag_core::diagmaps::{check_unital_injective, is_maximally_homogeneous, DiagonalForm};
use ahdiag_core::fixtures::{self, BaseKind};
use ahdiag_core::geometry::{Graph, GraphPoint};
use ahdiag_core::groupoid::{
    build_stage, check_fibrewise_bijective, density_report, export_orbit_csv, export_stage_dot, level_samples, orbits, verify_stage,
    GroupoidStage, StagePoint,
};
use ahdiag_core::perturb::{admissible_delta_bound, check_delta, make_surjective_mh, verify_descent, verify_properties, PerturbOptions};
use ahdiag_core::rational::{fmt_q, parse_q};
use ahdiag_core::Q;
use serde_json::json;

use crate::format::{self, Model, Pair};
use crate::report::{Report, Section, Status};
use crate::{CliError, Command, Kind};

pub enum Outcome {
    Report(Report),
    /// Raw output (generated files, normalized files, exports without an
    /// output directory).
    Text(String),
}

pub fn dispatch(cmd: &Command, out: Option<&Path>) -> Result<Outcome, CliError> {
    let (name, report) = match cmd {
        Command::Check { file } => ("check", check(file)?),
        Command::Perturb { file, form, delta, rho, epsilon } => ("perturb", perturb(file, form, delta, rho, epsilon, out)?),
        Command::Intertwine { file, depth } => ("intertwine", intertwine(file, *depth)?),
        Command::Groupoid { file, level, depth, samples, epsilon, view } => {
            ("groupoid", groupoid(file, *level, *depth, *samples, epsilon, *view, out)?)
        }
        Command::Export { file, dot, csv, level, depth } => return export(file, *dot, *csv, *level, *depth, out),
        Command::Generate { kind, levels, per_level, seed, depth } => {
            return Ok(Outcome::Text(format::serialize(&generate(*kind, *levels, *per_level, *seed, *depth)?)))
        }
        Command::Fmt { file } => return Ok(Outcome::Text(format::serialize(&format::parse_file(file)?))),
    };
    let mut report = report;
    if let Some(dir) = out {
        report.artifacts.push(format!("{name}.json"));
        write(dir, &format!("{name}.json"), &report.json())?;
    }
    Ok(Outcome::Report(report))
}

fn write(dir: &Path, name: &str, body: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Command-line value, else the `[run]` value, parsed as a rational.
fn rational(name: &str, flag: &Option<String>, file: &Option<String>) -> Result<Option<Q>, CliError> {
    match flag.as_ref().or(file.as_ref()) {
        None => Ok(None),
        Some(s) => parse_q(s).map(Some).map_err(|_| CliError::Parameter(format!("--{name}: not an exact rational: {s:?}"))),
    }
}

fn input_name(file: &Path) -> Option<String> {
    Some(file.display().to_string())
}

fn verdict_status(v: Verdict) -> Status {
    match v {
        Verdict::Pass => Status::Pass,
        Verdict::Fail => Status::Fail,
        Verdict::Inconclusive => Status::Inconclusive,
    }
}

// ---------------------------------------------------------------------------
// check

fn form_section(id: &str, phi: &DiagonalForm) -> Section {
    let ui = check_unital_injective(phi);
    let mh = is_maximally_homogeneous(phi);
    let descent = verify_descent(phi);
    let mut msgs = Vec::new();
    for (i, sum, m) in &ui.size_mismatches {
        msgs.push(format!("target summand {i}: entry sizes sum to {sum}, expected {m}"));
    }
    for (j, arc) in &ui.gaps {
        msgs.push(format!("source summand {j} not covered on {}", arc.display(phi.source().base(*j))));
    }
    for w in mh.witnesses.iter().take(5) {
        msgs.push(format!("target {}: entries {} and {} collide", w.target, w.entries.0, w.entries.1));
    }
    if mh.witnesses.len() > 5 {
        msgs.push(format!("... {} collisions in total", mh.witnesses.len()));
    }
    msgs.extend(descent.failures.iter().map(|f| format!("descent: {f:?}")));
    let ok = ui.unital && ui.injective && mh.holds && descent.holds;
    Section::new(format!("diagonal form {id}"), Status::of(ok))
        .fact("unital", ui.unital)
        .fact("injective", ui.injective)
        .fact("maximally_homogeneous", mh.holds)
        .fact("descent", descent.holds)
        .fact("admissible_delta_below", fmt_q(&admissible_delta_bound(phi)))
        .messages(msgs)
}

fn check(file: &Path) -> Result<Report, CliError> {
    let model = format::parse_file(file)?;
    let mut report = Report::new("check", input_name(file));
    for (id, phi) in &model.forms {
        report.push(form_section(id, phi));
    }
    if let Some(sys) = &model.system {
        let gd = gendiag_check(sys);
        for st in &gd.steps {
            report.push(
                Section::new(format!("step {} -> {}", st.n, st.n + 1), verdict_status(st.verdict()))
                    .fact("rank", st.rank_ok)
                    .fact("unital", st.unital_ok())
                    .fact("slots", st.slots_ok)
                    .fact("injective", st.injective.iter().map(|v| v.name()).collect::<Vec<_>>())
                    .fact("twisted", st.twisted)
                    .messages(st.messages.clone()),
            );
        }
    }
    if report.sections.is_empty() {
        return Err(CliError::Usage("nothing to check: the file has no diagonal forms and no system".into()));
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// perturb

fn pick_form<'a>(model: &'a Model, flag: &Option<String>) -> Result<(&'a str, &'a DiagonalForm), CliError> {
    match flag.as_ref().or(model.run.form.as_ref()) {
        Some(id) => model
            .forms
            .iter()
            .find(|(k, _)| k == id)
            .map(|(k, f)| (k.as_str(), f))
            .ok_or_else(|| CliError::Parameter(format!("no diagonal form {id:?}"))),
        None => match model.forms.as_slice() {
            [(k, f)] => Ok((k.as_str(), f)),
            [] => Err(CliError::Usage("the file has no diagonal forms".into())),
            _ => Err(CliError::Usage("several diagonal forms; choose one with --form".into())),
        },
    }
}

fn perturb(
    file: &Path,
    form: &Option<String>,
    delta: &Option<String>,
    rho: &Option<String>,
    epsilon: &Option<String>,
    out: Option<&Path>,
) -> Result<Report, CliError> {
    let model = format::parse_file(file)?;
    let (id, phi) = pick_form(&model, form)?;
    let delta = rational("delta", delta, &model.run.delta)?.ok_or_else(|| CliError::Usage("--delta is required".into()))?;
    check_delta(phi, &delta)?;
    let opts = PerturbOptions { rho: rational("rho", rho, &model.run.rho)?, epsilon: rational("epsilon", epsilon, &model.run.epsilon)? };
    let (psi, log) = make_surjective_mh(phi, &delta, &opts)?;
    let props = verify_properties(phi, &psi, &log.bound, &delta, &log.rho)?;

    let mut report = Report::new("perturb", input_name(file));
    report.push(
        Section::new(format!("perturbation of {id}"), Status::of(props.all()))
            .fact("delta", fmt_q(&delta))
            .fact("delta_bound", fmt_q(&admissible_delta_bound(phi)))
            .fact("rho", fmt_q(&log.rho))
            .fact("distance_bound", fmt_q(&log.bound))
            .fact("max_distance", fmt_q(&props.max_distance))
            .fact("chains", log.chains.iter().map(|(_, c)| c.chains.len()).sum::<usize>())
            .fact("steps", log.steps.len())
            .fact("covers", props.covers)
            .fact("bound_ok", props.bound_ok)
            .fact("maximally_homogeneous", props.mh)
            .fact("descent", props.descent)
            .fact("unital", props.unital),
    );
    if let Some(dir) = out {
        let mut next = model.clone();
        let new_id = format!("{id}_mh");
        next.add_form(&new_id, psi);
        next.run.form = Some(new_id);
        write(dir, "perturbed.toml", &format::serialize(&next))?;
        report.artifacts.push("perturbed.toml".into());
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// intertwine

fn build_pair(model: &Model, p: &Pair) -> Result<FiniteSystemPair, CliError> {
    // ids were validated when the file was read
    let blocks = p.blocks.iter().map(|b| model.block(b).expect("validated").clone()).collect();
    let forms = |ids: &[String]| ids.iter().map(|f| model.form(f).expect("validated").clone()).collect();
    let gens = p.sets.iter().map(|s| s.iter().map(|e| model.element(e).expect("validated").clone()).collect()).collect();
    let mut pair =
        FiniteSystemPair::new(blocks, forms(&p.phi), forms(&p.psi), gens).map_err(|e| CliError::Schema(format!("generators: {e}")))?;
    if p.close {
        pair.close_generators()?;
    }
    Ok(pair)
}

fn intertwine(file: &Path, depth: Option<usize>) -> Result<Report, CliError> {
    let model = format::parse_file(file)?;
    let p = model.pair.as_ref().ok_or_else(|| CliError::Usage("the file has no [generators] table".into()))?;
    let pair = build_pair(&model, p)?;
    let depth = depth.or(model.run.depth).unwrap_or(pair.blocks.len() - 1);
    let rep = check_approx_intertwining(&pair, depth)?;
    let mut report = Report::new("intertwine", input_name(file));
    for l in &rep.levels {
        let status = match (l.verdict, l.containment) {
            (IntertwiningVerdict::Violated, _) | (_, Some(false)) => Status::Fail,
            (IntertwiningVerdict::Satisfied, Some(true)) => Status::Pass,
            _ => Status::Inconclusive,
        };
        let mut s = Section::new(format!("level {}", l.n), status)
            .fact("upper", fmt_q(&l.upper))
            .fact("threshold", fmt_q(&l.threshold))
            .fact("verdict", l.verdict.name())
            .fact("containment", json!(l.containment));
        if let Some(lo) = &l.lower {
            s = s.fact("lower", fmt_q(lo));
        }
        report.push(s);
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// groupoid and export

fn system(model: &Model) -> Result<&GenDiagSystem, CliError> {
    model.system.as_ref().ok_or_else(|| CliError::Usage("the file has no [gendiag_system] table".into()))
}

/// The first `k` samples of each component (all when `k` is `None`).
fn samples(sys: &GenDiagSystem, level: usize, k: Option<usize>) -> Vec<StagePoint> {
    let all = level_samples(sys, level);
    match k {
        None => all,
        Some(k) => {
            let mut seen = vec![0usize; sys.level(level).components.len()];
            all.into_iter()
                .filter(|z| {
                    seen[z.component] += 1;
                    seen[z.component] <= k
                })
                .collect()
        }
    }
}

fn stage_for(
    model: &Model,
    level: Option<usize>,
    depth: Option<usize>,
    k: Option<usize>,
) -> Result<(&GenDiagSystem, GroupoidStage), CliError> {
    let sys = system(model)?;
    let n = level.or(model.run.level).unwrap_or(1);
    if n == 0 || n > sys.level_count() {
        return Err(CliError::Parameter(format!("--level {n}: the system has levels 1..={}", sys.level_count())));
    }
    let m = depth.or(model.run.depth).unwrap_or_else(|| 2.min(sys.level_count() - n));
    if n + m > sys.level_count() {
        return Err(CliError::Parameter(format!("--depth {m}: level {} does not exist", n + m)));
    }
    let zs = samples(sys, n + m, k);
    let stage = build_stage(sys, n, m, &zs)?;
    Ok((sys, stage))
}

#[allow(clippy::too_many_arguments)]
fn groupoid(
    file: &Path,
    level: Option<usize>,
    depth: Option<usize>,
    k: Option<usize>,
    epsilon: &Option<String>,
    view: Option<usize>,
    out: Option<&Path>,
) -> Result<Report, CliError> {
    let model = format::parse_file(file)?;
    let (sys, stage) = stage_for(&model, level, depth, k)?;
    let (n, m) = (stage.base_level, stage.depth);
    let mut report = Report::new("groupoid", input_name(file));
    report.push(
        Section::new(format!("stage n={n} m={m}"), Status::Pass)
            .fact("rank", stage.rank)
            .fact("samples", stage.samples.len())
            .fact("units", stage.units().count())
            .fact("arrows", stage.arrows.len()),
    );

    let laws = verify_stage(sys, &stage)?;
    report.push(
        Section::new("stage laws", Status::of(laws.holds()))
            .fact("composable_triples", laws.composable_triples)
            .fact("axioms", laws.axioms)
            .fact("counting", laws.counting)
            .fact("projection", laws.projection)
            .fact("principal", laws.principal)
            .fact("orbit_sizes", laws.orbit_sizes)
            .messages(laws.messages.clone()),
    );

    let rep = orbits(&stage, view.unwrap_or(n))?;
    report.push(
        Section::new(format!("orbits viewed at level {}", rep.view_base), Status::Pass)
            .fact("count", rep.orbits.len())
            .fact("sizes", rep.sizes().into_iter().collect::<Vec<_>>()),
    );

    let fib = if n < sys.level_count() { Some(check_fibrewise_bijective(sys, n, &samples(sys, n + 1, k))?) } else { None };
    if let Some(fib) = &fib {
        let fib_status = if !fib.bijective || fib.surjective.contains(&Verdict::Fail) {
            Status::Fail
        } else if fib.surjective.contains(&Verdict::Inconclusive) {
            Status::Inconclusive
        } else {
            Status::Pass
        };
        report.push(
            Section::new("fibrewise bijectivity", fib_status)
                .fact("fibres_checked", fib.fibres_checked)
                .fact("bijective", fib.bijective)
                .fact("surjective", fib.surjective.iter().map(|v| v.name()).collect::<Vec<_>>())
                .messages(fib.messages.clone()),
        );
    }

    if let Some(eps) = rational("epsilon", epsilon, &model.run.epsilon)? {
        let max_m = depth.or(model.run.depth).unwrap_or(sys.level_count() - n);
        let d = density_report(sys, n, &eps, max_m)?;
        // failing to see density at finite depth is not a disproof
        let status = if d.first_pass().is_some() { Status::Pass } else { Status::Inconclusive };
        report.push(
            Section::new("density", status)
                .fact("epsilon", fmt_q(&eps))
                .fact("first_dense_depth", json!(d.first_pass()))
                .fact(
                    "rows",
                    d.rows
                        .iter()
                        .map(|r| json!({"m": r.m, "values": r.values, "net_points": r.net_points, "dense": r.dense()}))
                        .collect::<Vec<_>>(),
                )
                .messages([d.summary()]),
        );
    }

    if let Some(dir) = out {
        write(dir, "orbits.csv", &export_orbit_csv(&stage, &rep))?;
        report.artifacts.push("orbits.csv".into());
    }
    Ok(report)
}

fn export(file: &Path, dot: bool, csv: bool, level: Option<usize>, depth: Option<usize>, out: Option<&Path>) -> Result<Outcome, CliError> {
    let model = format::parse_file(file)?;
    let (_, stage) = stage_for(&model, level, depth, None)?;
    let (dot, csv) = if !dot && !csv { (true, true) } else { (dot, csv) };
    let mut files = Vec::new();
    if dot {
        files.push(("stage.dot", export_stage_dot(&stage)));
    }
    if csv {
        files.push(("orbits.csv", export_orbit_csv(&stage, &orbits(&stage, stage.base_level)?)));
    }
    match out {
        Some(dir) => {
            let mut report = Report::new("export", input_name(file));
            for (name, body) in &files {
                write(dir, name, body)?;
                report.artifacts.push(name.to_string());
            }
            Ok(Outcome::Report(report))
        }
        None => Ok(Outcome::Text(files.into_iter().map(|(_, b)| b).collect::<Vec<_>>().join("\n"))),
    }
}

// ---------------------------------------------------------------------------
// generate

fn pair_model(pair: FiniteSystemPair) -> Model {
    let mut model = Model::default();
    let blocks: Vec<String> = pair.blocks.iter().map(|b| model.intern_block(b)).collect();
    let mut phi = Vec::new();
    let mut psi = Vec::new();
    for (k, (f, g)) in pair.phi.into_iter().zip(pair.psi).enumerate() {
        let (a, b) = (format!("phi{}", k + 1), format!("psi{}", k + 1));
        model.add_form(&a, f);
        model.add_form(&b, g);
        phi.push(a);
        psi.push(b);
    }
    let mut sets = Vec::new();
    for (n, gens) in pair.gens.into_iter().enumerate() {
        let mut ids = Vec::new();
        for (k, a) in gens.into_iter().enumerate() {
            let id = format!("a{}_{}", n + 1, k + 1);
            model.add_element(&id, a);
            ids.push(id);
        }
        sets.push(ids);
    }
    model.pair = Some(Pair { blocks, phi, psi, sets, close: false });
    model
}

fn system_model(sys: GenDiagSystem) -> Model {
    let mut model = Model::default();
    model.set_system(sys);
    model
}

fn form_model(phi: DiagonalForm, delta: Option<Q>) -> Model {
    let mut model = Model::default();
    model.add_form("phi", phi);
    model.run.form = Some("phi".into());
    model.run.delta = delta.map(|d| fmt_q(&d));
    model
}

pub fn generate(kind: Kind, levels: usize, per_level: usize, seed: u64, depth: usize) -> Result<Model, CliError> {
    if levels < 2 {
        return Err(CliError::Parameter("--levels must be at least 2".into()));
    }
    let half = || GraphPoint::Edge { edge: 0, coord: Q::new(1.into(), 2.into()) };
    let interval = || Arc::new(Graph::interval());
    Ok(match kind {
        Kind::GoodearlHalf => system_model(fixtures::goodearl_half(levels)?),
        Kind::GoodearlDense => system_model(fixtures::goodearl_dense(levels, per_level)?),
        Kind::GoodearlStuck => system_model(fixtures::goodearl_stuck(levels, per_level)?),
        Kind::Villadsen1 => system_model(villadsen1(interval(), levels, 1, 2, 1, half())?),
        Kind::Villadsen2 => system_model(villadsen2_skeleton(interval(), levels, 1, 2, 1, half())?),
        Kind::Dynamics => system_model(dynamics(doubling_map(), levels, 2)?),
        Kind::Thirds => form_model(fixtures::thirds(), Some(Q::new(2.into(), 5.into()))),
        Kind::Pipeline => {
            let f = fixtures::random_pipeline_fixture(seed, BaseKind::ALL[(seed % 4) as usize])?;
            form_model(f.phi, Some(f.delta))
        }
        Kind::Schedule => pair_model(fixtures::intertwining_schedule(depth)?),
        Kind::Violation => pair_model(fixtures::planted_violation()?),
    })
}
