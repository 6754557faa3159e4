//! The eight commands, generic over the scalar backend.

use std::path::Path;
use std::sync::Arc;

use cohft::correlator::{
    build_cohft, check_order, quantum_product, required_order, string_dilaton_check, CorrelatorTable, Insertion,
    TableBounds, Theory,
};
use cohft::frobenius::{presets, FrobeniusAlgebra, FrobeniusError, SemisimpleFrame};
use cohft::nodal::{check_symplectic, random_symplectic, ClassificationData, Pairing};
use cohft::oracle;
use cohft::reconstruction::{
    check_homogeneity, euler_by_name, hodge_ambiguity_apply, reconstruct_table, rmatrix_residual, satisfies_recursion,
    solve_rmatrix, EulerData, HodgeTwist,
};
use cohft::scalar::Scalar;
use cohft::series::EndSeries;
use cohft::tft::{elementary, propagator, SurfaceSignature};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{AlgebraSource, EulerSource, RSource, RunConfig};
use crate::error::CliError;
use crate::output::Artifacts;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Tft,
    Nodal,
    Oracle,
    Build,
    Deform,
    Rmatrix,
    Reconstruct,
    Check,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Tft => "tft",
            Command::Nodal => "nodal",
            Command::Oracle => "oracle",
            Command::Build => "build",
            Command::Deform => "deform",
            Command::Rmatrix => "rmatrix",
            Command::Reconstruct => "reconstruct",
            Command::Check => "check",
        }
    }
}

/// Artifacts of a run, plus the invariant that failed if the run found one.
/// Failing checks still write their report.
pub struct Outcome {
    pub artifacts: Artifacts,
    pub failure: Option<CliError>,
}

impl Outcome {
    fn ok(artifacts: Artifacts) -> Self {
        Outcome { artifacts, failure: None }
    }
}

struct Ctx<'a, S: Scalar> {
    cfg: &'a RunConfig,
    bounds: TableBounds,
    alg: Option<FrobeniusAlgebra<S>>,
}

impl<'a, S: Scalar> Ctx<'a, S> {
    fn alg(&self) -> Result<&FrobeniusAlgebra<S>, CliError> {
        self.alg.as_ref().ok_or_else(|| CliError::schema("this command needs an `algebra` entry"))
    }

    fn frame(&self) -> Result<SemisimpleFrame<S>, CliError> {
        Ok(self.alg()?.idempotent_decomposition()?)
    }

    fn order(&self) -> usize {
        self.cfg.order.unwrap_or_else(|| required_order(self.bounds))
    }

    fn euler(&self) -> Result<EulerData<S>, CliError> {
        match &self.cfg.euler {
            None => Err(CliError::schema("this command needs an `euler` entry")),
            Some(EulerSource::Preset { name }) => {
                euler_by_name(name).ok_or_else(|| CliError::schema(format!("unknown Euler preset '{name}'")))
            }
            Some(EulerSource::Inline { data }) => EulerData::from_json(data).map_err(|e| CliError::schema(e.to_string())),
        }
    }

    fn r_matrix(&self, frame: &SemisimpleFrame<S>, default: RSource) -> Result<EndSeries<S>, CliError> {
        let alg = self.alg()?;
        let order = self.order();
        let src = self.cfg.options.e.clone().unwrap_or(default);
        let e = match src {
            RSource::Identity => EndSeries::identity(alg.dim(), order),
            RSource::Series { series } => {
                let e = EndSeries::from_json(&series)?;
                if e.dim() != alg.dim() {
                    return Err(CliError::schema("R-matrix dimension does not match the algebra"));
                }
                e
            }
            RSource::RandomSymplectic => {
                random_symplectic(&Pairing::from_algebra(alg), order, &mut ChaCha8Rng::seed_from_u64(self.cfg.seed))
            }
            RSource::Solve => {
                let data = self.euler()?;
                data.validate(alg)?;
                solve_rmatrix(frame, &data, order)?
            }
        };
        if !check_symplectic(&Pairing::from_algebra(alg), &e) {
            return Err(CliError::precondition("symplectic", "E(z) E*(-z) != Id"));
        }
        Ok(e)
    }

    fn hodge(&self) -> Result<Option<HodgeTwist<S>>, CliError> {
        match &self.cfg.options.hodge {
            None => Ok(None),
            Some(vals) => Ok(Some(HodgeTwist::new(vals.iter().map(scalar).collect::<Result<_, _>>()?))),
        }
    }

    fn names(&self) -> Vec<String> {
        self.alg.as_ref().map(|a| a.basis_names().to_vec()).unwrap_or_default()
    }
}

fn scalar<S: Scalar>(v: &Value) -> Result<S, CliError> {
    S::from_json(v).map_err(|e| CliError::schema(e.to_string()))
}

/// Builds the algebra named by the config; file contents are read by the caller.
pub fn load_algebra<S: Scalar>(src: &AlgebraSource, file_bytes: Option<&[u8]>) -> Result<FrobeniusAlgebra<S>, CliError> {
    match src {
        AlgebraSource::Preset { name, q, n, thetas } => {
            let qv = match q {
                Some(v) => scalar(v)?,
                None => S::one(),
            };
            let thetas = || -> Result<Vec<S>, CliError> {
                thetas.as_ref().ok_or_else(|| CliError::schema("preset needs `thetas`"))?.iter().map(scalar).collect()
            };
            match name.as_str() {
                "truncated_power" => Ok(presets::truncated_power(n.ok_or_else(|| CliError::schema("preset needs `n`"))?, qv)),
                "rank_one" => Ok(presets::rank_one(qv)),
                "diagonal" => Ok(presets::diagonal(&thetas()?)),
                other => presets::by_name(other, qv).ok_or_else(|| CliError::schema(format!("unknown algebra preset '{other}'"))),
            }
        }
        AlgebraSource::Inline { algebra } => Ok(FrobeniusAlgebra::from_json(algebra)?),
        AlgebraSource::File { path } => {
            let bytes = file_bytes.ok_or_else(|| CliError::schema(format!("{} was not read", path.display())))?;
            let v: Value = serde_json::from_slice(bytes).map_err(|e| CliError::schema(format!("{}: {e}", path.display())))?;
            Ok(FrobeniusAlgebra::from_json(&v)?)
        }
    }
}

/// Runs `cmd`; `files` maps each referenced input path to its bytes.
pub fn run<S: Scalar>(cmd: Command, cfg: &RunConfig, files: &[(String, Vec<u8>)]) -> Result<Outcome, CliError> {
    let bytes_of = |p: &Path| files.iter().find(|(n, _)| Path::new(n) == p).map(|(_, b)| b.as_slice());
    let alg = match &cfg.algebra {
        None => None,
        Some(src) => {
            let file = match src {
                AlgebraSource::File { path } => bytes_of(path),
                _ => None,
            };
            Some(load_algebra::<S>(src, file)?)
        }
    };
    if let Some(a) = &alg {
        let report = a.validate();
        if !report.is_valid() {
            return Err(CliError::precondition("frobenius_axioms", report.to_json().to_string()));
        }
    }
    let bounds = TableBounds::new(cfg.bounds.max_genus, cfg.bounds.max_points);
    let ctx = Ctx { cfg, bounds, alg };
    match cmd {
        Command::Tft => tft(&ctx),
        Command::Nodal => nodal(&ctx),
        Command::Oracle => oracle_cmd(&ctx),
        Command::Build => build(&ctx),
        Command::Deform => deform(&ctx),
        Command::Rmatrix => rmatrix(&ctx),
        Command::Reconstruct => reconstruct(&ctx),
        Command::Check => {
            let path = cfg.options.table.as_ref().ok_or_else(|| CliError::schema("check needs `options.table`"))?;
            let bytes = bytes_of(path).ok_or_else(|| CliError::schema(format!("{} was not read", path.display())))?;
            check(&ctx, bytes)
        }
    }
}

const DEFAULT_SIGNATURES: [[usize; 3]; 7] = [[0, 1, 1], [0, 2, 1], [0, 1, 2], [0, 3, 0], [1, 1, 1], [1, 0, 0], [2, 0, 0]];

fn tft<S: Scalar>(ctx: &Ctx<S>) -> Result<Outcome, CliError> {
    let alg = ctx.alg()?;
    let brute = ctx.cfg.options.brute_force;
    let frame = match alg.idempotent_decomposition() {
        Ok(f) => Some(f),
        // sewing elementary pieces works without idempotents
        Err(FrobeniusError::NotSemisimple) if brute => None,
        Err(e) => return Err(e.into()),
    };
    let sigs = ctx.cfg.options.signatures.clone().unwrap_or_else(|| DEFAULT_SIGNATURES.to_vec());
    let mut rows = Vec::new();
    let mut mismatch = None;
    for [g, i, o] in sigs {
        let sig = SurfaceSignature::new(g, i, o);
        let closed = frame.as_ref().map(|f| propagator(f, sig));
        let sewn = brute.then(|| elementary::brute_force(alg, sig));
        let agree = match (&closed, &sewn) {
            (Some(a), Some(b)) => Some(a.approx_eq(b)),
            _ => None,
        };
        if agree == Some(false) && mismatch.is_none() {
            mismatch = Some(format!("genus {g}, {i} inputs, {o} outputs"));
        }
        rows.push(json!({
            "signature": [g, i, o],
            "propagator": closed.as_ref().map(|p| p.to_json()),
            "brute_force": sewn.as_ref().map(|p| p.to_json()),
            "agree": agree,
        }));
    }
    let mut art = Artifacts::default();
    art.add(
        "result.json",
        &json!({
            "algebra": alg.to_json(),
            "semisimple": frame.is_some(),
            "frame": frame.as_ref().map(|f| f.to_json()),
            "surfaces": rows,
        }),
    );
    Ok(Outcome {
        artifacts: art,
        failure: mismatch.map(|m| CliError::precondition("tft_sewing", format!("closed form and sewing differ at {m}"))),
    })
}

fn nodal<S: Scalar>(ctx: &Ctx<S>) -> Result<Outcome, CliError> {
    let alg = ctx.alg()?;
    let frame = ctx.frame()?;
    let e = ctx.r_matrix(&frame, RSource::RandomSymplectic)?;
    let mut art = Artifacts::default();
    art.add("result.json", &json!({"E": e.to_json(), "analysis": ClassificationData::cohft(e).analyze(alg, &frame)}));
    Ok(Outcome::ok(art))
}

fn oracle_cmd<S: Scalar>(ctx: &Ctx<S>) -> Result<Outcome, CliError> {
    let cap = ctx.cfg.options.max_dimension;
    let mut rows = Vec::new();
    for g in 0..=ctx.bounds.max_genus {
        for key in oracle::all_keys(g, ctx.bounds.max_points) {
            if cap.is_some_and(|c| oracle::dimension(g, key.len()) > c) {
                continue;
            }
            let v = oracle::wk(g, &key);
            rows.push(json!([g, key, cohft::scalar::Scalar::to_json(&v)]));
        }
    }
    let mut art = Artifacts::default();
    art.add(
        "result.json",
        &json!({"max_genus": ctx.bounds.max_genus, "max_points": ctx.bounds.max_points, "intersections": rows}),
    );
    Ok(Outcome::ok(art))
}

fn default_source<S: Scalar>(ctx: &Ctx<S>) -> RSource {
    if ctx.cfg.euler.is_some() {
        RSource::Solve
    } else {
        RSource::Identity
    }
}

fn flat_check<S: Scalar>(t: &dyn Theory<S>, alg: &FrobeniusAlgebra<S>, bounds: TableBounds) -> Result<(Value, Option<CliError>), CliError> {
    let rep = string_dilaton_check(t, alg.unit(), alg.pairing(), bounds)?;
    let failure = if !rep.string_failures.is_empty() {
        Some(CliError::precondition("string_equation", rep.string_failures[0].clone()))
    } else if !rep.dilaton_failures.is_empty() {
        Some(CliError::precondition("dilaton_equation", rep.dilaton_failures[0].clone()))
    } else {
        None
    };
    Ok((rep.to_json(), failure))
}

fn build<S: Scalar>(ctx: &Ctx<S>) -> Result<Outcome, CliError> {
    let alg = ctx.alg()?;
    let frame = ctx.frame()?;
    let e = ctx.r_matrix(&frame, default_source(ctx))?;
    check_order(&e, ctx.bounds)?;
    let t = build_cohft(alg, &frame, &e)?;
    let table = CorrelatorTable::materialize(t.as_ref(), ctx.bounds)?;
    let (flat, failure) = flat_check(&table, alg, ctx.bounds)?;
    let mut art = Artifacts::default();
    art.add_compact("table.json", &table.to_json(&ctx.names()));
    art.add("result.json", &json!({"E": e.to_json(), "entries": table.len(), "string_dilaton": flat}));
    Ok(Outcome { artifacts: art, failure })
}

fn deform<S: Scalar>(ctx: &Ctx<S>) -> Result<Outcome, CliError> {
    let alg = ctx.alg()?;
    let frame = ctx.frame()?;
    let e = ctx.r_matrix(&frame, default_source(ctx))?;
    let t: Arc<dyn Theory<S>> = build_cohft(alg, &frame, &e)?;
    let w: Vec<S> = match &ctx.cfg.options.u {
        Some(vs) => vs.iter().map(scalar).collect::<Result<_, _>>()?,
        None => alg.unit().to_vec(),
    };
    if w.len() != alg.dim() {
        return Err(CliError::schema("`options.u` must have one entry per basis vector"));
    }
    let order = ctx.cfg.options.deform_order.unwrap_or(3);
    let qp = quantum_product(t, &Pairing::from_algebra(alg), &w, order)?;
    let defect = qp.associativity_defect();
    let mut art = Artifacts::default();
    art.add(
        "result.json",
        &json!({"direction": w.iter().map(Scalar::to_json).collect::<Vec<_>>(), "order": order,
                "product": qp.to_json(), "associativity_defect": defect}),
    );
    let failure = (!qp.is_associative())
        .then(|| CliError::precondition("wdvv_associativity", format!("deformed product defect {defect:e}")));
    Ok(Outcome { artifacts: art, failure })
}

fn rmatrix<S: Scalar>(ctx: &Ctx<S>) -> Result<Outcome, CliError> {
    let alg = ctx.alg()?;
    let frame = ctx.frame()?;
    let data = ctx.euler()?;
    data.validate(alg)?;
    let mut e = solve_rmatrix(&frame, &data, ctx.order())?;
    let h = ctx.hodge()?;
    if let Some(h) = &h {
        e = hodge_ambiguity_apply(&e, h);
    }
    let mut art = Artifacts::default();
    art.add(
        "result.json",
        &json!({
            "E": e.to_json(),
            "euler": data.to_json(),
            "hodge_twisted": h.as_ref().is_some_and(|h| !h.is_zero()),
            "symplectic": check_symplectic(&Pairing::from_algebra(alg), &e),
            "satisfies_recursion": satisfies_recursion(alg, &data, &e),
            "recursion_residual": rmatrix_residual(alg, &data, &e),
        }),
    );
    Ok(Outcome::ok(art))
}

fn reconstruct<S: Scalar>(ctx: &Ctx<S>) -> Result<Outcome, CliError> {
    let alg = ctx.alg()?;
    let frame = ctx.frame()?;
    let data = ctx.euler()?;
    let h = ctx.hodge()?;
    let (e, table) = reconstruct_table(alg, &frame, &data, ctx.bounds, h.as_ref())?;
    let (flat, mut failure) = flat_check(&table, alg, ctx.bounds)?;
    let hom = check_homogeneity(&table, alg, &data, ctx.bounds)?;
    // the Hodge ambiguity is allowed to break homogeneity
    let twisted = h.as_ref().is_some_and(|h| !h.is_zero());
    if failure.is_none() && !twisted && !hom.passed() {
        failure = Some(CliError::precondition("homogeneity", hom.to_json().to_string()));
    }
    let mut art = Artifacts::default();
    art.add_compact("table.json", &table.to_json(&ctx.names()));
    art.add(
        "result.json",
        &json!({"E": e.to_json(), "entries": table.len(), "string_dilaton": flat, "homogeneity": hom.to_json()}),
    );
    Ok(Outcome { artifacts: art, failure })
}

fn check<S: Scalar>(ctx: &Ctx<S>, bytes: &[u8]) -> Result<Outcome, CliError> {
    let alg = ctx.alg()?;
    let v: Value = serde_json::from_slice(bytes).map_err(|e| CliError::schema(format!("table: {e}")))?;
    let table = CorrelatorTable::<S>::from_json(&v)?;
    if table.dim() != alg.dim() {
        return Err(CliError::schema(format!("table has dimension {}, algebra {}", table.dim(), alg.dim())));
    }
    let bounds = table.bounds;
    let mut failures: Vec<(String, String)> = Vec::new();

    // genus-zero three-point values are the algebra
    let n = alg.dim();
    let mut three_point = 0usize;
    if bounds.contains(0, 3) {
        for a in 0..n {
            for b in a..n {
                for c in b..n {
                    let key = [Insertion::new(a, 0), Insertion::new(b, 0), Insertion::new(c, 0)];
                    let got = table.correlator(0, &key)?;
                    let unit = |i: usize| (0..n).map(|j| if i == j { S::one() } else { S::zero() }).collect::<Vec<_>>();
                    let want = alg.theta(&alg.mul(&alg.mul(&unit(a), &unit(b)), &unit(c)));
                    three_point += 1;
                    if !got.approx_eq(&want) {
                        failures.push(("genus0_three_point".into(), format!("<e{a}, e{b}, e{c}>_0 = {got}, algebra gives {want}")));
                    }
                }
            }
        }
    }

    let (flat, flat_failure) = flat_check(&table, alg, bounds)?;
    if let Some(CliError::Precondition { invariant, message }) = flat_failure {
        failures.push((invariant, message));
    }

    let mut report = json!({
        "entries": table.len(),
        "genus0_three_point_checked": three_point,
        "string_dilaton": flat,
    });
    if ctx.cfg.euler.is_some() {
        let data = ctx.euler()?;
        let hom = check_homogeneity(&table, alg, &data, bounds)?;
        if !hom.passed() {
            failures.push(("homogeneity".into(), hom.to_json().to_string()));
        }
        // a semi-simple homogeneous theory is fixed by its genus-zero part
        let frame = ctx.frame()?;
        let (_, expected) = reconstruct_table(alg, &frame, &data, bounds, None)?;
        let diff = table.max_abs_diff(&expected);
        if !table.approx_eq(&expected) {
            failures.push(("reconstruction".into(), format!("table differs from the reconstructed theory by {diff:e}")));
        }
        report["homogeneity"] = hom.to_json();
        report["reconstruction_max_diff"] = json!(diff);
    }
    report["failures"] = json!(failures.iter().map(|(i, m)| json!({"invariant": i, "message": m})).collect::<Vec<_>>());
    report["passed"] = json!(failures.is_empty());
    let mut art = Artifacts::default();
    art.add("result.json", &report);
    let failure = failures.into_iter().next().map(|(i, m)| CliError::precondition(i, m));
    Ok(Outcome { artifacts: art, failure })
}
