use std::fs;

use serde::Serialize;

use iepr_core::analysis::{effective_coupling_sweep, linear_grid, nms_extract, reduce_bare};
use iepr_core::extract::extract_all;
use iepr_core::fieldproc::process_export;
use iepr_core::io::{
    parse_json, to_json, CircuitFile, FieldsFile, ModesFile, NonlinearSection, ParametersFile, ReducedSection,
    RunManifest, SweepFile,
};
use iepr_core::modal::{forward_synthesize, TransformMatrix};
use iepr_core::model::{anharmonicity_from_lj, build_bare, josephson_energy, BareParameters};
use iepr_core::nalgebra::{DMatrix, DVector};
use iepr_core::nonlinear::{epr_formula_kerr, iepr_kerr, NonlinearParameters};
use iepr_core::oracle::{run_oracle, FockConfig};
use iepr_core::{Error, Result};

use crate::tables;
use crate::{Cli, Command, Format, Io, Layout, Method};

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Synth { io } => synth(cli, io),
        Command::Extract { io, table, lj } => extract(cli, io, table.as_deref(), lj),
        Command::Fields { io, lj } => fields(cli, io, lj),
        Command::Nonlinear { io, method, layout } => nonlinear(cli, io, *method, *layout),
        Command::Reduce { io, eliminate } => reduce(cli, io, eliminate),
        Command::Sweep { io, coupler, grid } => sweep(cli, io, coupler, grid),
        Command::Nms { io, tuned, partner, interval } => nms(cli, io, tuned, partner, interval),
        Command::Verify { io, levels, tolerance, freq_tolerance } => verify(cli, io, *levels, *tolerance, *freq_tolerance),
        Command::Validate { paths } => validate(paths),
    }
}

fn read(path: &str) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Spec(format!("cannot read {path}: {e}")))
}

fn write(path: Option<&str>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::Resource(format!("cannot write {p}: {e}"))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn manifest(cli: &Cli, command: &str, inputs: &[&str], outputs: &[Option<&str>]) -> RunManifest {
    RunManifest {
        command: command.into(),
        inputs: inputs.iter().map(|s| s.to_string()).collect(),
        outputs: outputs.iter().map(|o| o.unwrap_or("-").to_string()).collect(),
        seed: cli.seed,
        version: env!("CARGO_PKG_VERSION").into(),
    }
}

fn io_manifest(cli: &Cli, command: &str, io: &Io) -> RunManifest {
    manifest(cli, command, &[&io.input], &[io.output.as_deref()])
}

fn circuit(path: &str) -> Result<iepr_core::model::CircuitSpec> {
    parse_json::<CircuitFile>(&read(path)?, path)?.to_spec()
}

fn parse_lj(pairs: &[String], names: &[String]) -> Result<Option<DVector<f64>>> {
    if pairs.is_empty() {
        return Ok(None);
    }
    let mut lj = DVector::zeros(names.len());
    for p in pairs {
        let (name, value) = p
            .split_once('=')
            .ok_or_else(|| Error::Spec(format!("--lj expects name=nH, got {p}")))?;
        let i = names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Spec(format!("--lj names unknown element {name}")))?;
        lj[i] = value
            .parse()
            .map_err(|_| Error::Spec(format!("--lj value for {name} is not a number: {value}")))?;
    }
    Ok(Some(lj))
}

fn parse_range(text: &str, flag: &str, parts: usize) -> Result<Vec<f64>> {
    let v: Vec<&str> = text.split(':').collect();
    if v.len() != parts {
        return Err(Error::Spec(format!("--{flag} expects {parts} colon-separated values, got {text}")));
    }
    v.iter()
        .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Spec(format!("--{flag}: {s} is not a number"))))
        .collect()
}

fn modes_output(cli: &Cli, command: &str, io: &Io, file: &mut ModesFile) -> Result<()> {
    let m = io_manifest(cli, command, io);
    let text = match io.format {
        Format::Json => {
            file.manifest = Some(m);
            to_json(file)?
        }
        Format::Csv => {
            let mut head = vec!["mode".to_string(), "freq_MHz".into()];
            head.extend(file.elements.iter().map(|e| format!("r[{e}]")));
            head.extend(file.elements.iter().map(|e| format!("s[{e}]")));
            let rows = (0..file.modes.len())
                .map(|k| {
                    let mut r = vec![k.to_string(), tables::number(file.modes[k].freq_mhz)];
                    r.extend(file.iepr[k].iter().map(|x| x.map_or("N/A".into(), |x| format!("{x:.6}"))));
                    if let Some(s) = &file.signs {
                        r.extend(s[k].iter().map(|x| x.map_or("N/A".into(), |x| format!("{x:+.0}"))));
                    }
                    r
                })
                .collect();
            let head: Vec<&str> = head.iter().map(String::as_str).collect();
            tables::plain(&m, &head, rows)?
        }
    };
    write(io.output.as_deref(), &text)
}

fn synth(cli: &Cli, io: &Io) -> Result<()> {
    let spec = circuit(&io.input)?;
    let syn = forward_synthesize(&build_bare(&spec)?)?;
    let mut file = ModesFile::from_modes(&syn.modes);
    for w in &syn.warnings {
        eprintln!("warning: {w}");
    }
    modes_output(cli, "synth", io, &mut file)
}

fn extract(cli: &Cli, io: &Io, table: Option<&str>, lj: &[String]) -> Result<()> {
    let modes = parse_json::<ModesFile>(&read(&io.input)?, &io.input)?.to_modes()?;
    let lj = parse_lj(lj, &modes.names)?;
    let rep = extract_all(&modes, lj.as_ref())?;
    for w in &rep.warnings {
        eprintln!("warning: {w}");
    }
    let mut outputs = vec![io.output.as_deref()];
    if table.is_some() {
        outputs.push(table);
    }
    let m = manifest(cli, "extract", &[&io.input], &outputs);
    if let Some(path) = table {
        write(Some(path), &tables::bare_matrix(&m, &rep.bare)?)?;
    }
    let text = match io.format {
        Format::Json => {
            let mut file = ParametersFile::from_report(&rep);
            file.manifest = Some(m);
            to_json(&file)?
        }
        Format::Csv => tables::bare_matrix(&m, &rep.bare)?,
    };
    write(io.output.as_deref(), &text)
}

fn fields(cli: &Cli, io: &Io, lj: &[String]) -> Result<()> {
    let export = parse_json::<FieldsFile>(&read(&io.input)?, &io.input)?.to_export();
    let mut result = process_export(&export)?;
    result.modes.lj = parse_lj(lj, &result.modes.names)?;
    let dev = result.row_sum_deviation.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if dev > 1e-3 {
        eprintln!("warning: participation rows deviate from unit sum by up to {dev:.2e}");
    }
    let mut file = ModesFile::from_modes(&result.modes);
    modes_output(cli, "fields", io, &mut file)
}

/// Bare parameters from a file section, with anharmonicities filled in from L_J where missing.
fn bare_with_alpha(file: &ParametersFile) -> Result<BareParameters> {
    let mut bare = file.bare.to_bare()?;
    for i in 0..bare.len() {
        if bare.lj[i] > 0.0 && bare.alpha[i] == 0.0 {
            bare.alpha[i] = anharmonicity_from_lj(bare.omega[i], bare.lj[i])?;
        }
    }
    Ok(bare)
}

fn kerr_sets(file: &ParametersFile, method: Method) -> Result<(Option<NonlinearParameters>, Option<NonlinearParameters>)> {
    let bare = bare_with_alpha(file)?;
    if bare.alpha.iter().all(|a| *a == 0.0) {
        return Err(Error::Spec("no junction elements: the Kerr parameters are all zero".into()));
    }
    let u = file.transform()?;
    let omega_prime = file.omega_prime();
    let junctions: Vec<usize> = (0..bare.len()).filter(|&i| bare.alpha[i] != 0.0).collect();
    if let Some(&j) = junctions.iter().find(|&&j| u.column(j).iter().any(|x| !x.is_finite())) {
        return Err(Error::Unsupported(format!("junction element {} has no participation data", bare.names[j])));
    }
    let iepr = iepr_kerr(&TransformMatrix::from_matrix(u.clone()), &omega_prime, &bare, &bare.names)?;
    let epr = if method == Method::Iepr {
        None
    } else {
        let p = DMatrix::from_fn(u.nrows(), junctions.len(), |m, k| u[(m, junctions[k])].powi(2));
        let ej = junctions
            .iter()
            .map(|&j| {
                if bare.lj[j] > 0.0 {
                    josephson_energy(bare.lj[j]).map(|e| e * 1e3)
                } else {
                    Err(Error::Spec(format!("{} has an anharmonicity but no L_J", bare.names[j])))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Some(epr_formula_kerr(&p, &omega_prime, &ej, iepr.labels.clone())?)
    };
    Ok(((method != Method::Epr).then_some(iepr), epr))
}

fn nonlinear(cli: &Cli, io: &Io, method: Method, layout: Layout) -> Result<()> {
    let mut file = parse_json::<ParametersFile>(&read(&io.input)?, &io.input)?;
    let (iepr, epr) = kerr_sets(&file, method)?;
    let m = io_manifest(cli, "nonlinear", io);
    let text = match io.format {
        Format::Json => {
            file.normal = iepr.as_ref().map(NonlinearSection::from_params).or(file.normal);
            file.epr = epr.as_ref().map(NonlinearSection::from_params).or(file.epr);
            file.manifest = Some(m);
            to_json(&file)?
        }
        Format::Csv => {
            let oracle = file.oracle.as_ref().map(NonlinearSection::to_params).transpose()?;
            match layout {
                Layout::Rows => {
                    let sets: Vec<&NonlinearParameters> =
                        [iepr.as_ref(), epr.as_ref(), oracle.as_ref()].into_iter().flatten().collect();
                    tables::nonlinear_rows(&m, &sets)?
                }
                Layout::Dual => {
                    let normal = iepr.as_ref().or(epr.as_ref()).expect("at least one method runs");
                    tables::dual_representation(&m, &bare_with_alpha(&file)?, normal)?
                }
            }
        }
    };
    write(io.output.as_deref(), &text)
}

fn reduce(cli: &Cli, io: &Io, eliminate: &[String]) -> Result<()> {
    let mut file = parse_json::<ParametersFile>(&read(&io.input)?, &io.input)?;
    let bare = file.bare.to_bare()?;
    let res = reduce_bare(&bare, eliminate)?;
    for w in &res.warnings {
        eprintln!("warning: {w}");
    }
    let m = io_manifest(cli, "reduce", io);
    let text = match io.format {
        Format::Json => {
            file.reduced = Some(ReducedSection::from_result(&res));
            file.manifest = Some(m);
            to_json(&file)?
        }
        Format::Csv => tables::bare_matrix(&m, &res.effective)?,
    };
    write(io.output.as_deref(), &text)
}

fn sweep(cli: &Cli, io: &Io, coupler: &str, grid: &str) -> Result<()> {
    let spec = circuit(&io.input)?;
    let g = parse_range(grid, "grid", 3)?;
    if g[2].fract() != 0.0 || g[2] < 2.0 {
        return Err(Error::Spec(format!("--grid: steps must be an integer >= 2, got {}", g[2])));
    }
    let points = linear_grid(g[0], g[1], g[2] as usize)?;
    let res = effective_coupling_sweep(&spec, coupler, &points)?;
    let m = io_manifest(cli, "sweep", io);
    let text = match io.format {
        Format::Json => {
            let mut file = SweepFile::from_result(&res);
            file.manifest = Some(m);
            to_json(&file)?
        }
        Format::Csv => {
            let flags: Vec<Option<String>> = res.points.iter().map(|p| p.flag.clone()).collect();
            tables::sweep(&m, &res.grid(), &res.values(), &flags)?
        }
    };
    write(io.output.as_deref(), &text)
}

#[allow(non_snake_case)]
#[derive(Serialize)]
struct NmsFile {
    manifest: RunManifest,
    tuned: String,
    partner: String,
    g_MHz: f64,
    g_resonance_MHz: f64,
    resonance_inductance_nH: f64,
    rescale: f64,
    g_bare_MHz: f64,
    relative_difference: f64,
}

fn nms(cli: &Cli, io: &Io, tuned: &str, partner: &str, interval: &str) -> Result<()> {
    let spec = circuit(&io.input)?;
    let iv = parse_range(interval, "interval", 2)?;
    let res = nms_extract(&spec, tuned, partner, (iv[0], iv[1]))?;
    let bare = build_bare(&spec)?;
    let (t, p) = (bare.index_of(tuned).unwrap(), bare.index_of(partner).unwrap());
    let g_bare = bare.g[(t, p)].abs();
    let file = NmsFile {
        manifest: io_manifest(cli, "nms", io),
        tuned: tuned.into(),
        partner: partner.into(),
        g_MHz: res.g,
        g_resonance_MHz: res.g_resonance,
        resonance_inductance_nH: res.resonance_inductance,
        rescale: res.rescale,
        g_bare_MHz: g_bare,
        relative_difference: (res.g - g_bare) / g_bare,
    };
    let text = match io.format {
        Format::Json => to_json(&file)?,
        Format::Csv => tables::plain(
            &file.manifest,
            &["quantity", "value"],
            vec![
                vec!["g_nms_MHz".into(), tables::number(file.g_MHz)],
                vec!["g_resonance_MHz".into(), tables::number(file.g_resonance_MHz)],
                vec!["g_bare_MHz".into(), tables::number(file.g_bare_MHz)],
                vec!["resonance_inductance_nH".into(), format!("{:.4}", file.resonance_inductance_nH)],
            ],
        )?,
    };
    write(io.output.as_deref(), &text)
}

#[derive(Serialize)]
struct Check {
    quantity: String,
    model: Option<f64>,
    oracle: Option<f64>,
    delta: Option<f64>,
    tolerance: f64,
    relative: bool,
    pass: bool,
}

#[allow(non_snake_case)]
#[derive(Serialize)]
struct VerifyFile {
    manifest: RunManifest,
    levels: usize,
    tolerance: f64,
    freq_tolerance_MHz: f64,
    checks: Vec<Check>,
    oracle: NonlinearSection,
    passed: bool,
}

/// Absolute slack (MHz) for relative checks on near-zero quantities.
const ABS_FLOOR: f64 = 0.01;

fn check(quantity: String, model: Option<f64>, oracle: Option<f64>, tol: f64, relative: bool) -> Check {
    let fin = |x: Option<f64>| x.filter(|v| v.is_finite());
    let (model, oracle) = (fin(model), fin(oracle));
    let delta = model.zip(oracle).map(|(a, b)| a - b);
    let pass = match (delta, oracle) {
        (Some(d), Some(o)) if relative => d.abs() <= (tol * o.abs()).max(ABS_FLOOR),
        (Some(d), _) => d.abs() <= tol,
        _ => false,
    };
    Check { quantity, model, oracle, delta, tolerance: tol, relative, pass }
}

fn verify(cli: &Cli, io: &Io, levels: usize, tol: f64, ftol: f64) -> Result<()> {
    if !(tol > 0.0 && ftol > 0.0) {
        return Err(Error::Spec("tolerances must be positive".into()));
    }
    let file = parse_json::<ParametersFile>(&read(&io.input)?, &io.input)?;
    let model = match &file.normal {
        Some(s) => s.to_params()?,
        None => kerr_sets(&file, Method::Iepr)?.0.expect("IEPR requested"),
    };
    let bare = bare_with_alpha(&file)?;
    if bare.omega.iter().chain(bare.g.iter()).any(|x| !x.is_finite()) {
        return Err(Error::Unsupported("the oracle needs a complete bare parameter set".into()));
    }
    let result = run_oracle(&bare, &FockConfig::with_levels(levels))?;
    let oracle = &result.parameters;

    let mut checks = Vec::new();
    let labels = &model.labels;
    for l in labels {
        let (a, b) = (model.mode(l), oracle.mode(l));
        checks.push(check(format!("omega_nl[{l}]"), a.map(|x| x.0), b.map(|x| x.0), ftol, false));
        checks.push(check(format!("alpha_prime[{l}]"), a.map(|x| x.1), b.map(|x| x.1), tol, true));
    }
    for (i, a) in labels.iter().enumerate() {
        for b in &labels[i + 1..] {
            checks.push(check(format!("chi[{a}-{b}]"), model.cross(a, b), oracle.cross(a, b), tol, true));
        }
    }
    let converged = result.convergence.passed();
    let passed = converged && checks.iter().all(|c| c.pass);
    for c in &checks {
        eprintln!(
            "{} {} model={} oracle={}",
            if c.pass { "PASS" } else { "FAIL" },
            c.quantity,
            c.model.map_or("N/A".into(), |x| format!("{x:.3}")),
            c.oracle.map_or("N/A".into(), |x| format!("{x:.3}")),
        );
    }
    eprintln!(
        "{} convergence at {} levels{}",
        if converged { "PASS" } else { "FAIL" },
        result.convergence.convergence_levels,
        if converged { String::new() } else { format!(": {}", result.convergence.flagged.join(", ")) }
    );

    let m = io_manifest(cli, "verify", io);
    let text = match io.format {
        Format::Json => to_json(&VerifyFile {
            manifest: m,
            levels,
            tolerance: tol,
            freq_tolerance_MHz: ftol,
            oracle: NonlinearSection::from_oracle(&result),
            checks,
            passed,
        })?,
        Format::Csv => {
            let rows = checks
                .iter()
                .map(|c| {
                    vec![
                        c.quantity.clone(),
                        tables::number(c.model.unwrap_or(f64::NAN)),
                        tables::number(c.oracle.unwrap_or(f64::NAN)),
                        tables::number(c.delta.unwrap_or(f64::NAN)),
                        if c.pass { "PASS" } else { "FAIL" }.into(),
                    ]
                })
                .collect();
            tables::plain(&m, &["quantity", "model_MHz", "oracle_MHz", "delta_MHz", "status"], rows)?
        }
    };
    write(io.output.as_deref(), &text)?;
    if passed {
        Ok(())
    } else {
        Err(Error::Consistency("verification failed: model and oracle disagree beyond tolerance".into()))
    }
}

fn validate_one(path: &str) -> Result<&'static str> {
    let text = read(path)?;
    let value: serde_json::Value = parse_json(&text, path)?;
    let has = |k: &str| value.get(k).is_some();
    if has("bare") {
        let f = parse_json::<ParametersFile>(&text, path)?;
        f.bare.to_bare()?;
        f.transform()?;
        for s in [&f.normal, &f.epr, &f.oracle].into_iter().flatten() {
            s.to_params()?;
        }
        Ok("parameters")
    } else if has("paths") {
        parse_json::<FieldsFile>(&text, path)?.to_export().validate()?;
        Ok("fields")
    } else if has("iepr") {
        parse_json::<ModesFile>(&text, path)?.to_modes()?.validate()?;
        Ok("modes")
    } else if has("grid") {
        parse_json::<SweepFile>(&text, path)?;
        Ok("sweep")
    } else if has("elements") {
        parse_json::<CircuitFile>(&text, path)?.to_spec()?;
        Ok("circuit")
    } else {
        Err(Error::Format(format!("{path}: cannot tell the file type from its top-level keys")))
    }
}

fn validate(paths: &[String]) -> Result<()> {
    let mut failed = 0;
    for p in paths {
        match validate_one(p) {
            Ok(kind) => println!("OK {p} ({kind})"),
            Err(e) => {
                failed += 1;
                println!("INVALID {p}: {e}");
            }
        }
    }
    if failed == 0 {
        Ok(())
    } else {
        Err(Error::Spec(format!("{failed} of {} files failed validation", paths.len())))
    }
}
