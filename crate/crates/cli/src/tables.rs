//! Human-readable CSV tables. Every table starts with `# manifest:` comment lines.

use iepr_core::io::RunManifest;
use iepr_core::model::BareParameters;
use iepr_core::nonlinear::NonlinearParameters;
use iepr_core::{Error, Result};

fn fmt(x: f64) -> String {
    if x.is_finite() {
        let s = format!("{x:.2}");
        if s == "-0.00" { "0.00".into() } else { s }
    } else {
        "N/A".into()
    }
}

fn header(manifest: &RunManifest) -> Result<String> {
    let json = serde_json::to_string(manifest).map_err(|e| Error::Format(e.to_string()))?;
    Ok(format!("# manifest: {json}\n"))
}

fn render(manifest: &RunManifest, rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    for r in rows {
        w.write_record(&r).map_err(|e| Error::Format(e.to_string()))?;
    }
    let body = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    Ok(header(manifest)? + &String::from_utf8_lossy(&body))
}

/// Symmetric table with bare frequencies on the diagonal and couplings off it.
pub fn bare_matrix(manifest: &RunManifest, bare: &BareParameters) -> Result<String> {
    let n = bare.len();
    let mut rows = vec![std::iter::once("MHz".to_string()).chain(bare.names.iter().cloned()).collect()];
    for i in 0..n {
        let mut r = vec![bare.names[i].clone()];
        r.extend((0..n).map(|j| fmt(if i == j { bare.omega[i] } else { bare.g[(i, j)] })));
        rows.push(r);
    }
    render(manifest, rows)
}

/// One row per quantity, one column per method. Quantities are matched by mode label.
pub fn nonlinear_rows(manifest: &RunManifest, methods: &[&NonlinearParameters]) -> Result<String> {
    let first = methods.first().ok_or_else(|| Error::Spec("no nonlinear results to tabulate".into()))?;
    let mut rows = vec![std::iter::once("quantity".to_string())
        .chain(methods.iter().map(|m| method_name(m)))
        .collect::<Vec<_>>()];
    let labels = &first.labels;
    for l in labels {
        let mut r = vec![format!("omega_nl[{l}]")];
        r.extend(methods.iter().map(|m| fmt(m.mode(l).map_or(f64::NAN, |x| x.0))));
        rows.push(r);
    }
    for l in labels {
        let mut r = vec![format!("alpha_prime[{l}]")];
        r.extend(methods.iter().map(|m| fmt(m.mode(l).map_or(f64::NAN, |x| x.1))));
        rows.push(r);
    }
    for (i, a) in labels.iter().enumerate() {
        for b in &labels[i + 1..] {
            let mut r = vec![format!("chi[{a}-{b}]")];
            r.extend(methods.iter().map(|m| fmt(m.cross(a, b).unwrap_or(f64::NAN))));
            rows.push(r);
        }
    }
    render(manifest, rows)
}

fn method_name(m: &NonlinearParameters) -> String {
    serde_json::to_value(m.method)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

/// Bare (ω, α, g) next to normal (ω′nl, α′, χ): a header and a value row for each.
pub fn dual_representation(manifest: &RunManifest, bare: &BareParameters, normal: &NonlinearParameters) -> Result<String> {
    let n = bare.len();
    let mut head = vec!["bare".to_string()];
    let mut vals = vec!["MHz".to_string()];
    for i in 0..n {
        head.push(format!("omega[{}]", bare.names[i]));
        vals.push(fmt(bare.omega[i]));
    }
    for i in (0..n).filter(|&i| bare.alpha[i] != 0.0) {
        head.push(format!("alpha[{}]", bare.names[i]));
        vals.push(fmt(bare.alpha[i]));
    }
    for i in 0..n {
        for j in i + 1..n {
            head.push(format!("g[{}-{}]", bare.names[i], bare.names[j]));
            vals.push(fmt(bare.g[(i, j)]));
        }
    }
    let labels = &normal.labels;
    let mut nhead = vec!["normal".to_string()];
    let mut nvals = vec!["MHz".to_string()];
    for (k, l) in labels.iter().enumerate() {
        nhead.push(format!("omega_nl[{l}]"));
        nvals.push(fmt(normal.omega_prime_nl[k]));
    }
    for (k, l) in labels.iter().enumerate() {
        if normal.alpha_prime[k] != 0.0 {
            nhead.push(format!("alpha_prime[{l}]"));
            nvals.push(fmt(normal.alpha_prime[k]));
        }
    }
    for a in 0..labels.len() {
        for b in a + 1..labels.len() {
            nhead.push(format!("chi[{}-{}]", labels[a], labels[b]));
            nvals.push(fmt(normal.chi[(a, b)]));
        }
    }
    render(manifest, vec![head, vals, nhead, nvals])
}

/// Plot-ready sweep columns.
pub fn sweep(manifest: &RunManifest, grid: &[f64], g: &[f64], flags: &[Option<String>]) -> Result<String> {
    let mut rows = vec![vec!["param_value".to_string(), "g_eff_MHz".into(), "flag".into()]];
    for ((x, y), f) in grid.iter().zip(g).zip(flags) {
        rows.push(vec![format!("{x}"), fmt(*y), f.clone().unwrap_or_default()]);
    }
    render(manifest, rows)
}

/// Generic table with a header row.
pub fn plain(manifest: &RunManifest, head: &[&str], rows: Vec<Vec<String>>) -> Result<String> {
    let mut all = vec![head.iter().map(|s| s.to_string()).collect()];
    all.extend(rows);
    render(manifest, all)
}

pub fn number(x: f64) -> String {
    fmt(x)
}
