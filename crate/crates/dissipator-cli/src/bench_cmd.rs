//! Benchmark harness: table presets over the built-in problem families,
//! fanned out to a worker pool, merged in deterministic order.

use std::fmt::Write as _;
use std::path::Path;

use clap::ValueEnum;
use rayon::prelude::*;
use serde_json::json;

use dissipator::bench::{example1, example1b, Family, ProblemSpec};
use dissipator::constructors::{pencil_minimize, spectral_feedback};
use dissipator::gradient_flow::{
    coalescence_tolerance, limit_structure_check, outer_solve, GlOptions, Variant,
};
use dissipator::model::ControlPair;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// All methods on the first printed 5x5 example
    Table1,
    /// GL(2) and GL(3) on the augmented-B example
    Table2,
    /// GL(m)+ across the shifted negative Grcar family
    Table3,
    /// GL(m) versus GL(m)+ on the clustered-eigenvalue family
    Table4,
}

impl Preset {
    fn file_name(self) -> &'static str {
        match self {
            Preset::Table1 => "table1.csv",
            Preset::Table2 => "table2.csv",
            Preset::Table3 => "table3.csv",
            Preset::Table4 => "table4.csv",
        }
    }
}

/// The printed (shift, n, m) rows of the Grcar table.
pub const GRCAR_ROWS: [(f64, usize, usize); 12] = [
    (0.6, 50, 2),
    (0.6, 100, 4),
    (0.6, 150, 6),
    (0.6, 200, 10),
    (0.62, 100, 2),
    (0.62, 150, 4),
    (0.52, 20, 2),
    (0.52, 40, 3),
    (0.52, 45, 4),
    (0.52, 50, 4),
    (0.52, 100, 8),
    (0.52, 150, 13),
];

/// The printed (q, delta) rows of the clustered table (n = 20).
pub const CLUSTERED_ROWS: [(usize, f64); 10] = [
    (6, 0.00001),
    (6, 0.001),
    (6, 0.01),
    (6, 0.1),
    (6, 0.5),
    (2, 0.001),
    (4, 0.001),
    (4, 0.01),
    (4, 0.1),
    (4, 0.5),
];

pub fn run(
    preset: Preset,
    methods: Option<&[String]>,
    seeds: &[u64],
    jobs: usize,
    out_dir: &Path,
) -> Result<(), String> {
    let allowed: &[&str] = match preset {
        Preset::Table1 | Preset::Table2 => &["gl", "spectral", "pencil"],
        Preset::Table3 => &["gl+"],
        Preset::Table4 => &["gl", "gl+"],
    };
    if let Some(filter) = methods {
        for m in filter {
            if !allowed.contains(&m.as_str()) {
                return Err(format!(
                    "method {m:?} is not part of preset {preset:?}; available: {allowed:?}"
                ));
            }
        }
    }
    let wanted = |name: &str| -> bool { methods.is_none_or(|f| f.iter().any(|m| m == name)) };

    let pool = make_pool(jobs)?;
    let (csv, instances) = match preset {
        Preset::Table1 => table_methods(&example1(), 2, 2, Family::Example1, &wanted),
        Preset::Table2 => table_methods(&example1b(), 2, 3, Family::Example1b, &wanted),
        Preset::Table3 => table3(seeds, &pool),
        Preset::Table4 => table4(seeds, &pool, &wanted),
    };
    write_outputs(
        out_dir,
        preset.file_name(),
        &csv,
        json!({
            "preset": format!("{preset:?}").to_lowercase(),
            "seeds": seeds,
            "jobs": jobs,
            "toolkit_version": env!("CARGO_PKG_VERSION"),
            "instances": instances,
        }),
    )
}

/// Seed sweep over one generator family described by a JSON parameter
/// object ({"n": ..., "q": ..., "m": ..., "shift": ..., "delta": ...}).
pub fn run_family(
    family: Family,
    params: &str,
    methods: Option<&[String]>,
    seeds: &[u64],
    jobs: usize,
    out_dir: &Path,
) -> Result<(), String> {
    #[derive(serde::Deserialize, Default)]
    #[serde(deny_unknown_fields)]
    struct Params {
        n: Option<usize>,
        q: Option<usize>,
        m: Option<usize>,
        shift: Option<f64>,
        delta: Option<f64>,
    }
    let params: Params = if params.trim().is_empty() {
        Params::default()
    } else {
        serde_json::from_str(params).map_err(|e| format!("invalid --params: {e}"))?
    };
    let variants: Vec<Variant> = match methods {
        None => vec![Variant::Plus],
        Some(filter) => {
            let mut v = Vec::new();
            for m in filter {
                match m.as_str() {
                    "gl" => v.push(Variant::Plain),
                    "gl+" => v.push(Variant::Plus),
                    other => {
                        return Err(format!(
                            "family sweeps support methods gl and gl+, got {other:?}"
                        ))
                    }
                }
            }
            v
        }
    };

    let specs: Vec<ProblemSpec> = seeds
        .iter()
        .map(|&seed| ProblemSpec {
            family,
            n: params.n,
            q: params.q,
            m: params.m,
            shift: params.shift,
            delta: params.delta,
            seed,
        })
        .collect();

    let pool = make_pool(jobs)?;
    let rows: Vec<String> = pool.install(|| {
        specs
            .par_iter()
            .map(|spec| family_row(spec, &variants))
            .collect()
    });
    let mut csv =
        String::from("seed,method,m,classification,norm_frobenius,f_final,converged,rank,status\n");
    for row in rows {
        csv.push_str(&row);
    }
    write_outputs(
        out_dir,
        "family.csv",
        &csv,
        json!({
            "family": specs.first().map(|s| serde_json::to_value(&s.family).unwrap()),
            "seeds": seeds,
            "jobs": jobs,
            "toolkit_version": env!("CARGO_PKG_VERSION"),
            "instances": specs,
        }),
    )
}

fn family_row(spec: &ProblemSpec, variants: &[Variant]) -> String {
    let mut out = String::new();
    for &variant in variants {
        let run = || -> Result<String, String> {
            let pair = spec.build().map_err(|e| e.to_string())?;
            let m = match spec.m {
                Some(m) => m,
                None => dissipator::gradient_flow::default_m(&pair, variant)
                    .map_err(|e| e.to_string())?,
            };
            let (res, trace) =
                outer_solve(&pair, m, variant, &GlOptions::default()).map_err(|e| e.to_string())?;
            Ok(format!(
                "{},{variant},{m},{},{},{},{},{},ok\n",
                spec.seed,
                res.classification,
                fmt_f(res.norm_frobenius),
                trace
                    .iterates
                    .last()
                    .map(|it| fmt_f(it.f))
                    .unwrap_or_default(),
                trace.converged,
                res.rank,
            ))
        };
        out.push_str(
            &run().unwrap_or_else(|e| format!("{},{variant},,,,,,,error: {e}\n", spec.seed)),
        );
    }
    out
}

fn make_pool(jobs: usize) -> Result<rayon::ThreadPool, String> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| format!("worker pool: {e}"))
}

fn write_outputs(
    out_dir: &Path,
    csv_name: &str,
    csv: &str,
    manifest: serde_json::Value,
) -> Result<(), String> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| format!("cannot create {}: {e}", out_dir.display()))?;
    let csv_path = out_dir.join(csv_name);
    std::fs::write(&csv_path, csv)
        .map_err(|e| format!("cannot write {}: {e}", csv_path.display()))?;
    let manifest_path = out_dir.join("manifest.json");
    std::fs::write(
        &manifest_path,
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )
    .map_err(|e| format!("cannot write {}: {e}", manifest_path.display()))?;
    Ok(())
}

fn fmt_f(x: f64) -> String {
    format!("{x:.6e}")
}

/// Method comparison on a fixed instance: GL at two m values, the direct
/// constructors, and the pencil search.
fn table_methods(
    pair: &ControlPair,
    m_low: usize,
    m_high: usize,
    family: Family,
    wanted: &dyn Fn(&str) -> bool,
) -> (String, Vec<ProblemSpec>) {
    let mut csv = String::from(
        "method,m,classification,norm_frobenius,norm_spectral,converged,f_final,status\n",
    );
    let gl_opts = GlOptions {
        tol_f: Some(1e-14),
        ..Default::default()
    };
    let push_gl = |csv: &mut String, m: usize| match outer_solve(pair, m, Variant::Plain, &gl_opts)
    {
        Ok((result, trace)) => {
            let _ = writeln!(
                csv,
                "gl,{m},{},{},{},{},{},ok",
                result.classification,
                fmt_f(result.norm_frobenius),
                fmt_f(result.norm_spectral),
                trace.converged,
                trace
                    .iterates
                    .last()
                    .map(|it| fmt_f(it.f))
                    .unwrap_or_default(),
            );
        }
        Err(e) => {
            let _ = writeln!(csv, "gl,{m},,,,,,error: {e}");
        }
    };
    if wanted("gl") {
        push_gl(&mut csv, m_low);
        if m_high != m_low {
            push_gl(&mut csv, m_high);
        }
    }
    if wanted("spectral") {
        match spectral_feedback(pair) {
            Ok(result) => {
                let _ = writeln!(
                    csv,
                    "spectral,,{},{},{},true,,ok",
                    result.classification,
                    fmt_f(result.norm_frobenius),
                    fmt_f(result.norm_spectral),
                );
            }
            Err(e) => {
                let _ = writeln!(csv, "spectral,,,,,,,error: {e}");
            }
        }
    }
    if wanted("pencil") {
        match pencil_minimize(pair, 10_000, 7) {
            Ok(search) => {
                let _ = writeln!(
                    csv,
                    "pencil,,{},{},{},true,,ok",
                    search.result.classification,
                    fmt_f(search.result.norm_frobenius),
                    fmt_f(search.result.norm_spectral),
                );
            }
            Err(e) => {
                let _ = writeln!(csv, "pencil,,,,,,,error: {e}");
            }
        }
    }
    let spec = ProblemSpec {
        family,
        n: None,
        q: None,
        m: Some(m_low),
        shift: None,
        delta: None,
        seed: 0,
    };
    (csv, vec![spec])
}

fn table3(seeds: &[u64], pool: &rayon::ThreadPool) -> (String, Vec<ProblemSpec>) {
    let mut instances = Vec::new();
    for &(shift, n, m) in GRCAR_ROWS.iter() {
        for &seed in seeds {
            instances.push((shift, n, m, seed));
        }
    }
    let rows: Vec<String> = pool.install(|| {
        instances
            .par_iter()
            .map(|&(shift, n, m_expected, seed)| table3_row(shift, n, m_expected, seed))
            .collect()
    });
    let mut csv = String::from(
        "shift,n,m_expected,m_generated,seed,norm_frobenius,f_final,converged,rank,m_effective,rank_matches,status\n",
    );
    for row in rows {
        csv.push_str(&row);
    }
    let specs = instances
        .iter()
        .map(|&(shift, n, m, seed)| ProblemSpec {
            family: Family::Grcar,
            n: Some(n),
            q: None,
            m: Some(m),
            shift: Some(shift),
            delta: None,
            seed,
        })
        .collect();
    (csv, specs)
}

fn table3_row(shift: f64, n: usize, m_expected: usize, seed: u64) -> String {
    let run = || -> Result<String, String> {
        let pair = dissipator::bench::grcar_pair(n, shift, seed).map_err(|e| e.to_string())?;
        let m_generated = pair.q();
        let (result, trace) = outer_solve(&pair, m_generated, Variant::Plus, &GlOptions::default())
            .map_err(|e| e.to_string())?;
        let f_final = trace.iterates.last().map(|it| it.f).unwrap_or(f64::NAN);
        let structure = if trace.converged {
            let tol_f = 1e-12 * (1.0 + pair.a().norm().powi(2));
            limit_structure_check(&pair, &result, coalescence_tolerance(&pair, tol_f)).ok()
        } else {
            None
        };
        let (m_eff, rank_matches) = structure
            .as_ref()
            .map(|s| (s.m_effective as i64, s.rank_matches))
            .unwrap_or((-1, false));
        Ok(format!(
            "{shift},{n},{m_expected},{m_generated},{seed},{},{},{},{},{},{},ok\n",
            fmt_f(result.norm_frobenius),
            fmt_f(f_final),
            trace.converged,
            result.rank,
            m_eff,
            rank_matches,
        ))
    };
    run().unwrap_or_else(|e| format!("{shift},{n},{m_expected},,{seed},,,,,,,error: {e}\n"))
}

fn table4(
    seeds: &[u64],
    pool: &rayon::ThreadPool,
    wanted: &(dyn Fn(&str) -> bool + Sync),
) -> (String, Vec<ProblemSpec>) {
    let n = 20usize;
    let mut instances = Vec::new();
    for &(q, delta) in CLUSTERED_ROWS.iter() {
        for &seed in seeds {
            instances.push((q, delta, seed));
        }
    }
    let rows: Vec<String> = pool.install(|| {
        instances
            .par_iter()
            .map(|&(q, delta, seed)| table4_row(n, q, delta, seed, wanted))
            .collect()
    });
    let mut csv = String::from(
        "q,delta,seed,gl_converged,gl_f_final,gl_norm_frobenius,gl_diagnostic,glplus_converged,glplus_f_final,glplus_norm_frobenius,status\n",
    );
    for row in rows {
        csv.push_str(&row);
    }
    let specs = instances
        .iter()
        .map(|&(q, delta, seed)| ProblemSpec {
            family: Family::Clustered,
            n: Some(n),
            q: Some(q),
            m: Some(q),
            shift: None,
            delta: Some(delta),
            seed,
        })
        .collect();
    (csv, specs)
}

fn table4_row(
    n: usize,
    q: usize,
    delta: f64,
    seed: u64,
    wanted: &(dyn Fn(&str) -> bool + Sync),
) -> String {
    let run = || -> Result<String, String> {
        let pair =
            dissipator::bench::clustered_pair(n, q, delta, seed).map_err(|e| e.to_string())?;
        let opts = GlOptions::default();
        let solve = |variant| -> Result<(String, String, String, String), String> {
            let (res, trace) = outer_solve(&pair, q, variant, &opts).map_err(|e| e.to_string())?;
            let diagnostic = if trace.converged {
                String::new()
            } else {
                res.warnings.join("; ").replace(',', ";")
            };
            Ok((
                trace.converged.to_string(),
                trace
                    .iterates
                    .last()
                    .map(|it| fmt_f(it.f))
                    .unwrap_or_default(),
                fmt_f(res.norm_frobenius),
                diagnostic,
            ))
        };
        let blank = || ("".into(), "".into(), "".into(), "".into());
        let (gl_conv, gl_f, gl_norm, gl_diag) = if wanted("gl") {
            solve(Variant::Plain)?
        } else {
            blank()
        };
        let (glp_conv, glp_f, glp_norm, _) = if wanted("gl+") {
            solve(Variant::Plus)?
        } else {
            blank()
        };
        Ok(format!(
            "{q},{delta},{seed},{gl_conv},{gl_f},{gl_norm},{gl_diag},{glp_conv},{glp_f},{glp_norm},ok\n"
        ))
    };
    run().unwrap_or_else(|e| format!("{q},{delta},{seed},,,,,,,,error: {e}\n"))
}
