use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use musielak::denoise::{denoise as run_denoise, energy_trace_csv, synthetic_step};
use musielak::energy::{check_convexity, coercivity_probe};
use musielak::modular::{check_modular_norm_relations, holder_pairing};
use musielak::nfunctions::{
    check_axioms, check_scaling_inequality, check_young, conjugate_auto, estimate_indices, scaling_samples,
    young_pairs, AxiomPlan, INDEX_RANGE, INDEX_SAMPLES,
};
use musielak::numeric::slack;
use musielak::pgm::{read_pgm, write_pgm};
use musielak::report::{format_f64, to_json_string};
use musielak::solver::{minimize, trace_csv};
use musielak::{CheckReport, Family, Field, IndexReport, NFunctionSpec, ProblemSpec};

use crate::config::{ImageSource, Init, RunConfig};
use crate::output::OutDir;
use crate::{runtime, CliError};

/// Violations kept per check in JSON reports; the count is always exact.
const REPORTED_VIOLATIONS: usize = 10;

fn problem(cfg: &RunConfig) -> &ProblemSpec {
    cfg.problem.as_ref().expect("command requires [problem]")
}

fn indices(spec: &NFunctionSpec) -> Result<IndexReport, CliError> {
    estimate_indices(spec, INDEX_RANGE.0, INDEX_RANGE.1, INDEX_SAMPLES).map_err(runtime)
}

pub fn solve(cfg: &RunConfig, out: &OutDir, trace: bool) -> Result<(), CliError> {
    let p = problem(cfg);
    let init = match &cfg.init {
        Init::Default => None,
        Init::File(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("cannot read init field {}: {e}", path.display())))?;
            Some(Field::from_csv(*p.grid(), &text, true).map_err(|e| CliError::Input(e.to_string()))?)
        }
    };
    let r = minimize(p, &cfg.solver, init.as_ref()).map_err(runtime)?;
    let norms = check_modular_norm_relations(p.nfunction(), &r.u_star, &indices(p.nfunction())?).map_err(runtime)?;
    let report = json!({
        "command": "solve",
        "config": cfg.echo,
        "energy": r.energy,
        "residual_norm": r.residual_norm,
        "scale_stationarity": r.scale_stationarity,
        "norms": norms,
        "solve": r,
    });
    out.write("u_star.csv", &r.u_star.to_csv())?;
    out.write("report.json", &to_json_string(&report))?;
    if trace {
        out.write("trace.csv", &trace_csv(&r.trace))?;
    }
    println!(
        "J(u*) = {}  residual = {:e}  scale stationarity = {:e}  min u* = {:e}",
        format_f64(r.energy.total),
        r.residual_norm,
        r.scale_stationarity,
        r.min_interior_value
    );
    Ok(())
}

fn run_check(name: &str, cfg: &RunConfig, extra: &mut Vec<(String, Value)>) -> Result<CheckReport, CliError> {
    let p = problem(cfg);
    let v = cfg.verify.as_ref().expect("verify settings");
    let spec = p.nfunction();
    let grid = *p.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(v.seed);
    let mut report = match name {
        "axioms" => check_axioms(spec, &AxiomPlan::standard(spec, v.triples, v.seed)).map_err(runtime)?,
        "young" => check_young(spec, &spec.sample_nodes(), &young_pairs(v.young_samples, 10.0, v.seed))
            .map_err(runtime)?,
        "scaling" => {
            let idx = indices(spec)?;
            check_scaling_inequality(spec, &idx, &scaling_samples(spec, v.scaling_samples, v.seed)).map_err(runtime)?
        }
        "norms" => {
            let idx = indices(spec)?;
            let mut rep = CheckReport::new(name);
            for _ in 0..v.norm_fields {
                let amp = rng.gen_range(-3.0f64..3.0).exp();
                let u = Field::random(grid, &mut rng, -1.0, 1.0).scaled(amp);
                rep.merge(check_modular_norm_relations(spec, &u, &idx).map_err(runtime)?.norm_checks);
            }
            rep
        }
        "holder" => {
            let mut rep = CheckReport::new(name);
            for _ in 0..v.holder_fields {
                let amp = rng.gen_range(-2.0f64..2.0).exp();
                let a = Field::random(grid, &mut rng, -1.0, 1.0).scaled(amp).gradient().magnitude();
                let b = Field::random(grid, &mut rng, -1.0, 1.0).gradient().magnitude();
                let h = holder_pairing(spec, &a, &b).map_err(runtime)?;
                rep.record("pairing_bound", slack(h.pairing, h.bound), || {
                    format!("∫uv = {} exceeds 2‖u‖‖v‖ = {}", h.pairing, h.bound)
                });
            }
            rep
        }
        "convexity" => {
            let c = check_convexity(p, v.convexity_trials, v.seed).map_err(runtime)?;
            extra.push((
                "convexity_signed_pairs".into(),
                json!({ "samples": c.signed.samples, "violations": c.signed.violations.len() }),
            ));
            c.nonnegative
        }
        "coercivity" => {
            let c = coercivity_probe(p, &Field::hat(grid), &v.coercivity_scales).map_err(runtime)?;
            extra.push(("coercivity_rows".into(), serde_json::to_value(&c.rows).expect("serializable")));
            c.check
        }
        _ => unreachable!("checks are validated while parsing"),
    };
    report.name = name.to_string();
    Ok(report)
}

fn check_json(r: &CheckReport) -> Value {
    json!({
        "name": r.name,
        "passed": r.passed(),
        "samples": r.samples,
        "worst_slack": r.worst_slack,
        "violation_count": r.violations.len(),
        "violations": r.violations.iter().take(REPORTED_VIOLATIONS).collect::<Vec<_>>(),
    })
}

fn table(rows: &[CheckReport]) -> String {
    let mut s = format!(
        "{:<18} {:>9} {:>24} {:>11}  {}\n",
        "check", "samples", "worst_slack", "violations", "status"
    );
    for r in rows {
        s.push_str(&format!(
            "{:<18} {:>9} {:>24} {:>11}  {}\n",
            r.name,
            r.samples,
            format_f64(r.worst_slack),
            r.violations.len(),
            if r.passed() { "PASS" } else { "FAIL" }
        ));
        if let Some(v) = r.violations.first() {
            s.push_str(&format!("    first violation ({}): {}\n", v.check, v.detail));
        }
    }
    s
}

pub fn verify(cfg: &RunConfig, out: &OutDir) -> Result<(), CliError> {
    let v = cfg.verify.as_ref().expect("verify settings");
    let mut extra = Vec::new();
    let mut rows = Vec::new();
    for name in &v.checks {
        rows.push(run_check(name, cfg, &mut extra)?);
    }
    if v.negative_control {
        // elasticity with α < 1/2 loses convexity; the battery must notice
        let control = NFunctionSpec::new_unchecked(Family::Elasticity { alpha: 0.4 });
        let mut r = check_axioms(&control, &AxiomPlan::standard(&control, v.triples, v.seed)).map_err(runtime)?;
        r.name = "negative_control".into();
        rows.push(r);
    }
    let failed: Vec<&str> = rows.iter().filter(|r| !r.passed()).map(|r| r.name.as_str()).collect();
    let mut report = serde_json::Map::new();
    report.insert("command".into(), json!("verify"));
    report.insert("config".into(), json!(cfg.echo));
    report.insert("checks".into(), Value::Array(rows.iter().map(check_json).collect()));
    report.insert("passed".into(), json!(failed.is_empty()));
    for (k, val) in extra {
        report.insert(k, val);
    }
    let text = table(&rows);
    out.write("verify.txt", &text)?;
    out.write("verify.json", &to_json_string(&Value::Object(report)))?;
    print!("{text}");
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(format!("failing checks: {}", failed.join(", "))))
    }
}

pub fn analyze(cfg: &RunConfig, out: &OutDir) -> Result<(), CliError> {
    let spec = cfg.nfunction.as_ref().expect("analyze requires [nfunction]");
    let a = cfg.analyze.as_ref().expect("analyze settings");
    let nodes = spec.node_len().unwrap_or(1);
    if a.node >= nodes {
        return Err(CliError::Config(format!(
            "[analyze] node = {} but the exponent map has {nodes} nodes",
            a.node
        )));
    }
    let idx = estimate_indices(spec, a.t_lo, a.t_hi, a.samples).map_err(|e| match e {
        musielak::Error::InvalidParameter(m) => CliError::Config(m),
        other => runtime(other),
    })?;
    let ratio = if a.s_points > 1 {
        (a.s_hi / a.s_lo).powf(1.0 / (a.s_points - 1) as f64)
    } else {
        1.0
    };
    let mut rows = Vec::with_capacity(a.s_points);
    for k in 0..a.s_points {
        let s = if k + 1 == a.s_points { a.s_hi } else { a.s_lo * ratio.powi(k as i32) };
        let value = conjugate_auto(spec, a.node, s).map_err(runtime)?;
        rows.push(json!({ "s": s, "conjugate": value }));
    }
    let report = json!({
        "command": "analyze",
        "config": cfg.echo,
        "family": spec.family_name(),
        "indices": idx,
        "conjugate_table": { "node": a.node, "rows": rows },
    });
    out.write("analysis.json", &to_json_string(&report))?;
    println!(
        "indices [{}, {}]  Δ2 constant {}",
        format_f64(idx.phi_lower),
        format_f64(idx.phi_upper),
        format_f64(idx.delta2_constant)
    );
    Ok(())
}

pub fn denoise(cfg: &RunConfig, out: &OutDir) -> Result<(), CliError> {
    let d = cfg.denoise.as_ref().expect("denoise settings");
    let img = match &d.source {
        ImageSource::File(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
            read_pgm(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        }
        ImageSource::Synthetic { size, noise, seed } => synthetic_step(*size, *noise, *seed),
    };
    let r = run_denoise(&img, &d.config).map_err(runtime)?;
    if !(r.energy_final <= r.energy_initial) {
        return Err(runtime(format!(
            "energy did not decrease: E(u₀) = {}, E(u) = {}",
            r.energy_initial, r.energy_final
        )));
    }
    let report = json!({
        "command": "denoise",
        "config": cfg.echo,
        "width": img.width,
        "height": img.height,
        "denoise": r,
    });
    out.write(&d.output, &write_pgm(&r.output))?;
    out.write("energy_trace.csv", &energy_trace_csv(&r.energy_trace))?;
    out.write("denoise.json", &to_json_string(&report))?;
    println!(
        "E(u₀) = {}  E(u) = {}  iterations {}  clamped pixels {}",
        format_f64(r.energy_initial),
        format_f64(r.energy_final),
        r.iterations,
        r.clamped_pixels
    );
    Ok(())
}
