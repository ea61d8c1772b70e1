use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const REFERENCE_1D: &str = "[grid]\ncells = 6\nextent = 1\n\
    [nfunction]\nfamily = power\np = 2\n\
    [kirchhoff]\nkind = power\nc = 2\nalpha = 2\n\
    [problem]\ng = 1\ngamma = 0.5\n";

struct Run {
    dir: TempDir,
    out: Output,
}

impl Run {
    fn code(&self) -> i32 {
        self.out.status.code().expect("exited normally")
    }

    fn stderr(&self) -> String {
        String::from_utf8_lossy(&self.out.stderr).into_owned()
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join("out").join(name)
    }

    fn json(&self, name: &str) -> Value {
        serde_json::from_str(&std::fs::read_to_string(self.path(name)).unwrap()).unwrap()
    }
}

fn musielak(cmd: &str, config: &str, extra: &[&str], env: &[(&str, &str)]) -> Run {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.ini");
    std::fs::write(&cfg, config).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_musielak"))
        .arg(cmd)
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .args(extra)
        .envs(env.iter().copied())
        .output()
        .unwrap();
    Run { dir, out }
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

#[test]
fn reference_solve_has_negative_energy() {
    let r = musielak("solve", REFERENCE_1D, &["--trace"], &[]);
    assert_eq!(r.code(), 0, "{}", r.stderr());
    let report = r.json("report.json");
    assert!(num(&report["energy"]["total"]) < 0.0);
    assert!(num(&report["residual_norm"]) < 1e-4);
    assert!(num(&report["solve"]["min_interior_value"]) > 0.0);
    assert_eq!(report["config"]["solver"]["max_iters"], "5000");
    assert!(r.path("u_star.csv").exists());
    let trace = std::fs::read_to_string(r.path("trace.csv")).unwrap();
    assert!(trace.starts_with("rung,iter,J_eps,step,pg_norm"));
}

#[test]
fn out_of_range_gamma_is_a_config_error() {
    let cfg = REFERENCE_1D.replace("gamma = 0.5", "gamma = 1.5");
    let r = musielak("solve", &cfg, &[], &[]);
    assert_eq!(r.code(), 2);
    assert!(r.stderr().contains("γ∈(0,1)"), "{}", r.stderr());
}

#[test]
fn vanishing_forcing_is_a_config_error() {
    let cfg = REFERENCE_1D.replace("g = 1", "g = 0");
    let r = musielak("solve", &cfg, &[], &[]);
    assert_eq!(r.code(), 2);
    assert!(r.stderr().contains("nontrivial nonnegative function"), "{}", r.stderr());
}

#[test]
fn unknown_key_is_a_config_error() {
    let r = musielak("solve", &format!("{REFERENCE_1D}tolerance = 3\n"), &[], &[]);
    assert_eq!(r.code(), 2);
    assert!(r.stderr().contains("unknown key [problem] tolerance"), "{}", r.stderr());
}

#[test]
fn default_battery_passes() {
    let r = musielak("verify", &format!("{REFERENCE_1D}[verify]\n"), &["--seed", "42"], &[]);
    assert_eq!(r.code(), 0, "{}", r.stderr());
    let table = std::fs::read_to_string(r.path("verify.txt")).unwrap();
    for check in ["axioms", "young", "scaling", "norms", "holder", "convexity", "coercivity"] {
        assert!(table.contains(check), "{check} missing from\n{table}");
    }
    assert_eq!(r.json("verify.json")["config"]["verify"]["seed"], "42");
}

#[test]
fn negative_control_fails_by_name() {
    let cfg = format!("{REFERENCE_1D}[verify]\nchecks = young\nnegative_control = true\n");
    let r = musielak("verify", &cfg, &[], &[]);
    assert_eq!(r.code(), 1);
    assert!(r.stderr().contains("negative_control"), "{}", r.stderr());
    let table = std::fs::read_to_string(r.path("verify.txt")).unwrap();
    assert!(table.contains("negative_control") && table.contains("FAIL"));
}

#[test]
fn empty_battery_is_a_config_error() {
    let r = musielak("verify", &format!("{REFERENCE_1D}[verify]\nchecks =\n"), &[], &[]);
    assert_eq!(r.code(), 2);
    assert!(r.stderr().contains("nothing to verify"));
}

#[test]
fn cubic_power_indices() {
    let r = musielak("analyze", "[nfunction]\nfamily = power\np = 3\n", &[], &[]);
    assert_eq!(r.code(), 0, "{}", r.stderr());
    let idx = &r.json("analysis.json")["indices"];
    assert!((num(&idx["phi_lower"]) - 3.0).abs() < 1e-12);
    assert!((num(&idx["phi_upper"]) - 3.0).abs() < 1e-12);
    assert!((num(&idx["delta2_constant"]) - 8.0).abs() < 1e-12);
}

#[test]
fn elasticity_indices_match_sampling() {
    let r = musielak("analyze", "[nfunction]\nfamily = elasticity\nalpha = 2\n", &[], &[]);
    assert_eq!(r.code(), 0, "{}", r.stderr());
    let idx = &r.json("analysis.json")["indices"];
    // tφ/Φ for (1+t²)²−1 is 4(1+t²)/(2+t²), sampled on the same grid
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for k in 0..2000 {
        let t = 1e-6 * 1e12f64.powf(k as f64 / 1999.0);
        let s = t * t;
        let r = 4.0 * (1.0 + s) / (2.0 + s);
        lo = lo.min(r);
        hi = hi.max(r);
    }
    assert!((num(&idx["phi_lower"]) - lo).abs() < 1e-6, "{idx}");
    assert!((num(&idx["phi_upper"]) - hi).abs() < 1e-6, "{idx}");
    assert!((lo - 2.0).abs() < 1e-6 && (hi - 4.0).abs() < 1e-6);
}

#[test]
fn quadratic_conjugate_at_two() {
    let cfg = "[nfunction]\nfamily = power\np = 2\n[analyze]\ns_lo = 2\ns_hi = 2\ns_points = 1\n";
    let r = musielak("analyze", cfg, &[], &[]);
    assert_eq!(r.code(), 0, "{}", r.stderr());
    let row = &r.json("analysis.json")["conjugate_table"]["rows"][0];
    assert_eq!(num(&row["s"]), 2.0);
    assert!((num(&row["conjugate"]) - 1.0).abs() < 1e-9, "{row}");
}

#[test]
fn exhausted_conjugate_window_is_a_runtime_diagnostic() {
    // maximizer (s/p)^{1/(p−1)} is astronomically large for p near 1
    let cfg = "[nfunction]\nfamily = power\np = 1.01\n[analyze]\ns_lo = 100\ns_hi = 100\ns_points = 1\n";
    let r = musielak("analyze", cfg, &[], &[]);
    assert_eq!(r.code(), 3, "{}", r.stderr());
    assert!(r.stderr().contains("window"), "{}", r.stderr());
}

#[test]
fn malformed_pgm_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.pgm", "P2\n2 2\n255\n0 1 2\n");
    let cfg = format!("[denoise]\ninput = {}\n", dir.path().join("bad.pgm").display());
    let r = musielak("denoise", &cfg, &[], &[]);
    assert_eq!(r.code(), 2);
    assert!(r.stderr().contains("holds 3"), "{}", r.stderr());
}

fn step_pgm(n: usize) -> String {
    let mut s = format!("P2\n{n} {n}\n255\n");
    for i in 0..n {
        let row: Vec<String> = (0..n)
            .map(|j| {
                let base = if j < n / 2 { 50 } else { 170 };
                ((base + 7 * ((i * 31 + j * 17) % 11)) as u32).to_string()
            })
            .collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

fn pixels(text: &str) -> Vec<u32> {
    text.split_whitespace().skip(4).map(|t| t.parse().unwrap()).collect()
}

#[test]
fn huge_fidelity_returns_the_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = step_pgm(16);
    write(dir.path(), "in.pgm", &input);
    let cfg = format!("[denoise]\ninput = {}\nlambda = 1e6\n", dir.path().join("in.pgm").display());
    let r = musielak("denoise", &cfg, &[], &[]);
    assert_eq!(r.code(), 0, "{}", r.stderr());
    // 1e-3 per pixel is below half a grey level, so the 8-bit output is unchanged
    let out = std::fs::read_to_string(r.path("denoised.pgm")).unwrap();
    assert_eq!(pixels(&out), pixels(&input));
}

#[test]
fn pure_dirichlet_flow_flattens_monotonically() {
    let dir = tempfile::tempdir().unwrap();
    let input = step_pgm(12);
    write(dir.path(), "in.pgm", &input);
    let cfg = format!(
        "[denoise]\ninput = {}\nlambda = 0\nrule = constant\np = 2\nmax_iters = 5000\n",
        dir.path().join("in.pgm").display()
    );
    let r = musielak("denoise", &cfg, &[], &[]);
    assert_eq!(r.code(), 0, "{}", r.stderr());
    let trace: Vec<f64> = std::fs::read_to_string(r.path("energy_trace.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(trace.windows(2).all(|w| w[1] <= w[0]));
    let px = pixels(&input);
    let mean = px.iter().sum::<u32>() as f64 / px.len() as f64;
    let out = pixels(&std::fs::read_to_string(r.path("denoised.pgm")).unwrap());
    let spread = out.iter().map(|&p| (p as f64 - mean).abs()).fold(0.0, f64::max);
    assert!(spread <= 2.0, "output deviates {spread} grey levels from the mean");
}

#[test]
fn reports_are_identical_across_thread_counts() {
    let cfg = "[grid]\ncells = 32, 32\n[nfunction]\nfamily = elasticity\nalpha = 1.5\n\
               [kirchhoff]\nkind = power\nc = 2\nalpha = 2\n[problem]\ng = 1 + x * y\ngamma = 0.3 + 0.3 * x\n";
    let files = ["report.json", "u_star.csv", "trace.csv"];
    let read = |r: &Run| files.map(|f| std::fs::read(r.path(f)).unwrap());
    let one = musielak("solve", cfg, &["--trace"], &[("RAYON_NUM_THREADS", "1")]);
    let many = musielak("solve", cfg, &["--trace"], &[("RAYON_NUM_THREADS", "8")]);
    assert_eq!(one.code(), 0, "{}", one.stderr());
    assert_eq!(many.code(), 0, "{}", many.stderr());
    assert!(read(&one) == read(&many));
}
