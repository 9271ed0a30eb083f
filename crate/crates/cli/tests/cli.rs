use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

use rydlink::classical_potential;
use rydlink::{DualLattice, Lattice};
use rydlink_cli::records::{read_table, PotentialTableRow, WidthTableRow};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rydlink"))
}

fn run(dir: &Path, sub: &str, config: &str, extra: &[&str]) -> (Output, PathBuf) {
    let name = format!("out_{sub}_{}", extra.join("_").replace('-', ""));
    run_into(dir, sub, config, extra, &name)
}

fn run_into(dir: &Path, sub: &str, config: &str, extra: &[&str], name: &str) -> (Output, PathBuf) {
    let cfg = dir.join(format!("{sub}.toml"));
    fs::write(&cfg, config).unwrap();
    let out = dir.join(name);
    let o = bin()
        .arg(sub)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(extra)
        .output()
        .unwrap();
    (o, out)
}

fn records(out: &Path) -> Vec<Value> {
    fs::read_to_string(out.join("records.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn of_kind<'a>(recs: &'a [Value], kind: &str) -> Vec<&'a Value> {
    recs.iter().filter(|r| r["kind"] == kind).collect()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn quench_rows(out: &Path) -> Vec<Value> {
    of_kind(&records(out), "quench_step").into_iter().cloned().collect()
}

#[test]
fn help_and_usage_exit_codes() {
    let status = |args: &[&str]| bin().args(args).output().unwrap().status.code();
    assert_eq!(status(&["--help"]), Some(0));
    assert_eq!(status(&["ground", "--help"]), Some(0));
    assert_eq!(status(&["ground"]), Some(1));
    assert_eq!(status(&["nonsense"]), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let (o, _) = run(dir.path(), "ground", "experiment = \"ground\"\nunknown_key = 3\n", &[]);
    assert_eq!(code(&o), 1);
    let (o, _) = run(dir.path(), "quench", "experiment = \"ground\"\n", &[]);
    assert_eq!(code(&o), 1, "config for another experiment is a usage error");
}

#[test]
fn every_record_carries_the_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = run(
        dir.path(),
        "ground",
        "experiment = \"ground\"\nn_cols = 7\nn_rows = 3\nomega = 0.18\ndelta = 3.3\nd = 2\n",
        &["--backend", "ed"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let cfg: Value = serde_json::from_str(&fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
    let hash = cfg["config_hash"].as_str().unwrap();
    let recs = records(&out);
    assert!(recs.len() > 3);
    for r in &recs {
        assert_eq!(r["config_hash"], hash);
    }
    for row in read_table::<WidthTableRow>(&out.join("widths.csv")).unwrap() {
        assert_eq!(row.config_hash, hash);
    }
}

#[test]
fn map_check_exhaustive_three_by_three_is_clean() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = run(dir.path(), "map-check", "experiment = \"map-check\"\nn_cols = 3\nn_rows = 3\n", &[]);
    assert_eq!(code(&o), 0);
    let recs = records(&out);
    let audit = of_kind(&recs, "audit");
    assert_eq!(audit[0]["mode"], "exhaustive");
    assert_eq!(audit[0]["configurations"], 512);
    assert_eq!(audit[0]["gauss_violations"], 0);
    assert_eq!(audit[0]["two_to_one_violations"], 0);
}

#[test]
fn map_check_default_lattice_is_clean() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = run(dir.path(), "map-check", "experiment = \"map-check\"\nd = [2]\nn_cols = 7\nn_rows = 4\nsamples = 3000\n", &[]);
    assert_eq!(code(&o), 0);
    for a in of_kind(&records(&out), "audit") {
        assert_eq!(a["mode"], "random");
        assert_eq!(a["configurations"], 3000);
    }
    let (o, _) = run(dir.path(), "map-check", "experiment = \"map-check\"\nsamples = 2000\n", &["--seed", "3"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn corrupted_stagger_is_reported_at_its_sites() {
    let dir = tempfile::tempdir().unwrap();
    let link = 5;
    let (o, out) = run(
        dir.path(),
        "map-check",
        &format!("experiment = \"map-check\"\nn_cols = 3\nn_rows = 3\ncorrupt_links = [{link}]\n"),
        &[],
    );
    assert_eq!(code(&o), 3);
    let dual = DualLattice::new(&Lattice::new(3, 3).unwrap());
    let (a, b) = dual.links[link].sites;
    let recs = records(&out);
    let affected: Vec<u64> = of_kind(&recs, "audit")[0]["affected_sites"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    assert!(!affected.is_empty());
    assert!(affected.contains(&(a as u64)));
    if let Some(b) = b {
        assert!(affected.contains(&(b as u64)));
    }
}

#[test]
fn vacuum_only_run_emits_no_potential() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = run(
        dir.path(),
        "ground",
        "experiment = \"ground\"\nn_cols = 3\nn_rows = 3\nomega = 0.2\ndelta = 3.3\nbackend = \"ed\"\n",
        &[],
    );
    assert_eq!(code(&o), 0);
    let recs = records(&out);
    assert_eq!(of_kind(&recs, "ground").len(), 1);
    assert!(of_kind(&recs, "potential").is_empty());
    assert!(read_table::<PotentialTableRow>(&out.join("potential.csv")).unwrap().is_empty());
}

#[test]
fn zero_field_potential_is_classical() {
    let dir = tempfile::tempdir().unwrap();
    let delta = 3.5;
    let (o, out) = run(
        dir.path(),
        "ground",
        &format!(
            "experiment = \"sweep\"\nn_cols = 15\nn_rows = 6\nomega = 0.0\ndelta = [{delta}, 3.2]\nd = [2, 3]\nposition = {{ line = 4 }}\nchi = 8\n"
        ),
        &[],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_table::<PotentialTableRow>(&out.join("potential.csv")).unwrap();
    assert_eq!(rows.len(), 4);
    for r in rows {
        let want = classical_potential(r.delta, r.r);
        assert!(((r.v - want) / want).abs() < 1e-10, "d={} {} vs {}", r.d, r.v, want);
    }
}

#[test]
fn ed_and_mps_agree_on_three_by_four() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "experiment = \"ground\"\nn_cols = 3\nn_rows = 4\nomega = 0.18\ndelta = 3.3\nenergy_tol = 1e-12\n";
    let (o1, ed) = run(dir.path(), "ground", cfg, &["--backend", "ed"]);
    let (o2, mps) = run(dir.path(), "ground", cfg, &["--backend", "mps"]);
    assert_eq!((code(&o1), code(&o2)), (0, 0));
    let e = |out: &Path| of_kind(&records(out), "ground")[0]["energy"].as_f64().unwrap();
    let (a, b) = (e(&ed), e(&mps));
    assert!(((a - b) / a).abs() < 1e-8, "{a} vs {b}");
    let table = |out: &Path| fs::read_to_string(out.join("snapshots/delta3.3_vacuum_links.csv")).unwrap();
    let (ta, tb) = (table(&ed), table(&mps));
    let parse = |t: &str| -> Vec<Vec<f64>> {
        t.lines()
            .skip(1)
            .map(|l| l.split(',').filter_map(|x| x.trim().parse::<f64>().ok()).collect())
            .collect()
    };
    let (pa, pb) = (parse(&ta), parse(&tb));
    assert_eq!(pa.len(), pb.len());
    for (x, y) in pa.iter().zip(&pb) {
        for (u, v) in x.iter().zip(y) {
            assert!((u - v).abs() < 1e-8, "{u} vs {v}");
        }
    }
}

#[test]
fn unconverged_dmrg_exits_with_solver_failure() {
    let dir = tempfile::tempdir().unwrap();
    let (o, _) = run(
        dir.path(),
        "ground",
        "experiment = \"ground\"\nn_cols = 3\nn_rows = 4\nomega = 0.18\ndelta = 3.3\nmax_sweeps = 1\n",
        &[],
    );
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("vacuum"));
}

#[test]
fn identical_config_and_seed_give_identical_records() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "experiment = \"ground\"\nn_cols = 3\nn_rows = 4\nomega = 0.18\ndelta = 3.25\ninit_noise = 0.1\nchi = 16\n";
    let (_, a) = run(dir.path(), "ground", cfg, &["--seed", "9"]);
    let first = fs::read(a.join("records.jsonl")).unwrap();
    let (_, b) = run(dir.path(), "ground", cfg, &["--seed", "9"]);
    assert_eq!(a, b);
    assert_eq!(first, fs::read(b.join("records.jsonl")).unwrap());
}

#[test]
fn ground_resumes_from_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "experiment = \"ground\"\nn_cols = 3\nn_rows = 4\nomega = 0.18\ndelta = 3.3\ncheckpoint_every = 1\n";
    let (o, out) = run_into(dir.path(), "ground", cfg, &[], "run");
    assert_eq!(code(&o), 0);
    assert!(out.join("checkpoints/delta3.3_vacuum.json").exists());
    let before = records(&out);
    let (o, out2) = run_into(dir.path(), "ground", cfg, &["--resume"], "run");
    assert_eq!(code(&o), 0);
    let after = records(&out2);
    assert!(after.len() > before.len(), "resumed run appends");
    let e: Vec<f64> = of_kind(&after, "ground").iter().map(|r| r["energy"].as_f64().unwrap()).collect();
    assert!((e[0] - e[1]).abs() < 1e-9);
    let sweeps: Vec<u64> = of_kind(&after, "sweep").iter().map(|r| r["record"]["sweep"].as_u64().unwrap()).collect();
    assert!(sweeps.windows(2).any(|w| w[1] > w[0] && w[0] >= 2), "sweep count continues");
}

fn write_tables(dir: &Path, widths: &[WidthTableRow], potential: &[PotentialTableRow]) {
    fs::create_dir_all(dir).unwrap();
    let mut w = csv::Writer::from_path(dir.join("widths.csv")).unwrap();
    for r in widths {
        w.serialize(r).unwrap();
    }
    w.flush().unwrap();
    let mut w = csv::Writer::from_path(dir.join("potential.csv")).unwrap();
    for r in potential {
        w.serialize(r).unwrap();
    }
    w.flush().unwrap();
}

fn planted(omega: f64, n: usize, sigma: f64, a: &[f64; 3]) -> (Vec<WidthTableRow>, Vec<PotentialTableRow>) {
    let gamma = PI / 24.0 * 2.0 * PI * sigma * a[1];
    let mut widths = Vec::new();
    let mut potential = Vec::new();
    for d in 2..2 + n {
        let r = d as f64 * 3f64.sqrt();
        for (k, &ak) in a.iter().enumerate() {
            widths.push(WidthTableRow {
                config_hash: "h".into(),
                delta: 3.2,
                omega,
                n_rows: 6,
                chi: 900,
                d,
                r,
                k,
                w2: ak * r.ln() + 0.1 * k as f64,
                o_broken: 0.01,
            });
        }
        potential.push(PotentialTableRow {
            config_hash: "h".into(),
            delta: 3.2,
            omega,
            n_rows: 6,
            chi: 900,
            d,
            r,
            v: sigma * r - gamma / r + 0.4,
            charge_weight: 0.0,
        });
    }
    (widths, potential)
}

fn analyze_cfg(inputs: &[&Path]) -> String {
    let list: Vec<String> = inputs.iter().map(|p| format!("{:?}", p.display().to_string())).collect();
    format!("experiment = \"analyze\"\ninputs = [{}]\n", list.join(", "))
}

#[test]
fn analyze_recovers_planted_tables() {
    let dir = tempfile::tempdir().unwrap();
    let a = [0.05, 0.1, 0.15];
    let (w, p) = planted(0.18, 7, 0.08, &a);
    let data = dir.path().join("data");
    write_tables(&data, &w, &p);
    let (o, out) = run(dir.path(), "analyze", &analyze_cfg(&[&data]), &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let recs = records(&out);
    let est = |dataset: &str, param: &str| -> f64 {
        of_kind(&recs, "estimate")
            .into_iter()
            .find(|e| e["dataset"] == dataset && e["param"] == param)
            .unwrap_or_else(|| panic!("{dataset}/{param}"))["value"]
            .as_f64()
            .unwrap()
    };
    for (k, ak) in a.iter().enumerate() {
        assert!((est(&format!("width_k{k}"), "A") - ak).abs() < 1e-9);
    }
    assert!((est("potential", "sigma") - 0.08).abs() < 1e-9);
    assert!((est("width_pooled", "A") - 0.1).abs() < 1e-9);
    assert!(out.join("chi2_ratios.csv").exists());
    let hist = fs::read_to_string(out.join("gamma0_histogram.csv")).unwrap();
    assert!(hist.lines().count() > 1);
    // With a single γ and three A values the median of γ₀ sits on the k = 1 value.
    assert!((est("gamma0", "gamma0") - PI / 24.0).abs() < 1e-9);
}

#[test]
fn analyze_rejects_short_tables() {
    let dir = tempfile::tempdir().unwrap();
    let (w, p) = planted(0.18, 3, 0.08, &[0.05, 0.1, 0.15]);
    let data = dir.path().join("data");
    write_tables(&data, &w, &p);
    let (o, _) = run(dir.path(), "analyze", &analyze_cfg(&[&data]), &[]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("insufficient points"));
}

#[test]
fn analyze_rejects_mixed_omega() {
    let dir = tempfile::tempdir().unwrap();
    let (w1, p1) = planted(0.18, 6, 0.08, &[0.05, 0.1, 0.15]);
    let (w2, p2) = planted(0.21, 6, 0.08, &[0.05, 0.1, 0.15]);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    write_tables(&a, &w1, &p1);
    write_tables(&b, &w2, &p2);
    let (o, _) = run(dir.path(), "analyze", &analyze_cfg(&[&a, &b]), &[]);
    assert_eq!(code(&o), 3);
    let (o, _) = run(dir.path(), "analyze", &analyze_cfg(&[&a]), &[]);
    assert_eq!(code(&o), 0);
}

const QUENCH: &str = "experiment = \"quench\"\nn_cols = 7\nn_rows = 3\nomega = 0.18\nd = 2\nbackend = \"ed\"\n";

#[test]
fn quench_starts_unbroken_and_stays_intact_off_resonance() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = run(dir.path(), "quench", &format!("{QUENCH}delta = 3.5\nstride = 5\n"), &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = quench_rows(&out);
    assert_eq!(rows[0]["step"], 0);
    assert_eq!(rows[0]["o_broken"].as_f64().unwrap(), 0.0);
    let last = rows.last().unwrap()["omega_t"].as_f64().unwrap();
    assert!((last - 5.0).abs() < 1e-9);
    for r in &rows {
        assert!(r["o_broken"].as_f64().unwrap() < 0.2, "{r}");
    }
    assert!(out.join("quench_delta3.5_d2.csv").exists());
}

#[test]
fn quench_from_ground_state_is_stationary() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = run(
        dir.path(),
        "quench",
        &format!("{QUENCH}delta = 3.3\ninitial_state = \"ground\"\nomega_t_final = 1.0\nstride = 8\n"),
        &[],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = quench_rows(&out);
    assert!(rows.len() >= 4);
    for key in ["o_broken", "w2_k0", "w2_k1", "w2_k2", "energy"] {
        let v0 = rows[0][key].as_f64().unwrap();
        for r in &rows {
            assert!((r[key].as_f64().unwrap() - v0).abs() < 1e-6, "{key}: {r}");
        }
    }
    let table = |step: u64| {
        fs::read_to_string(out.join(format!("snapshots/quench_delta3.3_d2_step{step:06}_links.csv"))).unwrap()
    };
    let first = table(0);
    let last = table(rows.last().unwrap()["step"].as_u64().unwrap());
    for (a, b) in first.lines().zip(last.lines()).skip(1) {
        for (x, y) in a.split(',').zip(b.split(',')) {
            if let (Ok(x), Ok(y)) = (x.parse::<f64>(), y.parse::<f64>()) {
                assert!((x - y).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn mps_quench_from_ground_state_is_stationary() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = run(
        dir.path(),
        "quench",
        "experiment = \"quench\"\nn_cols = 3\nn_rows = 4\nomega = 0.18\ndelta = 3.3\ninitial_state = \"ground\"\nomega_t_final = 0.5\nstride = 5\nchi = 64\nenergy_tol = 1e-12\n",
        &[],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = quench_rows(&out);
    let e0 = rows[0]["energy"].as_f64().unwrap();
    for r in &rows {
        assert!((r["energy"].as_f64().unwrap() - e0).abs() < 1e-6);
        assert!((r["norm"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    }
}
