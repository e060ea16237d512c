use std::path::Path;
use std::process::{Command, Output};

use arnoma::manifest::RunManifest;

// Pinned inverse JM area so these runs skip the estimator.
const INV: &str = "4.2007";

fn arnoma(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arnoma"))
        .args(args)
        .args(["--out-dir", dir.to_str().unwrap()])
        .output()
        .expect("binary runs")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    assert!(
        text.starts_with("# manifest: "),
        "{} lacks the manifest line",
        path.display()
    );
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = arnoma(dir.path(), &["moment", "--device", "iot", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn zeroth_moment_is_one_everywhere() {
    let dir = tempfile::tempdir().unwrap();
    let out = arnoma(
        dir.path(),
        &[
            "moment",
            "--device",
            "mobile",
            "--scheme",
            "both",
            "--b",
            "0",
            "--inv-jm-area",
            INV,
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for s in ["noma", "oma"] {
        let (h, rows) = read_csv(&dir.path().join(format!("moment_mobile_{s}.csv")));
        assert_eq!(h, ["beta_db", "value", "abs_error", "status"]);
        assert_eq!(rows.len(), 5);
        for r in rows {
            assert_eq!(r[1], "1");
        }
    }
}

#[test]
fn config_file_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "lambda_b = 1e-4\nalpha = 4\nbeta_t_db = minus five\n").unwrap();
    let out = arnoma(
        dir.path(),
        &[
            "--config",
            cfg.to_str().unwrap(),
            "delay",
            "--inv-jm-area",
            INV,
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("bad.cfg:3:"), "{msg}");
}

#[test]
fn config_file_values_reach_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("ok.cfg");
    std::fs::write(
        &cfg,
        "# lighter load\nlambda_b = 2e-4\nA_L = 0.25\nbeta_t_db = -8\nlambda_t = 1e-3\n",
    )
    .unwrap();
    let out = arnoma(
        dir.path(),
        &[
            "--config",
            cfg.to_str().unwrap(),
            "delay",
            "--scheme",
            "noma",
            "--inv-jm-area",
            INV,
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let m = RunManifest::read(&dir.path().join("delay.manifest.toml")).unwrap();
    assert_eq!(m.params.lambda_b, 2e-4);
    assert!((m.params.beta_t_db + 8.0).abs() < 1e-12);
    assert!(m.complete);
}

#[test]
fn full_time_share_is_rejected_before_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let out = arnoma(
        dir.path(),
        &[
            "--set",
            "eta=1",
            "delay",
            "--scheme",
            "oma",
            "--inv-jm-area",
            INV,
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("delay.csv").exists());
}

#[test]
fn unsupported_order_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = arnoma(
        dir.path(),
        &[
            "moment",
            "--device",
            "iot",
            "--b",
            "-2",
            "--inv-jm-area",
            INV,
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn divergence_has_its_own_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    // Without IoT power control the delay integral diverges at alpha = 4.
    let out = arnoma(
        dir.path(),
        &[
            "--set",
            "eps_t=0",
            "moment",
            "--device",
            "iot",
            "--b",
            "-1",
            "--inv-jm-area",
            INV,
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (h, rows) = read_csv(&dir.path().join("moment_iot_noma.csv"));
    let st = column(&h, "status");
    assert!(rows.iter().all(|r| r[st] == "diverged"));
    let m = RunManifest::read(&dir.path().join("moment.manifest.toml")).unwrap();
    assert!(m.divergent_outputs && m.complete);
}

#[test]
fn exhausted_budget_leaves_a_partial_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let out = arnoma(
        dir.path(),
        &[
            "--budget-secs",
            "0",
            "delay",
            "--beta-t-grid",
            "-10,-5,0",
            "--inv-jm-area",
            INV,
        ],
    );
    assert_eq!(out.status.code(), Some(4));
    let m = RunManifest::read(&dir.path().join("delay.manifest.toml")).unwrap();
    assert!(!m.complete);
    assert_eq!(m.outputs, ["delay.csv"]);
    let (_, rows) = read_csv(&dir.path().join("delay.csv"));
    assert!(rows.len() < 3);
}

#[test]
fn oma_rate_is_linear_in_time_share() {
    let dir = tempfile::tempdir().unwrap();
    let out = arnoma(
        dir.path(),
        &[
            "rate",
            "--scheme",
            "oma",
            "--eta",
            "0.25,0.5",
            "--inv-jm-area",
            INV,
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (h, rows) = read_csv(&dir.path().join("rate.csv"));
    let a = column(&h, "analytic");
    let quarter: f64 = rows[0][a].parse().unwrap();
    let half: f64 = rows[1][a].parse().unwrap();
    assert!((half / quarter - 2.0).abs() < 1e-12);
}

#[test]
fn delays_are_at_least_one_and_grow_with_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let out = arnoma(
        dir.path(),
        &[
            "delay",
            "--beta-t-grid",
            "-15,-10,-5,0,5",
            "--eta",
            "0.25,0.5",
            "--inv-jm-area",
            INV,
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (h, rows) = read_csv(&dir.path().join("delay.csv"));
    let (d, st, sc, eta) = (
        column(&h, "delay"),
        column(&h, "status"),
        column(&h, "scheme"),
        column(&h, "eta"),
    );
    assert_eq!(rows.len(), 15);
    for group in rows.chunks(5) {
        let vals: Vec<f64> = group.iter().map(|r| r[d].parse().unwrap()).collect();
        assert!(group
            .iter()
            .all(|r| r[st] != "diverged" && r[sc] == group[0][sc] && r[eta] == group[0][eta]));
        assert!(vals.iter().all(|&v| v >= 1.0));
        assert!(vals.windows(2).all(|w| w[1] >= w[0]), "{vals:?}");
    }
}

#[test]
fn optimizer_writes_outcome_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = arnoma(
        dir.path(),
        &[
            "optimize",
            "--scheme",
            "noma",
            "--grid-res",
            "0.25",
            "--tau",
            "2",
            "--inv-jm-area",
            INV,
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (h, rows) = read_csv(&dir.path().join("optimize.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][column(&h, "feasible")], "true");
    let (th, trace) = read_csv(&dir.path().join("optimize_trace_noma.csv"));
    assert_eq!(th, ["eps_m", "eps_t", "eta", "rate", "delay", "feasible"]);
    assert!(trace.len() >= 25);
}

#[test]
fn snapshot_dump_lists_every_role() {
    let dir = tempfile::tempdir().unwrap();
    let out = arnoma(dir.path(), &["snapshot", "--index", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let (h, rows) = read_csv(&dir.path().join("snapshot.csv"));
    let role = column(&h, "role");
    for r in [
        "bs",
        "mobile",
        "iot",
        "typical-mobile",
        "typical-iot",
        "interferer-mobile",
        "interferer-iot",
    ] {
        assert!(rows.iter().any(|x| x[role] == r), "missing {r}");
    }
    assert!(rows.iter().all(|x| x[0] == "3"));
}

#[test]
fn inverse_area_is_cached() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["jm-area", "--jm-cells", "200", "--jm-points", "2000"];
    assert_eq!(arnoma(dir.path(), &args).status.code(), Some(0));
    let first = std::fs::read(dir.path().join("jm_area.csv")).unwrap();
    assert!(dir.path().join("jm_area_cache.toml").exists());
    assert_eq!(arnoma(dir.path(), &args).status.code(), Some(0));
    assert_eq!(
        std::fs::read(dir.path().join("jm_area.csv")).unwrap(),
        first
    );
    let (h, rows) = read_csv(&dir.path().join("jm_area.csv"));
    let v: f64 = rows[0][column(&h, "normalized")].parse().unwrap();
    assert!(v > 3.0 && v < 6.0, "{v}");
}
