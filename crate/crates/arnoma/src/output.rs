//! CSV output.
//!
//! Every file starts with a `# manifest: <name>` comment line naming the
//! manifest written alongside it, then a header row. Floats use the shortest
//! representation that reads back to the same value, so files are
//! byte-for-byte reproducible.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use arnoma_core::analytic::{MetaCurve, MomentResult};
use arnoma_core::config::linear_to_db;
use arnoma_core::montecarlo::EmpiricalEstimate;
use arnoma_core::optimizer::{OptimizationOutcome, TracePoint};
use arnoma_core::spatial::NetworkSnapshot;
use arnoma_core::{Device, Scheme};

/// Header of analytic curve files.
pub const META_CURVE_HEADER: &[&str] = &["beta_db", "value", "abs_error", "status"];
/// Header of empirical estimate files.
pub const EMPIRICAL_HEADER: &[&str] = &[
    "beta_db",
    "estimate",
    "std_error",
    "n_samples",
    "estimator_kind",
    "scheme",
    "device",
];
/// Header of optimizer trace files.
pub const TRACE_HEADER: &[&str] = &["eps_m", "eps_t", "eta", "rate", "delay", "feasible"];

/// A CSV file under construction.
pub struct CsvSink {
    inner: csv::Writer<BufWriter<File>>,
}

impl CsvSink {
    pub fn create(path: &Path, manifest_name: &str, header: &[&str]) -> std::io::Result<Self> {
        let mut f = BufWriter::new(File::create(path)?);
        writeln!(f, "# manifest: {manifest_name}")?;
        let mut inner = csv::Writer::from_writer(f);
        inner.write_record(header).map_err(std::io::Error::other)?;
        Ok(CsvSink { inner })
    }

    pub fn row<I, S>(&mut self, fields: I) -> std::io::Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.inner
            .write_record(fields)
            .map_err(std::io::Error::other)
    }

    pub fn finish(mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

/// Formats a float, switching to exponent notation outside `[1e-4, 1e15)`.
/// `inf` and `NaN` keep their Rust spelling.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Formats an optional float, empty when absent.
pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Relative difference `|a - b| / |b|`.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

pub fn moment_fields(r: &MomentResult) -> [String; 3] {
    [
        num(r.value),
        num(r.abs_error_est),
        r.status.name().to_string(),
    ]
}

/// Writes an analytic curve with thresholds in dB.
pub fn write_meta_curve(path: &Path, manifest: &str, curve: &MetaCurve) -> std::io::Result<()> {
    let mut w = CsvSink::create(path, manifest, META_CURVE_HEADER)?;
    for (beta, r) in curve.thresholds.iter().zip(&curve.points) {
        let [v, e, s] = moment_fields(r);
        w.row([num(linear_to_db(*beta)), v, e, s])?;
    }
    w.finish()
}

/// Writes empirical estimates, one per threshold (dB).
pub fn write_empirical(
    path: &Path,
    manifest: &str,
    betas_db: &[f64],
    estimates: &[EmpiricalEstimate],
    scheme: Scheme,
    device: Device,
) -> std::io::Result<()> {
    let mut w = CsvSink::create(path, manifest, EMPIRICAL_HEADER)?;
    for (db, e) in betas_db.iter().zip(estimates) {
        w.row([
            num(*db),
            num(e.value),
            num(e.std_error),
            e.n_samples.to_string(),
            e.kind.name().to_string(),
            scheme.name().to_string(),
            device.name().to_string(),
        ])?;
    }
    w.finish()
}

pub fn trace_fields(t: &TracePoint) -> [String; 6] {
    [
        num(t.eps_m),
        num(t.eps_t),
        opt(t.eta),
        num(t.rate),
        num(t.delay),
        t.feasible.to_string(),
    ]
}

/// Writes the evaluated points of an optimizer run.
pub fn write_trace(
    path: &Path,
    manifest: &str,
    outcome: &OptimizationOutcome,
) -> std::io::Result<()> {
    let mut w = CsvSink::create(path, manifest, TRACE_HEADER)?;
    for t in &outcome.trace {
        w.row(trace_fields(t))?;
    }
    w.finish()
}

/// Header of optimizer outcome files.
pub const OUTCOME_HEADER: &[&str] = &[
    "scheme",
    "tau",
    "grid_res",
    "eps_m",
    "eps_t",
    "eta",
    "rate",
    "delay",
    "feasible",
    "evaluations",
];

pub fn outcome_fields(o: &OptimizationOutcome, tau: f64) -> Vec<String> {
    vec![
        o.scheme.name().to_string(),
        num(tau),
        num(o.grid_res),
        num(o.eps_m),
        num(o.eps_t),
        opt(o.eta),
        num(o.rate),
        num(o.delay),
        o.feasible.to_string(),
        o.evaluations.to_string(),
    ]
}

/// Header of snapshot dumps.
pub const SNAPSHOT_HEADER: &[&str] = &["snapshot", "role", "cell", "x", "y", "link", "to_origin"];

/// Dumps one geometry: BS and device positions, then the distances the
/// engines actually use.
pub fn write_snapshot_rows(w: &mut CsvSink, snap: &NetworkSnapshot) -> std::io::Result<()> {
    let id = snap.seed.1.to_string();
    let empty = String::new;
    for (i, p) in snap.bs_points.iter().enumerate() {
        w.row([
            id.clone(),
            "bs".into(),
            i.to_string(),
            num(p[0]),
            num(p[1]),
            empty(),
            empty(),
        ])?;
    }
    let devices = [
        ("mobile", &snap.mobile_positions),
        ("iot", &snap.iot_positions),
    ];
    for (role, pts) in devices {
        for (i, p) in pts.iter().enumerate() {
            let bs = snap.bs_points[i];
            let link = ((p[0] - bs[0]).powi(2) + (p[1] - bs[1]).powi(2)).sqrt();
            let to_origin = (p[0] * p[0] + p[1] * p[1]).sqrt();
            w.row([
                id.clone(),
                role.into(),
                i.to_string(),
                num(p[0]),
                num(p[1]),
                num(link),
                num(to_origin),
            ])?;
        }
    }
    w.row([
        id.clone(),
        "typical-mobile".into(),
        "0".into(),
        empty(),
        empty(),
        num(snap.typical_mobile),
        empty(),
    ])?;
    w.row([
        id.clone(),
        "typical-iot".into(),
        "0".into(),
        empty(),
        empty(),
        num(snap.typical_iot),
        empty(),
    ])?;
    let interferers = [
        ("interferer-mobile", &snap.interferers_mobile),
        ("interferer-iot", &snap.interferers_iot),
    ];
    for (role, list) in interferers {
        for (i, x) in list.iter().enumerate() {
            w.row([
                id.clone(),
                role.into(),
                (i + 1).to_string(),
                empty(),
                empty(),
                num(x.link),
                num(x.to_origin),
            ])?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use arnoma_core::analytic::{CurveKind, CurveSource, MomentStatus};

    #[test]
    fn curve_file_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let curve = MetaCurve {
            thresholds: vec![0.1, 1.0],
            points: vec![
                MomentResult {
                    value: 0.9,
                    abs_error_est: 1e-9,
                    status: MomentStatus::Converged,
                },
                MomentResult {
                    value: f64::INFINITY,
                    abs_error_est: f64::INFINITY,
                    status: MomentStatus::Diverged,
                },
            ],
            kind: CurveKind::Ccdf,
            source: CurveSource::Analytic,
        };
        write_meta_curve(&path, "run.manifest.toml", &curve).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# manifest: run.manifest.toml");
        assert_eq!(lines[1], "beta_db,value,abs_error,status");
        assert_eq!(lines[2], "-10,0.9,1e-9,converged");
        assert_eq!(lines[3], "0,inf,inf,diverged");
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1 + 0.2, 1e-300, -4.2007e-4, 12345.678901234567] {
            assert_eq!(num(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }
}
