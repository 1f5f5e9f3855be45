//! Ratio reports: rows, summaries and byte-deterministic JSON/CSV output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use rmu_core::KernelReport;

use crate::config::ExperimentConfig;
use crate::HarnessError;

/// `lhs / rhs` with `0/0 = 0`; a positive `lhs` over `0` is `+∞`.
pub fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    /// Probe id, e.g. `strong_type/mu_vs_maximal`.
    pub experiment: String,
    pub refinement: usize,
    pub function: String,
    pub weight: String,
    /// Full parameter label, sweep variable included.
    pub param: String,
    /// Parameter label without refinement and sweep variable; rows sharing
    /// it form one case for stability tracking.
    pub case: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Row {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        experiment: &str,
        refinement: usize,
        function: &str,
        weight: &str,
        case: String,
        sweep: Option<f64>,
        lhs: f64,
        rhs: f64,
    ) -> Row {
        let mut param = format!("N={refinement}");
        if !case.is_empty() {
            param.push(';');
            param.push_str(&case);
        }
        if let Some(l) = sweep {
            param.push_str(&format!(";lambda={l:.6e}"));
        }
        Row {
            experiment: experiment.to_string(),
            refinement,
            function: function.to_string(),
            weight: weight.to_string(),
            param,
            case,
            sweep,
            lhs,
            rhs,
            ratio: ratio(lhs, rhs),
            detail: None,
        }
    }

    pub fn with_detail(mut self, detail: String) -> Row {
        self.detail = Some(detail);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelMax {
    pub refinement: usize,
    pub max_ratio: f64,
    /// Sweep value attaining the max, for swept cases.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub argmax: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSummary {
    pub experiment: String,
    pub function: String,
    pub weight: String,
    pub case: String,
    pub per_refinement: Vec<LevelMax>,
    pub stability_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub max_ratio: f64,
    pub per_refinement: Vec<LevelMax>,
    /// Max over cases and consecutive refinements of `ratio_{k+1}/ratio_k`.
    pub stability_factor: f64,
    pub stability_threshold: f64,
    pub stable: bool,
    pub all_finite: bool,
    pub cases: Vec<CaseSummary>,
    pub checks: Vec<Check>,
    pub skipped: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightConstants {
    pub weight: String,
    pub refinement: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ainf: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolNorms {
    pub family: String,
    pub refinement: usize,
    pub osc_norms: Vec<f64>,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelMeta {
    pub label: String,
    pub sup_bound: f64,
    pub cancellation_residual: f64,
    pub negative_example: bool,
    /// Continuity fit; absent for `n = 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub continuity: Option<KernelReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub version: String,
    pub kernel: KernelMeta,
    pub ainf_definition: String,
    pub ainf_note: String,
    pub weight_constants: Vec<WeightConstants>,
    pub symbol_norms: Vec<SymbolNorms>,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub experiment: String,
    pub rows: Vec<Row>,
    pub summary: Summary,
    pub metadata: Metadata,
}

/// Builds the summary from `rows`; cases keep first-appearance order.
pub fn summarize(
    rows: &[Row],
    refinements: &[usize],
    threshold: f64,
    checks: Vec<Check>,
    skipped: Vec<String>,
) -> Summary {
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, nan_max);
    let per_refinement = refinements
        .iter()
        .map(|&n| LevelMax {
            refinement: n,
            max_ratio: rows
                .iter()
                .filter(|r| r.refinement == n)
                .map(|r| r.ratio)
                .fold(0.0, nan_max),
            argmax: None,
        })
        .collect();

    let mut keys: Vec<(&str, &str, &str, &str)> = Vec::new();
    for r in rows {
        let key = (r.experiment.as_str(), r.function.as_str(), r.weight.as_str(), r.case.as_str());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let cases: Vec<CaseSummary> = keys
        .into_iter()
        .map(|(e, f, w, c)| {
            let per_refinement: Vec<LevelMax> = refinements
                .iter()
                .map(|&n| {
                    let mut best = LevelMax {
                        refinement: n,
                        max_ratio: 0.0,
                        argmax: None,
                    };
                    for r in rows.iter().filter(|r| {
                        r.refinement == n
                            && r.experiment == e
                            && r.function == f
                            && r.weight == w
                            && r.case == c
                    }) {
                        if r.ratio > best.max_ratio || r.ratio.is_nan() {
                            best.max_ratio = r.ratio;
                            best.argmax = r.sweep;
                        }
                    }
                    best
                })
                .collect();
            let stability_factor = per_refinement
                .windows(2)
                .map(|w| growth(w[0].max_ratio, w[1].max_ratio))
                .fold(0.0, nan_max);
            CaseSummary {
                experiment: e.to_string(),
                function: f.to_string(),
                weight: w.to_string(),
                case: c.to_string(),
                per_refinement,
                stability_factor,
            }
        })
        .collect();
    let stability_factor = cases.iter().map(|c| c.stability_factor).fold(0.0, nan_max);
    Summary {
        max_ratio,
        per_refinement,
        stability_factor,
        stability_threshold: threshold,
        stable: stability_factor < threshold,
        all_finite: rows.iter().all(|r| r.ratio.is_finite() && r.lhs.is_finite() && r.rhs.is_finite()),
        cases,
        checks,
        skipped,
    }
}

/// `next / prev` with `0 → 0` counted as 0 and `0 → positive` as `+∞`.
pub fn growth(prev: f64, next: f64) -> f64 {
    if next == 0.0 {
        0.0
    } else if prev == 0.0 {
        f64::INFINITY
    } else {
        next / prev
    }
}

/// Max that propagates NaN, so a NaN ratio can never hide.
fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

/// Pretty JSON whose floats carry 17 significant digits.
struct SciFormatter(PrettyFormatter<'static>);

macro_rules! delegate {
    ($($name:ident $(($arg:ident: $ty:ty))?;)*) => {
        $(
            fn $name<W: ?Sized + Write>(&mut self, writer: &mut W $(, $arg: $ty)?) -> std::io::Result<()> {
                self.0.$name(writer $(, $arg)?)
            }
        )*
    };
}

impl Formatter for SciFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        write!(writer, "{}", format_float(value))
    }

    delegate! {
        begin_array;
        end_array;
        begin_array_value(first: bool);
        end_array_value;
        begin_object;
        end_object;
        begin_object_key(first: bool);
        begin_object_value;
        end_object_value;
    }
}

/// `{:.16e}`: 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn to_json(report: &RatioReport) -> Result<Vec<u8>, serde_json::Error> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFormatter(PrettyFormatter::new()));
    report.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(out)
}

pub fn to_csv(rows: &[Row]) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["experiment", "function", "weight", "param", "lhs", "rhs", "ratio"])?;
    for r in rows {
        w.write_record([
            r.experiment.as_str(),
            r.function.as_str(),
            r.weight.as_str(),
            r.param.as_str(),
            &format_float(r.lhs),
            &format_float(r.rhs),
            &format_float(r.ratio),
        ])?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

/// Writes `<base>.json` and `<base>.csv`.
pub fn write_report(report: &RatioReport, base: &Path) -> Result<(), HarnessError> {
    let json_path = base.with_extension("json");
    let csv_path = base.with_extension("csv");
    let json = to_json(report).map_err(|source| HarnessError::Json {
        path: json_path.clone(),
        source,
    })?;
    let csv = to_csv(&report.rows).map_err(|source| HarnessError::Csv {
        path: csv_path.clone(),
        source,
    })?;
    for (path, bytes) in [(&json_path, &json), (&csv_path, &csv)] {
        let io = |source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut file = BufWriter::new(File::create(path).map_err(io)?);
        file.write_all(bytes).map_err(io)?;
        file.flush().map_err(io)?;
    }
    Ok(())
}

/// Differences between the summaries of two reports, one line each.
/// Works on raw JSON so reports from other versions still compare.
pub fn diff_summaries(a: &serde_json::Value, b: &serde_json::Value) -> Vec<String> {
    let mut out = Vec::new();
    let field = |v: &serde_json::Value, path: &[&str]| {
        let mut cur = v.clone();
        for p in path {
            cur = cur.get(p).cloned().unwrap_or(serde_json::Value::Null);
        }
        cur
    };
    for path in [
        &["experiment"][..],
        &["summary", "max_ratio"],
        &["summary", "stability_factor"],
        &["summary", "stable"],
        &["summary", "all_finite"],
        &["summary", "per_refinement"],
    ] {
        let (x, y) = (field(a, path), field(b, path));
        if x != y {
            out.push(format!("{}: {x} vs {y}", path.join(".")));
        }
    }
    let cases = |v: &serde_json::Value| {
        field(v, &["summary", "cases"])
            .as_array()
            .cloned()
            .unwrap_or_default()
    };
    let key = |c: &serde_json::Value| {
        ["experiment", "function", "weight", "case"]
            .iter()
            .map(|k| c.get(*k).and_then(|v| v.as_str()).unwrap_or("").to_string())
            .collect::<Vec<_>>()
            .join(" | ")
    };
    let (ca, cb) = (cases(a), cases(b));
    for c in &ca {
        match cb.iter().find(|d| key(d) == key(c)) {
            None => out.push(format!("case only in first: {}", key(c))),
            Some(d) => {
                for f in ["per_refinement", "stability_factor"] {
                    if c.get(f) != d.get(f) {
                        out.push(format!(
                            "{} {f}: {} vs {}",
                            key(c),
                            c.get(f).unwrap_or(&serde_json::Value::Null),
                            d.get(f).unwrap_or(&serde_json::Value::Null)
                        ));
                    }
                }
            }
        }
    }
    for d in &cb {
        if !ca.iter().any(|c| key(c) == key(d)) {
            out.push(format!("case only in second: {}", key(d)));
        }
    }
    out
}
