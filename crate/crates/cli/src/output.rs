//! CSV and JSON renderings of each subcommand's result.

use serde::{Deserialize, Serialize};
use serde_json::json;

use bellmem_core::bounds::{bound_report, bounds_table};
use bellmem_core::enumerator::{model101_exact, Enumerator, ExactResult, NoSignaling};
use bellmem_core::montecarlo::{aggregate, simulate as run_batches, tail_compare_report, BatchRecord, SimulationPlan};
use bellmem_core::rational::{to_f64, to_fraction_string, Exact, Rational};
use bellmem_core::strategies::Model;
use bellmem_core::{Execution, SettingPair};

use crate::{CliError, Format};

/// One simulated batch. Shared by the CSV rows and the JSON `batches` array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRow {
    pub batch: u64,
    pub seed: u64,
    pub n: u64,
    pub y_value: String,
    pub x_defined: bool,
    /// Empty when X_N is undefined.
    pub x_value: String,
    pub c11: u64,
    pub c12: u64,
    pub c21: u64,
    pub a22: u64,
    pub n11: u64,
    pub n12: u64,
    pub n21: u64,
    pub n22: u64,
}

impl From<&BatchRecord> for BatchRow {
    fn from(r: &BatchRecord) -> Self {
        let c = &r.stats.counts;
        let [p11, p12, p21, p22] = SettingPair::ALL;
        BatchRow {
            batch: r.batch,
            seed: r.seed,
            n: r.stats.n,
            y_value: to_fraction_string(&r.stats.y_value),
            x_defined: r.stats.x_value.is_some(),
            x_value: r.stats.x_value.as_ref().map(to_fraction_string).unwrap_or_default(),
            c11: c.correlated(p11),
            c12: c.correlated(p12),
            c21: c.correlated(p21),
            a22: c.anticorrelated(p22),
            n11: c.total(p11),
            n12: c.total(p12),
            n21: c.total(p21),
            n22: c.total(p22),
        }
    }
}

/// A named exact quantity, used for the CSV form of `enumerate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub quantity: String,
    pub rational: String,
    pub decimal: f64,
}

impl SummaryRow {
    fn new(quantity: &str, r: &Rational) -> Self {
        SummaryRow {
            quantity: quantity.to_string(),
            rational: to_fraction_string(r),
            decimal: to_f64(r),
        }
    }
}

fn write_json(value: &serde_json::Value, out: &mut Vec<u8>) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| CliError::Io(e.into()))?;
    out.push(b'\n');
    Ok(())
}

fn write_csv<T: Serialize>(rows: &[T], out: &mut Vec<u8>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(&mut *out);
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Io(e.into()))?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn simulate(
    model: &Model,
    n: usize,
    batches: u64,
    seed: u64,
    delta: f64,
    format: Format,
    out: &mut Vec<u8>,
) -> Result<(), CliError> {
    let plan = SimulationPlan::new(n, batches, seed, delta)?;
    let records = run_batches(model, &plan, Execution::Parallel)?;
    let rows: Vec<BatchRow> = records.iter().map(BatchRow::from).collect();
    match format {
        Format::Csv => write_csv(&rows, out),
        Format::Json => {
            let summary = aggregate(model.name(), &plan, &records);
            let tails = tail_compare_report(&summary)?;
            write_json(
                &json!({
                    "summary": summary,
                    "tails": tails,
                    "batches": rows,
                }),
                out,
            )
        }
    }
}

fn exact(r: &Rational) -> Exact {
    Exact(r.clone())
}

fn sequence_fraction(count: u64, total: u64) -> String {
    format!("{count}/{total}")
}

fn exact_summary_rows(r: &ExactResult) -> Vec<SummaryRow> {
    let mut rows = vec![SummaryRow::new("e_y", &r.e_y)];
    if let Some(x) = &r.e_x_conditional {
        rows.push(SummaryRow::new("e_x_conditional", x));
    }
    rows.push(SummaryRow::new("p_undefined", &r.p_undefined));
    rows
}

pub(crate) fn enumerate(
    model: &Model,
    n: usize,
    enumerator: &Enumerator,
    format: Format,
    out: &mut Vec<u8>,
) -> Result<(), CliError> {
    match model {
        Model::Collective(c) => {
            let r = enumerator.exact_collective(c.as_ref(), n)?;
            let all = vec![1u8; n];
            let mut events = Vec::new();
            let mut y_sum = Rational::from_integer(0.into());
            for (pattern, &count) in &r.patterns {
                let p = r.probability(pattern);
                let hits: u64 = pattern.iter().map(|&s| u64::from(s)).sum();
                y_sum += Rational::new((4 * hits * count).into(), (n as u64 * r.sequences).into());
                events.push(json!({
                    "round_scores": pattern,
                    "sequences": sequence_fraction(count, r.sequences),
                    "probability": exact(&p),
                }));
            }
            let p_all = r.p_all_score();
            let ceiling = r.independent_ceiling();
            match format {
                Format::Json => write_json(
                    &json!({
                        "n": n,
                        "strategy": model.name(),
                        "sequences": r.sequences,
                        "e_y": exact(&y_sum),
                        "p_all_rounds_score": {
                            "sequences": sequence_fraction(r.count(&all), r.sequences),
                            "rational": to_fraction_string(&p_all),
                            "decimal": to_f64(&p_all),
                        },
                        "independent_rounds_ceiling": exact(&ceiling),
                        "exceeds_ceiling": p_all > ceiling,
                        "events": events,
                    }),
                    out,
                ),
                Format::Csv => write_csv(
                    &[
                        SummaryRow::new("e_y", &y_sum),
                        SummaryRow::new("p_all_rounds_score", &p_all),
                        SummaryRow::new("independent_rounds_ceiling", &ceiling),
                    ],
                    out,
                ),
            }
        }
        Model::Sequential(_) if model.name() == "model101" && n == 101 => {
            let m = model101_exact()?;
            match format {
                Format::Json => write_json(
                    &json!({
                        "n": 101,
                        "strategy": "model101",
                        "p_trigger": exact(&m.p_trigger),
                        "log10_p_trigger": m.log10_p_trigger,
                        "branches": m.branches.iter().map(|(p, x)| json!({
                            "pair": p.to_string(),
                            "x": exact(x),
                        })).collect::<Vec<_>>(),
                        "e_x_conditional_on_trigger": exact(&m.e_conditional),
                        "e_x_excess": exact(&m.e_x_excess),
                    }),
                    out,
                ),
                Format::Csv => write_csv(
                    &[
                        SummaryRow::new("p_trigger", &m.p_trigger),
                        SummaryRow::new("e_x_conditional_on_trigger", &m.e_conditional),
                        SummaryRow::new("e_x_excess", &m.e_x_excess),
                    ],
                    out,
                ),
            }
        }
        Model::Sequential(s) => {
            let r = enumerator.exact_expectations(s.as_ref(), n)?;
            match format {
                Format::Csv => write_csv(&exact_summary_rows(&r), out),
                Format::Json => {
                    let distribution: Vec<_> = r
                        .distribution
                        .iter()
                        .map(|p| {
                            json!({
                                "y": exact(&p.y),
                                "x": p.x.as_ref().map(exact),
                                "sequences": p.sequences,
                                "probability": exact(&r.probability(p)),
                            })
                        })
                        .collect();
                    write_json(
                        &json!({
                            "n": n,
                            "strategy": model.name(),
                            "sequences": r.sequences,
                            "e_y": exact(&r.e_y),
                            "e_x_conditional": r.e_x_conditional.as_ref().map(exact),
                            "p_undefined": exact(&r.p_undefined),
                            "distribution": distribution,
                        }),
                        out,
                    )
                }
            }
        }
    }
}

#[derive(Serialize)]
struct ValueRow {
    quantity: &'static str,
    value: f64,
}

pub(crate) fn bounds(n: u64, delta: f64, epsilon: Option<f64>, format: Format, out: &mut Vec<u8>) -> Result<(), CliError> {
    let r = bound_report(n, delta, epsilon)?;
    match format {
        Format::Json => write_json(&serde_json::to_value(&r).map_err(|e| CliError::Io(e.into()))?, out),
        Format::Csv => {
            let mut rows = vec![
                ValueRow { quantity: "n", value: n as f64 },
                ValueRow { quantity: "delta", value: delta },
                ValueRow { quantity: "f_value", value: r.f_value },
                ValueRow { quantity: "x_tail_bound", value: r.x_tail_bound },
            ];
            if let (Some(e), Some(m)) = (epsilon, r.x_mean_bound) {
                rows.push(ValueRow { quantity: "epsilon", value: e });
                rows.push(ValueRow { quantity: "x_mean_bound", value: m });
            }
            write_csv(&rows, out)
        }
    }
}

#[derive(Serialize)]
struct TableCsvRow {
    model: String,
    e_x: String,
    p_x_tail: String,
    e_y: String,
    p_y_tail: String,
}

pub(crate) fn table(n: u64, delta: f64, epsilon: f64, format: Format, out: &mut Vec<u8>) -> Result<(), CliError> {
    let t = bounds_table(n, delta, epsilon)?;
    match format {
        Format::Json => write_json(&serde_json::to_value(&t).map_err(|e| CliError::Io(e.into()))?, out),
        Format::Csv => {
            let rows: Vec<_> = t
                .rows
                .iter()
                .map(|r| TableCsvRow {
                    model: format!("{:?}", r.model),
                    e_x: r.e_x.label(),
                    p_x_tail: r.p_x_tail.label(),
                    e_y: r.e_y.label(),
                    p_y_tail: r.p_y_tail.label(),
                })
                .collect();
            write_csv(&rows, out)
        }
    }
}

#[derive(Serialize)]
struct NosigCsvRow {
    strategy: String,
    n: usize,
    result: &'static str,
    comparisons: Option<u64>,
    round: Option<usize>,
    side: Option<String>,
    settings: Option<String>,
    outcomes: Option<String>,
}

pub(crate) fn nosig(strategy: &str, n: usize, result: &NoSignaling, format: Format, out: &mut Vec<u8>) -> Result<(), CliError> {
    match format {
        Format::Json => write_json(
            &json!({
                "strategy": strategy,
                "n": n,
                "check": result,
            }),
            out,
        ),
        Format::Csv => {
            let row = match result {
                NoSignaling::Pass { comparisons, .. } => NosigCsvRow {
                    strategy: strategy.into(),
                    n,
                    result: "pass",
                    comparisons: Some(*comparisons),
                    round: None,
                    side: None,
                    settings: None,
                    outcomes: None,
                },
                NoSignaling::Fail { counterexample: c } => NosigCsvRow {
                    strategy: strategy.into(),
                    n,
                    result: "fail",
                    comparisons: None,
                    round: Some(c.round),
                    side: Some(format!("{:?}", c.side)),
                    settings: Some(format!("{} vs {}", c.settings[0], c.settings[1])),
                    outcomes: Some(format!("{} vs {}", c.outcomes[0], c.outcomes[1])),
                },
            };
            write_csv(&[row], out)
        }
    }
}
