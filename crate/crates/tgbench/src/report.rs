//! Plain-text tables in the usual leaderboard layout.

use tgbench_core::metrics::{round_half_up, MetricsReport};
use tgbench_core::Task;

pub const COLUMNS: [&str; 12] = [
    "Onset Hit@3s",
    "Offset Hit@3s",
    "TSG Avg",
    "LTR Acc",
    "METEOR",
    "CLAPScore",
    "TAD Avg",
    "GTO Acc",
    "IoU",
    "F1",
    "MTR Avg",
    "Total",
];

/// The twelve columns, unrounded; `None` where a task is absent.
pub fn table_row(report: &MetricsReport) -> [Option<f64>; 12] {
    let sub = |task: Task, k: &str| report.task(task).and_then(|s| s.get(k));
    let avg = |task: Task| report.task_avgs.get(&task).copied();
    [
        sub(Task::Tsg, "onset_hit"),
        sub(Task::Tsg, "offset_hit"),
        avg(Task::Tsg),
        sub(Task::Ltr, "acc"),
        sub(Task::Tad, "meteor"),
        sub(Task::Tad, "align"),
        avg(Task::Tad),
        sub(Task::Gto, "acc"),
        sub(Task::Mtr, "iou"),
        sub(Task::Mtr, "f1"),
        avg(Task::Mtr),
        (!report.per_task.is_empty()).then_some(report.total_avg),
    ]
}

/// Columns rounded half-up to one decimal.
pub fn rounded_row(report: &MetricsReport) -> [Option<f64>; 12] {
    table_row(report).map(|v| v.map(|x| round_half_up(x, 1)))
}

/// Renders one line per named report under a header line.
pub fn render_table(rows: &[(String, MetricsReport)]) -> String {
    let name_w = rows.iter().map(|(n, _)| n.chars().count()).max().unwrap_or(0).max(5);
    let mut out = format!("{:<name_w$}", "Model");
    for c in COLUMNS {
        out.push_str(&format!(" | {c:>w$}", w = c.len().max(5)));
    }
    out.push('\n');
    for (name, report) in rows {
        out.push_str(&format!("{name:<name_w$}"));
        for (c, v) in COLUMNS.iter().zip(rounded_row(report)) {
            let cell = v.map_or_else(|| "-".to_string(), |x| format!("{x:.1}"));
            out.push_str(&format!(" | {cell:>w$}", w = c.len().max(5)));
        }
        out.push('\n');
    }
    if rows.iter().any(|(_, r)| !r.is_complete()) {
        out.push_str("(-: task not scored; Total averages the scored sub-metrics only)\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use tgbench_core::metrics::{aggregate, TaskScores};

    #[test]
    fn renders_partial_rows() {
        let r = aggregate(vec![TaskScores::new(Task::Ltr, &[56.7], 208)]).unwrap();
        let text = render_table(&[("demo".into(), r)]);
        assert!(text.contains("56.7"));
        assert!(text.contains(" - "));
        assert!(text.contains("task not scored"));
    }
}
