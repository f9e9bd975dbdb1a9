//! Report emission: per-setting rows as an aligned table or delimited
//! values for external plotters. All ratios print with 4 decimal places.

use crate::pipeline::{RunManifest, SettingReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Csv,
}

const COLUMNS: [&str; 9] = [
    "mode",
    "n_segments",
    "gold_position",
    "em",
    "f1",
    "p_retrieved",
    "p_util_given_retrieved",
    "span_recall_q",
    "mean_input_tokens",
];

pub fn render_report(manifest: &RunManifest, format: ReportFormat) -> String {
    let rows: Vec<[String; 9]> = manifest.settings.iter().map(row_cells).collect();
    match format {
        ReportFormat::Csv => {
            let mut out = COLUMNS.join(",");
            out.push('\n');
            for row in &rows {
                out.push_str(&row.join(","));
                out.push('\n');
            }
            out
        }
        ReportFormat::Table => {
            let mut widths: Vec<usize> = COLUMNS.iter().map(|c| c.len()).collect();
            for row in &rows {
                for (width, cell) in widths.iter_mut().zip(row.iter()) {
                    *width = (*width).max(cell.len());
                }
            }
            let mut out = String::new();
            for (i, (column, width)) in COLUMNS.iter().zip(&widths).enumerate() {
                if i > 0 {
                    out.push_str("  ");
                }
                out.push_str(&format!("{column:>width$}"));
            }
            out.push('\n');
            for row in &rows {
                for (i, (cell, width)) in row.iter().zip(&widths).enumerate() {
                    if i > 0 {
                        out.push_str("  ");
                    }
                    out.push_str(&format!("{cell:>width$}"));
                }
                out.push('\n');
            }
            out
        }
    }
}

fn row_cells(setting: &SettingReport) -> [String; 9] {
    let ratio = |v: f64| format!("{v:.4}");
    let (p_retrieved, p_util, span_q, mean_tokens) = match &setting.decomposition {
        Some(d) => (
            ratio(d.p_retrieved),
            ratio(d.p_util_given_retrieved),
            d.span_recall_q.map(ratio).unwrap_or_else(|| "-".to_string()),
            ratio(d.mean_input_tokens),
        ),
        None => ("-".into(), "-".into(), "-".into(), "-".into()),
    };
    [
        setting.mode.to_string(),
        setting.n_segments.to_string(),
        setting.gold_position.clone(),
        ratio(setting.em),
        ratio(setting.f1),
        p_retrieved,
        p_util,
        span_q,
        mean_tokens,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{PipelineMode, ReaderKind, RunConfig, SlicerKind};
    use slicebench_core::metrics::DecompositionReport;

    fn manifest(settings: Vec<SettingReport>) -> RunManifest {
        RunManifest {
            tool_version: "0.0.0".into(),
            config: RunConfig {
                corpus: "c.jsonl".into(),
                mode: PipelineMode::Slice,
                slicer: SlicerKind::Oracle,
                reader: ReaderKind::Mock,
                noise_levels: vec![1],
                gold_positions: vec![slicebench_core::noise::GoldPosition::Middle],
                budget: 8,
                seed: 0,
                output_dir: "out".into(),
                workers: 1,
                mock_capacity: 2,
                mock_p_hit: 1.0,
                mock_p_guess: 0.0,
                lexical_window: 32,
                lexical_stride: 16,
                endpoint: None,
                model: None,
                auth_env: None,
                timeout_secs: 30,
                max_retries: 2,
                max_in_flight: 4,
                max_output_tokens: 64,
                temperature: 0.0,
                reader_prompt: None,
                slicer_prompt: None,
            },
            corpus_sha256: "00".into(),
            seed: 0,
            n_examples: 0,
            n_errors: 0,
            duration_secs: 0.0,
            results_file: "results.jsonl".into(),
            settings,
        }
    }

    fn setting(mode: PipelineMode, n: usize) -> SettingReport {
        SettingReport {
            mode,
            n_segments: n,
            gold_position: "middle".into(),
            em: 0.5,
            f1: 0.625,
            n_errors: 0,
            decomposition: Some(DecompositionReport {
                p_retrieved: 1.0,
                p_util_given_retrieved: 0.5,
                p_correct_joint: 0.5,
                p_correct_overall: 0.5,
                span_recall_q: None,
                mean_input_tokens: 123.456789,
                n: 10,
            }),
        }
    }

    #[test]
    fn empty_sweep_is_header_only() {
        let csv = render_report(&manifest(vec![]), ReportFormat::Csv);
        assert_eq!(csv.lines().count(), 1);
        assert!(csv.starts_with("mode,n_segments,gold_position,em,f1,"));
        let table = render_report(&manifest(vec![]), ReportFormat::Table);
        assert_eq!(table.lines().count(), 1);
    }

    #[test]
    fn one_row_per_setting_with_four_decimals() {
        let m = manifest(vec![
            setting(PipelineMode::BaselineFullContext, 2),
            setting(PipelineMode::BaselineFullContext, 5),
            setting(PipelineMode::Slice, 2),
        ]);
        let csv = render_report(&m, ReportFormat::Csv);
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.contains("baseline-full-context,2,middle,0.5000,0.6250,1.0000,0.5000,-,123.4568"));
    }

    #[test]
    fn table_columns_align() {
        let m = manifest(vec![setting(PipelineMode::Slice, 10)]);
        let table = render_report(&m, ReportFormat::Table);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0].len(), lines[1].len());
    }
}
