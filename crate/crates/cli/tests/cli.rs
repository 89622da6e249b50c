//! End-to-end tests of the `heavycs` binary: spec'd example rows, exact
//! round-tripping of output text, error-path exit codes, and agreement
//! between the experiment subcommands and the simulation library they wrap.

use std::io::Write as _;
use std::process::{Command, Stdio};

use approx::assert_relative_eq;
use heavycs::ds::ds_tuned_half_width;
use heavycs::stitch::StitchPlan;
use heavycs_cli::format::{fmt_float, parse_float, parse_set};
use heavycs_sim::{run_coverage, GeneratorSpec};

struct Output {
    stdout: String,
    stderr: String,
    code: i32,
}

fn run(args: &[&str], stdin_data: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_heavycs"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn heavycs");
    child
        .stdin
        .as_mut()
        .unwrap()
        .write_all(stdin_data.as_bytes())
        .unwrap();
    let out = child.wait_with_output().unwrap();
    Output {
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
        code: out.status.code().expect("exit code"),
    }
}

/// Data rows of a csv output (header and comment rows stripped).
fn data_rows(stdout: &str) -> Vec<Vec<String>> {
    stdout
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn ds_unit_schedule_reproduces_the_worked_rows() {
    let out = run(
        &[
            "stream",
            "--method",
            "ds",
            "--alpha",
            "0.5",
            "--sigma2",
            "1",
            "--schedule",
            "constant:1",
        ],
        "0\n",
    );
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);
    let rows = data_rows(&out.stdout);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "1");
    let set = parse_set(&rows[0][1]).unwrap();
    assert_eq!(set, vec![(-4.0, 4.0)]);
    assert_eq!(parse_float(&rows[0][2]).unwrap(), 8.0);
    assert_eq!(rows[0][3], "interval");

    // Two opposite unit observations: center 0, half-width (3 + 2)/2.
    let out = run(
        &[
            "stream",
            "--method",
            "ds",
            "--alpha",
            "0.5",
            "--sigma2",
            "1",
            "--schedule",
            "constant:1",
        ],
        "1\n-1\n",
    );
    let rows = data_rows(&out.stdout);
    assert_eq!(parse_set(&rows[1][1]).unwrap(), vec![(-2.5, 2.5)]);
}

#[test]
fn plain_self_normalized_set_is_the_full_line_at_t1() {
    let out = run(
        &["stream", "--method", "sn", "--alpha-split", "none"],
        "0\n",
    );
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);
    let rows = data_rows(&out.stdout);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][1], "-inf:inf");
    assert_eq!(rows[0][2], "inf");
    assert_eq!(rows[0][3], "line");

    // The runner's default companion split keeps the same input bounded.
    let out = run(&["stream", "--method", "sn"], "0\n");
    let rows = data_rows(&out.stdout);
    assert_eq!(rows[0][3], "interval");
}

#[test]
fn empty_and_comment_only_input_yield_header_only() {
    for input in ["", "# just a header\n\n   \n"] {
        let out = run(&["stream", "--method", "catoni"], input);
        assert_eq!(out.code, 0);
        assert_eq!(out.stdout, "t,set,width,kind\n");
    }
}

#[test]
fn stitchplan_rows_match_the_plan_and_sum_below_alpha() {
    let out = run(&["stitchplan", "--alpha", "0.05", "--max-epoch", "3"], "");
    assert_eq!(out.code, 0);
    let rows = data_rows(&out.stdout);
    assert_eq!(rows.len(), 4);
    let plan = StitchPlan::new(0.05, 3).unwrap();
    let mut level_sum = 0.0;
    for (j, row) in rows.iter().enumerate() {
        assert_eq!(row[0], j.to_string());
        assert_eq!(row[1], (1u64 << j).to_string());
        let alpha_j = parse_float(&row[2]).unwrap();
        let lambda_j = parse_float(&row[3]).unwrap();
        assert_eq!(alpha_j, plan.alpha_j(j as u32));
        assert_eq!(lambda_j, plan.lambda_j(j as u32));
        level_sum += alpha_j;
    }
    assert!(level_sum < 0.05, "epoch levels sum to {level_sum}");
}

#[test]
fn csv_rows_reparse_to_identical_text() {
    let input = "0.4\n-1.3\n0.9\n0.1\n-0.6\n2.2\n-0.8\n0.05\n1.7\n-2.4\n0.3\n0.0\n";
    let out = run(&["stream", "--method", "catoni", "--alpha", "0.05"], input);
    assert_eq!(out.code, 0);
    let rows = data_rows(&out.stdout);
    assert_eq!(rows.len(), 12);
    for row in &rows {
        for (lo, hi) in parse_set(&row[1]).unwrap() {
            let piece = format!("{}:{}", fmt_float(lo), fmt_float(hi));
            assert!(row[1].contains(&piece), "reprint of {} drifted", row[1]);
        }
        let width = parse_float(&row[2]).unwrap();
        assert_eq!(fmt_float(width), row[2]);
    }
}

#[test]
fn jsonl_stream_rows_are_valid_records() {
    let out = run(
        &["stream", "--method", "catoni", "--format", "jsonl"],
        "0.5\n-0.2\n0.8\n",
    );
    assert_eq!(out.code, 0);
    let lines: Vec<&str> = out.stdout.lines().collect();
    assert_eq!(lines.len(), 3);
    for (i, line) in lines.iter().enumerate() {
        let rec: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(rec["t"], (i + 1) as u64);
        let set = rec["set"].as_str().unwrap();
        assert!(!parse_set(set).unwrap().is_empty());
        parse_float(rec["width"].as_str().unwrap()).unwrap();
        assert_eq!(rec["kind"], "interval");
    }
}

#[test]
fn malformed_row_aborts_with_row_number() {
    let out = run(&["stream", "--method", "catoni"], "0\nbananas\n0.5\n");
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("row 2"), "stderr: {}", out.stderr);
    assert!(out.stderr.contains("bananas"));
    // The first row was already emitted before the bad one aborted the run.
    assert_eq!(data_rows(&out.stdout).len(), 1);
}

#[test]
fn set_evaluation_errors_flag_rows_and_exit_nonzero() {
    // The fixed-sample reference needs t > 2 ln(2/alpha) ~ 7.4, so three
    // rows produce three diagnostics and no sets.
    let out = run(
        &["stream", "--method", "catoni-ci", "--alpha", "0.05"],
        "1.0\n-0.5\n0.3\n",
    );
    assert_eq!(out.code, 1);
    assert_eq!(data_rows(&out.stdout).len(), 0);
    let diagnostics = out
        .stdout
        .lines()
        .filter(|l| l.starts_with("# row"))
        .count();
    assert_eq!(diagnostics, 3);
}

#[test]
fn heteroscedastic_rows_must_carry_sigma() {
    let out = run(
        &["stream", "--method", "catoni", "--heteroscedastic"],
        "1.0,2.0\n0.5\n",
    );
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("sigma_t"), "stderr: {}", out.stderr);
    assert!(out.stderr.contains("state:"));
}

#[test]
fn p_mode_takes_v_rows_and_requires_a_bound() {
    let out = run(
        &["stream", "--method", "p-catoni", "--p", "1.5", "--v", "5"],
        "0.4,5.0\n-1.2\n0.7,4.0\n",
    );
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);
    assert_eq!(data_rows(&out.stdout).len(), 3);

    let out = run(&["stream", "--method", "p-catoni", "--p", "1.5"], "0.4\n");
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("--v"), "stderr: {}", out.stderr);
}

#[test]
fn intersect_stream_shrinks_monotonically() {
    let input = "2.0\n-1.0\n0.5\n1.5\n-0.3\n0.9\n-1.7\n0.2\n1.1\n-0.4\n";
    let out = run(&["stream", "--method", "sn", "--intersect"], input);
    assert_eq!(out.code, 0);
    let rows = data_rows(&out.stdout);
    assert_eq!(rows.len(), 10);
    let mut prev: Option<(f64, f64, f64)> = None;
    for row in &rows {
        let set = parse_set(&row[1]).unwrap();
        let lo = set.first().unwrap().0;
        let hi = set.last().unwrap().1;
        let width = parse_float(&row[2]).unwrap();
        if let Some((plo, phi, pwidth)) = prev {
            assert!(
                lo >= plo && hi <= phi,
                "hull grew: ({plo},{phi}) -> ({lo},{hi})"
            );
            assert!(width <= pwidth, "width grew: {pwidth} -> {width}");
        }
        prev = Some((lo, hi, width));
    }
}

#[test]
fn coverage_jsonl_equals_the_library_report() {
    let seed = 0x5eed_c001u64;
    let out = run(
        &[
            "coverage",
            "--method",
            "ds",
            "--family",
            "gaussian",
            "--alpha",
            "0.2",
            "--sigma2",
            "1",
            "--horizon",
            "300",
            "--reps",
            "100",
            "--seed",
            &seed.to_string(),
            "--format",
            "jsonl",
        ],
        "",
    );
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);
    let mut from_cli: heavycs_sim::ExperimentReport =
        serde_json::from_str(out.stdout.trim()).unwrap();
    let spec = GeneratorSpec::gaussian(1.0, seed);
    let mut direct = run_coverage(heavycs::Method::Ds, &spec, 300, 100, 0.2).unwrap();
    from_cli.runtime_ms = 0;
    direct.runtime_ms = 0;
    assert_eq!(from_cli, direct);
}

#[test]
fn widths_grid_has_one_column_per_method_and_matches_the_closed_form() {
    let out = run(
        &[
            "widths",
            "--methods",
            "ds,catoni",
            "--alphas",
            "0.1,0.05",
            "--family",
            "gaussian",
            "--sigma2",
            "25",
            "--horizon",
            "8",
            "--reps",
            "3",
            "--seed",
            "11",
        ],
        "",
    );
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);
    assert_eq!(out.stdout.lines().next().unwrap(), "t,alpha,ds,catoni");
    let rows = data_rows(&out.stdout);
    // t grid {1, 2, 4, 8} crossed with both levels.
    assert_eq!(rows.len(), 8);
    for row in &rows {
        let t: u64 = row[0].parse().unwrap();
        let alpha = parse_float(&row[1]).unwrap();
        let ds_width = parse_float(&row[2]).unwrap();
        let catoni_width = parse_float(&row[3]).unwrap();
        assert!(ds_width.is_finite() && ds_width > 0.0);
        assert!(catoni_width.is_finite() && catoni_width > 0.0);
        // The first family's width is replication-constant, so the median
        // over any number of runs equals the closed form.
        assert_relative_eq!(
            ds_width,
            2.0 * ds_tuned_half_width(t, alpha, 25.0),
            max_relative = 1e-12
        );
    }

    let jsonl = run(
        &[
            "widths",
            "--methods",
            "ds,catoni",
            "--alphas",
            "0.1,0.05",
            "--family",
            "gaussian",
            "--sigma2",
            "25",
            "--horizon",
            "8",
            "--reps",
            "3",
            "--seed",
            "11",
            "--format",
            "jsonl",
        ],
        "",
    );
    let reports: Vec<heavycs_sim::ExperimentReport> = jsonl
        .stdout
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(reports.len(), 2);
    assert_eq!(reports[0].method, "ds");
    assert_eq!(reports[1].method, "catoni");
    assert_eq!(reports[0].widths.len(), 8);
}

#[test]
fn crossing_self_comparison_has_unit_ratio() {
    let out = run(
        &[
            "crossing",
            "--method",
            "catoni",
            "--method-b",
            "catoni",
            "--family",
            "gaussian",
            "--sigma2",
            "1",
            "--mean",
            "1.0",
            "--threshold",
            "0",
            "--horizon",
            "500",
            "--reps",
            "6",
            "--seed",
            "3",
        ],
        "",
    );
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);
    let rows = data_rows(&out.stdout);
    assert_eq!(rows.len(), 6);
    for row in &rows {
        assert_eq!(row[2], row[3], "same method, same stream, same crossing");
        assert!(!row[2].is_empty(), "crossing should happen well before 500");
    }
    let ratio_line = out
        .stdout
        .lines()
        .find(|l| l.starts_with("# crossing_ratio="))
        .unwrap();
    assert_eq!(
        parse_float(ratio_line.trim_start_matches("# crossing_ratio=")).unwrap(),
        1.0
    );
}

#[test]
fn randomized_subcommands_require_a_seed() {
    for args in [
        vec!["coverage", "--method", "ds"],
        vec!["widths", "--methods", "ds"],
        vec!["crossing"],
    ] {
        let out = run(&args, "");
        assert_eq!(out.code, 2, "{args:?} should fail without --seed");
        assert!(out.stderr.contains("--seed"), "stderr: {}", out.stderr);
    }
}

#[test]
fn input_and_output_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let input_path = dir.path().join("stream.txt");
    let output_path = dir.path().join("sets.csv");
    std::fs::write(&input_path, "# sensor dump\n0.4\n-1.3\n0.9\n").unwrap();
    let out = run(
        &[
            "stream",
            "--method",
            "catoni",
            "--input",
            input_path.to_str().unwrap(),
            "--output",
            output_path.to_str().unwrap(),
        ],
        "",
    );
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);
    assert!(out.stdout.is_empty());
    let written = std::fs::read_to_string(&output_path).unwrap();
    assert_eq!(written.lines().next().unwrap(), "t,set,width,kind");
    assert_eq!(written.lines().count(), 4);

    // The same stream piped through stdin/stdout produces identical bytes.
    let piped = run(&["stream", "--method", "catoni"], "0.4\n-1.3\n0.9\n");
    assert_eq!(piped.stdout, written);
}
