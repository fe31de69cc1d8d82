use std::path::Path;
use std::process::{Command, Output};

fn mocapval(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mocapval"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

const FLIP_ROWS: &str = "time_s,x_deg,y_deg,z_deg
0,67.41,0,-80.14
0.015,78.76,0,-80.76
0.03,88.37,-180,99.41
0.045,76.19,180,100.01
0.06,67.74,-180,100.7
0.075,61.37,180,101.43
0.09,56.43,-180,102.16
0.105,52.25,-180,102.9
";

#[test]
fn synth_angles_compare_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = mocapval(
        &[
            "synth",
            "--out",
            "data",
            "--seed",
            "5",
            "--amplitude",
            "75",
            "--repetitions",
            "3",
        ],
        d,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["reference.jsonl", "estimated.jsonl", "truth.csv"] {
        assert!(d.join("data").join(f).exists());
    }

    let o = mocapval(
        &[
            "angles",
            "data/estimated.jsonl",
            "--reference",
            "data/reference.jsonl",
            "--out",
            "est.csv",
        ],
        d,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let o = mocapval(
        &[
            "compare",
            "data/truth.csv",
            "est.csv",
            "--exercise",
            "squat",
            "--plot",
            "dev.svg",
        ],
        d,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = String::from_utf8(o.stdout).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("joint,exercise,median_deg,average_deg,maximum_deg,samples,gaps")
    );
    assert!(lines
        .next()
        .unwrap()
        .starts_with("knee_right,squat,0.00,0.00,0.00,"));
    let svg = std::fs::read_to_string(d.join("dev.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);

    let o = mocapval(
        &[
            "validate",
            "data/reference.jsonl",
            "data/truth.csv",
            "est.csv",
        ],
        d,
    );
    assert_eq!(code(&o), 0);
}

#[test]
fn text_report_names_mode_and_repair() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("ref.csv"),
        "time_s,knee_right_x,knee_right_y,knee_right_z\n0,10,0,5\n0.1,12,0,6\n",
    )
    .unwrap();
    std::fs::write(d.join("cand.csv"), "time_s,knee_right\n0,6\n0.1,6\n").unwrap();
    let o = mocapval(
        &[
            "compare",
            "ref.csv",
            "cand.csv",
            "--format",
            "text",
            "--mode",
            "self-consistency",
            "--canonicalize",
        ],
        d,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(
        text.starts_with("mode: self-consistency, reference angles: repaired"),
        "{text}"
    );
    let row: Vec<&str> = text.lines().last().unwrap().split_whitespace().collect();
    assert_eq!(row[..5], ["knee_right", "unknown", "0.50", "0.50", "1.00"]);
}

#[test]
fn anomalies_find_and_repair_the_flip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("e.csv"), FLIP_ROWS).unwrap();
    let o = mocapval(
        &[
            "anomalies",
            "e.csv",
            "--canonicalize",
            "--repaired",
            "fixed.csv",
        ],
        d,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let events = String::from_utf8(o.stdout).unwrap();
    assert_eq!(events.lines().count(), 2);
    assert!(events.lines().nth(1).unwrap().starts_with("1,0.015,0.03,"));
    assert!(events.contains("representation-flip"));
    let fixed = std::fs::read_to_string(d.join("fixed.csv")).unwrap();
    assert!(
        fixed
            .lines()
            .nth(3)
            .unwrap()
            .starts_with("0.03,91.63,0,-80.59"),
        "{fixed}"
    );

    let o = mocapval(&["anomalies", "e.csv", "--canonicalize"], d);
    assert_eq!(code(&o), 1);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.csv"), "time_s,a\n0,1\n0.1,oops\n").unwrap();
    let o = mocapval(&["validate", "bad.csv"], d);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    std::fs::write(d.join("a.csv"), "time_s,knee_right\n0,1\n1,2\n").unwrap();
    std::fs::write(d.join("b.csv"), "time_s,elbow_left\n0,1\n1,2\n").unwrap();
    let o = mocapval(&["compare", "a.csv", "b.csv"], d);
    assert_eq!(code(&o), 2);

    std::fs::write(d.join("late.csv"), "time_s,knee_right\n10,1\n11,2\n").unwrap();
    let o = mocapval(&["compare", "a.csv", "late.csv"], d);
    assert_eq!(code(&o), 2);

    let o = mocapval(
        &[
            "compare",
            "a.csv",
            "a.csv",
            "--group-by",
            "clothing",
            "--convention",
            "ZZY",
        ],
        d,
    );
    assert_eq!(code(&o), 1);

    let o = mocapval(
        &["compare", "a.csv", "a.csv", "--config", "missing.json"],
        d,
    );
    assert_eq!(code(&o), 1);
}

#[test]
fn manifest_pools_recordings() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("r1.csv"), "time_s,knee_right\n0,0\n1,0\n").unwrap();
    std::fs::write(d.join("c1.csv"), "time_s,knee_right\n0,1\n1,1\n").unwrap();
    std::fs::write(d.join("r2.csv"), "time_s,knee_right\n0,0\n").unwrap();
    std::fs::write(d.join("c2.csv"), "time_s,knee_right\n0,3\n").unwrap();
    let meta = |s: &str| {
        format!(
            r#"{{"subject":"{s}","exercise":"squat","camera_perspective_deg":0,"clothing":"x","repetitions":10}}"#
        )
    };
    std::fs::write(
        d.join("m.json"),
        format!(
            r#"[{{"reference":"r1.csv","candidate":"c1.csv","meta":{}}},{{"reference":"r2.csv","candidate":"c2.csv","meta":{}}}]"#,
            meta("a"),
            meta("b")
        ),
    )
    .unwrap();
    let o = mocapval(&["compare", "--manifest", "m.json"], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = String::from_utf8(o.stdout).unwrap();
    assert_eq!(
        csv.lines().nth(1),
        Some("knee_right,squat,1.00,1.67,3.00,3,0")
    );

    let o = mocapval(
        &["compare", "--manifest", "m.json", "--group-by", "subject"],
        d,
    );
    let csv = String::from_utf8(o.stdout).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.contains("squat|a") && csv.contains("squat|b"));
}
