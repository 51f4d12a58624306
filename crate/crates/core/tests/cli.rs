use std::process::{Command, Output};

fn itsplit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_itsplit")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn gen_matrices_prints_both_blocks() {
    let o = itsplit(&["gen-matrices"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let blocks: Vec<&str> = text.trim_end().split("\n\n").collect();
    assert_eq!(blocks.len(), 2);
    let rows: Vec<&str> = blocks[0].lines().collect();
    assert_eq!(rows.len(), 10);
    let row4: Vec<f64> = rows[3].split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(row4, [0.01, 0.01, 0.01, -0.03, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    // B reverses A in both indices
    let b_last: Vec<f64> = blocks[1].lines().last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(b_last, [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.01, -0.01]);
}

#[test]
fn solve_reports_state_and_error() {
    let o = itsplit(&["solve", "--example", "integro", "--tau", "0.1", "--sweeps", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 12);
    assert!(lines[0].starts_with("# integro twoside"));
    assert!(lines[11].starts_with("# oracle=integro_direct"));
    for l in &lines[1..11] {
        let (re, im) = l.split_once(',').unwrap();
        assert!((re.parse::<f64>().unwrap() - 1.0).abs() < 1e-10);
        assert!(im.parse::<f64>().unwrap().abs() < 1e-10);
    }
}

#[test]
fn exit_codes() {
    assert_eq!(itsplit(&["--help"]).status.code(), Some(0));
    assert_eq!(itsplit(&["solve", "--tau", "abc"]).status.code(), Some(1));
    assert_eq!(itsplit(&["solve", "--tau", "0.3"]).status.code(), Some(1));
    assert_eq!(itsplit(&["solve", "--schemes", "nope"]).status.code(), Some(1));
    assert_eq!(itsplit(&["gen-matrices", "--dim", "2"]).status.code(), Some(1));
    let o = itsplit(&[
        "solve",
        "--initial",
        "consistent",
        "--schemes",
        "oneside-a",
        "--sweeps",
        "1",
        "--max-error",
        "1e-12",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("exceeds bound"));
    let o = itsplit(&["solve", "--initial", "consistent", "--max-error", "1e-2"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn bench_writes_full_grid() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let o = itsplit(&["bench", "--tau", "0.1,0.05,0.025", "--sweeps", "1:6", "--out", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), itsplit_core::harness::CSV_HEADER);
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3 * 3 * 6);
    for r in rows {
        let cols: Vec<&str> = r.split(',').collect();
        assert_eq!(cols.len(), 10);
        assert_eq!(cols[0], "integro");
        assert_eq!(cols[2], "n/a");
        assert_eq!(cols[9], "integro_direct");
    }
}

#[test]
fn print_spec_round_trips() {
    let args = [
        "bench",
        "--example",
        "third-order",
        "--root-set",
        "paper-literal",
        "--tau",
        "0.1,0.05",
        "--sweeps",
        "2,4",
        "--schemes",
        "twoside,twoside-fused",
        "--initial",
        "ramp",
        "--print-spec",
    ];
    let first = stdout(&itsplit(&args));
    let flags: Vec<&str> = first.split_whitespace().collect();
    let mut again = vec!["bench"];
    again.extend(&flags);
    again.push("--print-spec");
    let second = stdout(&itsplit(&again));
    assert_eq!(first, second);
    let spec = itsplit_core::cli::parse_bench_spec(flags.iter().map(|s| s.to_string()).collect::<Vec<_>>()).unwrap();
    assert_eq!(spec.taus, [0.1, 0.05]);
    assert_eq!(spec.sweeps, [2, 4]);
}
