use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const HEADER: &str = "protocol,pause_time,seed,sent,received,pdf_percent,avg_delay_s,throughput_kbps,routing_pkts,routing_bytes,drop_nrte,drop_ifq,drop_ttl,drop_col,drop_end";

fn cli(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_manet-sim"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn small_config(dir: &Path) {
    fs::write(dir.join("s.cfg"), "# short run\nnodes = 8\nhorizon = 20\nflows = 2\n").unwrap();
}

#[test]
fn run_prints_a_row_and_writes_the_trace() {
    let d = tempfile::tempdir().unwrap();
    small_config(d.path());
    let out = cli(d.path(), &["run", "--config", "s.cfg", "--protocol", "dsdv", "pause_time=5", "--trace", "t.tr"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], HEADER);
    assert!(lines[1].starts_with("dsdv,5,1,"), "{}", lines[1]);
    let trace = fs::read_to_string(d.path().join("t.tr")).unwrap();
    assert!(trace.lines().any(|l| l.contains(" RTR dsdv ")));
}

#[test]
fn run_is_reproducible() {
    let d = tempfile::tempdir().unwrap();
    small_config(d.path());
    let a = cli(d.path(), &["run", "--config", "s.cfg", "--trace", "a.tr"]);
    let b = cli(d.path(), &["run", "--config", "s.cfg", "--trace", "b.tr"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(fs::read(d.path().join("a.tr")).unwrap(), fs::read(d.path().join("b.tr")).unwrap());
}

#[test]
fn config_errors_exit_1_and_name_the_key() {
    let d = tempfile::tempdir().unwrap();
    small_config(d.path());
    for (args, key) in [
        (vec!["run", "--config", "s.cfg", "--nodes", "0"], "nodes"),
        (vec!["run", "--config", "s.cfg", "--colour", "red"], "colour"),
        (vec!["sweep", "--config", "s.cfg", "--seeds", "5..1"], "--seeds"),
        (vec!["sweep", "--config", "s.cfg", "--protocols", "olsr"], "--protocols"),
        (vec!["run", "--config", "missing.cfg"], "missing.cfg"),
    ] {
        let out = cli(d.path(), &args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert!(err.contains(key), "{args:?}: {err}");
    }
    assert_eq!(cli(d.path(), &["launch"]).status.code(), Some(1));
}

#[test]
fn sweep_writes_rows_summaries_and_traces() {
    let d = tempfile::tempdir().unwrap();
    small_config(d.path());
    let out = cli(
        d.path(),
        &["sweep", "--config", "s.cfg", "--pauses", "10,0", "--seeds", "1..2", "--protocols", "dsdv,aodv", "--out", "r.csv", "--trace-dir", "traces"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(d.path().join("r.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], HEADER);
    assert_eq!(lines.len(), 1 + 8 + 4);
    let keys: Vec<String> = lines[1..].iter().map(|l| l.split(',').take(3).collect::<Vec<_>>().join(",")).collect();
    assert_eq!(
        keys,
        [
            "aodv,0,1", "aodv,0,2", "aodv,10,1", "aodv,10,2", "dsdv,0,1", "dsdv,0,2", "dsdv,10,1", "dsdv,10,2",
            "aodv,0,mean", "aodv,10,mean", "dsdv,0,mean", "dsdv,10,mean",
        ]
    );
    assert_eq!(fs::read_dir(d.path().join("traces")).unwrap().count(), 8);
    assert!(d.path().join("traces/aodv_pause10_seed2.tr").exists());
}

#[test]
fn single_cell_sweep() {
    let d = tempfile::tempdir().unwrap();
    small_config(d.path());
    let out = cli(d.path(), &["sweep", "--config", "s.cfg", "--pauses", "0", "--seeds", "3", "--protocols", "aodv", "--out", "one.csv"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(d.path().join("one.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| !l.contains(",mean,")).count(), 2);
}

#[test]
fn io_failure_exits_2() {
    let d = tempfile::tempdir().unwrap();
    small_config(d.path());
    let out = cli(d.path(), &["run", "--config", "s.cfg", "--trace", "no/such/dir/t.tr"]);
    assert_eq!(out.status.code(), Some(2));
    let out = cli(d.path(), &["sweep", "--config", "s.cfg", "--seeds", "1", "--pauses", "0", "--out", "no/such/dir/r.csv"]);
    assert_eq!(out.status.code(), Some(2));
}
