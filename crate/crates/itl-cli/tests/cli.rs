//! End-to-end checks of the `itl` binary: subcommands, exit codes, outputs.

use std::fs;
use std::path::Path;
use std::process::Command;

use tempfile::tempdir;

const BUSES: &str = "\
id,zone,type,lat,lon
A,1,,,
B,1,,,
C,1,,,
D,2,,,
E,3,,,
";

const LINES: &str = "\
id,from,to,reactance_pu,rating_mw,voltage_kv,kind,is_dc
A|B,A,B,0.0281,400,230,line,false
A|D,A,D,0.0304,400,230,line,false
A|E,A,E,0.0064,400,230,line,false
B|C,B,C,0.0108,400,230,line,false
C|D,C,D,0.0297,400,230,line,false
D|E,D,E,0.0297,240,230,line,false
";

fn write_fixture(dir: &Path, config_extra: &str) {
    fs::write(dir.join("buses.csv"), BUSES).unwrap();
    fs::write(dir.join("lines.csv"), LINES).unwrap();
    fs::write(
        dir.join("run.conf"),
        format!("buses = buses.csv\nlines = lines.csv\noutput_dir = out\n{config_extra}"),
    )
    .unwrap();
}

fn itl() -> Command {
    Command::new(env!("CARGO_BIN_EXE_itl"))
}

#[test]
fn run_writes_outputs_and_exits_zero() {
    let dir = tempdir().unwrap();
    write_fixture(dir.path(), "run_n1 = true\n");
    let output = itl()
        .args(["run", "--config"])
        .arg(dir.path().join("run.conf"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let itl_csv = fs::read_to_string(dir.path().join("out/itl.csv")).unwrap();
    assert!(itl_csv.starts_with("interface,direction,level,itl_mw"));
    assert!(itl_csv.contains("2||3,forward,n0,240.000"));
    assert!(dir.path().join("out/stats.csv").exists());
    assert!(dir.path().join("out/run_manifest.json").exists());
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("3 interfaces"));
}

#[test]
fn validate_reports_success() {
    let dir = tempdir().unwrap();
    write_fixture(dir.path(), "");
    let output = itl()
        .args(["validate", "--config"])
        .arg(dir.path().join("run.conf"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    assert!(String::from_utf8(output.stdout).unwrap().contains("valid"));
}

#[test]
fn validate_rejects_broken_network_with_exit_one() {
    let dir = tempdir().unwrap();
    write_fixture(dir.path(), "");
    // Orphan an endpoint: drop bus E while keeping its lines.
    fs::write(
        dir.path().join("buses.csv"),
        "id,zone,type,lat,lon\nA,1,,,\nB,1,,,\nC,1,,,\nD,2,,,\n",
    )
    .unwrap();
    let output = itl()
        .args(["validate", "--config"])
        .arg(dir.path().join("run.conf"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("error:"), "{stderr}");
}

#[test]
fn missing_config_file_is_fatal() {
    let output = itl()
        .args(["run", "--config", "/nonexistent/run.conf"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn ptdf_dumps_matrix_to_stdout() {
    let dir = tempdir().unwrap();
    write_fixture(dir.path(), "");
    let output = itl()
        .args(["ptdf", "--slack", "A", "--config"])
        .arg(dir.path().join("run.conf"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.starts_with("line,A,B,C,D,E"));
    assert!(stdout.contains("A|B,0.000000,-0.66"));
}

#[test]
fn ptdf_with_unknown_slack_is_fatal() {
    let dir = tempdir().unwrap();
    write_fixture(dir.path(), "");
    let output = itl()
        .args(["ptdf", "--slack", "Z", "--config"])
        .arg(dir.path().join("run.conf"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
}
