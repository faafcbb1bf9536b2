use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn otalink(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_otalink"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

const SWEEP: &str = r#"
sweep_variable = "target_sinr_db"
start = 0.0
stop = 20.0
step = 10.0
repeats = 3
modulation_orders = [4, 16]
master_seed = 3
"#;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn sweep_writes_table_and_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sweep.toml", SWEEP);
    let out = dir.path().join("rows.csv");
    let plots = dir.path().join("plots");
    let o = otalink(&[
        "sweep",
        "-c",
        &cfg,
        "-o",
        out.to_str().unwrap(),
        "--plot-data",
        plots.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(&out).unwrap();
    assert!(table.starts_with("# otalink sweep_rows v1\n"));
    assert_eq!(table.lines().count(), 2 + 3 * 3 * 2);
    for name in [
        "evm_vs_inv_sqrt_sinr.csv",
        "channel_power_vs_sweep.csv",
        "budget_table.csv",
    ] {
        let text = fs::read_to_string(plots.join(name)).unwrap();
        assert!(text.starts_with("# otalink "), "{name}");
        assert!(text.lines().count() > 2, "{name}");
    }

    let fits = otalink(&["fit", "-i", out.to_str().unwrap()]);
    assert_eq!(code(&fits), 0);
    let text = String::from_utf8(fits.stdout).unwrap();
    assert!(text
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("order,a,r_squared"));
    assert_eq!(text.lines().count(), 4);

    let summary = otalink(&[
        "summarize",
        "-i",
        out.to_str().unwrap(),
        "--by",
        "sweep_value",
    ]);
    assert_eq!(code(&summary), 0);
    assert_eq!(
        String::from_utf8(summary.stdout).unwrap().lines().count(),
        5
    );
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.toml",
        &format!("{SWEEP}colour = \"blue\"\n"),
    );
    let o = otalink(&["sweep", "-c", &cfg]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
}

#[test]
fn invalid_config_value_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.toml",
        &SWEEP.replace("repeats = 3", "repeats = 0"),
    );
    assert_eq!(code(&otalink(&["sweep", "-c", &cfg])), 2);
}

#[test]
fn all_rows_skipped_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "{}noise_power_dbm = 0.0\n[channel]\nmodel = \"fixed\"\nh11 = [1.0, 0.0]\nh12 = [0.0, 0.0]\n",
        SWEEP.replace("start = 0.0", "start = 30.0").replace("stop = 20.0", "stop = 50.0")
    );
    let cfg = write(dir.path(), "hot.toml", &text);
    let out = dir.path().join("rows.csv");
    let o = otalink(&["sweep", "-c", &cfg, "-o", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(fs::read_to_string(out)
        .unwrap()
        .contains("skipped_infeasible"));
}

#[test]
fn missing_files_and_columns_are_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    assert_eq!(code(&otalink(&["fit", "-i", missing.to_str().unwrap()])), 4);
    assert_eq!(
        code(&otalink(&["sweep", "-c", missing.to_str().unwrap()])),
        4
    );

    let broken = write(
        dir.path(),
        "broken.csv",
        "# otalink sweep_rows v1\nsweep_value,order\n1,4\n",
    );
    let o = otalink(&["summarize", "-i", &broken]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("repeat_index"));
}

#[test]
fn budget_from_repeat_log() {
    let dir = tempfile::tempdir().unwrap();
    let log = write(
        dir.path(),
        "log.csv",
        "group,channel_power\na,2.0\na,2.0\nb,1.9\nb,2.1\n",
    );
    let o = otalink(&["budget", "-i", &log]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.contains(",0.92"));

    let bad = write(dir.path(), "bad.csv", "group,power\na,1\n");
    let o = otalink(&["budget", "-i", &bad]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("channel_power"));
}

#[test]
fn stbc_subcommand_prints_rows() {
    let o = otalink(&[
        "stbc",
        "--order",
        "16",
        "--subframes",
        "3",
        "--sinr-db",
        "15",
        "--seed",
        "9",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().skip(2).all(|l| l.contains(",ok,")));

    assert_eq!(code(&otalink(&["stbc", "--order", "8"])), 2);
}
