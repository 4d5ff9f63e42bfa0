//! Black-box tests of the `wallet` binary: exit-code contract, amount
//! parsing, cross-process persistence, and simulation determinism.

use std::path::Path;
use std::process::{Command, Output};

fn wallet(state_dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wallet"))
        .arg("--state-dir")
        .arg(state_dir)
        .args(args)
        .env_remove("GW_FAIL_NEXT_K")
        .env_remove("GW_FAIL_PROB")
        .env_remove("GW_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("exit code")
}

fn setup_alice(dir: &Path) {
    let created = wallet(
        dir,
        &["customer", "create", "--customer", "alice", "--options", "stocks,realEstate,bonds,crypto"],
    );
    assert_eq!(code(&created), 0, "{}", String::from_utf8_lossy(&created.stderr));
    let policy = wallet(
        dir,
        &["policy", "set", "--customer", "alice", "--alloc", "stocks=5000,realEstate=3000,bonds=1500,crypto=500"],
    );
    assert_eq!(code(&policy), 0);
}

#[test]
fn exit_codes_cover_the_outcome_lanes() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    setup_alice(dir);

    // 0: success
    let ok = wallet(dir, &["deposit", "--customer", "alice", "--amount", "100.00"]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(stdout(&ok).contains("completed"));

    // 2: permanent validation failure
    let overdraw = wallet(dir, &["withdraw", "--customer", "alice", "--amount", "999999.00"]);
    assert_eq!(code(&overdraw), 2);
    assert!(stdout(&overdraw).contains("insufficient-funds"));

    // 3: transient failure (gateway down for longer than the retry budget)
    let transient = wallet(
        dir,
        &["--gw-fail-next-k", "5", "withdraw", "--customer", "alice", "--amount", "1.00"],
    );
    assert_eq!(code(&transient), 3);

    // 4: usage error, reported on stderr
    let usage = wallet(dir, &["deposit", "--customer", "alice", "--amount", "1.234"]);
    assert_eq!(code(&usage), 4);
    assert!(String::from_utf8_lossy(&usage.stderr).contains("malformed amount"));

    let unknown_flag = wallet(dir, &["deposit", "--nope"]);
    assert_eq!(code(&unknown_flag), 4);

    // unknown customer is a domain failure, not a usage error
    let ghost = wallet(dir, &["deposit", "--customer", "ghost", "--amount", "1.00"]);
    assert_eq!(code(&ghost), 2);
}

#[test]
fn gateway_env_vars_mirror_the_flags() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    setup_alice(dir);

    let output = Command::new(env!("CARGO_BIN_EXE_wallet"))
        .arg("--state-dir")
        .arg(dir)
        .args(["deposit", "--customer", "alice", "--amount", "2.00"])
        .env("GW_FAIL_NEXT_K", "5")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3), "env-configured faults apply");
}

#[test]
fn negative_amounts_parse_and_fail_validation() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    setup_alice(dir);
    let output = wallet(dir, &["deposit", "--customer", "alice", "--amount=-5"]);
    assert_eq!(code(&output), 2, "validation failure, not usage");
    assert!(stdout(&output).contains("non-positive-amount"));
}

#[test]
fn state_survives_across_processes() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    setup_alice(dir);
    wallet(dir, &["deposit", "--customer", "alice", "--amount", "55.25"]);

    let balance = wallet(dir, &["balance", "--customer", "alice"]);
    assert!(stdout(&balance).contains("55.25"));

    // export, then read it back through a different state dir
    let snapshot = dir.join("snapshot");
    let exported = wallet(dir, &["state", "export", "--dir", snapshot.to_str().unwrap()]);
    assert_eq!(code(&exported), 0);

    let other = dir.join("other-state");
    let imported = wallet(&other, &["state", "import", "--dir", snapshot.to_str().unwrap()]);
    assert_eq!(code(&imported), 0);

    let original = wallet(dir, &["balance", "--customer", "alice", "--json"]);
    let roundtrip = wallet(&other, &["balance", "--customer", "alice", "--json"]);
    assert_eq!(stdout(&original), stdout(&roundtrip));

    let dump_a = wallet(dir, &["ledger", "dump"]);
    let dump_b = wallet(&other, &["ledger", "dump"]);
    assert_eq!(stdout(&dump_a), stdout(&dump_b));
}

#[test]
fn tampered_state_is_rejected_on_load() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    setup_alice(dir);
    wallet(dir, &["deposit", "--customer", "alice", "--amount", "10.00"]);

    let ledger_path = dir.join("ledger.jsonl");
    let tampered = std::fs::read_to_string(&ledger_path)
        .unwrap()
        .replacen("1000", "1001", 1);
    std::fs::write(&ledger_path, tampered).unwrap();

    let output = wallet(dir, &["balance", "--customer", "alice"]);
    assert_eq!(code(&output), 2);
    assert!(String::from_utf8_lossy(&output.stderr).contains("corrupt state"));
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    let a = wallet(dir, &["simulate", "--seed", "42", "--ops", "400", "--json"]);
    let b = wallet(dir, &["simulate", "--seed", "42", "--ops", "400", "--json"]);
    assert_eq!(code(&a), 0);
    assert_eq!(stdout(&a), stdout(&b), "same seed, byte-identical report");

    let c = wallet(dir, &["simulate", "--seed", "43", "--ops", "400", "--json"]);
    assert_ne!(stdout(&a), stdout(&c));
}

#[test]
fn settle_respects_the_holiday_file() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    setup_alice(dir);
    let holidays = dir.join("holidays.txt");
    std::fs::write(&holidays, "2025-01-06\n").unwrap();

    wallet(
        dir,
        &["--now", "2025-01-03T08:00:00Z", "deposit", "--customer", "alice", "--amount", "10.00"],
    );
    wallet(
        dir,
        &["--now", "2025-01-03T09:00:00Z", "invest", "--customer", "alice", "--amount", "10.00"],
    );

    // Monday is a holiday: nothing settles
    let monday = wallet(
        dir,
        &["--holidays", holidays.to_str().unwrap(), "settle", "--date", "2025-01-06"],
    );
    assert!(stdout(&monday).contains("settled 0 request(s)"));

    // Tuesday settles
    let tuesday = wallet(
        dir,
        &["--holidays", holidays.to_str().unwrap(), "settle", "--date", "2025-01-07"],
    );
    assert!(stdout(&tuesday).contains("settled 1 request(s)"));
}
