use std::fs;
use std::path::{Path, PathBuf};

use fogtrace::cli::run;
use serde_json::Value;

struct Workspace {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

impl Output {
    fn records(&self) -> Vec<Value> {
        self.stdout.lines().map(|l| serde_json::from_str(l).unwrap_or_else(|e| panic!("{e}: {l}"))).collect()
    }
}

impl Workspace {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        Self { _dir: dir, root }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn run(&self, args: &[&str]) -> Output {
        let mut argv: Vec<String> = vec!["fogtrace".into()];
        for (flag, dir) in [("--chain", "data/chain.store"), ("--keys", "data/keys"), ("--regmap", "data/regmap")] {
            argv.push(flag.into());
            argv.push(self.path(dir).display().to_string());
        }
        argv.extend(args.iter().map(|s| s.to_string()));
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(argv, &mut out, &mut err);
        Output { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
    }

    fn ok(&self, args: &[&str]) -> Output {
        let out = self.run(args);
        assert_eq!(out.code, 0, "{args:?}\nstdout: {}\nstderr: {}", out.stdout, out.stderr);
        out
    }

    fn json(&self, args: &[&str]) -> Vec<Value> {
        let mut with_flag = vec!["--json-lines"];
        with_flag.extend_from_slice(args);
        self.ok(&with_flag).records()
    }

    fn addresses(&self, wallet: &str) -> (String, String) {
        let records = self.json(&["address", "--wallet", wallet]);
        let pick = |kind: &str| {
            records.iter().find(|r| r["kind"] == kind).unwrap()["address"].as_str().unwrap().to_string()
        };
        (pick("transparent"), pick("stealth"))
    }
}

fn read(path: &Path) -> Vec<u8> {
    fs::read(path).unwrap()
}

#[test]
fn usage_errors_exit_two() {
    let ws = Workspace::new();
    let out = ws.run(&["no-such-command"]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("Usage"), "{}", out.stderr);
    assert_eq!(ws.run(&["send", "--amount", "five"]).code, 2);
    assert_eq!(ws.run(&["trace", "--source", "1BoatSLRHtKNngkdXEeobR76b53LETtpyT", "--policy", "fuzzy"]).code, 2);
    let help = ws.run(&["--help"]);
    assert_eq!(help.code, 0);
    assert!(help.stdout.contains("anonymity-set"));
}

#[test]
fn scenario_is_byte_identical_across_runs() {
    let (a, b) = (Workspace::new(), Workspace::new());
    for ws in [&a, &b] {
        ws.ok(&["scenario", "--seed", "7", "--blocks", "5"]);
    }
    assert_eq!(read(&a.path("data/chain.store")), read(&b.path("data/chain.store")));
    assert_eq!(read(&a.path("data/ground_truth.jsonl")), read(&b.path("data/ground_truth.jsonl")));
    assert_eq!(read(&a.path("data/regmap/audit.jsonl")), read(&b.path("data/regmap/audit.jsonl")));
    let c = Workspace::new();
    c.ok(&["scenario", "--seed", "8", "--blocks", "5"]);
    assert_ne!(read(&a.path("data/chain.store")), read(&c.path("data/chain.store")));
}

#[test]
fn overspending_reports_insufficient_funds() {
    let ws = Workspace::new();
    ws.ok(&["keygen", "--wallet", "alice", "--seed", "alice"]);
    ws.ok(&["keygen", "--wallet", "bob", "--seed", "bob"]);
    let (alice, _) = ws.addresses("alice");
    let (bob, _) = ws.addresses("bob");
    ws.ok(&["init", "--pay", &format!("{alice}=50")]);
    let out = ws.run(&["send", "--wallet", "alice", "--to", &bob, "--amount", "80"]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("insufficient funds"), "{}", out.stderr);
    assert!(!Path::new(&format!("{}.mempool", ws.path("data/chain.store").display())).exists());
}

#[test]
fn ring_sign_then_verify() {
    let ws = Workspace::new();
    let vector = ws.path("vector.json");
    let v = vector.to_str().unwrap();
    ws.ok(&["ring-sign", "--message", "pay bob", "--ring-size", "3", "--signer", "1", "--bits", "128", "--out", v]);
    assert_eq!(ws.run(&["ring-verify", "--vector", v]).code, 0);
    let forged = ws.run(&["ring-verify", "--vector", v, "--message", "pay mallory"]);
    assert_eq!(forged.code, 1);
    let parsed: Value = serde_json::from_slice(&read(&vector)).unwrap();
    assert_eq!(parsed["ring_size"], 3);
    assert_eq!(parsed["domain_bits"], 144);
}

#[test]
fn payments_flow_through_mempool_and_blocks() {
    let ws = Workspace::new();
    ws.ok(&["keygen", "--wallet", "alice", "--seed", "alice"]);
    ws.ok(&["keygen", "--wallet", "bob", "--seed", "bob", "--count", "1"]);
    let (alice, alice_stealth) = ws.addresses("alice");
    let (bob, bob_stealth) = ws.addresses("bob");
    ws.ok(&["init", "--pay", &format!("{alice}=100"), "--pay", &format!("{bob_stealth}=40"), "--pay", &format!("{alice_stealth}=40")]);

    ws.ok(&["send", "--wallet", "alice", "--to", &bob, "--amount", "30", "--fee", "2"]);
    // The second payment must not reuse the pending input.
    ws.ok(&["send", "--wallet", "alice", "--to", &bob, "--amount", "10"]);
    ws.ok(&["send-shielded", "--wallet", "bob", "--to", &alice, "--amount", "15", "--decoys", "1"]);
    let mined = ws.json(&["mine"]);
    let summary = mined.last().unwrap();
    assert_eq!(summary["transactions"], 3);
    assert_eq!(summary["rejected"], 0);

    let bob_balance = ws.json(&["balance", "--wallet", "bob"]);
    assert_eq!(bob_balance.last().unwrap()["total"], "65");
    let alice_balance = ws.json(&["balance", "--address", &alice]);
    assert_eq!(alice_balance[0]["balance"], 58 + 15);

    let trace = ws.json(&["trace", "--source", &alice, "--dot", ws.path("graph.dot").to_str().unwrap()]);
    let summary = trace.last().unwrap();
    assert_eq!(summary["record"], "summary");
    assert!(fs::read_to_string(ws.path("graph.dot")).unwrap().starts_with("digraph"));
    let tainted: Vec<&str> = trace.iter().filter(|r| r["record"] == "taint").map(|r| r["address"].as_str().unwrap()).collect();
    assert!(tainted.contains(&bob.as_str()));

    // Double spend of the same note is refused at build time.
    let again = ws.run(&["send-shielded", "--wallet", "bob", "--note", "0", "--to", &alice, "--amount", "5", "--decoys", "1"]);
    assert_eq!(again.code, 1);
    assert!(again.stderr.contains("already been spent"), "{}", again.stderr);
}

#[test]
fn warrant_gated_reveal_narrows_anonymity_set() {
    let ws = Workspace::new();
    ws.ok(&["scenario", "--seed", "3", "--blocks", "4", "--shielded-ratio", "1.0", "--ring-size", "6"]);
    let truth = fs::read_to_string(ws.path("data/ground_truth.jsonl")).unwrap();
    let spend: Value = truth
        .lines()
        .map(|l| serde_json::from_str::<Value>(l).unwrap())
        .find(|r| !r["true_note"].is_null())
        .unwrap();
    let (txid, note, sender) =
        (spend["txid"].as_str().unwrap(), spend["true_note"].as_u64().unwrap(), spend["sender"].as_str().unwrap());

    let set = ws.json(&["anonymity-set", "--tx", txid]);
    assert_eq!(set.last().unwrap()["size"], 6);

    let subject = format!("note:{note}");
    let refused = ws.run(&["regmap-reveal", "--subject", &subject]);
    assert_eq!(refused.code, 1);
    assert!(refused.stderr.contains("warrant"), "{}", refused.stderr);

    let warrant = ws.path("warrant.json");
    let w = warrant.to_str().unwrap();
    ws.ok(&["warrant-issue", "--authorizer", "court", "--scope", &subject, "--expiry", "1000", "--out", w]);
    let revealed = ws.json(&["regmap-reveal", "--subject", &subject, "--warrant", w]);
    assert_eq!(revealed[0]["real_identity"], sender);

    let narrowed = ws.json(&["anonymity-set", "--tx", txid, "--suspect", sender]);
    assert_eq!(narrowed.last().unwrap()["size"], 1);
    assert_eq!(ws.json(&["audit-verify"])[0]["verdict"], "intact");
}

#[test]
fn audit_verify_flags_tampering() {
    let ws = Workspace::new();
    ws.ok(&["scenario", "--seed", "5", "--blocks", "2"]);
    let log_path = ws.path("data/regmap/audit.jsonl");
    let text = fs::read_to_string(&log_path).unwrap();
    let count = text.lines().count() as u64;
    ws.ok(&["audit-verify", "--declared", &count.to_string()]);
    assert_eq!(ws.run(&["audit-verify", "--declared", &(count + 1).to_string()]).code, 1);

    let mut lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    lines[2]["subject"] = Value::from("someone-else");
    let tampered: String = lines.iter().map(|l| format!("{l}\n")).collect();
    fs::write(&log_path, tampered).unwrap();
    let out = ws.run(&["--json-lines", "audit-verify"]);
    assert_eq!(out.code, 1);
    let record = &out.records()[0];
    assert_eq!(record["verdict"], "broken");
    assert_eq!(record["at"], 2);
}

#[test]
fn clusters_and_scores_on_a_scenario() {
    let ws = Workspace::new();
    ws.ok(&["scenario", "--seed", "7", "--blocks", "10"]);
    let clusters = ws.json(&["cluster"]);
    assert!(!clusters.is_empty());
    let score = ws.json(&["score"]);
    let summary = score.last().unwrap();
    assert_eq!(summary["exact"], summary["sources"]);
}

#[test]
fn missing_chain_is_a_domain_error() {
    let ws = Workspace::new();
    let out = ws.run(&["mine"]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("no chain store"));
}
