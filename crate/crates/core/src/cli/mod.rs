//! The `fogtrace` command line.
//!
//! Everything lives under `./fogtrace-data/` unless overridden: the chain
//! store (`--chain`), wallets and authority keys (`--keys`) and the
//! regulatory registry (`--regmap`). Pending transactions queue in
//! `<chain>.mempool` until `mine` folds them into a block.
//!
//! Exit codes: 0 on success, 1 on a domain error, 2 on a usage error.

mod keys;

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde_json::{json, Value};
use thiserror::Error;

pub use keys::{KeyStore, Wallet, WalletFile};

use crate::hashing::{derive_seed, sha256_concat};
use crate::ledger::{
    build_payment_tx, build_shielded_spend, produce_block, scan_notes, Address, Amount, Chain, ChainState,
    LedgerError, LedgerGroup, Payee, Payment, ShieldedRef, Transaction, TxId, TxOutput,
};
use crate::regmap::{read_json_lines, verify_audit_chain, AnonymousId, AuditEntry, AuditVerdict, Registry, RegmapError, Reveal, Warrant};
use crate::ring::{ring_sign, ring_verify, RingError, RingSignature, TrapdoorKeyPair};
use crate::scenario::{
    generate_scenario, truth_descendants, truth_from_json_lines, ScenarioError, ScenarioSpec, SetScore, TruthHolder,
    TruthRecord,
};
use crate::stealth::StealthAddress;
use crate::tracer::{build_graph, cluster_common_input, resolve_with_regmap, shielded_candidates, taint_trace, TaintPolicy, TracerError};

const REGISTRY_KEY_FILE: &str = "registry.key";
const AUTHORITY_KEY_FILE: &str = "authority.key";
const STEALTH_PREFIX: &str = "stealth:";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Regmap(#[from] RegmapError),
    #[error(transparent)]
    Tracer(#[from] TracerError),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
    /// The command ran but its check came out negative.
    #[error("{0}")]
    Rejected(String),
}

#[derive(Debug, Parser)]
#[command(name = "fogtrace", version, about = "Privacy ledger simulator and forensic tracer")]
struct Cli {
    /// Chain store file.
    #[arg(long, global = true, default_value = "fogtrace-data/chain.store")]
    chain: PathBuf,
    /// Directory holding wallets and authority keys.
    #[arg(long, global = true, default_value = "fogtrace-data/keys")]
    keys: PathBuf,
    /// Directory holding the regulatory registry.
    #[arg(long, global = true, default_value = "fogtrace-data/regmap")]
    regmap: PathBuf,
    /// Emit one JSON record per line instead of tables.
    #[arg(long, global = true)]
    json_lines: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Create a wallet with transparent and stealth keys.
    Keygen {
        #[arg(long, default_value = "default")]
        wallet: String,
        /// Derive keys from this text instead of system randomness.
        #[arg(long)]
        seed: Option<String>,
        #[arg(long, default_value_t = 4)]
        count: usize,
    },
    /// Show a wallet's addresses.
    Address {
        #[arg(long, default_value = "default")]
        wallet: String,
    },
    /// Start a chain with a genesis mint.
    Init {
        /// PAYEE=AMOUNT, where PAYEE is an address or stealth:<hex>.
        #[arg(long = "pay", required = true)]
        pay: Vec<String>,
    },
    /// Queue a transparent payment.
    Send(SendArgs),
    /// Queue a ring-signed spend of one of the wallet's stealth notes.
    SendShielded {
        #[command(flatten)]
        send: SendArgs,
        /// Registry index of the note to spend; defaults to the first unspent note that covers the payment.
        #[arg(long)]
        note: Option<u64>,
        #[arg(long, default_value_t = 7)]
        decoys: usize,
    },
    /// Fold the mempool into a new block.
    Mine,
    /// Show the spendable balance of an address or a wallet.
    Balance {
        #[arg(long, conflicts_with = "wallet")]
        address: Option<Address>,
        #[arg(long)]
        wallet: Option<String>,
    },
    /// Follow value forward from an address.
    Trace {
        #[arg(long)]
        source: Address,
        #[arg(long, value_enum, default_value_t = PolicyArg::Poison)]
        policy: PolicyArg,
        #[arg(long)]
        max_depth: Option<usize>,
        /// Write the transaction graph in DOT format here.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Group addresses by the common-input heuristic.
    Cluster {
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// List the plausible spenders of a shielded transaction.
    AnonymitySet {
        #[arg(long)]
        tx: TxId,
        /// Narrow the set using logged reveals for this identity.
        #[arg(long)]
        suspect: Option<String>,
        /// Reveal records, one JSON object per line; defaults to reveals.jsonl in the registry.
        #[arg(long)]
        reveals: Option<PathBuf>,
    },
    /// Map a real identity onto an address or a stealth note.
    RegmapRegister {
        #[arg(long)]
        identity: String,
        /// An address, note:<index>, or a raw identifier.
        #[arg(long)]
        subject: String,
        #[arg(long)]
        height: Option<u64>,
    },
    /// Sign a warrant with the authority key.
    WarrantIssue {
        #[arg(long)]
        authorizer: String,
        /// Repeatable; same forms as regmap-register --subject.
        #[arg(long = "scope", required = true)]
        scope: Vec<String>,
        #[arg(long)]
        expiry: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reveal the identity behind a subject under a warrant.
    RegmapReveal {
        #[arg(long)]
        subject: String,
        #[arg(long)]
        warrant: Option<PathBuf>,
        #[arg(long)]
        height: Option<u64>,
    },
    /// Check the registry's audit log.
    AuditVerify {
        /// Expected number of entries.
        #[arg(long)]
        declared: Option<u64>,
    },
    /// Produce a ring-signature vector over freshly generated keys.
    RingSign {
        #[arg(long)]
        message: String,
        #[arg(long, default_value_t = 4)]
        ring_size: usize,
        #[arg(long, default_value_t = 0)]
        signer: usize,
        #[arg(long, default_value_t = 512)]
        bits: u64,
        #[arg(long, default_value = "ring")]
        seed: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a ring-signature vector; exits 1 if it does not verify.
    RingVerify {
        #[arg(long)]
        vector: PathBuf,
        /// Verify against this message instead of the one in the vector.
        #[arg(long)]
        message: Option<String>,
    },
    /// Generate a deterministic demo economy.
    Scenario(ScenarioArgs),
    /// Score poison tracing against a scenario's ground truth.
    Score {
        /// Defaults to ground_truth.jsonl next to the chain store.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct SendArgs {
    #[arg(long, default_value = "default")]
    wallet: String,
    /// An address or stealth:<hex>.
    #[arg(long)]
    to: String,
    #[arg(long)]
    amount: Amount,
    #[arg(long, default_value_t = 0)]
    fee: Amount,
    /// Seed for one-time outputs and ring choice; defaults to one derived from the chain.
    #[arg(long)]
    seed: Option<String>,
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 6)]
    actors: usize,
    #[arg(long, default_value_t = 50)]
    blocks: usize,
    #[arg(long, default_value_t = 3)]
    txs_per_block: usize,
    #[arg(long)]
    mixer: bool,
    #[arg(long, default_value_t = 0.0)]
    shielded_ratio: f64,
    #[arg(long, default_value_t = 8)]
    ring_size: usize,
    #[arg(long)]
    chain_hop: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    Poison,
    Haircut,
}

impl From<PolicyArg> for TaintPolicy {
    fn from(value: PolicyArg) -> Self {
        match value {
            PolicyArg::Poison => TaintPolicy::Poison,
            PolicyArg::Haircut => TaintPolicy::Haircut,
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                2
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    let mut ctx = Context {
        chain: cli.chain,
        keys: KeyStore::new(&cli.keys),
        regmap: cli.regmap,
        ui: Ui { out, json: cli.json_lines },
    };
    match ctx.dispatch(cli.command) {
        Ok(()) => 0,
        // The reader went away, as with `| head`.
        Err(CliError::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => 0,
        Err(CliError::Rejected(message)) => {
            let _ = writeln!(err, "{message}");
            1
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

struct Ui<'a> {
    out: &'a mut dyn Write,
    json: bool,
}

impl Ui<'_> {
    /// One result: `human` as a table line, or `record` as a JSON line.
    fn emit(&mut self, human: impl AsRef<str>, record: Value) -> io::Result<()> {
        if self.json {
            writeln!(self.out, "{record}")
        } else {
            writeln!(self.out, "{}", human.as_ref())
        }
    }

    /// Headers and notes that only make sense in the human view.
    fn note(&mut self, human: impl AsRef<str>) -> io::Result<()> {
        if self.json {
            Ok(())
        } else {
            writeln!(self.out, "{}", human.as_ref())
        }
    }
}

struct Context<'a> {
    chain: PathBuf,
    keys: KeyStore,
    regmap: PathBuf,
    ui: Ui<'a>,
}

fn mempool_path(chain: &Path) -> PathBuf {
    let mut name = chain.as_os_str().to_owned();
    name.push(".mempool");
    PathBuf::from(name)
}

fn parse_payee(text: &str) -> Result<Payee, CliError> {
    if let Some(hex_part) = text.strip_prefix(STEALTH_PREFIX) {
        let bytes = hex::decode(hex_part).map_err(|e| CliError::Invalid(format!("stealth address: {e}")))?;
        let address = StealthAddress::from_bytes(&LedgerGroup::default(), &bytes)
            .map_err(|e| CliError::Invalid(format!("stealth address: {e}")))?;
        return Ok(Payee::Stealth(address));
    }
    text.parse::<Address>().map(Payee::Transparent).map_err(|e| CliError::Invalid(format!("address {text}: {e}")))
}

fn stealth_text(address: &StealthAddress<LedgerGroup>) -> String {
    format!("{STEALTH_PREFIX}{}", hex::encode(address.to_bytes(&LedgerGroup::default())))
}

fn ratio_text(r: &BigRational) -> String {
    format!("{r}")
}

fn ratio_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

impl Context<'_> {
    fn dispatch(&mut self, command: Command) -> Result<(), CliError> {
        match command {
            Command::Keygen { wallet, seed, count } => self.keygen(&wallet, seed.as_deref(), count),
            Command::Address { wallet } => self.address(&wallet),
            Command::Init { pay } => self.init(&pay),
            Command::Send(args) => self.send(&args),
            Command::SendShielded { send, note, decoys } => self.send_shielded(&send, note, decoys),
            Command::Mine => self.mine(),
            Command::Balance { address, wallet } => self.balance(address, wallet.as_deref()),
            Command::Trace { source, policy, max_depth, dot } => self.trace(&source, policy.into(), max_depth, dot.as_deref()),
            Command::Cluster { dot } => self.cluster(dot.as_deref()),
            Command::AnonymitySet { tx, suspect, reveals } => self.anonymity_set(&tx, suspect.as_deref(), reveals.as_deref()),
            Command::RegmapRegister { identity, subject, height } => self.regmap_register(&identity, &subject, height),
            Command::WarrantIssue { authorizer, scope, expiry, out } => self.warrant_issue(&authorizer, &scope, expiry, &out),
            Command::RegmapReveal { subject, warrant, height } => self.regmap_reveal(&subject, warrant.as_deref(), height),
            Command::AuditVerify { declared } => self.audit_verify(declared),
            Command::RingSign { message, ring_size, signer, bits, seed, out } => {
                self.ring_sign(&message, ring_size, signer, bits, &seed, &out)
            }
            Command::RingVerify { vector, message } => self.ring_verify(&vector, message.as_deref()),
            Command::Scenario(args) => self.scenario(&args),
            Command::Score { truth } => self.score(truth.as_deref()),
        }
    }

    fn load_chain(&self) -> Result<Chain, CliError> {
        if !self.chain.exists() {
            return Err(CliError::Invalid(format!(
                "no chain store at {}; run init or scenario first",
                self.chain.display()
            )));
        }
        Ok(Chain::load(&self.chain)?)
    }

    fn load_mempool(&self) -> Result<Vec<Transaction>, CliError> {
        let text = match fs::read_to_string(mempool_path(&self.chain)) {
            Ok(text) => text,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e.into()),
        };
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, line)| {
                let bytes = hex::decode(line.trim()).map_err(|e| CliError::Invalid(format!("mempool line {}: {e}", i + 1)))?;
                Transaction::from_bytes(&bytes).map_err(|e| CliError::Invalid(format!("mempool line {}: {e}", i + 1)))
            })
            .collect()
    }

    /// Chain state with the queued transactions already applied, so new
    /// payments do not reuse outputs that are pending.
    fn pending_state(&self, chain: &Chain, mempool: &[Transaction]) -> ChainState {
        let mut state = chain.state().clone();
        let height = state.next_height();
        for tx in mempool {
            let _ = state.apply_transaction(tx, height);
        }
        state
    }

    fn queue(&self, tx: &Transaction) -> Result<(), CliError> {
        let mut file = fs::OpenOptions::new().create(true).append(true).open(mempool_path(&self.chain))?;
        writeln!(file, "{}", hex::encode(tx.to_bytes()))?;
        Ok(())
    }

    fn tx_seed(&self, explicit: Option<&str>, state: &ChainState, queued: usize) -> [u8; 32] {
        match explicit {
            Some(text) => keys::text_seed(text),
            None => sha256_concat(&[b"fogtrace/cli-tx", &state.digest(), &(queued as u64).to_be_bytes()]),
        }
    }

    fn current_height(&self) -> Result<u64, CliError> {
        if self.chain.exists() {
            Ok(self.load_chain()?.height())
        } else {
            Ok(0)
        }
    }

    fn registry(&self) -> Result<Registry, CliError> {
        let registry_key = self.keys.signing_key(REGISTRY_KEY_FILE)?;
        let authority = self.keys.signing_key(AUTHORITY_KEY_FILE)?;
        Ok(Registry::load(&self.regmap, registry_key, authority.verifying_key())?)
    }

    /// `note:<index>` names a stealth output on chain; anything else is taken verbatim.
    fn subject(&self, text: &str) -> Result<AnonymousId, CliError> {
        if let Some(index) = text.strip_prefix("note:") {
            let index: u64 = index.parse().map_err(|_| CliError::Invalid(format!("bad note index in {text}")))?;
            let chain = self.load_chain()?;
            let entry = chain
                .state()
                .shielded_output(ShieldedRef(index))
                .ok_or(LedgerError::UnknownShieldedOutput(ShieldedRef(index)))?;
            return Ok(AnonymousId::for_stealth(&entry.meta));
        }
        Ok(AnonymousId::new(text))
    }

    fn keygen(&mut self, name: &str, seed: Option<&str>, count: usize) -> Result<(), CliError> {
        if count == 0 {
            return Err(CliError::Invalid("key count must be positive".into()));
        }
        if self.keys.has_wallet(name) {
            return Err(CliError::Invalid(format!("wallet {name} already exists")));
        }
        let seed = seed.map_or_else(keys::random_seed, keys::text_seed);
        let wallet = Wallet::from_seed(name, &seed, count);
        let path = self.keys.save_wallet(&wallet)?;
        self.ui.note(format!("wrote {}", path.display()))?;
        self.print_addresses(&wallet)
    }

    fn print_addresses(&mut self, wallet: &Wallet) -> Result<(), CliError> {
        for (i, address) in wallet.transparent.addresses().iter().enumerate() {
            self.ui.emit(
                format!("{:<8} {address}", if i == 0 { "primary" } else { "address" }),
                json!({"wallet": wallet.name, "kind": "transparent", "index": i, "address": address}),
            )?;
        }
        let stealth = stealth_text(&wallet.stealth.address());
        self.ui.emit(format!("{:<8} {stealth}", "stealth"), json!({"wallet": wallet.name, "kind": "stealth", "address": stealth}))?;
        Ok(())
    }

    fn address(&mut self, name: &str) -> Result<(), CliError> {
        let wallet = self.keys.load_wallet(name)?;
        self.print_addresses(&wallet)
    }

    fn init(&mut self, pay: &[String]) -> Result<(), CliError> {
        if self.chain.exists() {
            return Err(CliError::Invalid(format!("chain store {} already exists", self.chain.display())));
        }
        let mut payments = Vec::new();
        for item in pay {
            let (payee, amount) = item
                .rsplit_once('=')
                .ok_or_else(|| CliError::Invalid(format!("expected PAYEE=AMOUNT, got {item}")))?;
            let amount: Amount = amount.parse().map_err(|_| CliError::Invalid(format!("bad amount in {item}")))?;
            payments.push(Payment { payee: parse_payee(payee)?, amount });
        }
        let seed = sha256_concat(&[b"fogtrace/cli-genesis", pay.join("\n").as_bytes()]);
        let group = LedgerGroup::default();
        let outputs = payments
            .iter()
            .enumerate()
            .map(|(i, p)| match p.payee {
                Payee::Transparent(address) => Ok(TxOutput::Transparent { address, amount: p.amount }),
                Payee::Stealth(address) => {
                    let meta = crate::stealth::derive_onetime_output(&group, &address, &derive_seed(&seed, &(i as u64).to_be_bytes()))
                        .map_err(LedgerError::from)?;
                    Ok(TxOutput::Stealth { meta, amount: p.amount })
                }
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let chain = Chain::with_genesis(outputs)?;
        chain.save(&self.chain)?;
        let block = &chain.blocks()[0];
        self.ui.emit(
            format!("genesis {} minting {}", block.block_hash(), chain.state().genesis_supply()),
            json!({"height": 0, "hash": block.block_hash().to_string(), "minted": chain.state().genesis_supply()}),
        )?;
        Ok(())
    }

    fn send(&mut self, args: &SendArgs) -> Result<(), CliError> {
        let chain = self.load_chain()?;
        let wallet = self.keys.load_wallet(&args.wallet)?;
        let mempool = self.load_mempool()?;
        let state = self.pending_state(&chain, &mempool);
        let payment = Payment { payee: parse_payee(&args.to)?, amount: args.amount };
        let seed = self.tx_seed(args.seed.as_deref(), &state, mempool.len());
        let tx = Transaction::Transparent(build_payment_tx(&wallet.transparent, &[payment], args.fee, &state, &seed)?);
        self.queue(&tx)?;
        self.report_queued(&tx)
    }

    fn report_queued(&mut self, tx: &Transaction) -> Result<(), CliError> {
        let txid = tx.txid();
        self.ui.emit(
            format!("queued {} tx {txid} ({} outputs, fee {})", tx.kind(), tx.outputs().len(), tx.fee()),
            json!({"queued": txid, "kind": tx.kind(), "outputs": tx.outputs().len(), "fee": tx.fee()}),
        )?;
        Ok(())
    }

    fn send_shielded(&mut self, args: &SendArgs, note: Option<u64>, decoys: usize) -> Result<(), CliError> {
        let chain = self.load_chain()?;
        let wallet = self.keys.load_wallet(&args.wallet)?;
        let mempool = self.load_mempool()?;
        let state = self.pending_state(&chain, &mempool);
        let needed = u128::from(args.amount) + u128::from(args.fee);
        let owned = match note {
            Some(index) => ShieldedRef(index),
            None => {
                let notes = scan_notes(&wallet.stealth, &state);
                let available = notes.iter().filter(|n| !n.spent).map(|n| u128::from(n.amount)).max().unwrap_or(0);
                notes
                    .iter()
                    .find(|n| !n.spent && u128::from(n.amount) >= needed)
                    .map(|n| n.reference)
                    .ok_or(LedgerError::InsufficientFunds { available, required: needed })?
            }
        };
        let payment = Payment { payee: parse_payee(&args.to)?, amount: args.amount };
        let seed = self.tx_seed(args.seed.as_deref(), &state, mempool.len());
        let tx = Transaction::Shielded(build_shielded_spend(&wallet.stealth, owned, decoys, &[payment], args.fee, &state, &seed)?);
        self.queue(&tx)?;
        self.report_queued(&tx)
    }

    fn mine(&mut self) -> Result<(), CliError> {
        let mut chain = self.load_chain()?;
        let mempool = self.load_mempool()?;
        let production = produce_block(&mempool, chain.state());
        let block = production.block;
        let (height, hash, count) = (block.height(), block.block_hash().to_string(), block.transactions().len());
        chain.push(block)?;
        chain.save(&self.chain)?;
        let pool = mempool_path(&self.chain);
        if pool.exists() {
            fs::remove_file(pool)?;
        }
        for (txid, reason) in &production.rejected {
            self.ui.emit(format!("rejected {txid}: {reason}"), json!({"rejected": txid, "reason": reason.to_string()}))?;
        }
        self.ui.emit(
            format!("block {height} {hash} with {count} transactions"),
            json!({"height": height, "hash": hash, "transactions": count, "rejected": production.rejected.len()}),
        )?;
        Ok(())
    }

    fn balance(&mut self, address: Option<Address>, wallet: Option<&str>) -> Result<(), CliError> {
        let chain = self.load_chain()?;
        let state = chain.state();
        if let Some(address) = address {
            let amount = state.balance(&address);
            self.ui.emit(format!("{address} {amount}"), json!({"address": address, "balance": amount}))?;
            return Ok(());
        }
        let wallet = self.keys.load_wallet(wallet.unwrap_or("default"))?;
        let mut total: u128 = 0;
        for address in wallet.transparent.addresses() {
            let amount = state.balance(&address);
            total += u128::from(amount);
            self.ui.emit(format!("{address} {amount}"), json!({"address": address, "balance": amount}))?;
        }
        for note in scan_notes(&wallet.stealth, state) {
            if !note.spent {
                total += u128::from(note.amount);
            }
            let status = if note.spent { "spent" } else { "unspent" };
            self.ui.emit(
                format!("note {} {} {status}", note.reference, note.amount),
                json!({"note": note.reference.0, "amount": note.amount, "spent": note.spent}),
            )?;
        }
        self.ui.emit(format!("total {total}"), json!({"wallet": wallet.name, "total": total.to_string()}))?;
        Ok(())
    }

    fn write_dot(&mut self, path: &Path, dot: &str) -> Result<(), CliError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, dot)?;
        self.ui.note(format!("graph written to {}", path.display()))?;
        Ok(())
    }

    fn trace(&mut self, source: &Address, policy: TaintPolicy, max_depth: Option<usize>, dot: Option<&Path>) -> Result<(), CliError> {
        let chain = self.load_chain()?;
        let graph = build_graph(chain.blocks());
        let report = taint_trace(&graph, source, policy, max_depth)?;
        self.ui.note(format!("{:<36} {:>5} {:>24} {:>10}", "address", "depth", "fraction", "~"))?;
        for (address, mark) in &report.addresses {
            self.ui.emit(
                format!("{address:<36} {:>5} {:>24} {:>10.6}", mark.depth, ratio_text(&mark.fraction), ratio_f64(&mark.fraction)),
                json!({
                    "record": "taint", "address": address, "depth": mark.depth,
                    "fraction": ratio_text(&mark.fraction), "approx": ratio_f64(&mark.fraction),
                }),
            )?;
        }
        for (note, mark) in &report.notes {
            self.ui.emit(
                format!("{:<36} {:>5} {:>24} {:>10.6}", format!("note {note}"), mark.depth, ratio_text(&mark.fraction), ratio_f64(&mark.fraction)),
                json!({"record": "taint_note", "note": note.0, "depth": mark.depth, "fraction": ratio_text(&mark.fraction)}),
            )?;
        }
        for spend in &report.flagged_spends {
            let members: Vec<u64> = spend.tainted_members.iter().map(|r| r.0).collect();
            self.ui.emit(
                format!("flagged shielded spend {} ({} of {} ring members tainted)", spend.txid, members.len(), spend.ring_size),
                json!({"record": "flagged_spend", "txid": spend.txid, "tainted_members": members, "ring_size": spend.ring_size}),
            )?;
        }
        self.ui.emit(
            format!(
                "{} tainted addresses, policy {}, depth reached {}, fee sink {}",
                report.addresses.len(),
                policy.name(),
                report.depth_reached,
                ratio_text(&report.fee_sink)
            ),
            json!({
                "record": "summary", "source": source, "policy": policy.name(), "max_depth": max_depth,
                "addresses": report.addresses.len(), "notes": report.notes.len(),
                "depth_reached": report.depth_reached, "fee_sink": ratio_text(&report.fee_sink),
            }),
        )?;
        if let Some(path) = dot {
            self.write_dot(path, &graph.to_dot())?;
        }
        Ok(())
    }

    fn cluster(&mut self, dot: Option<&Path>) -> Result<(), CliError> {
        let chain = self.load_chain()?;
        let graph = build_graph(chain.blocks());
        let clusters = cluster_common_input(&graph);
        for (i, cluster) in clusters.iter().enumerate() {
            let members: Vec<String> = cluster.iter().map(|a| a.to_string()).collect();
            self.ui.emit(
                format!("cluster {i} ({}): {}", members.len(), members.join(" ")),
                json!({"cluster": i, "size": members.len(), "addresses": members}),
            )?;
        }
        if let Some(path) = dot {
            self.write_dot(path, &graph.to_dot())?;
        }
        Ok(())
    }

    fn anonymity_set(&mut self, txid: &TxId, suspect: Option<&str>, reveals: Option<&Path>) -> Result<(), CliError> {
        let chain = self.load_chain()?;
        let graph = build_graph(chain.blocks());
        let mut report = shielded_candidates(&graph, txid)?;
        if let Some(suspect) = suspect {
            let reveals_path = reveals.map_or_else(|| self.regmap.join("reveals.jsonl"), Path::to_path_buf);
            let reveals: Vec<Reveal> = read_optional_json_lines(&reveals_path)?;
            let log: Vec<AuditEntry> = read_optional_json_lines(&self.regmap.join("audit.jsonl"))?;
            report = resolve_with_regmap(&report, &reveals, &log, suspect)?;
        }
        for candidate in &report.candidates {
            self.ui.emit(
                format!("{:>6} {}", candidate.reference, candidate.subject),
                json!({"note": candidate.reference.0, "subject": candidate.subject}),
            )?;
        }
        self.ui.emit(
            format!("anonymity set of {txid}: {}", report.size()),
            json!({"txid": txid, "size": report.size(), "suspect": suspect}),
        )?;
        Ok(())
    }

    fn regmap_register(&mut self, identity: &str, subject: &str, height: Option<u64>) -> Result<(), CliError> {
        let subject = self.subject(subject)?;
        let height = height.map_or_else(|| self.current_height(), Ok)?;
        let mut registry = self.registry()?;
        let (_, entry) = registry.register_mapping(identity, subject.clone(), height)?;
        registry.save(&self.regmap)?;
        self.ui.emit(
            format!("registered {subject} at height {height} (audit entry {})", entry.seq),
            json!({"subject": subject, "height": height, "audit_seq": entry.seq, "entry_hash": hex::encode(entry.entry_hash)}),
        )?;
        Ok(())
    }

    fn warrant_issue(&mut self, authorizer: &str, scope: &[String], expiry: u64, out: &Path) -> Result<(), CliError> {
        let scope = scope.iter().map(|s| self.subject(s)).collect::<Result<BTreeSet<_>, _>>()?;
        let authority = self.keys.signing_key(AUTHORITY_KEY_FILE)?;
        let warrant = Warrant::issue(&authority, authorizer, scope, expiry)?;
        if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(out, serde_json::to_string_pretty(&warrant)? + "\n")?;
        self.ui.emit(
            format!("warrant {} covering {} subjects until height {expiry}", hex::encode(warrant.id()), warrant.scope.len()),
            json!({"warrant_id": hex::encode(warrant.id()), "scope": warrant.scope.len(), "expiry": expiry, "path": out}),
        )?;
        Ok(())
    }

    fn regmap_reveal(&mut self, subject: &str, warrant: Option<&Path>, height: Option<u64>) -> Result<(), CliError> {
        let subject = self.subject(subject)?;
        let height = height.map_or_else(|| self.current_height(), Ok)?;
        let warrant: Option<Warrant> = match warrant {
            Some(path) => Some(serde_json::from_str(&fs::read_to_string(path)?)?),
            None => None,
        };
        let mut registry = self.registry()?;
        let (reveal, _) = registry.reveal_mapping(&subject, warrant.as_ref(), height)?;
        registry.save(&self.regmap)?;
        let mut file = fs::OpenOptions::new().create(true).append(true).open(self.regmap.join("reveals.jsonl"))?;
        writeln!(file, "{}", serde_json::to_string(&reveal)?)?;
        self.ui.emit(
            format!("{} is {} (audit entry {})", reveal.subject, reveal.real_identity, reveal.audit_seq),
            serde_json::to_value(&reveal)?,
        )?;
        Ok(())
    }

    fn audit_verify(&mut self, declared: Option<u64>) -> Result<(), CliError> {
        let log: Vec<AuditEntry> = read_optional_json_lines(&self.regmap.join("audit.jsonl"))?;
        let verdict = verify_audit_chain(&log, declared);
        let human = match verdict {
            AuditVerdict::Intact => format!("audit log intact ({} entries)", log.len()),
            AuditVerdict::Broken { at } => format!("audit log broken at entry {at}"),
            AuditVerdict::LengthMismatch { declared, found } => {
                format!("audit log has {found} entries, {declared} declared")
            }
        };
        let mut record = serde_json::to_value(verdict)?;
        record["entries"] = json!(log.len());
        self.ui.emit(&human, record)?;
        if verdict == AuditVerdict::Intact {
            Ok(())
        } else {
            Err(CliError::Rejected(human))
        }
    }

    fn ring_sign(&mut self, message: &str, ring_size: usize, signer: usize, bits: u64, seed: &str, out: &Path) -> Result<(), CliError> {
        if ring_size == 0 {
            return Err(CliError::Invalid("ring size must be positive".into()));
        }
        let seed = keys::text_seed(seed);
        let keypairs = (0..ring_size)
            .map(|i| TrapdoorKeyPair::generate(bits, &derive_seed(&seed, format!("ring/{i}").as_bytes())))
            .collect::<Result<Vec<_>, _>>()?;
        let ring: Vec<_> = keypairs.iter().map(|k| k.public_key().clone()).collect();
        let keypair = keypairs.get(signer).ok_or(RingError::IndexOutOfRange { index: signer, len: ring_size })?;
        let signature = ring_sign(message.as_bytes(), &ring, signer, keypair, &derive_seed(&seed, b"sign"))?;
        let vector = json!({
            "bits": bits,
            "ring_size": ring_size,
            "domain_bits": signature.domain_bits(),
            "message_hex": hex::encode(message.as_bytes()),
            "signature_hex": hex::encode(signature.to_bytes()),
        });
        if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(out, serde_json::to_string_pretty(&vector)? + "\n")?;
        self.ui.emit(
            format!("signed with a ring of {ring_size} {bits}-bit keys; vector written to {}", out.display()),
            json!({"ring_size": ring_size, "bits": bits, "path": out}),
        )?;
        Ok(())
    }

    fn ring_verify(&mut self, path: &Path, message: Option<&str>) -> Result<(), CliError> {
        let vector: Value = serde_json::from_str(&fs::read_to_string(path)?)?;
        let field = |name: &str| {
            vector[name]
                .as_str()
                .and_then(|s| hex::decode(s).ok())
                .ok_or_else(|| CliError::Invalid(format!("vector field {name} missing or not hex")))
        };
        let message = match message {
            Some(text) => text.as_bytes().to_vec(),
            None => field("message_hex")?,
        };
        let signature = RingSignature::from_bytes(&field("signature_hex")?)?;
        let valid = ring_verify(&message, &signature)?;
        let human = if valid { "signature valid" } else { "signature INVALID" };
        self.ui.emit(human, json!({"valid": valid, "ring_size": signature.ring().len()}))?;
        if valid {
            Ok(())
        } else {
            Err(CliError::Rejected(human.to_string()))
        }
    }

    fn scenario(&mut self, args: &ScenarioArgs) -> Result<(), CliError> {
        let spec = ScenarioSpec {
            seed: args.seed,
            actors: args.actors,
            blocks: args.blocks,
            txs_per_block: args.txs_per_block,
            mixer: args.mixer,
            shielded_ratio: args.shielded_ratio,
            ring_size: args.ring_size,
            chain_hop: args.chain_hop,
        };
        let scenario = generate_scenario(&spec)?;
        scenario.chain.save(&self.chain)?;
        let pool = mempool_path(&self.chain);
        if pool.exists() {
            fs::remove_file(pool)?;
        }
        let truth_path = self.truth_path();
        fs::write(&truth_path, crate::scenario::truth_to_json_lines(&scenario.truth))?;
        scenario.registry.save(&self.regmap)?;
        let reveals = self.regmap.join("reveals.jsonl");
        if reveals.exists() {
            fs::remove_file(reveals)?;
        }
        self.keys.save_signing_key(REGISTRY_KEY_FILE, &crate::scenario::registry_key(spec.seed))?;
        self.keys.save_signing_key(AUTHORITY_KEY_FILE, &scenario.authority)?;
        for party in &scenario.parties {
            self.keys.save_wallet(&Wallet {
                name: party.identity.clone(),
                transparent: party.wallet.clone(),
                stealth: party.stealth.clone(),
            })?;
        }
        let state = scenario.chain.state();
        let txs: usize = scenario.chain.blocks().iter().map(|b| b.transactions().len()).sum();
        self.ui.emit(
            format!(
                "scenario seed {}: {} blocks, {txs} transactions, {} shielded outputs, {} parties; state digest {}",
                spec.seed,
                scenario.chain.blocks().len(),
                state.shielded_outputs().len(),
                scenario.parties.len(),
                hex::encode(state.digest())
            ),
            json!({
                "seed": spec.seed, "blocks": scenario.chain.blocks().len(), "transactions": txs,
                "shielded_outputs": state.shielded_outputs().len(), "parties": scenario.parties.len(),
                "state_digest": hex::encode(state.digest()), "chain": self.chain, "truth": truth_path,
            }),
        )?;
        Ok(())
    }

    fn truth_path(&self) -> PathBuf {
        self.chain.parent().unwrap_or(Path::new("")).join("ground_truth.jsonl")
    }

    fn score(&mut self, truth: Option<&Path>) -> Result<(), CliError> {
        let chain = self.load_chain()?;
        let truth_path = truth.map_or_else(|| self.truth_path(), Path::to_path_buf);
        let records = truth_from_json_lines(&fs::read_to_string(&truth_path)?)?;
        let graph = build_graph(chain.blocks());
        let sources: BTreeSet<Address> = records
            .iter()
            .filter_map(|r| match r {
                TruthRecord::Transfer { height: 0, outputs, .. } => Some(outputs),
                _ => None,
            })
            .flatten()
            .filter_map(|o| match o.holder {
                TruthHolder::Address(a) => Some(a),
                TruthHolder::Note(_) => None,
            })
            .collect();
        let mut exact = 0;
        for source in &sources {
            let report = taint_trace(&graph, source, TaintPolicy::Poison, None)?;
            let found: BTreeSet<Address> = report.addresses.keys().copied().collect();
            let on_chain = SetScore::compare(&found, &truth_descendants(&records, source, false));
            let economic = SetScore::compare(&found, &truth_descendants(&records, source, true));
            exact += usize::from(on_chain.is_exact());
            self.ui.emit(
                format!(
                    "{source} recall {:.3} precision {:.3} (with off-chain links: recall {:.3} precision {:.3})",
                    on_chain.recall(),
                    on_chain.precision(),
                    economic.recall(),
                    economic.precision()
                ),
                json!({
                    "source": source,
                    "recall": on_chain.recall(), "precision": on_chain.precision(),
                    "linked_recall": economic.recall(), "linked_precision": economic.precision(),
                }),
            )?;
        }
        self.ui.emit(
            format!("{exact} of {} sources traced exactly", sources.len()),
            json!({"sources": sources.len(), "exact": exact}),
        )?;
        Ok(())
    }
}

fn read_optional_json_lines<T: for<'de> serde::Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CliError> {
    match fs::read_to_string(path) {
        Ok(text) => Ok(read_json_lines(&text)?),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(e) => Err(e.into()),
    }
}
