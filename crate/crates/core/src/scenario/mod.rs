//! Deterministic demo economies with ground truth.
//!
//! A scenario mints a genesis block for a handful of actors and then fills
//! blocks with seeded random activity: transfers, payments into stealth
//! notes, ring-signed note spends, and optionally a mixer and a swap desk.
//! Alongside the chain it emits what really happened (who paid whom, which
//! ring member was spent, which mixer or swap payout belongs to which
//! deposit) and a regulatory registry mapping every address and note to its
//! owner. The same spec always yields byte-identical output.

mod scoring;
mod truth;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use ed25519_dalek::SigningKey;
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use scoring::{address_owners, shielded_truth, truth_descendants, SetScore};
pub use truth::{truth_from_json_lines, truth_to_json_lines, TruthHolder, TruthOutput, TruthRecord};

use crate::hashing::{derive_seed, seeded_rng};
use crate::ledger::{
    build_payment_tx, build_shielded_spend, produce_block, Address, Amount, Block, Chain, ChainState, LedgerError,
    LedgerGroup, Payment, ShieldedRef, Transaction, TransparentWallet, TxId, TxOutput, GENESIS_SUPPLY,
};
use crate::regmap::{AnonymousId, Registry, RegmapError};
use crate::stealth::{derive_onetime_output, stealth_keygen, StealthRecipientKeys};

/// Denomination of every stealth note a scenario creates.
pub const NOTE_VALUE: Amount = 10_000;
/// Keys per wallet; key 0 receives change, the rest serve as fresh addresses.
pub const WALLET_KEYS: usize = 4;
pub const MIXER_IDENTITY: &str = "mixer-service";
pub const SWAP_IDENTITY: &str = "swap-desk";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub actors: usize,
    pub blocks: usize,
    pub txs_per_block: usize,
    /// Route some payments through a mixer that merges deposits and pays
    /// them out to fresh addresses.
    pub mixer: bool,
    /// Probability that a planned transaction is a shielded note spend.
    pub shielded_ratio: f64,
    pub ring_size: usize,
    /// Add a swap desk: deposits on this chain are repaid from a separate
    /// reserve, standing in for a hop through another ledger.
    pub chain_hop: bool,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            seed: 7,
            actors: 6,
            blocks: 50,
            txs_per_block: 3,
            mixer: false,
            shielded_ratio: 0.0,
            ring_size: 8,
            chain_hop: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario spec: {0}")]
    InvalidSpec(&'static str),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Regmap(#[from] RegmapError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.actors < 2 {
            return Err(ScenarioError::InvalidSpec("at least two actors"));
        }
        if self.ring_size == 0 {
            return Err(ScenarioError::InvalidSpec("ring size must be positive"));
        }
        if !(0.0..=1.0).contains(&self.shielded_ratio) {
            return Err(ScenarioError::InvalidSpec("shielded ratio must lie in [0, 1]"));
        }
        let notes = self.actors as u128 * self.ring_size as u128 * u128::from(NOTE_VALUE);
        if notes * 2 > u128::from(GENESIS_SUPPLY) {
            return Err(ScenarioError::InvalidSpec("too many notes for the genesis supply"));
        }
        Ok(())
    }
}

/// Key material of one participant.
#[derive(Debug, Clone)]
pub struct Party {
    pub identity: String,
    pub wallet: TransparentWallet,
    pub stealth: StealthRecipientKeys<LedgerGroup>,
}

#[derive(Debug)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub chain: Chain,
    pub truth: Vec<TruthRecord>,
    pub registry: Registry,
    /// Signs warrants the registry accepts.
    pub authority: SigningKey,
    /// Actors first, then the mixer and the swap desk's deposit and reserve
    /// wallets when enabled.
    pub parties: Vec<Party>,
}

impl Scenario {
    pub fn party(&self, identity: &str) -> Option<&Party> {
        self.parties.iter().find(|p| p.identity == identity)
    }

    /// Writes `chain.store`, `ground_truth.jsonl` and the registry under `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<(), ScenarioError> {
        fs::create_dir_all(dir)?;
        self.chain.save(&dir.join("chain.store"))?;
        fs::write(dir.join("ground_truth.jsonl"), truth_to_json_lines(&self.truth))?;
        self.registry.save(&dir.join("regmap"))?;
        Ok(())
    }
}

pub fn registry_key(seed: u64) -> SigningKey {
    SigningKey::from_bytes(&derive_seed(&seed.to_be_bytes(), b"regmap/registry"))
}

pub fn authority_key(seed: u64) -> SigningKey {
    SigningKey::from_bytes(&derive_seed(&seed.to_be_bytes(), b"regmap/authority"))
}

struct Planned {
    tx: Transaction,
    sender: usize,
    true_note: Option<u64>,
    /// Owner of each stealth output, in output order.
    note_owners: Vec<usize>,
    /// Deposits this transaction pays out: (via, actor, deposit, amount).
    links: Vec<(&'static str, usize, TxId, Amount)>,
}

struct Generator {
    spec: ScenarioSpec,
    seed: [u8; 8],
    rng: ChaCha20Rng,
    parties: Vec<Party>,
    mixer: Option<usize>,
    swap: Option<(usize, usize)>,
    address_owner: BTreeMap<Address, usize>,
    note_owner: Vec<usize>,
    spent_notes: BTreeSet<u64>,
    mixer_pending: Vec<(usize, TxId, Amount)>,
    swap_pending: Vec<(usize, TxId, Amount)>,
    registry: Registry,
    truth: Vec<TruthRecord>,
    nonce: u64,
}

pub fn generate_scenario(spec: &ScenarioSpec) -> Result<Scenario, ScenarioError> {
    spec.validate()?;
    let seed = spec.seed.to_be_bytes();
    let group = LedgerGroup::default();
    let party = |identity: String| {
        let label = format!("party/{identity}");
        Party {
            wallet: TransparentWallet::from_seed(&derive_seed(&seed, label.as_bytes()), WALLET_KEYS),
            stealth: stealth_keygen(&group, &derive_seed(&seed, format!("{label}/stealth").as_bytes())),
            identity,
        }
    };
    let mut parties: Vec<Party> = (0..spec.actors).map(|i| party(format!("actor-{i}"))).collect();
    let mixer = spec.mixer.then(|| {
        parties.push(party(MIXER_IDENTITY.to_string()));
        parties.len() - 1
    });
    let swap = spec.chain_hop.then(|| {
        parties.push(party(SWAP_IDENTITY.to_string()));
        parties.push(party(format!("{SWAP_IDENTITY}/reserve")));
        (parties.len() - 2, parties.len() - 1)
    });
    let authority = authority_key(spec.seed);
    let registry = Registry::new(registry_key(spec.seed), authority.verifying_key());
    let address_owner = parties
        .iter()
        .enumerate()
        .flat_map(|(i, p)| p.wallet.addresses().into_iter().map(move |a| (a, i)))
        .collect();

    let mut builder = Generator {
        spec: spec.clone(),
        seed,
        rng: seeded_rng(&derive_seed(&seed, b"scenario/actions")),
        parties,
        mixer,
        swap,
        address_owner,
        note_owner: Vec::new(),
        spent_notes: BTreeSet::new(),
        mixer_pending: Vec::new(),
        swap_pending: Vec::new(),
        registry,
        truth: Vec::new(),
        nonce: 0,
    };
    for p in 0..builder.parties.len() {
        let identity = builder.parties[p].identity.clone();
        for address in builder.parties[p].wallet.addresses() {
            builder.registry.register_mapping(identity.clone(), AnonymousId::from(address), 0)?;
        }
    }

    let (genesis, genesis_plan) = builder.genesis()?;
    let mut chain = Chain::from_blocks(vec![genesis])?;
    builder.record(&chain, 0, vec![genesis_plan])?;
    for _ in 0..spec.blocks {
        let plans = builder.plan_block(chain.state())?;
        let txs: Vec<Transaction> = plans.iter().map(|p| p.tx.clone()).collect();
        let produced = produce_block(&txs, chain.state());
        assert!(produced.rejected.is_empty(), "generator planned an invalid transaction: {:?}", produced.rejected);
        let height = produced.block.height();
        chain.push(produced.block)?;
        builder.record(&chain, height, plans)?;
    }
    Ok(Scenario {
        spec: spec.clone(),
        chain,
        truth: builder.truth,
        registry: builder.registry,
        authority,
        parties: builder.parties,
    })
}

impl Generator {
    fn next_seed(&mut self, label: &str) -> [u8; 32] {
        self.nonce += 1;
        derive_seed(&self.seed, format!("{label}/{}", self.nonce).as_bytes())
    }

    fn genesis(&mut self) -> Result<(Block, Planned), ScenarioError> {
        let group = LedgerGroup::default();
        let actors = self.spec.actors;
        let mut outputs = Vec::new();
        let mut note_owners = Vec::new();
        let note_count = if self.spec.shielded_ratio > 0.0 { actors * self.spec.ring_size } else { 0 };
        let reserve = if self.swap.is_some() { GENESIS_SUPPLY / 10 } else { 0 };
        let transparent = GENESIS_SUPPLY - reserve - note_count as Amount * NOTE_VALUE;
        let share = transparent / actors as Amount;
        for i in 0..actors {
            let extra = if i == 0 { transparent - share * actors as Amount } else { 0 };
            outputs.push(TxOutput::Transparent { address: self.parties[i].wallet.primary_address(), amount: share + extra });
        }
        if let Some((_, reserve_party)) = self.swap {
            outputs.push(TxOutput::Transparent { address: self.parties[reserve_party].wallet.primary_address(), amount: reserve });
        }
        for n in 0..note_count {
            let owner = n % actors;
            let seed = derive_seed(&self.seed, format!("genesis/note/{n}").as_bytes());
            let meta = derive_onetime_output(&group, &self.parties[owner].stealth.address(), &seed)
                .map_err(LedgerError::from)?;
            outputs.push(TxOutput::Stealth { meta, amount: NOTE_VALUE });
            note_owners.push(owner);
        }
        let block = Block::genesis(outputs);
        let tx = block.transactions()[0].clone();
        Ok((block, Planned { tx, sender: usize::MAX, true_note: None, note_owners, links: Vec::new() }))
    }

    fn plan_block(&mut self, state: &ChainState) -> Result<Vec<Planned>, ScenarioError> {
        let mut scratch = state.clone();
        let height = scratch.next_height();
        let mut plans = Vec::new();
        let push = |scratch: &mut ChainState, plan: Planned, plans: &mut Vec<Planned>| {
            scratch.apply_transaction(&plan.tx, height).expect("planned transactions are valid");
            plans.push(plan);
        };

        if let Some(mixer) = self.mixer {
            if self.mixer_pending.len() >= 2 {
                let pending = std::mem::take(&mut self.mixer_pending);
                if let Some(plan) = self.payout("mixer", mixer, &pending, &scratch)? {
                    push(&mut scratch, plan, &mut plans);
                } else {
                    self.mixer_pending = pending;
                }
            }
        }
        if let Some((_, reserve)) = self.swap {
            if !self.swap_pending.is_empty() {
                let pending = std::mem::take(&mut self.swap_pending);
                if let Some(plan) = self.payout("swap", reserve, &pending, &scratch)? {
                    push(&mut scratch, plan, &mut plans);
                } else {
                    self.swap_pending = pending;
                }
            }
        }

        for _ in 0..self.spec.txs_per_block {
            let shielded = self.spec.shielded_ratio > 0.0 && self.rng.gen_bool(self.spec.shielded_ratio);
            let plan = if shielded { self.shielded_spend(&scratch)? } else { self.transparent_action(&scratch)? };
            if let Some(plan) = plan {
                push(&mut scratch, plan, &mut plans);
            }
        }
        Ok(plans)
    }

    fn fresh_address(&mut self, actor: usize) -> Address {
        let key = self.rng.gen_range(1..WALLET_KEYS);
        self.parties[actor].wallet.addresses()[key]
    }

    fn other_actor(&mut self, actor: usize) -> usize {
        let offset = self.rng.gen_range(1..self.spec.actors);
        (actor + offset) % self.spec.actors
    }

    /// `payer` repays each pending deposit, less a small cut, to a fresh
    /// address of its depositor.
    fn payout(
        &mut self,
        via: &'static str,
        payer: usize,
        pending: &[(usize, TxId, Amount)],
        state: &ChainState,
    ) -> Result<Option<Planned>, ScenarioError> {
        let mut payments = Vec::new();
        let mut links = Vec::new();
        for &(actor, deposit, amount) in pending {
            let net = amount - amount * 3 / 100;
            payments.push(Payment::transparent(self.fresh_address(actor), net));
            links.push((via, actor, deposit, net));
        }
        let seed = self.next_seed("payout");
        match build_payment_tx(&self.parties[payer].wallet, &payments, 1, state, &seed) {
            Ok(tx) => Ok(Some(Planned { tx: Transaction::Transparent(tx), sender: payer, true_note: None, note_owners: Vec::new(), links })),
            Err(LedgerError::InsufficientFunds { .. }) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    fn transparent_action(&mut self, state: &ChainState) -> Result<Option<Planned>, ScenarioError> {
        let sender = self.rng.gen_range(0..self.spec.actors);
        let balance = self.parties[sender].wallet.balance(state);
        let roll = self.rng.gen_range(0..100u32);
        let fee = self.rng.gen_range(0..=2);
        let (payment, note_owner, pending) = if self.mixer.is_some() && roll < 15 {
            let amount = self.rng.gen_range(100..=(balance / 4).max(100));
            let mixer = self.mixer.expect("checked");
            (Payment::transparent(self.parties[mixer].wallet.primary_address(), amount), None, Some("mixer"))
        } else if self.swap.is_some() && roll < 30 {
            let amount = self.rng.gen_range(100..=(balance / 4).max(100));
            let (desk, _) = self.swap.expect("checked");
            (Payment::transparent(self.parties[desk].wallet.primary_address(), amount), None, Some("swap"))
        } else if self.spec.shielded_ratio > 0.0 && roll < 45 {
            let recipient = self.other_actor(sender);
            (Payment::stealth(self.parties[recipient].stealth.address(), NOTE_VALUE), Some(recipient), None)
        } else {
            let recipient = self.other_actor(sender);
            let amount = self.rng.gen_range(1..=(balance / 3).max(1));
            let key = self.rng.gen_range(0..WALLET_KEYS);
            (Payment::transparent(self.parties[recipient].wallet.addresses()[key], amount), None, None)
        };
        if u128::from(payment.amount) + u128::from(fee) > u128::from(balance) {
            return Ok(None);
        }
        let seed = self.next_seed("transparent");
        let tx = Transaction::Transparent(build_payment_tx(&self.parties[sender].wallet, &[payment], fee, state, &seed)?);
        match pending {
            Some("mixer") => self.mixer_pending.push((sender, tx.txid(), payment.amount)),
            Some(_) => self.swap_pending.push((sender, tx.txid(), payment.amount)),
            None => {}
        }
        Ok(Some(Planned { tx, sender, true_note: None, note_owners: note_owner.into_iter().collect(), links: Vec::new() }))
    }

    fn shielded_spend(&mut self, state: &ChainState) -> Result<Option<Planned>, ScenarioError> {
        let owned: Vec<u64> = (0..self.note_owner.len() as u64)
            .filter(|n| !self.spent_notes.contains(n) && self.note_owner[*n as usize] < self.spec.actors)
            .filter(|n| state.shielded_output(ShieldedRef(*n)).is_some_and(|e| e.amount == NOTE_VALUE))
            .collect();
        if owned.is_empty() {
            return Ok(None);
        }
        let note = owned[self.rng.gen_range(0..owned.len())];
        let sender = self.note_owner[note as usize];
        let recipient = self.other_actor(sender);
        let (payment, fee, note_owners) = if self.rng.gen_range(0..10) < 7 {
            (Payment::stealth(self.parties[recipient].stealth.address(), NOTE_VALUE), 0, vec![recipient])
        } else {
            let address = self.fresh_address(recipient);
            (Payment::transparent(address, NOTE_VALUE - 1), 1, Vec::new())
        };
        let seed = self.next_seed("shielded");
        let keys = &self.parties[sender].stealth;
        let mut decoys = self.spec.ring_size - 1;
        let tx = loop {
            match build_shielded_spend(keys, ShieldedRef(note), decoys, &[payment], fee, state, &seed) {
                Ok(tx) => break tx,
                Err(LedgerError::NotEnoughDecoys { available, .. }) if available < decoys => decoys = available,
                Err(e) => return Err(e.into()),
            }
        };
        self.spent_notes.insert(note);
        Ok(Some(Planned { tx: Transaction::Shielded(tx), sender, true_note: Some(note), note_owners, links: Vec::new() }))
    }

    fn owner_name(&self, party: usize) -> String {
        self.parties.get(party).map_or_else(|| "genesis".to_string(), |p| p.identity.clone())
    }

    /// Appends truth records and registrations for a block just added.
    fn record(&mut self, chain: &Chain, height: u64, plans: Vec<Planned>) -> Result<(), ScenarioError> {
        let state = chain.state();
        for plan in plans {
            let txid = plan.tx.txid();
            let mut owners = plan.note_owners.iter();
            let mut outputs = Vec::new();
            for (index, output) in plan.tx.outputs().iter().enumerate() {
                let outpoint = plan.tx.outpoint(index as u32);
                let (holder, owner) = match output {
                    TxOutput::Transparent { address, .. } => {
                        (TruthHolder::Address(*address), self.address_owner.get(address).copied().unwrap_or(usize::MAX))
                    }
                    TxOutput::Stealth { meta, .. } => {
                        let reference = self.note_owner.len() as u64;
                        let owner = match owners.next() {
                            Some(&o) => o,
                            // Change of a shielded spend returns to its sender.
                            None => plan.sender,
                        };
                        debug_assert_eq!(
                            state.shielded_output(ShieldedRef(reference)).map(|e| e.meta.onetime_public),
                            Some(meta.onetime_public)
                        );
                        self.note_owner.push(owner);
                        self.registry.register_mapping(self.owner_name(owner), AnonymousId::for_stealth(meta), height)?;
                        (TruthHolder::Note(reference), owner)
                    }
                };
                outputs.push(TruthOutput { outpoint, holder, owner: self.owner_name(owner), amount: output.amount() });
            }
            let spent = match &plan.tx {
                Transaction::Transparent(t) => t.inputs.iter().map(|i| i.prev).collect(),
                Transaction::Shielded(_) => {
                    let note = plan.true_note.expect("shielded plans name their note");
                    vec![state.shielded_output(ShieldedRef(note)).expect("note exists").outpoint]
                }
                Transaction::Mint(_) => Vec::new(),
            };
            self.truth.push(TruthRecord::Transfer {
                height,
                txid,
                kind: plan.tx.kind().to_string(),
                sender: self.owner_name(plan.sender),
                spent,
                true_note: plan.true_note,
                outputs,
                fee: plan.tx.fee(),
            });
            for (via, actor, deposit_txid, amount) in plan.links {
                self.truth.push(TruthRecord::EconomicLink {
                    via: via.to_string(),
                    actor: self.owner_name(actor),
                    deposit_txid,
                    payout_txid: txid,
                    amount,
                });
            }
        }
        Ok(())
    }
}
