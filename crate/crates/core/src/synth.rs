//! Seeded synthetic ledgers with labelled behaviour archetypes.
//!
//! * `hub` receives small payments from fresh payers every block, sometimes
//!   as two outputs of one transaction, and now and then pays some of them
//!   back out. Labelled Ponzi scheme.
//! * `one-shot` is funded once by a shared source and sweeps everything to
//!   fresh addresses within a few blocks. Labelled money laundering.
//! * `periodic-payer` is paid on a fixed schedule by a shared employer and
//!   spends at shared merchants. Labelled individual wallet.
//!
//! Every block also carries a coinbase to a small set of pool addresses and
//! a few background transfers.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::{Label, LabelRecord, Strength};
use crate::ledger::{RawBlock, RawTx, TxEntry};

const SATS: u64 = 100_000_000;
const SUBSIDY: u64 = 625_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Archetype {
    Hub,
    OneShot,
    PeriodicPayer,
}

impl Archetype {
    pub const ALL: [Archetype; 3] = [Archetype::Hub, Archetype::OneShot, Archetype::PeriodicPayer];

    pub fn label(self) -> Label {
        match self {
            Archetype::Hub => Label::PonziScheme,
            Archetype::OneShot => Label::MoneyLaundering,
            Archetype::PeriodicPayer => Label::IndividualWallet,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Archetype::Hub => "hub",
            Archetype::OneShot => "one-shot",
            Archetype::PeriodicPayer => "periodic-payer",
        }
    }
}

impl fmt::Display for Archetype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Archetype {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Archetype::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown archetype `{s}` (expected hub, one-shot or periodic-payer)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub blocks: usize,
    pub archetypes: Vec<Archetype>,
    /// Labelled addresses generated per archetype.
    pub addresses_per_archetype: usize,
    pub start_height: u64,
    pub start_timestamp: u64,
    /// Mean seconds between blocks; each gap is jittered by up to a quarter.
    pub block_interval: u64,
    /// Unlabelled background transfers per block.
    pub noise_per_block: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            blocks: 50,
            archetypes: Archetype::ALL.to_vec(),
            addresses_per_archetype: 10,
            start_height: 0,
            start_timestamp: 1_600_000_000,
            block_interval: 14_400,
            noise_per_block: 3,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.archetypes.is_empty() {
            return Err(Error::Config("at least one archetype is required".into()));
        }
        if self.blocks == 0 {
            return Err(Error::Config("block count must be at least 1".into()));
        }
        if self.addresses_per_archetype == 0 {
            return Err(Error::Config("addresses per archetype must be at least 1".into()));
        }
        if self.start_timestamp == 0 {
            return Err(Error::Config("start timestamp must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthLedger {
    pub blocks: Vec<RawBlock>,
    pub labels: Vec<LabelRecord>,
}

struct Names {
    next_address: u64,
}

impl Names {
    fn address(&mut self) -> String {
        self.next_address += 1;
        format!("addr{:07}", self.next_address)
    }
}

struct Hub {
    address: String,
    payers: Vec<String>,
    balance: u64,
    payout_every: usize,
}

struct OneShot {
    address: String,
    source: usize,
    funded_at: usize,
    spent_at: usize,
    amount: u64,
}

struct Wallet {
    address: String,
    employer: usize,
    salary: u64,
    period: usize,
    phase: usize,
    balance: u64,
}

struct BlockBuilder {
    height: u64,
    txs: Vec<RawTx>,
}

impl BlockBuilder {
    fn push(&mut self, inputs: Vec<TxEntry>, outputs: Vec<TxEntry>) {
        let txid = format!("tx{}-{}", self.height, self.txs.len());
        self.txs.push(RawTx {
            txid,
            is_coinbase: inputs.is_empty(),
            inputs,
            outputs,
        });
    }
}

/// Split `total` into `parts` positive pieces (or zeros when `total` is
/// smaller than `parts`).
fn split_amount(rng: &mut ChaCha8Rng, total: u64, parts: usize) -> Vec<u64> {
    let weights: Vec<u64> = (0..parts).map(|_| rng.gen_range(1..=100)).collect();
    let sum: u64 = weights.iter().sum();
    let mut pieces: Vec<u64> = weights
        .iter()
        .map(|w| (total as u128 * *w as u128 / sum as u128) as u64)
        .collect();
    let assigned: u64 = pieces.iter().sum();
    pieces[0] += total - assigned;
    pieces
}

pub fn synth_ledger(config: &SynthConfig, seed: u64) -> Result<SynthLedger> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut names = Names { next_address: 0 };
    let n = config.addresses_per_archetype;
    let blocks = config.blocks;

    let mut archetypes = config.archetypes.clone();
    archetypes.sort();
    archetypes.dedup();
    let wants = |a: Archetype| archetypes.contains(&a);

    let pools: Vec<String> = (0..3).map(|_| names.address()).collect();
    let background: Vec<String> = (0..20).map(|_| names.address()).collect();

    let mut labels = Vec::new();
    let mut hubs = Vec::new();
    let mut one_shots = Vec::new();
    let mut wallets = Vec::new();
    let mut sources = Vec::new();
    let mut employers = Vec::new();
    let mut merchants = Vec::new();

    if wants(Archetype::Hub) {
        for _ in 0..n {
            hubs.push(Hub {
                address: names.address(),
                payers: Vec::new(),
                balance: 0,
                payout_every: rng.gen_range(3..=6),
            });
        }
    }
    if wants(Archetype::OneShot) {
        sources = (0..n.div_ceil(8)).map(|_| names.address()).collect();
        for _ in 0..n {
            let funded_at = rng.gen_range(0..blocks);
            let delay = rng.gen_range(1..=3);
            one_shots.push(OneShot {
                address: names.address(),
                source: rng.gen_range(0..sources.len()),
                funded_at,
                spent_at: (funded_at + delay).min(blocks - 1),
                amount: rng.gen_range(SATS..=20 * SATS),
            });
        }
    }
    if wants(Archetype::PeriodicPayer) {
        employers = (0..n.div_ceil(10)).map(|_| names.address()).collect();
        merchants = (0..n.div_ceil(5).max(2)).map(|_| names.address()).collect();
        for _ in 0..n {
            let period = rng.gen_range(3..=6);
            wallets.push(Wallet {
                address: names.address(),
                employer: rng.gen_range(0..employers.len()),
                salary: rng.gen_range(SATS / 20..=SATS / 2),
                period,
                phase: rng.gen_range(0..period),
                balance: 0,
            });
        }
    }
    for (archetype, addresses) in [
        (Archetype::Hub, hubs.iter().map(|h| &h.address).collect::<Vec<_>>()),
        (Archetype::OneShot, one_shots.iter().map(|o| &o.address).collect()),
        (Archetype::PeriodicPayer, wallets.iter().map(|w| &w.address).collect()),
    ] {
        for address in addresses {
            labels.push(LabelRecord {
                address: address.clone(),
                label: archetype.label(),
                strength: Strength::Strong,
            });
        }
    }

    let mut out = Vec::with_capacity(blocks);
    let mut timestamp = config.start_timestamp;
    for b in 0..blocks {
        if b > 0 {
            let jitter = config.block_interval / 4;
            let gap = config.block_interval - jitter + rng.gen_range(0..=2 * jitter);
            timestamp += gap.max(1);
        }
        let mut block = BlockBuilder {
            height: config.start_height + b as u64,
            txs: Vec::new(),
        };
        let pool = pools.choose(&mut rng).expect("non-empty pool list");
        block.push(Vec::new(), vec![TxEntry::new(pool.clone(), SUBSIDY)]);

        for hub in &mut hubs {
            for _ in 0..rng.gen_range(1..=3) {
                let payer = names.address();
                let amount = rng.gen_range(SATS / 100..=SATS);
                let mut outputs = if rng.gen_bool(0.2) && amount > 1 {
                    let first = rng.gen_range(1..amount);
                    vec![
                        TxEntry::new(hub.address.clone(), first),
                        TxEntry::new(hub.address.clone(), amount - first),
                    ]
                } else {
                    vec![TxEntry::new(hub.address.clone(), amount)]
                };
                let mut spent = amount;
                if rng.gen_bool(0.5) {
                    let change = rng.gen_range(1..=amount);
                    outputs.push(TxEntry::new(payer.clone(), change));
                    spent += change;
                }
                block.push(vec![TxEntry::new(payer.clone(), spent)], outputs);
                hub.balance += amount;
                hub.payers.push(payer);
            }
            if b % hub.payout_every == hub.payout_every - 1 && hub.payers.len() >= 2 {
                let k = rng.gen_range(2..=5).min(hub.payers.len());
                let paid: Vec<String> = hub.payers.choose_multiple(&mut rng, k).cloned().collect();
                let total = hub.balance / 2;
                let pieces = split_amount(&mut rng, total, k);
                let mut outputs: Vec<TxEntry> = paid
                    .into_iter()
                    .zip(pieces)
                    .map(|(a, v)| TxEntry::new(a, v))
                    .collect();
                outputs.push(TxEntry::new(hub.address.clone(), hub.balance - total));
                block.push(vec![TxEntry::new(hub.address.clone(), hub.balance)], outputs);
                hub.balance -= total;
            }
        }

        // funding before sweeping so a same-block pair stays ordered
        for (s, source) in sources.iter().enumerate() {
            let due: Vec<&OneShot> = one_shots
                .iter()
                .filter(|o| o.source == s && o.funded_at == b)
                .collect();
            if due.is_empty() {
                continue;
            }
            let total: u64 = due.iter().map(|o| o.amount).sum();
            let change = rng.gen_range(SATS..=10 * SATS);
            let mut outputs: Vec<TxEntry> = due
                .iter()
                .map(|o| TxEntry::new(o.address.clone(), o.amount))
                .collect();
            outputs.push(TxEntry::new(source.clone(), change));
            block.push(vec![TxEntry::new(source.clone(), total + change)], outputs);
        }
        for o in one_shots.iter().filter(|o| o.spent_at == b) {
            let k = rng.gen_range(2..=4);
            let outputs = split_amount(&mut rng, o.amount, k)
                .into_iter()
                .map(|v| TxEntry::new(names.address(), v))
                .collect();
            block.push(vec![TxEntry::new(o.address.clone(), o.amount)], outputs);
        }

        for (e, employer) in employers.iter().enumerate() {
            let due: Vec<usize> = (0..wallets.len())
                .filter(|&w| {
                    let w = &wallets[w];
                    w.employer == e && (b == 0 || b % w.period == w.phase)
                })
                .collect();
            if due.is_empty() {
                continue;
            }
            let mut outputs = Vec::with_capacity(due.len() + 1);
            let mut total = 0;
            for &w in &due {
                let jitter = rng.gen_range(0..=wallets[w].salary / 50);
                let pay = wallets[w].salary + jitter;
                wallets[w].balance += pay;
                total += pay;
                outputs.push(TxEntry::new(wallets[w].address.clone(), pay));
            }
            let change = rng.gen_range(SATS..=5 * SATS);
            outputs.push(TxEntry::new(employer.clone(), change));
            block.push(vec![TxEntry::new(employer.clone(), total + change)], outputs);
        }
        for w in &mut wallets {
            if w.balance == 0 || !rng.gen_bool(0.3) {
                continue;
            }
            let merchant = merchants.choose(&mut rng).expect("merchants exist with wallets");
            let spend = rng.gen_range(1..=w.balance / 2 + 1).min(w.balance);
            let change = w.balance - spend;
            let mut outputs = vec![TxEntry::new(merchant.clone(), spend)];
            if change > 0 {
                outputs.push(TxEntry::new(w.address.clone(), change));
            }
            block.push(vec![TxEntry::new(w.address.clone(), w.balance)], outputs);
            w.balance = change;
        }

        for _ in 0..config.noise_per_block {
            let from = background.choose(&mut rng).expect("background pool");
            let to = background.choose(&mut rng).expect("background pool");
            let amount = rng.gen_range(SATS / 1000..=2 * SATS);
            let mut outputs = vec![TxEntry::new(to.clone(), amount)];
            if rng.gen_bool(0.5) {
                outputs.push(TxEntry::new(pools.choose(&mut rng).expect("pools").clone(), amount / 3 + 1));
            }
            let total = outputs.iter().map(|o| o.value_sats).sum();
            block.push(vec![TxEntry::new(from.clone(), total)], outputs);
        }

        out.push(RawBlock {
            height: block.height,
            timestamp,
            txs: block.txs,
        });
    }
    Ok(SynthLedger { blocks: out, labels })
}
