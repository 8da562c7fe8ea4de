//! Newline-delimited JSON block files.
//!
//! One block per line:
//!
//! ```text
//! {"height":u64,"timestamp":u64,"txs":[{"txid":str,"is_coinbase":bool,
//!   "inputs":[{"address":str,"value_sats":u64}],"outputs":[...]}]}
//! ```
//!
//! Inputs carry their resolved address and value; there is no previous-output
//! lookup. Values are integer satoshi. Zero-valued entries are accepted.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawBlock {
    pub height: u64,
    pub timestamp: u64,
    pub txs: Vec<RawTx>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTx {
    pub txid: String,
    pub is_coinbase: bool,
    pub inputs: Vec<TxEntry>,
    pub outputs: Vec<TxEntry>,
}

/// One input or output: an address and the satoshi value moved.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxEntry {
    pub address: String,
    pub value_sats: u64,
}

impl TxEntry {
    pub fn new(address: impl Into<String>, value_sats: u64) -> Self {
        TxEntry {
            address: address.into(),
            value_sats,
        }
    }
}

// Wire mirror of the block types with signed values, so that a negative
// amount is reported as a validation failure rather than a JSON type error.
#[derive(Deserialize)]
struct WireBlock {
    height: u64,
    timestamp: u64,
    txs: Vec<WireTx>,
}

#[derive(Deserialize)]
struct WireTx {
    txid: String,
    is_coinbase: bool,
    inputs: Vec<WireEntry>,
    outputs: Vec<WireEntry>,
}

#[derive(Deserialize)]
struct WireEntry {
    address: String,
    value_sats: i64,
}

impl WireBlock {
    fn into_block(self) -> Result<RawBlock> {
        let height = self.height;
        let convert = |entries: Vec<WireEntry>, field: &'static str| -> Result<Vec<TxEntry>> {
            entries
                .into_iter()
                .map(|e| {
                    if e.value_sats < 0 {
                        return Err(Error::Validation {
                            height,
                            field,
                            message: format!("negative value {} for `{}`", e.value_sats, e.address),
                        });
                    }
                    Ok(TxEntry {
                        address: e.address,
                        value_sats: e.value_sats as u64,
                    })
                })
                .collect()
        };
        let mut txs = Vec::with_capacity(self.txs.len());
        for tx in self.txs {
            txs.push(RawTx {
                txid: tx.txid,
                is_coinbase: tx.is_coinbase,
                inputs: convert(tx.inputs, "inputs.value_sats")?,
                outputs: convert(tx.outputs, "outputs.value_sats")?,
            });
        }
        Ok(RawBlock {
            height,
            timestamp: self.timestamp,
            txs,
        })
    }
}

/// Incremental validator for a block stream.
#[derive(Debug, Default)]
pub struct Validator {
    last_height: Option<u64>,
    txids: HashSet<String>,
}

impl Validator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn check(&mut self, block: &RawBlock) -> Result<()> {
        let height = block.height;
        let fail = |field: &'static str, message: String| Error::Validation {
            height,
            field,
            message,
        };
        if let Some(prev) = self.last_height {
            if height <= prev {
                return Err(fail(
                    "height",
                    format!("heights must strictly increase (previous {prev})"),
                ));
            }
        }
        if block.timestamp == 0 {
            return Err(fail("timestamp", "timestamp must be positive".into()));
        }
        for tx in &block.txs {
            if tx.txid.is_empty() {
                return Err(fail("txid", "empty txid".into()));
            }
            if tx.is_coinbase && !tx.inputs.is_empty() {
                return Err(fail(
                    "inputs",
                    format!("coinbase tx `{}` has inputs", tx.txid),
                ));
            }
            if !tx.is_coinbase && tx.inputs.is_empty() {
                return Err(fail(
                    "inputs",
                    format!("non-coinbase tx `{}` has no inputs", tx.txid),
                ));
            }
            if tx.outputs.is_empty() {
                return Err(fail("outputs", format!("tx `{}` has no outputs", tx.txid)));
            }
            if tx.inputs.iter().chain(&tx.outputs).any(|e| e.address.is_empty()) {
                return Err(fail("address", format!("empty address in tx `{}`", tx.txid)));
            }
            if !self.txids.insert(tx.txid.clone()) {
                return Err(fail("txid", format!("duplicate txid `{}`", tx.txid)));
            }
        }
        self.last_height = Some(height);
        Ok(())
    }
}

/// Validate a complete block list as one stream.
pub fn validate_blocks(blocks: &[RawBlock]) -> Result<()> {
    let mut v = Validator::new();
    blocks.iter().try_for_each(|b| v.check(b))
}

/// Parse and validate a ledger stream. Blank lines are ignored.
pub fn parse_ledger<R: BufRead>(source: R) -> Result<Vec<RawBlock>> {
    let mut validator = Validator::new();
    let mut blocks = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let wire: WireBlock = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        let block = wire.into_block()?;
        validator.check(&block)?;
        blocks.push(block);
    }
    Ok(blocks)
}

/// Canonical serialization: one compact JSON object per line, fields in schema order.
pub fn write_ledger<W: Write>(blocks: &[RawBlock], mut out: W) -> Result<()> {
    for block in blocks {
        serde_json::to_writer(&mut out, block)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn ledger_to_string(blocks: &[RawBlock]) -> String {
    let mut buf = Vec::new();
    write_ledger(blocks, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}
