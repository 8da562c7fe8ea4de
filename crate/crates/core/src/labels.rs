//! Address labels: CSV `address,label_id,strength`.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The thirteen behaviour classes, in their canonical id order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Label {
    Blackmail = 0,
    CyberSecurityService = 1,
    DarknetMarket = 2,
    CentralizedExchange = 3,
    P2pFinancialInfrastructureService = 4,
    P2pFinancialService = 5,
    Gambling = 6,
    GovernmentCriminalBlacklist = 7,
    MoneyLaundering = 8,
    PonziScheme = 9,
    MiningPool = 10,
    Tumbler = 11,
    IndividualWallet = 12,
}

impl Label {
    pub const ALL: [Label; 13] = [
        Label::Blackmail,
        Label::CyberSecurityService,
        Label::DarknetMarket,
        Label::CentralizedExchange,
        Label::P2pFinancialInfrastructureService,
        Label::P2pFinancialService,
        Label::Gambling,
        Label::GovernmentCriminalBlacklist,
        Label::MoneyLaundering,
        Label::PonziScheme,
        Label::MiningPool,
        Label::Tumbler,
        Label::IndividualWallet,
    ];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Option<Label> {
        Label::ALL.get(id as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::Blackmail => "blackmail",
            Label::CyberSecurityService => "cyber-security service",
            Label::DarknetMarket => "darknet market",
            Label::CentralizedExchange => "centralized exchange",
            Label::P2pFinancialInfrastructureService => "p2p financial infrastructure service",
            Label::P2pFinancialService => "p2p financial service",
            Label::Gambling => "gambling",
            Label::GovernmentCriminalBlacklist => "government criminal blacklist",
            Label::MoneyLaundering => "money laundering",
            Label::PonziScheme => "ponzi scheme",
            Label::MiningPool => "mining pool",
            Label::Tumbler => "tumbler",
            Label::IndividualWallet => "individual wallet",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Label confidence: strongly confirmed (SA) or weakly confirmed, e.g. reported (WA).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strength {
    #[serde(rename = "SA")]
    Strong,
    #[serde(rename = "WA")]
    Weak,
}

impl Strength {
    pub fn as_str(self) -> &'static str {
        match self {
            Strength::Strong => "SA",
            Strength::Weak => "WA",
        }
    }
}

impl FromStr for Strength {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "SA" => Ok(Strength::Strong),
            "WA" => Ok(Strength::Weak),
            other => Err(format!("strength must be SA or WA, got `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelRecord {
    pub address: String,
    pub label: Label,
    pub strength: Strength,
}

/// Read a labels CSV. A header row `address,label_id,strength` is optional.
pub fn read_labels<R: Read>(source: R) -> Result<Vec<LabelRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (idx, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = idx + 1;
        let bad = |message: String| Error::Labels { line, message };
        if idx == 0 && rec.get(0) == Some("address") {
            continue;
        }
        if rec.len() != 3 {
            return Err(bad(format!("expected 3 fields, found {}", rec.len())));
        }
        let address = rec[0].to_string();
        if address.is_empty() {
            return Err(bad("empty address".into()));
        }
        let label = rec[1]
            .parse::<u8>()
            .ok()
            .and_then(Label::from_id)
            .ok_or_else(|| bad(format!("label_id must be in 0..=12, got `{}`", &rec[1])))?;
        let strength = rec[2].parse::<Strength>().map_err(bad)?;
        if !seen.insert(address.clone()) {
            return Err(bad(format!("duplicate address `{address}`")));
        }
        out.push(LabelRecord {
            address,
            label,
            strength,
        });
    }
    Ok(out)
}

pub fn write_labels<W: Write>(records: &[LabelRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["address", "label_id", "strength"])?;
    for r in records {
        w.write_record([
            r.address.as_str(),
            &r.label.id().to_string(),
            r.strength.as_str(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_ids_follow_canonical_order() {
        assert_eq!(Label::Blackmail.id(), 0);
        assert_eq!(Label::DarknetMarket.id(), 2);
        assert_eq!(Label::MoneyLaundering.id(), 8);
        assert_eq!(Label::PonziScheme.id(), 9);
        assert_eq!(Label::IndividualWallet.id(), 12);
        assert_eq!(Label::from_id(13), None);
        for l in Label::ALL {
            assert_eq!(Label::from_id(l.id()), Some(l));
        }
    }

    #[test]
    fn reads_with_and_without_header() {
        let with = "address,label_id,strength\nA,9,SA\nB,12,WA\n";
        let without = "A,9,SA\nB,12,WA\n";
        let a = read_labels(with.as_bytes()).unwrap();
        let b = read_labels(without.as_bytes()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[1].strength, Strength::Weak);
        let mut buf = Vec::new();
        write_labels(&a, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), with);
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(read_labels("A,13,SA\n".as_bytes()).is_err());
        assert!(read_labels("A,1,XX\n".as_bytes()).is_err());
        assert!(read_labels("A,1,SA\nA,2,SA\n".as_bytes()).is_err());
        assert!(read_labels("A,1\n".as_bytes()).is_err());
    }
}
