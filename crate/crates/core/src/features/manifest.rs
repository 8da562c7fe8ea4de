//! Ordered feature ids.
//!
//! Suffix conventions: `-1`/`-2` are in/out; `-1..-3` for in/out/all;
//! min/max pairs over in/out are `-1` in-min, `-2` in-max, `-3` out-min,
//! `-4` out-max (and `-5`/`-6` all-min/all-max where an "all" series exists);
//! min/max/avg triples are `-1` min, `-2` max, `-3` avg. Merged-edge
//! variants replace `-N` with `-RN`, or append `-R` to an unsuffixed id.

pub const PAI_IDS: [&str; 21] = [
    "PAIa11-1", "PAIa11-2", // total in / out
    "PAIa12",   // total in - total out
    "PAIa13",   // total in / total out
    "PAIa14-1", "PAIa14-2", "PAIa14-3", "PAIa14-4", // min/max per direction
    "PAIa15-1", "PAIa15-2", // max - min
    "PAIa16-1", "PAIa16-2", // (max - min) / total
    "PAIa17-1", "PAIa17-2", "PAIa17-3", // std in / out / all
    "PAIa21-1", "PAIa21-2", "PAIa21-3", "PAIa21-4", // share min/max
    "PAIa22-1", "PAIa22-2", // share std
];

pub const PDI_IDS: [&str; 7] = [
    "PDIa1-1", "PDIa1-2", "PDIa1-3", // in / out / all degree
    "PDIa11-1", "PDIa11-2", // in/all, out/all
    "PDIa12", // in/out
    "PDIa13", // in - out
];

pub const PTI_IDS: [&str; 13] = [
    "PTIa1",  // life period, days
    "PTIa2",  // active days
    "PTIa21", // active / life
    "PTIa31-1", "PTIa31-2", "PTIa31-3", // events per active day min/max/avg
    "PTIa32", // max - min
    "PTIa33", // std
    "PTIa41-1", "PTIa41-2", "PTIa41-3", // inter-event gap min/max/avg
    "PTIa42", // max - min
    "PTIa43", // std
];

pub const CI_IDS: [&str; 67] = [
    // amount per unit degree
    "CI1a1-1", "CI1a1-2", "CI1a2",
    // daily amounts
    "CI2a11-1", "CI2a11-2",
    "CI2a12-1", "CI2a12-2", "CI2a12-3", "CI2a12-4",
    // daily amounts over life period
    "CI2a21-1", "CI2a21-2",
    "CI2a22-1", "CI2a22-2", "CI2a22-3", "CI2a22-4",
    "CI2a23-1", "CI2a23-2",
    // amount change per gap
    "CI2a31-1", "CI2a31-2",
    "CI2a32-1", "CI2a32-2", "CI2a32-3", "CI2a32-4",
    "CI2a33-1", "CI2a33-2",
    // daily degrees
    "CI3a11-1", "CI3a11-2",
    "CI3a12-1", "CI3a12-2", "CI3a12-3", "CI3a12-4",
    // daily degrees over life period, in / out / all
    "CI3a21-1", "CI3a21-2", "CI3a21-3",
    "CI3a22-1", "CI3a22-2", "CI3a22-3", "CI3a22-4", "CI3a22-5", "CI3a22-6",
    "CI3a23-1", "CI3a23-2", "CI3a23-3",
    // degree change per gap
    "CI3a31-1", "CI3a31-2",
    "CI3a32-1", "CI3a32-2", "CI3a32-3", "CI3a32-4",
    "CI3a33-1", "CI3a33-2",
    // cumulative amount per degree over elapsed life, per active day
    "CI4a11", "CI4a12-1", "CI4a12-2", "CI4a13",
    "CI4a21", "CI4a22-1", "CI4a22-2", "CI4a23",
    // degree change per gap, over the gap again
    "CI4a31", "CI4a32-1", "CI4a32-2", "CI4a33",
    "CI4a41", "CI4a42-1", "CI4a42-2", "CI4a43",
];

/// Merged-edge variants: every PAI id and the three raw degrees.
pub const MERGED_IDS: [&str; 24] = [
    "PAIa11-R1", "PAIa11-R2",
    "PAIa12-R",
    "PAIa13-R",
    "PAIa14-R1", "PAIa14-R2", "PAIa14-R3", "PAIa14-R4",
    "PAIa15-R1", "PAIa15-R2",
    "PAIa16-R1", "PAIa16-R2",
    "PAIa17-R1", "PAIa17-R2", "PAIa17-R3",
    "PAIa21-R1", "PAIa21-R2", "PAIa21-R3", "PAIa21-R4",
    "PAIa22-R1", "PAIa22-R2",
    "PDIa1-R1", "PDIa1-R2", "PDIa1-R3",
];

pub const LSI_IDS: [&str; 16] = [
    "S1-1", "S1-2", "S1-3", // mean in / out / total degree
    "S1-4", "S1-5", "S1-6", // std in / out / total degree
    "S2-1", "S2-2", "S2-3", // max degree-distribution share in / out / total
    "S3", // degree correlation
    "S4", // origin betweenness
    "S5", // average shortest path
    "S6", // diameter
    "S7", // origin closeness
    "S8", // origin pagerank
    "S9", // density
];

pub const SI_LEN: usize = 132;
pub const LSI_LEN: usize = 16;
pub const FEATURE_LEN: usize = SI_LEN + LSI_LEN;

/// Manifest format version, bumped on any id or order change.
pub const MANIFEST_VERSION: u32 = 1;

/// The 132 statistical-indicator ids in column order.
pub fn si_ids() -> Vec<&'static str> {
    let mut ids = Vec::with_capacity(SI_LEN);
    ids.extend(PAI_IDS);
    ids.extend(PDI_IDS);
    ids.extend(PTI_IDS);
    ids.extend(CI_IDS);
    ids.extend(MERGED_IDS);
    ids
}

/// All 148 ids: SI columns then LSI columns.
pub fn feature_ids() -> Vec<&'static str> {
    let mut ids = si_ids();
    ids.extend(LSI_IDS);
    ids
}

/// Merged-edge id for a base PAI/PDI id, if it has one.
pub fn merged_id(base: &str) -> Option<&'static str> {
    let (stem, rsuffix) = match base.rsplit_once('-') {
        Some((stem, n)) if n.chars().all(|c| c.is_ascii_digit()) => (stem, format!("-R{n}")),
        _ => (base, "-R".to_string()),
    };
    let wanted = format!("{stem}{rsuffix}");
    MERGED_IDS.iter().copied().find(|id| *id == wanted)
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ManifestEntry {
    pub id: &'static str,
    pub group: &'static str,
    pub description: &'static str,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct Manifest {
    pub version: u32,
    pub si_count: usize,
    pub lsi_count: usize,
    pub features: Vec<ManifestEntry>,
}

fn group_of(id: &str) -> &'static str {
    if id.contains("-R") {
        "SI/merged"
    } else if id.starts_with("PAI") {
        "SI/PAI"
    } else if id.starts_with("PDI") {
        "SI/PDI"
    } else if id.starts_with("PTI") {
        "SI/PTI"
    } else if id.starts_with("CI") {
        "SI/CI"
    } else {
        "LSI"
    }
}

fn describe(id: &str) -> &'static str {
    let base = id.replace("-R", "-");
    let base = base.trim_end_matches('-');
    match base {
        "PAIa11-1" => "total received amount (BTC)",
        "PAIa11-2" => "total sent amount (BTC)",
        "PAIa12" => "total received minus total sent",
        "PAIa13" => "total received / total sent",
        "PAIa14-1" => "smallest received amount",
        "PAIa14-2" => "largest received amount",
        "PAIa14-3" => "smallest sent amount",
        "PAIa14-4" => "largest sent amount",
        "PAIa15-1" => "received amount range",
        "PAIa15-2" => "sent amount range",
        "PAIa16-1" => "received amount range / total received",
        "PAIa16-2" => "sent amount range / total sent",
        "PAIa17-1" => "std of received amounts",
        "PAIa17-2" => "std of sent amounts",
        "PAIa17-3" => "std of all amounts",
        "PAIa21-1" => "smallest received share of total received",
        "PAIa21-2" => "largest received share of total received",
        "PAIa21-3" => "smallest sent share of total sent",
        "PAIa21-4" => "largest sent share of total sent",
        "PAIa22-1" => "std of received shares",
        "PAIa22-2" => "std of sent shares",
        "PDIa1-1" => "in-degree",
        "PDIa1-2" => "out-degree",
        "PDIa1-3" => "total degree",
        "PDIa11-1" => "in-degree / total degree",
        "PDIa11-2" => "out-degree / total degree",
        "PDIa12" => "in-degree / out-degree",
        "PDIa13" => "in-degree minus out-degree",
        "PTIa1" => "life period in days (last - first event)",
        "PTIa2" => "number of active UTC days",
        "PTIa21" => "active days / life period",
        "PTIa31-1" => "fewest events on an active day",
        "PTIa31-2" => "most events on an active day",
        "PTIa31-3" => "mean events per active day",
        "PTIa32" => "range of events per active day",
        "PTIa33" => "std of events per active day",
        "PTIa41-1" => "shortest inter-event gap (s)",
        "PTIa41-2" => "longest inter-event gap (s)",
        "PTIa41-3" => "mean inter-event gap (s)",
        "PTIa42" => "range of inter-event gaps",
        "PTIa43" => "std of inter-event gaps",
        "CI1a1-1" => "total received / in-degree",
        "CI1a1-2" => "total sent / out-degree",
        "CI1a2" => "(received - sent) / (in-degree - out-degree)",
        "S1-1" => "mean in-degree of the subgraph",
        "S1-2" => "mean out-degree of the subgraph",
        "S1-3" => "mean total degree of the subgraph",
        "S1-4" => "std of in-degree",
        "S1-5" => "std of out-degree",
        "S1-6" => "std of total degree",
        "S2-1" => "largest in-degree distribution share",
        "S2-2" => "largest out-degree distribution share",
        "S2-3" => "largest total-degree distribution share",
        "S3" => "degree correlation over edges",
        "S4" => "betweenness of the origin",
        "S5" => "mean directed shortest-path length",
        "S6" => "directed diameter",
        "S7" => "closeness of the origin",
        "S8" => "pagerank of the origin",
        "S9" => "edge density",
        _ => describe_ci(base),
    }
}

fn describe_ci(id: &str) -> &'static str {
    let stem = id.split('-').next().unwrap_or(id);
    match stem {
        "CI2a11" => "mean daily amount (in/out)",
        "CI2a12" => "min/max daily amount",
        "CI2a21" => "mean daily amount / life period",
        "CI2a22" => "min/max daily amount / life period",
        "CI2a23" => "std of daily amount / life period",
        "CI2a31" => "mean amount change per gap second",
        "CI2a32" => "min/max amount change per gap second",
        "CI2a33" => "std of amount change per gap second",
        "CI3a11" => "mean daily degree (in/out)",
        "CI3a12" => "min/max daily degree",
        "CI3a21" => "mean daily degree / life period (in/out/all)",
        "CI3a22" => "min/max daily degree / life period",
        "CI3a23" => "std of daily degree / life period",
        "CI3a31" => "mean degree change per gap second",
        "CI3a32" => "min/max degree change per gap second",
        "CI3a33" => "std of degree change per gap second",
        "CI4a11" | "CI4a12" | "CI4a13" => {
            "daily cumulative received-per-in-edge / elapsed days: mean, min/max, std"
        }
        "CI4a21" | "CI4a22" | "CI4a23" => {
            "daily cumulative sent-per-out-edge / elapsed days: mean, min/max, std"
        }
        "CI4a31" | "CI4a32" | "CI4a33" => "in-degree change per gap / gap: mean, min/max, std",
        "CI4a41" | "CI4a42" | "CI4a43" => "out-degree change per gap / gap: mean, min/max, std",
        _ => "",
    }
}

pub fn manifest() -> Manifest {
    Manifest {
        version: MANIFEST_VERSION,
        si_count: SI_LEN,
        lsi_count: LSI_LEN,
        features: feature_ids()
            .into_iter()
            .map(|id| ManifestEntry {
                id,
                group: group_of(id),
                description: describe(id),
            })
            .collect(),
    }
}
