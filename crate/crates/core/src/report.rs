//! Detection-rate arithmetic, per-class tallies and report serialization.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::VerdictKind;
use crate::scenario::{AttackClass, Scenario, GENERATOR_NAME};
use crate::sim::DetectionRecord;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReportError {
    #[error("detected count {apd} exceeds total {tmp}")]
    CountExceedsTotal { apd: u64, tmp: u64 },
    #[error("unknown format {0:?} (expected json, jsonl, csv or text)")]
    UnknownFormat(String),
}

/// Packet detection rate held as the exact ratio `apd / tmp`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pdr {
    pub apd: u64,
    pub tmp: u64,
}

pub fn pdr(apd: u64, tmp: u64) -> Result<Pdr, ReportError> {
    if apd > tmp {
        return Err(ReportError::CountExceedsTotal { apd, tmp });
    }
    Ok(Pdr { apd, tmp })
}

impl Pdr {
    /// No abnormal frames were sent; the rate reads as zero.
    pub fn undefined(&self) -> bool {
        self.tmp == 0
    }

    /// Percentage in tenths, rounded half up.
    pub fn tenths(&self) -> u64 {
        if self.tmp == 0 {
            return 0;
        }
        let num = 2000 * self.apd as u128 + self.tmp as u128;
        (num / (2 * self.tmp as u128)) as u64
    }

    pub fn percent(&self) -> f64 {
        if self.tmp == 0 {
            0.0
        } else {
            100.0 * self.apd as f64 / self.tmp as f64
        }
    }

    /// Compares exact values, not the rendered ones.
    pub fn exceeds(&self, other: &Pdr) -> bool {
        (self.apd as u128) * (other.tmp.max(1) as u128)
            > (other.apd as u128) * (self.tmp.max(1) as u128)
    }

    /// Whether `lo <= percent <= hi`, exactly.
    pub fn within(&self, lo: u64, hi: u64) -> bool {
        let p = 100 * self.apd as u128;
        let t = self.tmp as u128;
        p >= lo as u128 * t && p <= hi as u128 * t
    }
}

impl fmt::Display for Pdr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.tenths();
        write!(f, "{}.{}", t / 10, t % 10)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub sent: u64,
    pub detected: u64,
    pub accepted: u64,
    pub ignored: u64,
}

impl ClassCounts {
    fn add(&mut self, v: VerdictKind) {
        self.sent += 1;
        match v {
            VerdictKind::Detected => self.detected += 1,
            VerdictKind::Accepted => self.accepted += 1,
            VerdictKind::Ignored => self.ignored += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub artifact_version: String,
    pub scenario_label: String,
    pub detector_name: String,
    pub generator: String,
    pub seed: u64,
    /// How the abnormal frames split across classes.
    pub composition: String,
    pub per_class: BTreeMap<AttackClass, ClassCounts>,
    pub pdr: Pdr,
    pub pdr_percent: String,
    pub pdr_undefined: bool,
    /// Detected verdicts on benign frames, or on frames emitted in response
    /// to benign frames, at any observer.
    pub false_positives: u64,
    pub emitted_frames: u64,
    pub unroutable_frames: u64,
    pub config: Scenario,
}

fn composition(s: &Scenario) -> String {
    let counts: Vec<u32> = AttackClass::ABNORMAL
        .iter()
        .map(|c| s.mix.get(c).copied().unwrap_or(0))
        .collect();
    let abnormal: u64 = counts.iter().map(|&n| n as u64).sum();
    let normal = s.mix.get(&AttackClass::Normal).copied().unwrap_or(0);
    if counts.iter().all(|&n| n == counts[0]) {
        format!(
            "{normal} normal + {} x 11 abnormal = {abnormal}, uniform",
            counts[0]
        )
    } else {
        format!("{normal} normal + {abnormal} abnormal, non-uniform")
    }
}

/// Tallies each injected frame once, by the verdict at its designated
/// victim. A frame that never reached its victim counts as ignored.
pub fn build_report(records: &[DetectionRecord], s: &Scenario, detector_name: &str) -> Report {
    let mut frames: BTreeMap<u64, (AttackClass, Option<VerdictKind>)> = BTreeMap::new();
    let mut false_positives = 0;
    let mut emitted = BTreeMap::new();
    let mut unroutable = 0;
    for r in records {
        let benign = r.cause.is_none_or(|c| !c.is_abnormal());
        if benign && r.verdict == VerdictKind::Detected {
            false_positives += 1;
        }
        if r.observer == crate::sim::NO_OBSERVER {
            unroutable += 1;
        }
        match r.injected_class {
            None => {
                emitted.insert(r.frame_id, ());
            }
            Some(class) => {
                let slot = frames.entry(r.frame_id).or_insert((class, None));
                if r.designated {
                    slot.1 = Some(r.verdict);
                }
            }
        }
    }
    let mut per_class: BTreeMap<AttackClass, ClassCounts> = BTreeMap::new();
    for (class, verdict) in frames.into_values() {
        per_class
            .entry(class)
            .or_default()
            .add(verdict.unwrap_or(VerdictKind::Ignored));
    }
    let (apd, tmp) = per_class
        .iter()
        .filter(|(c, _)| c.is_abnormal())
        .fold((0, 0), |(d, t), (_, n)| (d + n.detected, t + n.sent));
    let rate = Pdr { apd, tmp };
    Report {
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        scenario_label: s.label.clone(),
        detector_name: detector_name.to_string(),
        generator: GENERATOR_NAME.to_string(),
        seed: s.seed.value,
        composition: composition(s),
        per_class,
        pdr: rate,
        pdr_percent: rate.to_string(),
        pdr_undefined: rate.undefined(),
        false_positives,
        emitted_frames: emitted.len() as u64,
        unroutable_frames: unroutable,
        config: s.clone(),
    }
}

impl Report {
    /// Parses a report written with [`Format::Json`].
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn counts(&self, class: AttackClass) -> ClassCounts {
        self.per_class.get(&class).copied().unwrap_or_default()
    }

    pub fn class_rate(&self, class: AttackClass) -> Pdr {
        let c = self.counts(class);
        Pdr {
            apd: c.detected,
            tmp: c.sent,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    JsonLines,
    Csv,
    Text,
}

impl FromStr for Format {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "jsonl" | "json-lines" | "jsonlines" => Ok(Format::JsonLines),
            "csv" => Ok(Format::Csv),
            "text" | "txt" => Ok(Format::Text),
            _ => Err(ReportError::UnknownFormat(s.to_string())),
        }
    }
}

#[derive(Serialize)]
struct ClassLine<'a> {
    class: AttackClass,
    #[serde(flatten)]
    counts: &'a ClassCounts,
}

#[derive(Serialize)]
struct SummaryLine<'a> {
    summary: bool,
    detector: &'a str,
    scenario: &'a str,
    seed: u64,
    generator: &'a str,
    apd: u64,
    tmp: u64,
    pdr_percent: &'a str,
    pdr_undefined: bool,
    false_positives: u64,
}

pub fn emit(r: &Report, format: Format) -> Vec<u8> {
    let mut out = String::new();
    match format {
        Format::Json => {
            out = serde_json::to_string_pretty(r).expect("report serializes");
            out.push('\n');
        }
        Format::JsonLines => {
            for (class, counts) in &r.per_class {
                let line = ClassLine {
                    class: *class,
                    counts,
                };
                out.push_str(&serde_json::to_string(&line).expect("line serializes"));
                out.push('\n');
            }
            let summary = SummaryLine {
                summary: true,
                detector: &r.detector_name,
                scenario: &r.scenario_label,
                seed: r.seed,
                generator: &r.generator,
                apd: r.pdr.apd,
                tmp: r.pdr.tmp,
                pdr_percent: &r.pdr_percent,
                pdr_undefined: r.pdr_undefined,
                false_positives: r.false_positives,
            };
            out.push_str(&serde_json::to_string(&summary).expect("line serializes"));
            out.push('\n');
        }
        Format::Csv => {
            out.push_str("class,sent,detected,accepted,ignored\n");
            if !r.per_class.is_empty() {
                for (class, c) in &r.per_class {
                    let _ = writeln!(
                        out,
                        "{class},{},{},{},{}",
                        c.sent, c.detected, c.accepted, c.ignored
                    );
                }
                let _ = writeln!(out, "PDR(%),{},,,", r.pdr_percent);
            }
        }
        Format::Text => {
            let _ = writeln!(out, "scenario   {}", r.scenario_label);
            let _ = writeln!(out, "detector   {}", r.detector_name);
            let _ = writeln!(out, "seed       {} ({})", r.seed, r.generator);
            let _ = writeln!(out, "mix        {}", r.composition);
            let _ = writeln!(out);
            let _ = writeln!(
                out,
                "{:<8}{:>8}{:>10}{:>10}{:>9}",
                "class", "sent", "detected", "accepted", "ignored"
            );
            for (class, c) in &r.per_class {
                let _ = writeln!(
                    out,
                    "{:<8}{:>8}{:>10}{:>10}{:>9}",
                    class.label(),
                    c.sent,
                    c.detected,
                    c.accepted,
                    c.ignored
                );
            }
            let _ = writeln!(out);
            let undefined = if r.pdr_undefined {
                " (no abnormal frames)"
            } else {
                ""
            };
            let _ = writeln!(
                out,
                "PDR        {}% = {}/{}{undefined}",
                r.pdr_percent, r.pdr.apd, r.pdr.tmp
            );
            let _ = writeln!(out, "false pos  {}", r.false_positives);
        }
    }
    out.into_bytes()
}

/// One threshold of the comparison against the published results.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Classes CLCC must catch every time.
pub const UNCONDITIONAL: [AttackClass; 7] = [
    AttackClass::Pkt2,
    AttackClass::Pkt4,
    AttackClass::Pkt5,
    AttackClass::Pkt8,
    AttackClass::Pkt9,
    AttackClass::Pkt10,
    AttackClass::Pkt11,
];

/// Classes that differ from benign traffic only across layers.
pub const CROSS_LAYER: [AttackClass; 3] = [AttackClass::Pkt2, AttackClass::Pkt4, AttackClass::Pkt9];

/// Detection-rate windows for the two detectors on the uniform mix.
pub fn published_rate_checks(clcc: &Report, baseline: &Report) -> Vec<Check> {
    let mut checks = vec![
        Check {
            name: "clcc PDR in [70, 85]".into(),
            pass: !clcc.pdr_undefined && clcc.pdr.within(70, 85),
            detail: format!("{}%", clcc.pdr_percent),
        },
        Check {
            name: "baseline PDR in [5, 15]".into(),
            pass: !baseline.pdr_undefined && baseline.pdr.within(5, 15),
            detail: format!("{}%", baseline.pdr_percent),
        },
        Check {
            name: "clcc PDR > baseline PDR".into(),
            pass: clcc.pdr.exceeds(&baseline.pdr),
            detail: format!("{}% vs {}%", clcc.pdr_percent, baseline.pdr_percent),
        },
    ];
    for class in UNCONDITIONAL {
        let c = clcc.counts(class);
        checks.push(Check {
            name: format!("clcc detects every {class}"),
            pass: c.sent > 0 && c.detected == c.sent,
            detail: format!("{}/{}", c.detected, c.sent),
        });
    }
    for class in CROSS_LAYER {
        let c = baseline.counts(class);
        checks.push(Check {
            name: format!("baseline detects no {class}"),
            pass: c.sent > 0 && c.detected == 0,
            detail: format!("{}/{}", c.detected, c.sent),
        });
    }
    checks.push(Check {
        name: "no false positives".into(),
        pass: clcc.false_positives == 0 && baseline.false_positives == 0,
        detail: format!("{} / {}", clcc.false_positives, baseline.false_positives),
    });
    checks
}

pub const FEATURE_TECHNIQUES: [&str; 7] = [
    "RFC826",
    "SARP",
    "TARP",
    "EARP",
    "GARP",
    "Central Server",
    "Proposed",
];

pub const FEATURE_ROWS: [(&str, [&str; 7]); 5] = [
    (
        "Cross Layer Inspection",
        ["No", "No", "No", "No", "No", "No", "Yes"],
    ),
    (
        "ARP Stateful",
        ["No", "Yes", "Yes", "Yes", "Yes", "Yes", "Yes"],
    ),
    (
        "ARP storm Prevention",
        ["No", "No", "Partial *", "Yes", "Yes", "Yes", "Partial"],
    ),
    (
        "Static-S and Dynamic-D entries",
        ["S&D", "D", "D", "S&D", "S&D", "S&D", "S&D"],
    ),
    (
        "Cryptographic",
        ["No", "Yes", "Yes", "No", "Yes", "Yes", "No"],
    ),
];

pub const FEATURE_FOOTNOTE: &str = "* leads to ticket flooding attack";

/// Cell lookup by technique and feature name.
pub fn feature(technique: &str, feature: &str) -> Option<&'static str> {
    let col = FEATURE_TECHNIQUES.iter().position(|t| *t == technique)?;
    FEATURE_ROWS
        .iter()
        .find(|(f, _)| *f == feature)
        .map(|(_, cells)| cells[col])
}

/// The comparison of techniques as a fixed-width table.
pub fn feature_matrix() -> String {
    let first = FEATURE_ROWS
        .iter()
        .map(|(f, _)| f.len())
        .max()
        .unwrap_or(0)
        .max("Features".len());
    let widths: Vec<usize> = (0..7)
        .map(|i| {
            FEATURE_ROWS
                .iter()
                .map(|(_, c)| c[i].len())
                .chain(std::iter::once(FEATURE_TECHNIQUES[i].len()))
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    let mut row = |label: &str, cells: &[&str]| {
        let _ = write!(out, "{label:<first$}");
        for (cell, w) in cells.iter().zip(&widths) {
            let _ = write!(out, "  {cell:<w$}");
        }
        out.truncate(out.trim_end().len());
        out.push('\n');
    };
    row("Features", &FEATURE_TECHNIQUES);
    for (label, cells) in FEATURE_ROWS {
        row(label, &cells);
    }
    out.push_str(FEATURE_FOOTNOTE);
    out.push('\n');
    out
}
