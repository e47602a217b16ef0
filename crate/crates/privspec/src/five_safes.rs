//! Typed Five Safes regimes, their contextual-integrity reading, and the
//! attachment of verification output as quantitative evidence.
//!
//! A dissemination regime is assessed along five dimensions — people,
//! projects, settings, data, outputs — each carrying an advisory level in
//! [0, 1], a band label, and a rationale. Levels are ordinal and advisory:
//! no aggregate risk score is ever computed from them, and none should be,
//! since the dimensions are qualitative narratives first.
//!
//! Each regime describes one of two information flows (detailed data to
//! vetted researchers, or published outputs to the general public), and can
//! be re-read as a contextual-integrity norm assignment: sender, recipient,
//! subject, information type and transmission principles. Verified
//! differential-privacy results attach as evidence on the data and outputs
//! dimensions only, always together with the two caveats about what such
//! evidence does not establish.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::privacy_core::FlavorFingerprint;
use crate::value::ExtReal;
use crate::verifier::VerificationResult;

/// Caveat attached to every piece of DP evidence: the guarantee covers only
/// specific probabilistic properties, not the nature of what is released.
pub const CAVEAT_PARTIAL_COVERAGE: &str =
    "Differential privacy is silent on the safety of certain aspects of the outputs and the \
     data: it treats datasets with identical mathematical structure identically, regardless of \
     how sensitive their contents are.";

/// Caveat attached to every piece of DP evidence: three of the five
/// dimensions are simply out of its scope.
pub const CAVEAT_OTHER_DIMENSIONS: &str =
    "Differential privacy does not purport an assessment of safety for people, projects, or \
     settings.";

/// The two information flows a regime can describe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Flow {
    #[serde(rename = "data-to-researcher")]
    DataToResearcher,
    #[serde(rename = "outputs-to-public")]
    OutputsToPublic,
}

impl fmt::Display for Flow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Flow::DataToResearcher => write!(f, "data-to-researcher"),
            Flow::OutputsToPublic => write!(f, "outputs-to-public"),
        }
    }
}

/// The five safety dimensions, in their conventional order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SafeDimension {
    #[serde(rename = "people")]
    People,
    #[serde(rename = "projects")]
    Projects,
    #[serde(rename = "settings")]
    Settings,
    #[serde(rename = "data")]
    Data,
    #[serde(rename = "outputs")]
    Outputs,
}

impl SafeDimension {
    pub const ALL: [SafeDimension; 5] = [
        SafeDimension::People,
        SafeDimension::Projects,
        SafeDimension::Settings,
        SafeDimension::Data,
        SafeDimension::Outputs,
    ];
}

impl fmt::Display for SafeDimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SafeDimension::People => "people",
            SafeDimension::Projects => "projects",
            SafeDimension::Settings => "settings",
            SafeDimension::Data => "data",
            SafeDimension::Outputs => "outputs",
        };
        f.pad(s)
    }
}

/// Band label for a safety level: none [0, 0.25), low [0.25, 0.5),
/// medium [0.5, 0.75), high [0.75, 1].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SafetyLabel {
    #[serde(rename = "none")]
    None,
    #[serde(rename = "low")]
    Low,
    #[serde(rename = "medium")]
    Medium,
    #[serde(rename = "high")]
    High,
}

impl fmt::Display for SafetyLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SafetyLabel::None => "none",
            SafetyLabel::Low => "low",
            SafetyLabel::Medium => "medium",
            SafetyLabel::High => "high",
        };
        f.pad(s)
    }
}

/// The band a level falls in.
pub fn label_for_level(level: f64) -> Result<SafetyLabel> {
    if !(0.0..=1.0).contains(&level) {
        return Err(Error::Parameter(format!(
            "safety level must lie in [0, 1], got {level}"
        )));
    }
    Ok(if level < 0.25 {
        SafetyLabel::None
    } else if level < 0.5 {
        SafetyLabel::Low
    } else if level < 0.75 {
        SafetyLabel::Medium
    } else {
        SafetyLabel::High
    })
}

/// Level, band label and rationale for one dimension. The label is derived
/// from the level on construction and re-checked on deserialization.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimensionAssessment {
    pub level: f64,
    pub label: SafetyLabel,
    pub rationale: String,
}

impl DimensionAssessment {
    pub fn new(level: f64, rationale: impl Into<String>) -> Result<Self> {
        Ok(DimensionAssessment {
            level,
            label: label_for_level(level)?,
            rationale: rationale.into(),
        })
    }
}

impl<'de> Deserialize<'de> for DimensionAssessment {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            level: f64,
            label: SafetyLabel,
            rationale: String,
        }
        let r = Repr::deserialize(d)?;
        let expected = label_for_level(r.level).map_err(serde::de::Error::custom)?;
        if expected != r.label {
            return Err(serde::de::Error::custom(format!(
                "label {} is inconsistent with level {} (band is {})",
                r.label, r.level, expected
            )));
        }
        Ok(DimensionAssessment {
            level: r.level,
            label: r.label,
            rationale: r.rationale,
        })
    }
}

/// Verifier output attached to a regime as quantitative evidence. Evidence
/// always targets the data and outputs dimensions — never the other three —
/// and always carries both caveats.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DpEvidence {
    pub targets: Vec<SafeDimension>,
    pub satisfied: bool,
    pub summary: String,
    pub fingerprint: FlavorFingerprint,
    pub epsilons: BTreeMap<String, ExtReal>,
    pub witness: Option<String>,
    pub caveats: Vec<String>,
}

/// A five-dimension safety assessment of one dissemination regime.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SafesRegime {
    pub name: String,
    pub flow: Flow,
    pub dimensions: BTreeMap<SafeDimension, DimensionAssessment>,
    /// Transmission-principle content beyond the five dimensions, e.g. a
    /// legal mandate under which a release is made.
    #[serde(default)]
    pub mandates: Vec<String>,
    #[serde(default)]
    pub dp_evidence: Vec<DpEvidence>,
}

impl SafesRegime {
    pub fn new(
        name: impl Into<String>,
        flow: Flow,
        dimensions: BTreeMap<SafeDimension, DimensionAssessment>,
    ) -> Result<Self> {
        let regime = SafesRegime {
            name: name.into(),
            flow,
            dimensions,
            mandates: Vec::new(),
            dp_evidence: Vec::new(),
        };
        regime.validate()?;
        Ok(regime)
    }

    /// All five dimensions present, labels consistent with levels, evidence
    /// targeting only data/outputs.
    pub fn validate(&self) -> Result<()> {
        for dim in SafeDimension::ALL {
            let a = self.dimensions.get(&dim).ok_or_else(|| {
                Error::Parameter(format!("regime {:?} misses the {dim} dimension", self.name))
            })?;
            let expected = label_for_level(a.level)?;
            if expected != a.label {
                return Err(Error::Parameter(format!(
                    "regime {:?}: label {} inconsistent with level {} on {dim}",
                    self.name, a.label, a.level
                )));
            }
        }
        for e in &self.dp_evidence {
            for t in &e.targets {
                if !matches!(t, SafeDimension::Data | SafeDimension::Outputs) {
                    return Err(Error::Parameter(format!(
                        "dp evidence may target only data and outputs, found {t}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn dimension(&self, dim: SafeDimension) -> &DimensionAssessment {
        &self.dimensions[&dim]
    }

    pub fn with_mandate(mut self, mandate: impl Into<String>) -> Self {
        self.mandates.push(mandate.into());
        self
    }
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

/// The canonical dissemination paradigms used as reference points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PresetKind {
    #[serde(rename = "open-data")]
    OpenData,
    #[serde(rename = "physical-enclave")]
    PhysicalEnclave,
    #[serde(rename = "virtual-enclave")]
    VirtualEnclave,
    #[serde(rename = "synthetic-with-validation")]
    SyntheticWithValidation,
}

impl PresetKind {
    pub const ALL: [PresetKind; 4] = [
        PresetKind::OpenData,
        PresetKind::PhysicalEnclave,
        PresetKind::VirtualEnclave,
        PresetKind::SyntheticWithValidation,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PresetKind::OpenData => "open-data",
            PresetKind::PhysicalEnclave => "physical-enclave",
            PresetKind::VirtualEnclave => "virtual-enclave",
            PresetKind::SyntheticWithValidation => "synthetic-with-validation",
        }
    }
}

impl FromStr for PresetKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PresetKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::Parameter(format!(
                    "unknown preset {s:?}; expected one of open-data, physical-enclave, \
                     virtual-enclave, synthetic-with-validation"
                ))
            })
    }
}

fn dims(
    entries: [(SafeDimension, f64, &str); 5],
) -> BTreeMap<SafeDimension, DimensionAssessment> {
    entries
        .into_iter()
        .map(|(d, level, rationale)| {
            (d, DimensionAssessment::new(level, rationale).expect("preset level in range"))
        })
        .collect()
}

/// Editorial encodings of the reference dissemination paradigms. Open data
/// and the enclaves are single regimes; synthetic data with a validation
/// server is a juxtaposition of one regime per flow.
pub fn preset(kind: PresetKind) -> Vec<SafesRegime> {
    match kind {
        PresetKind::OpenData => vec![SafesRegime::new(
            "open data",
            Flow::OutputsToPublic,
            dims([
                (
                    SafeDimension::People,
                    0.0,
                    "access is open by design; recipients are not vetted, since anyone without \
                     abusive intentions should be able to use the files",
                ),
                (
                    SafeDimension::Projects,
                    0.0,
                    "once the files are openly released their uses cannot be supervised, so no \
                     scrutiny of projects is possible",
                ),
                (
                    SafeDimension::Settings,
                    0.0,
                    "no scrutiny of the settings in which the released files will be used is \
                     possible",
                ),
                (
                    SafeDimension::Data,
                    0.9,
                    "a high level of scrutiny is placed on the released data, which doubles as \
                     the output: heavy aggregation or subsampling before publication",
                ),
                (
                    SafeDimension::Outputs,
                    0.9,
                    "published tables and public-use files pass a high standard of disclosure \
                     review",
                ),
            ]),
        )
        .expect("preset is well-formed")],
        PresetKind::PhysicalEnclave => vec![SafesRegime::new(
            "physical enclave",
            Flow::DataToResearcher,
            dims([
                (
                    SafeDimension::People,
                    0.9,
                    "researchers are heavily vetted: scientific standing, confidentiality \
                     commitments and research ethics",
                ),
                (
                    SafeDimension::Projects,
                    0.9,
                    "only inquiries with a demonstrated legitimate scientific purpose are \
                     admitted",
                ),
                (
                    SafeDimension::Settings,
                    0.95,
                    "a research data center provides a highly secure, supervised physical \
                     setting for access",
                ),
                (
                    SafeDimension::Data,
                    0.3,
                    "the accessible data is detailed and comprehensive; the records themselves \
                     carry little protection",
                ),
                (
                    SafeDimension::Outputs,
                    0.9,
                    "results leaving the enclave are subject to disclosure review",
                ),
            ]),
        )
        .expect("preset is well-formed")],
        PresetKind::VirtualEnclave => vec![SafesRegime::new(
            "virtual enclave",
            Flow::DataToResearcher,
            dims([
                (
                    SafeDimension::People,
                    0.9,
                    "researchers are heavily vetted: scientific standing, confidentiality \
                     commitments and research ethics",
                ),
                (
                    SafeDimension::Projects,
                    0.9,
                    "only inquiries with a demonstrated legitimate scientific purpose are \
                     admitted",
                ),
                (
                    SafeDimension::Settings,
                    0.8,
                    "a secure remote-access server stands in for the reading room; oversight of \
                     the access environment is partial compared to a physical center",
                ),
                (
                    SafeDimension::Data,
                    0.3,
                    "the accessible data is detailed and comprehensive; the records themselves \
                     carry little protection",
                ),
                (
                    SafeDimension::Outputs,
                    0.9,
                    "results leaving the enclave are subject to disclosure review",
                ),
            ]),
        )
        .expect("preset is well-formed")],
        PresetKind::SyntheticWithValidation => vec![
            SafesRegime::new(
                "synthetic data with validation (researcher flow)",
                Flow::DataToResearcher,
                dims([
                    (
                        SafeDimension::People,
                        0.6,
                        "researchers obtain access under a moderate level of scrutiny",
                    ),
                    (
                        SafeDimension::Projects,
                        0.8,
                        "proposed analyses are reviewed for appropriateness and feasibility \
                         before access is granted",
                    ),
                    (
                        SafeDimension::Settings,
                        0.8,
                        "the synthetic-data server is effectively a virtual enclave",
                    ),
                    (
                        SafeDimension::Data,
                        0.6,
                        "the synthetic files are safe by construction, but validation runs \
                         touch the confidential gold-standard file, which commands a lower \
                         safety level",
                    ),
                    (
                        SafeDimension::Outputs,
                        0.9,
                        "validated results pass a stringent disclosure review before release",
                    ),
                ]),
            )
            .expect("preset is well-formed"),
            SafesRegime::new(
                "synthetic data with validation (public flow)",
                Flow::OutputsToPublic,
                dims([
                    (
                        SafeDimension::People,
                        0.0,
                        "the eventual audience is the general public, which is not vetted",
                    ),
                    (
                        SafeDimension::Projects,
                        0.0,
                        "published findings circulate without use restrictions",
                    ),
                    (
                        SafeDimension::Settings,
                        0.0,
                        "no control over where published results are consumed",
                    ),
                    (
                        SafeDimension::Data,
                        0.9,
                        "the confidential data never leaves the custodian; only synthetic \
                         stand-ins circulate",
                    ),
                    (
                        SafeDimension::Outputs,
                        0.9,
                        "outputs are strictly scrutinized to a high safety standard, as for \
                         open data",
                    ),
                ]),
            )
            .expect("preset is well-formed"),
        ],
    }
}

// ---------------------------------------------------------------------------
// Contextual-integrity reading
// ---------------------------------------------------------------------------

/// The five informational-norm parameters as they apply to statistical
/// dissemination.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CiNormAssignment {
    pub sender: String,
    pub recipient: String,
    pub subject: String,
    pub information_type: String,
    pub transmission_principles: Vec<String>,
    /// Transmission-principle content that the five dimensions do not carry
    /// (legal mandates and similar); free text by design.
    pub unmapped_remainder: String,
}

/// Re-read a regime as a contextual-integrity norm assignment. The recipient
/// is fully determined by the flow; subject and information type derive from
/// the data dimension (information type also determines outputs); projects
/// and settings feed the transmission principles, together with any declared
/// mandates.
pub fn map_to_ci(regime: &SafesRegime) -> Result<CiNormAssignment> {
    regime.validate()?;
    let recipient = match regime.flow {
        Flow::DataToResearcher => "researchers",
        Flow::OutputsToPublic => "general public",
    };
    let data = regime.dimension(SafeDimension::Data);
    let outputs = regime.dimension(SafeDimension::Outputs);
    let projects = regime.dimension(SafeDimension::Projects);
    let settings = regime.dimension(SafeDimension::Settings);
    let mut transmission_principles = vec![
        format!("projects: {}", projects.rationale),
        format!("settings: {}", settings.rationale),
    ];
    for m in &regime.mandates {
        transmission_principles.push(format!("mandate: {m}"));
    }
    let unmapped_remainder = if regime.mandates.is_empty() {
        "none declared".to_string()
    } else {
        regime.mandates.join("; ")
    };
    Ok(CiNormAssignment {
        sender: "statistical agency / NSO / data custodian".into(),
        recipient: recipient.into(),
        subject: format!(
            "the data contributors (a component of the data dimension: {})",
            data.rationale
        ),
        information_type: format!(
            "the nature of the transmitted information (a component of data and a determinant \
             of outputs: {}; {})",
            data.rationale, outputs.rationale
        ),
        transmission_principles,
        unmapped_remainder,
    })
}

// ---------------------------------------------------------------------------
// Evidence attachment and assessment
// ---------------------------------------------------------------------------

/// Attach a verification result as evidence on the data and outputs
/// dimensions. The people, projects and settings assessments are not
/// modified in any way — the evidence says nothing about them, which is
/// exactly what the attached caveats record.
pub fn attach_dp(
    regime: &SafesRegime,
    result: &VerificationResult,
    fingerprint: FlavorFingerprint,
) -> Result<SafesRegime> {
    regime.validate()?;
    let rendered: Vec<String> = result
        .per_universe_tightest
        .iter()
        .map(|(u, v)| format!("{u}: {v} ≈ {:.6}", v.to_f64()))
        .collect();
    let witness = result.witness.as_ref().map(|w| {
        format!(
            "universe {:?}, pair {} → {}: divergence {} exceeds allowance {}",
            w.universe, w.x, w.x_prime, w.lhs, w.rhs
        )
    });
    let summary = if result.satisfied {
        format!("satisfied; tightest per-universe budget: {}", rendered.join(", "))
    } else {
        format!(
            "not satisfied ({}); tightest per-universe budget: {}",
            witness.as_deref().unwrap_or("no witness recorded"),
            rendered.join(", ")
        )
    };
    let mut out = regime.clone();
    out.dp_evidence.push(DpEvidence {
        targets: vec![SafeDimension::Data, SafeDimension::Outputs],
        satisfied: result.satisfied,
        summary,
        fingerprint,
        epsilons: result.per_universe_tightest.clone(),
        witness,
        caveats: vec![
            CAVEAT_PARTIAL_COVERAGE.to_string(),
            CAVEAT_OTHER_DIMENSIONS.to_string(),
        ],
    });
    Ok(out)
}

/// A rendered assessment: the five dimensions, the contextual-integrity
/// reading, attached evidence with caveats, and a label comparison against
/// the reference paradigms. Deliberately no aggregate score.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SafesReport {
    pub name: String,
    pub flow: Flow,
    pub dimensions: BTreeMap<SafeDimension, DimensionAssessment>,
    pub ci: CiNormAssignment,
    pub dp_evidence: Vec<DpEvidence>,
    pub caveats: Vec<String>,
    pub preset_comparison: Vec<PresetComparisonRow>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PresetComparisonRow {
    pub preset: String,
    pub labels: BTreeMap<SafeDimension, SafetyLabel>,
}

/// Assemble the full report for a regime.
pub fn assess(regime: &SafesRegime) -> Result<SafesReport> {
    regime.validate()?;
    let ci = map_to_ci(regime)?;
    let caveats = if regime.dp_evidence.is_empty() {
        Vec::new()
    } else {
        vec![
            CAVEAT_PARTIAL_COVERAGE.to_string(),
            CAVEAT_OTHER_DIMENSIONS.to_string(),
        ]
    };
    let mut preset_comparison = Vec::new();
    for kind in PresetKind::ALL {
        for p in preset(kind) {
            preset_comparison.push(PresetComparisonRow {
                preset: p.name.clone(),
                labels: p
                    .dimensions
                    .iter()
                    .map(|(d, a)| (*d, a.label))
                    .collect(),
            });
        }
    }
    Ok(SafesReport {
        name: regime.name.clone(),
        flow: regime.flow,
        dimensions: regime.dimensions.clone(),
        ci,
        dp_evidence: regime.dp_evidence.clone(),
        caveats,
        preset_comparison,
    })
}

impl fmt::Display for SafesReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "regime: {} (flow: {})", self.name, self.flow)?;
        writeln!(f, "dimensions:")?;
        for dim in SafeDimension::ALL {
            let a = &self.dimensions[&dim];
            writeln!(f, "  {dim:<9} {:<7} level {:.2}  — {}", a.label.to_string(), a.level, a.rationale)?;
        }
        writeln!(f, "contextual-integrity reading:")?;
        writeln!(f, "  sender:    {}", self.ci.sender)?;
        writeln!(f, "  recipient: {}", self.ci.recipient)?;
        writeln!(f, "  subject:   {}", self.ci.subject)?;
        writeln!(f, "  info type: {}", self.ci.information_type)?;
        for p in &self.ci.transmission_principles {
            writeln!(f, "  principle: {p}")?;
        }
        writeln!(f, "  beyond the five dimensions: {}", self.ci.unmapped_remainder)?;
        if !self.dp_evidence.is_empty() {
            writeln!(f, "differential-privacy evidence:")?;
            for e in &self.dp_evidence {
                writeln!(f, "  - {}", e.summary)?;
            }
            for c in &self.caveats {
                writeln!(f, "  caveat: {c}")?;
            }
        }
        writeln!(f, "reference paradigms (labels per dimension):")?;
        for row in &self.preset_comparison {
            let labels: Vec<String> = SafeDimension::ALL
                .iter()
                .map(|d| format!("{d}={}", row.labels[d]))
                .collect();
            writeln!(f, "  {:<45} {}", row.preset, labels.join(" "))?;
        }
        Ok(())
    }
}
