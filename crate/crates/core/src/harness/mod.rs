//! Property suites: adequacy, compositionality, bialgebra laws, tower
//! convergence, guardedness, oracle agreement, metric axioms and
//! bisimilarity checks, with seeded inputs and JSON-lines reports.

mod gen;
mod mutation;
mod oracle;
mod suites;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use gen::{gen_pairs, gen_program_terms, gen_terms};
pub use mutation::{mutations, Mutation};
pub use oracle::{canonical_reducts, CombinatorOracle, RefStep};
pub use suites::{
    check_adequacy, check_bialgebra, check_bisim_properties, check_compositionality, check_guardedness,
    check_lambda_oracle, check_mutations, check_tower, check_ultrametric, Bench,
};

use crate::engine::HoGsosLaw;
use crate::error::{Error, Result};
use crate::lang::LangId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Adequacy,
    Compositionality,
    Bialgebra,
    Tower,
    Guardedness,
    LambdaOracle,
    Ultrametric,
    Bisim,
    Mutations,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::Adequacy,
        Suite::Compositionality,
        Suite::Bialgebra,
        Suite::Tower,
        Suite::Guardedness,
        Suite::LambdaOracle,
        Suite::Ultrametric,
        Suite::Bisim,
        Suite::Mutations,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Adequacy => "adequacy",
            Suite::Compositionality => "compositionality",
            Suite::Bialgebra => "bialgebra",
            Suite::Tower => "tower",
            Suite::Guardedness => "guardedness",
            Suite::LambdaOracle => "lambda-oracle",
            Suite::Ultrametric => "ultrametric",
            Suite::Bisim => "bisim",
            Suite::Mutations => "mutations",
        }
    }

    /// Languages the suite applies to.
    pub fn languages(self) -> Vec<LangId> {
        match self {
            Suite::Tower => vec![LangId::Xtcl, LangId::Xptcl, LangId::Xcl, LangId::Xnccl],
            Suite::Guardedness => vec![LangId::Xcl, LangId::Xnccl, LangId::Lambda],
            Suite::LambdaOracle => vec![LangId::Lambda],
            _ => LangId::ALL.to_vec(),
        }
    }

    /// Defaults for one language: the tower bound is one past the largest
    /// enumerable stage.
    pub fn default_params_for(self, lang: LangId) -> Params {
        let p = self.default_params();
        match (self, lang.language().stage_language()) {
            (Suite::Tower, Some(sl)) => Params {
                depth: sl.bound() + 1,
                ..p
            },
            _ => p,
        }
    }

    pub fn default_params(self) -> Params {
        let base = Params::default();
        match self {
            Suite::Adequacy => Params { samples: 1000, ..base },
            Suite::Compositionality => Params { samples: 500, ..base },
            Suite::Bialgebra => Params {
                samples: 500,
                depth: 5,
                ..base
            },
            Suite::Tower => Params { depth: 3, ..base },
            Suite::Guardedness => Params { samples: 200, ..base },
            Suite::LambdaOracle => Params {
                samples: 500,
                max_size: 12,
                ..base
            },
            Suite::Ultrametric => Params { samples: 200, ..base },
            Suite::Bisim => Params {
                samples: 100,
                depth: 5,
                probe_size: 3,
                ..base
            },
            Suite::Mutations => Params { samples: 200, ..base },
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Suite> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Suite::ALL.iter().map(|x| x.name()).collect();
                Error::Invalid(format!("unknown suite `{s}` ({})", names.join(", ")))
            })
    }
}

/// Scale of a suite run. `depth` is the truncation depth (for `tower`, the
/// largest iteration index); `samples` counts pairs, terms or triples.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Params {
    pub depth: usize,
    pub probe_size: usize,
    pub samples: usize,
    pub max_size: usize,
    pub seed: u64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            depth: 6,
            probe_size: 4,
            samples: 500,
            max_size: 8,
            seed: 42,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// One check of one suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub suite: String,
    pub lang: Option<LangId>,
    pub check: String,
    pub subject: String,
    pub verdict: Verdict,
    pub seed: u64,
    pub params: Params,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub lang: Option<LangId>,
    pub params: Params,
    pub records: Vec<Record>,
    /// Counters and other aggregate facts, by name.
    pub stats: BTreeMap<String, serde_json::Value>,
}

impl SuiteReport {
    pub fn new(suite: Suite, lang: Option<LangId>, params: &Params) -> SuiteReport {
        SuiteReport {
            suite,
            lang,
            params: params.clone(),
            records: Vec::new(),
            stats: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, check: &str, subject: String, ok: bool) -> &mut Record {
        self.records.push(Record {
            suite: self.suite.name().to_string(),
            lang: self.lang,
            check: check.to_string(),
            subject,
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
            seed: self.params.seed,
            params: self.params.clone(),
            witness: None,
            detail: None,
        });
        self.records.last_mut().expect("just pushed")
    }

    pub fn stat(&mut self, key: &str, value: impl Into<serde_json::Value>) {
        self.stats.insert(key.to_string(), value.into());
    }

    pub fn stat_usize(&self, key: &str) -> usize {
        self.stats.get(key).and_then(|v| v.as_u64()).unwrap_or(0) as usize
    }

    pub fn failures(&self) -> Vec<&Record> {
        self.records.iter().filter(|r| r.verdict == Verdict::Fail).collect()
    }

    pub fn passed(&self) -> bool {
        self.failures().is_empty()
    }

    /// One JSON object per record, then a summary line.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        let summary = serde_json::json!({
            "suite": self.suite,
            "lang": self.lang,
            "check": "summary",
            "verdict": if self.passed() { Verdict::Pass } else { Verdict::Fail },
            "seed": self.params.seed,
            "params": self.params,
            "records": self.records.len(),
            "failures": self.failures().len(),
            "stats": self.stats,
        });
        out.push_str(&summary.to_string());
        out.push('\n');
        out
    }
}

impl Record {
    pub fn with_detail(&mut self, d: impl Into<String>) -> &mut Record {
        self.detail = Some(d.into());
        self
    }

    pub fn with_witness(&mut self, w: &impl Serialize) -> &mut Record {
        self.witness = Some(serde_json::to_value(w).expect("witness serializes"));
        self
    }
}

/// Runs `suite` for `lang` against the shipped law.
pub fn run_suite(suite: Suite, lang: LangId, params: &Params) -> Result<SuiteReport> {
    run_suite_with_law(suite, lang, None, params)
}

/// Runs `suite` with `law` (default: the shipped one) as the law under test.
pub fn run_suite_with_law(
    suite: Suite,
    lang: LangId,
    law: Option<Arc<HoGsosLaw>>,
    params: &Params,
) -> Result<SuiteReport> {
    if !suite.languages().contains(&lang) {
        return Err(Error::Invalid(format!("suite {suite} does not apply to {lang}")));
    }
    let law = law.unwrap_or_else(|| lang.language().law.clone());
    match suite {
        Suite::Adequacy => check_adequacy(lang, &law, params),
        Suite::Compositionality => check_compositionality(lang, &law, params, false),
        Suite::Bialgebra => check_bialgebra(lang, &law, params, false),
        Suite::Tower => check_tower(lang, params.depth, params),
        Suite::Guardedness => check_guardedness(lang, &law, params),
        Suite::LambdaOracle => check_lambda_oracle(&law, params, false),
        Suite::Ultrametric => check_ultrametric(lang, &law, params),
        Suite::Bisim => check_bisim_properties(lang, params),
        Suite::Mutations => check_mutations(lang, params),
    }
}
