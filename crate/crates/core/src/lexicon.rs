//! Domain vocabulary: alias groups, multi-word phrase aliases and stopwords,
//! plus the [`normalize`] routine that turns free text into a [`TermSet`].

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

const STARTER: &str = include_str!("../data/lexicon/starter.json");

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read lexicon {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed lexicon: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid lexicon: {0}")]
    Invalid(String),
}

/// A set of canonical terms.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TermSet(BTreeSet<String>);

impl TermSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, term: &str) -> bool {
        self.0.contains(term)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn intersection_len(&self, other: &TermSet) -> usize {
        self.0.intersection(&other.0).count()
    }

    pub fn union_len(&self, other: &TermSet) -> usize {
        self.len() + other.len() - self.intersection_len(other)
    }

    pub fn extend(&mut self, other: &TermSet) {
        self.0.extend(other.0.iter().cloned());
    }

    /// Space-separated terms in sorted order.
    pub fn joined(&self) -> String {
        self.iter().collect::<Vec<_>>().join(" ")
    }

    pub fn into_inner(self) -> BTreeSet<String> {
        self.0
    }
}

impl FromIterator<String> for TermSet {
    fn from_iter<I: IntoIterator<Item = String>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl<'a> FromIterator<&'a str> for TermSet {
    fn from_iter<I: IntoIterator<Item = &'a str>>(iter: I) -> Self {
        Self(iter.into_iter().map(str::to_owned).collect())
    }
}

impl fmt::Display for TermSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.iter().collect::<Vec<_>>().join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AliasGroup {
    pub canonical: String,
    /// Always contains `canonical`.
    pub members: BTreeSet<String>,
}

/// Immutable vocabulary used by the similarity operators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    alias_groups: Vec<AliasGroup>,
    phrase_aliases: BTreeMap<String, String>,
    stopwords: BTreeSet<String>,
    canonical_of: HashMap<String, String>,
    // token sequences, longest first
    phrases: Vec<(Vec<String>, String)>,
}

/// Ordered map of canonical term to members. Duplicate keys are kept so
/// that a canonical listed twice is reported instead of silently merged.
#[derive(Debug, Default)]
struct GroupList(Vec<(String, Vec<String>)>);

impl<'de> Deserialize<'de> for GroupList {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        struct GroupVisitor;
        impl<'de> Visitor<'de> for GroupVisitor {
            type Value = GroupList;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map of canonical term to member list")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<GroupList, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, Vec<String>>()? {
                    out.push((k, v));
                }
                Ok(GroupList(out))
            }
        }
        de.deserialize_map(GroupVisitor)
    }
}

#[derive(Deserialize)]
struct LexiconDocument {
    #[serde(default)]
    alias_groups: GroupList,
    #[serde(default)]
    phrase_aliases: BTreeMap<String, String>,
    #[serde(default)]
    stopwords: Vec<String>,
}

#[derive(Serialize)]
struct CanonicalDocument<'a> {
    alias_groups: BTreeMap<&'a str, Vec<&'a str>>,
    phrase_aliases: &'a BTreeMap<String, String>,
    stopwords: &'a BTreeSet<String>,
}

fn tokenize(lowercased: &str) -> impl Iterator<Item = &str> {
    lowercased
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
}

fn single_token(term: &str) -> Option<String> {
    let lower = term.to_lowercase();
    let mut toks = tokenize(&lower);
    match (toks.next(), toks.next()) {
        (Some(t), None) => Some(t.to_owned()),
        _ => None,
    }
}

pub fn load_lexicon(path: &Path) -> Result<Lexicon, LexiconError> {
    let text = fs::read_to_string(path).map_err(|source| LexiconError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Lexicon::from_json(&text)
}

impl Lexicon {
    pub fn empty() -> Self {
        Self::build(Vec::new(), BTreeMap::new(), Vec::new()).expect("empty lexicon is valid")
    }

    /// The bundled software-process vocabulary.
    pub fn starter() -> Self {
        Self::from_json(STARTER).expect("bundled starter lexicon is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, LexiconError> {
        let doc: LexiconDocument = serde_json::from_str(text)?;
        Self::build(doc.alias_groups.0, doc.phrase_aliases, doc.stopwords)
    }

    pub fn build(
        groups: Vec<(String, Vec<String>)>,
        phrases: BTreeMap<String, String>,
        stopwords: Vec<String>,
    ) -> Result<Self, LexiconError> {
        let invalid = |msg: String| Err(LexiconError::Invalid(msg));

        let mut stop = BTreeSet::new();
        for word in stopwords {
            match single_token(&word) {
                Some(t) => {
                    stop.insert(t);
                }
                None => return invalid(format!("stopword {word:?} is not a single token")),
            }
        }

        let mut alias_groups = Vec::with_capacity(groups.len());
        let mut canonical_of: HashMap<String, String> = HashMap::new();
        for (canonical, members) in groups {
            let Some(canon) = single_token(&canonical) else {
                return invalid(format!("canonical term {canonical:?} is not a single token"));
            };
            if stop.contains(&canon) {
                return invalid(format!("canonical term {canon:?} is also a stopword"));
            }
            let mut set = BTreeSet::new();
            set.insert(canon.clone());
            for m in members {
                let Some(tok) = single_token(&m) else {
                    return invalid(format!(
                        "alias member {m:?} of group {canon:?} is not a single token; declare it as a phrase alias"
                    ));
                };
                set.insert(tok);
            }
            for term in &set {
                if let Some(prev) = canonical_of.get(term) {
                    return invalid(format!("term {term:?} appears in alias groups {prev:?} and {canon:?}"));
                }
                canonical_of.insert(term.clone(), canon.clone());
            }
            alias_groups.push(AliasGroup { canonical: canon, members: set });
        }

        let mut phrase_aliases = BTreeMap::new();
        let mut by_tokens: BTreeMap<Vec<String>, String> = BTreeMap::new();
        for (phrase, target) in phrases {
            let lower = phrase.to_lowercase();
            let toks: Vec<String> = tokenize(&lower).map(str::to_owned).collect();
            if toks.len() < 2 {
                return invalid(format!("phrase alias {phrase:?} must contain at least two words"));
            }
            let Some(tgt) = single_token(&target) else {
                return invalid(format!("phrase alias {phrase:?} targets {target:?}, which is not a single term"));
            };
            if stop.contains(&tgt) {
                return invalid(format!("phrase alias {phrase:?} targets stopword {tgt:?}"));
            }
            if let Some(prev) = by_tokens.get(&toks) {
                if *prev != tgt {
                    return invalid(format!("phrase {phrase:?} maps to both {prev:?} and {tgt:?}"));
                }
            }
            by_tokens.insert(toks.clone(), tgt.clone());
            phrase_aliases.insert(toks.join(" "), tgt);
        }

        let lexicon = {
            let mut phrases: Vec<(Vec<String>, String)> = by_tokens.into_iter().collect();
            phrases.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
            Lexicon { alias_groups, phrase_aliases, stopwords: stop, canonical_of, phrases }
        };

        // Normalized output is re-normalizable only if no phrase can be spelled
        // by a sorted run of output terms.
        for (toks, _) in &lexicon.phrases {
            let ascending = toks.windows(2).all(|w| w[0] < w[1]);
            if ascending && toks.iter().all(|t| lexicon.is_output_term(t)) {
                return invalid(format!(
                    "phrase alias {:?} can be re-formed from normalized output; alias one of its words to another canonical term",
                    toks.join(" ")
                ));
            }
        }
        Ok(lexicon)
    }

    fn is_output_term(&self, token: &str) -> bool {
        !self.stopwords.contains(token) && self.canonical_of.get(token).is_none_or(|c| c == token)
    }

    pub fn alias_groups(&self) -> &[AliasGroup] {
        &self.alias_groups
    }

    pub fn phrase_aliases(&self) -> &BTreeMap<String, String> {
        &self.phrase_aliases
    }

    pub fn stopwords(&self) -> &BTreeSet<String> {
        &self.stopwords
    }

    /// Canonical form of a single lowercase token (the token itself when it
    /// belongs to no group).
    pub fn canonical<'a>(&'a self, token: &'a str) -> &'a str {
        self.canonical_of.get(token).map_or(token, String::as_str)
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        self.stopwords.contains(token)
    }

    /// SHA-256 over the canonical JSON rendering of the vocabulary.
    pub fn digest(&self) -> String {
        let doc = CanonicalDocument {
            alias_groups: self
                .alias_groups
                .iter()
                .map(|g| {
                    let members = g.members.iter().filter(|m| **m != g.canonical).map(String::as_str).collect();
                    (g.canonical.as_str(), members)
                })
                .collect(),
            phrase_aliases: &self.phrase_aliases,
            stopwords: &self.stopwords,
        };
        let bytes = serde_json::to_vec(&doc).expect("lexicon serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    fn emit(&self, token: &str, out: &mut BTreeSet<String>) {
        if self.is_stopword(token) {
            return;
        }
        let canon = self.canonical(token);
        if !self.is_stopword(canon) {
            out.insert(canon.to_owned());
        }
    }
}

/// Lowercases, applies phrase aliases leftmost-longest over the token stream,
/// drops stopwords and maps every token to its canonical alias.
pub fn normalize(text: &str, lexicon: &Lexicon) -> TermSet {
    let lower = text.to_lowercase();
    let tokens: Vec<&str> = tokenize(&lower).collect();
    let mut out = BTreeSet::new();
    let mut i = 0;
    'scan: while i < tokens.len() {
        for (phrase, target) in &lexicon.phrases {
            let end = i + phrase.len();
            if end <= tokens.len() && tokens[i..end].iter().zip(phrase).all(|(a, b)| *a == b) {
                lexicon.emit(target, &mut out);
                i = end;
                continue 'scan;
            }
        }
        lexicon.emit(tokens[i], &mut out);
        i += 1;
    }
    TermSet(out)
}

/// Union of the normalized forms of each declared term.
pub fn normalize_terms<'a, I>(terms: I, lexicon: &Lexicon) -> TermSet
where
    I: IntoIterator<Item = &'a String>,
{
    let mut out = TermSet::new();
    for t in terms {
        out.extend(&normalize(t, lexicon));
    }
    out
}
