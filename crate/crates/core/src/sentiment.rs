//! Tweet polarity and the daily tweet-board features.
//!
//! A multinomial Naive Bayes classifier labels raw text when the corpus
//! carries no labels. Daily positive/negative counts are turned into
//! bullishness, agreement and message volume, each with a lag-1 "carried"
//! copy.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::Alignment;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarity {
    Positive,
    Negative,
}

impl FromStr for Polarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pos" => Ok(Polarity::Positive),
            "neg" => Ok(Polarity::Negative),
            other => Err(Error::InvalidInput(format!("unknown label '{other}' (expected pos, neg or empty)"))),
        }
    }
}

impl Polarity {
    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Positive => "pos",
            Polarity::Negative => "neg",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TweetRecord {
    pub id: String,
    pub date: NaiveDate,
    pub text: String,
    pub label: Option<Polarity>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TweetRow {
    id: String,
    date: String,
    text: String,
    #[serde(default)]
    label: Option<String>,
}

/// Read the `id,date,text,label` tweet CSV. Errors carry the 1-based line number.
pub fn read_tweets<R: Read>(reader: R) -> Result<Vec<TweetRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::InvalidInput(format!("tweet CSV header: {e}")))?
        .clone();
    for required in ["id", "date", "text"] {
        if !headers.iter().any(|h| h == required) {
            return Err(Error::InvalidInput(format!("tweet CSV is missing column '{required}'")));
        }
    }
    let mut out = Vec::new();
    for rec in rdr.deserialize::<TweetRow>() {
        let row = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::InvalidInput(format!("tweet CSV line {line}: {e}"))
        })?;
        let line = out.len() + 2;
        let date = NaiveDate::parse_from_str(row.date.trim(), "%Y-%m-%d")
            .map_err(|e| Error::InvalidInput(format!("tweet CSV line {line}: bad date '{}': {e}", row.date)))?;
        let label = match row.label.as_deref().map(str::trim) {
            None | Some("") => None,
            Some(s) => Some(
                s.parse::<Polarity>()
                    .map_err(|e| Error::InvalidInput(format!("tweet CSV line {line}: {e}")))?,
            ),
        };
        out.push(TweetRecord {
            id: row.id,
            date,
            text: row.text,
            label,
        });
    }
    Ok(out)
}

pub fn write_tweets<W: Write>(writer: W, tweets: &[TweetRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for t in tweets {
        wtr.serialize(TweetRow {
            id: t.id.clone(),
            date: t.date.format("%Y-%m-%d").to_string(),
            text: t.text.clone(),
            label: Some(t.label.map(Polarity::as_str).unwrap_or("").to_string()),
        })
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    }
    wtr.flush().map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(())
}

const STOP_WORDS: &[&str] = &[
    "about", "above", "after", "again", "all", "am", "an", "and", "any", "are", "as", "at", "be", "because",
    "been", "before", "being", "below", "between", "both", "but", "by", "can", "did", "do", "does", "doing",
    "down", "during", "each", "few", "for", "from", "further", "had", "has", "have", "having", "he", "her",
    "here", "hers", "him", "his", "how", "if", "in", "into", "is", "it", "its", "itself", "just", "me", "more",
    "most", "my", "no", "nor", "not", "now", "of", "off", "on", "once", "only", "or", "other", "our", "ours",
    "out", "over", "own", "rt", "same", "she", "should", "so", "some", "such", "than", "that", "the", "their",
    "them", "then", "there", "these", "they", "this", "those", "through", "to", "too", "under", "until", "up",
    "very", "was", "we", "were", "what", "when", "where", "which", "while", "who", "whom", "why", "will",
    "with", "you", "your", "yours",
];

/// Lowercase, split on non-alphanumerics, drop 1-character tokens and stop words.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() > 1 && STOP_WORDS.binary_search(t).is_err())
        .map(str::to_string)
        .collect()
}

/// Multinomial Naive Bayes over unigram counts with additive smoothing.
#[derive(Debug, Clone, PartialEq)]
pub struct NaiveBayesModel {
    vocabulary: HashMap<String, usize>,
    /// `[positive, negative]` log P(token | class) per vocabulary index.
    token_log_prob: [Vec<f64>; 2],
    /// Log smoothing mass for a token outside the vocabulary.
    unseen_log_prob: [f64; 2],
    log_prior: [f64; 2],
}

fn class_slot(p: Polarity) -> usize {
    match p {
        Polarity::Positive => 0,
        Polarity::Negative => 1,
    }
}

impl NaiveBayesModel {
    pub fn vocabulary_len(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn log_prior(&self, class: Polarity) -> f64 {
        self.log_prior[class_slot(class)]
    }

    /// Per-class token probabilities over the vocabulary (not logged).
    pub fn token_probabilities(&self, class: Polarity) -> Vec<f64> {
        self.token_log_prob[class_slot(class)].iter().map(|l| l.exp()).collect()
    }
}

pub fn train_nb(corpus: &[TweetRecord], alpha: f64) -> Result<NaiveBayesModel> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Precondition(format!("smoothing must be positive, got {alpha}")));
    }
    let mut vocabulary: HashMap<String, usize> = HashMap::new();
    let mut counts: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    let mut docs = [0usize; 2];
    for doc in corpus {
        let Some(label) = doc.label else { continue };
        let c = class_slot(label);
        docs[c] += 1;
        for tok in tokenize(&doc.text) {
            let next = vocabulary.len();
            let idx = *vocabulary.entry(tok).or_insert(next);
            if idx == counts[0].len() {
                counts[0].push(0.0);
                counts[1].push(0.0);
            }
            counts[c][idx] += 1.0;
        }
    }
    if docs[0] == 0 || docs[1] == 0 {
        return Err(Error::DegenerateTrainingSet(format!(
            "need at least one document per class, got {} positive and {} negative",
            docs[0], docs[1]
        )));
    }
    let v = vocabulary.len() as f64;
    let total_docs = (docs[0] + docs[1]) as f64;
    let mut token_log_prob: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    let mut unseen_log_prob = [0.0; 2];
    for c in 0..2 {
        let total: f64 = counts[c].iter().sum();
        let denom = total + alpha * v;
        token_log_prob[c] = counts[c].iter().map(|n| ((n + alpha) / denom).ln()).collect();
        unseen_log_prob[c] = (alpha / denom).ln();
    }
    Ok(NaiveBayesModel {
        vocabulary,
        token_log_prob,
        unseen_log_prob,
        log_prior: [
            (docs[0] as f64 / total_docs).ln(),
            (docs[1] as f64 / total_docs).ln(),
        ],
    })
}

/// Classify text; returns the winning class and log P(pos|x) - log P(neg|x).
///
/// A log-odds of exactly zero resolves to positive.
pub fn classify_nb(model: &NaiveBayesModel, text: &str) -> (Polarity, f64) {
    let mut score = [model.log_prior[0], model.log_prior[1]];
    for tok in tokenize(text) {
        for (c, s) in score.iter_mut().enumerate() {
            *s += match model.vocabulary.get(&tok) {
                Some(&i) => model.token_log_prob[c][i],
                None => model.unseen_log_prob[c],
            };
        }
    }
    let log_odds = score[0] - score[1];
    let class = if log_odds >= 0.0 { Polarity::Positive } else { Polarity::Negative };
    (class, log_odds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DailySentiment {
    pub date: NaiveDate,
    pub m_pos: u64,
    pub m_neg: u64,
}

/// Count positive/negative tweets per aligned trading day.
///
/// Exact duplicate texts on the same calendar day are counted once.
/// Tweets whose date the alignment dropped are ignored.
pub fn daily_counts(
    tweets: &[TweetRecord],
    model: Option<&NaiveBayesModel>,
    alignment: &Alignment,
) -> Result<Vec<DailySentiment>> {
    let mut seen: HashSet<(NaiveDate, &str)> = HashSet::new();
    let mut by_day: BTreeMap<NaiveDate, (u64, u64)> = BTreeMap::new();
    for t in tweets {
        let polarity = match (t.label, model) {
            (Some(p), _) => p,
            (None, Some(m)) => classify_nb(m, &t.text).0,
            (None, None) => return Err(Error::UnlabeledTweet { id: t.id.clone() }),
        };
        if !seen.insert((t.date, t.text.as_str())) {
            continue;
        }
        let Some(day) = alignment.target(t.date) else { continue };
        let slot = by_day.entry(day).or_default();
        match polarity {
            Polarity::Positive => slot.0 += 1,
            Polarity::Negative => slot.1 += 1,
        }
    }
    Ok(by_day
        .into_iter()
        .map(|(date, (m_pos, m_neg))| DailySentiment { date, m_pos, m_neg })
        .collect())
}

/// Put counts onto the given trading calendar; days without tweets become (0, 0).
pub fn fill_silent_days(daily: &[DailySentiment], trading_dates: &[NaiveDate]) -> Vec<DailySentiment> {
    let by_day: HashMap<NaiveDate, &DailySentiment> = daily.iter().map(|d| (d.date, d)).collect();
    trading_dates
        .iter()
        .map(|&date| match by_day.get(&date) {
            Some(d) => **d,
            None => DailySentiment { date, m_pos: 0, m_neg: 0 },
        })
        .collect()
}

pub fn bullishness(m_pos: f64, m_neg: f64) -> f64 {
    ((1.0 + m_pos) / (1.0 + m_neg)).ln()
}

/// Consensus in [0, 1]; `None` on a silent day.
///
/// Uses the squared count ratio so that one-sided days of either sign give 1.
pub fn agreement(m_pos: f64, m_neg: f64) -> Option<f64> {
    let total = m_pos + m_neg;
    if total <= 0.0 {
        return None;
    }
    let ratio = (m_pos - m_neg) / total;
    Some(1.0 - (1.0 - ratio * ratio).max(0.0).sqrt())
}

pub fn message_volume(m_pos: f64, m_neg: f64) -> f64 {
    (1.0 + m_pos + m_neg).ln()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SentimentFeatures {
    pub date: NaiveDate,
    pub positive: f64,
    pub negative: f64,
    pub bullishness: f64,
    pub agreement: Option<f64>,
    pub message_volume: f64,
    pub carried_positive: Option<f64>,
    pub carried_negative: Option<f64>,
    pub carried_bullishness: Option<f64>,
    pub carried_agreement: Option<f64>,
    pub carried_message_volume: Option<f64>,
}

pub fn features(daily: &[DailySentiment]) -> Result<Vec<SentimentFeatures>> {
    if let Some(w) = daily.windows(2).find(|w| w[1].date <= w[0].date) {
        return Err(Error::UnorderedIndex(w[1].date));
    }
    let mut out: Vec<SentimentFeatures> = Vec::with_capacity(daily.len());
    for d in daily {
        let (p, n) = (d.m_pos as f64, d.m_neg as f64);
        let prev = out.last();
        out.push(SentimentFeatures {
            date: d.date,
            positive: p,
            negative: n,
            bullishness: bullishness(p, n),
            agreement: agreement(p, n),
            message_volume: message_volume(p, n),
            carried_positive: prev.map(|f| f.positive),
            carried_negative: prev.map(|f| f.negative),
            carried_bullishness: prev.map(|f| f.bullishness),
            carried_agreement: prev.and_then(|f| f.agreement),
            carried_message_volume: prev.map(|f| f.message_volume),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeseries::{align, AlignPolicy, DateIndex};

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn tweet(id: &str, date: &str, text: &str, label: Option<Polarity>) -> TweetRecord {
        TweetRecord {
            id: id.into(),
            date: d(date),
            text: text.into(),
            label,
        }
    }

    #[test]
    fn stop_words_sorted() {
        assert!(STOP_WORDS.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn tokenizer() {
        assert_eq!(tokenize("The $AAPL is UP, a lot!! x"), vec!["aapl", "lot"]);
    }

    fn toy() -> Vec<TweetRecord> {
        vec![
            tweet("1", "2011-01-03", "good gains", Some(Polarity::Positive)),
            tweet("2", "2011-01-03", "bad loss", Some(Polarity::Negative)),
        ]
    }

    #[test]
    fn nb_hand_computed_posterior() {
        let m = train_nb(&toy(), 1.0).unwrap();
        // P(good|pos) = 2/6, P(good|neg) = 1/6, equal priors
        let (c, lo) = classify_nb(&m, "good");
        assert_eq!(c, Polarity::Positive);
        assert!((lo - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn nb_probabilities_sum_to_one() {
        let m = train_nb(&toy(), 0.5).unwrap();
        for c in [Polarity::Positive, Polarity::Negative] {
            let s: f64 = m.token_probabilities(c).iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn nb_empty_text_follows_prior() {
        let mut corpus = toy();
        corpus.push(tweet("3", "2011-01-03", "awful drop", Some(Polarity::Negative)));
        let m = train_nb(&corpus, 1.0).unwrap();
        let (c, lo) = classify_nb(&m, "");
        assert_eq!(c, Polarity::Negative);
        assert!((lo - (1f64 / 3.0).ln() + (2f64 / 3.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn nb_symmetric_model_ties_positive() {
        let corpus = vec![
            tweet("1", "2011-01-03", "market", Some(Polarity::Positive)),
            tweet("2", "2011-01-03", "market", Some(Polarity::Negative)),
        ];
        let m = train_nb(&corpus, 1.0).unwrap();
        assert_eq!(classify_nb(&m, "market"), (Polarity::Positive, 0.0));
    }

    #[test]
    fn nb_degenerate_training_set() {
        let corpus = vec![tweet("1", "2011-01-03", "good", Some(Polarity::Positive))];
        assert!(matches!(train_nb(&corpus, 1.0), Err(Error::DegenerateTrainingSet(_))));
        assert!(matches!(train_nb(&toy(), 0.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn nb_log_odds_additive() {
        let corpus = vec![
            tweet("1", "2011-01-03", "good gains rally", Some(Polarity::Positive)),
            tweet("2", "2011-01-03", "great rally", Some(Polarity::Positive)),
            tweet("3", "2011-01-03", "bad loss crash", Some(Polarity::Negative)),
        ];
        let m = train_nb(&corpus, 1.0).unwrap();
        let prior = m.log_prior(Polarity::Positive) - m.log_prior(Polarity::Negative);
        let x = classify_nb(&m, "rally").1;
        let y = classify_nb(&m, "crash").1;
        let xy = classify_nb(&m, "rally crash").1;
        assert!((xy - (x + y - prior)).abs() < 1e-12);
    }

    #[test]
    fn counting_merges_weekend_and_dedups() {
        let tweets = vec![
            tweet("1", "2011-01-07", "up", Some(Polarity::Positive)),
            tweet("2", "2011-01-08", "sat one", Some(Polarity::Positive)),
            tweet("3", "2011-01-08", "sat two", Some(Polarity::Negative)),
            tweet("4", "2011-01-09", "sun", Some(Polarity::Negative)),
            tweet("5", "2011-01-09", "sun", Some(Polarity::Negative)),
            tweet("6", "2011-01-10", "mon", Some(Polarity::Positive)),
        ];
        let cal = DateIndex::trading_days(vec![d("2011-01-07"), d("2011-01-10")]).unwrap();
        let days = DateIndex::calendar_days(vec![d("2011-01-07"), d("2011-01-08"), d("2011-01-09"), d("2011-01-10")]).unwrap();
        let a = align(&days, &cal, AlignPolicy::NextTradingDay);
        let counts = daily_counts(&tweets, None, &a).unwrap();
        assert_eq!(
            counts,
            vec![
                DailySentiment { date: d("2011-01-07"), m_pos: 1, m_neg: 0 },
                DailySentiment { date: d("2011-01-10"), m_pos: 2, m_neg: 2 },
            ]
        );
        assert!(daily_counts(&[], None, &a).unwrap().is_empty());
    }

    #[test]
    fn unlabeled_without_model_errors() {
        let cal = DateIndex::trading_days(vec![d("2011-01-03")]).unwrap();
        let a = align(&cal, &cal, AlignPolicy::NextTradingDay);
        let t = vec![tweet("z", "2011-01-03", "meh", None)];
        assert_eq!(daily_counts(&t, None, &a), Err(Error::UnlabeledTweet { id: "z".into() }));
        let m = train_nb(&toy(), 1.0).unwrap();
        let c = daily_counts(&[tweet("z", "2011-01-03", "bad", None)], Some(&m), &a).unwrap();
        assert_eq!(c[0].m_neg, 1);
    }

    #[test]
    fn feature_examples() {
        assert_eq!(bullishness(4.0, 4.0), 0.0);
        assert_eq!(agreement(4.0, 4.0), Some(0.0));
        assert_eq!(agreement(7.0, 0.0), Some(1.0));
        assert_eq!(agreement(0.0, 7.0), Some(1.0));
        assert!((bullishness(9.0, 4.0) - 2f64.ln()).abs() < 1e-12);
        assert_eq!(agreement(0.0, 0.0), None);
        assert_eq!(message_volume(0.0, 0.0), 0.0);
    }

    #[test]
    fn carried_features_lag_one_day() {
        let daily = vec![
            DailySentiment { date: d("2011-01-03"), m_pos: 3, m_neg: 2 },
            DailySentiment { date: d("2011-01-04"), m_pos: 0, m_neg: 0 },
            DailySentiment { date: d("2011-01-05"), m_pos: 1, m_neg: 5 },
        ];
        let f = features(&daily).unwrap();
        assert_eq!(f[0].carried_bullishness, None);
        assert_eq!(f[1].carried_positive, Some(3.0));
        assert_eq!(f[1].agreement, None);
        assert_eq!(f[2].carried_agreement, None);
        assert_eq!(f[2].carried_message_volume, Some(0.0));
        let bad = vec![daily[1], daily[0]];
        assert!(features(&bad).is_err());
    }

    #[test]
    fn tweet_csv_roundtrip_and_errors() {
        let csv = "id,date,text,label\n1,2011-01-03,\"good, great\",pos\n2,2011-01-04,meh,\n";
        let tweets = read_tweets(csv.as_bytes()).unwrap();
        assert_eq!(tweets[0].text, "good, great");
        assert_eq!(tweets[1].label, None);
        let mut buf = Vec::new();
        write_tweets(&mut buf, &tweets).unwrap();
        assert_eq!(read_tweets(buf.as_slice()).unwrap(), tweets);

        let err = read_tweets("id,date,text,label\n1,2011-13-03,x,pos\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = read_tweets("id,date,text,label\n1,2011-01-03,x,maybe\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn antisymmetry(p in 0u32..500, n in 0u32..500) {
                let (p, n) = (p as f64, n as f64);
                prop_assert!((bullishness(p, n) + bullishness(n, p)).abs() < 1e-12);
                prop_assert_eq!(agreement(p, n), agreement(n, p));
            }

            #[test]
            fn agreement_bounds(p in 0u32..500, n in 0u32..500) {
                let (pf, nf) = (p as f64, n as f64);
                if let Some(a) = agreement(pf, nf) {
                    prop_assert!((0.0..=1.0).contains(&a));
                    prop_assert_eq!(a == 1.0, p == 0 || n == 0);
                    prop_assert_eq!(a == 0.0, p == n);
                } else {
                    prop_assert!(p == 0 && n == 0);
                }
            }

            #[test]
            fn bullishness_monotone(p in 0u32..500, n in 0u32..500) {
                prop_assert!(bullishness(p as f64 + 1.0, n as f64) > bullishness(p as f64, n as f64));
                prop_assert!(message_volume(p as f64 + 1.0, n as f64) > message_volume(p as f64, n as f64));
            }
        }
    }
}
