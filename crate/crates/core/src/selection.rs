//! Kernel-selection criteria.
//!
//! Every candidate kernel is scored on the same sample history by its log
//! marginal likelihood and by the largest expected improvement it predicts.
//! The rank-based criteria combine the ranks of those two quantities; the
//! classic criteria penalize the likelihood by the parameter count.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

use crate::math;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SelectionError {
    #[error("{0} log-likelihoods but {1} acquisition values")]
    LengthMismatch(usize, usize),
    #[error("no candidates to choose from")]
    Empty,
    #[error("step {step} outside 1..={budget}")]
    StepOutOfRange { step: usize, budget: usize },
    #[error("sample count {0} too small for this criterion")]
    TooFewSamples(usize),
    #[error("unknown criterion `{0}`; valid names are: r_half, r_adaptive, bic, aic, hqc, loglik, acq")]
    UnknownName(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(into = "String", try_from = "String"))]
pub enum Criterion {
    /// `R_P + ½ R_A`.
    #[default]
    RHalf,
    /// `R_P + (2i/n) R_A` at step `i` of budget `n`.
    RAdaptive,
    Bic,
    Aic,
    Hqc,
    LogLik,
    AcqOnly,
}

impl Criterion {
    pub const ALL: [Criterion; 7] = [
        Criterion::RHalf,
        Criterion::RAdaptive,
        Criterion::Bic,
        Criterion::Aic,
        Criterion::Hqc,
        Criterion::LogLik,
        Criterion::AcqOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::RHalf => "r_half",
            Criterion::RAdaptive => "r_adaptive",
            Criterion::Bic => "bic",
            Criterion::Aic => "aic",
            Criterion::Hqc => "hqc",
            Criterion::LogLik => "loglik",
            Criterion::AcqOnly => "acq",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = SelectionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Criterion::ALL
            .into_iter()
            .find(|c| c.name() == s.trim())
            .ok_or_else(|| SelectionError::UnknownName(s.into()))
    }
}

impl From<Criterion> for String {
    fn from(c: Criterion) -> String {
        c.name().into()
    }
}

impl TryFrom<String> for Criterion {
    type Error = SelectionError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Scores of one candidate kernel at one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CandidateScore {
    pub kernel: usize,
    pub loglik: f64,
    pub acq: f64,
    pub n_params: usize,
    pub criterion_value: f64,
}

/// Ranks with the largest value ranked `len` and the smallest 1; exact ties
/// share the average of their positions.
pub fn rank(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = alloc::vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn weighted_ranks(logliks: &[f64], acqs: &[f64], weight: f64) -> Result<Vec<f64>, SelectionError> {
    if logliks.len() != acqs.len() {
        return Err(SelectionError::LengthMismatch(logliks.len(), acqs.len()));
    }
    if logliks.is_empty() {
        return Err(SelectionError::Empty);
    }
    Ok(rank(logliks).into_iter().zip(rank(acqs)).map(|(p, a)| p + weight * a).collect())
}

pub fn r_half(logliks: &[f64], acqs: &[f64]) -> Result<Vec<f64>, SelectionError> {
    weighted_ranks(logliks, acqs, 0.5)
}

pub fn r_adaptive(logliks: &[f64], acqs: &[f64], step: usize, budget: usize) -> Result<Vec<f64>, SelectionError> {
    if step == 0 || step > budget {
        return Err(SelectionError::StepOutOfRange { step, budget });
    }
    weighted_ranks(logliks, acqs, 2.0 * step as f64 / budget as f64)
}

/// Information-criterion style scores; larger is better for all kinds.
///
/// The rank-based kinds are not per-candidate and are rejected here.
pub fn classic_criterion(kind: Criterion, loglik: f64, acq: f64, n_params: usize, n: usize) -> Result<f64, SelectionError> {
    let k = n_params as f64;
    match kind {
        Criterion::Bic | Criterion::Hqc if n < 2 => Err(SelectionError::TooFewSamples(n)),
        Criterion::Aic if n < 1 => Err(SelectionError::TooFewSamples(n)),
        Criterion::Bic => Ok(2.0 * loglik - k * math::ln(n as f64)),
        Criterion::Aic => Ok(2.0 * loglik - 2.0 * k),
        Criterion::Hqc => Ok(2.0 * loglik - 2.0 * k * math::ln(math::ln(n as f64))),
        Criterion::LogLik => Ok(loglik),
        Criterion::AcqOnly => Ok(acq),
        Criterion::RHalf | Criterion::RAdaptive => Err(SelectionError::UnknownName(kind.name().into())),
    }
}

/// Fill `criterion_value` for every score.
///
/// `step` and `budget` are only used by [`Criterion::RAdaptive`]; `n` is the
/// sample count used by the information criteria.
pub fn score_candidates(
    scores: &mut [CandidateScore],
    kind: Criterion,
    n: usize,
    step: usize,
    budget: usize,
) -> Result<(), SelectionError> {
    if scores.is_empty() {
        return Err(SelectionError::Empty);
    }
    let logliks: Vec<f64> = scores.iter().map(|s| s.loglik).collect();
    let acqs: Vec<f64> = scores.iter().map(|s| s.acq).collect();
    let values = match kind {
        Criterion::RHalf => r_half(&logliks, &acqs)?,
        Criterion::RAdaptive => r_adaptive(&logliks, &acqs, step, budget)?,
        _ => scores
            .iter()
            .map(|s| classic_criterion(kind, s.loglik, s.acq, s.n_params, n))
            .collect::<Result<Vec<_>, _>>()?,
    };
    for (s, v) in scores.iter_mut().zip(values) {
        s.criterion_value = v;
    }
    Ok(())
}

/// Position of the winning score: largest criterion value, then largest
/// log-likelihood, then lowest position.
pub fn select_kernel(scores: &[CandidateScore]) -> Result<usize, SelectionError> {
    let mut best: Option<usize> = None;
    for (i, s) in scores.iter().enumerate() {
        let better = match best {
            None => true,
            Some(b) => {
                let cur = &scores[b];
                s.criterion_value > cur.criterion_value
                    || (s.criterion_value == cur.criterion_value && s.loglik > cur.loglik)
            }
        };
        if better {
            best = Some(i);
        }
    }
    best.ok_or(SelectionError::Empty)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_relative_eq;

    const LOGLIK: [f64; 3] = [2.6, 2.5, -2.1];
    const ACQ: [f64; 3] = [2.0, -1.5, 9.5];

    #[test]
    fn rank_examples() {
        assert_eq!(rank(&LOGLIK), vec![3.0, 2.0, 1.0]);
        assert_eq!(rank(&ACQ), vec![2.0, 1.0, 3.0]);
        assert_eq!(rank(&[1.0, 1.0, 2.0]), vec![1.5, 1.5, 3.0]);
        assert_eq!(rank(&[4.0, 4.0, 4.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn r_half_examples() {
        assert_eq!(r_half(&LOGLIK, &ACQ).unwrap(), vec![4.0, 2.5, 2.5]);
        assert_eq!(r_half(&[0.3], &[7.0]).unwrap(), vec![1.5]);
        let cubed: Vec<f64> = LOGLIK.iter().map(|x| x * x * x + 10.0).collect();
        assert_eq!(r_half(&cubed, &ACQ).unwrap(), vec![4.0, 2.5, 2.5]);
        assert_eq!(r_half(&[1.0], &[1.0, 2.0]).unwrap_err(), SelectionError::LengthMismatch(1, 2));
    }

    #[test]
    fn r_adaptive_examples() {
        assert_eq!(r_adaptive(&LOGLIK, &ACQ, 25, 100).unwrap(), vec![4.0, 2.5, 2.5]);
        assert_eq!(r_adaptive(&LOGLIK, &ACQ, 100, 100).unwrap(), vec![7.0, 4.0, 7.0]);
        assert_eq!(r_adaptive(&LOGLIK, &ACQ, 50, 100).unwrap(), vec![5.0, 3.0, 4.0]);
        assert!(r_adaptive(&LOGLIK, &ACQ, 0, 100).is_err());
        assert!(r_adaptive(&LOGLIK, &ACQ, 101, 100).is_err());
    }

    #[test]
    fn classic_examples() {
        assert_relative_eq!(classic_criterion(Criterion::Bic, 2.6, 0.0, 2, 10).unwrap(), 0.594_829_814, epsilon = 1e-8);
        assert_relative_eq!(classic_criterion(Criterion::Aic, 2.6, 0.0, 2, 10).unwrap(), 1.2, epsilon = 1e-12);
        assert_relative_eq!(classic_criterion(Criterion::Hqc, 2.6, 0.0, 2, 10).unwrap(), 1.863_870_219, epsilon = 1e-8);
        assert_eq!(classic_criterion(Criterion::LogLik, 2.6, 9.0, 2, 10).unwrap(), 2.6);
        assert_eq!(classic_criterion(Criterion::AcqOnly, 2.6, 9.0, 2, 10).unwrap(), 9.0);
        assert_eq!(classic_criterion(Criterion::Bic, 2.6, 0.0, 2, 1).unwrap_err(), SelectionError::TooFewSamples(1));
    }

    fn scores(logliks: &[f64], acqs: &[f64]) -> Vec<CandidateScore> {
        logliks
            .iter()
            .zip(acqs)
            .enumerate()
            .map(|(kernel, (&loglik, &acq))| CandidateScore { kernel, loglik, acq, n_params: 3, criterion_value: 0.0 })
            .collect()
    }

    #[test]
    fn select_examples() {
        let mut s = scores(&LOGLIK, &ACQ);
        score_candidates(&mut s, Criterion::RHalf, 10, 1, 10).unwrap();
        assert_eq!(select_kernel(&s).unwrap(), 0);
        let mut s = scores(&[1.0, 3.0, 2.0], &[1.0, 1.0, 1.0]);
        for x in &mut s {
            x.criterion_value = 5.0;
        }
        assert_eq!(select_kernel(&s).unwrap(), 1);
        let s = scores(&[1.0], &[1.0]);
        assert_eq!(select_kernel(&s).unwrap(), 0);
        assert_eq!(select_kernel(&[]).unwrap_err(), SelectionError::Empty);
    }

    #[test]
    fn names_parse() {
        for c in Criterion::ALL {
            assert_eq!(c.name().parse::<Criterion>().unwrap(), c);
        }
        assert!("waic".parse::<Criterion>().is_err());
    }
}
