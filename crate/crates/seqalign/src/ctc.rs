//! CTC loss with exact gradients, the collapse function, greedy decoding,
//! a brute-force enumeration oracle and WER scoring.
//!
//! Vocabulary index 0 is reserved for the blank token everywhere in this
//! crate. The loss marginalizes over all frame-level alignments whose
//! collapse equals the target, using the log-domain forward algorithm over
//! the blank-interleaved target; gradients come from the forward-backward
//! recursion and are taken with respect to pre-softmax logits.

use crate::numkit::{logadd, logsumexp_unchecked, Matrix};
use crate::{Error, Result};

/// Reserved blank index.
pub const BLANK: usize = 0;

/// A sequence of vocabulary indices in `{0, ..., V}` where 0 is blank.
///
/// A *target* sequence additionally contains no blanks; constructors
/// enforce the distinction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenSequence {
    tokens: Vec<usize>,
    vocab_size: usize,
}

impl TokenSequence {
    /// An alignment may contain blanks.
    pub fn alignment(tokens: Vec<usize>, vocab_size: usize) -> Result<Self> {
        if let Some(&t) = tokens.iter().find(|&&t| t > vocab_size) {
            return Err(Error::Contract(format!(
                "token index {t} exceeds vocabulary size {vocab_size}"
            )));
        }
        Ok(TokenSequence { tokens, vocab_size })
    }

    /// A target must be blank-free.
    pub fn target(tokens: Vec<usize>, vocab_size: usize) -> Result<Self> {
        if tokens.contains(&BLANK) {
            return Err(Error::Contract("target contains the blank token".into()));
        }
        Self::alignment(tokens, vocab_size)
    }

    pub fn tokens(&self) -> &[usize] {
        &self.tokens
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Number of adjacent equal token pairs; each one forces a blank in
    /// between, which lengthens the shortest feasible alignment.
    pub fn adjacent_repeats(&self) -> usize {
        self.tokens.windows(2).filter(|w| w[0] == w[1]).count()
    }
}

/// Merges consecutive duplicates, then removes blanks. Collapsing only
/// happens in-between blanks and not across them.
pub fn collapse(alignment: &TokenSequence) -> TokenSequence {
    let mut out = Vec::new();
    let mut prev = None;
    for &t in alignment.tokens() {
        if Some(t) != prev && t != BLANK {
            out.push(t);
        }
        prev = Some(t);
    }
    TokenSequence {
        tokens: out,
        vocab_size: alignment.vocab_size,
    }
}

/// Per-frame log-probability table: `S` rows, each a log-softmax output
/// over the `V + 1` vocabulary entries (blank included).
#[derive(Clone, Debug)]
pub struct FrameLogProbs {
    table: Matrix,
}

impl FrameLogProbs {
    /// Validates that each row is a log-probability vector (row logsumexp
    /// within 1e-9 of zero).
    pub fn new(table: Matrix) -> Result<Self> {
        if table.rows() == 0 || table.cols() < 2 {
            return Err(Error::Contract(
                "frame table needs at least one frame and a 2-entry vocabulary".into(),
            ));
        }
        for i in 0..table.rows() {
            let lse = logsumexp_unchecked(table.row(i));
            if lse.abs() > 1e-9 {
                return Err(Error::Contract(format!(
                    "row {i} is not a log-probability vector (logsumexp = {lse:e})"
                )));
            }
        }
        Ok(FrameLogProbs { table })
    }

    /// Applies a per-row log-softmax to raw logits.
    pub fn from_logits(logits: &Matrix) -> Self {
        let mut table = logits.clone();
        for i in 0..table.rows() {
            let row = crate::numkit::log_softmax(logits.row(i));
            table.row_mut(i).copy_from_slice(&row);
        }
        FrameLogProbs { table }
    }

    pub fn frames(&self) -> usize {
        self.table.rows()
    }

    /// Vocabulary size V (real tokens, excluding blank).
    pub fn vocab_size(&self) -> usize {
        self.table.cols() - 1
    }

    pub fn table(&self) -> &Matrix {
        &self.table
    }

    #[inline]
    fn lp(&self, t: usize, k: usize) -> f64 {
        self.table[(t, k)]
    }
}

/// Loss and its exact gradient with respect to the pre-softmax logits.
#[derive(Clone, Debug)]
pub struct CtcResult {
    pub loss: f64,
    /// `S x (V+1)`; each row sums to zero (softmax-Jacobian property).
    pub grad: Matrix,
}

fn check_compatible(lp: &FrameLogProbs, target: &TokenSequence) -> Result<()> {
    if target.tokens().contains(&BLANK) {
        return Err(Error::Contract("target contains the blank token".into()));
    }
    if target.vocab_size() != lp.vocab_size() {
        return Err(Error::Shape(format!(
            "target vocabulary {} does not match frame table vocabulary {}",
            target.vocab_size(),
            lp.vocab_size()
        )));
    }
    Ok(())
}

fn check_feasible(lp: &FrameLogProbs, target: &TokenSequence) -> Result<()> {
    let needed = target.len() + target.adjacent_repeats();
    if lp.frames() < needed {
        return Err(Error::Infeasible(format!(
            "target of length {} with {} adjacent repeats needs at least {} frames, got {}",
            target.len(),
            target.adjacent_repeats(),
            needed,
            lp.frames()
        )));
    }
    Ok(())
}

/// Negative log-probability of the target under the alignment-sum model,
/// with the exact analytic gradient through the softmax.
pub fn ctc_loss(lp: &FrameLogProbs, target: &TokenSequence) -> Result<CtcResult> {
    check_compatible(lp, target)?;
    check_feasible(lp, target)?;

    let s_frames = lp.frames();
    let t_len = target.len();
    let ext_len = 2 * t_len + 1;
    // Blank-interleaved extended target: blank at even positions.
    let ext: Vec<usize> = (0..ext_len)
        .map(|s| if s % 2 == 0 { BLANK } else { target.tokens()[s / 2] })
        .collect();

    const NEG_INF: f64 = f64::NEG_INFINITY;
    let mut alpha = vec![NEG_INF; s_frames * ext_len];
    let mut beta = vec![NEG_INF; s_frames * ext_len];
    let idx = |t: usize, s: usize| t * ext_len + s;

    alpha[idx(0, 0)] = lp.lp(0, BLANK);
    if ext_len > 1 {
        alpha[idx(0, 1)] = lp.lp(0, ext[1]);
    }
    for t in 1..s_frames {
        for s in 0..ext_len {
            let mut acc = alpha[idx(t - 1, s)];
            if s >= 1 {
                acc = logadd(acc, alpha[idx(t - 1, s - 1)]);
            }
            if s >= 2 && ext[s] != BLANK && ext[s] != ext[s - 2] {
                acc = logadd(acc, alpha[idx(t - 1, s - 2)]);
            }
            alpha[idx(t, s)] = acc + lp.lp(t, ext[s]);
        }
    }

    let mut log_p = alpha[idx(s_frames - 1, ext_len - 1)];
    if ext_len > 1 {
        log_p = logadd(log_p, alpha[idx(s_frames - 1, ext_len - 2)]);
    }
    if log_p == NEG_INF {
        // Cannot happen for feasible targets with finite rows, but a table
        // with -inf entries can zero out every path.
        return Err(Error::Infeasible(
            "every alignment of the target has zero probability".into(),
        ));
    }

    beta[idx(s_frames - 1, ext_len - 1)] = lp.lp(s_frames - 1, ext[ext_len - 1]);
    if ext_len > 1 {
        beta[idx(s_frames - 1, ext_len - 2)] = lp.lp(s_frames - 1, ext[ext_len - 2]);
    }
    for t in (0..s_frames - 1).rev() {
        for s in 0..ext_len {
            let mut acc = beta[idx(t + 1, s)];
            if s + 1 < ext_len {
                acc = logadd(acc, beta[idx(t + 1, s + 1)]);
            }
            if s + 2 < ext_len && ext[s + 2] != BLANK && ext[s + 2] != ext[s] {
                acc = logadd(acc, beta[idx(t + 1, s + 2)]);
            }
            beta[idx(t, s)] = acc + lp.lp(t, ext[s]);
        }
    }

    // grad[t][k] = y_t(k) - exp(logQ_t(k) - lp_t(k) - log_p) where
    // logQ sums alpha*beta over extended states labeled k (both factors
    // include the emission at t, hence the single lp subtraction).
    let vocab = lp.vocab_size();
    let mut grad = Matrix::zeros(s_frames, vocab + 1);
    let mut scratch: Vec<f64> = Vec::with_capacity(ext_len);
    for t in 0..s_frames {
        for k in 0..=vocab {
            scratch.clear();
            for s in 0..ext_len {
                if ext[s] == k {
                    scratch.push(alpha[idx(t, s)] + beta[idx(t, s)]);
                }
            }
            let log_q = if scratch.is_empty() {
                NEG_INF
            } else {
                logsumexp_unchecked(&scratch)
            };
            let path_mass = if log_q == NEG_INF {
                0.0
            } else {
                (log_q - lp.lp(t, k) - log_p).exp()
            };
            grad[(t, k)] = lp.lp(t, k).exp() - path_mass;
        }
    }

    Ok(CtcResult {
        loss: (-log_p).max(0.0),
        grad,
    })
}

/// Enumeration oracle: sums the probability of every alignment in
/// `{0..V}^S` whose collapse equals the target and returns the negative
/// log of the sum.
pub fn ctc_brute_force(lp: &FrameLogProbs, target: &TokenSequence) -> Result<f64> {
    check_compatible(lp, target)?;
    let s_frames = lp.frames();
    let width = lp.vocab_size() + 1;
    let count = (width as f64).powi(s_frames as i32);
    if count > 1e7 {
        return Err(Error::BoundExceeded(format!(
            "{width}^{s_frames} alignments exceed the 1e7 enumeration bound"
        )));
    }

    let mut total = 0.0f64;
    let mut assignment = vec![0usize; s_frames];
    loop {
        // Probability of this alignment.
        let log_prob: f64 = (0..s_frames).map(|t| lp.lp(t, assignment[t])).sum();
        let seq = TokenSequence {
            tokens: assignment.clone(),
            vocab_size: lp.vocab_size(),
        };
        if collapse(&seq).tokens() == target.tokens() {
            total += log_prob.exp();
        }
        // Odometer increment.
        let mut pos = 0;
        loop {
            if pos == s_frames {
                if total == 0.0 {
                    return Err(Error::Infeasible(
                        "no alignment collapses to the target".into(),
                    ));
                }
                return Ok(-total.ln());
            }
            assignment[pos] += 1;
            if assignment[pos] < width {
                break;
            }
            assignment[pos] = 0;
            pos += 1;
        }
    }
}

/// Collapsed argmax-per-frame decoding; ties break toward the lowest index.
pub fn greedy_decode(lp: &FrameLogProbs) -> TokenSequence {
    let mut best = Vec::with_capacity(lp.frames());
    for t in 0..lp.frames() {
        let row = lp.table.row(t);
        let mut arg = 0;
        for (k, &v) in row.iter().enumerate() {
            if v > row[arg] {
                arg = k;
            }
        }
        best.push(arg);
    }
    collapse(&TokenSequence {
        tokens: best,
        vocab_size: lp.vocab_size(),
    })
}

/// Word error rate: Levenshtein distance (unit costs) over reference length.
pub fn wer(reference: &TokenSequence, hypothesis: &TokenSequence) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::Contract("WER reference must be non-empty".into()));
    }
    Ok(edit_distance(reference.tokens(), hypothesis.tokens()) as f64 / reference.len() as f64)
}

/// Levenshtein distance with unit substitution/insertion/deletion costs.
pub fn edit_distance(a: &[usize], b: &[usize]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, &x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}
