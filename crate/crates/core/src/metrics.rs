//! Scale-invariant signal-to-distortion ratio, plain and
//! permutation-invariant.

use std::fmt;

use itertools::Itertools;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// An SI-SDR value in dB. `Perfect` stands for an exactly zero error
/// vector, i.e. +inf dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SiSdr {
    Db(f64),
    Perfect,
}

impl SiSdr {
    /// Value in dB, `f64::INFINITY` for a perfect match.
    pub fn db(self) -> f64 {
        match self {
            Self::Db(v) => v,
            Self::Perfect => f64::INFINITY,
        }
    }

    pub fn is_perfect(self) -> bool {
        matches!(self, Self::Perfect)
    }

    /// Value clipped to at most `cap` dB.
    pub fn capped(self, cap: f64) -> f64 {
        self.db().min(cap)
    }

    fn from_db(v: f64) -> Self {
        if v == f64::INFINITY {
            Self::Perfect
        } else {
            Self::Db(v)
        }
    }
}

impl fmt::Display for SiSdr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Perfect => f.write_str("inf"),
            Self::Db(v) if v.is_infinite() => f.write_str("-inf"),
            Self::Db(v) => match f.precision() {
                Some(p) => write!(f, "{v:.p$}"),
                None => write!(f, "{v}"),
            },
        }
    }
}

impl Serialize for SiSdr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Db(v) if v.is_finite() => s.serialize_f64(*v),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

/// SI-SDR of `estimate` against `reference`:
/// `alpha = <est, ref> / <ref, ref>`, `10 log10(|alpha ref|^2 / |alpha ref - est|^2)`.
///
/// All arithmetic is in `f64`. An estimate with no component along the
/// reference scores `-inf`.
pub fn si_sdr<T: Copy + Into<f64>>(estimate: &[T], reference: &[T]) -> Result<SiSdr> {
    if estimate.len() != reference.len() {
        return Err(Error::LengthMismatch {
            what: "estimate vs reference samples",
            left: estimate.len(),
            right: reference.len(),
        });
    }
    if reference.is_empty() {
        return Err(Error::LengthMismatch {
            what: "signal must have at least one sample",
            left: 0,
            right: 1,
        });
    }
    let (mut dot, mut ref_energy) = (0.0f64, 0.0f64);
    for (&e, &r) in estimate.iter().zip(reference) {
        let (e, r) = (e.into(), r.into());
        dot += e * r;
        ref_energy += r * r;
    }
    if ref_energy == 0.0 {
        return Err(Error::UndefinedReference);
    }
    let alpha = dot / ref_energy;
    let (mut target, mut noise) = (0.0f64, 0.0f64);
    for (&e, &r) in estimate.iter().zip(reference) {
        let t = alpha * r.into();
        target += t * t;
        let d = t - e.into();
        noise += d * d;
    }
    if noise == 0.0 {
        return Ok(SiSdr::Perfect);
    }
    Ok(SiSdr::from_db(10.0 * (target / noise).log10()))
}

/// Permutation-invariant evaluation result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalResult {
    /// Score of reference `i` against estimate `best_permutation[i]`.
    pub per_source_si_sdr: Vec<SiSdr>,
    pub mean_si_sdr: SiSdr,
    /// `best_permutation[i]` is the estimate assigned to reference `i`.
    pub best_permutation: Vec<usize>,
}

/// Scores every assignment of estimates to references and keeps the one
/// with the highest mean SI-SDR. The first maximizer in lexicographic
/// permutation order wins ties.
pub fn pit_si_sdr<T: Copy + Into<f64>, S: AsRef<[T]>>(
    estimates: &[S],
    references: &[S],
) -> Result<EvalResult> {
    let k = references.len();
    if estimates.len() != k {
        return Err(Error::LengthMismatch {
            what: "estimate vs reference count",
            left: estimates.len(),
            right: k,
        });
    }
    if k == 0 {
        return Err(Error::LengthMismatch {
            what: "need at least one source",
            left: 0,
            right: 1,
        });
    }
    let len = references[0].as_ref().len();
    for s in estimates.iter().chain(references) {
        if s.as_ref().len() != len {
            return Err(Error::LengthMismatch {
                what: "signal lengths",
                left: len,
                right: s.as_ref().len(),
            });
        }
    }

    // pairwise[i][j]: reference i vs estimate j
    let mut pairwise = vec![vec![SiSdr::Db(0.0); k]; k];
    for (i, r) in references.iter().enumerate() {
        for (j, e) in estimates.iter().enumerate() {
            pairwise[i][j] = si_sdr(e.as_ref(), r.as_ref())?;
        }
    }

    let mut best: Option<(f64, Vec<usize>)> = None;
    for perm in (0..k).permutations(k) {
        let mean = perm.iter().enumerate().map(|(i, &j)| pairwise[i][j].db()).sum::<f64>() / k as f64;
        let better = match &best {
            None => true,
            Some((m, _)) => mean > *m,
        };
        if better {
            best = Some((mean, perm));
        }
    }
    let (mean, perm) = best.expect("at least one permutation");
    Ok(EvalResult {
        per_source_si_sdr: perm.iter().enumerate().map(|(i, &j)| pairwise[i][j]).collect(),
        mean_si_sdr: SiSdr::from_db(mean),
        best_permutation: perm,
    })
}
