//! The black-box boundary: a pure function `f: ℕ → ℝ`.
//!
//! Index `n` stands for the string made of `n` copies of the single symbol,
//! so for a language model `f(n)` is the probability of that string
//! (including end-of-string). Oracles hold no mutable state and can be shared
//! across threads.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hankel::tail_mass;
use crate::wfa::Wfa;

/// Slack allowed when deciding whether a table sums to at most one.
pub const MASS_TOL: f64 = 1e-12;

/// Largest index an oracle can evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    Unbounded,
    Last(usize),
}

impl Horizon {
    pub fn covers(self, n: usize) -> bool {
        match self {
            Horizon::Unbounded => true,
            Horizon::Last(last) => n <= last,
        }
    }
}

/// A deterministic sequence function `f: ℕ → ℝ`.
pub trait SequenceOracle: Send + Sync {
    fn eval(&self, n: usize) -> Result<f64>;

    /// `f(0), …, f(len - 1)`. Implementations with recurrent state override
    /// this to avoid quadratic re-evaluation.
    fn eval_prefix(&self, len: usize) -> Result<Vec<f64>> {
        (0..len).map(|i| self.eval(i)).collect()
    }

    fn horizon(&self) -> Horizon {
        Horizon::Unbounded
    }

    /// Whether the oracle is a distribution over strings (`f ≥ 0`, `Σf = 1`).
    fn is_probabilistic(&self) -> bool {
        false
    }

    /// Certified upper bound on `Σ_{i>n} |f(i)|`, if one is available.
    fn tail_bound(&self, n: usize) -> Option<f64> {
        if self.is_probabilistic() {
            tail_mass(self, n).ok()
        } else {
            None
        }
    }
}

macro_rules! forward_oracle {
    ($($ty:ty),*) => {$(
        impl<T: SequenceOracle + ?Sized> SequenceOracle for $ty {
            fn eval(&self, n: usize) -> Result<f64> {
                (**self).eval(n)
            }
            fn eval_prefix(&self, len: usize) -> Result<Vec<f64>> {
                (**self).eval_prefix(len)
            }
            fn horizon(&self) -> Horizon {
                (**self).horizon()
            }
            fn is_probabilistic(&self) -> bool {
                (**self).is_probabilistic()
            }
            fn tail_bound(&self, n: usize) -> Option<f64> {
                (**self).tail_bound(n)
            }
        }
    )*};
}

forward_oracle!(&T, Box<T>, Arc<T>);

/// What a [`TableOracle`] returns past the end of its table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BeyondTable {
    Zero,
    Error,
}

/// A finite table of values.
#[derive(Debug, Clone, PartialEq)]
pub struct TableOracle {
    values: Vec<f64>,
    beyond: BeyondTable,
    probabilistic: bool,
}

impl TableOracle {
    /// The table is considered probabilistic when every value is
    /// non-negative and the total mass is at most `1 + MASS_TOL`.
    pub fn new(values: Vec<f64>, beyond: BeyondTable) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "table value at index {i} is not finite"
            )));
        }
        if values.is_empty() && beyond == BeyondTable::Error {
            return Err(Error::InvalidArgument(
                "an empty table with the error policy has no valid index".into(),
            ));
        }
        let probabilistic =
            values.iter().all(|v| *v >= 0.0) && values.iter().sum::<f64>() <= 1.0 + MASS_TOL;
        Ok(Self {
            values,
            beyond,
            probabilistic,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn policy(&self) -> BeyondTable {
        self.beyond
    }
}

/// Table lookup oracle; see [`TableOracle::new`].
pub fn oracle_from_table(values: Vec<f64>, beyond: BeyondTable) -> Result<TableOracle> {
    TableOracle::new(values, beyond)
}

impl SequenceOracle for TableOracle {
    fn eval(&self, n: usize) -> Result<f64> {
        match (self.values.get(n), self.beyond) {
            (Some(v), _) => Ok(*v),
            (None, BeyondTable::Zero) => Ok(0.0),
            (None, BeyondTable::Error) => Err(Error::OutOfHorizon {
                index: n,
                last: self.values.len() - 1,
            }),
        }
    }

    fn horizon(&self) -> Horizon {
        match self.beyond {
            BeyondTable::Zero => Horizon::Unbounded,
            BeyondTable::Error => Horizon::Last(self.values.len() - 1),
        }
    }

    fn is_probabilistic(&self) -> bool {
        self.probabilistic
    }

    fn tail_bound(&self, n: usize) -> Option<f64> {
        match self.beyond {
            BeyondTable::Zero => Some(
                self.values
                    .iter()
                    .skip(n.saturating_add(1))
                    .map(|v| v.abs())
                    .sum(),
            ),
            BeyondTable::Error if self.probabilistic => tail_mass(self, n).ok(),
            BeyondTable::Error => None,
        }
    }
}

type SeqFn = Box<dyn Fn(usize) -> f64 + Send + Sync>;

/// An oracle backed by a closure, used for analytic sequences.
pub struct FnOracle {
    f: SeqFn,
    tail: Option<SeqFn>,
    probabilistic: bool,
}

impl FnOracle {
    pub fn new(f: impl Fn(usize) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            f: Box::new(f),
            tail: None,
            probabilistic: false,
        }
    }

    /// Declares that the values form a distribution summing to one.
    pub fn probabilistic(mut self) -> Self {
        self.probabilistic = true;
        self
    }

    /// Attaches a closed-form bound on `Σ_{i>n} |f(i)|`.
    pub fn with_tail_bound(mut self, tail: impl Fn(usize) -> f64 + Send + Sync + 'static) -> Self {
        self.tail = Some(Box::new(tail));
        self
    }
}

impl std::fmt::Debug for FnOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FnOracle")
            .field("probabilistic", &self.probabilistic)
            .field("has_tail_bound", &self.tail.is_some())
            .finish()
    }
}

impl SequenceOracle for FnOracle {
    fn eval(&self, n: usize) -> Result<f64> {
        Ok((self.f)(n))
    }

    fn is_probabilistic(&self) -> bool {
        self.probabilistic
    }

    fn tail_bound(&self, n: usize) -> Option<f64> {
        match &self.tail {
            Some(t) => Some(t(n)),
            None if self.probabilistic => tail_mass(self, n).ok(),
            None => None,
        }
    }
}

/// The function computed by a WFA, `f(n) = αᵀ Aⁿ β`.
#[derive(Debug, Clone, PartialEq)]
pub struct WfaOracle {
    wfa: Wfa,
    probabilistic: bool,
}

impl WfaOracle {
    pub fn wfa(&self) -> &Wfa {
        &self.wfa
    }

    /// Declares the automaton to be probabilistic, which enables
    /// [`tail_mass`] on it.
    pub fn probabilistic(mut self) -> Self {
        self.probabilistic = true;
        self
    }
}

pub fn oracle_from_wfa(wfa: Wfa) -> WfaOracle {
    WfaOracle {
        wfa,
        probabilistic: false,
    }
}

impl SequenceOracle for WfaOracle {
    fn eval(&self, n: usize) -> Result<f64> {
        Ok(self.wfa.eval(n))
    }

    fn eval_prefix(&self, len: usize) -> Result<Vec<f64>> {
        Ok(self.wfa.stream().take(len).collect())
    }

    fn is_probabilistic(&self) -> bool {
        self.probabilistic
    }

    fn tail_bound(&self, n: usize) -> Option<f64> {
        self.wfa.tail_bound(n)
    }
}

/// Elman language model over one symbol plus end-of-string.
///
/// With `h_{t+1} = tanh(W h_t + u_in + b)` and `p_t = softmax(w_out h_t)`,
/// `f(n) = p_0(sym) ⋯ p_{n-1}(sym) · p_n(end)`. Row 0 of `w_out` holds the
/// symbol logits, row 1 the end-of-string logits.
#[derive(Debug, Clone, PartialEq)]
pub struct ElmanOracle {
    w: DMatrix<f64>,
    u_in: DVector<f64>,
    b: DVector<f64>,
    h0: DVector<f64>,
    w_out: DMatrix<f64>,
}

impl ElmanOracle {
    pub fn new(
        w: DMatrix<f64>,
        u_in: DVector<f64>,
        b: DVector<f64>,
        h0: DVector<f64>,
        w_out: DMatrix<f64>,
    ) -> Result<Self> {
        let h = w.nrows();
        let shapes_ok = w.ncols() == h
            && u_in.len() == h
            && b.len() == h
            && h0.len() == h
            && w_out.nrows() == 2
            && w_out.ncols() == h;
        if !shapes_ok {
            return Err(Error::InvalidArgument(format!(
                "inconsistent Elman shapes for hidden size {h}"
            )));
        }
        let finite = w.iter().chain(u_in.iter()).chain(b.iter()).chain(h0.iter()).chain(w_out.iter());
        if finite.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("Elman weights must be finite".into()));
        }
        Ok(Self {
            w,
            u_in,
            b,
            h0,
            w_out,
        })
    }

    pub fn hidden_size(&self) -> usize {
        self.w.nrows()
    }

    /// `(p(sym), p(end))` for a hidden state.
    fn emission(&self, h: &DVector<f64>) -> (f64, f64) {
        let logits = &self.w_out * h;
        let d = logits[0] - logits[1];
        (1.0 / (1.0 + (-d).exp()), 1.0 / (1.0 + d.exp()))
    }

    fn step(&self, h: &DVector<f64>) -> DVector<f64> {
        (&self.w * h + &self.u_in + &self.b).map(f64::tanh)
    }
}

impl SequenceOracle for ElmanOracle {
    fn eval(&self, n: usize) -> Result<f64> {
        let mut h = self.h0.clone();
        let mut prefix = 1.0;
        for _ in 0..n {
            prefix *= self.emission(&h).0;
            h = self.step(&h);
        }
        Ok(prefix * self.emission(&h).1)
    }

    fn eval_prefix(&self, len: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(len);
        let mut h = self.h0.clone();
        let mut prefix = 1.0;
        for _ in 0..len {
            let (p_sym, p_end) = self.emission(&h);
            out.push(prefix * p_end);
            prefix *= p_sym;
            h = self.step(&h);
        }
        Ok(out)
    }

    fn is_probabilistic(&self) -> bool {
        true
    }
}

/// On-disk layout of Elman weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElmanWeights {
    pub h: usize,
    #[serde(rename = "W")]
    pub w: Vec<Vec<f64>>,
    #[serde(rename = "U_in")]
    pub u_in: Vec<f64>,
    pub b: Vec<f64>,
    pub h0: Vec<f64>,
    pub w_out: Vec<Vec<f64>>,
}

fn matrix_from_rows(rows: &[Vec<f64>], ncols: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::InvalidArgument(format!(
            "every row of {what} must have {ncols} entries"
        )));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

impl TryFrom<ElmanWeights> for ElmanOracle {
    type Error = Error;

    fn try_from(w: ElmanWeights) -> Result<Self> {
        if w.w.len() != w.h {
            return Err(Error::InvalidArgument(format!("W must have {} rows", w.h)));
        }
        ElmanOracle::new(
            matrix_from_rows(&w.w, w.h, "W")?,
            DVector::from_vec(w.u_in),
            DVector::from_vec(w.b),
            DVector::from_vec(w.h0),
            matrix_from_rows(&w.w_out, w.h, "w_out")?,
        )
    }
}

impl From<&ElmanOracle> for ElmanWeights {
    fn from(o: &ElmanOracle) -> Self {
        let rows = |m: &DMatrix<f64>| {
            (0..m.nrows())
                .map(|i| m.row(i).iter().copied().collect())
                .collect()
        };
        ElmanWeights {
            h: o.hidden_size(),
            w: rows(&o.w),
            u_in: o.u_in.iter().copied().collect(),
            b: o.b.iter().copied().collect(),
            h0: o.h0.iter().copied().collect(),
            w_out: rows(&o.w_out),
        }
    }
}
