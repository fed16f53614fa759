//! Midpoint witnesses: two members of a constraint set whose average is not
//! a member.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{convex_combination, push_forward, DiscreteMeasure, FiniteMap};
use crate::rational::Rational;

/// The push-forward constraint a witness refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    /// `f♯P = f♯Q`.
    Equalizer,
    /// `f♯P = Q`.
    Transport,
}

impl ConstraintKind {
    /// The two measures compared by the constraint for the map `h`.
    pub fn sides(
        self,
        h: &FiniteMap,
        p: &DiscreteMeasure,
        q: &DiscreteMeasure,
    ) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
        match self {
            ConstraintKind::Equalizer => Ok((push_forward(h, p)?, push_forward(h, q)?)),
            ConstraintKind::Transport => Ok((push_forward(h, p)?, q.clone())),
        }
    }

    pub fn contains(self, h: &FiniteMap, p: &DiscreteMeasure, q: &DiscreteMeasure) -> Result<bool> {
        let (left, right) = self.sides(h, p, q)?;
        Ok(left == right)
    }
}

/// Maps `f`, `g` in the constraint set together with the six measures that
/// prove membership of both and non-membership of `(1-t) f + t g`.
///
/// For [`ConstraintKind::Transport`] the `*_q` fields all hold the target `Q`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessPair {
    pub kind: ConstraintKind,
    pub p: DiscreteMeasure,
    pub q: DiscreteMeasure,
    pub f: FiniteMap,
    pub g: FiniteMap,
    pub t: Rational,
    pub f_p: DiscreteMeasure,
    pub f_q: DiscreteMeasure,
    pub g_p: DiscreteMeasure,
    pub g_q: DiscreteMeasure,
    pub mid_p: DiscreteMeasure,
    pub mid_q: DiscreteMeasure,
}

impl WitnessPair {
    /// Computes all push-forwards at `t = 1/2` and checks the witness.
    ///
    /// Fails with [`Error::NotInConstraintSet`] when `f` or `g` is not a
    /// member, and [`Error::InternalInconsistency`] when the midpoint is.
    pub fn new(
        kind: ConstraintKind,
        p: &DiscreteMeasure,
        q: &DiscreteMeasure,
        f: FiniteMap,
        g: FiniteMap,
    ) -> Result<Self> {
        let t = Rational::half();
        let (f_p, f_q) = kind.sides(&f, p, q)?;
        let (g_p, g_q) = kind.sides(&g, p, q)?;
        let mid = convex_combination(&f, &g, &t)?;
        let (mid_p, mid_q) = kind.sides(&mid, p, q)?;
        let pair = WitnessPair { kind, p: p.clone(), q: q.clone(), f, g, t, f_p, f_q, g_p, g_q, mid_p, mid_q };
        pair.verify()?;
        Ok(pair)
    }

    pub fn midpoint(&self) -> Result<FiniteMap> {
        convex_combination(&self.f, &self.g, &self.t)
    }

    /// Recomputes every stored measure from `p`, `q`, `f`, `g` and checks the
    /// witness property.
    pub fn verify(&self) -> Result<()> {
        let (f_p, f_q) = self.kind.sides(&self.f, &self.p, &self.q)?;
        let (g_p, g_q) = self.kind.sides(&self.g, &self.p, &self.q)?;
        let (mid_p, mid_q) = self.kind.sides(&self.midpoint()?, &self.p, &self.q)?;
        let stored = [&self.f_p, &self.f_q, &self.g_p, &self.g_q, &self.mid_p, &self.mid_q];
        let fresh = [&f_p, &f_q, &g_p, &g_q, &mid_p, &mid_q];
        if stored.iter().zip(fresh.iter()).any(|(a, b)| a != b) {
            return Err(Error::InternalInconsistency("stored push-forwards differ from recomputation".into()));
        }
        if f_p != f_q {
            return Err(Error::NotInConstraintSet("first map of the witness".into()));
        }
        if g_p != g_q {
            return Err(Error::NotInConstraintSet("second map of the witness".into()));
        }
        if mid_p == mid_q {
            return Err(Error::InternalInconsistency("midpoint of the witness satisfies the constraint".into()));
        }
        Ok(())
    }
}
