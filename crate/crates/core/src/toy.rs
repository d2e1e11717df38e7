//! The two-period renewable production-planning example.
//!
//! Variable order is fixed as `(x1, x2, y1, y2, s1, s2)`: `x_i, y_i` allocate
//! the renewable forecast of 2 units in period `i`, `s_i` are grid imports at
//! cost 100. Each supply row reads `x_i + y_i − s_i ≤ 2 + u_i`.

use std::collections::BTreeMap;

use crate::model::{Hardness, Mask, RobustConstraint, RobustLP};
use crate::usets::UncertaintySet;

pub const VAR_NAMES: [&str; 6] = ["x1", "x2", "y1", "y2", "s1", "s2"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Variant {
    /// `U = {0}`, static policy.
    Nominal,
    /// Budget(ρ=1, Γ=1) everywhere, static policy.
    Static,
    /// Budget(1, 1) everywhere, `y_i` adapts to `u_i`.
    Adaptive,
    /// `x_i, y_i` adapt to `u_i`; non-negativity rows use Budget(2, 2).
    Repaired,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Self::Nominal, Self::Static, Self::Adaptive, Self::Repaired];

    pub fn name(self) -> &'static str {
        match self {
            Self::Nominal => "nominal",
            Self::Static => "static",
            Self::Adaptive => "adaptive",
            Self::Repaired => "repaired",
        }
    }
}

pub fn mask(variant: Variant) -> Mask {
    let mut mask = Mask::fixed(6, 2);
    match variant {
        Variant::Nominal | Variant::Static => {}
        Variant::Adaptive => {
            mask.set(2, 0, true);
            mask.set(3, 1, true);
        }
        Variant::Repaired => {
            for (j, k) in [(0, 0), (1, 1), (2, 0), (3, 1)] {
                mask.set(j, k, true);
            }
        }
    }
    mask
}

pub fn problem(variant: Variant) -> RobustLP {
    let (soft, hard) = match variant {
        Variant::Nominal => ("nominal", "nominal"),
        Variant::Static | Variant::Adaptive => ("budget", "budget"),
        Variant::Repaired => ("budget", "budget2"),
    };
    let mut sets = BTreeMap::new();
    match variant {
        Variant::Nominal => {
            sets.insert(
                "nominal".to_string(),
                UncertaintySet::bounded(vec![0.0; 2], vec![0.0; 2]).expect("valid set"),
            );
        }
        _ => {
            sets.insert("budget".to_string(), UncertaintySet::budget(1.0, 1.0).expect("valid set"));
            if variant == Variant::Repaired {
                sets.insert(
                    "budget2".to_string(),
                    UncertaintySet::budget(2.0, 2.0).expect("valid set"),
                );
            }
        }
    }
    let supply = |i: usize| {
        let mut a = vec![0.0; 6];
        a[i] = 1.0;
        a[2 + i] = 1.0;
        a[4 + i] = -1.0;
        let mut d = vec![0.0; 2];
        d[i] = 1.0;
        RobustConstraint {
            a,
            b: 2.0,
            d,
            set_id: soft.to_string(),
            hardness: Hardness::Soft,
            label: format!("supply{}", i + 1),
        }
    };
    let mut lp = RobustLP::new(
        vec![1.0, 1.0, 1.0, 1.0, -100.0, -100.0],
        vec![supply(0), supply(1)],
        2,
        sets,
        soft,
        (0..6).collect(),
    )
    .and_then(|lp| lp.with_var_names(VAR_NAMES.iter().map(|s| s.to_string()).collect()))
    .expect("toy problem is well formed");
    if hard != soft {
        for j in 0..6 {
            lp = lp.with_nonneg_set(j, hard).expect("toy set exists");
        }
    }
    lp
}
