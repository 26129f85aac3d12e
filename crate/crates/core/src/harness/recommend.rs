//! Architecture recommendation keyed on overlay capacity and routing rounds.

use serde::{Deserialize, Serialize};

use crate::entangle::physical_depth;
use crate::error::{param, Result};

/// Rows of the decision table, checked top-down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    SingleOverlay,
    MultiLayer,
    Hierarchical,
    Grid,
}

impl Strategy {
    pub fn label(self) -> &'static str {
        match self {
            Self::SingleOverlay => "Single Ramanujan overlay, Valiant routing",
            Self::MultiLayer => "Multi-layer AOL, L = O(log N) layers",
            Self::Hierarchical => "Hierarchical routing, b = sqrt(n)",
            Self::Grid => "Grid routing (no overlay)",
        }
    }

    pub fn depth_class(self) -> &'static str {
        match self {
            Self::Grid => "O(sqrt(N))",
            _ => "O(log N)",
        }
    }
}

/// Rounds per circuit from which pre-shared entanglement pays off.
pub const ENTANGLEMENT_ROUNDS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionReport {
    pub n: usize,
    pub k0: usize,
    pub rounds: usize,
    pub pi_known: bool,
    pub strategy: Strategy,
    /// `2 log₂N` matching steps for the logarithmic rows (scatter and gather
    /// of about `log₂N` each), `⌈3√N/2⌉` for grid routing.
    pub predicted_depth: f64,
    pub advice: Vec<String>,
}

impl DecisionReport {
    pub fn summary(&self) -> String {
        let mut s = format!(
            "N = {}, k0 = {}, R = {}, pi {}\nstrategy: {} ({})\npredicted depth: {:.1} matching steps\n",
            self.n,
            self.k0,
            self.rounds,
            if self.pi_known { "known" } else { "unknown" },
            self.strategy.label(),
            self.strategy.depth_class(),
            self.predicted_depth
        );
        for a in &self.advice {
            s.push_str(&format!("advice: {a}\n"));
        }
        s
    }
}

/// Select the first row whose capacity threshold `k0` meets: `N/2`,
/// `N/log₂N`, `√N`, otherwise grid routing.
pub fn recommend(k0: usize, rounds: usize, n: usize, pi_known: bool) -> Result<DecisionReport> {
    if k0 < 1 {
        return param("k0 must be at least 1");
    }
    if n < 2 {
        return param("need at least two atoms");
    }
    let (k, nf) = (k0 as f64, n as f64);
    let log_n = nf.log2();
    let strategy = if k >= nf / 2.0 {
        Strategy::SingleOverlay
    } else if k >= nf / log_n {
        Strategy::MultiLayer
    } else if k >= nf.sqrt() {
        Strategy::Hierarchical
    } else {
        Strategy::Grid
    };
    let predicted_depth = match strategy {
        Strategy::Grid => physical_depth(nf.sqrt().ceil() as usize) as f64,
        _ => 2.0 * log_n,
    };
    let mut advice = Vec::new();
    if rounds >= ENTANGLEMENT_ROUNDS {
        advice.push(format!("{rounds} routing rounds >= {ENTANGLEMENT_ROUNDS}: add entanglement-assisted routing for the long-range component"));
    }
    if !pi_known {
        advice.push(format!(
            "permutation unknown: run greedy displacement matching (about {:.1} steps) and route the residual with Valiant routing",
            0.5 * log_n
        ));
    }
    Ok(DecisionReport { n, k0, rounds, pi_known, strategy, predicted_depth, advice })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example() {
        let r = recommend(256, 10, 1024, false).unwrap();
        assert_eq!(r.strategy, Strategy::MultiLayer);
        assert!((r.predicted_depth - 20.0).abs() < 1e-9);
        assert_eq!(r.advice.len(), 2);
    }

    #[test]
    fn thresholds() {
        assert_eq!(recommend(1, 0, 1024, true).unwrap().strategy, Strategy::Grid);
        assert_eq!(recommend(1, 0, 1024, true).unwrap().strategy.label(), "Grid routing (no overlay)");
        assert_eq!(recommend(512, 0, 1024, true).unwrap().strategy, Strategy::SingleOverlay);
        assert_eq!(recommend(32, 0, 1024, true).unwrap().strategy, Strategy::Hierarchical);
        assert_eq!(recommend(31, 0, 1024, true).unwrap().strategy, Strategy::Grid);
        assert!(recommend(0, 0, 1024, true).is_err());
    }

    #[test]
    fn entanglement_boundary() {
        assert!(recommend(1, 4, 64, true).unwrap().advice[0].contains("entanglement"));
        assert!(recommend(1, 3, 64, true).unwrap().advice.is_empty());
    }
}
