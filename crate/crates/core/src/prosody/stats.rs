use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ProsodyError, DURATION_MAX};
use crate::alignment::{base_symbol, AlignedTranscript};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolStats {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub count: usize,
}

/// Per-symbol duration statistics, keyed by stress-free ARPAbet symbol.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DurationStats {
    pub symbols: BTreeMap<String, SymbolStats>,
    /// Mean over every observation; the lookup fallback for unseen symbols.
    pub global_mean: f64,
}

impl DurationStats {
    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn get(&self, symbol: &str) -> Option<&SymbolStats> {
        self.symbols.get(base_symbol(symbol))
    }

    pub fn mean(&self, symbol: &str) -> Result<f64, ProsodyError> {
        if self.is_empty() {
            return Err(ProsodyError::NoStats);
        }
        Ok(self.get(symbol).map_or(self.global_mean, |s| s.mean))
    }
}

/// Durations above 0.5 s are clipped before aggregation.
pub fn fit_duration_stats<'a>(
    corpus: impl IntoIterator<Item = &'a AlignedTranscript>,
) -> Result<DurationStats, ProsodyError> {
    let mut observed: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for t in corpus {
        for p in &t.phonemes {
            observed
                .entry(base_symbol(&p.symbol).to_string())
                .or_default()
                .push(p.duration().min(DURATION_MAX));
        }
    }
    if observed.is_empty() {
        return Err(ProsodyError::EmptyCorpus);
    }
    let mut total = 0.0;
    let mut count = 0usize;
    let symbols = observed
        .into_iter()
        .map(|(symbol, values)| {
            let n = values.len() as f64;
            let sum: f64 = values.iter().sum();
            let mean = sum / n;
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            total += sum;
            count += values.len();
            (
                symbol,
                SymbolStats {
                    mean,
                    std: var.sqrt(),
                    count: values.len(),
                },
            )
        })
        .collect();
    Ok(DurationStats {
        symbols,
        global_mean: total / count as f64,
    })
}
