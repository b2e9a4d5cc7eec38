use super::PitchPosteriorgram;

/// Probabilities are floored here before taking logs.
pub const OBSERVATION_FLOOR: f64 = 1e-10;

/// Row-normalized log transition matrix: Gaussian in log2-frequency distance.
/// An infinite sigma gives uniform transitions.
pub fn transition_log_probs(frequencies: &[f64], sigma_octaves: f64) -> Vec<Vec<f64>> {
    assert!(sigma_octaves > 0.0, "transition sigma must be positive");
    let logs: Vec<f64> = frequencies.iter().map(|f| f.log2()).collect();
    logs.iter()
        .map(|&from| {
            let raw: Vec<f64> = logs
                .iter()
                .map(|&to| {
                    let z = (to - from) / sigma_octaves;
                    -0.5 * z * z
                })
                .collect();
            let peak = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let norm = peak + raw.iter().map(|r| (r - peak).exp()).sum::<f64>().ln();
            raw.into_iter().map(|r| r - norm).collect()
        })
        .collect()
}

/// Most probable candidate path under a uniform initial distribution.
///
/// Ties resolve to the lowest candidate index, both for predecessors and for the
/// final state.
pub fn viterbi_decode(p: &PitchPosteriorgram, transition_sigma_octaves: f64) -> Vec<usize> {
    let frames = p.scores.len();
    if frames == 0 {
        return Vec::new();
    }
    let k = p.candidate_frequencies.len();
    let transitions = transition_log_probs(&p.candidate_frequencies, transition_sigma_octaves);
    let obs = |t: usize, j: usize| p.scores[t][j].max(OBSERVATION_FLOOR).ln();

    let mut score: Vec<f64> = (0..k).map(|j| obs(0, j)).collect();
    let mut back = vec![vec![0usize; k]; frames];
    let mut next = vec![0.0; k];
    for t in 1..frames {
        for j in 0..k {
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0;
            for i in 0..k {
                let s = score[i] + transitions[i][j];
                if s > best {
                    best = s;
                    arg = i;
                }
            }
            next[j] = best + obs(t, j);
            back[t][j] = arg;
        }
        std::mem::swap(&mut score, &mut next);
    }
    let mut state = 0;
    for j in 1..k {
        if score[j] > score[state] {
            state = j;
        }
    }
    let mut path = vec![0; frames];
    path[frames - 1] = state;
    for t in (1..frames).rev() {
        state = back[t][state];
        path[t - 1] = state;
    }
    path
}
