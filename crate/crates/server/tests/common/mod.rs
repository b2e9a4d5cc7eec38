#![allow(dead_code)]

use speechedit::audio::encode_wav;
use speechedit::pipeline::Recording;
use speechedit::synthetic::{demo_lexicon, render_utterance, UtteranceSpec};

pub const DEST_TEXT: &str = "the quick brown fox jumped over the lazy dog";
pub const DONOR_TEXT: &str = "we saw a quick brown dog near the river";

/// "quick brown" in `a` replaced by the same words from the brighter, slower `b`.
pub const REPLACE_SCRIPT: &str =
    r#"{"destination":"a","ops":[{"op":"replace","target":[1,3],"source_recording":"b","source":[3,5]}]}"#;

pub fn recordings() -> Vec<(&'static str, Recording)> {
    let mut a = UtteranceSpec::new(DEST_TEXT, &demo_lexicon);
    a.noise_seed = 1;
    let mut b = UtteranceSpec::new(DONOR_TEXT, &demo_lexicon);
    b.f0_start *= 1.26;
    b.f0_end *= 1.26;
    b.tempo = 1.3;
    b.noise_seed = 2;
    [("a", a), ("b", b)]
        .into_iter()
        .map(|(id, spec)| {
            let u = render_utterance(&spec);
            (
                id,
                Recording {
                    waveform: u.waveform,
                    transcript: u.transcript,
                },
            )
        })
        .collect()
}

/// WAV bytes and alignment JSON for each recording.
pub fn files() -> Vec<(&'static str, Vec<u8>, String)> {
    recordings()
        .into_iter()
        .map(|(id, r)| (id, encode_wav(&r.waveform).unwrap(), r.transcript.to_json()))
        .collect()
}
