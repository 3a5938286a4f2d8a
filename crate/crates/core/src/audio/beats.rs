use crate::audio::AudioFeatureFrame;

/// Minimum spacing between detected beats, seconds.
pub const MIN_BEAT_GAP: f64 = 0.25;

/// Times of salient peaks in `values`.
///
/// An interior sample is a candidate when it exceeds its left neighbour, is at
/// least its right neighbour, and exceeds the mean plus one standard
/// deviation. Candidates are accepted strongest first, skipping any within
/// `min_gap` seconds of an accepted one. Fewer than three samples yield none.
pub fn pick_peaks(values: &[f64], times: &[f64], min_gap: f64) -> Vec<f64> {
    assert_eq!(values.len(), times.len());
    let n = values.len();
    if n < 3 {
        return Vec::new();
    }
    let o = values;
    let mean = o.iter().sum::<f64>() / n as f64;
    let std = (o.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let threshold = mean + std;
    let mut candidates: Vec<usize> = (1..n - 1)
        .filter(|&t| o[t] > o[t - 1] && o[t] >= o[t + 1] && o[t] > threshold)
        .collect();
    candidates.sort_by(|&a, &b| o[b].total_cmp(&o[a]).then(a.cmp(&b)));
    let mut beats: Vec<f64> = Vec::new();
    for t in candidates {
        let time = times[t];
        if beats.iter().all(|b| (b - time).abs() >= min_gap) {
            beats.push(time);
        }
    }
    beats.sort_by(f64::total_cmp);
    beats
}

/// Beat times from onset-strength peaks (see [`pick_peaks`]).
pub fn detect_beats_with_gap(frames: &[AudioFeatureFrame], min_gap: f64) -> Vec<f64> {
    let o: Vec<f64> = frames.iter().map(|f| f.onset_strength).collect();
    let t: Vec<f64> = frames.iter().map(|f| f.frame_time).collect();
    pick_peaks(&o, &t, min_gap)
}

pub fn detect_beats(frames: &[AudioFeatureFrame]) -> Vec<f64> {
    detect_beats_with_gap(frames, MIN_BEAT_GAP)
}

/// One beat time per line, seconds.
pub fn format_beats(beats: &[f64]) -> String {
    beats.iter().map(|b| format!("{b}\n")).collect()
}
