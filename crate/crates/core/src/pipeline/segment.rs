//! Audio segmentation planning: pack whole utterances into chunks of at
//! least a minimum duration, never splitting an utterance.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SegmentError {
    #[error("utterances must be sorted and non-overlapping: {0}")]
    Unsorted(String),
    #[error("utterance {id:?} has start {start} >= end {end}")]
    BadSpan { id: String, start: f64, end: f64 },
}

/// A spoken span to keep intact when cutting audio.
#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceSpan {
    pub id: String,
    pub start: f64,
    pub end: f64,
}

/// One planned chunk: a time range and the utterances inside it.
#[derive(Debug, Clone, PartialEq)]
pub struct Chunk {
    pub start: f64,
    pub end: f64,
    pub utterance_ids: Vec<String>,
}

/// An ordered, non-overlapping chunking of a recording.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SegmentPlan {
    pub chunks: Vec<Chunk>,
}

/// Greedily pack utterances into chunks spanning at least `min_duration`
/// seconds.
///
/// A chunk accumulates whole utterances until the span from its first
/// utterance's start to the last one's end reaches `min_duration`, then
/// closes; the final chunk may be shorter. Interior chunk boundaries sit at
/// the midpoint of the silence between adjacent utterances, so no utterance
/// is ever split.
pub fn plan_segments(
    utterances: &[UtteranceSpan],
    min_duration: f64,
) -> Result<SegmentPlan, SegmentError> {
    for u in utterances {
        if u.start >= u.end {
            return Err(SegmentError::BadSpan {
                id: u.id.clone(),
                start: u.start,
                end: u.end,
            });
        }
    }
    for pair in utterances.windows(2) {
        if pair[1].start < pair[0].end {
            return Err(SegmentError::Unsorted(format!(
                "{:?} [{} .. {}] then {:?} [{} .. {}]",
                pair[0].id, pair[0].start, pair[0].end, pair[1].id, pair[1].start, pair[1].end
            )));
        }
    }

    // group indices: close a group once its utterance span reaches min_duration
    let mut groups: Vec<(usize, usize)> = Vec::new(); // inclusive index ranges
    let mut group_start: Option<usize> = None;
    for (i, u) in utterances.iter().enumerate() {
        let first = *group_start.get_or_insert(i);
        if u.end - utterances[first].start >= min_duration {
            groups.push((first, i));
            group_start = None;
        }
    }
    if let Some(first) = group_start {
        groups.push((first, utterances.len() - 1));
    }

    // chunk boundaries: first utterance start / last utterance end at the
    // edges, gap midpoints between groups
    let mut chunks = Vec::with_capacity(groups.len());
    for (k, (first, last)) in groups.iter().enumerate() {
        let start = if k == 0 {
            utterances[*first].start
        } else {
            let prev_last = groups[k - 1].1;
            (utterances[prev_last].end + utterances[*first].start) / 2.0
        };
        let end = if k + 1 == groups.len() {
            utterances[*last].end
        } else {
            let next_first = groups[k + 1].0;
            (utterances[*last].end + utterances[next_first].start) / 2.0
        };
        chunks.push(Chunk {
            start,
            end,
            utterance_ids: utterances[*first..=*last]
                .iter()
                .map(|u| u.id.clone())
                .collect(),
        });
    }
    Ok(SegmentPlan { chunks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spans(list: &[(f64, f64)]) -> Vec<UtteranceSpan> {
        list.iter()
            .enumerate()
            .map(|(i, (s, e))| UtteranceSpan {
                id: format!("u{i}"),
                start: *s,
                end: *e,
            })
            .collect()
    }

    #[test]
    fn ten_second_utterances_pack_in_threes() {
        let utts = spans(&[
            (0.0, 10.0),
            (10.0, 20.0),
            (20.0, 30.0),
            (30.0, 40.0),
            (40.0, 50.0),
            (50.0, 60.0),
            (60.0, 70.0),
        ]);
        let plan = plan_segments(&utts, 30.0).unwrap();
        assert_eq!(plan.chunks.len(), 3);
        assert_eq!(plan.chunks[0].utterance_ids, vec!["u0", "u1", "u2"]);
        assert_eq!(plan.chunks[1].utterance_ids, vec!["u3", "u4", "u5"]);
        assert_eq!(plan.chunks[2].utterance_ids, vec!["u6"]);
        assert_eq!(plan.chunks[0].start, 0.0);
        assert_eq!(plan.chunks[0].end, 30.0);
        // last chunk may be shorter than the minimum
        assert!(plan.chunks[2].end - plan.chunks[2].start < 30.0);
    }

    #[test]
    fn single_long_utterance_is_one_chunk() {
        let utts = spans(&[(0.0, 45.0)]);
        let plan = plan_segments(&utts, 30.0).unwrap();
        assert_eq!(plan.chunks.len(), 1);
        assert_eq!(plan.chunks[0].start, 0.0);
        assert_eq!(plan.chunks[0].end, 45.0);
    }

    #[test]
    fn utterance_exactly_at_minimum_closes_chunk() {
        let utts = spans(&[(0.0, 30.0), (31.0, 40.0)]);
        let plan = plan_segments(&utts, 30.0).unwrap();
        assert_eq!(plan.chunks.len(), 2);
        assert_eq!(plan.chunks[0].utterance_ids, vec!["u0"]);
        // boundary at the gap midpoint
        assert_eq!(plan.chunks[0].end, 30.5);
        assert_eq!(plan.chunks[1].start, 30.5);
    }

    #[test]
    fn empty_input_is_empty_plan() {
        let plan = plan_segments(&[], 30.0).unwrap();
        assert!(plan.chunks.is_empty());
    }

    #[test]
    fn rejects_overlap_and_bad_spans() {
        let overlapping = spans(&[(0.0, 10.0), (9.0, 20.0)]);
        assert!(matches!(
            plan_segments(&overlapping, 30.0),
            Err(SegmentError::Unsorted(_))
        ));
        let inverted = spans(&[(5.0, 5.0)]);
        assert!(matches!(
            plan_segments(&inverted, 30.0),
            Err(SegmentError::BadSpan { .. })
        ));
    }

    #[test]
    fn chunks_ordered_and_min_duration_except_last() {
        let utts = spans(&[
            (0.0, 12.0),
            (13.0, 21.0),
            (22.0, 33.0),
            (35.0, 47.0),
            (48.0, 60.0),
            (61.0, 66.0),
        ]);
        let plan = plan_segments(&utts, 30.0).unwrap();
        for pair in plan.chunks.windows(2) {
            assert!(pair[0].end <= pair[1].start + 1e-12);
        }
        for (i, chunk) in plan.chunks.iter().enumerate() {
            if i + 1 < plan.chunks.len() {
                assert!(chunk.end - chunk.start >= 30.0);
            }
        }
    }
}
