//! Frame-to-frame identity association.
//!
//! Each detection is reduced to an anchor point. Anchors are matched to the
//! last anchor of every live track by greedy global-minimum assignment over the
//! distance matrix, gated by a maximum displacement.

use crate::geometry::Point2;
use crate::model::{KeypointLayout, Landmark, PersonTrack, Skeleton, TrackId};

use super::format::FrameObservation;

pub const DEFAULT_MAX_DISPLACEMENT_PX: f64 = 80.0;
pub const DEFAULT_GRACE_FRAMES: u64 = 15;

/// Neck position, or the centroid of the present analysis landmarks when the neck is missing.
pub fn anchor_point(s: &Skeleton, layout: KeypointLayout) -> Option<Point2> {
    if let Some(neck) = s.landmark(layout, Landmark::Neck) {
        return Some(neck.point());
    }
    let (sx, sy, n) = Landmark::ANALYSIS
        .iter()
        .filter_map(|lm| s.landmark(layout, *lm))
        .fold((0.0, 0.0, 0usize), |(sx, sy, n), kp| (sx + kp.x, sy + kp.y, n + 1));
    (n > 0).then(|| Point2::new(sx / n as f64, sy / n as f64))
}

/// Row-major `rows x cols` matrix of Euclidean distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data
            .chunks(self.cols.max(1))
            .take(self.rows)
            .map(<[f64]>::to_vec)
            .collect()
    }
}

pub fn build_distance_matrix(a: &[Point2], b: &[Point2]) -> DistanceMatrix {
    let data = a.iter().flat_map(|p| b.iter().map(move |q| p.distance(q))).collect();
    DistanceMatrix {
        rows: a.len(),
        cols: b.len(),
        data,
    }
}

/// Greedy matching: repeatedly take the smallest remaining entry `<= max_distance`.
///
/// Ties are broken by lower column (track) key, then lower row. Returns `(row, col)` pairs.
pub fn greedy_match(d: &DistanceMatrix, col_keys: &[TrackId], max_distance: f64) -> Vec<(usize, usize)> {
    let mut candidates: Vec<(f64, TrackId, usize, usize)> = (0..d.rows())
        .flat_map(|i| (0..d.cols()).map(move |j| (i, j)))
        .filter(|&(i, j)| d.get(i, j) <= max_distance)
        .map(|(i, j)| (d.get(i, j), col_keys[j], i, j))
        .collect();
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut row_used = vec![false; d.rows()];
    let mut col_used = vec![false; d.cols()];
    let mut pairs = Vec::new();
    for (_, _, i, j) in candidates {
        if row_used[i] || col_used[j] {
            continue;
        }
        row_used[i] = true;
        col_used[j] = true;
        pairs.push((i, j));
    }
    pairs
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerConfig {
    pub max_displacement_px: f64,
    /// Frames an unmatched track stays matchable before it is closed.
    pub grace_frames: u64,
    pub layout: KeypointLayout,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            max_displacement_px: DEFAULT_MAX_DISPLACEMENT_PX,
            grace_frames: DEFAULT_GRACE_FRAMES,
            layout: KeypointLayout::Paper,
        }
    }
}

#[derive(Debug)]
struct LiveTrack {
    track: PersonTrack,
    last_anchor: Point2,
    last_frame: u64,
}

/// Sequential fold of frame observations into identity-stable tracks.
#[derive(Debug)]
pub struct Tracker {
    config: TrackerConfig,
    live: Vec<LiveTrack>,
    closed: Vec<PersonTrack>,
    next_id: u32,
    last_frame: Option<u64>,
}

impl Tracker {
    pub fn new(config: TrackerConfig) -> Self {
        assert!(config.max_displacement_px > 0.0, "max_displacement_px must be positive");
        Self {
            config,
            live: Vec::new(),
            closed: Vec::new(),
            next_id: 0,
            last_frame: None,
        }
    }

    /// Folds one frame in. Frames must arrive in increasing order.
    ///
    /// Detections without any anchor landmark cannot be placed and are dropped.
    pub fn update(&mut self, obs: FrameObservation) {
        if let Some(last) = self.last_frame {
            assert!(obs.frame > last, "frames must arrive in increasing order");
        }
        self.last_frame = Some(obs.frame);

        let grace = self.config.grace_frames;
        let (keep, expired): (Vec<_>, Vec<_>) = std::mem::take(&mut self.live)
            .into_iter()
            .partition(|t| obs.frame - t.last_frame <= grace + 1);
        self.live = keep;
        self.closed.extend(expired.into_iter().map(|t| t.track));

        let layout = self.config.layout;
        let detections: Vec<(Point2, Skeleton)> = obs
            .detections
            .into_iter()
            .filter_map(|s| anchor_point(&s, layout).map(|a| (a, s)))
            .collect();

        let anchors: Vec<Point2> = detections.iter().map(|(a, _)| *a).collect();
        let track_anchors: Vec<Point2> = self.live.iter().map(|t| t.last_anchor).collect();
        let ids: Vec<TrackId> = self.live.iter().map(|t| t.track.track_id).collect();
        let d = build_distance_matrix(&anchors, &track_anchors);
        let pairs = greedy_match(&d, &ids, self.config.max_displacement_px);

        let mut assigned: Vec<Option<usize>> = vec![None; detections.len()];
        for (i, j) in pairs {
            assigned[i] = Some(j);
        }
        for ((anchor, skeleton), target) in detections.into_iter().zip(assigned) {
            let frame = skeleton.frame;
            match target {
                Some(j) => {
                    let t = &mut self.live[j];
                    t.track.push(skeleton).expect("frames increase");
                    t.last_anchor = anchor;
                    t.last_frame = frame;
                }
                None => {
                    let mut track = PersonTrack::new(TrackId(self.next_id));
                    self.next_id += 1;
                    track.push(skeleton).expect("fresh track");
                    self.live.push(LiveTrack {
                        track,
                        last_anchor: anchor,
                        last_frame: frame,
                    });
                }
            }
        }
    }

    /// Number of tracks currently matchable.
    pub fn live_count(&self) -> usize {
        self.live.len()
    }

    /// Closes everything and returns all tracks ordered by id.
    pub fn finish(mut self) -> Vec<PersonTrack> {
        self.closed.extend(self.live.into_iter().map(|t| t.track));
        self.closed.sort_by_key(|t| t.track_id);
        self.closed
    }
}

/// Runs the tracker over frames in order.
pub fn build_tracks(frames: impl IntoIterator<Item = FrameObservation>, config: TrackerConfig) -> Vec<PersonTrack> {
    let mut tracker = Tracker::new(config);
    for obs in frames {
        tracker.update(obs);
    }
    tracker.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_skeleton, Keypoint2D, Side, NUM_KEYPOINTS};

    fn at(x: f64, y: f64, frame: u64) -> Skeleton {
        let mut raw = vec![None; NUM_KEYPOINTS];
        raw[1] = Some(Keypoint2D::new(x, y, 0.9));
        validate_skeleton(&raw, frame, frame as f64 * 40.0, 0.1).unwrap()
    }

    fn obs(frame: u64, points: &[(f64, f64)]) -> FrameObservation {
        FrameObservation {
            frame,
            timestamp_ms: frame as f64 * 40.0,
            detections: points.iter().map(|(x, y)| at(*x, *y, frame)).collect(),
        }
    }

    fn cfg() -> TrackerConfig {
        TrackerConfig {
            max_displacement_px: 50.0,
            ..Default::default()
        }
    }

    #[test]
    fn anchor_examples() {
        let layout = KeypointLayout::Paper;
        assert_eq!(
            anchor_point(&at(100.0, 50.0, 0), layout),
            Some(Point2::new(100.0, 50.0))
        );

        let mut raw = vec![None; NUM_KEYPOINTS];
        raw[layout.slot(Landmark::Shoulder(Side::Left)).index()] = Some(Keypoint2D::new(90.0, 60.0, 0.9));
        raw[layout.slot(Landmark::Shoulder(Side::Right)).index()] = Some(Keypoint2D::new(110.0, 60.0, 0.9));
        let s = validate_skeleton(&raw, 0, 0.0, 0.1).unwrap();
        assert_eq!(anchor_point(&s, layout), Some(Point2::new(100.0, 60.0)));

        let mut raw = vec![None; NUM_KEYPOINTS];
        raw[0] = Some(Keypoint2D::new(1.0, 1.0, 0.9));
        let s = validate_skeleton(&raw, 0, 0.0, 0.1).unwrap();
        assert_eq!(anchor_point(&s, layout), None);
    }

    #[test]
    fn distance_matrix_examples() {
        let p = |x, y| Point2::new(x, y);
        assert_eq!(
            build_distance_matrix(&[p(0.0, 0.0)], &[p(3.0, 4.0)]).to_rows(),
            vec![vec![5.0]]
        );
        assert_eq!(
            build_distance_matrix(&[p(1.0, 1.0)], &[p(1.0, 1.0)]).to_rows(),
            vec![vec![0.0]]
        );
        assert_eq!(
            build_distance_matrix(&[p(0.0, 0.0), p(1.0, 0.0)], &[p(0.0, 0.0)]).to_rows(),
            vec![vec![0.0], vec![1.0]]
        );
        let empty = build_distance_matrix(&[], &[p(1.0, 1.0)]);
        assert_eq!((empty.rows(), empty.cols()), (0, 1));
    }

    #[test]
    fn nearby_detection_extends_track() {
        let tracks = build_tracks([obs(0, &[(100.0, 100.0)]), obs(1, &[(102.0, 101.0)])], cfg());
        assert_eq!(tracks.len(), 1);
        assert_eq!(tracks[0].skeletons.len(), 2);
    }

    #[test]
    fn far_detection_opens_track() {
        let tracks = build_tracks([obs(0, &[(100.0, 100.0)]), obs(1, &[(400.0, 400.0)])], cfg());
        assert_eq!(tracks.len(), 2);
        assert_eq!(tracks[1].first_frame(), Some(1));
    }

    #[test]
    fn two_tracks_swap_order() {
        let tracks = build_tracks(
            [
                obs(0, &[(100.0, 100.0), (300.0, 100.0)]),
                obs(1, &[(305.0, 98.0), (97.0, 103.0)]),
            ],
            cfg(),
        );
        assert_eq!(tracks.len(), 2);
        assert_eq!(tracks[0].skeletons[1].keypoints()[1].unwrap().x, 97.0);
        assert_eq!(tracks[1].skeletons[1].keypoints()[1].unwrap().x, 305.0);
    }

    #[test]
    fn dormant_track_resumes_within_grace() {
        let mut frames = vec![obs(0, &[(100.0, 100.0)])];
        frames.push(obs(16, &[(101.0, 100.0)]));
        let tracks = build_tracks(frames, cfg());
        assert_eq!(tracks.len(), 1, "absent for 15 frames is still within grace");

        let frames = vec![obs(0, &[(100.0, 100.0)]), obs(17, &[(101.0, 100.0)])];
        let tracks = build_tracks(frames, cfg());
        assert_eq!(tracks.len(), 2);
    }

    #[test]
    fn ties_go_to_lowest_track_id() {
        // Both tracks are 10 px from the single detection.
        let tracks = build_tracks([obs(0, &[(90.0, 0.0), (110.0, 0.0)]), obs(1, &[(100.0, 0.0)])], cfg());
        assert_eq!(tracks[0].skeletons.len(), 2);
        assert_eq!(tracks[1].skeletons.len(), 1);
    }

    #[test]
    fn anchorless_detection_is_dropped() {
        let mut o = obs(0, &[(10.0, 10.0)]);
        o.detections
            .push(validate_skeleton(&vec![None; NUM_KEYPOINTS], 0, 0.0, 0.1).unwrap());
        let tracks = build_tracks([o], cfg());
        assert_eq!(tracks.len(), 1);
    }
}
