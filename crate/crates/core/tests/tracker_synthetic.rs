mod common;

use common::{square_centre, square_sequence, SQUARE_SIDE};
use motion_lsmd::ingest::FrameSequence;
use motion_lsmd::tracker::{propose_particles, track_sequence, MotionModelParams, TrackerConfig};
use motion_lsmd::AffineState;

fn square_config(seed: u64) -> TrackerConfig {
    TrackerConfig {
        n_particles: 300,
        seed,
        ..TrackerConfig::default()
    }
}

fn init_state() -> AffineState {
    let (x, y) = square_centre(0);
    AffineState::centered(x, y, SQUARE_SIDE as f64 / 32.0)
}

#[test]
fn translating_square_is_followed() {
    let seq = FrameSequence::from_pixels("square", square_sequence()).unwrap();
    let track = track_sequence(&seq, &init_state(), &square_config(11)).unwrap();
    assert_eq!(track.len(), seq.len() - 1);
    let errors: Vec<f64> = track
        .iter()
        .map(|r| {
            let (x, y) = square_centre(r.frame);
            ((r.state.lx - x).powi(2) + (r.state.ly - y).powi(2)).sqrt()
        })
        .collect();
    let mean = errors.iter().sum::<f64>() / errors.len() as f64;
    assert!(mean <= 3.0, "mean centre error {mean}");
}

#[test]
fn zero_noise_motion_is_constant() {
    let prev = AffineState::new(10.0, 20.0, 0.1, 0.7, 1.1, 0.05);
    let set = propose_particles(&prev, &MotionModelParams::still(), 50, 3);
    assert!(set.states.iter().all(|s| *s == prev));
    assert!(set.motion_priors.windows(2).all(|w| w[0] == w[1]));

    // a still tracker on a static scene never moves
    let frames = vec![square_sequence()[0].clone(); 6];
    let seq = FrameSequence::from_pixels("still", frames).unwrap();
    let config = TrackerConfig {
        motion: MotionModelParams::still(),
        ..square_config(0)
    };
    let track = track_sequence(&seq, &init_state(), &config).unwrap();
    assert!(track.iter().all(|r| r.state == init_state()));
}

#[test]
fn tracking_is_reproducible() {
    let frames: Vec<_> = square_sequence().into_iter().take(8).collect();
    let seq = FrameSequence::from_pixels("square", frames).unwrap();
    let a = track_sequence(&seq, &init_state(), &square_config(5)).unwrap();
    let b = track_sequence(&seq, &init_state(), &square_config(5)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn init_outside_frame_is_rejected() {
    let seq = FrameSequence::from_pixels("square", square_sequence().into_iter().take(3).collect()).unwrap();
    let outside = AffineState::centered(-50.0, 10.0, 0.5);
    assert!(track_sequence(&seq, &outside, &square_config(0)).is_err());
}
