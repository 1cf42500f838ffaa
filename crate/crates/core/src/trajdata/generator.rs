//! Kinematic car-following generator standing in for recorded near-crashes.
//!
//! Both vehicles cruise with a slow, lagged speed oscillation. The leader
//! brakes at the event onset and settles at a lower speed; the follower keeps
//! its speed for its reaction time, then brakes until it matches the leader.
//! The initial gap is the driver's headway, widened when needed so that the
//! closest approach equals the episode's minimum gap.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{Episode, TrajectorySample, POST_EVENT_WINDOW};
use crate::error::{Error, Result};
use crate::rng;

const FOLLOW_LAG: f64 = 1.0;
const SUBSTEPS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub n_episodes: usize,
    /// Sampling period in seconds.
    pub sampling_period: f64,
    /// Length of every generated episode in seconds.
    pub episode_duration: f64,
    /// Range of the leader's braking onset time.
    pub event_onset: (f64, f64),
    /// Initial cruise speed range, m/s.
    pub cruise_speed: (f64, f64),
    /// Driver headway range, s.
    pub headway: (f64, f64),
    /// Amplitude range of the cruise speed oscillation, m/s.
    pub speed_fluctuation: (f64, f64),
    pub fluctuation_period: (f64, f64),
    /// Leader braking deceleration range, m/s².
    pub leader_decel: (f64, f64),
    /// Fraction of its speed the leader sheds; 1.0 brakes to a stop.
    pub speed_drop: (f64, f64),
    pub follower_decel: (f64, f64),
    /// Follower reaction time range; this is the event duration.
    pub reaction_time: (f64, f64),
    /// Closest-approach gap range, m.
    pub min_gap: (f64, f64),
    pub speed_noise_std: f64,
    pub range_noise_std: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n_episodes: 84,
            sampling_period: 0.1,
            episode_duration: 60.0,
            event_onset: (30.0, 35.0),
            cruise_speed: (12.0, 30.0),
            headway: (0.5, 2.0),
            speed_fluctuation: (0.0, 1.5),
            fluctuation_period: (15.0, 40.0),
            leader_decel: (1.5, 4.5),
            speed_drop: (0.25, 0.6),
            follower_decel: (3.0, 7.0),
            reaction_time: (5.5, 10.5),
            min_gap: (2.0, 8.0),
            speed_noise_std: 0.2,
            range_noise_std: 0.3,
        }
    }
}

fn check_range(name: &str, r: (f64, f64), min: f64) -> Result<()> {
    if !(r.0.is_finite() && r.1.is_finite()) || r.0 > r.1 || r.0 < min {
        return Err(Error::InvalidConfig(format!(
            "{name} range [{}, {}] invalid",
            r.0, r.1
        )));
    }
    Ok(())
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_episodes == 0 {
            return Err(Error::InvalidConfig("n_episodes must be positive".into()));
        }
        if !(self.sampling_period > 0.0 && self.sampling_period.is_finite()) {
            return Err(Error::InvalidConfig(
                "sampling_period must be positive".into(),
            ));
        }
        check_range("event_onset", self.event_onset, 0.0)?;
        check_range("cruise_speed", self.cruise_speed, 0.0)?;
        check_range("headway", self.headway, 0.0)?;
        check_range("speed_fluctuation", self.speed_fluctuation, 0.0)?;
        check_range(
            "fluctuation_period",
            self.fluctuation_period,
            f64::MIN_POSITIVE,
        )?;
        check_range("leader_decel", self.leader_decel, f64::MIN_POSITIVE)?;
        check_range("speed_drop", self.speed_drop, 0.0)?;
        check_range("follower_decel", self.follower_decel, f64::MIN_POSITIVE)?;
        check_range("reaction_time", self.reaction_time, self.sampling_period)?;
        check_range("min_gap", self.min_gap, 0.0)?;
        if self.speed_drop.1 > 1.0 {
            return Err(Error::InvalidConfig("speed_drop cannot exceed 1".into()));
        }
        if !(self.speed_noise_std >= 0.0 && self.range_noise_std >= 0.0) {
            return Err(Error::InvalidConfig(
                "noise std must be non-negative".into(),
            ));
        }
        if self.event_onset.1 + self.reaction_time.1 + POST_EVENT_WINDOW > self.episode_duration {
            return Err(Error::InvalidConfig(format!(
                "latest event onset {} s plus reaction time {} s and the {} s post-event window exceed the {} s episode",
                self.event_onset.1, self.reaction_time.1, POST_EVENT_WINDOW, self.episode_duration
            )));
        }
        Ok(())
    }
}

fn uniform<R: Rng>(rng: &mut R, r: (f64, f64)) -> f64 {
    r.0 + (r.1 - r.0) * rng.random::<f64>()
}

struct Scenario {
    v0: f64,
    amplitude: f64,
    omega: f64,
    phase: f64,
    t_brake: f64,
    leader_decel: f64,
    drop: f64,
    t_react: f64,
    follower_decel: f64,
}

impl Scenario {
    fn cruise(&self, t: f64) -> f64 {
        (self.v0 + self.amplitude * (self.omega * t + self.phase).sin()).max(0.0)
    }

    fn leader(&self, t: f64) -> f64 {
        if t < self.t_brake {
            return self.cruise(t);
        }
        let vb = self.cruise(self.t_brake);
        (vb - self.leader_decel * (t - self.t_brake))
            .max(vb * (1.0 - self.drop))
            .max(0.0)
    }

    fn follower(&self, t: f64) -> f64 {
        if t < self.t_react {
            return self.cruise(t - FOLLOW_LAG);
        }
        let ve = self.cruise(self.t_react - FOLLOW_LAG);
        (ve - self.follower_decel * (t - self.t_react))
            .max(self.leader(t))
            .max(0.0)
    }

    fn closing_rate(&self, t: f64) -> f64 {
        self.leader(t) - self.follower(t)
    }
}

fn generate_episode(cfg: &GeneratorConfig, seed: u64, index: usize) -> Result<Episode> {
    let mut rng = rng::stream(seed, index as u64);
    let dt = cfg.sampling_period;
    let n = (cfg.episode_duration / dt + 1e-9).floor() as usize + 1;

    let brake_idx = (uniform(&mut rng, cfg.event_onset) / dt).round() as usize;
    let react_steps = ((uniform(&mut rng, cfg.reaction_time) / dt).round() as usize).max(1);
    let react_idx = brake_idx + react_steps;
    if react_idx >= n {
        return Err(Error::InvalidConfig(
            "reaction time longer than episode".into(),
        ));
    }

    let sc = Scenario {
        v0: uniform(&mut rng, cfg.cruise_speed),
        amplitude: uniform(&mut rng, cfg.speed_fluctuation),
        omega: std::f64::consts::TAU / uniform(&mut rng, cfg.fluctuation_period),
        phase: std::f64::consts::TAU * rng.random::<f64>(),
        t_brake: brake_idx as f64 * dt,
        leader_decel: uniform(&mut rng, cfg.leader_decel),
        drop: uniform(&mut rng, cfg.speed_drop),
        t_react: react_idx as f64 * dt,
        follower_decel: uniform(&mut rng, cfg.follower_decel),
    };
    let headway = uniform(&mut rng, cfg.headway);
    let min_gap = uniform(&mut rng, cfg.min_gap);

    // displacement of the leader relative to the follower since t = 0
    let mut rel = Vec::with_capacity(n);
    rel.push(0.0);
    let h = dt / SUBSTEPS as f64;
    for i in 1..n {
        let t0 = (i - 1) as f64 * dt;
        let mut acc = 0.0;
        for k in 0..SUBSTEPS {
            let a = t0 + k as f64 * h;
            acc += 0.5 * h * (sc.closing_rate(a) + sc.closing_rate(a + h));
        }
        rel.push(rel[i - 1] + acc);
    }
    let lowest = rel.iter().copied().fold(f64::INFINITY, f64::min);
    let gap0 = (headway * sc.follower(0.0)).max(min_gap - lowest);

    let speed_noise =
        Normal::new(0.0, cfg.speed_noise_std).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let range_noise =
        Normal::new(0.0, cfg.range_noise_std).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 * dt;
            let v_f = (sc.follower(t) + speed_noise.sample(&mut rng)).max(0.0);
            let v_l = (sc.leader(t) + speed_noise.sample(&mut rng)).max(0.0);
            let gap = (gap0 + rel[i] + range_noise.sample(&mut rng)).max(0.0);
            TrajectorySample::new(t, v_f, v_l, gap)
        })
        .collect();

    Episode::new(
        format!("syn-{seed}-{index:05}"),
        samples,
        sc.t_brake,
        sc.t_react,
    )
}

/// Generates `cfg.n_episodes` car-following near-crash episodes.
///
/// Each episode draws from its own random stream derived from
/// `(seed, episode index)`.
pub fn generate_synthetic_dataset(cfg: &GeneratorConfig, seed: u64) -> Result<Vec<Episode>> {
    cfg.validate()?;
    (0..cfg.n_episodes)
        .map(|i| generate_episode(cfg, seed, i))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajdata::{label_episode, write_episode_csv, ClassLabel};

    #[test]
    fn same_seed_is_byte_identical() {
        let cfg = GeneratorConfig {
            n_episodes: 5,
            ..Default::default()
        };
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_episode_csv(&generate_synthetic_dataset(&cfg, 7).unwrap(), &mut a).unwrap();
        write_episode_csv(&generate_synthetic_dataset(&cfg, 7).unwrap(), &mut b).unwrap();
        assert_eq!(a, b);
        let mut c = Vec::new();
        write_episode_csv(&generate_synthetic_dataset(&cfg, 8).unwrap(), &mut c).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn noiseless_full_stop_closes_during_event() {
        let cfg = GeneratorConfig {
            n_episodes: 20,
            speed_drop: (1.0, 1.0),
            speed_fluctuation: (0.0, 0.0),
            speed_noise_std: 0.0,
            range_noise_std: 0.0,
            ..Default::default()
        };
        for ep in generate_synthetic_dataset(&cfg, 3).unwrap() {
            let event: Vec<_> = ep
                .samples
                .iter()
                .filter(|s| s.t >= ep.event_start && s.t <= ep.event_end)
                .collect();
            assert!(event.len() > 2);
            for w in event.windows(2) {
                assert!(
                    w[1].delta_x < w[0].delta_x,
                    "{}: gap grew at t={}",
                    ep.episode_id,
                    w[1].t
                );
            }
            assert!(ep.samples.iter().all(|s| s.delta_x >= 0.0));
        }
    }

    #[test]
    fn default_class_ratio_is_about_five_to_one() {
        let cfg = GeneratorConfig {
            n_episodes: 500,
            ..Default::default()
        };
        let (mut safe, mut warn) = (0usize, 0usize);
        for ep in generate_synthetic_dataset(&cfg, 11).unwrap() {
            for (_, label) in label_episode(&ep) {
                match label {
                    ClassLabel::Safe => safe += 1,
                    ClassLabel::Warning => warn += 1,
                }
            }
        }
        let ratio = safe as f64 / warn as f64;
        assert!((4.0..=6.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn infeasible_config_is_rejected() {
        let cfg = GeneratorConfig {
            reaction_time: (5.0, 40.0),
            ..Default::default()
        };
        assert!(matches!(
            generate_synthetic_dataset(&cfg, 1),
            Err(Error::InvalidConfig(_))
        ));
        let cfg = GeneratorConfig {
            leader_decel: (3.0, 1.0),
            ..Default::default()
        };
        assert!(generate_synthetic_dataset(&cfg, 1).is_err());
    }
}
