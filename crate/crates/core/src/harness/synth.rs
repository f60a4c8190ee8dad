//! Seeded synthetic viewport traces with object trajectories.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{EquirectPoint, FrameDims};
use crate::predictor::ObjectCoords;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// The viewport follows object 0 at a slowly drifting offset.
    ObjectFollower,
    /// Smooth random head motion unrelated to any object.
    Wanderer,
    /// The viewport and object 0 travel across the `x = 0` seam.
    SeamCrosser,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::ObjectFollower => "object_follower",
            Scenario::Wanderer => "wanderer",
            Scenario::SeamCrosser => "seam_crosser",
        }
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Scenario::ObjectFollower, Scenario::Wanderer, Scenario::SeamCrosser]
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown scenario `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub scenario: Scenario,
    pub dims: FrameDims,
    pub fps: usize,
    pub duration_seconds: f64,
    pub seed: u64,
    /// Std-dev of the followed viewport's offset from the object, pixels.
    pub noise_px: f64,
    /// Correlation time of that offset, seconds; 0 gives white noise.
    pub noise_tau: f64,
    /// Objects besides the followed one.
    pub distractors: usize,
    /// Typical speed of the followed object or wandering head, frame widths per second.
    pub speed: f64,
    /// Typical distractor speed, frame widths per second.
    pub distractor_speed: f64,
    /// Range of distractor lifetimes, seconds; a new ID replaces each one.
    pub distractor_lifetime: (f64, f64),
}

impl SynthSpec {
    pub fn new(scenario: Scenario, seed: u64) -> Self {
        Self {
            scenario,
            dims: FrameDims { width: 3840, height: 1920 },
            fps: 30,
            duration_seconds: 60.0,
            seed,
            noise_px: 250.0,
            noise_tau: 2.0,
            distractors: 3,
            speed: match scenario {
                Scenario::Wanderer => 0.05,
                _ => 0.3,
            },
            distractor_speed: 0.15,
            distractor_lifetime: (3.0, 8.0),
        }
    }

    pub fn frames(&self) -> usize {
        (self.duration_seconds * self.fps as f64).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub viewports: Vec<EquirectPoint>,
    /// Object positions per frame.
    pub objects: Vec<ObjectCoords>,
}

/// Point with mean-reverting (Ornstein-Uhlenbeck) velocity.
struct Mover {
    pos: EquirectPoint,
    vel: (f64, f64),
    speed: f64,
    /// Velocity correlation time, seconds.
    tau: f64,
    /// Allowed `x` band; `None` wraps around the seam.
    x_band: Option<(f64, f64)>,
    y_band: (f64, f64),
}

impl Mover {
    fn step(&mut self, rng: &mut ChaCha8Rng, dt: f64, width: f64) {
        let n = Normal::new(0.0, 1.0).expect("unit normal");
        let keep = (-dt / self.tau).exp();
        let kick = self.speed * (1.0 - keep * keep).sqrt();
        self.vel.0 = keep * self.vel.0 + kick * n.sample(rng);
        self.vel.1 = keep * self.vel.1 + 0.5 * kick * n.sample(rng);
        let mut x = self.pos.x + self.vel.0 * dt;
        let mut y = self.pos.y + self.vel.1 * dt;
        match self.x_band {
            Some((lo, hi)) => reflect(&mut x, &mut self.vel.0, lo, hi),
            None => x = x.rem_euclid(width),
        }
        let (lo, hi) = self.y_band;
        reflect(&mut y, &mut self.vel.1, lo, hi);
        self.pos = EquirectPoint::new(x, y);
    }
}

struct Distractor {
    id: u32,
    /// First frame this object is gone.
    dies: usize,
    mover: Mover,
}

fn reflect(v: &mut f64, vel: &mut f64, lo: f64, hi: f64) {
    if *v < lo {
        *v = 2.0 * lo - *v;
        *vel = vel.abs();
    } else if *v > hi {
        *v = 2.0 * hi - *v;
        *vel = -vel.abs();
    }
    *v = v.clamp(lo, hi);
}

pub fn generate_synthetic(spec: &SynthSpec) -> Result<SyntheticData> {
    if spec.fps == 0 || !(spec.duration_seconds > 0.0) {
        return Err(Error::InvalidConfig("synthetic trace needs fps >= 1 and a positive duration".into()));
    }
    let d = FrameDims::new(spec.dims.width, spec.dims.height)?;
    let (w, h) = (d.w(), d.h());
    let n = spec.frames();
    let dt = 1.0 / spec.fps as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // each distractor slot hosts a sequence of short-lived objects, as a
    // tracker re-identifies objects that leave and re-enter the view
    let (life_lo, life_hi) = spec.distractor_lifetime;
    let lifetime = |rng: &mut ChaCha8Rng| (rng.gen_range(life_lo..=life_hi) * spec.fps as f64).round().max(1.0) as usize;
    let spawn = |rng: &mut ChaCha8Rng, id: u32, dies: usize| Distractor {
        id,
        dies,
        mover: Mover {
            pos: EquirectPoint::new(rng.gen_range(0.05 * w..0.95 * w), rng.gen_range(0.25 * h..0.75 * h)),
            vel: (0.0, 0.0),
            speed: spec.distractor_speed * w,
            tau: 1.0,
            x_band: Some((0.05 * w, 0.95 * w)),
            y_band: (0.15 * h, 0.85 * h),
        },
    };
    let mut next_id = 1u32;
    let mut distractors: Vec<Distractor> = Vec::with_capacity(spec.distractors);
    for _ in 0..spec.distractors {
        // stagger the first deaths
        let first = (lifetime(&mut rng) as f64 * rng.gen_range(0.3..1.0)) as usize;
        distractors.push(spawn(&mut rng, next_id, first.max(1)));
        next_id += 1;
    }

    let mut lead = match spec.scenario {
        Scenario::ObjectFollower => Mover {
            pos: EquirectPoint::new(rng.gen_range(0.3 * w..0.7 * w), rng.gen_range(0.4 * h..0.6 * h)),
            vel: (0.0, 0.0),
            speed: spec.speed * w,
            tau: 1.0,
            x_band: Some((0.1 * w, 0.9 * w)),
            y_band: (0.3 * h, 0.7 * h),
        },
        Scenario::Wanderer => Mover {
            pos: EquirectPoint::new(rng.gen_range(0.0..w), rng.gen_range(0.4 * h..0.6 * h)),
            vel: (0.0, 0.0),
            speed: spec.speed * w,
            tau: 1.0,
            x_band: None,
            y_band: (0.25 * h, 0.75 * h),
        },
        Scenario::SeamCrosser => Mover {
            pos: EquirectPoint::new(0.05 * w, 0.5 * h),
            vel: (0.0, 0.0),
            speed: 0.0,
            tau: 1.0,
            x_band: None,
            y_band: (0.3 * h, 0.7 * h),
        },
    };
    // separate stream so the noise level does not change the motion
    let mut noise_rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x6E6F_6973_6500_0000);
    let noise = Normal::new(0.0, spec.noise_px.max(0.0)).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let keep = if spec.noise_tau > 0.0 { (-dt / spec.noise_tau).exp() } else { 0.0 };
    let mut offset = (noise.sample(&mut noise_rng), noise.sample(&mut noise_rng));

    let mut viewports = Vec::with_capacity(n);
    let mut objects = Vec::with_capacity(n);
    for f in 0..n {
        let mut frame_objs = ObjectCoords::new();
        let vp = match spec.scenario {
            Scenario::ObjectFollower => {
                frame_objs.insert(0, lead.pos);
                let p = if noise.std_dev() == 0.0 {
                    lead.pos
                } else {
                    d.normalize(EquirectPoint::new(lead.pos.x + offset.0, lead.pos.y + offset.1))
                };
                let kick = (1.0 - keep * keep).sqrt();
                offset.0 = keep * offset.0 + kick * noise.sample(&mut noise_rng);
                offset.1 = keep * offset.1 + kick * noise.sample(&mut noise_rng);
                p
            }
            Scenario::Wanderer => lead.pos,
            Scenario::SeamCrosser => {
                frame_objs.insert(0, lead.pos);
                lead.pos
            }
        };
        for dis in distractors.iter_mut() {
            if f >= dis.dies {
                let life = lifetime(&mut rng);
                *dis = spawn(&mut rng, next_id, f + life);
                next_id += 1;
            }
            frame_objs.insert(dis.id, dis.mover.pos);
        }
        viewports.push(vp);
        objects.push(frame_objs);

        match spec.scenario {
            Scenario::SeamCrosser => {
                // a quarter turn per second leftwards, gentle vertical sway
                let t = (f + 1) as f64 * dt;
                let x = (0.05 * w - 0.25 * w * t).rem_euclid(w);
                let y = 0.5 * h + 0.1 * h * (t * 0.8).sin();
                lead.pos = EquirectPoint::new(if x >= w { 0.0 } else { x }, y);
            }
            _ => lead.step(&mut rng, dt, w),
        }
        for dis in distractors.iter_mut() {
            dis.mover.step(&mut rng, dt, w);
        }
    }
    Ok(SyntheticData { viewports, objects })
}
