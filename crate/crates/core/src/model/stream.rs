//! Realized arrival streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::instance::{Color, PureInstance};
use crate::error::{BsecError, Result};

/// What a policy sees for one arrival. `id` is the element's index in the
/// instance; it is an opaque label and carries no color information.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arrival {
    pub time: f64,
    pub id: usize,
    pub value: f64,
    pub size: f64,
}

/// One trial's arrival sequence. Colors are stored next to the arrivals but
/// policies only ever receive `&Arrival`.
#[derive(Clone, Debug)]
pub struct RealizedStream {
    arrivals: Vec<Arrival>,
    colors: Vec<Color>,
    grid_collision: bool,
    resamples: u32,
}

/// Φ(t) = ⌊n³·t⌋ / n³.
pub fn discretize_time(t: f64, n: usize) -> f64 {
    let grid = (n as f64).powi(3);
    (grid * t).floor() / grid
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RealizeOptions {
    pub discretize: bool,
}

impl RealizedStream {
    /// Builds a stream from explicit arrivals (sorted here) and colors
    /// indexed by element id.
    pub fn from_parts(mut arrivals: Vec<Arrival>, colors: Vec<Color>) -> Result<Self> {
        arrivals.sort_by(|a, b| a.time.total_cmp(&b.time));
        if arrivals.iter().any(|a| a.id >= colors.len()) {
            return Err(BsecError::InvalidInstance("arrival id without a color".into()));
        }
        Ok(RealizedStream { arrivals, colors, grid_collision: false, resamples: 0 })
    }

    pub fn arrivals(&self) -> &[Arrival] {
        &self.arrivals
    }

    pub fn len(&self) -> usize {
        self.arrivals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrivals.is_empty()
    }

    /// Evaluator-side access to the hidden coloring.
    pub fn hidden_color(&self, id: usize) -> Color {
        self.colors[id]
    }

    /// Same arrivals under a different hidden coloring.
    pub fn recolored(&self, colors: Vec<Color>) -> Self {
        RealizedStream { colors, ..self.clone() }
    }

    /// A green shared its grid time with another element (a loss).
    pub fn grid_collision(&self) -> bool {
        self.grid_collision
    }

    /// Number of times green times had to be redrawn after an exact tie.
    pub fn resamples(&self) -> u32 {
        self.resamples
    }
}

pub fn realize_stream(inst: &PureInstance, rng_seed: u64) -> Result<RealizedStream> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    realize_stream_with(inst, &mut rng, RealizeOptions::default())
}

pub fn realize_stream_with<R: Rng + ?Sized>(
    inst: &PureInstance,
    rng: &mut R,
    opts: RealizeOptions,
) -> Result<RealizedStream> {
    let n = inst.n();
    let greens: Vec<usize> = inst.greens().collect();
    if greens.is_empty() {
        return Err(BsecError::InvalidInstance("no green elements".into()));
    }
    let colors: Vec<Color> = inst.elements().iter().map(|e| e.color).collect();
    let mut resamples = 0u32;
    loop {
        // (grid time, raw time, red tie rank, arrival)
        let mut keyed: Vec<(f64, f64, usize, Arrival)> = Vec::with_capacity(n);
        for i in inst.reds() {
            let t = inst.red_time(i).expect("validated red time");
            keyed.push((t, t, inst.red_rank(i), arrival(inst, i, t)));
        }
        for &g in &greens {
            let t: f64 = rng.gen();
            keyed.push((t, t, 0, arrival(inst, g, t)));
        }
        let mut exact_tie = false;
        keyed.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.2.cmp(&b.2)));
        for w in keyed.windows(2) {
            if w[0].1 == w[1].1 && (colors[w[0].3.id] == Color::Green || colors[w[1].3.id] == Color::Green) {
                exact_tie = true;
            }
        }
        if exact_tie {
            resamples += 1;
            log::debug!("green arrival tie, redrawing (attempt {resamples})");
            continue;
        }
        let mut grid_collision = false;
        if opts.discretize {
            for k in keyed.iter_mut() {
                k.0 = discretize_time(k.1, n);
                k.3.time = k.0;
            }
            keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
            for w in keyed.windows(2) {
                if w[0].0 == w[1].0
                    && (colors[w[0].3.id] == Color::Green || colors[w[1].3.id] == Color::Green)
                {
                    grid_collision = true;
                }
            }
        }
        return Ok(RealizedStream {
            arrivals: keyed.into_iter().map(|k| k.3).collect(),
            colors,
            grid_collision,
            resamples,
        });
    }
}

fn arrival(inst: &PureInstance, i: usize, t: f64) -> Arrival {
    let e = inst.element(i);
    Arrival { time: t, id: i, value: e.value, size: e.size }
}
