#![allow(dead_code)]

use ddpg_racer::nn::{Activation, Matrix, Mlp, MlpGradients};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-5;
pub const REL_TOL: f64 = 1e-4;
pub const ABS_TOL: f64 = 1e-7;

/// Relative error with an absolute floor: components that agree to within
/// `ABS_TOL` count as exact.
pub fn grad_error(analytic: f64, numeric: f64) -> f64 {
    let d = (analytic - numeric).abs();
    if d <= ABS_TOL {
        0.0
    } else {
        d / analytic.abs().max(numeric.abs())
    }
}

fn act(a: Activation, z: f64) -> f64 {
    match a {
        Activation::Relu => z.max(0.0),
        Activation::Tanh => z.tanh(),
        Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
        Activation::Linear => z,
    }
}

/// Plain loops over the stored weights; shares nothing with the library's
/// forward pass. Returns the output and every pre-activation.
pub fn reference_forward(net: &Mlp, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut h = x.to_vec();
    let mut pre = Vec::new();
    for l in net.layers() {
        let w = &l.weights;
        let mut out = Vec::with_capacity(w.rows());
        for r in 0..w.rows() {
            let mut z = l.biases[r];
            for c in 0..w.cols() {
                z += w.get(r, c) * h[c];
            }
            pre.push(z);
            out.push(act(l.activation, z));
        }
        h = out;
    }
    (h, pre)
}

/// `sum_r sum_j c[r][j] * net(x_r)[j]` evaluated with [`reference_forward`].
pub fn weighted_output(net: &Mlp, xs: &Matrix, c: &Matrix) -> f64 {
    (0..xs.rows())
        .map(|r| {
            let (y, _) = reference_forward(net, xs.row(r));
            y.iter().zip(c.row(r)).map(|(a, b)| a * b).sum::<f64>()
        })
        .sum()
}

pub const ACTIVATIONS: [Activation; 4] = [
    Activation::Relu,
    Activation::Tanh,
    Activation::Sigmoid,
    Activation::Linear,
];

/// A random network with 1 to `max_layers` layers and widths 1 to
/// `max_width`, a batch of inputs and an output weighting, all from `seed`.
/// Inputs are redrawn until no ReLU pre-activation sits within `margin` of
/// the kink, where finite differences are meaningless.
pub fn random_problem(
    seed: u64,
    max_layers: usize,
    max_width: usize,
    margin: f64,
) -> (Mlp, Matrix, Matrix) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let n_layers = rng.random_range(1..=max_layers);
        let sizes: Vec<usize> = (0..=n_layers)
            .map(|_| rng.random_range(1..=max_width))
            .collect();
        let acts: Vec<Activation> = (0..n_layers)
            .map(|_| ACTIVATIONS[rng.random_range(0..4)])
            .collect();
        let mut net = Mlp::init(&sizes, &acts, &mut rng).unwrap();
        for l in net.layers_mut() {
            for w in l.weights.as_mut_slice() {
                *w = rng.random_range(-1.0..1.0);
            }
            for b in &mut l.biases {
                *b = rng.random_range(-0.5..0.5);
            }
        }
        let batch = rng.random_range(1..=4);
        for _ in 0..20 {
            let xs = Matrix::from_vec(
                batch,
                sizes[0],
                (0..batch * sizes[0]).map(|_| rng.random_range(-2.0..2.0)).collect(),
            )
            .unwrap();
            let c = Matrix::from_vec(
                batch,
                sizes[n_layers],
                (0..batch * sizes[n_layers])
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect(),
            )
            .unwrap();
            if clear_of_kinks(&net, &xs, margin) {
                return (net, xs, c);
            }
        }
    }
}

pub fn clear_of_kinks(net: &Mlp, xs: &Matrix, margin: f64) -> bool {
    let relu: Vec<bool> = net
        .layers()
        .iter()
        .flat_map(|l| std::iter::repeat_n(l.activation == Activation::Relu, l.out_dim()))
        .collect();
    (0..xs.rows()).all(|r| {
        let (_, pre) = reference_forward(net, xs.row(r));
        pre.iter().zip(&relu).all(|(z, is_relu)| !is_relu || z.abs() > margin)
    })
}

/// Largest error between the analytic gradients of `weighted_output` and
/// central differences, over every parameter and every input component.
pub fn max_gradient_error(net: &Mlp, xs: &Matrix, c: &Matrix) -> f64 {
    gradient_errors(net, xs, c).0
}

/// [`grad_error`] maximum and the largest absolute difference.
pub fn gradient_errors(net: &Mlp, xs: &Matrix, c: &Matrix) -> (f64, f64) {
    let cache = net.forward_batch(xs).unwrap();
    let (grads, dx): (MlpGradients, Matrix) = net.backward_batch(&cache, c).unwrap();
    let analytic: Vec<f64> = grads.iter().collect();

    let mut worst = 0.0f64;
    let mut abs = 0.0f64;
    let mut probe = net.clone();
    let mut k = 0;
    let n_groups = probe.group_sizes().len();
    for g in 0..n_groups {
        let len = probe.group_sizes()[g];
        for i in 0..len {
            let orig = probe.param_groups_mut()[g][i];
            probe.param_groups_mut()[g][i] = orig + FD_STEP;
            let up = weighted_output(&probe, xs, c);
            probe.param_groups_mut()[g][i] = orig - FD_STEP;
            let down = weighted_output(&probe, xs, c);
            probe.param_groups_mut()[g][i] = orig;
            let numeric = (up - down) / (2.0 * FD_STEP);
            worst = worst.max(grad_error(analytic[k], numeric));
            abs = abs.max((analytic[k] - numeric).abs());
            k += 1;
        }
    }
    assert_eq!(k, analytic.len());

    let mut x = xs.clone();
    for r in 0..x.rows() {
        for j in 0..x.cols() {
            let orig = x.get(r, j);
            x.set(r, j, orig + FD_STEP);
            let up = weighted_output(net, &x, c);
            x.set(r, j, orig - FD_STEP);
            let down = weighted_output(net, &x, c);
            x.set(r, j, orig);
            let numeric = (up - down) / (2.0 * FD_STEP);
            worst = worst.max(grad_error(dx.get(r, j), numeric));
            abs = abs.max((dx.get(r, j) - numeric).abs());
        }
    }
    (worst, abs)
}

use ddpg_racer::ddpg::{ActionVector, Experience, ObservationVector, OBS_DIM};
use ddpg_racer::sim::{CarState, TrackDefinition, Vec2};

/// Plausible raw sensor values.
pub fn random_obs(rng: &mut impl Rng) -> ObservationVector {
    let mut v = [0.0; OBS_DIM];
    v[ObservationVector::ANGLE] = rng.random_range(-1.0..1.0);
    for x in &mut v[ObservationVector::TRACK..ObservationVector::TRACK + 19] {
        *x = rng.random_range(0.0..200.0);
    }
    v[ObservationVector::TRACK_POS] = rng.random_range(-1.0..1.0);
    v[ObservationVector::SPEED_X] = rng.random_range(0.0..300.0);
    v[ObservationVector::SPEED_Y] = rng.random_range(-30.0..30.0);
    for x in &mut v[ObservationVector::WHEEL_SPIN..ObservationVector::WHEEL_SPIN + 4] {
        *x = rng.random_range(0.0..280.0);
    }
    v[ObservationVector::RPM] = rng.random_range(0.0..1.0);
    ObservationVector(v)
}

pub fn random_batch(rng: &mut impl Rng, n: usize) -> Vec<Experience> {
    (0..n)
        .map(|_| {
            let a = ActionVector::new(
                rng.random_range(0.0..1.0),
                rng.random_range(0.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            Experience::new(
                random_obs(rng),
                a,
                rng.random_range(-10.0..10.0),
                random_obs(rng),
                rng.random_bool(0.2),
            )
            .unwrap()
        })
        .collect()
}


/// A pose strictly inside the track: a random centerline point shifted
/// sideways by up to `reach` half-widths, with a random heading.
pub fn random_pose(track: &TrackDefinition, rng: &mut impl Rng, reach: f64) -> CarState {
    let arc = rng.random_range(0.0..track.length());
    let (p, tangent) = track.point_at(arc);
    let offset = rng.random_range(-reach..reach) * track.half_width();
    let pos = p + Vec2::from_angle(tangent).perp() * offset;
    let heading = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    CarState::placed(track, pos, heading)
}

/// Range finder oracle: walks a ray in 1 mm steps and reports the first
/// sample that leaves the track, where "on the track" means inside exactly
/// one of the two boundary polygons.
///
/// Runs of samples are skipped only when the distance to every boundary
/// edge shows none of them can change side, so the result is the same as
/// testing every sample.
pub struct RayMarcher {
    polygons: [Vec<Vec2>; 2],
    edges: Vec<(Vec2, Vec2)>,
    origin: Vec2,
    cols: usize,
    rows: usize,
    cells: Vec<Vec<usize>>,
}

pub const MARCH_STEP: f64 = 1e-3;
const CELL: f64 = 2.0;

impl RayMarcher {
    pub fn new(track: &TrackDefinition) -> Self {
        let polygons = [track.left_boundary().to_vec(), track.right_boundary().to_vec()];
        let edges: Vec<(Vec2, Vec2)> = polygons
            .iter()
            .flat_map(|p| (0..p.len()).map(move |i| (p[i], p[(i + 1) % p.len()])))
            .collect();
        let pts = polygons.iter().flatten();
        let min_x = pts.clone().map(|p| p.x).fold(f64::INFINITY, f64::min) - CELL;
        let min_y = pts.clone().map(|p| p.y).fold(f64::INFINITY, f64::min) - CELL;
        let max_x = pts.clone().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max) + CELL;
        let max_y = pts.map(|p| p.y).fold(f64::NEG_INFINITY, f64::max) + CELL;
        let cols = ((max_x - min_x) / CELL).ceil() as usize + 1;
        let rows = ((max_y - min_y) / CELL).ceil() as usize + 1;
        let mut cells = vec![Vec::new(); cols * rows];
        let origin = Vec2::new(min_x, min_y);
        for (k, (a, b)) in edges.iter().enumerate() {
            let c0 = ((a.x.min(b.x) - min_x) / CELL) as usize;
            let c1 = ((a.x.max(b.x) - min_x) / CELL) as usize;
            let r0 = ((a.y.min(b.y) - min_y) / CELL) as usize;
            let r1 = ((a.y.max(b.y) - min_y) / CELL) as usize;
            for r in r0..=r1 {
                for c in c0..=c1 {
                    cells[r * cols + c].push(k);
                }
            }
        }
        Self {
            polygons,
            edges,
            origin,
            cols,
            rows,
            cells,
        }
    }

    fn inside_polygon(poly: &[Vec2], p: Vec2) -> bool {
        let mut inside = false;
        let n = poly.len();
        for i in 0..n {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if x > p.x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn on_track(&self, p: Vec2) -> bool {
        Self::inside_polygon(&self.polygons[0], p) != Self::inside_polygon(&self.polygons[1], p)
    }

    /// Lower bound on the distance from `p` to any boundary edge.
    fn clearance(&self, p: Vec2) -> f64 {
        let c = ((p.x - self.origin.x) / CELL).floor();
        let r = ((p.y - self.origin.y) / CELL).floor();
        let mut best = CELL;
        for dr in -1..=1 {
            for dc in -1..=1 {
                let (rr, cc) = (r + dr as f64, c + dc as f64);
                if rr < 0.0 || cc < 0.0 || rr >= self.rows as f64 || cc >= self.cols as f64 {
                    continue;
                }
                for &k in &self.cells[rr as usize * self.cols + cc as usize] {
                    let (a, b) = self.edges[k];
                    let ab = b - a;
                    let t = ((p - a).dot(ab) / ab.dot(ab)).clamp(0.0, 1.0);
                    best = best.min((p - (a + ab * t)).length());
                }
            }
        }
        best
    }

    /// Distance to the first off-track sample, less half a step, or `cap`
    /// when every sample up to `cap` is on the track.
    pub fn range(&self, origin: Vec2, heading: f64, cap: f64) -> f64 {
        let dir = Vec2::from_angle(heading);
        let last = (cap / MARCH_STEP).round() as u64;
        let mut k = 0u64;
        while k < last {
            let p = origin + dir * (k as f64 * MARCH_STEP);
            let skip = (self.clearance(p) / MARCH_STEP).floor() as u64;
            if skip >= 1 {
                k += skip;
                continue;
            }
            k += 1;
            let q = origin + dir * (k as f64 * MARCH_STEP);
            if k <= last && !self.on_track(q) {
                return (k as f64 - 0.5) * MARCH_STEP;
            }
        }
        cap
    }
}
