#![allow(dead_code)]

use std::sync::Arc;

use occflow::occupation::{
    make_grid, occupation_from_path, shuffle_path, Clock, DiscreteOccupation, OccupationIntegrand,
    SampledPath, TimePermutation,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random path with dyadic step and levels on a 1/64 lattice, so every
/// accumulated sum below is exact in floating point.
pub struct Instance {
    pub dt: f64,
    pub n_blocks: usize,
    pub levels: Vec<f64>,
    pub vols: Vec<f64>,
    pub perm: TimePermutation,
    pub split: usize,
    pub bin_values: Vec<f64>,
    pub grid: Arc<occflow::occupation::CorridorGrid>,
}

pub fn instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dt = 0.5f64.powi(rng.random_range(2..9));
    let n_blocks = rng.random_range(1..9);
    let block = rng.random_range(1..17);
    let n = n_blocks * block;
    let mut x = rng.random_range(-128i64..=128) as f64 / 64.0;
    let mut levels = vec![x];
    for _ in 0..n {
        x += rng.random_range(-16i64..=16) as f64 / 64.0;
        levels.push(x);
    }
    let vols = (0..n).map(|_| [0.5, 1.0, 1.5, 2.0][rng.random_range(0..4)]).collect();
    let mut order: Vec<usize> = (0..n_blocks).collect();
    order.shuffle(&mut rng);
    let signs = (0..n_blocks).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect();
    let n_bins = 2 * rng.random_range(0..40) + 1;
    let grid = Arc::new(make_grid(0.0, rng.random_range(1.0..8.0), n_bins).unwrap());
    let bin_values = (0..n_bins).map(|_| rng.random_range(-3i64..=3) as f64).collect();
    Instance {
        dt,
        n_blocks,
        levels,
        vols,
        perm: TimePermutation::new(order, signs).unwrap(),
        split: rng.random_range(0..=n),
        bin_values,
        grid,
    }
}

fn same(a: &DiscreteOccupation, b: &DiscreteOccupation) -> bool {
    a.masses() == b.masses() && a.total_mass() == b.total_mass() && a.first_moment() == b.first_moment()
}

/// Checks mass conservation, time additivity, the occupation time formula on
/// bin step functions and invariance under block permutations. Returns the
/// first violated property.
pub fn check_instance(seed: u64) -> Result<(), String> {
    let inst = instance(seed);
    let n = inst.levels.len() - 1;
    let path = SampledPath::uniform(inst.dt, inst.levels.clone()).unwrap();
    let cal = occupation_from_path(&path, Clock::Calendar, inst.grid.clone(), None).unwrap();

    // mass conservation, calendar and quadratic clocks
    if cal.total_mass() != n as f64 * inst.dt || cal.masses().iter().sum::<f64>() != cal.total_mass() {
        return Err(format!("seed {seed}: calendar mass {} != {}", cal.total_mass(), n as f64 * inst.dt));
    }
    let qv = occupation_from_path(&path, Clock::QuadraticVariation, inst.grid.clone(), Some(&inst.vols)).unwrap();
    let want: f64 = inst.vols.iter().map(|s| s * s * inst.dt).sum();
    if qv.total_mass() != want || qv.masses().iter().sum::<f64>() != want {
        return Err(format!("seed {seed}: quadratic mass {} != {want}", qv.total_mass()));
    }

    // time additivity: [0, t_k) then [t_k, t_N)
    let k = inst.split;
    let head = occupation_from_path(
        &SampledPath::uniform(inst.dt, inst.levels[..=k].to_vec()).unwrap(),
        Clock::Calendar,
        inst.grid.clone(),
        None,
    )
    .unwrap();
    let tail = occupation_from_path(
        &SampledPath::uniform(inst.dt, inst.levels[k..].to_vec()).unwrap(),
        Clock::Calendar,
        inst.grid.clone(),
        None,
    )
    .unwrap();
    let mut joined = head.clone();
    joined.add(&tail).unwrap();
    if !same(&joined, &cal) || joined.range() != cal.range() {
        return Err(format!("seed {seed}: additivity fails at split {k}"));
    }

    // occupation time formula for f constant on bins
    let f = |x: f64| inst.bin_values[inst.grid.bin_index(x)];
    let direct: f64 = inst.levels[..n].iter().map(|x| f(*x) * inst.dt).sum();
    if cal.integral(OccupationIntegrand::Function(&f)) != direct {
        return Err(format!("seed {seed}: occupation time formula mismatch"));
    }

    // chronology: block permutations and reversals keep the calendar occupation
    let steps = &inst.levels[..n];
    let shuffled = shuffle_path(steps, &inst.perm).unwrap();
    let mut levels = shuffled.clone();
    levels.push(inst.levels[n]);
    let perm_occ =
        occupation_from_path(&SampledPath::uniform(inst.dt, levels).unwrap(), Clock::Calendar, inst.grid.clone(), None)
            .unwrap();
    if !same(&perm_occ, &cal) {
        return Err(format!("seed {seed}: permutation {:?} changes the occupation", inst.perm));
    }
    if shuffle_path(&shuffled, &inst.perm.inverse()).unwrap() != steps {
        return Err(format!("seed {seed}: inverse permutation does not restore the path"));
    }
    Ok(())
}
