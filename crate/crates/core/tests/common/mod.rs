#![allow(dead_code)]

use d2d_eegame::net_model::{Gains, NetworkInstance, PowerProfile, UeParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn ue(p_max: f64, r_min: f64, p_cir: f64, eta: f64) -> UeParams {
    UeParams::new(p_max, r_min, p_cir, eta).unwrap()
}

fn gain(rng: &mut ChaCha8Rng) -> f64 {
    10f64.powf(rng.random_range(-8.0..-3.0))
}

/// Fully coupled instance with log-uniform gains and no rate floors.
pub fn random_instance(seed: u64, n: usize, k: usize) -> NetworkInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gains = Gains {
        d2d: (0..n).map(|_| (0..k).map(|_| gain(&mut rng)).collect()).collect(),
        cell: (0..k).map(|_| gain(&mut rng)).collect(),
        cell_to_d2d: (0..k).map(|_| (0..n).map(|_| gain(&mut rng)).collect()).collect(),
        d2d_cross: (0..n)
            .map(|j| (0..n).map(|i| (0..k).map(|_| if i == j { 0.0 } else { gain(&mut rng) }).collect()).collect())
            .collect(),
        d2d_to_bs: (0..n).map(|_| (0..k).map(|_| gain(&mut rng)).collect()).collect(),
    };
    let p = ue(0.2, 0.0, 0.01, 0.35);
    NetworkInstance::new(gains, 1e-9, vec![p; n], vec![p; k]).unwrap()
}

/// Powers uniform in the per-device budgets.
pub fn random_profile(inst: &NetworkInstance, seed: u64) -> PowerProfile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let k = inst.n_cell();
    PowerProfile {
        d2d: inst
            .ue_d2d()
            .iter()
            .map(|p| {
                let w: Vec<f64> = (0..k).map(|_| rng.random_range(1e-3..1.0)).collect();
                let scale = p.p_max * rng.random_range(0.0..1.0) / w.iter().sum::<f64>();
                w.iter().map(|x| x * scale).collect()
            })
            .collect(),
        cell: inst.ue_cell().iter().map(|p| rng.random_range(0.0..p.p_max)).collect(),
    }
}

/// Instance with every cross gain zero.
pub fn decoupled_instance(seed: u64, n: usize, k: usize) -> NetworkInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Gains::decoupled(n, k);
    for row in g.d2d.iter_mut() {
        for v in row.iter_mut() {
            *v = gain(&mut rng);
        }
    }
    for v in g.cell.iter_mut() {
        *v = gain(&mut rng);
    }
    let p = ue(0.2, 0.0, 0.01, 0.35);
    NetworkInstance::new(g, 1e-9, vec![p; n], vec![p; k]).unwrap()
}
