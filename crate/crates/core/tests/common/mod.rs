#![allow(dead_code)]

use rand::Rng;
use vortex_pair::functionals::objective;
use vortex_pair::kernel::{KernelEvaluator, KernelMode};
use vortex_pair::{FieldKind, Grid, ScalarField};

/// All distinct permutations of `values` (lexicographic order).
pub fn distinct_permutations(values: &[f64]) -> Vec<Vec<f64>> {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mut out = vec![v.clone()];
    loop {
        let n = v.len();
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| v[i] < v[i + 1]) else {
            return out;
        };
        let j = (i + 1..n).rev().find(|&j| v[j] > v[i]).unwrap();
        v.swap(i, j);
        v[i + 1..].reverse();
        out.push(v.clone());
    }
}

/// Brute-force maximum of `E - qI` over every distinct assignment of `values`.
pub fn brute_force_max(grid: Grid, values: &[f64], q: f64) -> f64 {
    let k = KernelEvaluator::new(grid, KernelMode::Direct).unwrap();
    distinct_permutations(values)
        .into_iter()
        .map(|p| objective(&k, &ScalarField::new(grid, p, FieldKind::Vorticity).unwrap(), q).unwrap())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// A grid with at most `max_cells` cells and a value list with at most three
/// distinct values (zero included), at least one of them positive.
pub fn random_instance(rng: &mut impl Rng, max_cells: usize) -> (Grid, Vec<f64>) {
    loop {
        let nx = 2 * rng.gen_range(1..=max_cells / 2);
        let ny = rng.gen_range(1..=max_cells / nx);
        let h = rng.gen_range(0.05..0.5);
        let g = Grid::half_plane_cells(nx, ny, h).unwrap();
        let levels = [0.0, rng.gen_range(0.5..2.0), rng.gen_range(2.0..4.0)];
        let distinct = rng.gen_range(2..=3);
        let vals: Vec<f64> = (0..g.len()).map(|_| levels[rng.gen_range(0..distinct)]).collect();
        if vals.iter().any(|v| *v > 0.0) {
            return (g, vals);
        }
    }
}
