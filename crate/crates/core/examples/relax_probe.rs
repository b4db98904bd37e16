use cmap_core::geometry::{DomainSpec, Point};
use cmap_core::harmonic::{annulus_solution, HarmonicField};
use cmap_core::relax::{relax_round, RelaxConfig, RelaxState};
use cmap_core::localsolve::{LocalSolution, NeighborhoodConfig};
use cmap_core::layout::build_layout;
use cmap_core::geometry::PuncturedDomain;

fn main() {
    let bits = 3u32;
    let g = DomainSpec::disc(Point::ZERO, 0.6, 0.0).unwrap();
    let cfg = RelaxConfig::for_bits(bits);
    let nbs = LocalSolution::build(&g, bits, NeighborhoodConfig::default()).unwrap();
    let pd = PuncturedDomain::new(g.clone(), Point::ZERO, bits).unwrap();
    let layout = build_layout(&g, &nbs, &pd, bits).unwrap();
    let mut state = RelaxState::initialize(layout, nbs, pd, bits, &cfg).unwrap();
    let eps = state.pdomain.inner_radius;
    let radii = [0.0625f64, 0.1, 0.2, 0.35, 0.45, 0.55];
    println!("exact:    {:?}", radii.map(|r| (annulus_solution(Point::ZERO, eps, 0.6, Point::new(r,0.0)).unwrap()*1000.0).round()/1000.0));
    let t0 = std::time::Instant::now();
    for round in 0..=120 {
        if round % 10 == 0 {
            let vals = radii.map(|r| (state.field.eval(Point::new(r, 0.001))*1000.0).round()/1000.0);
            println!("round {round:4}: {vals:?}  ({:?})", t0.elapsed());
        }
        state = relax_round(&state, &cfg).unwrap();
    }
}
