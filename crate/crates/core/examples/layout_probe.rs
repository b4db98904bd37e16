use cmap_core::geometry::{DomainSpec, Point, PuncturedDomain};
use cmap_core::localsolve::{LocalSolution, NeighborhoodConfig};
use cmap_core::layout::build_layout;
use std::time::Instant;

fn main() {
    for (name, g) in [
        ("disc", DomainSpec::disc(Point::ZERO, 0.6, 0.0).unwrap()),
        ("square", DomainSpec::square(0.55, 0.0).unwrap()),
    ] {
        for bits in [2u32, 4, 6] {
            let t = Instant::now();
            let nbs = LocalSolution::build(&g, bits, NeighborhoodConfig::default()).unwrap();
            let pd = PuncturedDomain::new(g.clone(), Point::ZERO, bits).unwrap();
            let layout = build_layout(&g, &nbs, &pd, bits).unwrap();
            println!(
                "{name} n={bits}: cores={} regions={} balls={} layout={} greedy={} ({:?})",
                nbs.neighborhoods.len(),
                nbs.regions.len(),
                nbs.regions.iter().map(|r| r.covering.balls.len()).sum::<usize>(),
                layout.size(),
                layout.greedy_len,
                t.elapsed()
            );
        }
    }
}
